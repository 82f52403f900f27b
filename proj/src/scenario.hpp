// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "pc.hpp"
#include "rng.hpp"

namespace rangebound {

enum class RemovalMode { CorrelatedTop, Random };

// A missing-data experiment instance: which rows of the full dataset are
// hidden from the estimators.
struct Scenario {
  Relation full;
  std::vector<size_t> missing_index;  // sorted row indices
  double missing_fraction = 0;
  RemovalMode mode = RemovalMode::Random;
  uint64_t seed = 0;

  Relation missing_rows() const;
  Relation certain_rows() const;
};

Scenario make_scenario(Relation full, const std::string& agg_attr, double fraction,
                       RemovalMode mode, uint64_t seed);

// Equi-cardinality grid over the chosen numeric attributes: quantile cuts per
// attribute, buckets tile the attribute domains, each bucket becomes one
// constraint with the exact value range and count of its rows. Closed over
// the domain by construction and truthful for the given rows.
PCSet gen_corr_pc(const Relation& missing, const std::vector<std::string>& partition_attrs,
                  const std::string& agg_attr, size_t n);

// n random overlapping boxes over the chosen attributes plus one enclosing
// TRUE constraint; value ranges and counts computed truthfully.
PCSet gen_rand_pc(const Relation& missing, const std::vector<std::string>& attrs,
                  const std::string& agg_attr, size_t n, uint64_t seed);

// Perturb every value-constraint endpoint with seeded Gaussian noise scaled
// by sigma times the attribute range; clamped to the domain, swapped when
// inverted. sigma = 0 returns the set unchanged.
PCSet inject_noise(const PCSet& set, double sigma, uint64_t seed);

// The shipped synthetic table: `ts` (a month of seconds), `device` (integer
// id), `branch` (categorical), `value` (skewed log-normal, clamped).
Relation make_synthetic_dataset(size_t rows, uint64_t seed);

}  // namespace rangebound
