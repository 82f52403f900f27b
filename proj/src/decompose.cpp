// SPDX-License-Identifier: Apache-2.0
#include "decompose.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>

namespace rangebound {

namespace {

// Beyond this many unverified trailing constraints, early stopping emits the
// reduced cell family (one cell per surviving prefix plus the extensions
// needed by positive frequency lower bounds) instead of all sign extensions.
// The reduction leaves every downstream bound unchanged: an extension cell is
// dominated by the cell that drops its extra IN positions whenever those
// positions carry no lower bound.
constexpr int kFullExpansionLimit = 10;

struct DfsContext {
  const PCSet& set;
  const Schema& schema;
  const DecomposeOptions& opts;
  const std::vector<Box>& psi_boxes;
  std::optional<Box> clip_box;
  int verify_depth = 0;  // prefixes up to this length are checked
  size_t n = 0;

  std::vector<Cell> cells;
  DecompositionStats stats;

  void merge(DfsContext&& o) {
    cells.insert(cells.end(), std::make_move_iterator(o.cells.begin()),
                 std::make_move_iterator(o.cells.end()));
    stats.sat_calls += o.stats.sat_calls;
    stats.pruned_subtrees += o.stats.pruned_subtrees;
    stats.rewriting_hits += o.stats.rewriting_hits;
  }
};

struct Node {
  Box box;                    // intersection of domain, clip (inside mode), IN psis
  std::vector<size_t> outs;   // indices of OUT constraints so far
  uint64_t in_mask = 0;
  bool verified = true;
};

bool check_node(DfsContext& ctx, const Node& node, Tuple* witness) {
  ++ctx.stats.sat_calls;
  std::vector<Box> negs;
  negs.reserve(node.outs.size() + 1);
  for (size_t j : node.outs) negs.push_back(ctx.psi_boxes[j]);
  if (ctx.opts.outside && ctx.clip_box) negs.push_back(*ctx.clip_box);
  return box_satisfiable(ctx.schema, node.box, negs, witness);
}

void emit_leaf(DfsContext& ctx, const Node& node, Tuple witnessable) {
  if (node.in_mask == 0) return;  // covered by nothing: admits no missing rows
  Cell c;
  c.in_mask = node.in_mask;
  c.verified = node.verified;
  c.inside_clip = !ctx.opts.outside;
  if (node.verified && !witnessable.values.empty()) c.witness = std::move(witnessable);
  ctx.cells.push_back(std::move(c));
}

// Emit all sign extensions of a surviving prefix without further checking.
void emit_extensions(DfsContext& ctx, const Node& node, size_t depth) {
  if (depth == ctx.n) {
    Node leaf = node;
    leaf.verified = false;
    emit_leaf(ctx, leaf, {});
    return;
  }
  Node in = node;
  in.in_mask |= 1ULL << depth;
  in.verified = false;
  emit_extensions(ctx, in, depth + 1);
  Node out = node;
  out.verified = false;
  emit_extensions(ctx, out, depth + 1);
}

// Emit the reduced family for a surviving prefix: extensions restricted to
// constraints that carry a positive lower frequency bound.
void emit_reduced(DfsContext& ctx, const Node& node, size_t depth) {
  std::vector<size_t> late_forced;
  for (size_t j = depth; j < ctx.n; ++j)
    if (ctx.set.at(j).kappa.kl > 0) late_forced.push_back(j);
  if (late_forced.size() > 16)
    throw ConfigError("early-stop depth too shallow: too many forced constraints below it");
  size_t combos = 1ULL << late_forced.size();
  for (size_t s = 0; s < combos; ++s) {
    Node leaf = node;
    leaf.verified = false;
    for (size_t b = 0; b < late_forced.size(); ++b)
      if ((s >> b) & 1ULL) leaf.in_mask |= 1ULL << late_forced[b];
    emit_leaf(ctx, leaf, {});
  }
}

void dfs(DfsContext& ctx, Node& node, size_t depth) {
  if (depth == ctx.n) {
    emit_leaf(ctx, node, {});
    return;
  }
  if (static_cast<int>(depth) >= ctx.verify_depth) {
    if (ctx.n - depth > kFullExpansionLimit)
      emit_reduced(ctx, node, depth);
    else
      emit_extensions(ctx, node, depth);
    return;
  }

  // IN branch: conjoin psi_depth into the box.
  Node in;
  in.in_mask = node.in_mask | (1ULL << depth);
  in.outs = node.outs;
  in.box = node.box;
  bool in_nonempty = true;
  for (size_t i = 0; i < ctx.schema.size(); ++i) {
    if (auto* iv = std::get_if<Interval>(&in.box.atoms[i])) {
      *iv = Interval::intersect(*iv, ctx.psi_boxes[depth].interval(i));
      if (iv->empty()) in_nonempty = false;
    } else {
      auto& cs = std::get<CatSet>(in.box.atoms[i]);
      cs = CatSet::intersect(cs, ctx.psi_boxes[depth].catset(i));
      if (cs.values.empty()) in_nonempty = false;
    }
  }
  bool in_sat = false;
  Tuple in_witness;
  if (in_nonempty) {
    in_sat = check_node(ctx, in, &in_witness);
  } else {
    ++ctx.stats.sat_calls;  // the emptiness test itself decides satisfiability
  }
  if (in_sat) {
    if (static_cast<int>(depth + 1) == static_cast<int>(ctx.n))
      emit_leaf(ctx, in, std::move(in_witness));
    else
      dfs(ctx, in, depth + 1);
  } else {
    ++ctx.stats.pruned_subtrees;
  }

  // OUT branch: same box, one more negative.
  Node out;
  out.in_mask = node.in_mask;
  out.box = node.box;
  out.outs = node.outs;
  out.outs.push_back(depth);
  bool out_sat;
  Tuple out_witness;
  if (!in_sat) {
    // X satisfiable and X AND psi unsatisfiable imply X AND NOT psi
    // satisfiable; no call needed.
    ++ctx.stats.rewriting_hits;
    out_sat = true;
  } else {
    out_sat = check_node(ctx, out, &out_witness);
  }
  if (out_sat) {
    if (depth + 1 == ctx.n)
      emit_leaf(ctx, out, std::move(out_witness));
    else
      dfs(ctx, out, depth + 1);
  } else {
    ++ctx.stats.pruned_subtrees;
  }
}

std::optional<Box> make_clip_box(const Schema& schema, const DecomposeOptions& opts) {
  if (!opts.clip) return std::nullopt;
  return resolve_box(schema, *opts.clip);
}

Box domain_box(const Schema& schema) {
  Box box;
  box.atoms.reserve(schema.size());
  for (size_t i = 0; i < schema.size(); ++i) {
    const auto& dom = schema.at(i);
    if (dom.kind == AttrKind::Numeric)
      box.atoms.emplace_back(Interval::closed(dom.lo, dom.hi));
    else
      box.atoms.emplace_back(CatSet{dom.values});
  }
  return box;
}

}  // namespace

void reconcile(Cell& cell, const PCSet& set, const DecomposeOptions& opts,
               DecompositionStats* stats) {
  const Schema& schema = set.schema();
  cell.value_lower.assign(schema.size(), -kInf);
  cell.value_upper.assign(schema.size(), kInf);
  for (size_t i = 0; i < schema.size(); ++i) {
    if (schema.at(i).kind != AttrKind::Numeric) continue;
    double lo = schema.at(i).lo, hi = schema.at(i).hi;
    for (size_t j = 0; j < set.size(); ++j) {
      if (!cell.covers(j)) continue;
      auto [l, h] = value_range(schema, set.at(j), i);
      lo = std::max(lo, l);
      hi = std::min(hi, h);
      // Rows in the cell also sit inside the covering predicates' own ranges;
      // take the closed hull of those atoms.
      auto it = set.at(j).psi.atoms.find(schema.at(i).name);
      if (it != set.at(j).psi.atoms.end()) {
        if (const Interval* iv = std::get_if<Interval>(&it->second)) {
          if (std::isfinite(iv->lo)) lo = std::max(lo, iv->lo);
          if (std::isfinite(iv->hi)) hi = std::min(hi, iv->hi);
        }
      }
    }
    cell.value_lower[i] = lo;
    cell.value_upper[i] = hi;
    if (lo > hi) cell.forced_zero = true;
  }
  if (cell.forced_zero || !cell.verified) return;

  // The value box may carve the region further than the per-attribute test
  // sees; rows must satisfy the covering value constraints *and* sit in the
  // cell region, so re-check satisfiability with the value box conjoined.
  Box box = domain_box(schema);
  bool narrows = false;
  for (size_t i = 0; i < schema.size(); ++i) {
    if (schema.at(i).kind != AttrKind::Numeric) continue;
    auto* iv = std::get_if<Interval>(&box.atoms[i]);
    Interval vb = Interval::closed(cell.value_lower[i], cell.value_upper[i]);
    Interval m = Interval::intersect(*iv, vb);
    if (!(m == *iv)) narrows = true;
    *iv = m;
  }
  for (size_t j = 0; j < set.size(); ++j)
    if (cell.covers(j) && !intersect_box(schema, box, set.at(j).psi)) {
      cell.forced_zero = true;
      return;
    }
  if (!opts.outside && opts.clip && !intersect_box(schema, box, *opts.clip)) {
    cell.forced_zero = true;
    return;
  }
  if (!narrows) return;  // value box adds nothing; the region check already passed

  std::vector<Box> negs;
  for (size_t j = 0; j < set.size(); ++j)
    if (!cell.covers(j)) negs.push_back(resolve_box(schema, set.at(j).psi));
  if (opts.outside && opts.clip) negs.push_back(resolve_box(schema, *opts.clip));
  if (stats) ++stats->sat_calls;
  Tuple w;
  if (box_satisfiable(schema, box, negs, &w))
    cell.witness = std::move(w);
  else
    cell.forced_zero = true;
}

DecompositionResult decompose(const PCSet& set, const DecomposeOptions& opts) {
  const Schema& schema = set.schema();
  size_t n = set.size();
  if (n > 64) throw ConfigError("decomposition supports at most 64 constraints");

  DfsContext ctx{set, schema, opts, set.psi_boxes(), {}, 0, n, {}, {}};
  ctx.clip_box = make_clip_box(schema, opts);
  ctx.verify_depth = opts.early_stop_depth ? std::min<int>(*opts.early_stop_depth, (int)n)
                                           : static_cast<int>(n);
  ctx.stats.depth_limit = opts.early_stop_depth;
  ctx.stats.early_stopped =
      opts.early_stop_depth.has_value() && *opts.early_stop_depth < static_cast<int>(n);

  // Disjoint predicates decompose trivially: each constraint is its own cell.
  if (set.predicates_pairwise_disjoint()) {
    ctx.stats.disjoint_fast_path = true;
    ctx.stats.early_stopped = false;
    for (size_t j = 0; j < n; ++j) {
      Node node;
      node.box = ctx.psi_boxes[j];
      if (!opts.outside && ctx.clip_box) {
        bool nonempty = true;
        for (size_t i = 0; i < schema.size(); ++i) {
          if (auto* iv = std::get_if<Interval>(&node.box.atoms[i])) {
            *iv = Interval::intersect(*iv, ctx.clip_box->interval(i));
            if (iv->empty()) nonempty = false;
          } else {
            auto& cs = std::get<CatSet>(node.box.atoms[i]);
            cs = CatSet::intersect(cs, ctx.clip_box->catset(i));
            if (cs.values.empty()) nonempty = false;
          }
        }
        if (!nonempty) {
          ++ctx.stats.sat_calls;
          continue;
        }
      }
      node.in_mask = 1ULL << j;
      Tuple w;
      ++ctx.stats.sat_calls;
      std::vector<Box> negs;
      if (opts.outside && ctx.clip_box) negs.push_back(*ctx.clip_box);
      if (box_satisfiable(schema, node.box, negs, &w)) emit_leaf(ctx, node, std::move(w));
    }
  } else {
    Node root;
    root.box = domain_box(schema);
    bool root_nonempty = true;
    if (!opts.outside && opts.clip)
      root_nonempty = intersect_box(schema, root.box, *opts.clip);
    if (root_nonempty) {
      int par = std::max(1, opts.parallelism);
      if (par > 1 && n >= 4 && ctx.verify_depth >= 2) {
        // Expand two levels sequentially, then solve the surviving subtrees
        // concurrently. Statistics are subtree-local, so totals do not depend
        // on the schedule.
        std::vector<Node> frontier;
        DfsContext top{set, schema, opts, ctx.psi_boxes, ctx.clip_box,
                       ctx.verify_depth, n, {}, {}};
        std::function<void(Node&, size_t)> expand = [&](Node& node, size_t depth) {
          if (depth == 2) {
            frontier.push_back(node);
            return;
          }
          Node in;
          in.in_mask = node.in_mask | (1ULL << depth);
          in.outs = node.outs;
          in.box = node.box;
          bool nonempty = intersect_box(schema, in.box, set.at(depth).psi);
          bool in_sat = false;
          Tuple w;
          if (nonempty)
            in_sat = check_node(top, in, &w);
          else
            ++top.stats.sat_calls;
          if (in_sat)
            expand(in, depth + 1);
          else
            ++top.stats.pruned_subtrees;
          Node out;
          out.in_mask = node.in_mask;
          out.box = node.box;
          out.outs = node.outs;
          out.outs.push_back(depth);
          bool out_sat;
          if (!in_sat) {
            ++top.stats.rewriting_hits;
            out_sat = true;
          } else {
            out_sat = check_node(top, out, &w);
          }
          if (out_sat)
            expand(out, depth + 1);
          else
            ++top.stats.pruned_subtrees;
        };
        expand(root, 0);
        std::vector<std::future<DfsContext>> futures;
        for (Node& f : frontier) {
          futures.push_back(std::async(std::launch::async, [&, node = f]() mutable {
            DfsContext sub{set, schema, opts, ctx.psi_boxes, ctx.clip_box,
                           ctx.verify_depth, n, {}, {}};
            dfs(sub, node, 2);
            return sub;
          }));
        }
        ctx.merge(std::move(top));
        for (auto& fut : futures) {
          DfsContext sub = fut.get();
          ctx.merge(std::move(sub));
        }
      } else {
        dfs(ctx, root, 0);
      }
    }
  }

  for (Cell& c : ctx.cells) reconcile(c, set, opts, &ctx.stats);

  // '+' sorts before '-', which reproduces the conventional enumeration
  // order: the all-IN cell first, signs flipping from the last constraint.
  std::sort(ctx.cells.begin(), ctx.cells.end(), [n](const Cell& a, const Cell& b) {
    return a.signature(n) < b.signature(n);
  });
  DecompositionResult out;
  out.cells = std::move(ctx.cells);
  out.stats = ctx.stats;
  return out;
}

}  // namespace rangebound
