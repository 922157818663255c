#include "uplift/tree.hpp"

#include <cmath>
#include <deque>
#include <numeric>

namespace uplift {

void GrowthParams::validate(int d) const {
  if (min_split < 1) throw ConfigError("min_split must be a positive integer");
  if (!(n_reg >= 0.0) || !std::isfinite(n_reg)) throw ConfigError("n_reg must be >= 0");
  if (!(alpha > 0.0 && alpha < 0.5)) throw ConfigError("alpha must lie in (0, 0.5)");
  if (mtry < 1 || mtry > d) {
    throw ConfigError("mtry must lie in [1, " + std::to_string(d) + "]");
  }
  if (!(pi > 0.0 && pi < 1.0)) throw ConfigError("pi must lie in (0, 1)");
}

int UpliftTree::leaf_index(FeatureRow x) const {
  int id = 0;
  while (!nodes_[id].is_leaf()) {
    const TreeNode& n = nodes_[id];
    id = n.rule.goes_left(x) ? n.left : n.right;
  }
  return id;
}

int UpliftTree::leaf_count() const {
  return static_cast<int>(std::count_if(nodes_.begin(), nodes_.end(),
                                        [](const TreeNode& n) { return n.is_leaf(); }));
}

int UpliftTree::max_depth() const {
  int depth = 0;
  for (const TreeNode& n : nodes_) depth = std::max(depth, n.depth);
  return depth;
}

CoordinateDraw draw_coordinates(int d, int mtry, double pi, Rng& rng) {
  CoordinateDraw draw;
  std::bernoulli_distribution single(pi);
  draw.single = single(rng);
  if (draw.single) {
    std::uniform_int_distribution<int> pick(0, d - 1);
    draw.coordinates.push_back(pick(rng));
    return draw;
  }
  std::vector<int> all(d);
  std::iota(all.begin(), all.end(), 0);
  for (int k = 0; k < mtry; ++k) {
    std::uniform_int_distribution<int> pick(k, d - 1);
    std::swap(all[k], all[pick(rng)]);
  }
  draw.coordinates.assign(all.begin(), all.begin() + mtry);
  std::sort(draw.coordinates.begin(), draw.coordinates.end());
  return draw;
}

UpliftTree grow_tree(const Dataset& data, std::span<const Index> approx,
                     const GrowthParams& params, Rng& rng) {
  params.validate(data.d());
  const SplitParams split = params.split_params();
  UpliftTree tree(data.n_arms());
  auto& nodes = tree.nodes();

  struct Pending {
    int id;
    NodeStats stats;
  };
  std::deque<Pending> queue;
  auto add_node = [&](int parent, int depth, NodeStats stats) {
    TreeNode node;
    node.parent = parent;
    node.depth = depth;
    node.approx_counts = stats.counts;
    node.approx_estimates = stats.estimates;
    node.honest_estimates = stats.estimates;
    nodes.push_back(std::move(node));
    const int id = static_cast<int>(nodes.size()) - 1;
    queue.push_back({id, std::move(stats)});
    return id;
  };
  add_node(-1, 0, root_stats(data, {approx.begin(), approx.end()}));

  while (!queue.empty()) {
    Pending current = std::move(queue.front());
    queue.pop_front();
    const int id = current.id;
    if ((current.stats.counts.array() < params.min_split).all()) {
      nodes[id].leaf_reason = LeafReason::kTerminal;
      continue;
    }
    const CoordinateDraw draw = draw_coordinates(data.d(), params.mtry, params.pi, rng);
    auto best = best_split(data, current.stats, draw.coordinates, split);
    if (!best) {
      nodes[id].leaf_reason = LeafReason::kNoRegularSplit;
      continue;
    }
    nodes[id].rule = best->candidate.rule;
    nodes[id].leaf_reason = LeafReason::kInternal;
    const int depth = nodes[id].depth + 1;
    const int left = add_node(id, depth, std::move(best->left));
    const int right = add_node(id, depth, std::move(best->right));
    nodes[id].left = left;
    nodes[id].right = right;
  }
  return tree;
}

void honest_estimate(UpliftTree& tree, const Dataset& data,
                     std::span<const Index> estimation) {
  auto& nodes = tree.nodes();
  const int k = tree.n_arms();
  Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(k, static_cast<Index>(nodes.size()));
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, static_cast<Index>(nodes.size()));
  for (Index i : estimation) {
    const int t = data.treatment(i);
    const double y = data.response(i);
    const auto x = data.row(i);
    int id = 0;
    for (;;) {
      ++counts(t, id);
      sums(t, id) += y;
      const TreeNode& n = nodes[id];
      if (n.is_leaf()) break;
      id = n.rule.goes_left(x) ? n.left : n.right;
    }
  }
  for (int t = 0; t < k; ++t) {
    if (counts(t, 0) == 0) {
      throw DataError("estimation set has no samples of treatment " +
                      data.arm_labels()[t]);
    }
  }
  for (std::size_t id = 0; id < nodes.size(); ++id) {
    TreeNode& n = nodes[id];
    n.honest_estimates.resize(k);
    for (int t = 0; t < k; ++t) {
      const int c = counts(t, static_cast<Index>(id));
      n.honest_estimates[t] = c > 0 ? sums(t, static_cast<Index>(id)) / c
                                    : nodes[n.parent].honest_estimates[t];
    }
  }
}

double predict_tree(const UpliftTree& tree, FeatureRow x, int arm) {
  if (arm < 0 || arm >= tree.n_arms()) throw std::out_of_range("arm out of range");
  return tree.leaf_estimates(x)[arm];
}

std::uint64_t structure_hash(const UpliftTree& tree) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](const void* p, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const TreeNode& n : tree.nodes()) {
    mix(&n.left, sizeof n.left);
    mix(&n.right, sizeof n.right);
    if (!n.is_leaf()) {
      mix(&n.rule.coordinate, sizeof n.rule.coordinate);
      mix(&n.rule.kind, sizeof n.rule.kind);
      mix(&n.rule.threshold, sizeof n.rule.threshold);
      mix(&n.rule.left_levels, sizeof n.rule.left_levels);
    }
  }
  return h;
}

namespace {

AuditResult fail(int id, const std::string& what) {
  return {false, "node " + std::to_string(id) + ": " + what};
}

AuditResult audit_counts(const UpliftTree& tree, const GrowthParams& params,
                         const Eigen::MatrixXi& counts) {
  const auto& nodes = tree.nodes();
  for (std::size_t s = 0; s < nodes.size(); ++s) {
    const int id = static_cast<int>(s);
    const TreeNode& n = nodes[s];
    const Index m = counts.col(id).sum();
    const bool any_splittable = (counts.col(id).array() >= params.min_split).any();
    if (m < 1) return fail(id, "no approximation samples");
    if (n.is_leaf()) {
      if (n.leaf_reason == LeafReason::kTerminal && any_splittable) {
        return fail(id, "terminal leaf with an arm at or above min_split");
      }
      if (n.leaf_reason == LeafReason::kNoRegularSplit && !any_splittable) {
        return fail(id, "leaf marked unsplittable but termination rule applies");
      }
      if (n.leaf_reason == LeafReason::kInternal) return fail(id, "leaf marked internal");
      continue;
    }
    if (!any_splittable) return fail(id, "split although every arm is below min_split");
    if (n.right < 0 || nodes[n.left].parent != id || nodes[n.right].parent != id) {
      return fail(id, "malformed children");
    }
    const Index side = min_side_count(params.alpha, m);
    const Index l = counts.col(n.left).sum();
    const Index r = counts.col(n.right).sum();
    if (l + r != m) return fail(id, "children do not partition the node");
    if (l < side || r < side) {
      return fail(id, "split " + std::to_string(l) + "/" + std::to_string(r) +
                          " violates alpha-regularity (need " +
                          std::to_string(side) + ")");
    }
  }
  return {};
}

}  // namespace

AuditResult audit_regularity(const UpliftTree& tree, const GrowthParams& params) {
  const auto& nodes = tree.nodes();
  Eigen::MatrixXi counts(tree.n_arms(), static_cast<Index>(nodes.size()));
  for (std::size_t id = 0; id < nodes.size(); ++id) {
    counts.col(static_cast<Index>(id)) = nodes[id].approx_counts;
  }
  return audit_counts(tree, params, counts);
}

AuditResult audit_regularity(const UpliftTree& tree, const GrowthParams& params,
                             const Dataset& data, std::span<const Index> approx) {
  const auto& nodes = tree.nodes();
  Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(tree.n_arms(), static_cast<Index>(nodes.size()));
  for (Index i : approx) {
    const auto x = data.row(i);
    int id = 0;
    for (;;) {
      ++counts(data.treatment(i), id);
      if (nodes[id].is_leaf()) break;
      id = nodes[id].rule.goes_left(x) ? nodes[id].left : nodes[id].right;
    }
  }
  for (std::size_t id = 0; id < nodes.size(); ++id) {
    if (counts.col(static_cast<Index>(id)) != nodes[id].approx_counts) {
      return fail(static_cast<int>(id), "stored counts differ from routed counts");
    }
  }
  return audit_counts(tree, params, counts);
}

}  // namespace uplift
