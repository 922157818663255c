#include "uplift/baselines.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

namespace uplift {

UpliftForest train_cts(const Dataset& data, const ForestConfig& config, int threads) {
  return train_forest(data, config, Method::kCts, threads);
}

void RegressionForestParams::validate(int d) const {
  if (ntree < 1) throw ConfigError("rf ntree must be a positive integer");
  if (mtry < 0 || mtry > d) throw ConfigError("rf mtry must lie in [0, d]");
  if (min_leaf < 1) throw ConfigError("rf min_leaf must be a positive integer");
}

int RegressionTree::leaf_index(FeatureRow x) const {
  int id = 0;
  while (!nodes_[id].is_leaf()) {
    id = nodes_[id].rule.goes_left(x) ? nodes_[id].left : nodes_[id].right;
  }
  return id;
}

double RegressionTree::predict(FeatureRow x) const { return nodes_[leaf_index(x)].value; }

double RegressionForest::predict(FeatureRow x) const {
  double sum = 0.0;
  for (const RegressionTree& t : trees_) sum += t.predict(x);
  return sum / static_cast<double>(trees_.size());
}

namespace {

struct CartSplit {
  SplitRule rule;
  double improvement = 0.0;
};

// Best variance-reduction split of `rows` on coordinate j. Improvement is
// S_l^2/n_l + S_r^2/n_r - S^2/n, the drop in sum of squared deviations.
void search_coordinate(const Dataset& data, const std::vector<Index>& rows, int j,
                       int min_leaf, double total, std::optional<CartSplit>& best) {
  const Index n = static_cast<Index>(rows.size());
  const double base = total * total / static_cast<double>(n);
  auto offer = [&](const SplitRule& rule, double left_sum, Index left_n) {
    const double right_sum = total - left_sum;
    const Index right_n = n - left_n;
    const double improvement = left_sum * left_sum / static_cast<double>(left_n) +
                               right_sum * right_sum / static_cast<double>(right_n) - base;
    if (!best || improvement > best->improvement) best = CartSplit{rule, improvement};
  };

  const Column& col = data.schema().column(j);
  if (!col.categorical()) {
    std::vector<std::pair<double, double>> order;
    order.reserve(rows.size());
    for (Index i : rows) order.emplace_back(data.feature(i, j), data.response(i));
    std::sort(order.begin(), order.end());
    double left_sum = 0.0;
    for (Index pos = 0; pos + 1 < n; ++pos) {
      left_sum += order[pos].second;
      if (order[pos].first == order[pos + 1].first) continue;
      const Index left_n = pos + 1;
      if (left_n < min_leaf || n - left_n < min_leaf) continue;
      SplitRule rule;
      rule.coordinate = j;
      const double lo = order[pos].first, hi = order[pos + 1].first;
      const double mid = lo + (hi - lo) / 2.0;
      rule.threshold = mid < hi ? mid : lo;
      offer(rule, left_sum, left_n);
    }
    return;
  }

  const int card = col.cardinality();
  std::vector<Index> counts(card, 0);
  std::vector<double> sums(card, 0.0);
  for (Index i : rows) {
    const int level = static_cast<int>(data.feature(i, j));
    ++counts[level];
    sums[level] += data.response(i);
  }
  std::vector<int> levels;
  for (int k = 0; k < card; ++k) {
    if (counts[k] > 0) levels.push_back(k);
  }
  // Ordering levels by mean response makes prefix splits optimal for SSE.
  std::stable_sort(levels.begin(), levels.end(), [&](int a, int b) {
    return sums[a] / counts[a] < sums[b] / counts[b];
  });
  std::uint64_t mask = 0;
  double left_sum = 0.0;
  Index left_n = 0;
  for (std::size_t p = 0; p + 1 < levels.size(); ++p) {
    mask |= 1ULL << levels[p];
    left_sum += sums[levels[p]];
    left_n += counts[levels[p]];
    if (left_n < min_leaf || n - left_n < min_leaf) continue;
    SplitRule rule;
    rule.coordinate = j;
    rule.kind = SplitRule::Kind::kSubset;
    rule.left_levels = mask;
    offer(rule, left_sum, left_n);
  }
}

}  // namespace

RegressionTree grow_regression_tree(const Dataset& data, std::span<const Index> rows,
                                    const RegressionForestParams& params, Rng& rng) {
  const int d = data.d();
  const int mtry = params.effective_mtry(d);
  std::vector<RegressionNode> nodes;
  std::vector<std::vector<Index>> members;
  nodes.emplace_back();
  members.emplace_back(rows.begin(), rows.end());
  if (members[0].empty()) throw DataError("regression tree needs at least one row");

  std::vector<int> coords(d);
  for (std::size_t id = 0; id < nodes.size(); ++id) {
    std::vector<Index> own = std::move(members[id]);
    const Index n = static_cast<Index>(own.size());
    double total = 0.0;
    for (Index i : own) total += data.response(i);
    const double mean = total / static_cast<double>(n);
    double sse = 0.0;
    for (Index i : own) sse += (data.response(i) - mean) * (data.response(i) - mean);
    nodes[id].value = mean;
    nodes[id].count = n;
    if (n < 2 * static_cast<Index>(params.min_leaf) || sse <= 0.0) continue;

    std::iota(coords.begin(), coords.end(), 0);
    for (int k = 0; k < mtry; ++k) {
      std::uniform_int_distribution<int> pick(k, d - 1);
      std::swap(coords[k], coords[pick(rng)]);
    }
    std::sort(coords.begin(), coords.begin() + mtry);
    std::optional<CartSplit> best;
    for (int k = 0; k < mtry; ++k) {
      search_coordinate(data, own, coords[k], params.min_leaf, total, best);
    }
    if (!best || !(best->improvement > 1e-12 * sse)) continue;

    std::vector<Index> left, right;
    for (Index i : own) (best->rule.goes_left(data.row(i)) ? left : right).push_back(i);
    nodes[id].rule = best->rule;
    nodes[id].left = static_cast<int>(nodes.size());
    nodes[id].right = static_cast<int>(nodes.size()) + 1;
    nodes.emplace_back();
    nodes.emplace_back();
    members.push_back(std::move(left));
    members.push_back(std::move(right));
  }
  return RegressionTree(std::move(nodes));
}

RegressionForest train_regression_forest(const Dataset& data, std::span<const Index> rows,
                                         const RegressionForestParams& params,
                                         int threads) {
  params.validate(data.d());
  if (rows.empty()) throw DataError("regression forest needs at least one row");
  std::vector<RegressionTree> trees(params.ntree);
  parallel_for(params.ntree, threads, [&](Index b) {
    Rng rng = make_rng(params.seed, static_cast<std::uint64_t>(b));
    std::vector<Index> sample(rows.begin(), rows.end());
    if (params.bootstrap) {
      std::uniform_int_distribution<std::size_t> pick(0, rows.size() - 1);
      for (Index& i : sample) i = rows[pick(rng)];
    }
    trees[b] = grow_regression_tree(data, sample, params, rng);
  });
  return RegressionForest(std::move(trees));
}

SmaModel::SmaModel(RegressionForestParams params, FeatureSchema schema,
                   std::vector<std::string> arm_labels, std::vector<RegressionForest> arms)
    : params_(params),
      schema_(std::move(schema)),
      arm_labels_(std::move(arm_labels)),
      arms_(std::move(arms)) {
  if (arms_.size() != arm_labels_.size()) throw DataError("one forest per arm required");
}

Eigen::VectorXd SmaModel::predict_mu(FeatureRow x) const {
  check_point(schema_, x);
  Eigen::VectorXd mu(n_arms());
  for (int t = 0; t < n_arms(); ++t) mu[t] = arms_[t].predict(x);
  return mu;
}

int SmaModel::select_treatment(FeatureRow x) const { return argmax_arm(predict_mu(x)); }

SmaModel train_sma(const Dataset& data, const RegressionForestParams& params, int threads) {
  params.validate(data.d());
  std::vector<std::vector<Index>> by_arm(data.n_arms());
  for (Index i = 0; i < data.n(); ++i) by_arm[data.treatment(i)].push_back(i);
  std::vector<RegressionForest> forests;
  for (int t = 0; t < data.n_arms(); ++t) {
    if (by_arm[t].empty()) {
      throw DataError("treatment " + data.arm_labels()[t] + " has no samples");
    }
    if (static_cast<Index>(by_arm[t].size()) < params.min_leaf) {
      throw DataError("treatment " + data.arm_labels()[t] + " has fewer than min_leaf samples");
    }
    RegressionForestParams arm_params = params;
    arm_params.seed = mix_seed(params.seed, static_cast<std::uint64_t>(t));
    forests.push_back(train_regression_forest(data, by_arm[t], arm_params, threads));
  }
  return SmaModel(params, data.schema(), data.arm_labels(), std::move(forests));
}

}  // namespace uplift
