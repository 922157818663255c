#include "uplift/forest.hpp"

#include <cmath>

namespace uplift {

std::string to_string(Method method) {
  switch (method) {
    case Method::kUcts: return "ucts";
    case Method::kCts: return "cts";
    case Method::kSma: return "sma";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  if (name == "ucts") return Method::kUcts;
  if (name == "cts") return Method::kCts;
  if (name == "sma") return Method::kSma;
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

void ForestConfig::validate(int d) const {
  if (ntree < 1) throw ConfigError("ntree must be a positive integer");
  if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("rho must lie in (0, 1)");
  growth.validate(d);
}

UpliftForest::UpliftForest(Method method, ForestConfig config, FeatureSchema schema,
                           std::vector<std::string> arm_labels,
                           std::vector<UpliftTree> trees)
    : method_(method),
      config_(std::move(config)),
      schema_(std::move(schema)),
      arm_labels_(std::move(arm_labels)),
      trees_(std::move(trees)) {
  if (trees_.empty()) throw DataError("forest has no trees");
  for (const UpliftTree& t : trees_) {
    if (t.n_arms() != n_arms()) throw DataError("tree arm count mismatch");
  }
}

Eigen::VectorXd UpliftForest::predict_mu(FeatureRow x) const {
  check_point(schema_, x);
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(n_arms());
  for (const UpliftTree& tree : trees_) mu += tree.leaf_estimates(x);
  return mu / static_cast<double>(trees_.size());
}

int UpliftForest::select_treatment(FeatureRow x) const {
  return argmax_arm(predict_mu(x));
}

std::uint64_t tree_split_seed(std::uint64_t master, int b) {
  return mix_seed(master, 2 * static_cast<std::uint64_t>(b));
}

std::uint64_t tree_growth_seed(std::uint64_t master, int b) {
  return mix_seed(master, 2 * static_cast<std::uint64_t>(b) + 1);
}

UpliftForest train_forest(const Dataset& data, const ForestConfig& config,
                          Method method, int threads) {
  if (method == Method::kSma) throw ConfigError("train_forest handles ucts/cts only");
  config.validate(data.d());
  std::vector<UpliftTree> trees(config.ntree);
  parallel_for(config.ntree, threads, [&](Index b) {
    const int tree_id = static_cast<int>(b);
    const DataSplit split = stratified_split(data, config.rho, tree_split_seed(config.seed, tree_id));
    Rng rng(tree_growth_seed(config.seed, tree_id));
    UpliftTree tree = grow_tree(data, split.approximation, config.growth, rng);
    if (method == Method::kUcts) honest_estimate(tree, data, split.estimation);
    trees[b] = std::move(tree);
  });
  return UpliftForest(method, config, data.schema(), data.arm_labels(), std::move(trees));
}

UpliftForest train(const Dataset& data, const ForestConfig& config, int threads) {
  return train_forest(data, config, Method::kUcts, threads);
}

}  // namespace uplift
