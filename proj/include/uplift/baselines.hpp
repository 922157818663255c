#pragma once

#include "uplift/forest.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace uplift {

// CTS reference: same growth path as UCTS, but every tree trains on one
// stratified rho-subsample and keeps the estimates computed from it.
UpliftForest train_cts(const Dataset& data, const ForestConfig& config, int threads = 0);

struct RegressionForestParams {
  int ntree = 100;
  int mtry = 0;  // 0: max(1, d / 3)
  int min_leaf = 5;
  bool bootstrap = true;
  std::uint64_t seed = 0;

  void validate(int d) const;
  int effective_mtry(int d) const { return mtry > 0 ? mtry : std::max(1, d / 3); }
};

struct RegressionNode {
  int left = -1;
  int right = -1;
  SplitRule rule;
  double value = 0.0;
  Index count = 0;

  bool is_leaf() const { return left < 0; }
};

// CART regression tree grown by variance reduction.
class RegressionTree {
 public:
  RegressionTree() = default;
  explicit RegressionTree(std::vector<RegressionNode> nodes) : nodes_(std::move(nodes)) {}

  double predict(FeatureRow x) const;
  int leaf_index(FeatureRow x) const;
  const std::vector<RegressionNode>& nodes() const { return nodes_; }

 private:
  std::vector<RegressionNode> nodes_;
};

// Grows on data rows `rows` (duplicates allowed, e.g. bootstrap draws).
// A node splits only if both sides keep min_leaf rows and the split lowers
// the within-node sum of squared deviations.
RegressionTree grow_regression_tree(const Dataset& data, std::span<const Index> rows,
                                    const RegressionForestParams& params, Rng& rng);

class RegressionForest {
 public:
  RegressionForest() = default;
  explicit RegressionForest(std::vector<RegressionTree> trees) : trees_(std::move(trees)) {}

  double predict(FeatureRow x) const;
  const std::vector<RegressionTree>& trees() const { return trees_; }

 private:
  std::vector<RegressionTree> trees_;
};

RegressionForest train_regression_forest(const Dataset& data, std::span<const Index> rows,
                                         const RegressionForestParams& params,
                                         int threads = 0);

// Separate Model Approach: one regression forest per arm, policy is the
// argmax of the per-arm predictions.
class SmaModel {
 public:
  SmaModel() = default;
  SmaModel(RegressionForestParams params, FeatureSchema schema,
           std::vector<std::string> arm_labels, std::vector<RegressionForest> arms);

  const RegressionForestParams& params() const { return params_; }
  const FeatureSchema& schema() const { return schema_; }
  const std::vector<std::string>& arm_labels() const { return arm_labels_; }
  int n_arms() const { return static_cast<int>(arm_labels_.size()); }
  const std::vector<RegressionForest>& arms() const { return arms_; }

  Eigen::VectorXd predict_mu(FeatureRow x) const;
  int select_treatment(FeatureRow x) const;

 private:
  RegressionForestParams params_;
  FeatureSchema schema_;
  std::vector<std::string> arm_labels_;
  std::vector<RegressionForest> arms_;
};

SmaModel train_sma(const Dataset& data, const RegressionForestParams& params,
                   int threads = 0);

}  // namespace uplift
