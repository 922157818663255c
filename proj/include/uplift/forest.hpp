#pragma once

#include "uplift/tree.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace uplift {

enum class Method { kUcts, kCts, kSma };

std::string to_string(Method method);
Method parse_method(std::string_view name);

struct ForestConfig {
  int ntree = 100;
  double rho = 0.5;
  GrowthParams growth;
  std::uint64_t seed = 0;

  void validate(int d) const;
};

// Tree ensemble whose per-arm prediction is the average of the trees'
// honest leaf estimates.
class UpliftForest {
 public:
  UpliftForest() = default;
  UpliftForest(Method method, ForestConfig config, FeatureSchema schema,
               std::vector<std::string> arm_labels, std::vector<UpliftTree> trees);

  Method method() const { return method_; }
  const ForestConfig& config() const { return config_; }
  const FeatureSchema& schema() const { return schema_; }
  const std::vector<std::string>& arm_labels() const { return arm_labels_; }
  int n_arms() const { return static_cast<int>(arm_labels_.size()); }
  const std::vector<UpliftTree>& trees() const { return trees_; }

  // Per-arm predicted response. Validates x against the schema.
  Eigen::VectorXd predict_mu(FeatureRow x) const;
  // argmax of predict_mu; ties go to the lowest arm index.
  int select_treatment(FeatureRow x) const;

 private:
  Method method_ = Method::kUcts;
  ForestConfig config_;
  FeatureSchema schema_;
  std::vector<std::string> arm_labels_;
  std::vector<UpliftTree> trees_;
};

// Seeds used for tree b: the stratified split and the growth stream.
std::uint64_t tree_split_seed(std::uint64_t master, int b);
std::uint64_t tree_growth_seed(std::uint64_t master, int b);

// UCTS: per tree, stratified rho split; structure from the approximation
// part, leaf estimates from the estimation part. threads <= 0 uses all cores.
UpliftForest train(const Dataset& data, const ForestConfig& config, int threads = 0);

// Shared trainer for UCTS and CTS (CTS keeps the approximation estimates and
// never looks at the held-out rows).
UpliftForest train_forest(const Dataset& data, const ForestConfig& config,
                          Method method, int threads = 0);

}  // namespace uplift
