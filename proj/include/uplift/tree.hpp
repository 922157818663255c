#pragma once

#include "uplift/splitting.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace uplift {

// Algorithm inputs controlling a single tree.
struct GrowthParams {
  int min_split = 80;
  double n_reg = 0.0;
  double alpha = 0.1;
  int mtry = 1;
  double pi = 0.05;

  // Throws ConfigError when a value is outside its range for d features.
  void validate(int d) const;
  SplitParams split_params() const { return {min_split, n_reg, alpha}; }
};

enum class LeafReason : std::uint8_t {
  kInternal = 0,
  kTerminal = 1,        // every arm below min_split
  kNoRegularSplit = 2,  // drawn coordinates admit no alpha-regular split
};

struct TreeNode {
  int parent = -1;
  int left = -1;
  int right = -1;
  int depth = 0;
  SplitRule rule;
  LeafReason leaf_reason = LeafReason::kTerminal;
  Eigen::VectorXi approx_counts;
  Eigen::VectorXd approx_estimates;
  Eigen::VectorXd honest_estimates;

  bool is_leaf() const { return left < 0; }
};

// Nodes are stored in breadth-first order: a child's id is always larger
// than its parent's.
class UpliftTree {
 public:
  UpliftTree() = default;
  explicit UpliftTree(int n_arms) : n_arms_(n_arms) {}

  int n_arms() const { return n_arms_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::vector<TreeNode>& nodes() { return nodes_; }
  const TreeNode& node(int id) const { return nodes_.at(id); }

  int leaf_index(FeatureRow x) const;
  const Eigen::VectorXd& leaf_estimates(FeatureRow x) const {
    return nodes_[leaf_index(x)].honest_estimates;
  }

  int leaf_count() const;
  int max_depth() const;

 private:
  int n_arms_ = 0;
  std::vector<TreeNode> nodes_;
};

struct CoordinateDraw {
  bool single = false;
  std::vector<int> coordinates;  // ascending
};

// With probability pi one uniformly random coordinate, otherwise mtry
// distinct uniformly random coordinates.
CoordinateDraw draw_coordinates(int d, int mtry, double pi, Rng& rng);

// Grows the structure and approx_estimates on the approximation rows.
// honest_estimates are left equal to approx_estimates.
UpliftTree grow_tree(const Dataset& data, std::span<const Index> approx,
                     const GrowthParams& params, Rng& rng);

// Re-estimates every node from the estimation rows: per-arm means where the
// node has estimation rows of that arm, the parent's value otherwise.
void honest_estimate(UpliftTree& tree, const Dataset& data,
                     std::span<const Index> estimation);

double predict_tree(const UpliftTree& tree, FeatureRow x, int arm);

// FNV-1a over node topology and split rules (not estimates).
std::uint64_t structure_hash(const UpliftTree& tree);

struct AuditResult {
  bool ok = true;
  std::string message;
};

// Checks alpha-regularity of every split, non-empty leaves, and that leaves
// and internal nodes agree with the min_split termination rule. With `data`
// and `approx`, per-node counts are recomputed by routing.
AuditResult audit_regularity(const UpliftTree& tree, const GrowthParams& params);
AuditResult audit_regularity(const UpliftTree& tree, const GrowthParams& params,
                             const Dataset& data, std::span<const Index> approx);

}  // namespace uplift
