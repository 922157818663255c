#pragma once

#include "uplift/dataset.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace uplift {

// Binary routing rule on one coordinate. Numeric: left iff x <= threshold.
// Categorical: left iff the level's bit is set in left_levels.
struct SplitRule {
  enum class Kind : std::uint8_t { kThreshold, kSubset };

  int coordinate = 0;
  Kind kind = Kind::kThreshold;
  double threshold = 0.0;
  std::uint64_t left_levels = 0;

  bool goes_left(double value) const {
    if (kind == Kind::kThreshold) return value <= threshold;
    return (left_levels >> static_cast<int>(value)) & 1ULL;
  }
  bool goes_left(FeatureRow x) const { return goes_left(x[coordinate]); }

  bool operator==(const SplitRule&) const = default;
};

struct SplitCandidate {
  SplitRule rule;
  Index left_count = 0;
  Index right_count = 0;
};

// Approximation-set rows reaching a node, with per-arm counts, response
// sums and the node's (possibly inherited) per-arm estimates.
struct NodeStats {
  std::vector<Index> members;
  Eigen::VectorXi counts;
  Eigen::VectorXd sums;
  Eigen::VectorXd estimates;

  Index m() const { return static_cast<Index>(members.size()); }
};

struct SplitParams {
  int min_split = 80;
  double n_reg = 0.0;
  double alpha = 0.1;
};

struct SplitScore {
  SplitCandidate candidate;
  double gain = 0.0;
  NodeStats left;
  NodeStats right;
};

// Smallest admissible side size for an alpha-regular split of m rows,
// ceil(alpha * m) with a small guard against representation error.
Index min_side_count(double alpha, Index m);

// Per-arm shrunken child means; arms with fewer than min_split rows inherit
// the parent value.
Eigen::VectorXd estimate_child_response(const Eigen::Ref<const Eigen::VectorXi>& counts,
                                        const Eigen::Ref<const Eigen::VectorXd>& sums,
                                        const Eigen::Ref<const Eigen::VectorXd>& parent,
                                        int min_split, double n_reg);

// max_t of estimate_child_response without materializing the vector.
double best_child_response(const int* counts, const double* sums,
                           const Eigen::Ref<const Eigen::VectorXd>& parent,
                           int min_split, double n_reg);

// Root statistics: estimates are the plain per-arm means over `members`.
// Throws DataError when an arm has no rows.
NodeStats root_stats(const Dataset& data, std::vector<Index> members);

NodeStats child_stats(const Dataset& data, std::vector<Index> members,
                      const Eigen::Ref<const Eigen::VectorXd>& parent_estimates,
                      const SplitParams& params);

// Estimated gain in expected response from applying `candidate` at the node.
SplitScore score_split(const Dataset& data, const NodeStats& parent,
                       const SplitCandidate& candidate, const SplitParams& params);

// All alpha-regular candidates on coordinate j, in canonical order:
// ascending midpoint thresholds for numeric columns; for categorical columns
// with c <= 10 levels present, every two-sided partition (subset masks over
// present levels, highest level always right, ascending mask order), else
// one-vs-rest in level order.
std::vector<SplitCandidate> enumerate_candidates(const Dataset& data,
                                                 const NodeStats& parent,
                                                 int coordinate, double alpha);

// Highest-gain alpha-regular split over the given coordinates. Ties keep the
// earliest (coordinate order, then enumeration order). Empty when nothing is
// admissible.
std::optional<SplitScore> best_split(const Dataset& data, const NodeStats& parent,
                                     std::span<const int> coordinates,
                                     const SplitParams& params);

inline constexpr int kMaxExhaustiveLevels = 10;

}  // namespace uplift
