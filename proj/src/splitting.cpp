#include "uplift/splitting.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace uplift {
namespace {

// Per-arm counts and sums over a member list, in member order.
void accumulate(const Dataset& data, std::span<const Index> members,
                Eigen::VectorXi& counts, Eigen::VectorXd& sums) {
  counts.setZero(data.n_arms());
  sums.setZero(data.n_arms());
  for (Index i : members) {
    const int t = data.treatment(i);
    ++counts[t];
    sums[t] += data.response(i);
  }
}

double gain_of(double parent_best, Index m, Index m_left, double left_best,
               double right_best) {
  const double p_left = static_cast<double>(m_left) / static_cast<double>(m);
  const double p_right = static_cast<double>(m - m_left) / static_cast<double>(m);
  return p_left * left_best + p_right * right_best - parent_best;
}

double midpoint(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  return mid < hi ? mid : lo;
}

// Present categorical levels at the node, ascending.
std::vector<int> present_levels(const Dataset& data, const NodeStats& parent,
                                int coordinate) {
  const int card = data.schema().column(coordinate).cardinality();
  std::vector<char> seen(card, 0);
  for (Index i : parent.members) {
    seen[static_cast<int>(data.feature(i, coordinate))] = 1;
  }
  std::vector<int> levels;
  for (int k = 0; k < card; ++k) {
    if (seen[k]) levels.push_back(k);
  }
  return levels;
}

// Left-side level masks in canonical order.
std::vector<std::uint64_t> subset_masks(const std::vector<int>& levels) {
  std::vector<std::uint64_t> masks;
  const int c = static_cast<int>(levels.size());
  if (c < 2) return masks;
  if (c <= kMaxExhaustiveLevels) {
    const std::uint64_t limit = 1ULL << (c - 1);
    for (std::uint64_t bits = 1; bits < limit; ++bits) {
      std::uint64_t mask = 0;
      for (int i = 0; i < c - 1; ++i) {
        if ((bits >> i) & 1ULL) mask |= 1ULL << levels[i];
      }
      masks.push_back(mask);
    }
  } else {
    for (int level : levels) masks.push_back(1ULL << level);
  }
  return masks;
}

}  // namespace

Index min_side_count(double alpha, Index m) {
  const auto side = static_cast<Index>(std::ceil(alpha * static_cast<double>(m) - 1e-9));
  return std::max<Index>(side, 1);
}

Eigen::VectorXd estimate_child_response(const Eigen::Ref<const Eigen::VectorXi>& counts,
                                        const Eigen::Ref<const Eigen::VectorXd>& sums,
                                        const Eigen::Ref<const Eigen::VectorXd>& parent,
                                        int min_split, double n_reg) {
  Eigen::VectorXd out(parent.size());
  for (Index t = 0; t < parent.size(); ++t) {
    out[t] = counts[t] >= min_split
                 ? (sums[t] + parent[t] * n_reg) / (counts[t] + n_reg)
                 : parent[t];
  }
  return out;
}

double best_child_response(const int* counts, const double* sums,
                           const Eigen::Ref<const Eigen::VectorXd>& parent,
                           int min_split, double n_reg) {
  double best = -std::numeric_limits<double>::infinity();
  for (Index t = 0; t < parent.size(); ++t) {
    const double v = counts[t] >= min_split
                         ? (sums[t] + parent[t] * n_reg) / (counts[t] + n_reg)
                         : parent[t];
    best = std::max(best, v);
  }
  return best;
}

NodeStats root_stats(const Dataset& data, std::vector<Index> members) {
  NodeStats s;
  s.members = std::move(members);
  accumulate(data, s.members, s.counts, s.sums);
  s.estimates.resize(data.n_arms());
  for (int t = 0; t < data.n_arms(); ++t) {
    if (s.counts[t] == 0) {
      throw DataError("treatment " + data.arm_labels()[t] +
                      " has no samples at the root");
    }
    s.estimates[t] = s.sums[t] / s.counts[t];
  }
  return s;
}

NodeStats child_stats(const Dataset& data, std::vector<Index> members,
                      const Eigen::Ref<const Eigen::VectorXd>& parent_estimates,
                      const SplitParams& params) {
  NodeStats s;
  s.members = std::move(members);
  accumulate(data, s.members, s.counts, s.sums);
  s.estimates = estimate_child_response(s.counts, s.sums, parent_estimates,
                                        params.min_split, params.n_reg);
  return s;
}

SplitScore score_split(const Dataset& data, const NodeStats& parent,
                       const SplitCandidate& candidate, const SplitParams& params) {
  std::vector<Index> left;
  std::vector<Index> right;
  for (Index i : parent.members) {
    (candidate.rule.goes_left(data.feature(i, candidate.rule.coordinate)) ? left : right)
        .push_back(i);
  }
  const Index side = min_side_count(params.alpha, parent.m());
  if (static_cast<Index>(left.size()) < side || static_cast<Index>(right.size()) < side) {
    throw std::invalid_argument("split candidate is not alpha-regular");
  }
  SplitScore score;
  score.candidate = candidate;
  score.candidate.left_count = static_cast<Index>(left.size());
  score.candidate.right_count = static_cast<Index>(right.size());
  score.left = child_stats(data, std::move(left), parent.estimates, params);
  score.right = child_stats(data, std::move(right), parent.estimates, params);
  score.gain = gain_of(parent.estimates.maxCoeff(), parent.m(), score.left.m(),
                       score.left.estimates.maxCoeff(),
                       score.right.estimates.maxCoeff());
  return score;
}

std::vector<SplitCandidate> enumerate_candidates(const Dataset& data,
                                                 const NodeStats& parent,
                                                 int coordinate, double alpha) {
  if (coordinate < 0 || coordinate >= data.d()) {
    throw std::out_of_range("coordinate out of range");
  }
  const Index m = parent.m();
  const Index side = min_side_count(alpha, m);
  std::vector<SplitCandidate> out;
  const Column& col = data.schema().column(coordinate);

  if (!col.categorical()) {
    std::vector<double> values;
    values.reserve(parent.members.size());
    for (Index i : parent.members) values.push_back(data.feature(i, coordinate));
    std::sort(values.begin(), values.end());
    for (Index k = 0; k + 1 < m; ++k) {
      if (values[k] == values[k + 1]) continue;
      const Index left = k + 1;
      if (left < side || m - left < side) continue;
      SplitCandidate c;
      c.rule.coordinate = coordinate;
      c.rule.kind = SplitRule::Kind::kThreshold;
      c.rule.threshold = midpoint(values[k], values[k + 1]);
      c.left_count = left;
      c.right_count = m - left;
      out.push_back(c);
    }
    return out;
  }

  std::vector<Index> level_counts(col.cardinality(), 0);
  for (Index i : parent.members) ++level_counts[static_cast<int>(data.feature(i, coordinate))];
  for (std::uint64_t mask : subset_masks(present_levels(data, parent, coordinate))) {
    Index left = 0;
    for (int k = 0; k < col.cardinality(); ++k) {
      if ((mask >> k) & 1ULL) left += level_counts[k];
    }
    if (left < side || m - left < side) continue;
    SplitCandidate c;
    c.rule.coordinate = coordinate;
    c.rule.kind = SplitRule::Kind::kSubset;
    c.rule.left_levels = mask;
    c.left_count = left;
    c.right_count = m - left;
    out.push_back(c);
  }
  return out;
}

std::optional<SplitScore> best_split(const Dataset& data, const NodeStats& parent,
                                     std::span<const int> coordinates,
                                     const SplitParams& params) {
  const int k = data.n_arms();
  const Index m = parent.m();
  if (m < 2) return std::nullopt;
  const Index side = min_side_count(params.alpha, m);
  const double parent_best = parent.estimates.maxCoeff();

  bool found = false;
  double best_gain = -std::numeric_limits<double>::infinity();
  SplitCandidate best;

  Eigen::VectorXi left_counts(k), right_counts(k);
  Eigen::VectorXd left_sums(k), right_sums(k);
  auto consider = [&](const SplitRule& rule, Index left_m) {
    right_counts = parent.counts - left_counts;
    right_sums = parent.sums - left_sums;
    const double l = best_child_response(left_counts.data(), left_sums.data(),
                                         parent.estimates, params.min_split, params.n_reg);
    const double r = best_child_response(right_counts.data(), right_sums.data(),
                                         parent.estimates, params.min_split, params.n_reg);
    const double gain = gain_of(parent_best, m, left_m, l, r);
    if (!found || gain > best_gain) {
      found = true;
      best_gain = gain;
      best.rule = rule;
      best.left_count = left_m;
      best.right_count = m - left_m;
    }
  };

  std::vector<std::pair<double, Index>> order;
  for (int j : coordinates) {
    const Column& col = data.schema().column(j);
    if (!col.categorical()) {
      order.clear();
      order.reserve(parent.members.size());
      for (Index i : parent.members) order.emplace_back(data.feature(i, j), i);
      std::sort(order.begin(), order.end());
      left_counts.setZero();
      left_sums.setZero();
      for (Index pos = 0; pos + 1 < m; ++pos) {
        const Index i = order[pos].second;
        ++left_counts[data.treatment(i)];
        left_sums[data.treatment(i)] += data.response(i);
        if (order[pos].first == order[pos + 1].first) continue;
        const Index left_m = pos + 1;
        if (left_m < side || m - left_m < side) continue;
        SplitRule rule;
        rule.coordinate = j;
        rule.kind = SplitRule::Kind::kThreshold;
        rule.threshold = midpoint(order[pos].first, order[pos + 1].first);
        consider(rule, left_m);
      }
      continue;
    }

    const int card = col.cardinality();
    Eigen::MatrixXi level_counts = Eigen::MatrixXi::Zero(k, card);
    Eigen::MatrixXd level_sums = Eigen::MatrixXd::Zero(k, card);
    for (Index i : parent.members) {
      const int level = static_cast<int>(data.feature(i, j));
      ++level_counts(data.treatment(i), level);
      level_sums(data.treatment(i), level) += data.response(i);
    }
    for (std::uint64_t mask : subset_masks(present_levels(data, parent, j))) {
      left_counts.setZero();
      left_sums.setZero();
      for (int level = 0; level < card; ++level) {
        if ((mask >> level) & 1ULL) {
          left_counts += level_counts.col(level);
          left_sums += level_sums.col(level);
        }
      }
      const Index left_m = left_counts.sum();
      if (left_m < side || m - left_m < side) continue;
      SplitRule rule;
      rule.coordinate = j;
      rule.kind = SplitRule::Kind::kSubset;
      rule.left_levels = mask;
      consider(rule, left_m);
    }
  }
  if (!found) return std::nullopt;
  return score_split(data, parent, best, params);
}

}  // namespace uplift
