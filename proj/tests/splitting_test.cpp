#include "uplift/splitting.hpp"

#include "split_oracle.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <numeric>

namespace uplift {
namespace {

using testing::make_dataset;

std::vector<Index> all_rows(const Dataset& data) {
  std::vector<Index> rows(data.n());
  std::iota(rows.begin(), rows.end(), Index{0});
  return rows;
}

TEST(EstimateChildResponseTest, ShrinksTowardParent) {
  // One sample y = 1, parent 0, n_reg = 1: (1 + 0) / (1 + 1).
  Eigen::VectorXi counts(1);
  counts << 1;
  Eigen::VectorXd sums(1), parent(1);
  sums << 1.0;
  parent << 0.0;
  EXPECT_DOUBLE_EQ(estimate_child_response(counts, sums, parent, 1, 1.0)[0], 0.5);
}

TEST(EstimateChildResponseTest, InheritsWhenArmIsThin) {
  Eigen::VectorXi counts(2);
  counts << 5, 0;
  Eigen::VectorXd sums(2), parent(2);
  sums << 5.0, 0.0;
  parent << 0.1, 0.7;
  const Eigen::VectorXd est = estimate_child_response(counts, sums, parent, 2, 0.0);
  EXPECT_DOUBLE_EQ(est[0], 1.0);
  EXPECT_DOUBLE_EQ(est[1], 0.7);
}

TEST(EstimateChildResponseTest, ConstantMeanWithoutShrinkage) {
  Eigen::VectorXi counts(1);
  counts << 4;
  Eigen::VectorXd sums(1), parent(1);
  sums << 8.0;
  parent << -3.0;
  EXPECT_DOUBLE_EQ(estimate_child_response(counts, sums, parent, 2, 0.0)[0], 2.0);
}

Dataset four_sample_example() {
  Eigen::MatrixXd x(4, 1);
  x << 1, 2, 3, 4;
  Eigen::VectorXd y(4);
  y << 0, 1, 1, 0;
  return make_dataset(x, {0, 1, 0, 1}, y, 2);
}

TEST(ScoreSplitTest, HandWorkedFourSampleExample) {
  const Dataset data = four_sample_example();
  const NodeStats root = root_stats(data, all_rows(data));
  EXPECT_DOUBLE_EQ(root.estimates[0], 0.5);
  EXPECT_DOUBLE_EQ(root.estimates[1], 0.5);
  SplitCandidate c;
  c.rule.threshold = 2.0;
  const SplitScore s = score_split(data, root, c, {1, 0.0, 0.1});
  EXPECT_DOUBLE_EQ(s.left.estimates[0], 0.0);
  EXPECT_DOUBLE_EQ(s.left.estimates[1], 1.0);
  EXPECT_DOUBLE_EQ(s.right.estimates[0], 1.0);
  EXPECT_DOUBLE_EQ(s.right.estimates[1], 0.0);
  EXPECT_DOUBLE_EQ(s.gain, 0.5);
}

TEST(ScoreSplitTest, RejectsIrregularCandidate) {
  const Dataset data = four_sample_example();
  const NodeStats root = root_stats(data, all_rows(data));
  SplitCandidate c;
  c.rule.threshold = 1.0;  // 1 | 3 split, needs 2 per side at alpha 0.4
  EXPECT_THROW(score_split(data, root, c, {1, 0.0, 0.4}), std::invalid_argument);
}

TEST(ScoreSplitTest, SingleArmGainIsZero) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Dataset data = testing::random_dataset(rng, 25, 2, 1);
    const NodeStats root = root_stats(data, all_rows(data));
    for (int j = 0; j < 2; ++j) {
      for (const auto& c : enumerate_candidates(data, root, j, 0.05)) {
        EXPECT_NEAR(score_split(data, root, c, {1, 0.0, 0.05}).gain, 0.0, 1e-12);
      }
    }
  }
}

TEST(ScoreSplitTest, ConstantResponsesGiveZeroGain) {
  Rng rng(12);
  Dataset base = testing::random_dataset(rng, 30, 2, 3);
  const Dataset data = base.with_responses(Eigen::VectorXd::Constant(30, 4.25));
  const NodeStats root = root_stats(data, all_rows(data));
  for (const auto& c : enumerate_candidates(data, root, 0, 0.1)) {
    EXPECT_NEAR(score_split(data, root, c, {2, 1.5, 0.1}).gain, 0.0, 1e-12);
  }
}

TEST(EnumerateCandidatesTest, MidpointThresholds) {
  const Dataset data = four_sample_example();
  const NodeStats root = root_stats(data, all_rows(data));
  const auto cands = enumerate_candidates(data, root, 0, 0.01);
  ASSERT_EQ(cands.size(), 3u);
  EXPECT_DOUBLE_EQ(cands[0].rule.threshold, 1.5);
  EXPECT_DOUBLE_EQ(cands[1].rule.threshold, 2.5);
  EXPECT_DOUBLE_EQ(cands[2].rule.threshold, 3.5);
  EXPECT_EQ(cands[0].left_count, 1);
  EXPECT_EQ(cands[0].right_count, 3);
}

TEST(EnumerateCandidatesTest, AlphaFilterKeepsOnlyRegularCuts) {
  // ceil(0.4 * 10) = 4 rows per side: left sizes 4, 5, 6.
  Eigen::MatrixXd x(10, 1);
  for (int i = 0; i < 10; ++i) x(i, 0) = i + 1;
  const Dataset data = make_dataset(x, {0, 1, 0, 1, 0, 1, 0, 1, 0, 1}, Eigen::VectorXd::Zero(10), 2);
  const NodeStats root = root_stats(data, all_rows(data));
  EXPECT_EQ(min_side_count(0.4, 10), 4);
  const auto cands = enumerate_candidates(data, root, 0, 0.4);
  ASSERT_EQ(cands.size(), 3u);
  for (const auto& c : cands) {
    EXPECT_GE(c.left_count, 4);
    EXPECT_GE(c.right_count, 4);
  }
  EXPECT_DOUBLE_EQ(cands[0].rule.threshold, 4.5);
}

TEST(EnumerateCandidatesTest, SkipsTiedValues) {
  Eigen::MatrixXd x(5, 1);
  x << 1, 1, 2, 2, 2;
  const Dataset data = make_dataset(x, {0, 1, 0, 1, 0}, Eigen::VectorXd::Zero(5), 2);
  const auto cands = enumerate_candidates(data, root_stats(data, all_rows(data)), 0, 0.01);
  ASSERT_EQ(cands.size(), 1u);
  EXPECT_DOUBLE_EQ(cands[0].rule.threshold, 1.5);
}

Dataset categorical_dataset(int levels, Index n) {
  std::vector<std::string> names;
  for (int k = 0; k < levels; ++k) names.push_back("L" + std::to_string(k));
  FeatureSchema schema({Column{"c", ColumnKind::kCategorical, names}});
  Eigen::MatrixXd x(n, 1);
  std::vector<int> t(n);
  Eigen::VectorXd y(n);
  for (Index i = 0; i < n; ++i) {
    x(i, 0) = static_cast<double>(i % levels);
    t[i] = static_cast<int>((i / levels) % 2);
    y[i] = static_cast<double>((i * 7) % 5);
  }
  return Dataset(schema, x, t, y, Eigen::VectorXd::Constant(2, 0.5), {});
}

TEST(EnumerateCandidatesTest, ThreeLevelPartitions) {
  const Dataset data = categorical_dataset(3, 12);
  const auto cands = enumerate_candidates(data, root_stats(data, all_rows(data)), 0, 0.01);
  ASSERT_EQ(cands.size(), 3u);  // 2^(3-1) - 1
  // {A}|{B,C}, {B}|{A,C}, {A,B}|{C}
  EXPECT_EQ(cands[0].rule.left_levels, 0b001u);
  EXPECT_EQ(cands[1].rule.left_levels, 0b010u);
  EXPECT_EQ(cands[2].rule.left_levels, 0b011u);
  for (const auto& c : cands) EXPECT_EQ(c.rule.kind, SplitRule::Kind::kSubset);
}

TEST(EnumerateCandidatesTest, PartitionCountAndOneVsRestCap) {
  const Dataset ten = categorical_dataset(10, 200);
  EXPECT_EQ(enumerate_candidates(ten, root_stats(ten, all_rows(ten)), 0, 0.001).size(), 511u);
  const Dataset twelve = categorical_dataset(12, 240);
  const auto cands = enumerate_candidates(twelve, root_stats(twelve, all_rows(twelve)), 0, 0.001);
  ASSERT_EQ(cands.size(), 12u);
  for (std::size_t k = 0; k < cands.size(); ++k) EXPECT_EQ(cands[k].rule.left_levels, 1ULL << k);
}

TEST(EnumerateCandidatesTest, OnlyPresentLevelsAreEnumerated) {
  const Dataset data = categorical_dataset(4, 40);
  std::vector<Index> rows;
  for (Index i = 0; i < data.n(); ++i) {
    if (data.feature(i, 0) != 2.0) rows.push_back(i);
  }
  const auto cands = enumerate_candidates(data, root_stats(data, rows), 0, 0.01);
  EXPECT_EQ(cands.size(), 3u);
  for (const auto& c : cands) EXPECT_EQ(c.rule.left_levels & 0b100u, 0u);
}

TEST(BestSplitTest, SingletonAndMaximum) {
  const Dataset data = four_sample_example();
  const NodeStats root = root_stats(data, all_rows(data));
  const std::vector<int> coords{0};
  // alpha 0.5 > 0.4 side: only the 2|2 cut survives.
  auto only = best_split(data, root, coords, {1, 0.0, 0.45});
  ASSERT_TRUE(only);
  EXPECT_DOUBLE_EQ(only->candidate.rule.threshold, 2.5);
  auto best = best_split(data, root, coords, {1, 0.0, 0.01});
  ASSERT_TRUE(best);
  double expected = -1;
  for (const auto& c : enumerate_candidates(data, root, 0, 0.01)) {
    expected = std::max(expected, score_split(data, root, c, {1, 0.0, 0.01}).gain);
  }
  EXPECT_DOUBLE_EQ(best->gain, expected);
}

TEST(BestSplitTest, AbsentWhenNothingRegular) {
  Eigen::MatrixXd x(4, 1);
  x << 1, 1, 1, 1;
  const Dataset data = make_dataset(x, {0, 1, 0, 1}, Eigen::VectorXd::Zero(4), 2);
  const std::vector<int> coords{0};
  EXPECT_FALSE(best_split(data, root_stats(data, all_rows(data)), coords, {1, 0.0, 0.1}));
}

TEST(BestSplitTest, ConstantNodeTiesResolveToFirstCandidate) {
  Rng rng(2);
  const Dataset base = testing::random_dataset(rng, 20, 2, 2);
  const Dataset data = base.with_responses(Eigen::VectorXd::Constant(20, 1.0));
  const NodeStats root = root_stats(data, all_rows(data));
  const std::vector<int> coords{1, 0};
  const auto best = best_split(data, root, coords, {1, 0.0, 0.1});
  ASSERT_TRUE(best);
  EXPECT_NEAR(best->gain, 0.0, 1e-12);
  const auto first = enumerate_candidates(data, root, 1, 0.1).front();
  EXPECT_EQ(best->candidate.rule, first.rule);
}

TEST(BestSplitTest, CategoricalMatchesEnumeration) {
  const Dataset data = categorical_dataset(5, 60);
  const NodeStats root = root_stats(data, all_rows(data));
  const SplitParams params{3, 0.5, 0.1};
  double expected = -1e300;
  SplitRule rule;
  for (const auto& c : enumerate_candidates(data, root, 0, params.alpha)) {
    const double g = score_split(data, root, c, params).gain;
    if (g > expected + 1e-12) {
      expected = g;
      rule = c.rule;
    }
  }
  const std::vector<int> coords{0};
  const auto best = best_split(data, root, coords, params);
  ASSERT_TRUE(best);
  EXPECT_NEAR(best->gain, expected, 1e-12);
  EXPECT_EQ(best->candidate.rule, rule);
}

// Best split equals the brute-force maximum of the criterion.
TEST(BestSplitTest, MatchesBruteForceOracle) {
  Rng rng(99);
  std::uniform_int_distribution<int> size(4, 30), dims(1, 2), arms(1, 3), min_split(1, 4);
  std::uniform_real_distribution<double> alpha(0.01, 0.45), nreg(0.0, 3.0);
  std::bernoulli_distribution ties(0.3);
  for (int trial = 0; trial < 300; ++trial) {
    const int k = arms(rng);
    const Dataset data = testing::random_dataset(rng, std::max(size(rng), k), dims(rng), k, ties(rng));
    const testing::OracleParams op{min_split(rng), nreg(rng), alpha(rng)};
    const NodeStats root = root_stats(data, all_rows(data));
    std::vector<double> parent(root.estimates.data(), root.estimates.data() + k);
    const double expected = testing::oracle_best_gain(data, root.members, parent, op);
    std::vector<int> coords(data.d());
    std::iota(coords.begin(), coords.end(), 0);
    const auto best = best_split(data, root, coords, {op.min_split, op.n_reg, op.alpha});
    if (std::isnan(expected)) {
      EXPECT_FALSE(best);
    } else {
      ASSERT_TRUE(best);
      EXPECT_NEAR(best->gain, expected, 1e-12);
    }
  }
}

// Affine response maps: shifts leave gains unchanged, positive scales
// multiply them.
TEST(ScoreSplitTest, AffineResponseInvariance) {
  Rng rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const Dataset data = testing::random_dataset(rng, 30, 2, 3);
    const Dataset shifted = data.with_responses(data.responses().array() + 7.5);
    const Dataset scaled = data.with_responses(data.responses() * 2.5);
    const SplitParams params{2, 1.0, 0.1};
    const NodeStats r0 = root_stats(data, all_rows(data));
    const NodeStats r1 = root_stats(shifted, all_rows(data));
    const NodeStats r2 = root_stats(scaled, all_rows(data));
    for (const auto& c : enumerate_candidates(data, r0, 0, params.alpha)) {
      const double g = score_split(data, r0, c, params).gain;
      EXPECT_NEAR(score_split(shifted, r1, c, params).gain, g, 1e-9);
      EXPECT_NEAR(score_split(scaled, r2, c, params).gain, 2.5 * g, 1e-9);
    }
  }
}

TEST(RootStatsTest, MissingArmIsAnError) {
  Eigen::MatrixXd x(2, 1);
  x << 1, 2;
  const Dataset data = make_dataset(x, {0, 0}, Eigen::VectorXd::Zero(2), 2);
  EXPECT_THROW(root_stats(data, {0, 1}), DataError);
}

}  // namespace
}  // namespace uplift
