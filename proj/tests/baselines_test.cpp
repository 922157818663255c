#include "uplift/baselines.hpp"

#include "test_util.hpp"
#include "uplift/evaluation.hpp"
#include "uplift/synthetic.hpp"

#include <gtest/gtest.h>

#include <map>
#include <numeric>

namespace uplift {
namespace {

ForestConfig cts_config(std::uint64_t seed, double rho, int ntree = 10) {
  ForestConfig c;
  c.ntree = ntree;
  c.rho = rho;
  c.growth.min_split = 15;
  c.growth.mtry = 2;
  c.seed = seed;
  return c;
}

// Near rho = 1 every leaf estimate is the mean of the training rows that
// reach it.
TEST(CtsTest, LeafEstimatesAreTrainingMeans) {
  const Dataset data = TwoDModel().sample(300, 1);
  const ForestConfig c = cts_config(4, 0.99);
  const UpliftForest f = train_cts(data, c, 1);
  EXPECT_EQ(f.method(), Method::kCts);
  for (int b = 0; b < c.ntree; ++b) {
    const UpliftTree& tree = f.trees()[b];
    const DataSplit split = stratified_split(data, c.rho, tree_split_seed(c.seed, b));
    std::map<int, std::pair<Eigen::Vector2d, Eigen::Vector2i>> acc;
    for (Index i : split.approximation) {
      auto& [sum, cnt] = acc.try_emplace(tree.leaf_index(data.features().row(i)),
                                         Eigen::Vector2d::Zero(), Eigen::Vector2i::Zero())
                             .first->second;
      sum[data.treatments()[i]] += data.responses()[i];
      ++cnt[data.treatments()[i]];
    }
    for (const auto& [leaf, sc] : acc) {
      const TreeNode& node = tree.node(leaf);
      for (int t = 0; t < 2; ++t) {
        EXPECT_EQ(node.honest_estimates[t], node.approx_estimates[t]);
        if (sc.second[t] >= c.growth.min_split) {
          EXPECT_NEAR(node.honest_estimates[t], sc.first[t] / sc.second[t], 1e-9);
        }
      }
    }
  }
}

TEST(CtsTest, SameStructureAsUctsDifferentEstimates) {
  const Dataset data = TwoDModel().sample(500, 2);
  const ForestConfig c = cts_config(8, 0.5);
  const UpliftForest cts = train_cts(data, c, 1);
  const UpliftForest ucts = train(data, c, 1);
  bool differs = false;
  for (int b = 0; b < c.ntree; ++b) {
    EXPECT_EQ(structure_hash(cts.trees()[b]), structure_hash(ucts.trees()[b]));
    for (std::size_t k = 0; k < cts.trees()[b].nodes().size(); ++k) {
      const TreeNode& a = cts.trees()[b].nodes()[k];
      const TreeNode& u = ucts.trees()[b].nodes()[k];
      EXPECT_EQ(a.approx_estimates, u.approx_estimates);
      differs = differs || a.honest_estimates != u.honest_estimates;
    }
  }
  EXPECT_TRUE(differs);
}

TEST(CtsTest, TwoDModelTrainsAndPassesAudit) {
  const Dataset data = TwoDModel().sample(1000, 3);
  ForestConfig c = cts_config(5, 0.5, 20);
  c.growth.min_split = 80;
  const UpliftForest f = train_cts(data, c);
  for (int b = 0; b < c.ntree; ++b) {
    const DataSplit split = stratified_split(data, c.rho, tree_split_seed(c.seed, b));
    const AuditResult audit = audit_regularity(f.trees()[b], c.growth, data, split.approximation);
    EXPECT_TRUE(audit.ok) << audit.message;
  }
}

RegressionForestParams rf_params(int ntree, std::uint64_t seed) {
  RegressionForestParams p;
  p.ntree = ntree;
  p.seed = seed;
  return p;
}

TEST(SmaTest, SingleArmIsConstantPolicy) {
  Rng rng(1);
  const Dataset data = testing::random_dataset(rng, 60, 2, 1);
  const SmaModel m = train_sma(data, rf_params(5, 1), 1);
  for (Index i = 0; i < data.n(); ++i) EXPECT_EQ(m.select_treatment(data.features().row(i)), 0);
}

TEST(SmaTest, ConstantResponsesPickLargest) {
  Rng rng(2);
  Dataset data = testing::random_dataset(rng, 90, 2, 3);
  const double constants[] = {1.0, 5.0, -2.0};
  Eigen::VectorXd y(data.n());
  for (Index i = 0; i < data.n(); ++i) y[i] = constants[data.treatments()[i]];
  const SmaModel m = train_sma(data.with_responses(y), rf_params(5, 1), 1);
  std::uniform_real_distribution<double> u(-1.0, 2.0);
  Eigen::RowVectorXd x(2);
  for (int s = 0; s < 100; ++s) {
    x << u(rng), u(rng);
    EXPECT_EQ(m.select_treatment(x), 1);
    EXPECT_DOUBLE_EQ(m.predict_mu(x)[2], -2.0);
  }
}

TEST(SmaTest, EmptyArmIsAnError) {
  Eigen::MatrixXd x(6, 1);
  x << 1, 2, 3, 4, 5, 6;
  const Dataset data = testing::make_dataset(x, {0, 0, 0, 0, 0, 0}, Eigen::VectorXd::Zero(6), 2);
  EXPECT_THROW(train_sma(data, rf_params(2, 1), 1), DataError);
}

TEST(SmaTest, TwoDModelValueWithinOracleBounds) {
  const TwoDModel model;
  const Dataset data = model.sample(4000, 9);
  const SmaModel m = train_sma(data, rf_params(50, 3));
  const AnyModel any = m;
  const PolicyValueReport r = oracle_value(model_policy(any), model, 200000, 77);
  EXPECT_GE(r.value, 25.0);
  EXPECT_LE(r.value, 26.25 + 3 * r.std_error);
}

// Every split lowers (or keeps) the training sum of squared deviations.
TEST(RegressionTreeTest, SplitsNeverIncreaseSse) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Dataset data = trial % 2 ? testing::random_dataset(rng, 200, 3, 1, true)
                                   : TwoDModel().sample(100, rng());
    std::vector<Index> rows(data.n());
    std::iota(rows.begin(), rows.end(), Index{0});
    RegressionForestParams p = rf_params(1, trial);
    p.bootstrap = false;
    p.min_leaf = 3;
    const RegressionTree tree = grow_regression_tree(data, rows, p, rng);
    const auto& nodes = tree.nodes();
    std::vector<std::vector<Index>> members(nodes.size());
    members[0] = rows;
    auto sse = [&](const std::vector<Index>& m) {
      double mean = 0.0;
      for (Index i : m) mean += data.responses()[i] / m.size();
      double s = 0.0;
      for (Index i : m) s += (data.responses()[i] - mean) * (data.responses()[i] - mean);
      return s;
    };
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      if (nodes[k].is_leaf()) continue;
      for (Index i : members[k]) {
        members[nodes[k].rule.goes_left(data.features().row(i)) ? nodes[k].left : nodes[k].right]
            .push_back(i);
      }
      const auto& l = members[nodes[k].left];
      const auto& r = members[nodes[k].right];
      EXPECT_GE(static_cast<int>(l.size()), p.min_leaf);
      EXPECT_GE(static_cast<int>(r.size()), p.min_leaf);
      EXPECT_LE(sse(l) + sse(r), sse(members[k]) + 1e-9);
    }
  }
}

TEST(RegressionForestParamsTest, Validation) {
  EXPECT_THROW(rf_params(0, 1).validate(2), ConfigError);
  RegressionForestParams p = rf_params(1, 1);
  p.mtry = 3;
  EXPECT_THROW(p.validate(2), ConfigError);
  EXPECT_EQ(rf_params(1, 1).effective_mtry(50), 16);
  EXPECT_EQ(rf_params(1, 1).effective_mtry(2), 1);
}

}  // namespace
}  // namespace uplift
