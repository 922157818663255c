#pragma once

#include "uplift/dataset.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

namespace uplift {

// Maps a feature vector to an arm index.
using Policy = std::function<int(FeatureRow)>;

// Randomized-experiment generator with known conditional means.
class DataModel {
 public:
  virtual ~DataModel() = default;

  virtual int n_arms() const = 0;
  virtual const FeatureSchema& schema() const = 0;
  virtual void sample_features(Rng& rng, Eigen::Ref<Eigen::RowVectorXd> x) const = 0;
  virtual double mean_response(FeatureRow x, int arm) const = 0;
  virtual double sample_response(FeatureRow x, int arm, Rng& rng) const = 0;
  // Value of the pointwise-optimal rule when known in closed form.
  virtual std::optional<double> exact_optimal_value() const { return std::nullopt; }
  // Parameters as `key=value` pairs, for provenance lines.
  virtual std::string describe() const = 0;

  int optimal_arm(FeatureRow x) const;

  // n_per_arm rows per arm, arms interleaved (row i gets arm i mod K),
  // equal propensities.
  Dataset sample(Index n_per_arm, std::uint64_t seed) const;
};

// X1 ~ U[0,100], X2 uniform over {A,B,C}; arm 0 responds U[0,X1], arm 1
// responds 0.8 U[0,X1] + 5 on B and 1.2 U[0,X1] - 5 on A or C.
class TwoDModel final : public DataModel {
 public:
  TwoDModel();

  int n_arms() const override { return 2; }
  const FeatureSchema& schema() const override { return schema_; }
  void sample_features(Rng& rng, Eigen::Ref<Eigen::RowVectorXd> x) const override;
  double mean_response(FeatureRow x, int arm) const override;
  double sample_response(FeatureRow x, int arm, Rng& rng) const override;
  std::optional<double> exact_optimal_value() const override { return 26.25; }
  std::string describe() const override { return "model=2d"; }

 private:
  FeatureSchema schema_;
};

struct ArmValues {
  double single_arm;  // value of either constant policy
  double optimal;
};

// Closed-form policy values of the 2D model.
ArmValues oracle_2d_values();

struct HighDimConfig {
  int dimension = 50;
  int n_arms = 4;
  double effect_scale = 1.0;
  int n_components = 50;
  std::uint64_t mixture_seed = 20170901;
};

// X ~ U[0,10]^d; arm t responds f(X) + U[0, a X_t] + N(0, sigma^2), with f a
// seeded mixture of exponential bumps and sigma twice the mean effect size.
class HighDimModel final : public DataModel {
 public:
  explicit HighDimModel(HighDimConfig config = {});

  int n_arms() const override { return config_.n_arms; }
  const FeatureSchema& schema() const override { return schema_; }
  void sample_features(Rng& rng, Eigen::Ref<Eigen::RowVectorXd> x) const override;
  double mean_response(FeatureRow x, int arm) const override;
  double sample_response(FeatureRow x, int arm, Rng& rng) const override;
  std::string describe() const override;

  const HighDimConfig& config() const { return config_; }
  double baseline(FeatureRow x) const;  // f(x)
  double noise_sd() const;

 private:
  HighDimConfig config_;
  FeatureSchema schema_;
  Eigen::MatrixXd centers_;  // n_components x d
  Eigen::VectorXd amplitudes_;
  Eigen::VectorXd length_scales_;
};

struct OracleEstimate {
  double value = 0.0;
  double radius = 0.0;  // Monte Carlo standard error
};

// Monte Carlo estimate of E[mu(X, policy(X))] from mc_samples feature draws.
// When the model knows its optimal value and control_variate is set, the
// estimate is v* - mean(mu(X, h*(X)) - mu(X, policy(X))), which has the
// same expectation and far smaller variance for near-optimal policies.
OracleEstimate oracle_policy_value(const DataModel& model, const Policy& policy,
                                   Index mc_samples, std::uint64_t seed,
                                   bool control_variate = true);

}  // namespace uplift
