#pragma once

#include "uplift/model.hpp"
#include "uplift/synthetic.hpp"

#include <functional>
#include <ostream>
#include <span>
#include <vector>

namespace uplift {

enum class ValueMethod { kOracle, kIps };

struct PolicyValueReport {
  double value = 0.0;
  double std_error = 0.0;
  Index n_test = 0;
  ValueMethod method = ValueMethod::kIps;
};

// Inverse-propensity value of assigning arm assignments[i] to test row i:
// mean of y_i 1{a_i = t_i} / p_{t_i}, with the standard error of that mean.
PolicyValueReport ips_value(std::span<const int> assignments, const Dataset& test);
PolicyValueReport ips_value(const Policy& policy, const Dataset& test);

PolicyValueReport oracle_value(const Policy& policy, const DataModel& model,
                               Index mc_samples, std::uint64_t seed);

// Per-arm predicted responses for a feature vector.
using MuPredictor = std::function<Eigen::VectorXd(FeatureRow)>;

MuPredictor mu_predictor(const AnyModel& model);
Policy model_policy(const AnyModel& model);

struct MucCurve {
  int control = 0;
  std::vector<double> fractions;
  std::vector<double> values;
  std::vector<double> std_errors;
};

// Evenly spaced grid 0, 1/(points-1), ..., 1.
std::vector<double> uniform_grid(int points);

// Test rows ranked by predicted lift max_t mu(x,t) - mu(x,control)
// (descending, stable on row order); at fraction q the top floor(q n) rows
// follow the model's choice and the rest get control. Values by IPS.
MucCurve muc_curve(const MuPredictor& predict, const Dataset& test, int control,
                   std::span<const double> grid);

struct SweepOptions {
  Method method = Method::kUcts;
  ForestConfig forest;
  RegressionForestParams rf;
  std::vector<std::uint64_t> seeds;
  Index mc_samples = 200000;
  std::uint64_t mc_seed = 12345;
  int threads = 0;
};

struct SweepRow {
  Index n_per_arm = 0;
  double mean_value = 0.0;
  double ci_radius = 0.0;  // 1.96 x standard error across seeds
  double mean_regret = 0.0;
  int n_seeds = 0;
};

// For every size and seed: sample a training set, train, score by oracle.
// Returns one row per size. optimal_value is used for regret; when the
// model has no closed form it is estimated once with the same MC draws.
std::vector<SweepRow> regret_sweep(const DataModel& model, std::span<const Index> sizes,
                                   const SweepOptions& options);

void write_report_csv(std::ostream& out, const PolicyValueReport& report);
void write_curve_csv(std::ostream& out, const MucCurve& curve,
                     const std::vector<std::string>& arm_labels);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace uplift
