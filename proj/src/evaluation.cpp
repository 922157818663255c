#include "uplift/evaluation.hpp"

#include <cmath>
#include <numeric>

namespace uplift {

PolicyValueReport ips_value(std::span<const int> assignments, const Dataset& test) {
  const Index n = test.n();
  if (static_cast<Index>(assignments.size()) != n) {
    throw std::invalid_argument("one assignment per test row required");
  }
  const Eigen::VectorXd& p = test.propensities();
  Eigen::VectorXd terms(n);
  for (Index i = 0; i < n; ++i) {
    const int a = assignments[i];
    if (a < 0 || a >= test.n_arms()) throw std::out_of_range("assignment outside arms");
    if (!(p[a] > 0.0)) {
      throw DataError("treatment " + test.arm_labels()[a] + " has zero propensity");
    }
    terms[i] = a == test.treatment(i) ? test.response(i) / p[test.treatment(i)] : 0.0;
  }
  PolicyValueReport report;
  report.method = ValueMethod::kIps;
  report.n_test = n;
  report.value = terms.mean();
  if (n > 1) {
    const double var = (terms.array() - report.value).square().sum() / static_cast<double>(n - 1);
    report.std_error = std::sqrt(var / static_cast<double>(n));
  }
  return report;
}

PolicyValueReport ips_value(const Policy& policy, const Dataset& test) {
  std::vector<int> assignments(test.n());
  for (Index i = 0; i < test.n(); ++i) assignments[i] = policy(test.row(i));
  return ips_value(assignments, test);
}

PolicyValueReport oracle_value(const Policy& policy, const DataModel& model,
                               Index mc_samples, std::uint64_t seed) {
  const OracleEstimate est = oracle_policy_value(model, policy, mc_samples, seed);
  return {est.value, est.radius, mc_samples, ValueMethod::kOracle};
}

MuPredictor mu_predictor(const AnyModel& model) {
  return [&model](FeatureRow x) { return predict_mu(model, x); };
}

Policy model_policy(const AnyModel& model) {
  return [&model](FeatureRow x) { return select_treatment(model, x); };
}

std::vector<double> uniform_grid(int points) {
  if (points < 2) throw ConfigError("grid needs at least 2 points");
  std::vector<double> grid(points);
  for (int k = 0; k < points; ++k) grid[k] = static_cast<double>(k) / (points - 1);
  grid.back() = 1.0;
  return grid;
}

MucCurve muc_curve(const MuPredictor& predict, const Dataset& test, int control,
                   std::span<const double> grid) {
  if (control < 0 || control >= test.n_arms()) throw ConfigError("control arm out of range");
  if (grid.size() < 2 || grid.front() != 0.0 || grid.back() != 1.0) {
    throw ConfigError("grid must start at 0 and end at 1");
  }
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (!(grid[k] > grid[k - 1])) throw ConfigError("grid must be strictly increasing");
  }
  const Index n = test.n();
  std::vector<double> lift(n);
  std::vector<int> choice(n);
  for (Index i = 0; i < n; ++i) {
    const Eigen::VectorXd mu = predict(test.row(i));
    choice[i] = argmax_arm(mu);
    lift[i] = mu[choice[i]] - mu[control];
  }
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return lift[a] > lift[b]; });

  MucCurve curve;
  curve.control = control;
  std::vector<int> assignments(n);
  for (double q : grid) {
    const auto treated = static_cast<Index>(std::floor(q * static_cast<double>(n)));
    std::fill(assignments.begin(), assignments.end(), control);
    for (Index r = 0; r < treated; ++r) assignments[order[r]] = choice[order[r]];
    const PolicyValueReport report = ips_value(assignments, test);
    curve.fractions.push_back(q);
    curve.values.push_back(report.value);
    curve.std_errors.push_back(report.std_error);
  }
  return curve;
}

std::vector<SweepRow> regret_sweep(const DataModel& model, std::span<const Index> sizes,
                                   const SweepOptions& options) {
  if (sizes.empty()) throw ConfigError("sweep needs at least one size");
  if (options.seeds.size() < 2) throw ConfigError("sweep needs at least two seeds");

  double optimal = 0.0;
  if (auto exact = model.exact_optimal_value()) {
    optimal = *exact;
  } else {
    optimal = oracle_policy_value(model, [&](FeatureRow x) { return model.optimal_arm(x); },
                                  options.mc_samples, options.mc_seed)
                  .value;
  }

  std::vector<SweepRow> rows;
  for (Index n : sizes) {
    std::vector<double> values;
    for (std::uint64_t seed : options.seeds) {
      const Dataset train = model.sample(n, mix_seed(seed, static_cast<std::uint64_t>(n)));
      ForestConfig forest = options.forest;
      forest.seed = mix_seed(seed, 0x5eed);
      RegressionForestParams rf = options.rf;
      rf.seed = forest.seed;
      const AnyModel fitted = train_model(train, options.method, forest, rf, options.threads);
      values.push_back(oracle_policy_value(model, model_policy(fitted), options.mc_samples,
                                           options.mc_seed)
                           .value);
    }
    const auto s = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / s;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= s - 1.0;
    rows.push_back({n, mean, 1.96 * std::sqrt(var / s), optimal - mean,
                    static_cast<int>(values.size())});
  }
  return rows;
}

void write_report_csv(std::ostream& out, const PolicyValueReport& report) {
  out << "method,value,std_error,n_test\n"
      << (report.method == ValueMethod::kIps ? "ips" : "oracle") << ','
      << format_double(report.value) << ',' << format_double(report.std_error) << ','
      << report.n_test << '\n';
}

void write_curve_csv(std::ostream& out, const MucCurve& curve,
                     const std::vector<std::string>& arm_labels) {
  out << "control,fraction,value,std_error\n";
  for (std::size_t k = 0; k < curve.fractions.size(); ++k) {
    out << arm_labels.at(curve.control) << ',' << format_double(curve.fractions[k]) << ','
        << format_double(curve.values[k]) << ',' << format_double(curve.std_errors[k]) << '\n';
  }
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "n_per_treatment,mean_value,ci_radius,mean_regret,n_seeds\n";
  for (const SweepRow& r : rows) {
    out << r.n_per_arm << ',' << format_double(r.mean_value) << ','
        << format_double(r.ci_radius) << ',' << format_double(r.mean_regret) << ','
        << r.n_seeds << '\n';
  }
}

}  // namespace uplift
