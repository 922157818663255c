#include "uplift/synthetic.hpp"

#include <cmath>
#include <sstream>

namespace uplift {

int DataModel::optimal_arm(FeatureRow x) const {
  Eigen::VectorXd mu(n_arms());
  for (int t = 0; t < n_arms(); ++t) mu[t] = mean_response(x, t);
  return argmax_arm(mu);
}

Dataset DataModel::sample(Index n_per_arm, std::uint64_t seed) const {
  if (n_per_arm < 1) throw ConfigError("need at least one sample per treatment");
  const int k = n_arms();
  const Index n = n_per_arm * k;
  Rng rng(seed);
  Eigen::MatrixXd features(n, schema().size());
  std::vector<int> treatments(n);
  Eigen::VectorXd responses(n);
  Eigen::RowVectorXd x(schema().size());
  for (Index i = 0; i < n; ++i) {
    sample_features(rng, x);
    features.row(i) = x;
    treatments[i] = static_cast<int>(i % k);
    responses[i] = sample_response(x, treatments[i], rng);
  }
  std::vector<std::string> labels;
  for (int t = 0; t < k; ++t) labels.push_back(std::to_string(t + 1));
  return Dataset(schema(), std::move(features), std::move(treatments), std::move(responses),
                 Eigen::VectorXd::Constant(k, 1.0 / k), std::move(labels));
}

TwoDModel::TwoDModel()
    : schema_({Column{"x1", ColumnKind::kNumeric, {}},
               Column{"x2", ColumnKind::kCategorical, {"A", "B", "C"}}}) {}

void TwoDModel::sample_features(Rng& rng, Eigen::Ref<Eigen::RowVectorXd> x) const {
  std::uniform_real_distribution<double> x1(0.0, 100.0);
  std::uniform_int_distribution<int> x2(0, 2);
  x[0] = x1(rng);
  x[1] = x2(rng);
}

namespace {
constexpr int kLevelB = 1;
}

double TwoDModel::mean_response(FeatureRow x, int arm) const {
  const double half = x[0] / 2.0;
  if (arm == 0) return half;
  if (static_cast<int>(x[1]) == kLevelB) return 0.8 * half + 5.0;
  return 1.2 * half - 5.0;
}

double TwoDModel::sample_response(FeatureRow x, int arm, Rng& rng) const {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double draw = u(rng) * x[0];
  if (arm == 0) return draw;
  if (static_cast<int>(x[1]) == kLevelB) return 0.8 * draw + 5.0;
  return 1.2 * draw - 5.0;
}

ArmValues oracle_2d_values() {
  // Fixed arms: E[X1/2] = 25; arm 1 gives 0.4*50 + 5 on B and 0.6*50 - 5
  // on A/C, both 25. Optimal: arms cross at X1 = 50 on every level.
  //   B:   (int_0^50 (0.4x+5) dx + int_50^100 x/2 dx) / 100 = (750 + 1875) / 100
  //   A/C: (int_0^50 x/2 dx + int_50^100 (0.6x-5) dx) / 100 = (625 + 2000) / 100
  const double on_b = (0.2 * 50 * 50 + 5.0 * 50 + 0.25 * (100.0 * 100 - 50.0 * 50)) / 100.0;
  const double on_ac = (0.25 * 50 * 50 + 0.3 * (100.0 * 100 - 50.0 * 50) - 5.0 * 50) / 100.0;
  return {25.0, on_b / 3.0 + 2.0 * on_ac / 3.0};
}

HighDimModel::HighDimModel(HighDimConfig config) : config_(config) {
  if (config_.n_arms < 1 || config_.dimension < config_.n_arms) {
    throw ConfigError("high-dimensional model needs dimension >= number of arms >= 1");
  }
  if (config_.n_components < 0) throw ConfigError("n_components must be >= 0");
  if (!(config_.effect_scale >= 0.0)) throw ConfigError("effect_scale must be >= 0");
  std::vector<Column> columns;
  for (int j = 0; j < config_.dimension; ++j) {
    columns.push_back(Column{"x" + std::to_string(j + 1), ColumnKind::kNumeric, {}});
  }
  schema_ = FeatureSchema(std::move(columns));

  Rng rng(config_.mixture_seed);
  std::uniform_real_distribution<double> coord(0.0, 10.0);
  std::uniform_real_distribution<double> amplitude(0.5, 1.5);
  std::uniform_real_distribution<double> scale(8.0, 16.0);
  centers_.resize(config_.n_components, config_.dimension);
  amplitudes_.resize(config_.n_components);
  length_scales_.resize(config_.n_components);
  for (int i = 0; i < config_.n_components; ++i) {
    for (int j = 0; j < config_.dimension; ++j) centers_(i, j) = coord(rng);
    amplitudes_[i] = amplitude(rng);
    length_scales_[i] = scale(rng);
  }
}

void HighDimModel::sample_features(Rng& rng, Eigen::Ref<Eigen::RowVectorXd> x) const {
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (Index j = 0; j < x.size(); ++j) x[j] = u(rng);
}

double HighDimModel::baseline(FeatureRow x) const {
  double f = 0.0;
  for (int i = 0; i < config_.n_components; ++i) {
    const double dist = (centers_.row(i) - x).norm();
    f += amplitudes_[i] * std::exp(-dist / length_scales_[i]);
  }
  return f;
}

double HighDimModel::noise_sd() const {
  // Mean effect E[U[0, a X_t]] = a * E[X_t] / 2 = 2.5 a.
  return 2.0 * config_.effect_scale * 2.5;
}

double HighDimModel::mean_response(FeatureRow x, int arm) const {
  return baseline(x) + config_.effect_scale * x[arm] / 2.0;
}

double HighDimModel::sample_response(FeatureRow x, int arm, Rng& rng) const {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, noise_sd());
  const double effect = u(rng) * config_.effect_scale * x[arm];
  return baseline(x) + effect + noise(rng);
}

std::string HighDimModel::describe() const {
  std::ostringstream out;
  out << "model=50d dimension=" << config_.dimension << " arms=" << config_.n_arms
      << " effect_scale=" << format_double(config_.effect_scale)
      << " components=" << config_.n_components << " mixture_seed=" << config_.mixture_seed
      << " noise_sd=" << format_double(noise_sd());
  return out.str();
}

OracleEstimate oracle_policy_value(const DataModel& model, const Policy& policy,
                                   Index mc_samples, std::uint64_t seed,
                                   bool control_variate) {
  if (mc_samples < 1) throw ConfigError("mc_samples must be >= 1");
  const auto optimum = control_variate ? model.exact_optimal_value() : std::nullopt;
  Rng rng(seed);
  Eigen::RowVectorXd x(model.schema().size());
  // Welford accumulation of the per-draw summand.
  double mean = 0.0;
  double m2 = 0.0;
  for (Index s = 0; s < mc_samples; ++s) {
    model.sample_features(rng, x);
    const int arm = policy(x);
    if (arm < 0 || arm >= model.n_arms()) throw std::out_of_range("policy returned invalid arm");
    double v = model.mean_response(x, arm);
    if (optimum) v -= model.mean_response(x, model.optimal_arm(x));
    const double delta = v - mean;
    mean += delta / static_cast<double>(s + 1);
    m2 += delta * (v - mean);
  }
  OracleEstimate out;
  out.value = optimum ? *optimum + mean : mean;
  out.radius = mc_samples > 1
                   ? std::sqrt(m2 / static_cast<double>(mc_samples - 1) /
                               static_cast<double>(mc_samples))
                   : 0.0;
  return out;
}

}  // namespace uplift
