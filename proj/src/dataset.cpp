#include "uplift/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace uplift {
namespace {

bool parse_integer(const std::string& s, long long& out) {
  const auto result = std::from_chars(s.data(), s.data() + s.size(), out);
  return !s.empty() && result.ec == std::errc() &&
         result.ptr == s.data() + s.size();
}

}  // namespace

FeatureSchema::FeatureSchema(std::vector<Column> columns)
    : columns_(std::move(columns)) {
  std::set<std::string> names;
  for (const Column& c : columns_) {
    if (c.name.empty()) throw DataError("schema: empty column name");
    if (c.name == "treatment" || c.name == "response") {
      throw DataError("schema: reserved column name '" + c.name + "'");
    }
    if (!names.insert(c.name).second) {
      throw DataError("schema: duplicate column '" + c.name + "'");
    }
    if (c.categorical()) {
      if (c.levels.empty()) {
        throw DataError("schema: categorical column '" + c.name +
                        "' needs at least one level");
      }
      if (c.cardinality() > kMaxCategoricalLevels) {
        throw DataError("schema: column '" + c.name + "' has more than " +
                        std::to_string(kMaxCategoricalLevels) + " levels");
      }
      for (const std::string& level : c.levels) {
        if (level.empty()) throw DataError("schema: empty level name in column '" + c.name + "'");
      }
      std::set<std::string> levels(c.levels.begin(), c.levels.end());
      if (levels.size() != c.levels.size()) {
        throw DataError("schema: duplicate level in column '" + c.name + "'");
      }
    } else if (!c.levels.empty()) {
      throw DataError("schema: numeric column '" + c.name + "' has levels");
    }
  }
}

FeatureSchema FeatureSchema::parse(std::istream& in) {
  std::vector<Column> columns;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError("schema: expected name=kind, got '" + line + "'");
    }
    Column c;
    c.name = split_fields(line.substr(0, eq)).front();
    const std::string kind = split_fields(line.substr(eq + 1), '\n').front();
    if (kind == "numeric") {
      c.kind = ColumnKind::kNumeric;
    } else if (kind.rfind("categorical:", 0) == 0) {
      c.kind = ColumnKind::kCategorical;
      c.levels = split_fields(kind.substr(12));
    } else {
      throw DataError("schema: unknown kind '" + kind + "' for column '" +
                      c.name + "'");
    }
    columns.push_back(std::move(c));
  }
  return FeatureSchema(std::move(columns));
}

FeatureSchema FeatureSchema::read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open schema " + path);
  return parse(in);
}

std::string FeatureSchema::to_text() const {
  std::ostringstream out;
  for (const Column& c : columns_) {
    out << c.name << '=';
    if (c.categorical()) {
      out << "categorical:";
      for (int k = 0; k < c.cardinality(); ++k) {
        out << (k ? "," : "") << c.levels[k];
      }
    } else {
      out << "numeric";
    }
    out << '\n';
  }
  return out.str();
}

int FeatureSchema::index_of(const std::string& name) const {
  for (int j = 0; j < size(); ++j) {
    if (columns_[j].name == name) return j;
  }
  return -1;
}

int FeatureSchema::level_code(int j, const std::string& level) const {
  const Column& c = column(j);
  for (int k = 0; k < c.cardinality(); ++k) {
    if (c.levels[k] == level) return k;
  }
  throw DataError("unknown level '" + level + "' in column '" + c.name + "'");
}

void check_point(const FeatureSchema& schema, FeatureRow x) {
  if (x.size() != schema.size()) {
    throw DataError("feature vector has " + std::to_string(x.size()) +
                    " entries, schema has " + std::to_string(schema.size()));
  }
  for (int j = 0; j < schema.size(); ++j) {
    const double v = x[j];
    const Column& c = schema.column(j);
    if (!std::isfinite(v)) {
      throw DataError("non-finite value in column '" + c.name + "'");
    }
    if (c.categorical() &&
        (v != std::floor(v) || v < 0 || v >= c.cardinality())) {
      throw DataError("categorical code " + format_double(v) +
                      " outside column '" + c.name + "'");
    }
  }
}

Dataset::Dataset(FeatureSchema schema, Eigen::MatrixXd features,
                 std::vector<int> treatments, Eigen::VectorXd responses,
                 Eigen::VectorXd propensities,
                 std::vector<std::string> arm_labels)
    : schema_(std::move(schema)),
      features_(std::move(features)),
      treatments_(std::move(treatments)),
      responses_(std::move(responses)),
      propensities_(std::move(propensities)),
      arm_labels_(std::move(arm_labels)) {
  const Index n = features_.rows();
  if (n < 1) throw DataError("dataset is empty");
  if (features_.cols() != schema_.size()) {
    throw DataError("feature matrix width does not match schema");
  }
  if (static_cast<Index>(treatments_.size()) != n || responses_.size() != n) {
    throw DataError("features, treatments and responses differ in length");
  }
  const int k = static_cast<int>(propensities_.size());
  if (k < 1) throw DataError("no treatments declared");
  if (arm_labels_.empty()) {
    for (int t = 0; t < k; ++t) arm_labels_.push_back(std::to_string(t + 1));
  }
  if (static_cast<int>(arm_labels_.size()) != k) {
    throw DataError("arm label count does not match propensities");
  }
  if ((propensities_.array() <= 0.0).any() ||
      std::abs(propensities_.sum() - 1.0) > 1e-9) {
    throw DataError("propensities must be positive and sum to 1");
  }
  for (Index i = 0; i < n; ++i) {
    if (treatments_[i] < 0 || treatments_[i] >= k) {
      throw DataError("row " + std::to_string(i) + ": treatment out of range");
    }
    if (!std::isfinite(responses_[i])) {
      throw DataError("row " + std::to_string(i) + ": non-finite response");
    }
    check_point(schema_, features_.row(i));
  }
}

std::vector<Index> Dataset::arm_counts() const {
  std::vector<Index> counts(n_arms(), 0);
  for (int t : treatments_) ++counts[t];
  return counts;
}

Dataset Dataset::with_responses(Eigen::VectorXd responses) const {
  return Dataset(schema_, features_, treatments_, std::move(responses),
                 propensities_, arm_labels_);
}

Dataset Dataset::subset(const std::vector<Index>& indices) const {
  Eigen::MatrixXd f(static_cast<Index>(indices.size()), features_.cols());
  std::vector<int> t(indices.size());
  Eigen::VectorXd y(static_cast<Index>(indices.size()));
  for (std::size_t r = 0; r < indices.size(); ++r) {
    f.row(static_cast<Index>(r)) = features_.row(indices[r]);
    t[r] = treatments_[indices[r]];
    y[static_cast<Index>(r)] = responses_[indices[r]];
  }
  return Dataset(schema_, std::move(f), std::move(t), std::move(y),
                 propensities_, arm_labels_);
}

std::vector<std::string> sort_arm_labels(std::vector<std::string> labels) {
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  const bool numeric = std::all_of(labels.begin(), labels.end(), [](auto& s) {
    long long v;
    return parse_integer(s, v);
  });
  if (numeric) {
    std::sort(labels.begin(), labels.end(), [](auto& a, auto& b) {
      long long x = 0, y = 0;
      parse_integer(a, x);
      parse_integer(b, y);
      return x < y;
    });
  }
  return labels;
}

std::map<std::string, double> parse_propensities(const std::string& text) {
  std::map<std::string, double> out;
  for (const std::string& item : split_fields(text)) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("propensity entry '" + item + "' is not label=value");
    }
    const std::string label = split_fields(item.substr(0, eq)).front();
    if (!out.emplace(label, parse_double(item.substr(eq + 1))).second) {
      throw ConfigError("duplicate propensity for treatment " + label);
    }
  }
  return out;
}

namespace {

std::vector<int> feature_columns(const RawTable& raw, const FeatureSchema& schema) {
  std::vector<int> cols(schema.size());
  for (int j = 0; j < schema.size(); ++j) {
    cols[j] = raw.column(schema.column(j).name);
    if (cols[j] < 0) {
      throw DataError("CSV is missing column '" + schema.column(j).name + "'");
    }
  }
  return cols;
}

double parse_cell(const FeatureSchema& schema, int j, const std::string& cell,
                  std::size_t row) {
  if (schema.column(j).categorical()) return schema.level_code(j, cell);
  const double v = parse_double(cell);
  if (!std::isfinite(v)) {
    throw DataError("row " + std::to_string(row) + ": non-finite value in '" +
                    schema.column(j).name + "'");
  }
  return v;
}

}  // namespace

Eigen::MatrixXd read_features(const RawTable& raw, const FeatureSchema& schema) {
  Eigen::MatrixXd features(static_cast<Index>(raw.rows.size()), schema.size());
  if (raw.header.empty()) return features;
  const auto cols = feature_columns(raw, schema);
  for (std::size_t i = 0; i < raw.rows.size(); ++i) {
    for (int j = 0; j < schema.size(); ++j) {
      features(static_cast<Index>(i), j) =
          parse_cell(schema, j, raw.rows[i][cols[j]], i);
    }
  }
  return features;
}

Dataset validate_dataset(
    const RawTable& raw, const FeatureSchema& schema,
    const std::optional<std::map<std::string, double>>& propensities) {
  if (raw.rows.empty()) throw DataError("table has no rows");
  const int tcol = raw.column("treatment");
  const int ycol = raw.column("response");
  if (tcol < 0) throw DataError("CSV is missing column 'treatment'");
  if (ycol < 0) throw DataError("CSV is missing column 'response'");

  std::vector<std::string> labels;
  if (propensities) {
    for (const auto& [label, p] : *propensities) labels.push_back(label);
  } else {
    for (const auto& row : raw.rows) labels.push_back(row[tcol]);
  }
  labels = sort_arm_labels(std::move(labels));
  std::map<std::string, int> arm_of;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    arm_of[labels[t]] = static_cast<int>(t);
  }

  const Index n = static_cast<Index>(raw.rows.size());
  std::vector<int> treatments(n);
  Eigen::VectorXd responses(n);
  for (Index i = 0; i < n; ++i) {
    const auto& row = raw.rows[i];
    const auto it = arm_of.find(row[tcol]);
    if (it == arm_of.end()) {
      throw DataError("row " + std::to_string(i) + ": unknown treatment '" +
                      row[tcol] + "'");
    }
    treatments[i] = it->second;
    responses[i] = parse_double(row[ycol]);
    if (!std::isfinite(responses[i])) {
      throw DataError("row " + std::to_string(i) + ": non-finite response");
    }
  }

  Eigen::VectorXd p(static_cast<Index>(labels.size()));
  if (propensities) {
    for (std::size_t t = 0; t < labels.size(); ++t) {
      p[static_cast<Index>(t)] = propensities->at(labels[t]);
    }
  } else {
    p.setZero();
    for (int t : treatments) p[t] += 1.0;
    p /= static_cast<double>(n);
  }
  return Dataset(schema, read_features(raw, schema), std::move(treatments),
                 std::move(responses), std::move(p), std::move(labels));
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  const FeatureSchema& schema = data.schema();
  for (int j = 0; j < schema.size(); ++j) out << schema.column(j).name << ',';
  out << "treatment,response\n";
  for (Index i = 0; i < data.n(); ++i) {
    for (int j = 0; j < schema.size(); ++j) {
      const Column& c = schema.column(j);
      const double v = data.feature(i, j);
      if (c.categorical()) {
        out << c.levels[static_cast<std::size_t>(v)];
      } else {
        out << format_double(v);
      }
      out << ',';
    }
    out << data.arm_labels()[data.treatment(i)] << ','
        << format_double(data.response(i)) << '\n';
  }
}

Index approximation_count(double rho, Index arm_count) {
  const auto rounded = static_cast<Index>(std::floor(rho * arm_count + 0.5));
  return std::clamp<Index>(rounded, 1, arm_count - 1);
}

DataSplit stratified_split(const Dataset& data, double rho, std::uint64_t seed) {
  if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("rho must lie in (0, 1)");
  std::vector<std::vector<Index>> by_arm(data.n_arms());
  for (Index i = 0; i < data.n(); ++i) by_arm[data.treatment(i)].push_back(i);

  Rng rng(seed);
  DataSplit split;
  for (int t = 0; t < data.n_arms(); ++t) {
    auto& rows = by_arm[t];
    if (rows.size() < 2) {
      throw DataError("treatment " + data.arm_labels()[t] +
                      " has fewer than 2 samples; cannot split");
    }
    const Index take = approximation_count(rho, static_cast<Index>(rows.size()));
    // Partial Fisher-Yates: the first `take` slots become a uniform sample.
    for (Index k = 0; k < take; ++k) {
      std::uniform_int_distribution<Index> pick(k, static_cast<Index>(rows.size()) - 1);
      std::swap(rows[k], rows[pick(rng)]);
    }
    split.approximation.insert(split.approximation.end(), rows.begin(),
                               rows.begin() + take);
    split.estimation.insert(split.estimation.end(), rows.begin() + take,
                            rows.end());
  }
  std::sort(split.approximation.begin(), split.approximation.end());
  std::sort(split.estimation.begin(), split.estimation.end());
  return split;
}

}  // namespace uplift
