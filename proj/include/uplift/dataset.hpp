#pragma once

#include "uplift/common.hpp"
#include "uplift/csv.hpp"

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace uplift {

enum class ColumnKind { kNumeric, kCategorical };

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::kNumeric;
  // Level names for categorical columns; a level's code is its position.
  std::vector<std::string> levels;

  int cardinality() const { return static_cast<int>(levels.size()); }
  bool categorical() const { return kind == ColumnKind::kCategorical; }
  bool operator==(const Column&) const = default;
};

// Category subsets are stored as 64-bit masks.
inline constexpr int kMaxCategoricalLevels = 64;

class FeatureSchema {
 public:
  FeatureSchema() = default;
  explicit FeatureSchema(std::vector<Column> columns);

  // Sidecar format: one `name=numeric` or `name=categorical:v1,v2,...` per line.
  static FeatureSchema parse(std::istream& in);
  static FeatureSchema read_file(const std::string& path);
  std::string to_text() const;

  int size() const { return static_cast<int>(columns_.size()); }
  const Column& column(int j) const { return columns_.at(j); }
  const std::vector<Column>& columns() const { return columns_; }
  int index_of(const std::string& name) const;

  // Level code for `level` in categorical column j; throws DataError.
  int level_code(int j, const std::string& level) const;

  bool operator==(const FeatureSchema&) const = default;

 private:
  std::vector<Column> columns_;
};

// Throws DataError unless x has one finite entry per column and every
// categorical entry is an integral code inside the declared cardinality.
void check_point(const FeatureSchema& schema, FeatureRow x);

// Randomized-experiment sample. Arms are dense 0..K-1 internally;
// arm_labels keeps the external treatment ids in arm order.
class Dataset {
 public:
  Dataset(FeatureSchema schema, Eigen::MatrixXd features,
          std::vector<int> treatments, Eigen::VectorXd responses,
          Eigen::VectorXd propensities, std::vector<std::string> arm_labels);

  const FeatureSchema& schema() const { return schema_; }
  const Eigen::MatrixXd& features() const { return features_; }
  const std::vector<int>& treatments() const { return treatments_; }
  const Eigen::VectorXd& responses() const { return responses_; }
  const Eigen::VectorXd& propensities() const { return propensities_; }
  const std::vector<std::string>& arm_labels() const { return arm_labels_; }

  Index n() const { return features_.rows(); }
  int d() const { return schema_.size(); }
  int n_arms() const { return static_cast<int>(propensities_.size()); }

  auto row(Index i) const { return features_.row(i); }
  double feature(Index i, int j) const { return features_(i, j); }
  int treatment(Index i) const { return treatments_[i]; }
  double response(Index i) const { return responses_[i]; }

  std::vector<Index> arm_counts() const;

  // Copy with responses replaced (same length).
  Dataset with_responses(Eigen::VectorXd responses) const;
  // Rows in `indices`, in that order.
  Dataset subset(const std::vector<Index>& indices) const;

 private:
  FeatureSchema schema_;
  Eigen::MatrixXd features_;
  std::vector<int> treatments_;
  Eigen::VectorXd responses_;
  Eigen::VectorXd propensities_;
  std::vector<std::string> arm_labels_;
};

// Treatment labels in canonical arm order: numeric order when every label
// parses as an integer, lexicographic otherwise.
std::vector<std::string> sort_arm_labels(std::vector<std::string> labels);

// Parses `1=0.5,2=0.5`.
std::map<std::string, double> parse_propensities(const std::string& text);

// Builds a Dataset from a parsed CSV with `treatment` and `response`
// columns plus one column per schema entry (matched by name). When
// propensities are omitted the empirical arm frequencies are used.
Dataset validate_dataset(
    const RawTable& raw, const FeatureSchema& schema,
    const std::optional<std::map<std::string, double>>& propensities = {});

// Feature matrix only (prediction input); treatment/response columns are
// ignored if present.
Eigen::MatrixXd read_features(const RawTable& raw, const FeatureSchema& schema);

void write_dataset_csv(std::ostream& out, const Dataset& data);

struct DataSplit {
  std::vector<Index> approximation;  // sorted ascending
  std::vector<Index> estimation;     // sorted ascending
};

// round-half-up(rho * n_t) rows of every arm go to the approximation set,
// clamped to [1, n_t - 1] so both sets see every arm.
Index approximation_count(double rho, Index arm_count);

DataSplit stratified_split(const Dataset& data, double rho, std::uint64_t seed);

}  // namespace uplift
