#pragma once

#include "uplift/baselines.hpp"
#include "uplift/forest.hpp"

#include <string>
#include <string_view>
#include <variant>

namespace uplift {

using AnyModel = std::variant<UpliftForest, SmaModel>;

inline constexpr int kModelFormatVersion = 1;

Method model_method(const AnyModel& model);
const FeatureSchema& model_schema(const AnyModel& model);
const std::vector<std::string>& model_arm_labels(const AnyModel& model);
Eigen::VectorXd predict_mu(const AnyModel& model, FeatureRow x);
int select_treatment(const AnyModel& model, FeatureRow x);

// Trains the requested method; `forest` applies to UCTS/CTS, `rf` to SMA.
AnyModel train_model(const Dataset& data, Method method, const ForestConfig& forest,
                     const RegressionForestParams& rf, int threads = 0);

// Versioned, line-oriented text with an FNV-1a checksum over the body.
std::string serialize(const UpliftForest& forest);
std::string serialize(const SmaModel& model);
std::string serialize(const AnyModel& model);

// Throws DataError on empty, truncated, corrupted or wrong-version input.
AnyModel deserialize(std::string_view text);
UpliftForest deserialize_forest(std::string_view text);

void save_model(const AnyModel& model, const std::string& path);
AnyModel load_model(const std::string& path);

}  // namespace uplift
