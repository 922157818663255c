#include "uplift/cli.hpp"

#include "uplift/evaluation.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <map>
#include <memory>
#include <sstream>

namespace uplift::cli {
namespace {

struct Options {
  // shared
  std::string data, schema, out, model_path, summary, propensities, config;
  std::uint64_t seed = 0;
  int threads = 0;
  // simulate / oracle models
  std::string generator = "2d";
  Index n_per_arm = 1000;
  double effect_scale = 1.0;
  int dimension = 50;
  int components = 50;
  std::uint64_t mixture_seed = HighDimConfig{}.mixture_seed;
  // training
  std::string method = "ucts";
  int ntree = 100;
  double rho = 0.5;
  int mtry = 0;
  double pi = 0.05;
  int min_split = 80;
  double n_reg = 0.0;
  double alpha = 0.1;
  int rf_ntree = 100;
  int rf_mtry = 0;
  int rf_min_leaf = 5;
  // evaluation
  std::string oracle;
  std::string control;
  int grid = 11;
  Index mc_samples = 200000;
  std::string sizes = "250,1000,4000";
  int n_seeds = 10;
};

std::unique_ptr<DataModel> make_generator(const Options& o) {
  if (o.generator == "2d") return std::make_unique<TwoDModel>();
  if (o.generator == "50d") {
    HighDimConfig c;
    c.dimension = o.dimension;
    c.effect_scale = o.effect_scale;
    c.n_components = o.components;
    c.mixture_seed = o.mixture_seed;
    return std::make_unique<HighDimModel>(c);
  }
  throw ConfigError("unknown data model '" + o.generator + "' (expected 2d or 50d)");
}

ForestConfig forest_config(const Options& o, int d) {
  ForestConfig c;
  c.ntree = o.ntree;
  c.rho = o.rho;
  c.seed = o.seed;
  c.growth.min_split = o.min_split;
  c.growth.n_reg = o.n_reg;
  c.growth.alpha = o.alpha;
  c.growth.pi = o.pi;
  c.growth.mtry = o.mtry > 0 ? o.mtry : std::max(1, (d + 1) / 2);
  return c;
}

RegressionForestParams rf_params(const Options& o) {
  RegressionForestParams p;
  p.ntree = o.rf_ntree;
  p.mtry = o.rf_mtry;
  p.min_leaf = o.rf_min_leaf;
  p.seed = o.seed;
  return p;
}

// Range checks that do not depend on the data.
void check_training_ranges(const Options& o) {
  parse_method(o.method);
  if (o.ntree < 1) throw ConfigError("ntree must be a positive integer");
  if (!(o.rho > 0.0 && o.rho < 1.0)) throw ConfigError("rho must lie in (0, 1)");
  if (o.mtry < 0) throw ConfigError("mtry must be positive");
  if (!(o.pi > 0.0 && o.pi < 1.0)) throw ConfigError("pi must lie in (0, 1)");
  if (o.min_split < 1) throw ConfigError("min_split must be a positive integer");
  if (!(o.n_reg >= 0.0)) throw ConfigError("n_reg must be >= 0");
  if (!(o.alpha > 0.0 && o.alpha < 0.5)) throw ConfigError("alpha must lie in (0, 0.5)");
  if (o.rf_ntree < 1 || o.rf_min_leaf < 1 || o.rf_mtry < 0) {
    throw ConfigError("regression forest parameters must be positive");
  }
}

std::string default_schema_path(const std::string& csv) { return csv + ".schema"; }

std::optional<std::map<std::string, double>> propensities(const Options& o) {
  if (o.propensities.empty()) return std::nullopt;
  return parse_propensities(o.propensities);
}

Dataset load_dataset(const Options& o, const FeatureSchema& schema) {
  return validate_dataset(read_csv_file(o.data), schema, propensities(o));
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  return out;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw ConfigError(std::string("missing required option ") + flag);
}

int find_arm(const std::vector<std::string>& labels, const std::string& label) {
  for (std::size_t t = 0; t < labels.size(); ++t) {
    if (labels[t] == label) return static_cast<int>(t);
  }
  throw ConfigError("unknown treatment '" + label + "'");
}

void cmd_simulate(const Options& o) {
  require(o.out, "--out");
  const auto generator = make_generator(o);
  const Dataset data = generator->sample(o.n_per_arm, o.seed);
  auto out = open_out(o.out);
  out << "# " << generator->describe() << " n_per_treatment=" << o.n_per_arm
      << " seed=" << o.seed << '\n';
  write_dataset_csv(out, data);
  auto schema_out = open_out(o.schema.empty() ? default_schema_path(o.out) : o.schema);
  schema_out << data.schema().to_text();
}

void write_summary(std::ostream& out, const AnyModel& model) {
  out << "record,key,value\n";
  if (const auto* forest = std::get_if<UpliftForest>(&model)) {
    std::map<int, Index> leaf_depths;
    for (std::size_t b = 0; b < forest->trees().size(); ++b) {
      const UpliftTree& tree = forest->trees()[b];
      out << "leaves," << b << ',' << tree.leaf_count() << '\n';
      out << "max_depth," << b << ',' << tree.max_depth() << '\n';
      for (const TreeNode& n : tree.nodes()) {
        if (n.is_leaf()) ++leaf_depths[n.depth];
      }
    }
    for (const auto& [depth, count] : leaf_depths) {
      out << "leaf_depth," << depth << ',' << count << '\n';
    }
    return;
  }
  const auto& sma = std::get<SmaModel>(model);
  for (int t = 0; t < sma.n_arms(); ++t) {
    const auto& trees = sma.arms()[t].trees();
    for (std::size_t b = 0; b < trees.size(); ++b) {
      Index leaves = 0;
      for (const auto& n : trees[b].nodes()) leaves += n.is_leaf();
      out << "leaves," << sma.arm_labels()[t] << '/' << b << ',' << leaves << '\n';
    }
  }
}

void cmd_train(const Options& o) {
  require(o.data, "--data");
  require(o.out, "--out");
  check_training_ranges(o);
  const FeatureSchema schema =
      FeatureSchema::read_file(o.schema.empty() ? default_schema_path(o.data) : o.schema);
  const Method method = parse_method(o.method);
  const ForestConfig config = forest_config(o, schema.size());
  if (method == Method::kSma) {
    rf_params(o).validate(schema.size());
  } else {
    config.validate(schema.size());
  }
  const Dataset data = load_dataset(o, schema);
  const AnyModel model = train_model(data, method, config, rf_params(o), o.threads);
  save_model(model, o.out);
  auto summary = open_out(o.summary.empty() ? o.out + ".summary.csv" : o.summary);
  write_summary(summary, model);
}

void cmd_predict(const Options& o) {
  require(o.model_path, "--model");
  require(o.data, "--data");
  require(o.out, "--out");
  const AnyModel model = load_model(o.model_path);
  const auto& labels = model_arm_labels(model);
  const Eigen::MatrixXd features = read_features(read_csv_file(o.data), model_schema(model));
  auto out = open_out(o.out);
  out << "row";
  for (const auto& label : labels) out << ",mu_" << label;
  out << ",treatment\n";
  for (Index i = 0; i < features.rows(); ++i) {
    const Eigen::VectorXd mu = predict_mu(model, features.row(i));
    out << i;
    for (Index t = 0; t < mu.size(); ++t) out << ',' << format_double(mu[t]);
    out << ',' << labels[argmax_arm(mu)] << '\n';
  }
}

void cmd_evaluate(const Options& o) {
  require(o.model_path, "--model");
  require(o.out, "--out");
  const AnyModel model = load_model(o.model_path);
  PolicyValueReport report;
  if (!o.oracle.empty()) {
    Options gen = o;
    gen.generator = o.oracle;
    const auto generator = make_generator(gen);
    if (!(generator->schema() == model_schema(model))) {
      throw DataError("model schema does not match the " + o.oracle + " data model");
    }
    report = oracle_value(model_policy(model), *generator, o.mc_samples, o.seed);
  } else {
    require(o.data, "--data");
    const Dataset test = load_dataset(o, model_schema(model));
    if (test.arm_labels() != model_arm_labels(model)) {
      throw DataError("test treatments do not match the model's treatments");
    }
    report = ips_value(model_policy(model), test);
  }
  auto out = open_out(o.out);
  write_report_csv(out, report);
}

void cmd_muc(const Options& o) {
  require(o.model_path, "--model");
  require(o.data, "--data");
  require(o.out, "--out");
  const AnyModel model = load_model(o.model_path);
  const Dataset test = load_dataset(o, model_schema(model));
  if (test.arm_labels() != model_arm_labels(model)) {
    throw DataError("test treatments do not match the model's treatments");
  }
  const int control = o.control.empty() ? 0 : find_arm(test.arm_labels(), o.control);
  const auto grid = uniform_grid(o.grid);
  const MucCurve curve = muc_curve(mu_predictor(model), test, control, grid);
  auto out = open_out(o.out);
  write_curve_csv(out, curve, test.arm_labels());
}

void cmd_sweep(const Options& o) {
  require(o.out, "--out");
  check_training_ranges(o);
  if (o.n_seeds < 2) throw ConfigError("sweep needs --seeds >= 2");
  const auto generator = make_generator(o);
  std::vector<Index> sizes;
  for (const auto& s : split_fields(o.sizes)) {
    const double v = parse_double(s);
    if (!(v >= 1) || v != std::floor(v)) throw ConfigError("bad size '" + s + "'");
    sizes.push_back(static_cast<Index>(v));
  }
  SweepOptions opts;
  opts.method = parse_method(o.method);
  opts.forest = forest_config(o, generator->schema().size());
  opts.forest.validate(generator->schema().size());
  opts.rf = rf_params(o);
  opts.mc_samples = o.mc_samples;
  opts.mc_seed = mix_seed(o.seed, 0xc0ffee);
  opts.threads = o.threads;
  for (int r = 0; r < o.n_seeds; ++r) opts.seeds.push_back(mix_seed(o.seed, static_cast<std::uint64_t>(r)));
  const auto rows = regret_sweep(*generator, sizes, opts);
  auto out = open_out(o.out);
  write_sweep_csv(out, rows);
}

// `--config file` lines (key=value) become flags placed before the user's
// own flags, so flags on the command line win.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> expanded;
  std::vector<std::string> injected;
  for (std::size_t k = 0; k < args.size(); ++k) {
    if (args[k] == "--config" || args[k].rfind("--config=", 0) == 0) {
      std::string path;
      if (args[k] == "--config") {
        if (k + 1 >= args.size()) throw ConfigError("--config needs a file");
        path = args[++k];
      } else {
        path = args[k].substr(9);
      }
      std::ifstream in(path);
      if (!in) throw ConfigError("cannot open config " + path);
      for (std::string line; std::getline(in, line);) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config line '" + line + "' is not key=value");
        std::string key = split_fields(line.substr(0, eq)).front();
        std::replace(key.begin(), key.end(), '_', '-');
        injected.push_back("--" + key);
        injected.push_back(split_fields(line.substr(eq + 1), '\n').front());
      }
      continue;
    }
    expanded.push_back(args[k]);
  }
  if (!injected.empty()) {
    if (expanded.size() < 2) throw ConfigError("--config needs a subcommand");
    expanded.insert(expanded.begin() + 2, injected.begin(), injected.end());
  }
  return expanded;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Uplift modeling with honest treatment-selection forests"};
  app.require_subcommand(1);

  auto add_training = [&](CLI::App* sub) {
    sub->add_option("--method", o.method, "ucts, cts or sma");
    sub->add_option("--ntree", o.ntree, "number of trees");
    sub->add_option("--rho", o.rho, "approximation-set fraction");
    sub->add_option("--mtry", o.mtry, "coordinates drawn per node (0: ceil(d/2))");
    sub->add_option("--pi", o.pi, "probability of a single-coordinate draw");
    sub->add_option("--min-split", o.min_split, "per-arm count enabling a split");
    sub->add_option("--n-reg", o.n_reg, "shrinkage weight toward the parent");
    sub->add_option("--alpha", o.alpha, "minimum side fraction of a split");
    sub->add_option("--rf-ntree", o.rf_ntree, "SMA: trees per arm");
    sub->add_option("--rf-mtry", o.rf_mtry, "SMA: coordinates per node (0: d/3)");
    sub->add_option("--rf-min-leaf", o.rf_min_leaf, "SMA: minimum leaf size");
    sub->add_option("--threads", o.threads, "worker threads (0: all cores)");
  };
  auto add_generator = [&](CLI::App* sub, const char* flag) {
    sub->add_option(flag, o.generator, "data model: 2d or 50d");
    sub->add_option("--effect-scale", o.effect_scale, "50d: treatment effect scale");
    sub->add_option("--dimension", o.dimension, "50d: number of features");
    sub->add_option("--components", o.components, "50d: mixture components");
    sub->add_option("--mixture-seed", o.mixture_seed, "50d: mixture parameter seed");
  };

  auto* simulate = app.add_subcommand("simulate", "sample a synthetic experiment");
  add_generator(simulate, "--model");
  simulate->add_option("--n", o.n_per_arm, "samples per treatment");
  simulate->add_option("--out", o.out, "CSV output");
  simulate->add_option("--schema", o.schema, "schema output (default <out>.schema)");

  auto* train_cmd = app.add_subcommand("train", "train a model");
  train_cmd->add_option("--data", o.data, "training CSV");
  train_cmd->add_option("--schema", o.schema, "schema sidecar (default <data>.schema)");
  train_cmd->add_option("--propensities", o.propensities, "label=p,... (default empirical)");
  train_cmd->add_option("--out", o.out, "model output");
  train_cmd->add_option("--summary", o.summary, "summary CSV (default <out>.summary.csv)");
  add_training(train_cmd);

  auto* predict = app.add_subcommand("predict", "per-row predicted responses");
  predict->add_option("--model", o.model_path, "model file");
  predict->add_option("--data", o.data, "feature CSV");
  predict->add_option("--out", o.out, "prediction CSV");

  auto* evaluate = app.add_subcommand("evaluate", "policy value of a model");
  evaluate->add_option("--model", o.model_path, "model file");
  evaluate->add_option("--data", o.data, "RCT test CSV (IPS)");
  evaluate->add_option("--propensities", o.propensities, "label=p,... (default empirical)");
  evaluate->add_option("--oracle", o.oracle, "use the 2d or 50d data model instead of IPS");
  evaluate->add_option("--mc-samples", o.mc_samples, "oracle Monte Carlo draws");
  evaluate->add_option("--effect-scale", o.effect_scale, "50d: treatment effect scale");
  evaluate->add_option("--dimension", o.dimension, "50d: number of features");
  evaluate->add_option("--components", o.components, "50d: mixture components");
  evaluate->add_option("--mixture-seed", o.mixture_seed, "50d: mixture parameter seed");
  evaluate->add_option("--out", o.out, "report CSV");

  auto* muc = app.add_subcommand("muc", "modified uplift curve");
  muc->add_option("--model", o.model_path, "model file");
  muc->add_option("--data", o.data, "RCT test CSV");
  muc->add_option("--propensities", o.propensities, "label=p,... (default empirical)");
  muc->add_option("--control", o.control, "control treatment label (default first)");
  muc->add_option("--grid", o.grid, "number of evenly spaced fractions");
  muc->add_option("--out", o.out, "curve CSV");

  auto* sweep = app.add_subcommand("sweep", "value vs training size on a data model");
  add_generator(sweep, "--model");
  sweep->add_option("--sizes", o.sizes, "comma-separated samples per treatment");
  sweep->add_option("--seeds", o.n_seeds, "replicates per size");
  sweep->add_option("--mc-samples", o.mc_samples, "oracle Monte Carlo draws");
  sweep->add_option("--out", o.out, "table CSV");
  add_training(sweep);

  for (auto* sub : app.get_subcommands({})) {
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--config", o.config, "key=value file; flags override");
    for (auto* opt : sub->get_options()) opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  }

  try {
    std::vector<std::string> argv = expand_config(args);
    std::vector<std::string> reversed(argv.rbegin(), argv.rend() - 1);
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    std::ostringstream msg, diag;
    const int code = app.exit(e, msg, diag);
    out << msg.str();
    err << diag.str();
    return code == 0 ? kOk : kUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (*simulate) cmd_simulate(o);
    if (*train_cmd) cmd_train(o);
    if (*predict) cmd_predict(o);
    if (*evaluate) cmd_evaluate(o);
    if (*muc) cmd_muc(o);
    if (*sweep) cmd_sweep(o);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kOk;
}

}  // namespace uplift::cli
