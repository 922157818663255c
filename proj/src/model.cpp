#include "uplift/model.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace uplift {

Method model_method(const AnyModel& model) {
  if (const auto* f = std::get_if<UpliftForest>(&model)) return f->method();
  return Method::kSma;
}

const FeatureSchema& model_schema(const AnyModel& model) {
  return std::visit([](const auto& m) -> const FeatureSchema& { return m.schema(); }, model);
}

const std::vector<std::string>& model_arm_labels(const AnyModel& model) {
  return std::visit(
      [](const auto& m) -> const std::vector<std::string>& { return m.arm_labels(); }, model);
}

Eigen::VectorXd predict_mu(const AnyModel& model, FeatureRow x) {
  return std::visit([&](const auto& m) { return m.predict_mu(x); }, model);
}

int select_treatment(const AnyModel& model, FeatureRow x) {
  return std::visit([&](const auto& m) { return m.select_treatment(x); }, model);
}

AnyModel train_model(const Dataset& data, Method method, const ForestConfig& forest,
                     const RegressionForestParams& rf, int threads) {
  if (method == Method::kSma) return train_sma(data, rf, threads);
  return train_forest(data, forest, method, threads);
}

namespace {

constexpr std::string_view kMagic = "uplift-model";

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

void write_header(std::ostream& out, Method method, const FeatureSchema& schema,
                  const std::vector<std::string>& labels) {
  out << "method " << to_string(method) << '\n';
  out << "arms " << labels.size() << '\n';
  for (const std::string& label : labels) out << "arm " << label << '\n';
  out << "columns " << schema.size() << '\n';
  std::istringstream lines(schema.to_text());
  for (std::string line; std::getline(lines, line);) out << "column " << line << '\n';
}

void write_rule(std::ostream& out, const SplitRule& rule) {
  if (rule.kind == SplitRule::Kind::kThreshold) {
    out << " t " << rule.coordinate << ' ' << format_double(rule.threshold);
  } else {
    out << " s " << rule.coordinate << ' ' << hex64(rule.left_levels);
  }
}

template <typename Vec>
void write_vector(std::ostream& out, const Vec& v) {
  for (Index t = 0; t < v.size(); ++t) out << ' ' << format_double(static_cast<double>(v[t]));
}

std::string forest_body(const UpliftForest& forest) {
  std::ostringstream out;
  write_header(out, forest.method(), forest.schema(), forest.arm_labels());
  const ForestConfig& c = forest.config();
  out << "config ntree=" << c.ntree << " rho=" << format_double(c.rho)
      << " min_split=" << c.growth.min_split << " n_reg=" << format_double(c.growth.n_reg)
      << " alpha=" << format_double(c.growth.alpha) << " mtry=" << c.growth.mtry
      << " pi=" << format_double(c.growth.pi) << " seed=" << c.seed << '\n';
  out << "trees " << forest.trees().size() << '\n';
  for (const UpliftTree& tree : forest.trees()) {
    out << "tree " << tree.nodes().size() << '\n';
    for (const TreeNode& n : tree.nodes()) {
      out << "node " << n.parent << ' ' << n.left << ' ' << n.right << ' ' << n.depth << ' '
          << static_cast<int>(n.leaf_reason);
      if (n.is_leaf()) {
        out << " l";
      } else {
        write_rule(out, n.rule);
      }
      out << " c";
      write_vector(out, n.approx_counts);
      out << " a";
      write_vector(out, n.approx_estimates);
      out << " h";
      write_vector(out, n.honest_estimates);
      out << '\n';
    }
  }
  out << "end\n";
  return out.str();
}

std::string sma_body(const SmaModel& model) {
  std::ostringstream out;
  write_header(out, Method::kSma, model.schema(), model.arm_labels());
  const RegressionForestParams& p = model.params();
  out << "rf ntree=" << p.ntree << " mtry=" << p.mtry << " min_leaf=" << p.min_leaf
      << " bootstrap=" << (p.bootstrap ? 1 : 0) << " seed=" << p.seed << '\n';
  for (const RegressionForest& forest : model.arms()) {
    out << "forest " << forest.trees().size() << '\n';
    for (const RegressionTree& tree : forest.trees()) {
      out << "tree " << tree.nodes().size() << '\n';
      for (const RegressionNode& n : tree.nodes()) {
        out << "node " << n.left << ' ' << n.right;
        if (n.is_leaf()) {
          out << " l";
        } else {
          write_rule(out, n.rule);
        }
        out << ' ' << format_double(n.value) << ' ' << n.count << '\n';
      }
    }
  }
  out << "end\n";
  return out.str();
}

std::string envelope(const std::string& body) {
  return std::string(kMagic) + ' ' + std::to_string(kModelFormatVersion) + "\nchecksum " +
         hex64(fnv1a(body)) + '\n' + body;
}

// Sequential reader over the body lines.
class Reader {
 public:
  explicit Reader(std::string_view body) : body_(body) {}

  // Next line; its first token must be `keyword`. Returns the remainder.
  std::string expect(std::string_view keyword) {
    if (pos_ >= body_.size()) throw DataError("model file truncated (expected " + std::string(keyword) + ")");
    auto end = body_.find('\n', pos_);
    if (end == std::string_view::npos) end = body_.size();
    const std::string line(body_.substr(pos_, end - pos_));
    pos_ = end + 1;
    ++line_no_;
    const auto space = line.find(' ');
    const std::string head = line.substr(0, space);
    if (head != keyword) {
      throw DataError("model file line " + std::to_string(line_no_) + ": expected '" +
                      std::string(keyword) + "', found '" + head + "'");
    }
    return space == std::string::npos ? std::string() : line.substr(space + 1);
  }

  std::istringstream tokens(std::string_view keyword) {
    std::istringstream in(expect(keyword));
    in.exceptions(std::ios::failbit | std::ios::badbit);
    return in;
  }

  bool at_end() const { return pos_ >= body_.size(); }

 private:
  std::string_view body_;
  std::size_t pos_ = 0;
  int line_no_ = 2;
};

double read_double(std::istream& in) {
  std::string token;
  in >> token;
  return parse_double(token);
}

std::uint64_t read_hex(std::istream& in) {
  std::string token;
  in >> token;
  std::uint64_t v = 0;
  const auto r = std::from_chars(token.data(), token.data() + token.size(), v, 16);
  if (r.ec != std::errc() || r.ptr != token.data() + token.size()) {
    throw DataError("bad hex field '" + token + "'");
  }
  return v;
}

void expect_token(std::istream& in, std::string_view token) {
  std::string t;
  in >> t;
  if (t != token) throw DataError("expected '" + std::string(token) + "', found '" + t + "'");
}

SplitRule read_rule(std::istream& in, std::string_view kind, const FeatureSchema& schema) {
  SplitRule rule;
  in >> rule.coordinate;
  if (rule.coordinate < 0 || rule.coordinate >= schema.size()) {
    throw DataError("split coordinate out of range");
  }
  if (kind == "t") {
    rule.kind = SplitRule::Kind::kThreshold;
    rule.threshold = read_double(in);
  } else if (kind == "s") {
    rule.kind = SplitRule::Kind::kSubset;
    rule.left_levels = read_hex(in);
  } else {
    throw DataError("unknown split kind '" + std::string(kind) + "'");
  }
  return rule;
}

struct Header {
  Method method;
  std::vector<std::string> labels;
  FeatureSchema schema;
};

Header read_header(Reader& r) {
  Header h;
  h.method = parse_method(r.expect("method"));
  std::size_t arms = 0;
  r.tokens("arms") >> arms;
  for (std::size_t t = 0; t < arms; ++t) h.labels.push_back(r.expect("arm"));
  std::size_t columns = 0;
  r.tokens("columns") >> columns;
  std::string schema_text;
  for (std::size_t j = 0; j < columns; ++j) schema_text += r.expect("column") + '\n';
  std::istringstream schema_in(schema_text);
  h.schema = FeatureSchema::parse(schema_in);
  if (h.labels.empty()) throw DataError("model has no arms");
  return h;
}

// key=value tokens on a config line.
std::string field(std::istream& in, std::string_view key) {
  std::string token;
  in >> token;
  const auto eq = token.find('=');
  if (eq == std::string::npos || token.substr(0, eq) != key) {
    throw DataError("expected field '" + std::string(key) + "'");
  }
  return token.substr(eq + 1);
}

long long to_int(const std::string& s) {
  long long v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw DataError("bad integer '" + s + "'");
  return v;
}

std::uint64_t to_u64(const std::string& s) {
  std::uint64_t v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw DataError("bad integer '" + s + "'");
  return v;
}

UpliftForest read_forest(Reader& r, const Header& h) {
  const int k = static_cast<int>(h.labels.size());
  ForestConfig c;
  {
    auto in = r.tokens("config");
    c.ntree = static_cast<int>(to_int(field(in, "ntree")));
    c.rho = parse_double(field(in, "rho"));
    c.growth.min_split = static_cast<int>(to_int(field(in, "min_split")));
    c.growth.n_reg = parse_double(field(in, "n_reg"));
    c.growth.alpha = parse_double(field(in, "alpha"));
    c.growth.mtry = static_cast<int>(to_int(field(in, "mtry")));
    c.growth.pi = parse_double(field(in, "pi"));
    c.seed = to_u64(field(in, "seed"));
  }
  std::size_t count = 0;
  r.tokens("trees") >> count;
  std::vector<UpliftTree> trees;
  for (std::size_t b = 0; b < count; ++b) {
    std::size_t n_nodes = 0;
    r.tokens("tree") >> n_nodes;
    if (n_nodes == 0) throw DataError("tree without nodes");
    UpliftTree tree(k);
    for (std::size_t id = 0; id < n_nodes; ++id) {
      auto in = r.tokens("node");
      TreeNode n;
      int reason = 0;
      in >> n.parent >> n.left >> n.right >> n.depth >> reason;
      if (reason < 0 || reason > 2) throw DataError("bad leaf reason");
      n.leaf_reason = static_cast<LeafReason>(reason);
      std::string kind;
      in >> kind;
      if (kind != "l") n.rule = read_rule(in, kind, h.schema);
      const bool leaf = kind == "l";
      const auto bad_link = [&](int child) {
        return child <= static_cast<int>(id) || child >= static_cast<int>(n_nodes);
      };
      if (leaf != (n.left < 0) || (!leaf && (bad_link(n.left) || bad_link(n.right))) ||
          (id > 0 && (n.parent < 0 || n.parent >= static_cast<int>(id)))) {
        throw DataError("inconsistent node links");
      }
      expect_token(in, "c");
      n.approx_counts.resize(k);
      for (int t = 0; t < k; ++t) in >> n.approx_counts[t];
      expect_token(in, "a");
      n.approx_estimates.resize(k);
      for (int t = 0; t < k; ++t) n.approx_estimates[t] = read_double(in);
      expect_token(in, "h");
      n.honest_estimates.resize(k);
      for (int t = 0; t < k; ++t) n.honest_estimates[t] = read_double(in);
      tree.nodes().push_back(std::move(n));
    }
    trees.push_back(std::move(tree));
  }
  return UpliftForest(h.method, c, h.schema, h.labels, std::move(trees));
}

SmaModel read_sma(Reader& r, const Header& h) {
  RegressionForestParams p;
  {
    auto in = r.tokens("rf");
    p.ntree = static_cast<int>(to_int(field(in, "ntree")));
    p.mtry = static_cast<int>(to_int(field(in, "mtry")));
    p.min_leaf = static_cast<int>(to_int(field(in, "min_leaf")));
    p.bootstrap = to_int(field(in, "bootstrap")) != 0;
    p.seed = to_u64(field(in, "seed"));
  }
  std::vector<RegressionForest> arms;
  for (std::size_t t = 0; t < h.labels.size(); ++t) {
    std::size_t n_trees = 0;
    r.tokens("forest") >> n_trees;
    std::vector<RegressionTree> trees;
    for (std::size_t b = 0; b < n_trees; ++b) {
      std::size_t n_nodes = 0;
      r.tokens("tree") >> n_nodes;
      if (n_nodes == 0) throw DataError("tree without nodes");
      std::vector<RegressionNode> nodes;
      for (std::size_t id = 0; id < n_nodes; ++id) {
        auto in = r.tokens("node");
        RegressionNode n;
        in >> n.left >> n.right;
        std::string kind;
        in >> kind;
        if (kind != "l") n.rule = read_rule(in, kind, h.schema);
        if ((kind == "l") != (n.left < 0) ||
            (n.left >= 0 && (n.left <= static_cast<int>(id) || n.right <= static_cast<int>(id) ||
                             n.left >= static_cast<int>(n_nodes) ||
                             n.right >= static_cast<int>(n_nodes)))) {
          throw DataError("inconsistent node links");
        }
        n.value = read_double(in);
        in >> n.count;
        nodes.push_back(n);
      }
      trees.emplace_back(std::move(nodes));
    }
    arms.emplace_back(std::move(trees));
  }
  return SmaModel(p, h.schema, h.labels, std::move(arms));
}

}  // namespace

std::string serialize(const UpliftForest& forest) { return envelope(forest_body(forest)); }
std::string serialize(const SmaModel& model) { return envelope(sma_body(model)); }
std::string serialize(const AnyModel& model) {
  return std::visit([](const auto& m) { return serialize(m); }, model);
}

AnyModel deserialize(std::string_view text) {
  if (text.empty()) throw DataError("model stream is empty");
  const auto first = text.find('\n');
  if (first == std::string_view::npos) throw DataError("model stream truncated");
  const std::string_view magic_line = text.substr(0, first);
  const std::string expected = std::string(kMagic) + ' ' + std::to_string(kModelFormatVersion);
  if (magic_line.substr(0, kMagic.size()) != kMagic) throw DataError("not an uplift model file");
  if (magic_line != expected) {
    throw DataError("unsupported model format version '" + std::string(magic_line) + "'");
  }
  const auto second = text.find('\n', first + 1);
  if (second == std::string_view::npos) throw DataError("model stream truncated");
  const std::string_view sum_line = text.substr(first + 1, second - first - 1);
  if (sum_line.substr(0, 9) != "checksum ") throw DataError("missing checksum");
  const std::string_view body = text.substr(second + 1);
  if (hex64(fnv1a(body)) != sum_line.substr(9)) throw DataError("model checksum mismatch");

  try {
    Reader r(body);
    const Header h = read_header(r);
    AnyModel model = h.method == Method::kSma ? AnyModel(read_sma(r, h)) : AnyModel(read_forest(r, h));
    r.expect("end");
    if (!r.at_end()) throw DataError("trailing data after end marker");
    return model;
  } catch (const std::ios_base::failure&) {
    throw DataError("malformed model record");
  } catch (const ConfigError& e) {
    throw DataError(e.what());
  }
}

UpliftForest deserialize_forest(std::string_view text) {
  AnyModel model = deserialize(text);
  if (auto* f = std::get_if<UpliftForest>(&model)) return std::move(*f);
  throw DataError("model is not a tree-ensemble uplift forest");
}

void save_model(const AnyModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << serialize(model);
  if (!out) throw DataError("write failed for " + path);
}

AnyModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

}  // namespace uplift
