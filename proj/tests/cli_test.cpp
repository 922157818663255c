#include "uplift/cli.hpp"

#include "test_util.hpp"
#include "uplift/model.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace uplift {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
#ifdef UPLIFT_TEST_TMPDIR
    const fs::path base = UPLIFT_TEST_TMPDIR;
#else
    const fs::path base = fs::temp_directory_path();
#endif
    dir_ = base /
           ("cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "uplift");
    out_.str("");
    err_.str("");
    return cli::run(args, out_, err_);
  }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  void simulate(const std::string& name, int n, int seed) {
    ASSERT_EQ(run({"simulate", "--model", "2d", "--n", std::to_string(n), "--seed",
                   std::to_string(seed), "--out", path(name)}),
              0)
        << err_.str();
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

TEST_F(CliTest, FullPipelineOnTwoDModel) {
  simulate("train.csv", 1000, 7);
  simulate("test.csv", 500, 8);
  EXPECT_TRUE(fs::exists(path("train.csv.schema")));
  EXPECT_EQ(slurp(path("train.csv")).rfind("# model=2d n_per_treatment=1000 seed=7\n", 0), 0u);

  ASSERT_EQ(run({"train", "--data", path("train.csv"), "--method", "ucts", "--rho", "0.5",
                 "--min-split", "80", "--ntree", "50", "--seed", "3", "--out", path("m.model")}),
            0)
      << err_.str();
  const AnyModel model = load_model(path("m.model"));
  EXPECT_EQ(model_method(model), Method::kUcts);
  EXPECT_EQ(model_arm_labels(model), (std::vector<std::string>{"1", "2"}));

  const RawTable summary = testing::parse_table(slurp(path("m.model.summary.csv")));
  EXPECT_EQ(summary.header, (std::vector<std::string>{"record", "key", "value"}));
  EXPECT_EQ(summary.rows.front()[0], "leaves");

  ASSERT_EQ(run({"predict", "--model", path("m.model"), "--data", path("test.csv"), "--out",
                 path("pred.csv")}),
            0)
      << err_.str();
  const RawTable pred = testing::parse_table(slurp(path("pred.csv")));
  EXPECT_EQ(pred.header, (std::vector<std::string>{"row", "mu_1", "mu_2", "treatment"}));
  EXPECT_EQ(pred.rows.size(), 1000u);

  ASSERT_EQ(run({"evaluate", "--model", path("m.model"), "--data", path("test.csv"), "--out",
                 path("ips.csv")}),
            0)
      << err_.str();
  const RawTable ips = testing::parse_table(slurp(path("ips.csv")));
  EXPECT_EQ(ips.rows.at(0).at(0), "ips");
  EXPECT_EQ(ips.rows.at(0).at(3), "1000");

  ASSERT_EQ(run({"evaluate", "--model", path("m.model"), "--oracle", "2d", "--mc-samples", "50000",
                 "--out", path("oracle.csv")}),
            0)
      << err_.str();
  const RawTable oracle = testing::parse_table(slurp(path("oracle.csv")));
  const double v = std::stod(oracle.rows.at(0).at(1));
  EXPECT_GT(v, 25.0);
  EXPECT_LE(v, 26.25);

  ASSERT_EQ(run({"muc", "--model", path("m.model"), "--data", path("test.csv"), "--control", "1",
                 "--grid", "5", "--out", path("muc.csv")}),
            0)
      << err_.str();
  const RawTable muc = testing::parse_table(slurp(path("muc.csv")));
  EXPECT_EQ(muc.header, (std::vector<std::string>{"control", "fraction", "value", "std_error"}));
  ASSERT_EQ(muc.rows.size(), 5u);
  EXPECT_EQ(muc.rows.back().at(2), ips.rows.at(0).at(1));
}

TEST_F(CliTest, OtherMethodsTrainAndPredict) {
  simulate("train.csv", 200, 1);
  for (const char* method : {"cts", "sma"}) {
    const std::string model = path(std::string(method) + ".model");
    ASSERT_EQ(run({"train", "--data", path("train.csv"), "--method", method, "--ntree", "5",
                   "--rf-ntree", "5", "--min-split", "20", "--out", model}),
              0)
        << err_.str();
    EXPECT_EQ(to_string(model_method(load_model(model))), method);
    EXPECT_EQ(run({"predict", "--model", model, "--data", path("train.csv"), "--out",
                   path("p.csv")}),
              0)
        << err_.str();
  }
}

TEST_F(CliTest, AlphaOutOfRangeIsUsageError) {
  simulate("train.csv", 100, 1);
  EXPECT_EQ(run({"train", "--data", path("train.csv"), "--alpha", "0.7", "--out", path("m")}), 1);
  EXPECT_NE(err_.str().find("alpha"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("m")));
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}), 1);
  EXPECT_EQ(run({"frobnicate"}), 1);
  EXPECT_EQ(run({"train", "--bogus", "1"}), 1);
  EXPECT_EQ(run({"train", "--data", path("x.csv")}), 1);  // no --out
  EXPECT_EQ(run({"simulate", "--model", "3d", "--out", path("x.csv")}), 1);
  EXPECT_EQ(run({"train", "--data", path("x.csv"), "--ntree", "many", "--out", path("m")}), 1);
}

TEST_F(CliTest, DataErrorsExitTwo) {
  EXPECT_EQ(run({"train", "--data", path("missing.csv"), "--out", path("m")}), 2);
  simulate("train.csv", 50, 1);
  std::ofstream(path("model.txt")) << "uplift-model 1\nchecksum 0\nnonsense\n";
  EXPECT_EQ(run({"predict", "--model", path("model.txt"), "--data", path("train.csv"), "--out",
                 path("p.csv")}),
            2);
  std::ofstream(path("bad.csv")) << "x1,x2,treatment,response\n5,Z,1,3\n";
  fs::copy_file(path("train.csv.schema"), path("bad.csv.schema"));
  EXPECT_EQ(run({"train", "--data", path("bad.csv"), "--out", path("m")}), 2);
}

TEST_F(CliTest, PredictOnEmptyCsvWritesHeaderOnly) {
  simulate("train.csv", 100, 1);
  ASSERT_EQ(run({"train", "--data", path("train.csv"), "--ntree", "3", "--min-split", "10",
                 "--out", path("m")}),
            0);
  std::ofstream(path("empty.csv")) << "x1,x2\n";
  ASSERT_EQ(run({"predict", "--model", path("m"), "--data", path("empty.csv"), "--out",
                 path("p.csv")}),
            0)
      << err_.str();
  EXPECT_EQ(slurp(path("p.csv")), "row,mu_1,mu_2,treatment\n");
}

TEST_F(CliTest, SameArgumentsByteIdenticalArtifacts) {
  std::vector<std::string> a, b;
  for (const char* tag : {"a", "b"}) {
    const std::string d = path(std::string(tag) + ".csv"), m = path(std::string(tag) + ".model");
    ASSERT_EQ(run({"simulate", "--model", "2d", "--n", "300", "--seed", "5", "--out", d}), 0);
    ASSERT_EQ(run({"train", "--data", d, "--ntree", "20", "--min-split", "20", "--seed", "9",
                   "--out", m}),
              0);
    ASSERT_EQ(run({"predict", "--model", m, "--data", d, "--out", m + ".pred"}), 0);
    auto& v = std::string(tag) == "a" ? a : b;
    for (const std::string& f : {d, d + ".schema", m, m + ".summary.csv", m + ".pred"}) {
      v.push_back(slurp(f));
    }
  }
  EXPECT_EQ(a, b);
}

TEST_F(CliTest, ConfigFileWithFlagOverride) {
  simulate("train.csv", 200, 2);
  std::ofstream(path("run.cfg")) << "# training setup\nntree=7\nmin_split = 20\nseed=4\n";
  ASSERT_EQ(run({"train", "--config", path("run.cfg"), "--data", path("train.csv"), "--out",
                 path("a.model")}),
            0)
      << err_.str();
  const auto a = deserialize_forest(slurp(path("a.model")));
  EXPECT_EQ(a.config().ntree, 7);
  EXPECT_EQ(a.config().growth.min_split, 20);
  EXPECT_EQ(a.config().seed, 4u);

  ASSERT_EQ(run({"train", "--config", path("run.cfg"), "--ntree", "3", "--data",
                 path("train.csv"), "--out", path("b.model")}),
            0)
      << err_.str();
  EXPECT_EQ(deserialize_forest(slurp(path("b.model"))).config().ntree, 3);

  std::ofstream(path("bad.cfg")) << "ntrees=7\n";
  EXPECT_EQ(run({"train", "--config", path("bad.cfg"), "--data", path("train.csv"), "--out",
                 path("c.model")}),
            1);
  EXPECT_EQ(run({"train", "--config", path("nope.cfg"), "--data", path("train.csv"), "--out",
                 path("c.model")}),
            1);
}

TEST_F(CliTest, SweepWritesTable) {
  ASSERT_EQ(run({"sweep", "--model", "2d", "--sizes", "100,200", "--seeds", "2", "--ntree", "5",
                 "--min-split", "20", "--mc-samples", "2000", "--out", path("s.csv")}),
            0)
      << err_.str();
  const RawTable t = testing::parse_table(slurp(path("s.csv")));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0][0], "100");
  EXPECT_EQ(t.rows[1][4], "2");
}

}  // namespace
}  // namespace uplift
