#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "ssp/cli/commands.hpp"
#include "ssp/common/binary_io.hpp"
#include "ssp/eval/report.hpp"
#include "ssp/model/checkpoint.hpp"
#include "ssp/synthdata/dataset_io.hpp"

namespace ssp::cli {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("ssp_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
    io::write_text_file(path("small.toml"), "[data]\nheight = 48\nwidth = 64\n");
  }
  void TearDown() override { fs::remove_all(root_); }

  std::string path(const std::string& child) const { return (root_ / child).string(); }

  Request request(const std::string& command, const std::string& out) const {
    Request r;
    r.command = command;
    r.config_path = path("small.toml");
    r.out = out;
    r.seed = 3;
    return r;
  }

  int run_quiet(const Request& r) {
    stdout_.str("");
    stderr_.str("");
    return run(r, stdout_, stderr_);
  }

  std::string tiny_checkpoint(const std::string& name, std::uint64_t seed) const {
    model::ModelConfig c;
    c.widths = {4, 4, 8, 8};
    c.c_enc = 16;
    c.desc_dim = 8;
    c.head_width = 16;
    model::Network<float> net(c, seed);
    const auto p = path(name);
    model::save_checkpoint(model::snapshot(net), p);
    return p;
  }

  fs::path root_;
  std::ostringstream stdout_, stderr_;
};

TEST_F(CliTest, GenIsByteReproducible) {
  auto r = request("gen", path("a.sspd"));
  r.options["count"] = "4";
  ASSERT_EQ(run_quiet(r), kExitOk) << stderr_.str();
  r.out = path("b.sspd");
  ASSERT_EQ(run_quiet(r), kExitOk);
  EXPECT_EQ(io::read_file(path("a.sspd")), io::read_file(path("b.sspd")));
  EXPECT_EQ(synth::read_dataset(path("a.sspd")).size(), 4u);
  EXPECT_TRUE(fs::exists(path("a.sspd.manifest.json")));
}

TEST_F(CliTest, GenZeroCountWritesEmptyDataset) {
  auto r = request("gen", path("empty.sspd"));
  r.options["count"] = "0";
  ASSERT_EQ(run_quiet(r), kExitOk) << stderr_.str();
  EXPECT_TRUE(synth::read_dataset(path("empty.sspd")).empty());
}

TEST_F(CliTest, GenCreatesMissingDirectories) {
  auto r = request("gen", path("deep/er/data.sspd"));
  r.options["count"] = "1";
  ASSERT_EQ(run_quiet(r), kExitOk) << stderr_.str();
  EXPECT_TRUE(fs::exists(path("deep/er/data.sspd")));
}

TEST_F(CliTest, GenEvalRejectsZeroPairs) {
  auto r = request("gen", path("e.sspe"));
  r.options["kind"] = "eval";
  r.options["pairs"] = "0";
  EXPECT_EQ(run_quiet(r), kExitUsage);
  EXPECT_NE(stderr_.str().find("--pairs"), std::string::npos);
}

TEST_F(CliTest, UsageErrors) {
  auto unknown = request("fly", path("x"));
  EXPECT_EQ(run_quiet(unknown), kExitUsage);

  auto missing = request("eval", path("ev"));
  missing.inputs = {path("nope.sspc")};
  missing.options["pairs"] = "1";
  EXPECT_EQ(run_quiet(missing), kExitUsage);

  auto no_config = request("gen", path("c.sspd"));
  no_config.config_path = path("absent.toml");
  EXPECT_EQ(run_quiet(no_config), kExitUsage);

  io::write_text_file(path("bad.toml"), "[train]\nbatch_size = -3\n");
  auto bad = request("gen", path("d.sspd"));
  bad.config_path = path("bad.toml");
  EXPECT_EQ(run_quiet(bad), kExitUsage);

  auto no_data = request("train", path("run"));
  EXPECT_EQ(run_quiet(no_data), kExitUsage);
}

TEST_F(CliTest, EvalTwoCheckpointsWritesTwoRows) {
  auto r = request("eval", path("eval_out"));
  r.inputs = {tiny_checkpoint("first.sspc", 1), tiny_checkpoint("second.sspc", 2)};
  r.options["pairs"] = "2";
  ASSERT_EQ(run_quiet(r), kExitOk) << stderr_.str();
  const auto csv = io::read_text_file(path("eval_out/reports.csv"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_NE(csv.find("first"), std::string::npos);
  EXPECT_NE(csv.find("second"), std::string::npos);
  EXPECT_TRUE(fs::exists(path("eval_out/first.json")));
  EXPECT_TRUE(fs::exists(path("eval_out/manifest.json")));
}

void write_report(const std::string& file, const std::string& name, double ms, double rep) {
  eval::MetricReport r;
  r.model = name;
  r.mean.matching_score = ms;
  r.mean.repeatability = rep;
  io::write_text_file(file, eval::report_json(r));
}

TEST_F(CliTest, CompareRanksByMatchingScore) {
  write_report(path("a.json"), "model_a", 0.519, 0.6);
  write_report(path("b.json"), "model_b", 0.522, 0.5);
  auto r = request("compare", path("table.txt"));
  r.inputs = {path("a.json"), path("b.json")};
  ASSERT_EQ(run_quiet(r), kExitOk) << stderr_.str();
  const auto table = stdout_.str();
  EXPECT_LT(table.find("model_b"), table.find("model_a"));
  EXPECT_NE(table.find("model_b                   0.5220    0.5000    0.0000    0.0000    0.0000     <- best"),
            std::string::npos)
      << table;
  EXPECT_EQ(io::read_text_file(path("table.txt")), table);
}

TEST_F(CliTest, CompareFullTieKeepsInputOrder) {
  write_report(path("x.json"), "model_x", 0.5, 0.5);
  write_report(path("y.json"), "model_y", 0.5, 0.5);
  auto r = request("compare", "");
  r.inputs = {path("y.json"), path("x.json")};
  ASSERT_EQ(run_quiet(r), kExitOk);
  const auto table = stdout_.str();
  EXPECT_LT(table.find("model_y"), table.find("model_x"));
}

TEST_F(CliTest, ManifestRerunReproducesBytes) {
  auto r = request("gen", path("m.sspd"));
  r.options["count"] = "3";
  ASSERT_EQ(run_quiet(r), kExitOk);
  auto again = request_from_manifest(path("m.sspd.manifest.json"));
  EXPECT_EQ(again.command, "gen");
  EXPECT_EQ(again.options.at("count"), "3");
  again.out = path("m2.sspd");
  ASSERT_EQ(run_quiet(again), kExitOk) << stderr_.str();
  EXPECT_EQ(io::read_file(path("m.sspd")), io::read_file(path("m2.sspd")));
  EXPECT_EQ(manifest_path(again), path("m2.sspd.manifest.json"));
}

TEST_F(CliTest, ManifestRecordsFailure) {
  auto r = request("eval", path("fail_out"));
  r.inputs = {path("missing.sspc")};
  r.options["pairs"] = "1";
  ASSERT_EQ(run_quiet(r), kExitUsage);
  const auto text = io::read_text_file(path("fail_out/manifest.json"));
  EXPECT_NE(text.find("\"status\": \"failed\""), std::string::npos);
  EXPECT_NE(text.find("\"exit_code\": 2"), std::string::npos);
}

}  // namespace
}  // namespace ssp::cli
