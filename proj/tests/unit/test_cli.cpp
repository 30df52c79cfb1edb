#include "kgtrace/cli.hpp"

#include <gtest/gtest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace kgt;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "kgtrace");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

fs::path workdir(const std::string& name) {
  const auto dir = fs::path(KGTRACE_TEST_TMP) / "cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// One trained KG model shared by the read-only commands.
class CliModelTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = workdir("model");
    const auto r = run({"--out", dir_.string(), "--seed", "1", "train"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static fs::path dir_;
};
fs::path CliModelTest::dir_;

}  // namespace

TEST(Cli, TrainWritesHistoryAndIsReproducible) {
  const auto a = workdir("train_a");
  const auto b = workdir("train_b");
  const auto ra = run({"--out", a.string(), "--seed", "3", "train"});
  ASSERT_EQ(ra.code, 0) << ra.err;
  EXPECT_NE(ra.out.find("247 nodes"), std::string::npos) << ra.out;
  const auto history = lines(slurp(a / "history.jsonl"));
  ASSERT_EQ(history.size(), 200u);
  const auto first = nlohmann::json::parse(history.front());
  EXPECT_EQ(first["epoch"], 1);
  EXPECT_TRUE(first.contains("recon_loss"));
  EXPECT_TRUE(first.contains("disc_loss"));
  EXPECT_TRUE(first.contains("gen_loss"));
  EXPECT_TRUE(fs::exists(a / "model.kgt"));
  EXPECT_TRUE(fs::exists(a / "symbols.tsv"));

  ASSERT_EQ(run({"--out", b.string(), "--seed", "3", "train"}).code, 0);
  EXPECT_EQ(slurp(a / "history.jsonl"), slurp(b / "history.jsonl"));
  EXPECT_EQ(slurp(a / "model.kgt"), slurp(b / "model.kgt"));
}

TEST(Cli, EpochAndGanOverrides) {
  const auto dir = workdir("overrides");
  const auto r = run({"--out", dir.string(), "train", "--epochs", "7", "--gan-weight", "0"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto history = lines(slurp(dir / "history.jsonl"));
  ASSERT_EQ(history.size(), 7u);
  EXPECT_EQ(nlohmann::json::parse(history.back())["disc_loss"], 0.0);
}

TEST(Cli, MissingSchemaIsDataError) {
  const auto dir = workdir("missing");
  const auto r = run({"--out", dir.string(), "train", "--schema", "/no/such/schema.json"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("/no/such/schema.json"), std::string::npos) << r.err;
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({"train", "--epochs", "many"}).code, 1);
  EXPECT_EQ(run({"train", "--content", "a.content"}).code, 1);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, ValidateKg) {
  const auto r = run({"validate-kg"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto out = lines(r.out);
  ASSERT_EQ(out.size(), 2u);
  const auto summary = nlohmann::json::parse(out[0]);
  EXPECT_EQ(summary["entities"], 247);
  EXPECT_EQ(summary["data_field_type"], 132);
  EXPECT_EQ(summary["procedure_type"], 40);
  EXPECT_EQ(summary["statistical_indicator"], 73);
  EXPECT_EQ(summary["algorithm_indicator"], 2);
  EXPECT_TRUE(nlohmann::json::parse(out[1])["clean"].get<bool>());

  const auto dir = workdir("validate");
  const auto bad = dir / "isolated.json";
  std::ofstream(bad) << R"({"entities": [{"name": "a", "category": "data_field_type"}],
                            "relations": []})";
  EXPECT_EQ(run({"validate-kg", "--schema", bad.string()}).code, 2);
}

TEST(Cli, ConfigFile) {
  const auto dir = workdir("config");
  const auto cfg = dir / "run.json";
  std::ofstream(cfg) << nlohmann::json{{"seed", 4},
                                       {"out", (dir / "o").string()},
                                       {"encoder", {{"epochs", 3}}}}
                            .dump();
  const auto r = run({"--config", cfg.string(), "train"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines(slurp(dir / "o" / "history.jsonl")).size(), 3u);

  std::ofstream(cfg) << R"({"sed": 4})";
  EXPECT_EQ(run({"--config", cfg.string(), "train"}).code, 2);
}

TEST(Cli, LinkpredIsReproducible) {
  const auto a = workdir("lp_a");
  const auto b = workdir("lp_b");
  const std::vector<std::string> tail{"linkpred", "--ratios", "0.1,0.3", "--epochs", "40"};
  auto args_a = std::vector<std::string>{"--out", a.string(), "--seed", "2"};
  auto args_b = std::vector<std::string>{"--out", b.string(), "--seed", "2"};
  args_a.insert(args_a.end(), tail.begin(), tail.end());
  args_b.insert(args_b.end(), tail.begin(), tail.end());
  const auto r = run(args_a);
  ASSERT_EQ(r.code, 0) << r.err;
  ASSERT_EQ(run(args_b).code, 0);
  const auto rows = lines(slurp(a / "linkpred.jsonl"));
  ASSERT_EQ(rows.size(), 2u);
  const auto row = nlohmann::json::parse(rows[0]);
  EXPECT_EQ(row["test_ratio"], 0.1);
  EXPECT_GE(row["ap"].get<double>(), 0.0);
  EXPECT_LE(row["auc"].get<double>(), 1.0);
  EXPECT_EQ(slurp(a / "linkpred.jsonl"), slurp(b / "linkpred.jsonl"));
}

TEST_F(CliModelTest, ClassifyAccuracyInRange) {
  const auto r = run({"--out", dir_.string(), "classify", "--restarts", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto row = nlohmann::json::parse(lines(slurp(dir_ / "classify.jsonl")).back());
  EXPECT_EQ(row["k"], 4);
  EXPECT_GE(row["acc"].get<double>(), 0.0);
  EXPECT_LE(row["acc"].get<double>(), 1.0);
}

TEST_F(CliModelTest, ClassifyWithOneClusterIsMajorityRate) {
  const auto r = run({"--out", dir_.string(), "classify", "--k", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto row = nlohmann::json::parse(lines(slurp(dir_ / "classify.jsonl")).back());
  EXPECT_EQ(row["acc"].get<double>(), 132.0 / 247.0);
}

TEST_F(CliModelTest, TraceRegistrationRate) {
  const auto r = run({"--out", dir_.string(), "trace", "--node", "regis success rate"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(slurp(dir_ / "trace.json"));
  EXPECT_EQ(j["nodes"].size(), 13u);
  EXPECT_EQ(j["trace"].size(), 2u);
  EXPECT_NE(r.out.find("trace: -> "), std::string::npos) << r.out;
  EXPECT_EQ(r.out.rfind("regis success rate\n", 0), 0u) << r.out;
}

TEST_F(CliModelTest, TraceUnknownNodeListsNearestNames) {
  const auto r = run({"--out", dir_.string(), "trace", "--node", "regis sucess rate"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("`regis success rate`"), std::string::npos) << r.err;
  EXPECT_EQ(run({"--out", dir_.string(), "trace"}).code, 1);
  EXPECT_EQ(run({"--out", dir_.string(), "trace", "--node", "msgflag", "--levels", "0"}).code, 1);
}

TEST_F(CliModelTest, ExportEmbeddings) {
  const auto r = run({"--out", dir_.string(), "export"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines(slurp(dir_ / "embeddings.tsv"));
  ASSERT_EQ(rows.size(), 248u);
  std::set<std::string> labels;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    std::istringstream in(rows[i]);
    std::string id, label;
    std::getline(in, id, '\t');
    std::getline(in, label, '\t');
    labels.insert(label);
  }
  EXPECT_EQ(labels, (std::set<std::string>{"0", "1", "2", "3"}));
}

TEST_F(CliModelTest, MissingModelIsDataError) {
  const auto r = run({"--out", dir_.string(), "trace", "--model", "/no/model.kgt", "--node", "x"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("/no/model.kgt"), std::string::npos);
}
