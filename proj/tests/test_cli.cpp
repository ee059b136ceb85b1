#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "probopt/cli.hpp"
#include "probopt/config.hpp"

using namespace probopt;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "probopt");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Outcome r;
  r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("probopt_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    write_text_file(path("k5.txt"), "0 1\n0 2\n0 3\n0 4\n1 2\n1 3\n1 4\n2 3\n2 4\n3 4\n");
    write_text_file(path("path.txt"), "0 1\n1 2\n");
    write_text_file(path("tri.txt"), "0 1\n1 2\n0 2\n3 4\n4 5\n3 5\n2 3\n");
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST(Config, Defaults) {
  RunConfig c;
  EXPECT_EQ(c.text("problem"), "clique");
  EXPECT_EQ(c.count("restarts"), 10u);
  EXPECT_DOUBLE_EQ(*c.real("t"), 0.9);
  EXPECT_FALSE(c.has("beta"));
  EXPECT_TRUE(c.flag("extend"));
  EXPECT_FALSE(c.flag("strict"));
}

TEST(Config, ParsesKeyValueText) {
  RunConfig c;
  c.load_text("# comment\nproblem = partition\n\nrestarts=3  # trailing\nbeta = 2.5\n");
  EXPECT_EQ(c.text("problem"), "partition");
  EXPECT_EQ(c.count("restarts"), 3u);
  EXPECT_DOUBLE_EQ(*c.real("beta"), 2.5);
}

TEST(Config, RejectsBadInput) {
  RunConfig c;
  EXPECT_THROW(c.set("nonsense", "1"), Error);
  EXPECT_THROW(c.set("restarts", "-1"), Error);
  EXPECT_THROW(c.set("problem", "coloring"), Error);
  EXPECT_THROW(c.set("extend", "maybe"), Error);
  try {
    c.load_text("problem = clique\nrestarts = x\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(c.load_text("just words\n"), ParseError);
}

TEST(Config, ResultKeysSplit) {
  RunConfig c;
  for (const auto& [key, value] : c.entries(true)) {
    EXPECT_NE(key, "threads");
    EXPECT_NE(key, "out");
  }
  bool saw_threads = false;
  for (const auto& [key, value] : c.entries(false)) saw_threads = saw_threads || key == "threads";
  EXPECT_TRUE(saw_threads);
}

TEST(Config, Fractions) {
  const auto f = parse_fractions("0.5, 0.3,0.2");
  EXPECT_DOUBLE_EQ(f[1], 0.3);
  EXPECT_THROW(parse_fractions("0.5,0.5"), Error);
  EXPECT_THROW(parse_fractions("0.5,0.5,0.1,0.1"), Error);
  EXPECT_THROW(parse_fractions("a,b,c"), Error);
}

TEST_F(CliTest, SolveCompleteGraph) {
  const Outcome r = run_cli({"solve", "--problem", "clique", "--graph", path("k5.txt")});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_EQ(j["result"]["size"], 5);
  EXPECT_EQ(j["result"]["constraint_ok"], true);
  EXPECT_EQ(j["config"]["problem"], "clique");
  EXPECT_TRUE(j.contains("timing"));
  EXPECT_FALSE(j["config"].contains("threads"));
}

TEST_F(CliTest, ConfigFileAndFlagsWin) {
  write_text_file(path("run.cfg"), "restarts = 2\nseed = 9\n");
  const Outcome r = run_cli({"solve", "--config", path("run.cfg"), "--graph", path("k5.txt"), "--restarts", "3",
                         "--timing=false"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_EQ(j["config"]["restarts"], "3");
  EXPECT_EQ(j["config"]["seed"], "9");
  EXPECT_EQ(j["result"]["seeds_tried"], 3);
  EXPECT_FALSE(j.contains("timing"));
}

TEST_F(CliTest, SolveErrors) {
  Outcome r = run_cli({"solve", "--graph", path("missing.txt")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("missing.txt"), std::string::npos);
  r = run_cli({"solve"});
  EXPECT_EQ(r.code, 1);
  r = run_cli({"solve", "--graph", path("k5.txt"), "--problem", "coloring"});
  EXPECT_EQ(r.code, 1);
  r = run_cli({"solve", "--graph", path("k5.txt"), "--producer", "mpnn"});
  EXPECT_EQ(r.code, 1);
  r = run_cli({"frobnicate"});
  EXPECT_EQ(r.code, 1);
}

TEST_F(CliTest, StrictFailsOnUnmetConstraint) {
  const std::vector<std::string> base{"solve", "--problem", "partition", "--graph", path("path.txt"),
                                      "--seed_node", "1", "--v_l", "2.5", "--v_h", "2.9"};
  EXPECT_EQ(run_cli(base).code, 0);
  auto strict = base;
  strict.push_back("--strict");
  const Outcome r = run_cli(strict);
  EXPECT_EQ(r.code, 2);
  const Json j = Json::parse(r.out);
  EXPECT_EQ(j["result"]["constraint_ok"], false);
  EXPECT_EQ(j["result"]["certificate"]["vacuous"], true);
  EXPECT_EQ(run_cli({"solve", "--graph", path("k5.txt"), "--strict"}).code, 0);
}

TEST_F(CliTest, PartitionAndTrace) {
  const Outcome r = run_cli({"solve", "--problem", "partition", "--graph", path("tri.txt"), "--seed_node", "0", "--v_l",
                         "5", "--v_h", "9", "--trace_out", path("trace.json"), "--out", path("res.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  const Json j = Json::parse(read_text_file(path("res.json")));
  EXPECT_EQ(j["result"]["set"], Json::array({0, 1, 2}));
  EXPECT_NEAR(j["result"]["conductance"].get<double>(), 1.0 / 7.0, 1e-12);
  const Json trace = Json::parse(read_text_file(path("trace.json")));
  EXPECT_EQ(trace["visit_order"][0], 0);
}

TEST_F(CliTest, VerifyRoundTrip) {
  for (const std::string problem : {"clique", "partition"}) {
    const Outcome s = run_cli({"solve", "--problem", problem, "--graph", path("tri.txt"), "--out", path("res.json")});
    ASSERT_EQ(s.code, 0) << s.err;
    const Outcome ok = run_cli({"verify", "--graph", path("tri.txt"), "--result", path("res.json")});
    EXPECT_EQ(ok.code, 0) << ok.out;
    EXPECT_EQ(ok.out.find("FAIL"), std::string::npos);

    Json j = Json::parse(read_text_file(path("res.json")));
    j["result"]["objective"] = j["result"]["objective"].get<double>() + 1.0;
    write_text_file(path("bad.json"), j.dump());
    const Outcome bad = run_cli({"verify", "--graph", path("tri.txt"), "--result", path("bad.json")});
    EXPECT_EQ(bad.code, 2);
    EXPECT_NE(bad.out.find("FAIL objective"), std::string::npos);

    const Outcome other = run_cli({"verify", "--graph", path("k5.txt"), "--result", path("res.json")});
    EXPECT_EQ(other.code, 1);
  }
  EXPECT_EQ(run_cli({"verify", "--graph", path("tri.txt")}).code, 1);
}

TEST_F(CliTest, VerifyCatchesNonClique) {
  ASSERT_EQ(run_cli({"solve", "--graph", path("tri.txt"), "--out", path("res.json")}).code, 0);
  Json j = Json::parse(read_text_file(path("res.json")));
  j["result"]["set"] = Json::array({1, 2, 3});
  write_text_file(path("bad.json"), j.dump());
  const Outcome bad = run_cli({"verify", "--graph", path("tri.txt"), "--result", path("bad.json")});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.out.find("FAIL set is a clique"), std::string::npos);
}

TEST_F(CliTest, GenerateWritesCorpus) {
  const Outcome r = run_cli({"generate", "--out", path("corpus"), "--count", "10", "--n", "20", "--k", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("train 6, val 2, test 2"), std::string::npos);
  const Corpus c = load_corpus(path("corpus/manifest.json"));
  EXPECT_EQ(c.size(), 10u);
  EXPECT_EQ(c.graphs[0].num_nodes(), 20u);
  // Same seed, same files.
  ASSERT_EQ(run_cli({"generate", "--out", path("again"), "--count", "10", "--n", "20", "--k", "5"}).code, 0);
  EXPECT_EQ(read_text_file(path("corpus/g003.txt")), read_text_file(path("again/g003.txt")));
  EXPECT_EQ(run_cli({"generate", "--count", "3"}).code, 1);
  EXPECT_EQ(run_cli({"generate", "--out", path("x"), "--fractions", "0.5,0.5,0.5"}).code, 1);
}

TEST_F(CliTest, Benchmark) {
  ASSERT_EQ(run_cli({"generate", "--out", path("corpus"), "--count", "5", "--n", "20", "--k", "6"}).code, 0);
  const Outcome r = run_cli({"benchmark", "--manifest", path("corpus/manifest.json"), "--compare", "--restarts", "2",
                         "--steps", "50"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("instance,producer,decode,objective,ratio,time,constraint_ok\n", 0), 0u);
  EXPECT_NE(r.out.find(",direct,"), std::string::npos);
  EXPECT_NE(r.out.find(",uniform,"), std::string::npos);
  EXPECT_NE(r.out.find("\nmean,direct,"), std::string::npos);
  EXPECT_NE(r.out.find("\nstd,uniform,"), std::string::npos);

  const Outcome test_only = run_cli({"benchmark", "--manifest", path("corpus/manifest.json"), "--split", "test",
                                 "--restarts", "1", "--steps", "10"});
  ASSERT_EQ(test_only.code, 0);
  EXPECT_EQ(std::count(test_only.out.begin(), test_only.out.end(), '\n'), 1 + 1 + 2);

  EXPECT_EQ(run_cli({"benchmark", "--manifest", path("corpus/manifest.json"), "--oracle_limit", "10"}).code, 1);
  const Outcome skip = run_cli({"benchmark", "--manifest", path("corpus/manifest.json"), "--oracle_limit", "10",
                            "--no_oracle", "--restarts", "1", "--steps", "10"});
  EXPECT_EQ(skip.code, 0) << skip.err;

  write_text_file(path("empty.json"), "{\"graphs\": []}");
  EXPECT_EQ(run_cli({"benchmark", "--manifest", path("empty.json")}).code, 1);
}

TEST_F(CliTest, BenchmarkPartition) {
  ASSERT_EQ(run_cli({"generate", "--out", path("corpus"), "--count", "3", "--n", "30", "--generator", "gnp", "--p",
                     "0.2"}).code,
            0);
  const Outcome r = run_cli({"benchmark", "--problem", "partition", "--manifest", path("corpus/manifest.json"),
                         "--restarts", "1", "--steps", "20", "--timing=false"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find(",conductance,"), std::string::npos);
}

TEST_F(CliTest, TrainAndResume) {
  ASSERT_EQ(run_cli({"generate", "--out", path("corpus"), "--count", "5", "--n", "15", "--k", "4"}).code, 0);
  const std::string manifest = path("corpus/manifest.json");
  const std::string ckpt = path("model.json");

  const Outcome zero = run_cli({"train", "--manifest", manifest, "--checkpoint", ckpt, "--epochs", "0", "--hidden", "4",
                            "--layers", "1"});
  ASSERT_EQ(zero.code, 0) << zero.err;
  EXPECT_NE(zero.out.find("epochs 0 steps 0"), std::string::npos);

  const Outcome first = run_cli({"train", "--manifest", manifest, "--checkpoint", ckpt, "--epochs", "2", "--hidden",
                             "4", "--layers", "1", "--batch_size", "1"});
  ASSERT_EQ(first.code, 0) << first.err;
  EXPECT_NE(first.out.find("epoch 1 train_loss "), std::string::npos);
  EXPECT_NE(first.out.find("epochs 2 steps 6"), std::string::npos);

  const Outcome resumed = run_cli({"train", "--manifest", manifest, "--checkpoint", ckpt, "--epochs", "1", "--hidden",
                               "4", "--layers", "1", "--batch_size", "1", "--resume"});
  ASSERT_EQ(resumed.code, 0) << resumed.err;
  EXPECT_NE(resumed.out.find("epoch 3 train_loss "), std::string::npos);
  EXPECT_NE(resumed.out.find("epochs 3 steps 9"), std::string::npos);

  const Outcome mismatch = run_cli({"train", "--manifest", manifest, "--checkpoint", ckpt, "--epochs", "1", "--hidden",
                                "8", "--layers", "1", "--resume"});
  EXPECT_EQ(mismatch.code, 1);

  const Outcome solve = run_cli({"solve", "--graph", path("k5.txt"), "--producer", "mpnn", "--checkpoint", ckpt});
  ASSERT_EQ(solve.code, 0) << solve.err;
  EXPECT_EQ(Json::parse(solve.out)["result"]["producer"], "mpnn");

  const std::string bin = path("model.bin");
  ASSERT_EQ(run_cli({"train", "--manifest", manifest, "--checkpoint", bin, "--epochs", "1", "--hidden", "4",
                     "--layers", "1", "--checkpoint_format", "binary"})
                .code,
            0);
  EXPECT_EQ(read_text_file(bin).substr(0, 4), "POCK");
  EXPECT_EQ(run_cli({"solve", "--graph", path("k5.txt"), "--producer", "mpnn", "--checkpoint", bin}).code, 0);
}

TEST_F(CliTest, DeterministicAcrossThreads) {
  for (const std::string problem : {"clique", "partition"}) {
    std::string first;
    for (const std::string threads : {"1", "2", "4"}) {
      const Outcome r = run_cli({"solve", "--problem", problem, "--graph", path("tri.txt"), "--threads", threads,
                             "--timing=false", "--restarts", "4"});
      ASSERT_EQ(r.code, 0) << r.err;
      if (first.empty()) first = r.out;
      EXPECT_EQ(r.out, first);
    }
  }
}

TEST_F(CliTest, Help) {
  const Outcome r = run_cli({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("solve"), std::string::npos);
}
