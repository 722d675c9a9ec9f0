#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "json.hpp"
#include "specperturb/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliRun {
  int code;
  std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = specperturb::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("specperturb_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  std::string at(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

}  // namespace

TEST_F(Cli, GenBlocksIsReproducible) {
  ASSERT_EQ(cli({"gen", "blocks", "--sizes", "15,15", "--eps", "0.1", "--seed", "1", "-o", at("W.csv"), "--labels",
                 at("L.csv")})
                .code,
            0);
  const std::string w1 = slurp(at("W.csv")), l1 = slurp(at("L.csv")), m1 = slurp(at("W.csv.manifest.json"));
  ASSERT_EQ(cli({"gen", "blocks", "--sizes", "15,15", "--eps", "0.1", "--seed", "1", "-o", at("W.csv"), "--labels",
                 at("L.csv")})
                .code,
            0);
  EXPECT_EQ(w1, slurp(at("W.csv")));
  EXPECT_EQ(l1, slurp(at("L.csv")));
  EXPECT_EQ(m1, slurp(at("W.csv.manifest.json")));
  EXPECT_EQ(specperturb::io::read_matrix(at("W.csv")).rows(), 30);
}

TEST_F(Cli, ClusterWritesContractFiles) {
  ASSERT_EQ(cli({"gen", "sparse", "-N", "60", "-n", "30", "-s", "3", "-k", "2", "--seed", "4", "-o", at("X.csv"),
                 "--labels", at("L.csv")})
                .code,
            0);
  const CliRun r = cli({"cluster", "-i", at("X.csv"), "--labels", at("L.csv"), "--sigma", "median", "-k", "2", "--seed",
                     "1", "-o", at("out")});
  ASSERT_EQ(r.code, 0) << r.err;
  const specperturb::Matrix E = specperturb::io::read_matrix(at("out/embedding.csv"));
  EXPECT_EQ(E.rows(), 60);
  EXPECT_EQ(E.cols(), 2);
  EXPECT_EQ(specperturb::io::read_labels(at("out/labels.csv")).size(), 60u);
  const json doc = json::parse(slurp(at("out/report.json")));
  for (const char* key : {"manifest", "reports", "embedding_summary", "rho"}) EXPECT_TRUE(doc.contains(key)) << key;
  EXPECT_EQ(doc["rho"].get<double>(), 0.0);
  EXPECT_EQ(doc["embedding_summary"]["eigenvalues"].size(), 2u);
  EXPECT_TRUE(doc["embedding_summary"].contains("alpha"));
  EXPECT_TRUE(doc["manifest"]["drop_first"].get<bool>());
  EXPECT_EQ(doc["manifest"]["restarts"].get<int>(), 20);
  ASSERT_EQ(cli({"cluster", "-i", at("X.csv"), "-k", "2", "--keep-first", "-o", at("out2")}).code, 0);
  EXPECT_FALSE(json::parse(slurp(at("out2/report.json")))["manifest"]["drop_first"].get<bool>());
}

TEST_F(Cli, VerifyCsSatisfied) {
  ASSERT_EQ(cli({"gen", "sparse", "-N", "40", "-n", "100", "--seed", "2", "-o", at("X.csv")}).code, 0);
  const CliRun r = cli({"verify", "cs", "-i", at("X.csv"), "--sigma", "2.0", "-m", "64", "--seed", "3", "-o",
                     at("report.json"), "--strict"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json doc = json::parse(slurp(at("report.json")));
  ASSERT_EQ(doc["reports"].size(), 2u);
  EXPECT_EQ(doc["reports"][0]["theorem"], "cs_affinity");
  EXPECT_TRUE(doc["reports"][0]["satisfied"].get<bool>());
  EXPECT_TRUE(doc["reports"][1]["satisfied"].get<bool>());
}

TEST_F(Cli, VerifyMcAndSpectralChecks) {
  ASSERT_EQ(cli({"gen", "lowrank", "-N", "60", "-n", "30", "--seed", "2", "-o", at("X.csv")}).code, 0);
  EXPECT_EQ(cli({"verify", "mc", "-i", at("X.csv"), "-p", "0.5", "--seed", "1", "-o", at("mc.json"), "--strict"}).code,
            0);
  EXPECT_TRUE(json::parse(slurp(at("mc.json")))["reports"][0]["satisfied"].get<bool>());
  EXPECT_EQ(cli({"verify", "sintheta", "--sizes", "15,15", "--eps", "0.05", "-k", "2", "--seed", "1", "-o",
                 at("s.json"), "--strict"})
                .code,
            0);
  EXPECT_EQ(cli({"verify", "embed", "--sizes", "15,15", "-k", "2", "-o", at("e.json"), "--strict"}).code, 0);
}

TEST_F(Cli, StrictCollapsedGapExitsTwo) {
  const CliRun r = cli({"verify", "stewart", "--sizes", "10,10,10", "--seed", "1", "-o", at("s.json"), "--strict"});
  EXPECT_EQ(r.code, 2);
  const json doc = json::parse(slurp(at("s.json")));
  EXPECT_FALSE(doc["reports"][0]["verifiable"].get<bool>());
  EXPECT_EQ(cli({"verify", "stewart", "--sizes", "10,10,10", "--seed", "1", "-o", at("s2.json")}).code, 0);
}

TEST_F(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(cli({}).code, 1);
  EXPECT_EQ(cli({"cluster", "--bogus"}).code, 1);
  EXPECT_EQ(cli({"--help"}).code, 0);
  EXPECT_EQ(cli({"--version"}).code, 0);
  const CliRun missing = cli({"cluster", "-i", at("nope.csv"), "-o", at("out")});
  EXPECT_EQ(missing.code, 1);
  EXPECT_NE(missing.err.find("nope.csv"), std::string::npos);
  std::ofstream(at("ragged.csv")) << "1,2\n3,4\n5\n";
  const CliRun ragged = cli({"cluster", "-i", at("ragged.csv"), "-o", at("out")});
  EXPECT_EQ(ragged.code, 1);
  EXPECT_NE(ragged.err.find(":3:"), std::string::npos);
  std::ofstream(at("a.csv")) << "1,2\n3,4\n5,6\n";
  std::ofstream(at("b.csv")) << "1,2\n3,4\n";
  EXPECT_EQ(cli({"verify", "sintheta", "-i", at("a.csv"), "--perturbed", at("b.csv"), "-o", at("r.json")}).code, 1);
}

TEST_F(Cli, CompleteMaskFileMatchesFullInput) {
  ASSERT_EQ(cli({"gen", "lowrank", "-N", "40", "-n", "20", "--seed", "5", "-o", at("X.csv")}).code, 0);
  ASSERT_EQ(cli({"complete", "--full", at("X.csv"), "-p", "0.5", "--seed", "2", "--mask-out", at("obs.csv"), "-o",
                 at("A.csv")})
                .code,
            0);
  ASSERT_EQ(cli({"complete", "-i", at("obs.csv"), "--rows", "40", "--cols", "20", "-o", at("B.csv")}).code, 0);
  EXPECT_EQ(slurp(at("A.csv")), slurp(at("B.csv")));
  const json m = json::parse(slurp(at("A.csv.manifest.json")));
  EXPECT_TRUE(m["result"].contains("gamma_emp"));
}

TEST_F(Cli, CompressAndCompare) {
  ASSERT_EQ(cli({"gen", "sparse", "-N", "30", "-n", "50", "--seed", "5", "-o", at("X.csv")}).code, 0);
  ASSERT_EQ(cli({"compress", "-i", at("X.csv"), "-m", "20", "--seed", "3", "-o", at("Y.csv")}).code, 0);
  EXPECT_EQ(specperturb::io::read_matrix(at("Y.csv")).cols(), 20);
  ASSERT_EQ(cli({"compare", "-a", at("X.csv"), "-b", at("X.csv"), "-k", "2", "-o", at("c.json")}).code, 0);
  const json doc = json::parse(slurp(at("c.json")));
  EXPECT_LE(doc["embedding_summary"]["max_angle"].get<double>(), 1e-7);
}

TEST_F(Cli, SweepIsThreadInvariant) {
  const std::vector<std::string> args{"sweep", "measurements", "-N", "30", "-n", "40", "-s", "3", "--values", "4..16*2",
                                      "--trials", "3", "--seed", "2", "-o"};
  auto a = args, b = args;
  a.push_back(at("a.csv"));
  b.push_back(at("b.csv"));
  setenv("SPECPERTURB_THREADS", "1", 1);
  ASSERT_EQ(cli(a).code, 0);
  setenv("SPECPERTURB_THREADS", "2", 1);
  ASSERT_EQ(cli(b).code, 0);
  unsetenv("SPECPERTURB_THREADS");
  const std::string csv = slurp(at("a.csv"));
  EXPECT_EQ(csv, slurp(at("b.csv")));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "parameter,mean,std,trials");
  std::istringstream lines(csv);
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) ++n;
  EXPECT_EQ(n, 4);
}

TEST(CliRanges, Parsing) {
  using specperturb::cli::detail::parse_range;
  EXPECT_EQ(parse_range("4..32*2"), (std::vector<double>{4, 8, 16, 32}));
  EXPECT_EQ(parse_range("3..9/3"), (std::vector<double>{3, 6, 9}));
  EXPECT_EQ(parse_range("1,5,7"), (std::vector<double>{1, 5, 7}));
  EXPECT_EQ(parse_range("4..16*2,100"), (std::vector<double>{4, 8, 16, 100}));
  EXPECT_THROW(parse_range("4..x"), specperturb::InvalidArgument);
}
