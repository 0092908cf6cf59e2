#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "commands.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using fdindex::cli::json;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
};

Outcome run_cli(const std::string& args) {
  std::string cmd = std::string(FDINDEX_CLI_PATH) + " " + args + " 2>/dev/null";
  Outcome o;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return o;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) o.out.append(buf.data(), n);
  int status = pclose(pipe);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("fdindex_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string write(const std::string& name, const std::string& text) const {
    fs::path p = path_ / name;
    std::ofstream(p) << text;
    return p.string();
  }
  fs::path path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

const char* kGroupTemplate = R"j({
  "name": "tmp", "kind": "group",
  "group": {"degree": 4, "G": ["(1 2 3 4)", "(1 3)"], "H": HSPEC, "K": KSPEC, "L": ["(1 3)(2 4)", "(1 3)"]}
})j";

std::string group_scenario(const std::string& h, const std::string& k) {
  std::string s = kGroupTemplate;
  s.replace(s.find("HSPEC"), 5, h);
  s.replace(s.find("KSPEC"), 5, k);
  return s;
}

}  // namespace

TEST(Cli, ValidateWellFormed) {
  Outcome o = run_cli("validate " + fdtest::scenario("d4_trivial"));
  EXPECT_EQ(o.code, 0);
  json j = json::parse(o.out);
  EXPECT_EQ(j["status"], "ok");
  EXPECT_TRUE(j["result"]["valid"].get<bool>());
  EXPECT_EQ(j["version"], fdindex::version);
  EXPECT_DOUBLE_EQ(j["tolerances"]["eq_tol"].get<double>(), 1e-9);
}

TEST(Cli, MalformedCycleReportsPosition) {
  TempDir dir;
  std::string path = dir.write("bad.json", group_scenario(R"j(["(1 3"])j", R"j(["(1 2 3 4)"])j"));
  Outcome o = run_cli("validate " + path);
  EXPECT_EQ(o.code, 2);
  json j = json::parse(o.out);
  EXPECT_EQ(j["status"], "error");
  std::string msg = j["error"]["message"];
  EXPECT_NE(msg.find("position 4"), std::string::npos) << msg;
  EXPECT_NE(msg.find("group.H"), std::string::npos) << msg;
}

TEST(Cli, ContainmentViolationNamed) {
  TempDir dir;
  // K = <(1 3)> does not contain H = <(1 2 3 4)>
  std::string path = dir.write("contain.json", group_scenario(R"j(["(1 2 3 4)"])j", R"j(["(1 3)"])j"));
  Outcome o = run_cli("validate " + path);
  EXPECT_EQ(o.code, 2);
  std::string msg = json::parse(o.out)["error"]["message"];
  EXPECT_NE(msg.find("K"), std::string::npos) << msg;
  EXPECT_NE(msg.find("contain"), std::string::npos) << msg;
}

TEST(Cli, UnreadableFileIsValidationError) {
  Outcome o = run_cli("index /nonexistent/scenario.json");
  EXPECT_EQ(o.code, 2);
}

TEST(Cli, UnknownCommandAndBadFlag) {
  EXPECT_EQ(run_cli("frobnicate x.json").code, 2);
  EXPECT_EQ(run_cli("index --path sideways " + fdtest::scenario("d4_trivial")).code, 2);
}

TEST(Cli, IndexMatchesGroupOracle) {
  Outcome o = run_cli("index " + fdtest::scenario("s3_over_12"));
  ASSERT_EQ(o.code, 0);
  json r = json::parse(o.out)["result"];
  EXPECT_NEAR(r["scalar"].get<double>(), 3.0, 1e-9);
}

TEST(Cli, AngleOnD4ReportsOneThird) {
  Outcome o = run_cli("angle " + fdtest::scenario("d4_trivial"));
  ASSERT_EQ(o.code, 0);
  json r = json::parse(o.out)["result"];
  EXPECT_NEAR(r["interior"]["cos"].get<double>(), 1.0 / 3.0, 1e-8);
  EXPECT_TRUE(r["oracle_match"].get<bool>());
}

TEST(Cli, VerifyPasses) {
  Outcome o = run_cli("verify " + fdtest::scenario("s3_over_12"));
  EXPECT_EQ(o.code, 0);
  EXPECT_TRUE(json::parse(o.out)["result"]["all_passed"].get<bool>());
}

TEST(Cli, DeterministicReports) {
  TempDir dir;
  for (const char* cmd : {"index", "angle", "quasi-basis"}) {
    std::string a = (dir.path() / "a.json").string(), b = (dir.path() / "b.json").string();
    ASSERT_EQ(run_cli(std::string(cmd) + " --out " + a + " " + fdtest::scenario("d4_over_r2")).code, 0);
    ASSERT_EQ(run_cli(std::string(cmd) + " --out " + b + " " + fdtest::scenario("d4_over_r2")).code, 0);
    EXPECT_EQ(slurp(a), slurp(b)) << cmd;
    EXPECT_FALSE(slurp(a).empty());
  }
}

TEST(Cli, SeedFlagOverridesScenario) {
  Outcome o = run_cli("index --seed 99 " + fdtest::scenario("c_in_m2"));
  ASSERT_EQ(o.code, 0);
  EXPECT_EQ(json::parse(o.out)["seed"].get<std::uint64_t>(), 99u);
}

TEST(Cli, TableFormat) {
  Outcome o = run_cli("index --format table " + fdtest::scenario("c_in_m2"));
  ASSERT_EQ(o.code, 0);
  EXPECT_EQ(o.out.find('{'), std::string::npos);
  EXPECT_NE(o.out.find("result."), std::string::npos);
}

TEST(Cli, LatticeWritesCsv) {
  TempDir dir;
  std::string out = (dir.path() / "lat.json").string();
  Outcome o = run_cli("lattice --out " + out + " " + fdtest::scenario("d4_trivial"));
  ASSERT_EQ(o.code, 0);
  json r = json::parse(slurp(out))["result"];
  EXPECT_EQ(r["pairs"].size(), 28u);
  EXPECT_TRUE(r["all_match"].get<bool>());
  EXPECT_LT(r["max_discrepancy"].get<double>(), 1e-8);
  std::string csv = slurp(dir.path() / "lat.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 9);  // header + 8 rows
}

TEST(Cli, LatticeWithHEqualsGIsEmpty) {
  TempDir dir;
  std::string path = dir.write(
      "hg.json", R"j({"name": "hg", "kind": "group",
        "group": {"degree": 3, "G": ["(1 2)", "(1 2 3)"], "H": ["(1 2)", "(1 2 3)"]}})j");
  Outcome o = run_cli("lattice " + path);
  ASSERT_EQ(o.code, 0) << o.out;
  json r = json::parse(o.out)["result"];
  EXPECT_EQ(r["pairs"].size(), 0u);
}

TEST(Cli, AngleWithoutIntermediatesIsValidationError) {
  EXPECT_EQ(run_cli("angle " + fdtest::scenario("c_in_m2")).code, 2);
}

TEST(Scenario, ParsesMatrixForms) {
  using fdindex::cli::parse_matrix;
  json rows = json::parse(R"([[1, [0, 2]], [0, 1]])");
  fdindex::Matrix m = parse_matrix(rows, 2, "m");
  EXPECT_EQ(m(0, 1), fdindex::Complex(0, 2));
  fdindex::Matrix unit = parse_matrix(json::parse(R"({"unit": [1, 2]})"), 2, "m");
  EXPECT_EQ(unit(0, 1), fdindex::Complex(1));
  fdindex::Matrix perm = parse_matrix(json::parse(R"j({"perm": "(1 2)"})j"), 2, "m");
  EXPECT_EQ(perm(1, 0), fdindex::Complex(1));
  EXPECT_THROW(parse_matrix(json::parse("[[1, 0]]"), 2, "m"), fdindex::cli::ValidationError);
}
