#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "shadowsim_app.hpp"

namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("shadowsim_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    shadowsim::AppEnv env{dir_.string()};
    return shadowsim::run_app(std::move(args), out_, err_, env);
  }

  std::string slurp(const std::string& name) const {
    std::ifstream in(dir_ / name, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  static std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> v;
    std::stringstream ss(text);
    std::string l;
    while (std::getline(ss, l)) v.push_back(l);
    return v;
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

TEST_F(Cli, ChshPrintsViolation) {
  EXPECT_EQ(run({"chsh", "--angles", "0,1.5707963,0.7853981,2.3561944"}), 0);
  EXPECT_NE(out_.str().find("S = 2.828427"), std::string::npos) << out_.str();
  EXPECT_NE(out_.str().find("VIOLATED"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "chsh.csv"));
}

TEST_F(Cli, ChshWithShotsNeedsSeed) {
  EXPECT_EQ(run({"chsh", "--shots", "1000"}), 2);
  EXPECT_EQ(run({"chsh", "--shots", "1000", "--seed", "4", "-o", "c.csv"}), 0);
  EXPECT_EQ(lines(slurp("c.csv")).front(), "setting,alpha,beta,E,E_mc,stderr,n");
}

TEST_F(Cli, VerifyLocalityPasses) {
  EXPECT_EQ(run({"verify", "--mode", "locality", "--alpha", "1.0471975", "--beta", "0.4487989"}), 0);
  EXPECT_NE(out_.str().find("ALL PASS"), std::string::npos) << out_.str();
  auto rows = lines(slurp("verify_locality.csv"));
  ASSERT_GT(rows.size(), 1u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].substr(rows[i].rfind(',') + 1), "PASS") << rows[i];
  }
}

TEST_F(Cli, VerifyNormalizationAndCongruenceModes) {
  EXPECT_EQ(run({"verify", "--mode", "normalization", "--alpha-grid", "0:6.28:8", "--beta-grid", "0:6.28:8"}), 0);
  EXPECT_EQ(run({"verify", "--mode", "congruence"}), 0);
  EXPECT_EQ(run({"verify", "--mode", "bogus"}), 2);
}

TEST_F(Cli, ScanGridRowsSumToOne) {
  EXPECT_EQ(run({"scan", "--alpha", "0", "--beta-grid", "0:6.2831853:64"}), 0);
  auto rows = lines(slurp("scan.csv"));
  ASSERT_EQ(rows.size(), 65u);
  EXPECT_EQ(rows[0], "alpha,beta,p_uu,p_ud,p_du,p_dd,E");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    std::stringstream ss(rows[i]);
    std::string cell;
    std::vector<double> v;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    ASSERT_EQ(v.size(), 7u);
    EXPECT_NEAR(v[2] + v[3] + v[4] + v[5], 1.0, 1e-12);
  }
}

TEST_F(Cli, ScanWritesSeventeenDigits) {
  EXPECT_EQ(run({"scan", "--alpha", "0.1", "--beta", "0.2", "-o", "-"}), 0);
  auto rows = lines(out_.str());
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1].substr(0, rows[1].find(',')), "0.10000000000000001");
  EXPECT_NE(err_.str().find("scan: 1 rows"), std::string::npos);
}

TEST_F(Cli, JsonlRowsParse) {
  EXPECT_EQ(run({"mc", "--seed", "3", "--shots", "50", "--format", "jsonl"}), 0);
  auto rows = lines(slurp("events.jsonl"));
  ASSERT_EQ(rows.size(), 50u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto j = nlohmann::json::parse(rows[i]);
    EXPECT_EQ(j["trial"].get<std::uint64_t>(), i);
    EXPECT_TRUE(j["left"] == "u" || j["left"] == "d");
    EXPECT_TRUE(j["right"] == "u'" || j["right"] == "d'");
  }
}

TEST_F(Cli, McNeedsSeedAndValidShots) {
  EXPECT_EQ(run({"mc", "--shots", "10"}), 2);
  EXPECT_NE(err_.str().find("--seed"), std::string::npos);
  EXPECT_EQ(run({"mc", "--seed", "1", "--shots", "0"}), 2);
  EXPECT_EQ(run({"mc", "--seed", "1", "--format", "xml"}), 2);
}

TEST_F(Cli, McIsDeterministicAcrossRunsAndWorkers) {
  ASSERT_EQ(run({"mc", "--seed", "11", "--shots", "20000", "--beta", "0.9", "-o", "a.csv",
                 "--assignments", "ta.csv"}),
            0);
  ASSERT_EQ(run({"mc", "--seed", "11", "--shots", "20000", "--beta", "0.9", "-o", "b.csv",
                 "--assignments", "tb.csv"}),
            0);
  ASSERT_EQ(run({"mc", "--seed", "11", "--shots", "20000", "--beta", "0.9", "-o", "c.csv",
                 "--assignments", "tc.csv", "--workers", "6"}),
            0);
  EXPECT_EQ(slurp("a.csv"), slurp("b.csv"));
  EXPECT_EQ(slurp("a.csv"), slurp("c.csv"));
  EXPECT_EQ(slurp("ta.csv"), slurp("tc.csv"));
  auto trace = lines(slurp("ta.csv"));
  EXPECT_EQ(trace[0], "trial,left_tangible,right_tangible,shadow_paths");
  EXPECT_TRUE(trace[1] == "0,a,a',b;b'" || trace[1] == "0,b,b',a;a'") << trace[1];
  ASSERT_EQ(run({"mc", "--seed", "12", "--shots", "20000", "--beta", "0.9", "-o", "d.csv"}), 0);
  EXPECT_NE(slurp("a.csv"), slurp("d.csv"));
}

TEST_F(Cli, ChshMonteCarloIsWorkerInvariant) {
  ASSERT_EQ(run({"chsh", "--shots", "5000", "--seed", "9", "-o", "one.csv"}), 0);
  std::string s1 = out_.str();
  ASSERT_EQ(run({"chsh", "--shots", "5000", "--seed", "9", "--workers", "4", "-o", "four.csv"}), 0);
  EXPECT_EQ(slurp("one.csv"), slurp("four.csv"));
}

TEST_F(Cli, MzTable) {
  EXPECT_EQ(run({"mz", "--phi-grid", "0:6.283185307179586:64"}), 0);
  auto rows = lines(slurp("mz.csv"));
  ASSERT_EQ(rows.size(), 65u);
  EXPECT_EQ(rows[0], "phi,re_U,im_U,re_D,im_D,P_U,P_D");
}

TEST_F(Cli, PathintTasksAreDeterministic) {
  std::vector<std::string> evolve{"pathint", "--task", "evolve", "--grid", "-256:256:512",
                                  "--sigma", "20", "--eps", "4", "--slices", "20", "--every", "10"};
  auto e1 = evolve, e2 = evolve;
  e1.insert(e1.end(), {"-o", "e1.csv"});
  e2.insert(e2.end(), {"-o", "e2.csv"});
  ASSERT_EQ(run(e1), 0);
  ASSERT_EQ(run(e2), 0);
  EXPECT_EQ(slurp("e1.csv"), slurp("e2.csv"));
  auto rows = lines(slurp("e1.csv"));
  EXPECT_EQ(rows[0], "t,x,re,im");
  EXPECT_EQ(rows.size(), 1u + 3u * 512u);

  ASSERT_EQ(run({"pathint", "--task", "kernel", "--slices-list", "8,16", "-o", "k.csv"}), 0);
  EXPECT_EQ(lines(slurp("k.csv"))[0], "slices,rel_error_modulus,phase_error");
  ASSERT_EQ(run({"pathint", "--task", "residual", "--eps", "0.02", "--ratio", "8", "--levels", "1",
                 "-o", "r.csv"}),
            0);
  EXPECT_EQ(lines(slurp("r.csv")).size(), 3u);
}

TEST_F(Cli, PathintConfigErrors) {
  EXPECT_EQ(run({"pathint", "--task", "evolve", "--eps", "0.1"}), 2);  // undersampled
  EXPECT_EQ(run({"pathint", "--task", "teleport"}), 2);
  EXPECT_EQ(run({"pathint", "--potential", "quartic:1"}), 2);
  EXPECT_EQ(run({"pathint", "--grid", "1:0:10"}), 2);
}

TEST_F(Cli, LayoutFileRoundTripAndInjectedPhaseFails) {
  ASSERT_EQ(run({"layout", "-o", "rt.json"}), 0);
  EXPECT_TRUE(shadow::load_layout((dir_ / "rt.json").string()) == shadow::build_rarity_tapster(0, 0));
  EXPECT_EQ(run({"verify", "--mode", "congruence", "--layout", (dir_ / "rt.json").string()}), 0);

  ASSERT_EQ(run({"layout", "--inject-phase", "b:0.3", "-o", "bad.json"}), 0);
  EXPECT_EQ(run({"verify", "--mode", "congruence", "--layout", (dir_ / "bad.json").string()}), 1);
  EXPECT_NE(out_.str().find("FAIL"), std::string::npos);
  EXPECT_NE(slurp("verify_congruence.csv").find("0.21133743"), std::string::npos);
}

TEST_F(Cli, LayoutErrorsAreConfigErrors) {
  {
    std::ofstream f(dir_ / "broken.json");
    f << "{\n  \"kind\": \"x\",\n  \"elements\" [\n";
  }
  EXPECT_EQ(run({"verify", "--layout", (dir_ / "broken.json").string()}), 2);
  EXPECT_NE(err_.str().find("line 3"), std::string::npos) << err_.str();
  {
    auto doc = shadow::layout_to_json(shadow::build_rarity_tapster(0, 0));
    doc["elements"][0]["type"] = "wormhole";
    std::ofstream f(dir_ / "kind.json");
    f << doc.dump(2);
  }
  EXPECT_EQ(run({"verify", "--layout", (dir_ / "kind.json").string()}), 2);
  EXPECT_NE(err_.str().find("wormhole"), std::string::npos) << err_.str();
  EXPECT_EQ(run({"verify", "--layout", (dir_ / "missing.json").string()}), 3);
}

TEST_F(Cli, IoFailureExitCode) {
  EXPECT_EQ(run({"scan", "-o", "/nonexistent-dir/scan.csv"}), 3);
  EXPECT_NE(err_.str().find("I/O error"), std::string::npos);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run({}), 2);
  EXPECT_EQ(run({"frobnicate"}), 2);
  EXPECT_EQ(run({"scan", "--alpha", "abc"}), 2);
  EXPECT_EQ(run({"scan", "--beta-grid", "0:1"}), 2);
  EXPECT_EQ(run({"scan", "--beta-grid", "0:1:0"}), 2);
}

TEST_F(Cli, HelpExitsZero) {
  EXPECT_EQ(run({"--help"}), 0);
  EXPECT_NE(out_.str().find("scan"), std::string::npos);
  EXPECT_EQ(run({"mc", "--help"}), 0);
  EXPECT_NE(out_.str().find("--seed"), std::string::npos);
}

TEST_F(Cli, OutputDirectoryFromEnvironment) {
  shadowsim::AppEnv none{};
  std::ostringstream o, e;
  auto abs = (dir_ / "explicit.csv").string();
  EXPECT_EQ(shadowsim::run_app({"scan", "-o", abs}, o, e, none), 0);
  EXPECT_TRUE(fs::exists(abs));
  EXPECT_EQ(run({"scan", "-o", "sub.csv"}), 0);
  EXPECT_TRUE(fs::exists(dir_ / "sub.csv"));
}

}  // namespace
