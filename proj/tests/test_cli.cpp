#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <numbers>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pst_forge_cli.hpp"

using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = pst::cli::run(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> split_lines(const std::string& s) {
  std::vector<std::string> lines;
  std::istringstream in(s);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::istringstream in(line);
  for (std::string c; std::getline(in, c, ',');) cells.push_back(c);
  return cells;
}

class TempDir {
 public:
  TempDir() : path_(std::filesystem::temp_directory_path() / ("pst-cli-" + std::to_string(::getpid()))) {
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  std::string write(const std::string& name, const std::string& content) const {
    const auto p = path_ / name;
    std::ofstream(p) << content;
    return p.string();
  }

 private:
  std::filesystem::path path_;
};

const std::vector<std::string> kQuotedFourSite = {"--geometry", "open", "--couplings", "1.58114,0.948683,1.26491"};

std::vector<std::string> with(std::vector<std::string> head, const std::vector<std::string>& tail) {
  head.insert(head.end(), tail.begin(), tail.end());
  return head;
}

}  // namespace

TEST(Cli, TrajectoryCsvEndsOnSiteThree) {
  const auto r = run(with({"trajectory"}, with(kQuotedFourSite, {"--from", "1", "--tmax", "pi", "--steps", "201", "--format",
                                                      "csv"})));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = split_lines(r.out);
  ASSERT_EQ(lines.size(), 202u);
  EXPECT_EQ(lines.front(), "time,p1,p2,p3,p4");
  const auto last = split_csv(lines.back());
  ASSERT_EQ(last.size(), 5u);
  EXPECT_DOUBLE_EQ(std::stod(last[0]), std::numbers::pi);
  std::vector<double> p;
  for (std::size_t k = 1; k < last.size(); ++k) p.push_back(std::stod(last[k]));
  EXPECT_EQ(std::max_element(p.begin(), p.end()) - p.begin(), 2);
  EXPECT_GT(p[2], 1.0 - 1e-5);
  const auto first = split_csv(lines[1]);
  EXPECT_NEAR(std::stod(first[1]), 1.0, 1e-12);
}

TEST(Cli, ClassifyClosedFiveNeighbours) {
  const auto r = run({"classify", "--geometry", "closed", "--n", "5", "--from", "1", "--to", "2", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["status"], "excluded");
  EXPECT_EQ(j["rule"], "closed-odd");
  EXPECT_FALSE(j["numerical_evidence"].get<bool>());

  const auto text = run({"classify", "--geometry", "closed", "--n", "5", "--from", "1", "--to", "2"});
  EXPECT_NE(text.out.find("closed-odd"), std::string::npos);
}

TEST(Cli, MapClosedFourIsAllReachable) {
  const auto r = run({"map", "--geometry", "closed", "--n", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = split_lines(r.out);
  ASSERT_GE(lines.size(), 6u);
  for (int m = 1; m <= 4; ++m) {
    std::istringstream row(lines[static_cast<std::size_t>(m + 1)]);
    int label;
    row >> label;
    EXPECT_EQ(label, m);
    for (int k = 1; k <= 4; ++k) {
      std::string cell;
      row >> cell;
      EXPECT_EQ(cell, m == k ? "o" : "R") << m << "," << k;
    }
  }

  const auto j = json::parse(run({"map", "--geometry", "closed", "--n", "4", "--format", "json"}).out);
  for (const auto& row : j["verdicts"])
    for (const auto& v : row) EXPECT_EQ(v["status"], "reachable");
}

TEST(Cli, SpectrumAndFidelity) {
  const auto s = json::parse(run({"spectrum", "--couplings", "1", "--format", "json"}).out);
  EXPECT_NEAR(s["eigenvalues"][0].get<double>(), -1.0, 1e-15);
  EXPECT_NEAR(s["eigenvalues"][1].get<double>(), 1.0, 1e-15);
  EXPECT_FALSE(s["degenerate"].get<bool>());

  const auto f = json::parse(
      run({"fidelity", "--couplings", "1", "--from", "1", "--to", "2", "--time", "pi/2", "--format", "json"}).out);
  EXPECT_NEAR(f["fidelity"].get<double>(), 1.0, 1e-15);
  EXPECT_NEAR(f["amplitude"][0].get<double>(), 0.0, 1e-15);
  EXPECT_NEAR(f["amplitude"][1].get<double>(), -1.0, 1e-15);
}

TEST(Cli, CheckReportsRetrievalTime) {
  const auto r = run({"check", "--couplings", "1,1", "--from", "1", "--to", "3", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_TRUE(j["criterion1"]["satisfied"].get<bool>());
  EXPECT_TRUE(j["pst"].get<bool>());
  EXPECT_EQ(j["participating"], 3);
  EXPECT_NEAR(j["retrieval_time"].get<double>(), std::numbers::pi / std::sqrt(2.0), 1e-12);

  const auto quoted_default = json::parse(run(with({"check"}, with(kQuotedFourSite, {"--from", "1", "--to", "3", "--format",
                                                                           "json"}))).out);
  EXPECT_FALSE(quoted_default["pst"].get<bool>());
  const auto quoted_loose = json::parse(run(with({"check"}, with(kQuotedFourSite, {"--from", "1", "--to", "3", "--tol", "1e-5",
                                                                         "--format", "json"}))).out);
  EXPECT_TRUE(quoted_loose["pst"].get<bool>());
  EXPECT_NEAR(quoted_loose["retrieval_time"].get<double>(), std::numbers::pi, 1e-6);

  const auto none = run({"check", "--couplings", "1,1,1", "--from", "1", "--to", "2"});
  EXPECT_EQ(none.code, 0);
  EXPECT_NE(none.out.find("no PST"), std::string::npos);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run({"map", "--geometry", "open", "--n", "4"}).code, 0);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"map", "--geometry", "ring", "--n", "4"}).code, 2);
  EXPECT_EQ(run({"fidelity", "--couplings", "1", "--from", "1", "--to", "2", "--time", "soon"}).code, 2);
  EXPECT_EQ(run({"fidelity", "--couplings", "1", "--from", "1", "--to", "2", "--time", "free"}).code, 2);
  EXPECT_EQ(run({"optimize", "--n", "4", "--from", "1", "--to", "3", "--bounds", "1-2"}).code, 2);
  EXPECT_EQ(run({"spectrum"}).code, 2);
  EXPECT_EQ(run({"map"}).code, 2);

  const auto bad = run({"spectrum", "--couplings", "1,-1", "--format", "json"});
  EXPECT_EQ(bad.code, 1);
  const auto j = json::parse(bad.out);
  EXPECT_EQ(j["error"]["type"], "domain");
  EXPECT_NE(j["error"]["message"].get<std::string>().find("J_2"), std::string::npos);

  const auto text = run({"fidelity", "--couplings", "1", "--from", "1", "--to", "5", "--time", "1"});
  EXPECT_EQ(text.code, 1);
  EXPECT_TRUE(text.out.empty());
  EXPECT_NE(text.err.find("error:"), std::string::npos);

  EXPECT_EQ(run({"map", "--n", "65"}).code, 1);
  EXPECT_EQ(run({"help"}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, ConfigFileMirrorsFlagsAndFlagsWin) {
  TempDir dir;
  const auto cfg = dir.write("cfg.json", R"({"geometry": "closed", "n": 5, "from": 1, "to": 2, "format": "json"})");
  const auto r = run({"classify", "--config", cfg});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["rule"], "closed-odd");

  const auto over = run({"classify", "--config", cfg, "--geometry", "open", "--n", "4", "--to", "4"});
  ASSERT_EQ(over.code, 0) << over.err;
  const auto j = json::parse(over.out);
  EXPECT_EQ(j["geometry"], "open");
  EXPECT_EQ(j["rule"], "mirror-pair");

  const auto list = dir.write("list.json", R"({"couplings": [1.58114, 0.948683, 1.26491], "format": "json"})");
  const auto s = run({"spectrum", "--config", list});
  ASSERT_EQ(s.code, 0) << s.err;
  EXPECT_EQ(json::parse(s.out)["profile"]["n"], 4);

  EXPECT_EQ(run({"map", "--config", dir.write("bad.json", "[1, 2]")}).code, 1);
  EXPECT_EQ(run({"map", "--config", (std::filesystem::temp_directory_path() / "missing-pst.json").string()}).code, 1);
}

TEST(Cli, EmittedProfilesRoundTrip) {
  TempDir dir;
  const auto opt = run({"optimize", "--geometry", "closed", "--n", "5", "--from", "1", "--to", "3", "--time", "free",
                        "--restarts", "4", "--seed", "7", "--format", "json"});
  ASSERT_EQ(opt.code, 0) << opt.err;
  const auto o = json::parse(opt.out);
  const auto file = dir.write("opt.json", opt.out);
  std::ostringstream t;
  t << std::setprecision(17) << o["time"].get<double>();

  const auto f = run({"fidelity", "--profile-file", file, "--from", "1", "--to", "3", "--time", t.str(), "--format",
                      "json"});
  ASSERT_EQ(f.code, 0) << f.err;
  EXPECT_NEAR(json::parse(f.out)["fidelity"].get<double>(), o["fidelity"].get<double>(), 1e-12);

  const auto bare = dir.write("bare.json", o["profile"].dump());
  const auto s = run({"spectrum", "--profile-file", bare, "--format", "json"});
  ASSERT_EQ(s.code, 0);
  EXPECT_EQ(json::parse(s.out)["profile"], o["profile"]);

  const auto d = run({"design", "--n", "4", "--from", "1", "--to", "3", "--emax", "3", "--format", "json"});
  ASSERT_EQ(d.code, 0) << d.err;
  const auto designs = json::parse(d.out)["designs"];
  ASSERT_FALSE(designs.empty());
  const auto dfile = dir.write("design.json", designs[0].dump());
  const auto c = run({"check", "--profile-file", dfile, "--from", "1", "--to", "3", "--format", "json"});
  ASSERT_EQ(c.code, 0) << c.err;
  const auto cj = json::parse(c.out);
  EXPECT_TRUE(cj["pst"].get<bool>());
  EXPECT_NEAR(cj["retrieval_time"].get<double>(), designs[0]["spectrum"]["retrieval_time"].get<double>(), 1e-9);
}

TEST(Cli, SameSeedIsByteIdentical) {
  const std::vector<std::string> args = {"optimize", "--geometry", "open", "--n", "5", "--from", "1", "--to", "5",
                                         "--restarts", "6", "--seed", "11", "--format", "json"};
  const auto a = run(args);
  const auto b = run(args);
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  auto other = args;
  other[12] = "12";
  EXPECT_NE(run(other).out, a.out);
}

TEST(Cli, TextOutputs) {
  const auto s = run({"spectrum", "--geometry", "closed", "--couplings", "1,1,1,1,1,1"});
  EXPECT_EQ(s.code, 0);
  EXPECT_NE(s.out.find("degenerate"), std::string::npos);
  const auto d = run({"design", "--n", "4", "--from", "1", "--to", "2", "--emax", "4"});
  EXPECT_EQ(d.code, 0);
  EXPECT_EQ(d.out.rfind("0 design(s)", 0), 0u);
  const auto m = run({"map", "--geometry", "open", "--n", "6"});
  EXPECT_NE(m.out.find("X"), std::string::npos);
}

#ifdef PST_FORGE_EXE
TEST(Cli, ExecutableExitStatus) {
  const std::string exe = PST_FORGE_EXE;
  auto status = [&](const std::string& a) {
    const int raw = std::system((exe + " " + a + " > /dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  EXPECT_EQ(status("map --geometry closed --n 4"), 0);
  EXPECT_EQ(status("spectrum --couplings 1,0"), 1);
  EXPECT_EQ(status("spectrum --bogus"), 2);
}
#endif
