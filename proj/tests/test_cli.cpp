#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  auto dir = fs::temp_directory_path() / "rdp_cli_test";
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args) {
  std::string cmd = std::string(RDP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string line; std::getline(ss, line);) out.push_back(line);
  return out;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> v;
  std::stringstream ss(s);
  for (std::string x; std::getline(ss, x, ',');) v.push_back(x);
  return v;
}

}  // namespace

TEST(Cli, SolveRdpBinary) {
  auto out = scratch() / "solve.json";
  ASSERT_EQ(run("solve-rdp --source binary:p=0.1 --D 0.05 --P 1 --bits --out " + out.string()), 0);
  auto j = nlohmann::json::parse(slurp(out));
  EXPECT_EQ(j["schema_version"], 1);
  EXPECT_NEAR(j["rate"].get<double>(), 0.126568, 1e-4);
  EXPECT_NEAR(j["rate_bits"].get<double>(), 0.126568 / std::log(2.0), 1e-4);
  EXPECT_TRUE(j["converged"].get<bool>());
}

TEST(Cli, InputErrorsExitOne) {
  EXPECT_EQ(run("solve-rdp --source binary:p=0.1 --D 0.05"), 1);
  EXPECT_EQ(run("solve-rdp --source binary:p=0.1 --D -1 --P 0.1"), 1);
  EXPECT_EQ(run("bogus"), 1);
  auto bad = scratch() / "bad.json";
  std::ofstream(bad) << "{broken";
  auto out = scratch() / "never.json";
  fs::remove(out);
  EXPECT_EQ(run("solve-rdp --source file=" + bad.string() + " --D 0.1 --P 0.1 --out " + out.string()), 1);
  EXPECT_FALSE(fs::exists(out));
}

TEST(Cli, NonConvergenceExitsTwo) {
  EXPECT_EQ(run("solve-rdp --source binary:p=0.1 --D 0.03 --P 0.02 --max-iter 2"), 2);
}

TEST(Cli, SweepCsvSchemaAndMonotonicity) {
  auto out = scratch() / "sweep.csv";
  ASSERT_EQ(run("sweep --source binary:p=0.1 --D-grid 0.02:0.08:4 --P-grid 0.02:0.06:2 --out " + out.string()), 0);
  auto lines = lines_of(slurp(out));
  ASSERT_EQ(lines.size(), 2u + 8u);
  EXPECT_EQ(lines[0], "# schema_version=1");
  EXPECT_EQ(lines[1], "D,P,rate,achieved_D,achieved_P,converged");
  // Row-major in D, so rows with the same P are 2 apart.
  for (std::size_t k = 2; k + 2 < lines.size(); ++k) {
    auto a = split(lines[k]), b = split(lines[k + 2]);
    EXPECT_LE(std::stod(b[2]), std::stod(a[2]) + 1e-6);
  }
}

TEST(Cli, TransitionModes) {
  auto h = scratch() / "h.csv";
  ASSERT_EQ(run("transition --mode h --source binary:p=0.1 --P-grid 0:0.1:3 --out " + h.string()), 0);
  auto lines = lines_of(slurp(h));
  auto header = std::find(lines.begin(), lines.end(), "D,P");
  ASSERT_NE(header, lines.end());
  ASSERT_NE(header + 1, lines.end());
  auto row = split(*(header + 1));
  EXPECT_EQ(std::stod(row[1]), 0.0);
  EXPECT_NEAR(std::stod(row[0]), 0.18, 1e-12);

  auto samples = scratch() / "flat.csv";
  std::ofstream(samples) << "P,D\n0,0.5\n0.1,0.5\n0.2,0.5\n";
  auto det = scratch() / "det.txt";
  ASSERT_EQ(run("transition --mode detect --samples " + samples.string() + " --out " + det.string()), 0);
  auto dl = lines_of(slurp(det));
  auto j = nlohmann::json::parse(dl.back());
  EXPECT_EQ(j["P"].get<double>(), 0.0);

  auto steep = scratch() / "steep.csv";
  std::ofstream(steep) << "P,D\n0,1\n0.1,0.5\n0.2,0\n";
  EXPECT_EQ(run("transition --mode detect --samples " + steep.string()), 3);
}

TEST(Cli, SolveDrpZeroRate) {
  auto out = scratch() / "drp.json";
  ASSERT_EQ(run("solve-drp --source binary:p=0.1 --R 0 --P 0 --out " + out.string()), 0);
  auto j = nlohmann::json::parse(slurp(out));
  EXPECT_NEAR(j["distortion"].get<double>(), 0.18, 1e-12);
  EXPECT_EQ(run("solve-drp --source binary:p=0.1 --R 0 --P 0 --perception kl"), 1);
}

TEST(Cli, RdhZeroBudget) {
  auto img = scratch() / "img.pgm";
  std::ofstream(img) << "P2\n3 3\n255\n10 20 30\n40 50 60\n70 80 90\n";
  auto out = scratch() / "rdh.json";
  ASSERT_EQ(run("rdh --image " + img.string() + " --D 0 --P 1 --seed 3 --out " + out.string()), 0);
  auto j = nlohmann::json::parse(slurp(out));
  EXPECT_EQ(j["embedding_rate_nats"].get<double>(), 0.0);
  EXPECT_EQ(j["psnr"], "inf");
  EXPECT_EQ(run("rdh --image " + img.string() + " --D 0 --P 1 --emit-marked " + (scratch() / "m.pgm").string()), 1);
}
