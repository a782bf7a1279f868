// Copyright 2026 The IGW Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "igw/cli.hpp"

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "igw");
  std::ostringstream out, err;
  const int code = igw::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> data_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') lines.push_back(line);
  return lines;
}

std::string meta_value(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  std::string line;
  const std::string prefix = "# " + key + "=";
  while (std::getline(in, line))
    if (line.rfind(prefix, 0) == 0) return line.substr(prefix.size());
  return {};
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!s.empty() && s.back() == ',') out.emplace_back();
  return out;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("igw_cli_test_" + name);
}

}  // namespace

TEST(Cli, Classify) {
  const Result r = run({"classify", "--law", "binary:0.5", "--theta", "1.0"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "MeanExplodes,AlmostSureExplosion\n");
}

TEST(Cli, OneStepDeath) {
  const Result r = run({"exact", "one-step-death", "--law", "binary:1", "--theta", "0.8", "--x", "1"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NEAR(std::stod(r.out), 0.04, 1e-15);
}

TEST(Cli, TotalProgenyCsv) {
  const Result r = run({"exact", "total-progeny", "--law", "binary:0.5", "--theta", "1", "--x", "2"});
  ASSERT_EQ(r.code, 0);
  const auto lines = data_lines(r.out);
  ASSERT_EQ(lines.size(), 7u);
  EXPECT_EQ(lines[0], "value,prob");
  EXPECT_EQ(lines[1], "2,0.25");
  EXPECT_EQ(lines[4], "5,0.25");
  EXPECT_EQ(lines.back(), "overflow,0");
  EXPECT_EQ(meta_value(r.out, "caps"), "4096,4096,512");
  EXPECT_EQ(meta_value(r.out, "igw_version"), std::string(igw::kVersion));
}

TEST(Cli, DeathIntervalCsv) {
  const Result r = run({"exact", "death-interval", "--law", "binary:1", "--theta", "0.8", "--caps", "1024,1024,128"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = data_lines(r.out);
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0], "lo,hi");
  const auto cells = split(lines[1]);
  EXPECT_LE(std::stod(cells[0]), std::stod(cells[1]));
  EXPECT_LE(std::stod(cells[1]), 0.0625 + 1e-12);
}

TEST(Cli, McDeathIsByteIdenticalAcrossRunsAndWorkers) {
  const std::vector<std::string> base = {"mc", "death", "--law", "binary:1", "--theta", "0.8", "--x", "1",
                                         "--replicas", "20000", "--seed", "7"};
  const Result a = run(base);
  const Result b = run(base);
  auto with_workers = base;
  with_workers.insert(with_workers.end(), {"--workers", "4"});
  const Result c = run(with_workers);
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out, c.out);
  const Result d = run({"mc", "death", "--law", "binary:1", "--theta", "0.8", "--x", "1", "--replicas", "20000",
                        "--seed", "8"});
  EXPECT_NE(a.out, d.out);
}

TEST(Cli, SimulateIsByteIdenticalAcrossWorkers) {
  const std::vector<std::string> base = {"simulate", "--law", "binary:0.7", "--theta", "0.9", "--x", "2",
                                         "--replicas", "16", "--horizon", "30", "--seed", "3"};
  auto many = base;
  many.insert(many.end(), {"--workers", "3"});
  const Result a = run(base), b = run(many);
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  const auto lines = data_lines(a.out);
  EXPECT_EQ(lines[0], "replica,step,state_mode,state_value,log_state,y_ratio,termination");
  EXPECT_EQ(split(lines[1])[3], "2");
}

TEST(Cli, MetadataLawRoundTrips) {
  for (const char* law : {"binary:0.3", "pmf:0=0.2,2=0.8", "pmf:1=0.1,2=0.2,7=0.7"}) {
    const Result r = run({"exact", "total-progeny", "--law", law, "--theta", "0.5", "--x", "1"});
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(igw::parse_law(meta_value(r.out, "law")), igw::parse_law(law));
  }
}

TEST(Cli, ExitCodesAndDiagnostics) {
  Result r = run({"classify", "--theta", "0.5"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--law"), std::string::npos);
  r = run({"classify", "--law", "binary:0.5", "--theta", "1.5"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--theta"), std::string::npos);
  r = run({"classify", "--law", "pmf:0=0.5,q=0.5", "--theta", "0.5"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("'q'"), std::string::npos);
  r = run({"frobnicate", "--law", "binary:0.5", "--theta", "0.5"});
  EXPECT_EQ(r.code, 1);
  r = run({"exact", "--law", "binary:0.5", "--theta", "0.5"});
  EXPECT_EQ(r.code, 1);
  r = run({"bounds", "fixed-point", "--law", "pmf:0=0.1,2=0.9", "--theta", "0.8"});
  EXPECT_EQ(r.code, 2);
  r = run({"verify", "submult", "--law", "binary:0.5", "--theta", "0.7", "--caps", "8,8,4", "--max-x", "4",
           "--max-n", "4"});
  EXPECT_EQ(r.code, 3);
  EXPECT_EQ(meta_value(r.out, "result"), "indeterminate");
  for (const auto& line : data_lines(r.out)) EXPECT_EQ(line.find(",fail"), std::string::npos);
  r = run({"verify", "absorption", "--law", "pmf:0=0.2,2=0.8", "--theta", "0.9"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(data_lines(r.out).size(), 13u);
  r = run({"exact", "total-progeny", "--law", "binary:0.5", "--theta", "0.5", "--caps", "4,4"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--caps"), std::string::npos);
}

TEST(Cli, SweepEmptyGridIsHeaderOnly) {
  const Result r = run({"sweep", "--law", "binary:1", "--theta", "0.8", "--grid", "x="});
  EXPECT_EQ(r.code, 0);
  const auto lines = data_lines(r.out);
  ASSERT_EQ(lines.size(), 1u);
  EXPECT_EQ(lines[0], "index,x,theta,lo,hi");
  const Result desc = run({"sweep", "--law", "binary:1", "--theta", "0.8", "--grid", "x=5:1"});
  EXPECT_EQ(data_lines(desc.out).size(), 1u);
}

TEST(Cli, SweepRefusesOversizeGrid) {
  const Result r = run({"sweep", "--law", "binary:1", "--theta", "0.8", "--grid", "x=1:2000000"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--grid"), std::string::npos);
}

TEST(Cli, SweepDeathBoundsNonincreasingInX) {
  const Result r = run({"sweep", "--law", "binary:1", "--theta", "0.8", "--grid", "x=1:20", "--caps", "1024,1024,128"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = data_lines(r.out);
  ASSERT_EQ(lines.size(), 21u);
  double prev = 1.0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split(lines[i]);
    const double hi = std::stod(cells[4]);
    EXPECT_LE(hi, prev);
    EXPECT_LE(hi, std::pow(0.0625, static_cast<double>(i)) * (1 + 1e-9));
    prev = hi;
  }
}

TEST(Cli, SweepThetaOneNeverDies) {
  const Result r = run({"sweep", "--law", "binary:0.5", "--theta", "0.5", "--grid", "theta=1.0", "--quantity",
                        "mc-death", "--replicas", "500"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = data_lines(r.out);
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(split(lines[1])[3], "0");
  const Result many = run({"sweep", "--law", "binary:0.5", "--theta", "0.5", "--grid", "theta=0.7,0.9,1",
                           "--quantity", "mc-death", "--replicas", "300", "--workers", "3"});
  const Result one = run({"sweep", "--law", "binary:0.5", "--theta", "0.5", "--grid", "theta=0.7,0.9,1",
                          "--quantity", "mc-death", "--replicas", "300"});
  EXPECT_EQ(many.out, one.out);
}

TEST(Cli, ConfigFileWithFlagOverride) {
  const auto path = temp_path("config.txt");
  {
    std::ofstream f(path);
    f << "# comment\nlaw=binary:1\ntheta=0.8\n\nx=3\n";
  }
  Result r = run({"exact", "one-step-death", "--config", path.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(std::stod(r.out), igw::one_step_death_prob(3, igw::IGWParams(igw::OffspringLaw::binary(1), 0.8)), 1e-15);
  r = run({"exact", "one-step-death", "--config", path.string(), "--x", "1"});
  EXPECT_NEAR(std::stod(r.out), 0.04, 1e-15);
  {
    std::ofstream f(path);
    f << "law binary:1\n";
  }
  r = run({"classify", "--config", path.string(), "--theta", "1"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--config"), std::string::npos);
  std::filesystem::remove(path);
}

TEST(Cli, OutFlagWritesFile) {
  const auto path = temp_path("out.csv");
  const Result r = run({"bounds", "fixed-point", "--law", "binary:1", "--theta", "0.8", "--out", path.string()});
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(r.out.empty());
  std::ifstream f(path);
  const std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  const auto lines = data_lines(text);
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_NEAR(std::stod(split(lines[1])[0]), 0.0625, 1e-9);
  std::filesystem::remove(path);
}

TEST(Cli, ExplosionCertificateCsv) {
  const Result r = run({"bounds", "explosion", "--law", "binary:1", "--theta", "0.9", "--x", "10"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(meta_value(r.out, "valid"), "true");
  const double bound = std::stod(meta_value(r.out, "bound"));
  EXPECT_GT(bound, 0.0);
  EXPECT_LT(bound, 1.0);
  EXPECT_EQ(data_lines(r.out)[0], "state,method,raw,gamma,a_part,b_part");
}

TEST(Cli, BinaryExitStatus) {
  const std::string exe = IGW_CLI_PATH;
  EXPECT_EQ(std::system((exe + " classify --law binary:0.5 --theta 1 > /dev/null").c_str()), 0);
  const int status = std::system((exe + " classify --law binary:0.5 > /dev/null 2>&1").c_str());
  EXPECT_EQ(WEXITSTATUS(status), 1);
}
