#include "cli.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "varsketch");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = varsketch::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string write_temp(const std::string& name, const json& j) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << j.dump();
  return path.string();
}

const json kBudget = {{"variety", {{"mode", "cp"}, {"n", 8}, {"d", 3}, {"r", 2}}},
                      {"epsilon", 0.5},
                      {"delta", 0.01},
                      {"N", 512}};

}  // namespace

TEST(Cli, BoundsEmitsJsonReport) {
  const auto r = run({"bounds", "--config", write_temp("vs_bounds.json", kBudget)});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_TRUE(j.contains("subgaussian_m"));
  EXPECT_TRUE(j.contains("median_k"));
  EXPECT_EQ(j["M"], 512);
}

TEST(Cli, BoundsConstantOverride) {
  const std::string cfg = write_temp("vs_bounds2.json", kBudget);
  const json a = json::parse(run({"bounds", "--config", cfg}).out);
  const json b = json::parse(run({"bounds", "--config", cfg, "--C3", "2"}).out);
  EXPECT_EQ(b["constants"]["C3"], 2.0);
  EXPECT_LT(b["subgaussian_m"].get<double>(), a["subgaussian_m"].get<double>());
}

TEST(Cli, BoundsCsv) {
  const auto r = run({"--format", "csv", "bounds", "--config", write_temp("vs_bounds3.json", kBudget)});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "quantity,value");
}

TEST(Cli, MissingConfigNamesPath) {
  const auto r = run({"bounds", "--config", "/nonexistent/dir/p.json"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("/nonexistent/dir/p.json"), std::string::npos);
}

TEST(Cli, UnknownSubcommandOrFlag) {
  auto r = run({"frobnicate"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  r = run({"mom", "--p", "0.2", "--k", "5", "--bogus"});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(run({}).code, 1);
}

TEST(Cli, HelpExitsZero) { EXPECT_EQ(run({"--help"}).code, 0); }

TEST(Cli, MomWithinBound) {
  const auto r = run({"mom", "--p", "0.2", "--k", "5", "--trials", "100000"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  const double half = (j["ci99"][1].get<double>() - j["ci99"][0].get<double>()) / 2;
  EXPECT_LE(j["rate"].get<double>(), 0.06455 + half);
  EXPECT_TRUE(j["within_bound"].get<bool>());
}

TEST(Cli, MomValidationExitsOne) {
  EXPECT_EQ(run({"mom", "--p", "0.7", "--k", "1"}).code, 1);
}

TEST(Cli, PolycertPasses) {
  const auto r = run({"polycert", "--eps", "0.5", "--M", "3", "--eta", "0.25"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(json::parse(r.out)["pass"].get<bool>());
}

TEST(Cli, DistortWritesOutFile) {
  const json cfg = {{"problem", {{"mode_lengths", {4, 4, 4}}, {"points", 5}}},
                    {"operator", {{"kind", "khatri_rao"}, {"m", 32}}},
                    {"committee_k", 1},
                    {"trials", 10},
                    {"seed", 3}};
  const auto out = (std::filesystem::temp_directory_path() / "vs_distort_report.json").string();
  const auto r = run({"--out", out, "distort", "--config", write_temp("vs_distort.json", cfg)});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream f(out);
  const json j = json::parse(f);
  EXPECT_EQ(j["trials"], 10);
  EXPECT_EQ(j["config"]["seed"], 3);
}

TEST(Cli, SeedFlagOverridesConfig) {
  const json cfg = {{"problem", {{"mode_lengths", {4, 4}}, {"points", 3}}},
                    {"operator", {{"kind", "gaussian"}, {"m", 8}}},
                    {"trials", 5},
                    {"seed", 3}};
  const auto r = run({"--seed", "9", "distort", "--config", write_temp("vs_seed.json", cfg)});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["provenance"]["seed"], 9);
}

TEST(Cli, SketchSelectsMember) {
  const json cfg = {{"operator", {{"kind", "gaussian"}, {"m", 4}, {"input_shape", {3}}, {"seed", 1}}},
                    {"input", {1.0, 2.0, 3.0}},
                    {"committee_k", 1}};
  const auto r = run({"sketch", "--config", write_temp("vs_sketch.json", cfg)});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_EQ(j["committee_size"], 3);
  EXPECT_LT(j["selected_member"].get<int>(), 3);
}

TEST(Cli, ShapeMismatchExitsOne) {
  const json cfg = {{"operator", {{"kind", "gaussian"}, {"m", 4}, {"input_shape", {5}}}},
                    {"input", {1.0, 2.0, 3.0}}};
  EXPECT_EQ(run({"sketch", "--config", write_temp("vs_sketch_bad.json", cfg)}).code, 1);
}
