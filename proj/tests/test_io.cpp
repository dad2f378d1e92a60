#include "varsketch/errors.hpp"
#include "varsketch/io.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace varsketch;

namespace {
std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("varsketch_io_" + name);
}
}  // namespace

TEST(CpJson, RoundTrip) {
  const CPTensor t = random_cp({2, 3, 4}, 2, Distribution::gaussian, 4);
  const auto j = cp_to_json(t);
  EXPECT_EQ(j["rank"], 2);
  EXPECT_EQ(j["mode_lengths"], nlohmann::json({2, 3, 4}));
  EXPECT_TRUE(cp_from_json(nlohmann::json::parse(j.dump())) == t);
}

TEST(CpJson, FactorsAreColumnMajor) {
  const auto j = nlohmann::json::parse(
      R"({"mode_lengths": [2, 2], "rank": 2, "factors": [[1, 2, 3, 4], [1, 0, 0, 1]]})");
  const CPTensor t = cp_from_json(j);
  EXPECT_EQ(t.factor(0)(1, 0), 2.0);
  EXPECT_EQ(t.factor(0)(0, 1), 3.0);
}

TEST(CpJson, RejectsInconsistentLengths) {
  const auto j = nlohmann::json::parse(R"({"mode_lengths": [2, 2], "rank": 2, "factors": [[1, 2, 3], [1, 0, 0, 1]]})");
  EXPECT_THROW(cp_from_json(j), ValidationError);
}

TEST(VectorJson, RoundTrip) {
  const DenseVector v({1.5, -2.25, 1e-300});
  EXPECT_EQ(vector_from_json(vector_to_json(v)), v);
}

TEST(Binary, LayoutIsLengthHeaderThenLittleEndianDoubles) {
  std::stringstream s;
  write_binary(s, DenseVector({1.0, -2.0}));
  const std::string bytes = s.str();
  ASSERT_EQ(bytes.size(), 8u + 16u);
  std::uint64_t n = 0;
  for (int i = 7; i >= 0; --i) n = (n << 8) | static_cast<unsigned char>(bytes[i]);
  EXPECT_EQ(n, 2u);
  double first;
  std::memcpy(&first, bytes.data() + 8, 8);  // host is little-endian in CI
  EXPECT_EQ(first, 1.0);
}

TEST(Binary, MultipleRecordsRoundTrip) {
  const auto path = temp_file("multi.bin");
  const std::vector<DenseVector> recs{DenseVector({1, 2, 3}), DenseVector({4.5}), DenseVector({-1, 0})};
  save_binary(path, recs);
  EXPECT_EQ(load_binary(path), recs);
  std::filesystem::remove(path);
}

TEST(Binary, TruncatedFileIsAnError) {
  const auto path = temp_file("trunc.bin");
  {
    std::ofstream f(path, std::ios::binary);
    const std::uint64_t n = 4;
    f.write(reinterpret_cast<const char*>(&n), 8);
    const double x = 1.0;
    f.write(reinterpret_cast<const char*>(&x), 8);
  }
  EXPECT_THROW(load_binary(path), ValidationError);
  std::filesystem::remove(path);
}

TEST(JsonFile, MissingPathNamedInMessage) {
  try {
    read_json_file("/nonexistent/dir/problem.json");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/problem.json"), std::string::npos);
  }
}
