#include "varsketch/io.hpp"

#include "varsketch/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace varsketch {

using nlohmann::json;

json cp_to_json(const CPTensor& t) {
  json factors = json::array();
  for (const Matrix& a : t.factors())
    factors.push_back(std::vector<double>(a.data(), a.data() + a.size()));
  return {{"mode_lengths", t.mode_lengths()}, {"rank", t.rank()}, {"factors", factors}};
}

CPTensor cp_from_json(const json& j) {
  try {
    const auto shape = j.at("mode_lengths").get<Shape>();
    const auto rank = j.at("rank").get<std::size_t>();
    const auto& factors = j.at("factors");
    if (!factors.is_array() || factors.size() != shape.size())
      throw ValidationError("CP JSON: need one factor per mode");
    std::vector<Matrix> f;
    for (std::size_t m = 0; m < shape.size(); ++m) {
      const auto vals = factors[m].get<std::vector<double>>();
      if (vals.size() != shape[m] * rank)
        throw ValidationError("CP JSON: factor " + std::to_string(m) +
                              " has wrong number of entries");
      f.emplace_back(Eigen::Map<const Matrix>(vals.data(), static_cast<Eigen::Index>(shape[m]),
                                              static_cast<Eigen::Index>(rank)));
    }
    return CPTensor(std::move(f));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("CP JSON: ") + e.what());
  }
}

json vector_to_json(const DenseVector& v) { return v.entries(); }

DenseVector vector_from_json(const json& j) {
  try {
    return DenseVector(j.get<std::vector<double>>());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("vector JSON: ") + e.what());
  }
}

namespace {

static_assert(sizeof(double) == 8);

template <typename T>
void put_le(std::ostream& out, T value) {
  std::uint64_t bits;
  std::memcpy(&bits, &value, 8);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  char buf[8];
  std::memcpy(buf, &bits, 8);
  out.write(buf, 8);
}

template <typename T>
bool get_le(std::istream& in, T& value) {
  char buf[8];
  if (!in.read(buf, 8)) return false;
  std::uint64_t bits;
  std::memcpy(&bits, buf, 8);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  std::memcpy(&value, &bits, 8);
  return true;
}

}  // namespace

void write_binary(std::ostream& out, const DenseVector& v) {
  put_le<std::uint64_t>(out, v.size());
  for (double x : v.values()) put_le(out, x);
}

bool read_binary(std::istream& in, DenseVector& v) {
  std::uint64_t n = 0;
  if (!get_le(in, n)) {
    if (in.gcount() == 0) return false;
    throw ValidationError("binary vector: truncated length header");
  }
  std::vector<double> vals(n);
  for (auto& x : vals)
    if (!get_le(in, x)) throw ValidationError("binary vector: truncated payload");
  v = DenseVector(std::move(vals));
  return true;
}

void save_binary(const std::filesystem::path& path, const std::vector<DenseVector>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (const auto& r : records) write_binary(out, r);
}

std::vector<DenseVector> load_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::vector<DenseVector> out;
  DenseVector v;
  while (read_binary(in, v)) out.push_back(std::move(v));
  return out;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

}  // namespace varsketch
