#include "varsketch/median.hpp"

#include "varsketch/errors.hpp"
#include "varsketch/io.hpp"
#include "varsketch/parallel.hpp"
#include "varsketch/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

namespace varsketch {

double norm_sq(const Point& x) {
  return std::visit(
      [](const auto& v) {
        if constexpr (std::is_same_v<std::decay_t<decltype(v)>, DenseVector>)
          return v.norm_sq();
        else
          return cp_norm_sq(v);
      },
      x);
}

Point difference(const Point& x, const Point& y) {
  if (x.index() != y.index()) throw ShapeError("cannot subtract dense and CP points");
  if (const auto* a = std::get_if<DenseVector>(&x)) return *a - std::get<DenseVector>(y);
  return cp_difference(std::get<CPTensor>(x), std::get<CPTensor>(y));
}

DenseVector apply(const SketchOperator& op, const Point& x) {
  return std::visit([&](const auto& v) { return op.apply(v); }, x);
}

std::size_t argmed(std::span<const double> values) {
  if (values.empty() || values.size() % 2 == 0)
    throw ValidationError("argmed needs an odd, nonempty list (got " + std::to_string(values.size()) + ")");
  std::vector<double> sorted(values.begin(), values.end());
  const auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2);
  std::nth_element(sorted.begin(), mid, sorted.end());
  const double med = *mid;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] == med) return i;
  return 0;  // unreachable for non-NaN input
}

std::uint64_t member_seed(std::uint64_t master_seed, std::size_t i) noexcept {
  return derive_seed(master_seed, Role::member, i);
}

Committee::Committee(const OperatorSpec& base, std::size_t k, std::uint64_t master_seed) {
  for (std::size_t i = 0; i < 2 * k + 1; ++i)
    members_.push_back(make_operator(reseeded(base, member_seed(master_seed, i))));
}

Committee::Committee(std::vector<SketchOperator> members) : members_(std::move(members)) {
  if (members_.empty() || members_.size() % 2 == 0)
    throw ValidationError("committee size must be odd (2k+1)");
  std::set<std::uint64_t> seeds;
  const auto& first = members_.front();
  for (const auto& op : members_) {
    if (op.kind() != first.kind() || op.output_dim() != first.output_dim() ||
        op.input_shape() != first.input_shape())
      throw ValidationError("committee members must share kind, m and input shape");
    if (!seeds.insert(op.seed()).second) throw ValidationError("committee member seeds must be distinct");
  }
}

MedianSelection median_sketch_select(const Committee& c, const Point& x) {
  std::vector<DenseVector> ys;
  std::vector<double> sq;
  ys.reserve(c.size());
  for (const auto& op : c.members()) {
    ys.push_back(apply(op, x));
    sq.push_back(ys.back().norm_sq());
  }
  const std::size_t i = argmed(sq);
  return {i, std::move(ys[i])};
}

DenseVector median_sketch(const Committee& c, const Point& x) {
  return median_sketch_select(c, x).value;
}

Profiles::Profiles(std::size_t points, std::size_t members, std::size_t m)
    : points_(points), members_(members), m_(m), data_(points * members * m, 0.0) {}

std::span<const double> Profiles::point(std::size_t i) const {
  return std::span<const double>(data_).subspan(i * members_ * m_, members_ * m_);
}

std::span<const double> Profiles::member(std::size_t i, std::size_t s) const {
  return std::span<const double>(data_).subspan((i * members_ + s) * m_, m_);
}

std::span<double> Profiles::member(std::size_t i, std::size_t s) {
  return std::span<double>(data_).subspan((i * members_ + s) * m_, m_);
}

void Profiles::save(const std::filesystem::path& path) const {
  std::vector<DenseVector> recs;
  for (std::size_t i = 0; i < points_; ++i) {
    const auto p = point(i);
    recs.emplace_back(std::vector<double>(p.begin(), p.end()));
  }
  save_binary(path, recs);
}

Profiles Profiles::load(const std::filesystem::path& path, std::size_t members) {
  const auto recs = load_binary(path);
  if (recs.empty()) throw ValidationError("profile file " + path.string() + " is empty");
  if (members == 0 || recs.front().size() % members != 0)
    throw ValidationError("profile record length is not a multiple of the committee size");
  Profiles out(recs.size(), members, recs.front().size() / members);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (recs[i].size() != members * out.m_) throw ValidationError("profile records differ in length");
    std::copy(recs[i].values().begin(), recs[i].values().end(),
              out.data_.begin() + static_cast<std::ptrdiff_t>(i * members * out.m_));
  }
  return out;
}

Profiles compute_profiles(const Committee& c, std::span<const Point> points) {
  Profiles out(points.size(), c.size(), c.output_dim());
  parallel_for(points.size(), [&](std::size_t i) {
    for (std::size_t s = 0; s < c.size(); ++s) {
      const DenseVector y = apply(c.member(s), points[i]);
      std::copy(y.values().begin(), y.values().end(), out.member(i, s).begin());
    }
  });
  return out;
}

Matrix pairwise_distances(const Profiles& profiles) {
  const std::size_t n = profiles.points();
  const std::size_t members = profiles.members();
  Matrix d = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  // upper-triangle pairs enumerated row by row; each task owns row i
  parallel_for(n, [&](std::size_t i) {
    std::vector<double> sq(members);
    for (std::size_t j = i + 1; j < n; ++j) {
      for (std::size_t s = 0; s < members; ++s) {
        const auto a = profiles.member(i, s);
        const auto b = profiles.member(j, s);
        double acc = 0.0;
        for (std::size_t q = 0; q < a.size(); ++q) {
          const double diff = a[q] - b[q];
          acc += diff * diff;
        }
        sq[s] = acc;
      }
      const double v = std::sqrt(sq[argmed(sq)]);
      d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      d(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  });
  return d;
}

Matrix median_jlt_pairwise(const Committee& c, std::span<const Point> points) {
  if (points.empty()) throw ValidationError("pairwise distances need at least one point");
  return pairwise_distances(compute_profiles(c, points));
}

std::vector<double> distortion(const Committee& c, std::span<const Point> points) {
  std::vector<double> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double exact = norm_sq(points[i]);
    if (!(exact > 0.0)) throw ValidationError("distortion undefined for a zero point (index " + std::to_string(i) + ")");
    out[i] = std::abs(median_sketch(c, points[i]).norm_sq() / exact - 1.0);
  }
  return out;
}

}  // namespace varsketch
