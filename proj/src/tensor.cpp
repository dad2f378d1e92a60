#include "varsketch/tensor.hpp"

#include "varsketch/errors.hpp"
#include "varsketch/rng.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace varsketch {

std::uint64_t shape_size(const Shape& shape) noexcept {
  std::uint64_t n = 1;
  for (std::size_t len : shape) {
    if (len != 0 && n > std::numeric_limits<std::uint64_t>::max() / len)
      return std::numeric_limits<std::uint64_t>::max();
    n *= len;
  }
  return n;
}

void unflatten(std::uint64_t flat, const Shape& shape, std::span<std::size_t> out) {
  for (std::size_t j = shape.size(); j-- > 0;) {
    out[j] = static_cast<std::size_t>(flat % shape[j]);
    flat /= shape[j];
  }
}

DenseVector::DenseVector(std::vector<double> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw ValidationError("dense vector must have positive length");
}

DenseVector DenseVector::zeros(std::size_t n) {
  return DenseVector(std::vector<double>(n, 0.0));
}

double DenseVector::norm_sq() const noexcept {
  double s = 0.0;
  for (double v : entries_) s += v * v;
  return s;
}

double DenseVector::norm() const noexcept { return std::sqrt(norm_sq()); }

DenseVector operator-(const DenseVector& a, const DenseVector& b) {
  if (a.size() != b.size()) throw ShapeError("vector length mismatch");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return DenseVector(std::move(out));
}

DenseVector operator*(double alpha, const DenseVector& v) {
  std::vector<double> out(v.entries());
  for (double& x : out) x *= alpha;
  return DenseVector(std::move(out));
}

CPTensor::CPTensor(std::vector<Matrix> factors) : factors_(std::move(factors)) {
  if (factors_.empty()) throw ValidationError("CP tensor needs at least one mode");
  const auto r = factors_.front().cols();
  for (std::size_t j = 0; j < factors_.size(); ++j) {
    if (factors_[j].rows() < 1)
      throw ValidationError("mode " + std::to_string(j) + " has zero length");
    if (factors_[j].cols() != r)
      throw ValidationError("factor matrices disagree on rank");
  }
}

CPTensor CPTensor::zero(const Shape& mode_lengths) {
  std::vector<Matrix> f;
  for (std::size_t n : mode_lengths) f.emplace_back(static_cast<Eigen::Index>(n), 0);
  return CPTensor(std::move(f));
}

Shape CPTensor::mode_lengths() const {
  Shape s;
  for (const auto& a : factors_) s.push_back(static_cast<std::size_t>(a.rows()));
  return s;
}

std::uint64_t CPTensor::dimension() const noexcept {
  std::uint64_t n = 1;
  for (const auto& a : factors_) {
    const auto len = static_cast<std::uint64_t>(a.rows());
    if (n > std::numeric_limits<std::uint64_t>::max() / len)
      return std::numeric_limits<std::uint64_t>::max();
    n *= len;
  }
  return n;
}

bool operator==(const CPTensor& a, const CPTensor& b) {
  if (a.order() != b.order()) return false;
  for (std::size_t j = 0; j < a.order(); ++j) {
    const Matrix& x = a.factors_[j];
    const Matrix& y = b.factors_[j];
    if (x.rows() != y.rows() || x.cols() != y.cols() || x != y) return false;
  }
  return true;
}

DenseVector materialize(const CPTensor& t, std::uint64_t cap) {
  const std::uint64_t n = t.dimension();
  if (n > cap)
    throw CapExceededError("materialization of " + std::to_string(n) +
                           " entries exceeds cap " + std::to_string(cap));
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  std::vector<double> term, next;
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(t.rank()); ++i) {
    // Kronecker product built mode by mode; appending a mode makes it the
    // fastest-varying index.
    term.assign(1, 1.0);
    for (const Matrix& a : t.factors()) {
      const auto len = static_cast<std::size_t>(a.rows());
      next.resize(term.size() * len);
      for (std::size_t p = 0; p < term.size(); ++p)
        for (std::size_t q = 0; q < len; ++q)
          next[p * len + q] = term[p] * a(static_cast<Eigen::Index>(q), i);
      term.swap(next);
    }
    for (std::size_t p = 0; p < out.size(); ++p) out[p] += term[p];
  }
  return DenseVector(std::move(out));
}

double cp_inner(const CPTensor& x, const CPTensor& y) {
  if (x.mode_lengths() != y.mode_lengths()) throw ShapeError("CP shapes differ");
  if (x.rank() == 0 || y.rank() == 0) return 0.0;
  Matrix g = Matrix::Ones(x.factor(0).cols(), y.factor(0).cols());
  for (std::size_t j = 0; j < x.order(); ++j)
    g = g.cwiseProduct(x.factor(j).transpose() * y.factor(j));
  return g.sum();
}

double cp_norm_sq(const CPTensor& t) { return std::max(0.0, cp_inner(t, t)); }

CPTensor cp_difference(const CPTensor& x, const CPTensor& y) {
  if (x.mode_lengths() != y.mode_lengths())
    throw ShapeError("cp_difference: operands have different shapes");
  std::vector<Matrix> f;
  for (std::size_t j = 0; j < x.order(); ++j) {
    const Matrix& a = x.factor(j);
    const Matrix& b = y.factor(j);
    Matrix c(a.rows(), a.cols() + b.cols());
    c.leftCols(a.cols()) = a;
    if (j == 0)
      c.rightCols(b.cols()) = -b;
    else
      c.rightCols(b.cols()) = b;
    f.push_back(std::move(c));
  }
  return CPTensor(std::move(f));
}

CPTensor random_cp(const Shape& mode_lengths, std::size_t rank,
                   Distribution dist, std::uint64_t seed) {
  std::vector<Matrix> f;
  for (std::size_t j = 0; j < mode_lengths.size(); ++j) {
    RandomStream rng(seed, Role::factor, j);
    Matrix a(static_cast<Eigen::Index>(mode_lengths[j]), static_cast<Eigen::Index>(rank));
    // column-major fill: one column (rank-one component) at a time
    for (Eigen::Index c = 0; c < a.cols(); ++c)
      for (Eigen::Index r = 0; r < a.rows(); ++r)
        a(r, c) = dist == Distribution::gaussian ? rng.gaussian() : rng.rademacher();
    f.push_back(std::move(a));
  }
  return CPTensor(std::move(f));
}

DenseVector normalize(const DenseVector& v) {
  const double n = v.norm();
  if (!(n > 0.0)) throw ValidationError("cannot normalize the zero vector");
  return (1.0 / n) * v;
}

CPTensor normalize_cp(const CPTensor& t) {
  const double n2 = cp_norm_sq(t);
  if (!(n2 > 0.0)) throw ValidationError("cannot normalize the zero tensor");
  std::vector<Matrix> f = t.factors();
  f[0] /= std::sqrt(n2);
  return CPTensor(std::move(f));
}

}  // namespace varsketch
