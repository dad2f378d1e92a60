#include "varsketch/errors.hpp"
#include "varsketch/rng.hpp"
#include "varsketch/tensor.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace varsketch;

namespace {

Matrix col(std::initializer_list<double> v) {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

// Independent oracle: explicit nested loops over a 3-way tensor.
std::vector<double> loop_materialize3(const CPTensor& t) {
  const auto& A = t.factor(0);
  const auto& B = t.factor(1);
  const auto& C = t.factor(2);
  std::vector<double> out;
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < B.rows(); ++j)
      for (Eigen::Index k = 0; k < C.rows(); ++k) {
        double s = 0;
        for (Eigen::Index r = 0; r < A.cols(); ++r) s += A(i, r) * B(j, r) * C(k, r);
        out.push_back(s);
      }
  return out;
}

double dense_norm_sq(const DenseVector& v) {
  double s = 0;
  for (double x : v.values()) s += x * x;
  return s;
}

}  // namespace

TEST(Materialize, OuterProductRowMajor) {
  const CPTensor t({col({1, 0}), col({0, 1})});
  EXPECT_EQ(materialize(t).entries(), (std::vector<double>{0, 1, 0, 0}));
}

TEST(Materialize, ExactCancellation) {
  Matrix a(2, 2), b(2, 2);
  a << 1, 1, 2, 2;
  b << 3, -3, 4, -4;
  EXPECT_EQ(materialize(CPTensor({a, b})).entries(), (std::vector<double>(4, 0.0)));
}

TEST(Materialize, MatchesLoopOracle) {
  const CPTensor t = random_cp({2, 2, 2}, 2, Distribution::gaussian, 11);
  const auto got = materialize(t);
  const auto want = loop_materialize3(t);
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
}

TEST(Materialize, UnevenModesMatchLoopOracle) {
  const CPTensor t = random_cp({3, 2, 5}, 3, Distribution::rademacher, 5);
  const auto got = materialize(t);
  const auto want = loop_materialize3(t);
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
}

TEST(Materialize, CapExceeded) {
  const CPTensor t = random_cp({64, 64, 64}, 1, Distribution::gaussian, 1);
  EXPECT_THROW(materialize(t, 1000), CapExceededError);
}

TEST(Materialize, LinearInOneColumn) {
  const CPTensor t = random_cp({3, 4, 2}, 2, Distribution::gaussian, 3);
  const Matrix delta = random_cp({4}, 1, Distribution::gaussian, 4).factor(0);
  auto with_col = [&](const Matrix& c) {
    auto f = t.factors();
    f[1].col(1) = c;
    return materialize(CPTensor(f));
  };
  const Matrix base = t.factor(1).col(1);
  const auto lhs = with_col(base + 2.5 * delta);
  const auto x0 = with_col(base);
  const auto x1 = with_col(base + delta);
  for (std::size_t i = 0; i < lhs.size(); ++i)
    EXPECT_NEAR(lhs[i], x0[i] + 2.5 * (x1[i] - x0[i]), 1e-12);
}

TEST(Flatten, UnflattenIsInverseOfRowMajorOffset) {
  const Shape shape{3, 4, 5};
  std::vector<std::size_t> idx(3);
  for (std::uint64_t f = 0; f < 60; ++f) {
    unflatten(f, shape, idx);
    EXPECT_EQ((idx[0] * 4 + idx[1]) * 5 + idx[2], f);
  }
}

TEST(Flatten, EntryMatchesFactorProduct) {
  const CPTensor t = random_cp({3, 4, 5}, 2, Distribution::gaussian, 8);
  const auto v = materialize(t);
  std::vector<std::size_t> idx(3);
  for (std::uint64_t f = 0; f < v.size(); ++f) {
    unflatten(f, t.mode_lengths(), idx);
    double s = 0;
    for (Eigen::Index r = 0; r < 2; ++r) {
      double p = 1;
      for (std::size_t j = 0; j < 3; ++j) p *= t.factor(j)(static_cast<Eigen::Index>(idx[j]), r);
      s += p;
    }
    EXPECT_NEAR(v[f], s, 1e-12);
  }
}

TEST(CpNorm, UnitRankOne) {
  const CPTensor t({col({0.6, 0.8}), col({1, 0, 0}), col({0, 0.28, 0.96})});
  EXPECT_NEAR(cp_norm_sq(t), 1.0, 1e-15);
}

TEST(CpNorm, ScaledRankOne) { EXPECT_DOUBLE_EQ(cp_norm_sq(CPTensor({col({3, 0}), col({0, 4})})), 144.0); }

TEST(CpNorm, MatchesMaterializedRandom) {
  const CPTensor t = random_cp({4, 3, 5}, 3, Distribution::gaussian, 21);
  const double want = dense_norm_sq(materialize(t));
  EXPECT_NEAR(cp_norm_sq(t), want, 1e-10 * want);
}

TEST(CpNorm, PropertySweepSmallN) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    RandomStream rng(s);
    const std::size_t d = 1 + rng.below(4);
    Shape shape;
    for (std::size_t j = 0; j < d; ++j) shape.push_back(1 + rng.below(8));
    const CPTensor t = random_cp(shape, rng.below(5), Distribution::gaussian, s);
    const double want = dense_norm_sq(materialize(t));
    EXPECT_LE(std::abs(cp_norm_sq(t) - want), 1e-10 * std::max(1.0, want)) << "seed " << s;
  }
}

TEST(CpNorm, ZeroRank) { EXPECT_EQ(cp_norm_sq(CPTensor::zero({3, 4})), 0.0); }

TEST(CpDifference, SelfDifferenceIsZero) {
  const CPTensor x = random_cp({3, 3, 3}, 2, Distribution::gaussian, 2);
  const CPTensor d = cp_difference(x, x);
  EXPECT_EQ(d.rank(), 4u);
  const DenseVector dense = materialize(d);
  for (double v : dense.values()) EXPECT_NEAR(v, 0.0, 1e-14);
  EXPECT_LE(cp_norm_sq(d), 1e-10 * cp_norm_sq(x));
}

TEST(CpDifference, MinusZeroRank) {
  const CPTensor x = random_cp({2, 5}, 3, Distribution::gaussian, 9);
  const CPTensor d = cp_difference(x, CPTensor::zero({2, 5}));
  EXPECT_EQ(d.rank(), 3u);
  EXPECT_EQ(materialize(d), materialize(x));
}

TEST(CpDifference, MatchesMaterialized) {
  const CPTensor x = random_cp({3, 4, 2}, 2, Distribution::gaussian, 31);
  const CPTensor y = random_cp({3, 4, 2}, 3, Distribution::gaussian, 32);
  const auto d = materialize(cp_difference(x, y));
  const auto mx = materialize(x), my = materialize(y);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_NEAR(d[i], mx[i] - my[i], 1e-12);
  // only the first mode carries the sign flip
  const CPTensor c = cp_difference(x, y);
  EXPECT_TRUE(c.factor(0).rightCols(3).isApprox(-y.factor(0)));
  EXPECT_TRUE(c.factor(1).rightCols(3).isApprox(y.factor(1)));
}

TEST(CpDifference, ShapeMismatch) {
  EXPECT_THROW(cp_difference(random_cp({2, 3}, 1, Distribution::gaussian, 1),
                             random_cp({3, 2}, 1, Distribution::gaussian, 1)),
               ShapeError);
}

TEST(CPTensorInvariants, RejectsBadFactors) {
  EXPECT_THROW(CPTensor(std::vector<Matrix>{}), ValidationError);
  EXPECT_THROW(CPTensor({Matrix::Zero(2, 1), Matrix::Zero(2, 2)}), ValidationError);
  EXPECT_THROW(CPTensor({Matrix::Zero(0, 1)}), ValidationError);
}

TEST(RandomCp, Deterministic) {
  const auto a = random_cp({4, 5, 6}, 3, Distribution::gaussian, 77);
  const auto b = random_cp({4, 5, 6}, 3, Distribution::gaussian, 77);
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == random_cp({4, 5, 6}, 3, Distribution::gaussian, 78));
}

TEST(RandomCp, RademacherEntriesAreSigns) {
  const auto t = random_cp({5, 5}, 4, Distribution::rademacher, 3);
  for (const auto& f : t.factors())
    for (Eigen::Index i = 0; i < f.size(); ++i) EXPECT_EQ(std::abs(f.data()[i]), 1.0);
}

TEST(Normalize, ThreeFour) {
  const auto v = normalize(DenseVector({3, 4}));
  EXPECT_DOUBLE_EQ(v[0], 0.6);
  EXPECT_DOUBLE_EQ(v[1], 0.8);
}

TEST(Normalize, ZeroVectorThrows) { EXPECT_THROW(normalize(DenseVector({0, 0})), ValidationError); }

TEST(Normalize, CpUnitNorm) {
  const auto t = normalize_cp(random_cp({6, 7, 3}, 4, Distribution::gaussian, 5));
  EXPECT_NEAR(cp_norm_sq(t), 1.0, 1e-10);
  EXPECT_THROW(normalize_cp(CPTensor::zero({2, 2})), ValidationError);
}

TEST(DenseVectorInvariants, RejectsEmpty) { EXPECT_THROW(DenseVector(std::vector<double>{}), ValidationError); }
