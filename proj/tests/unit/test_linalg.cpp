#include <gtest/gtest.h>

#include "support.hpp"

using namespace fdindex;
using fdtest::power_norm;

TEST(Linalg, OpNormMatchesPowerIteration) {
  Rng rng(11);
  for (int n : {1, 3, 7, 12}) {
    Matrix m = random_gaussian(n, n + 2, rng);
    EXPECT_NEAR(op_norm(m), power_norm(m), 1e-9 * power_norm(m));
  }
}

TEST(Linalg, OpNormOfDegenerateIsometry) {
  // many equal singular values: the case that trips divide-and-conquer SVD
  Matrix p = Matrix::Zero(256, 256);
  for (int i = 0; i < 256; i += 3) p(i, (i * 7) % 256) = 1.0;
  EXPECT_NEAR(op_norm(p), 1.0, 1e-12);
  EXPECT_NEAR(op_norm(2.0 * identity(64)), 2.0, 1e-12);
}

TEST(Linalg, OpNormVectorsAndEmpty) {
  Vector v(3);
  v << 3.0, 0.0, Complex(0, 4);
  EXPECT_DOUBLE_EQ(op_norm(v), 5.0);
  EXPECT_THROW(op_norm(Matrix(0, 0)), DimensionError);
}

TEST(Linalg, HsInnerIsNormalized) {
  EXPECT_NEAR(hs_inner(identity(5), identity(5)).real(), 1.0, 1e-15);
  EXPECT_NEAR(hs_norm(matrix_unit(4, 1, 2)), 0.5, 1e-15);
}

TEST(Linalg, PsdCalculusRoundTrips) {
  Rng rng(5);
  Matrix y = random_gaussian(6, 6, rng);
  Matrix h = y.adjoint() * y + 0.1 * identity(6);
  Matrix s = psd_calculus(h, PsdFunction::sqrt);
  EXPECT_LT(op_norm(s * s - h), 1e-10);
  Matrix inv = psd_calculus(h, PsdFunction::inv);
  EXPECT_LT(op_norm(inv * h - identity(6)), 1e-10);
}

TEST(Linalg, PinvSqrtOnSingular) {
  Matrix h = Matrix::Zero(3, 3);
  h(0, 0) = 4.0;
  h(1, 1) = 1.0;
  Matrix r = psd_calculus(h, PsdFunction::pinv_sqrt);
  EXPECT_NEAR(r(0, 0).real(), 0.5, 1e-14);
  EXPECT_NEAR(r(1, 1).real(), 1.0, 1e-14);
  EXPECT_NEAR(std::abs(r(2, 2)), 0.0, 1e-14);
  // r h r is the support projection
  Matrix proj = r * h * r;
  EXPECT_LT(op_norm(proj * proj - proj), 1e-12);
}

TEST(Linalg, PsdCalculusRejectsNonHermitian) {
  Matrix h = matrix_unit(2, 0, 1);
  EXPECT_THROW(psd_calculus(h, PsdFunction::sqrt), Error);
}

TEST(Linalg, EigenvalueExtremes) {
  Matrix h = Matrix::Zero(3, 3);
  h.diagonal() << -2.0, 0.5, 3.0;
  Rng rng(9);
  Matrix u = random_unitary(3, rng);
  Matrix c = u * h * u.adjoint();
  EXPECT_NEAR(min_eigenvalue(c), -2.0, 1e-12);
  EXPECT_NEAR(max_eigenvalue(c), 3.0, 1e-12);
}

TEST(Linalg, LstsqRecoversCombination) {
  Rng rng(21);
  std::vector<Matrix> cols;
  for (int i = 0; i < 4; ++i) cols.push_back(random_gaussian(3, 3, rng));
  cols.push_back(cols[0] + cols[1]);  // rank deficient on purpose
  Matrix target = 2.0 * cols[2] - cols[3];
  LstsqResult r = lstsq_solve(cols, target);
  EXPECT_LT(r.residual, 1e-10);
  // minimum-norm: no weight on the redundant direction beyond what's needed
  Matrix rebuilt = Matrix::Zero(3, 3);
  for (std::size_t i = 0; i < cols.size(); ++i) rebuilt += r.coefficients(static_cast<Eigen::Index>(i)) * cols[i];
  EXPECT_LT(op_norm(rebuilt - target), 1e-10);
  EXPECT_THROW(lstsq_solve(std::vector<Matrix>{}, target), ArgumentError);
  std::vector<Matrix> bad{Matrix::Zero(2, 2)};
  EXPECT_THROW(lstsq_solve(bad, target), DimensionError);
}

TEST(Linalg, KronMixedProduct) {
  Rng rng(3);
  Matrix a = random_gaussian(2, 2, rng), b = random_gaussian(3, 3, rng);
  Matrix c = random_gaussian(2, 2, rng), d = random_gaussian(3, 3, rng);
  EXPECT_LT(op_norm(kron(a, b) * kron(c, d) - kron(a * c, b * d)), 1e-12);
  // A's indices are outermost
  EXPECT_EQ(kron(matrix_unit(2, 1, 0), identity(3))(3, 0), Complex(1.0));
}

TEST(Linalg, NullSpaceDimensionAndOrthonormality) {
  Rng rng(17);
  Matrix left = random_gaussian(10, 3, rng);
  Matrix right = random_gaussian(3, 6, rng);
  Matrix k = left * right;  // rank 3, nullity 3
  Matrix ns = null_space(k, 1e-6 * op_norm(k));
  ASSERT_EQ(ns.cols(), 3);
  EXPECT_LT(op_norm(k * ns), 1e-9);
  EXPECT_LT(op_norm(ns.adjoint() * ns - identity(3)), 1e-10);
}

TEST(Linalg, GramSpectrumDecreasing) {
  Rng rng(2);
  GramSpectrum g = gram_spectrum(random_gaussian(5, 4, rng));
  for (Eigen::Index i = 1; i < g.squared.size(); ++i) EXPECT_GE(g.squared(i - 1), g.squared(i));
}

TEST(Linalg, RandomUnitaryIsUnitary) {
  Rng rng(4);
  Matrix u = random_unitary(7, rng);
  EXPECT_LT(op_norm(u.adjoint() * u - identity(7)), 1e-12);
}

TEST(Linalg, SeedsAreDeterministicAndDistinct) {
  EXPECT_EQ(derive_seed(7, 1), derive_seed(7, 1));
  EXPECT_NE(derive_seed(7, 1), derive_seed(7, 2));
  EXPECT_NE(derive_seed(7, 1), derive_seed(8, 1));
  Rng a(derive_seed(1, 0)), b(derive_seed(1, 0));
  EXPECT_EQ(random_gaussian(2, 2, a), random_gaussian(2, 2, b));
}

TEST(Linalg, TolerancesValidate) {
  Tolerances t;
  EXPECT_NO_THROW(t.validate());
  t.rank_tol = 1e-3;
  EXPECT_THROW(t.validate(), ArgumentError);
  t = Tolerances{};
  t.angle_tol = 0.0;
  EXPECT_THROW(t.validate(), ArgumentError);
}
