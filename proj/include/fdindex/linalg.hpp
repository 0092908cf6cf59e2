#pragma once

// Dense complex linear algebra kernel shared by every module.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "fdindex/errors.hpp"

namespace fdindex {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// Numerical thresholds used throughout. Matrix equality is always judged in
/// operator norm against `eq_tol`.
struct Tolerances {
  double eq_tol = 1e-9;
  double rank_tol = 1e-10;
  double angle_tol = 1e-8;

  void validate() const {
    if (!(eq_tol > 0) || !(rank_tol > 0) || !(angle_tol > 0))
      throw ArgumentError("tolerances must be strictly positive");
    if (rank_tol > eq_tol)
      throw ArgumentError("rank_tol must not exceed eq_tol");
  }
};

/// Largest singular value, as the root of the top eigenvalue of the smaller
/// Gram matrix. (Eigen 3.4.0's divide-and-conquer SVD can index out of
/// range on the highly degenerate spectra that partial isometries produce.)
inline double op_norm(const Matrix& m) {
  if (m.size() == 0) throw DimensionError("op_norm of an empty matrix");
  if (m.rows() == 1 || m.cols() == 1) return m.norm();
  Matrix gram = m.rows() < m.cols() ? Matrix(m * m.adjoint()) : Matrix(m.adjoint() * m);
  double top = Eigen::SelfAdjointEigenSolver<Matrix>(gram, Eigen::EigenvaluesOnly)
                   .eigenvalues()
                   .maxCoeff();
  return std::sqrt(std::max(top, 0.0));
}

/// Normalized Hilbert-Schmidt inner product Tr(x* y) / n on n x n matrices.
inline Complex hs_inner(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols())
    throw DimensionError("hs_inner: shape mismatch");
  return x.conjugate().cwiseProduct(y).sum() / static_cast<double>(x.rows());
}

inline double hs_norm(const Matrix& x) {
  return x.norm() / std::sqrt(static_cast<double>(x.rows()));
}

inline Matrix identity(Eigen::Index n) { return Matrix::Identity(n, n); }

inline double hermiticity_defect(const Matrix& h) {
  return op_norm(h - h.adjoint());
}

enum class PsdFunction { sqrt, pinv_sqrt, inv };

/// Applies `f` to the eigenvalues of the Hermitian matrix `h`.
///
/// `pinv_sqrt` sends eigenvalues at or below `tol.rank_tol` to zero and every
/// other eigenvalue to its inverse square root, so `h * pinv_sqrt(h)^2` is the
/// support projection of `h`.
inline Matrix psd_calculus(const Matrix& h, PsdFunction f,
                           const Tolerances& tol = {}) {
  if (h.size() == 0) throw DimensionError("psd_calculus of an empty matrix");
  if (h.rows() != h.cols()) throw ShapeError("psd_calculus: matrix not square");
  double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  if (hermiticity_defect(h) > tol.eq_tol * scale)
    throw ShapeError("psd_calculus: matrix is not Hermitian");
  Matrix sym = (h + h.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  const RealVector& ev = es.eigenvalues();
  if (ev.minCoeff() < -tol.rank_tol * scale)
    throw ShapeError("psd_calculus: matrix is not positive semidefinite");
  RealVector fv(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    double lam = std::max(ev(i), 0.0);
    switch (f) {
      case PsdFunction::sqrt:
        fv(i) = std::sqrt(lam);
        break;
      case PsdFunction::pinv_sqrt:
        fv(i) = lam <= tol.rank_tol ? 0.0 : 1.0 / std::sqrt(lam);
        break;
      case PsdFunction::inv:
        if (ev(i) <= tol.rank_tol)
          throw SingularityError("psd_calculus: inverse of a singular matrix");
        fv(i) = 1.0 / ev(i);
        break;
    }
  }
  return es.eigenvectors() * fv.asDiagonal() * es.eigenvectors().adjoint();
}

/// Smallest eigenvalue of the Hermitian part.
inline double min_eigenvalue(const Matrix& h) {
  Matrix sym = (h + h.adjoint()) / 2.0;
  return Eigen::SelfAdjointEigenSolver<Matrix>(sym, Eigen::EigenvaluesOnly)
      .eigenvalues()
      .minCoeff();
}

inline double max_eigenvalue(const Matrix& h) {
  Matrix sym = (h + h.adjoint()) / 2.0;
  return Eigen::SelfAdjointEigenSolver<Matrix>(sym, Eigen::EigenvaluesOnly)
      .eigenvalues()
      .maxCoeff();
}

struct LstsqResult {
  Vector coefficients;
  double residual = 0.0;  // Frobenius norm of sum(c_i M_i) - target
};

/// Minimum-norm least-squares fit of `target` by a linear combination of
/// `columns`. Residual is measured in the (unnormalized) Frobenius norm.
inline LstsqResult lstsq_solve(std::span<const Matrix> columns,
                               const Matrix& target,
                               const Tolerances& tol = {}) {
  if (columns.empty()) throw ArgumentError("lstsq_solve: no columns");
  const Eigen::Index rows = target.size();
  Matrix k(rows, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j].rows() != target.rows() || columns[j].cols() != target.cols())
      throw DimensionError("lstsq_solve: column shape mismatch");
    k.col(static_cast<Eigen::Index>(j)) = columns[j].reshaped();
  }
  Eigen::JacobiSVD<Matrix> svd(k, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(tol.rank_tol);
  Vector rhs = target.reshaped();
  LstsqResult out;
  out.coefficients = svd.solve(rhs);
  out.residual = (k * out.coefficients - rhs).norm();
  return out;
}

/// Kronecker product with A's indices outermost.
inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Matrix unit e_ij (0-based) in M_n.
inline Matrix matrix_unit(Eigen::Index n, Eigen::Index i, Eigen::Index j) {
  Matrix m = Matrix::Zero(n, n);
  m(i, j) = 1.0;
  return m;
}

/// Eigen-decomposition of k* k: right singular vectors and squared singular
/// values in decreasing order. Resolves singular values down to about
/// sqrt(machine epsilon) times the largest.
struct GramSpectrum {
  RealVector squared;  // decreasing
  Matrix vectors;      // aligned columns
};

inline GramSpectrum gram_spectrum(const Matrix& k) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(k.adjoint() * k);
  GramSpectrum g;
  g.squared = es.eigenvalues().reverse();
  g.vectors = es.eigenvectors().rowwise().reverse();
  return g;
}

/// Orthonormal basis (as columns) of the null space of `k`: right singular
/// vectors whose singular value is at most `cutoff`, which must be well above
/// sqrt(machine epsilon) * ||k||.
inline Matrix null_space(const Matrix& k, double cutoff) {
  if (k.rows() == 0) return Matrix::Identity(k.cols(), k.cols());
  GramSpectrum g = gram_spectrum(k);
  Eigen::Index rank = 0;
  while (rank < g.squared.size() && g.squared(rank) > cutoff * cutoff) ++rank;
  return g.vectors.rightCols(k.cols() - rank);
}

// ---------------------------------------------------------------------------
// random sampling

using Rng = std::mt19937_64;

/// Seeds for independent sub-streams derived from a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Matrix random_gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = Complex(nd(rng), nd(rng));
  return m;
}

inline Vector random_vector(Eigen::Index n, Rng& rng) {
  return random_gaussian(n, 1, rng);
}

/// Haar-ish random unitary from the QR factorization of a Ginibre matrix.
inline Matrix random_unitary(Eigen::Index n, Rng& rng) {
  Matrix g = random_gaussian(n, n, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < n; ++i) {
    Complex d = r(i, i);
    if (std::abs(d) > 0) q.col(i) *= d / std::abs(d);
  }
  return q;
}

}  // namespace fdindex
