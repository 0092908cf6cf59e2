#pragma once

// Orthonormal bases of partial isometries for A as a right Hilbert module
// over B, quasi-bases, and the Watatani index.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "fdindex/expectation.hpp"

namespace fdindex {

/// Elements m_j of A with projections p_j = E(m_j* m_j) in B,
/// E(m_j* m_k) = 0 for j != k, and x = sum_j m_j E(m_j* x) for all x.
struct ModuleBasis {
  std::vector<Matrix> elements;
  std::vector<Matrix> support_projections;

  std::size_t size() const { return elements.size(); }
};

/// Ind_W(E) = sum_j m_j m_j*, a positive invertible element of Z(A).
/// `scalar` is set when the index is a multiple of the unit.
struct WatataniIndex {
  Matrix value;
  std::optional<double> scalar;
  double centrality_residual = 0.0;
  double min_eigenvalue = 0.0;
};

/// sum_i u_i E(u_i* x).
inline Matrix reconstruct(const CondExpectation& e, std::span<const Matrix> family,
                          const Matrix& x) {
  Matrix acc = Matrix::Zero(x.rows(), x.cols());
  for (const auto& u : family) acc += u * e(u.adjoint() * x);
  return acc;
}

/// Largest ||x - sum_i u_i E(u_i* x)|| over A's basis and `samples` seeded
/// random elements of A.
inline double verify_quasi_basis(const CondExpectation& e, std::span<const Matrix> candidate,
                                 int samples = 100, std::uint64_t seed = 0) {
  const StarAlgebra& a = e.big();
  double worst = 0.0;
  for (const auto& x : a.basis()) worst = std::max(worst, op_norm(x - reconstruct(e, candidate, x)));
  Rng rng(seed);
  for (int k = 0; k < samples; ++k) {
    Matrix x = a.element(random_vector(static_cast<Eigen::Index>(a.dim()), rng));
    worst = std::max(worst, op_norm(x - reconstruct(e, candidate, x)));
  }
  return worst;
}

/// Greedy orthonormal basis. Basis vectors of A are visited in `order`
/// (identity order when empty); each residual r = a - sum_j m_j E(m_j* a) with
/// ||E(r*r)|| > eq_tol contributes m = r E(r*r)^{-1/2}, whose support
/// projection is that of E(r*r). Sweeps repeat until every residual is below
/// eq_tol.
inline ModuleBasis orthonormal_basis(const CondExpectation& e, const Tolerances& tol = {},
                                     std::span<const std::size_t> order = {},
                                     int max_sweeps = 4) {
  const StarAlgebra& a = e.big();
  std::vector<std::size_t> visit(order.begin(), order.end());
  if (visit.empty()) {
    visit.resize(a.dim());
    std::iota(visit.begin(), visit.end(), std::size_t{0});
  }
  if (visit.size() != a.dim()) throw ArgumentError("basis ordering has the wrong length");

  ModuleBasis mb;
  auto strip = [&](Matrix r) {
    for (int pass = 0; pass < 2; ++pass) r -= reconstruct(e, mb.elements, r);
    return r;
  };
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool added = false;
    for (std::size_t s : visit) {
      Matrix r = strip(a.basis(s));
      Matrix h = e(r.adjoint() * r);
      h = (h + h.adjoint()) / 2.0;
      if (op_norm(h) <= tol.eq_tol) continue;
      Matrix m = r * psd_calculus(h, PsdFunction::pinv_sqrt, tol);
      Matrix p = e(m.adjoint() * m);
      mb.elements.push_back(std::move(m));
      mb.support_projections.push_back(std::move(p));
      added = true;
    }
    if (!added) break;
  }

  double residual = 0.0;
  for (const auto& x : a.basis()) residual = std::max(residual, op_norm(x - reconstruct(e, mb.elements, x)));
  if (residual >= tol.eq_tol)
    throw InvariantError("orthonormal basis does not reconstruct A (residual " +
                         std::to_string(residual) + "); expectation may not be faithful");
  for (std::size_t j = 0; j < mb.size(); ++j) {
    const Matrix& p = mb.support_projections[j];
    if (op_norm(p * p - p) >= tol.eq_tol || hermiticity_defect(p) >= tol.eq_tol)
      throw InvariantError("E(m* m) is not a projection");
    for (std::size_t k = j + 1; k < mb.size(); ++k)
      if (op_norm(e(mb.elements[j].adjoint() * mb.elements[k])) >= tol.eq_tol)
        throw InvariantError("basis elements are not mutually orthogonal");
  }
  return mb;
}

/// sum_i u_i u_i* for any quasi-basis, with centrality and positivity checked
/// against A.
inline WatataniIndex watatani_index(std::span<const Matrix> quasi_basis, const StarAlgebra& a,
                                    const Tolerances& tol = {}) {
  if (quasi_basis.empty()) throw ArgumentError("empty quasi-basis");
  WatataniIndex w;
  w.value = Matrix::Zero(quasi_basis.front().rows(), quasi_basis.front().cols());
  for (const auto& u : quasi_basis) w.value += u * u.adjoint();
  for (const auto& b : a.basis())
    w.centrality_residual = std::max(w.centrality_residual, op_norm(w.value * b - b * w.value));
  if (w.centrality_residual >= tol.eq_tol)
    throw InvariantError("index is not central");
  if (hermiticity_defect(w.value) >= tol.eq_tol) throw InvariantError("index is not self-adjoint");
  w.min_eigenvalue = min_eigenvalue(w.value);
  if (w.min_eigenvalue <= tol.rank_tol) throw InvariantError("index is not invertible");
  const auto n = w.value.rows();
  Complex c = w.value.trace() / static_cast<double>(n);
  if (op_norm(w.value - c * identity(n)) < tol.eq_tol) w.scalar = c.real();
  return w;
}

inline WatataniIndex watatani_index(const ModuleBasis& basis, const StarAlgebra& a,
                                    const Tolerances& tol = {}) {
  return watatani_index(basis.elements, a, tol);
}

inline WatataniIndex watatani_index(const CondExpectation& e, const Tolerances& tol = {}) {
  return watatani_index(orthonormal_basis(e, tol), e.big(), tol);
}

}  // namespace fdindex
