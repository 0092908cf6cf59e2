#pragma once

// Unital *-subalgebras of M_n given by a basis that is orthonormal for the
// normalized Hilbert-Schmidt inner product <x, y> = Tr(x* y) / n.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fdindex/errors.hpp"
#include "fdindex/groups.hpp"
#include "fdindex/linalg.hpp"

namespace fdindex {

/// Incremental HS-orthonormalization (classical Gram-Schmidt applied twice).
/// A candidate is accepted when the part orthogonal to the current span is
/// larger than `rel_tol` times its original size, and candidates whose
/// normalized HS norm is below `rel_tol` count as zero.
class SpanBuilder {
 public:
  explicit SpanBuilder(Eigen::Index n, double rel_tol = 1e-8) : n_(n), rel_tol_(rel_tol) {}

  bool add(const Matrix& candidate) {
    if (candidate.rows() != n_ || candidate.cols() != n_)
      throw DimensionError("SpanBuilder: candidate has the wrong shape");
    Vector v = candidate.reshaped();
    const double original = v.norm();
    if (original == 0.0) return false;
    for (int pass = 0; pass < 2; ++pass) {
      if (count_ == 0) break;
      auto q = stacked_.leftCols(count_);
      v -= q * (q.adjoint() * v);
    }
    const double rest = v.norm();
    if (rest <= rel_tol_ * std::max(original, std::sqrt(static_cast<double>(n_)))) return false;
    if (count_ == stacked_.cols()) {
      Matrix grown(n_ * n_, std::max<Eigen::Index>(8, 2 * stacked_.cols()));
      if (count_ > 0) grown.leftCols(count_) = stacked_.leftCols(count_);
      stacked_ = std::move(grown);
    }
    stacked_.col(count_++) = v / rest;
    return true;
  }

  Eigen::Index size() const { return count_; }

  /// Basis element `i`, scaled to unit normalized-HS norm.
  Matrix element(Eigen::Index i) const {
    Matrix m = stacked_.col(i).reshaped(n_, n_);
    return m * std::sqrt(static_cast<double>(n_));
  }

  std::vector<Matrix> basis() const {
    std::vector<Matrix> out;
    out.reserve(static_cast<std::size_t>(count_));
    for (Eigen::Index i = 0; i < count_; ++i) out.push_back(element(i));
    return out;
  }

 private:
  Eigen::Index n_;
  double rel_tol_;
  Matrix stacked_;  // columns are Frobenius-unit vec(basis)
  Eigen::Index count_ = 0;
};

class StarAlgebra {
 public:
  StarAlgebra() = default;

  /// Wraps an HS-orthonormal basis. When `verify` is set the *-algebra
  /// invariants are checked and a ConstructionError names the first failure.
  static StarAlgebra from_orthonormal_basis(int ambient_dim, std::vector<Matrix> basis,
                                            const Tolerances& tol = {}, bool verify = true) {
    if (ambient_dim < 1) throw ArgumentError("ambient dimension must be positive");
    if (basis.empty()) throw ArgumentError("a unital algebra has a non-empty basis");
    auto d = std::make_shared<Data>();
    d->n = ambient_dim;
    d->stacked.resize(static_cast<Eigen::Index>(ambient_dim) * ambient_dim,
                      static_cast<Eigen::Index>(basis.size()));
    for (std::size_t i = 0; i < basis.size(); ++i) {
      if (basis[i].rows() != ambient_dim || basis[i].cols() != ambient_dim)
        throw DimensionError("basis element has the wrong shape");
      d->stacked.col(static_cast<Eigen::Index>(i)) = basis[i].reshaped();
    }
    d->basis = std::move(basis);
    d->unit = identity(ambient_dim);
    StarAlgebra a;
    a.d_ = std::move(d);
    if (verify) a.verify_invariants(tol);
    return a;
  }

  /// Orthonormalizes an arbitrary spanning family of a *-algebra.
  static StarAlgebra from_span(int ambient_dim, std::span<const Matrix> spanning,
                               const Tolerances& tol = {}, bool verify = true) {
    SpanBuilder sb(ambient_dim);
    sb.add(identity(ambient_dim));
    for (const auto& m : spanning) sb.add(m);
    return from_orthonormal_basis(ambient_dim, sb.basis(), tol, verify);
  }

  int ambient_dim() const { return d_->n; }
  std::size_t dim() const { return d_->basis.size(); }
  const std::vector<Matrix>& basis() const { return d_->basis; }
  const Matrix& basis(std::size_t i) const { return d_->basis[i]; }
  const Matrix& unit() const { return d_->unit; }

  /// HS coefficients <b_i, x>.
  Vector coefficients(const Matrix& x) const {
    check_shape(x);
    return d_->stacked.adjoint() * x.reshaped() / static_cast<double>(d_->n);
  }

  Matrix element(const Vector& c) const {
    if (c.size() != static_cast<Eigen::Index>(dim()))
      throw DimensionError("coefficient vector has the wrong length");
    Vector v = d_->stacked * c;
    return v.reshaped(d_->n, d_->n);
  }

  Matrix project(const Matrix& x) const { return element(coefficients(x)); }

  /// Normalized HS norm of x minus its projection onto the algebra.
  double projection_residual(const Matrix& x) const { return hs_norm(x - project(x)); }

  /// Checks orthonormality, closure under products and adjoints, and the
  /// unit. Closure is checked on all basis pairs when there are at most
  /// `max_pairs` of them, otherwise on a fixed pseudo-random subset.
  void verify_invariants(const Tolerances& tol, std::size_t max_pairs = 4096) const {
    const auto n = static_cast<double>(d_->n);
    Matrix gram = d_->stacked.adjoint() * d_->stacked / n;
    gram -= Matrix::Identity(gram.rows(), gram.cols());
    if (gram.cwiseAbs().maxCoeff() > tol.eq_tol)
      throw ConstructionError("basis is not HS-orthonormal");
    if (projection_residual(d_->unit) > tol.eq_tol)
      throw ConstructionError("unit does not lie in the span");
    for (const auto& b : d_->basis) {
      if (op_norm(d_->unit * b - b) > tol.eq_tol || op_norm(b * d_->unit - b) > tol.eq_tol)
        throw ConstructionError("unit does not act as identity");
      if (projection_residual(b.adjoint()) > tol.eq_tol * std::max(1.0, hs_norm(b)))
        throw ConstructionError("span is not closed under adjoint");
    }
    // products b_i b_j for a batch of rows i at once, so the projections are
    // matrix-matrix products
    const std::size_t k = dim();
    auto check_row = [&](std::size_t i, std::span<const std::size_t> cols) {
      Matrix prods(d_->stacked.rows(), static_cast<Eigen::Index>(cols.size()));
      for (std::size_t c = 0; c < cols.size(); ++c)
        prods.col(static_cast<Eigen::Index>(c)) = (d_->basis[i] * d_->basis[cols[c]]).reshaped();
      Matrix rest = prods - d_->stacked * (d_->stacked.adjoint() * prods / n);
      for (Eigen::Index c = 0; c < rest.cols(); ++c) {
        double scale = std::max(1.0, prods.col(c).norm() / std::sqrt(n));
        if (rest.col(c).norm() / std::sqrt(n) > tol.eq_tol * scale)
          throw ConstructionError("span is not closed under multiplication");
      }
    };
    std::vector<std::size_t> all(k);
    std::iota(all.begin(), all.end(), std::size_t{0});
    if (k * k <= max_pairs) {
      for (std::size_t i = 0; i < k; ++i) check_row(i, all);
    } else {
      Rng rng(derive_seed(k, static_cast<std::uint64_t>(d_->n)));
      std::uniform_int_distribution<std::size_t> pick(0, k - 1);
      std::vector<std::size_t> cols(std::min<std::size_t>(k, 64));
      for (std::size_t t = 0; t * cols.size() < max_pairs; ++t) {
        for (auto& c : cols) c = pick(rng);
        check_row(pick(rng), cols);
      }
    }
  }

 private:
  void check_shape(const Matrix& x) const {
    if (x.rows() != d_->n || x.cols() != d_->n)
      throw DimensionError("matrix does not match the ambient dimension " +
                           std::to_string(d_->n));
  }

  struct Data {
    int n = 0;
    std::vector<Matrix> basis;
    Matrix stacked;  // vec(basis_i) as columns
    Matrix unit;
  };
  std::shared_ptr<const Data> d_;
};

struct Membership {
  bool member = false;
  double residual = 0.0;
};

/// HS-projection membership test; the residual is always reported.
inline Membership contains(const StarAlgebra& a, const Matrix& x, const Tolerances& tol = {}) {
  double r = a.projection_residual(x);
  return {r < tol.eq_tol, r};
}

/// B inside A with a common unit.
class Inclusion {
 public:
  Inclusion(StarAlgebra big, StarAlgebra small, const Tolerances& tol = {})
      : big_(std::move(big)), small_(std::move(small)) {
    if (big_.ambient_dim() != small_.ambient_dim())
      throw ContainmentError("inclusion: ambient dimensions differ");
    for (const auto& b : small_.basis()) {
      if (big_.projection_residual(b) >= tol.eq_tol)
        throw ContainmentError("inclusion: small algebra is not contained in big algebra");
    }
    if (op_norm(big_.unit() - small_.unit()) > tol.eq_tol)
      throw ContainmentError("inclusion: units differ");
  }

  const StarAlgebra& big() const { return big_; }
  const StarAlgebra& small() const { return small_; }

 private:
  StarAlgebra big_;
  StarAlgebra small_;
};

/// Smallest unital *-subalgebra of M_n containing `gens`. The span starts at
/// {1} plus the generators and their adjoints and is closed under left
/// multiplication by generators and adjoints, which yields every word.
inline StarAlgebra from_generators(int ambient_dim, std::span<const Matrix> gens,
                                   const Tolerances& tol = {}) {
  if (ambient_dim < 1) throw ArgumentError("ambient dimension must be positive");
  std::vector<Matrix> letters;
  for (const auto& g : gens) {
    if (g.rows() != ambient_dim || g.cols() != ambient_dim)
      throw ArgumentError("generator does not match ambient dimension " +
                          std::to_string(ambient_dim));
    letters.push_back(g);
    letters.push_back(g.adjoint());
  }
  SpanBuilder sb(ambient_dim);
  sb.add(identity(ambient_dim));
  for (const auto& l : letters) sb.add(l);
  const Eigen::Index cap = static_cast<Eigen::Index>(ambient_dim) * ambient_dim;
  for (Eigen::Index t = 0; t < sb.size(); ++t) {
    Matrix b = sb.element(t);
    for (const auto& l : letters) sb.add(l * b);
    if (sb.size() > cap) throw InvariantError("closure did not stabilize within n^2 steps");
  }
  return StarAlgebra::from_orthonormal_basis(ambient_dim, sb.basis(), tol);
}

/// {x in A : xb = bx for every basis element b of B}, as a null space of the
/// stacked commutator map.
inline StarAlgebra relative_commutant(const StarAlgebra& a, const StarAlgebra& b,
                                      const Tolerances& tol = {}) {
  if (a.ambient_dim() != b.ambient_dim())
    throw ArgumentError("relative_commutant: ambient mismatch");
  const Eigen::Index n2 = static_cast<Eigen::Index>(a.ambient_dim()) * a.ambient_dim();
  const auto da = static_cast<Eigen::Index>(a.dim());
  const auto db = static_cast<Eigen::Index>(b.dim());
  Matrix k(n2 * db, da);
  for (Eigen::Index i = 0; i < da; ++i)
    for (Eigen::Index s = 0; s < db; ++s) {
      const Matrix& x = a.basis(static_cast<std::size_t>(i));
      const Matrix& y = b.basis(static_cast<std::size_t>(s));
      Matrix c = x * y - y * x;
      k.col(i).segment(s * n2, n2) = c.reshaped();
    }
  const double smax = op_norm(k);
  Matrix v = null_space(k, std::sqrt(tol.rank_tol) * std::max(1.0, smax));
  std::vector<Matrix> basis;
  for (Eigen::Index c = 0; c < v.cols(); ++c) basis.push_back(a.element(v.col(c)));
  return StarAlgebra::from_span(a.ambient_dim(), basis, tol);
}

inline StarAlgebra center(const StarAlgebra& a, const Tolerances& tol = {}) {
  return relative_commutant(a, a, tol);
}

/// A (x) M_k inside M_{n k}, spanned by b (x) e_ij.
inline StarAlgebra tensor_by_factor(const StarAlgebra& a, int k, const Tolerances& tol = {}) {
  if (k < 1) throw ArgumentError("tensor factor must be at least 1");
  if (k == 1) return a;
  std::vector<Matrix> basis;
  basis.reserve(a.dim() * static_cast<std::size_t>(k * k));
  const double scale = std::sqrt(static_cast<double>(k));
  for (const auto& b : a.basis())
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) basis.push_back(scale * kron(b, matrix_unit(k, i, j)));
  return StarAlgebra::from_orthonormal_basis(a.ambient_dim() * k, std::move(basis), tol);
}

/// x (x) 1_k, the image of an element under the tensor embedding.
inline Matrix tensor_element(const Matrix& x, int k) { return kron(x, identity(k)); }

// ---------------------------------------------------------------------------
// group algebras and actions

/// Left regular representation of a permutation group on C^{|G|}.
struct GroupAlgebra {
  PermGroup group;
  StarAlgebra algebra;
  std::vector<Matrix> lambda;  // aligned with group.elements()

  const Matrix& operator()(const Perm& g) const { return lambda[group.index_of(g)]; }
};

inline Matrix left_translation(const PermGroup& g, const Perm& x) {
  const auto n = static_cast<Eigen::Index>(g.order());
  Matrix m = Matrix::Zero(n, n);
  for (std::size_t h = 0; h < g.order(); ++h) {
    std::size_t xh = g.index_of(x * g.elements()[h]);
    m(static_cast<Eigen::Index>(xh), static_cast<Eigen::Index>(h)) = 1.0;
  }
  return m;
}

inline GroupAlgebra group_algebra(const PermGroup& g, const Tolerances& tol = {}) {
  if (g.order() < 1) throw ArgumentError("group_algebra: empty group");
  GroupAlgebra out{g, {}, {}};
  for (const auto& x : g.elements()) out.lambda.push_back(left_translation(g, x));
  out.algebra =
      StarAlgebra::from_orthonormal_basis(static_cast<int>(g.order()), out.lambda, tol);
  return out;
}

/// span{lambda_k : k in K} inside C[G].
inline StarAlgebra group_subalgebra(const GroupAlgebra& ga, const PermGroup& k,
                                    const Tolerances& tol = {}) {
  if (!k.is_subgroup_of(ga.group)) throw ContainmentError("subgroup not contained in G");
  std::vector<Matrix> basis;
  for (const auto& x : k.elements()) basis.push_back(ga(x));
  return StarAlgebra::from_orthonormal_basis(static_cast<int>(ga.group.order()),
                                             std::move(basis), tol);
}

/// g -> U_g, a unitary representation implementing an action by Ad(U_g).
class GroupAction {
 public:
  /// Takes one unitary per element of `group`, aligned with its canonical order.
  GroupAction(PermGroup group, std::vector<Matrix> unitaries, const Tolerances& tol = {})
      : group_(std::move(group)), unitaries_(std::move(unitaries)) {
    if (unitaries_.size() != group_.order())
      throw ArgumentError("action needs one unitary per group element");
    const auto n = unitaries_.front().rows();
    for (const auto& u : unitaries_) {
      if (u.rows() != n || u.cols() != n) throw DimensionError("action unitaries differ in shape");
      if (op_norm(u.adjoint() * u - identity(n)) > tol.eq_tol)
        throw ArgumentError("action: U_g is not unitary");
    }
    if (op_norm(unitary(Perm::identity(group_.degree())) - identity(n)) > tol.eq_tol)
      throw ArgumentError("action: U_e is not the identity");
    const auto& el = group_.elements();
    for (std::size_t i = 0; i < el.size(); ++i)
      for (std::size_t j = 0; j < el.size(); ++j)
        if (op_norm(unitaries_[i] * unitaries_[j] - unitary(el[i] * el[j])) > tol.eq_tol)
          throw ArgumentError("action: U_g U_h != U_gh");
  }

  /// Extends unitaries given on generators multiplicatively to the whole group.
  static GroupAction from_generators(int degree, std::span<const Perm> generators,
                                     std::span<const Matrix> generator_unitaries,
                                     const Tolerances& tol = {}) {
    if (generators.size() != generator_unitaries.size())
      throw ArgumentError("one unitary per generator is required");
    PermGroup g = closure(degree, generators);
    Eigen::Index n = generator_unitaries.empty() ? 1 : generator_unitaries.front().rows();
    std::vector<Matrix> u(g.order());
    std::vector<bool> have(g.order(), false);
    std::deque<Perm> queue{Perm::identity(degree)};
    u[g.index_of(queue.front())] = identity(n);
    have[g.index_of(queue.front())] = true;
    while (!queue.empty()) {
      Perm x = queue.front();
      queue.pop_front();
      for (std::size_t k = 0; k < generators.size(); ++k) {
        Perm y = generators[k] * x;
        std::size_t iy = g.index_of(y);
        if (have[iy]) continue;
        u[iy] = generator_unitaries[k] * u[g.index_of(x)];
        have[iy] = true;
        queue.push_back(y);
      }
    }
    return GroupAction(std::move(g), std::move(u), tol);
  }

  /// The trivial action of `group` on an n-dimensional ambient space.
  static GroupAction trivial(PermGroup group, Eigen::Index n) {
    std::vector<Matrix> u(group.order(), identity(n));
    return GroupAction(std::move(group), std::move(u));
  }

  const PermGroup& group() const { return group_; }
  const std::vector<Matrix>& unitaries() const { return unitaries_; }
  const Matrix& unitary(const Perm& g) const { return unitaries_[group_.index_of(g)]; }
  Eigen::Index ambient_dim() const { return unitaries_.front().rows(); }

  Matrix apply(const Perm& g, const Matrix& x) const {
    const Matrix& u = unitary(g);
    return u * x * u.adjoint();
  }

  /// Restriction to a subgroup.
  GroupAction restrict_to(const PermGroup& k) const {
    if (!k.is_subgroup_of(group_)) throw ContainmentError("restriction to a non-subgroup");
    std::vector<Matrix> u;
    for (const auto& x : k.elements()) u.push_back(unitary(x));
    return GroupAction(k, std::move(u));
  }

  /// Largest HS residual of Ad(U_g)(b) outside span(M) over g and basis b.
  double normalization_defect(const StarAlgebra& m) const {
    double worst = 0.0;
    for (const auto& x : group_.elements())
      for (const auto& b : m.basis()) worst = std::max(worst, m.projection_residual(apply(x, b)));
    return worst;
  }

 private:
  PermGroup group_;
  std::vector<Matrix> unitaries_;
};

/// Regular covariant representation of M x| G on C^n (x) C^{|G|}:
///   pi(m) = sum_g Ad(U_g^{-1})(m) (x) e_gg,   u_h = 1 (x) lambda_h.
struct CrossedProduct {
  StarAlgebra acted;  // M
  GroupAction action;
  StarAlgebra algebra;  // M x| G
  std::vector<Matrix> u;  // aligned with action.group().elements()

  Matrix pi(const Matrix& m) const {
    const auto& g = action.group();
    const auto order = static_cast<Eigen::Index>(g.order());
    Matrix out = Matrix::Zero(m.rows() * order, m.cols() * order);
    for (std::size_t i = 0; i < g.order(); ++i) {
      const Matrix& ug = action.unitaries()[i];
      const auto ii = static_cast<Eigen::Index>(i);
      out.block(ii * m.rows(), ii * m.cols(), m.rows(), m.cols()) = ug.adjoint() * m * ug;
    }
    // reorder from block-diagonal-by-group to M-outer layout
    return regroup(out, m.rows(), order);
  }

  const Matrix& unitary(const Perm& h) const { return u[action.group().index_of(h)]; }

  /// M x| K for a subgroup K of the acting group.
  StarAlgebra subalgebra(const PermGroup& k, const Tolerances& tol = {}) const {
    if (!k.is_subgroup_of(action.group()))
      throw ContainmentError("crossed product: K is not a subgroup of G");
    std::vector<Matrix> basis;
    for (const auto& b : acted.basis()) {
      Matrix pb = pi(b);
      for (const auto& x : k.elements()) basis.push_back(pb * unitary(x));
    }
    return StarAlgebra::from_orthonormal_basis(algebra.ambient_dim(), std::move(basis), tol);
  }

  /// Permutes a matrix laid out with group blocks outermost into the
  /// C^n (x) C^{|G|} layout (M index outermost).
  static Matrix regroup(const Matrix& group_outer, Eigen::Index n, Eigen::Index order) {
    Matrix out(group_outer.rows(), group_outer.cols());
    for (Eigen::Index g = 0; g < order; ++g)
      for (Eigen::Index h = 0; h < order; ++h)
        for (Eigen::Index i = 0; i < n; ++i)
          for (Eigen::Index j = 0; j < n; ++j)
            out(i * order + g, j * order + h) = group_outer(g * n + i, h * n + j);
    return out;
  }
};

inline CrossedProduct crossed_product(const StarAlgebra& m, const GroupAction& act,
                                      const Tolerances& tol = {}) {
  if (act.ambient_dim() != m.ambient_dim())
    throw ArgumentError("crossed_product: action and algebra ambient dimensions differ");
  if (act.normalization_defect(m) >= tol.eq_tol)
    throw ArgumentError("crossed_product: action does not normalize the algebra");
  CrossedProduct cp{m, act, {}, {}};
  const auto& g = act.group();
  for (const auto& x : g.elements())
    cp.u.push_back(kron(identity(m.ambient_dim()), left_translation(g, x)));
  std::vector<Matrix> basis;
  for (const auto& b : m.basis()) {
    Matrix pb = cp.pi(b);
    for (const auto& uh : cp.u) basis.push_back(pb * uh);
  }
  cp.algebra = StarAlgebra::from_orthonormal_basis(
      m.ambient_dim() * static_cast<int>(g.order()), std::move(basis), tol);
  return cp;
}

/// |G|^{-1} sum_g Ad(U_g)(x).
inline Matrix average_over_action(const GroupAction& act, const Matrix& x) {
  Matrix acc = Matrix::Zero(x.rows(), x.cols());
  for (const auto& u : act.unitaries()) acc += u * x * u.adjoint();
  return acc / static_cast<double>(act.unitaries().size());
}

/// A^G as the image of the averaging map.
inline StarAlgebra fixed_point_algebra(const StarAlgebra& a, const GroupAction& act,
                                       const Tolerances& tol = {}) {
  if (act.ambient_dim() != a.ambient_dim())
    throw ArgumentError("fixed_point: action and algebra ambient dimensions differ");
  if (act.normalization_defect(a) >= tol.eq_tol)
    throw ArgumentError("fixed_point: action does not normalize the algebra");
  std::vector<Matrix> images;
  for (const auto& b : a.basis()) images.push_back(average_over_action(act, b));
  return StarAlgebra::from_span(a.ambient_dim(), images, tol);
}

}  // namespace fdindex
