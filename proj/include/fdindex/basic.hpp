#pragma once

// Reduced basic construction of E: A -> B realized on A itself.
//
// A is given coordinates that are orthonormal for the faithful state
// tau o E, so module adjoints are matrix adjoints: lambda(a) is left
// multiplication, e is E acting on coordinates, and M1 = span lambda(A) e lambda(A).

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fdindex/expectation.hpp"
#include "fdindex/pimsner.hpp"

namespace fdindex {

struct BuildOptions {
  /// M1 is materialized as a StarAlgebra only when dim A is at most this.
  std::size_t materialize_m1_limit = 24;
  /// The least-squares route of the dual expectation runs only when
  /// dim A is at most this (the system has (dim A)^2 columns).
  std::size_t lstsq_limit = 24;
  /// Spanning pairs checked for the dual expectation: all of them when
  /// (dim A)^2 is at most this, a seeded sample of this size otherwise.
  std::size_t max_spanning_pairs = 1024;
};

/// Residuals of the defining identities, recorded by `build`.
struct BasicDiagnostics {
  double projection = 0.0;        // ||e^2 - e|| + ||e - e*||
  double star_representation = 0.0;  // max ||lambda(a)* - lambda(a*)||
  double compression = 0.0;       // max ||e lambda(a) e - lambda(E(a)) e||
  std::size_t commutant_dim = 0;  // dim of {e}' cap lambda(A)
  std::size_t small_dim = 0;      // dim B
  double small_commutes = 0.0;    // max ||[lambda(b), e]||, b in B
  double commutant_in_small = 0.0;  // HS residual of {e}' cap lambda(A) outside lambda(B)
  double partition_of_unity = 0.0;  // ||sum_j lambda(m_j) e lambda(m_j)* - 1||
};

class BasicConstruction {
 public:
  BasicConstruction() = default;

  static BasicConstruction build(const CondExpectation& e, const Tolerances& tol = {},
                                 const BuildOptions& opts = {});

  const CondExpectation& source() const { return d_->source; }
  std::size_t rep_dim() const { return d_->source.big().dim(); }
  const BuildOptions& options() const { return d_->options; }

  /// Coordinates of x in A (orthonormal for tau o E).
  Vector coords(const Matrix& x) const {
    return d_->gram_sqrt * d_->source.big().coefficients(x);
  }

  Matrix element(const Vector& v) const {
    return d_->source.big().element(d_->gram_inv_sqrt * v);
  }

  /// Left multiplication by a in coordinates.
  Matrix lambda(const Matrix& a) const {
    Vector c = d_->source.big().coefficients(a);
    const auto d = static_cast<Eigen::Index>(rep_dim());
    Vector v = d_->lambda_stacked * c;
    return v.reshaped(d, d);
  }

  const Matrix& lambda_basis(std::size_t i) const { return d_->lambda_basis[i]; }
  const Matrix& jones_projection() const { return d_->e; }
  const ModuleBasis& module_basis() const { return d_->module_basis; }
  const WatataniIndex& index() const { return d_->index; }
  /// Ind_W(E)^{-1} as an element of A.
  const Matrix& index_inverse() const { return d_->index_inverse; }
  const std::optional<StarAlgebra>& m1() const { return d_->m1; }
  const StarAlgebra& lambda_algebra() const { return d_->lambda_algebra; }
  const BasicDiagnostics& diagnostics() const { return d_->diagnostics; }

  /// M1, or a SizeError when it was not materialized.
  const StarAlgebra& require_m1() const {
    if (!d_->m1)
      throw SizeError("M1 not materialized: dim A = " + std::to_string(rep_dim()) +
                      " exceeds materialize_m1_limit");
    return *d_->m1;
  }

  /// lambda(x_p) e lambda(x_q) over A's basis.
  Matrix spanning_element(std::size_t p, std::size_t q) const {
    return d_->lambda_basis[p] * d_->e * d_->lambda_basis[q];
  }

 private:
  struct Data {
    CondExpectation source;
    BuildOptions options;
    Matrix gram_sqrt;      // coordinates = gram_sqrt * HS coefficients
    Matrix gram_inv_sqrt;
    std::vector<Matrix> lambda_basis;
    Matrix lambda_stacked;
    Matrix e;
    ModuleBasis module_basis;
    WatataniIndex index;
    Matrix index_inverse;
    StarAlgebra lambda_algebra;
    std::optional<StarAlgebra> m1;
    BasicDiagnostics diagnostics;
  };
  std::shared_ptr<const Data> d_;
};

inline BasicConstruction BasicConstruction::build(const CondExpectation& e,
                                                  const Tolerances& tol,
                                                  const BuildOptions& opts) {
  auto d = std::make_shared<Data>();
  d->source = e;
  d->options = opts;
  const StarAlgebra& a = e.big();
  const StarAlgebra& b = e.small();
  const auto dim = static_cast<Eigen::Index>(a.dim());

  if (e.kind() == ExpectationKind::trace_preserving) {
    d->gram_sqrt = Matrix::Identity(dim, dim);
    d->gram_inv_sqrt = Matrix::Identity(dim, dim);
  } else {
    Matrix gram(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i)
      for (Eigen::Index j = 0; j < dim; ++j)
        gram(i, j) = e.state(a.basis(static_cast<std::size_t>(i)).adjoint() *
                             a.basis(static_cast<std::size_t>(j)));
    gram = (gram + gram.adjoint()) / 2.0;
    d->gram_sqrt = psd_calculus(gram, PsdFunction::sqrt, tol);
    d->gram_inv_sqrt = psd_calculus(gram, PsdFunction::pinv_sqrt, tol);
    if (op_norm(d->gram_sqrt * d->gram_inv_sqrt - Matrix::Identity(dim, dim)) > tol.eq_tol)
      throw ConstructionError("state tau o E is not faithful on A");
  }

  BasicConstruction bc;
  bc.d_ = d;  // coords/element are usable from here on

  std::vector<Matrix> unit_vectors;  // element(e_j)
  for (Eigen::Index j = 0; j < dim; ++j)
    unit_vectors.push_back(bc.element(Vector::Unit(dim, j)));

  d->lambda_stacked.resize(dim * dim, dim);
  for (std::size_t i = 0; i < a.dim(); ++i) {
    Matrix l(dim, dim);
    for (Eigen::Index j = 0; j < dim; ++j) l.col(j) = bc.coords(a.basis(i) * unit_vectors[j]);
    d->lambda_stacked.col(static_cast<Eigen::Index>(i)) = l.reshaped();
    d->lambda_basis.push_back(std::move(l));
  }
  d->e.resize(dim, dim);
  for (Eigen::Index j = 0; j < dim; ++j) d->e.col(j) = bc.coords(e(unit_vectors[j]));

  d->module_basis = orthonormal_basis(e, tol);
  d->index = watatani_index(d->module_basis, a, tol);
  d->index_inverse = psd_calculus(d->index.value, PsdFunction::inv, tol);
  // lambda is left multiplication, hence multiplicative; only the
  // adjoint relation needs checking, and that is done below
  d->lambda_algebra =
      StarAlgebra::from_span(static_cast<int>(dim), d->lambda_basis, tol, false);

  BasicDiagnostics& g = d->diagnostics;
  const Matrix& ep = d->e;
  g.projection = op_norm(ep * ep - ep) + op_norm(ep - ep.adjoint());
  if (g.projection >= tol.eq_tol) throw ConstructionError("e is not a projection: e^2 = e = e*");

  for (std::size_t i = 0; i < a.dim(); ++i) {
    const Matrix& x = a.basis(i);
    g.star_representation = std::max(
        g.star_representation, op_norm(d->lambda_basis[i].adjoint() - bc.lambda(x.adjoint())));
    g.compression = std::max(g.compression,
                             op_norm(ep * d->lambda_basis[i] * ep - bc.lambda(e(x)) * ep));
  }
  if (g.star_representation >= tol.eq_tol)
    throw ConstructionError("lambda is not a *-representation: lambda(a)* = lambda(a*)");
  if (g.compression >= tol.eq_tol)
    throw ConstructionError("e lambda(a) e = lambda(E(a)) e fails");

  // {e}' cap lambda(A) against lambda(B), both directions
  Matrix k(dim * dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const Matrix& l = d->lambda_basis[static_cast<std::size_t>(i)];
    Matrix c = l * ep - ep * l;
    k.col(i) = c.reshaped();
  }
  const double smax = op_norm(k);
  Matrix null = null_space(k, std::sqrt(tol.rank_tol) * std::max(1.0, smax));
  g.commutant_dim = static_cast<std::size_t>(null.cols());
  g.small_dim = b.dim();
  for (const auto& y : b.basis()) {
    Matrix ly = bc.lambda(y);
    g.small_commutes = std::max(g.small_commutes, op_norm(ly * ep - ep * ly));
  }
  for (Eigen::Index c = 0; c < null.cols(); ++c)
    g.commutant_in_small =
        std::max(g.commutant_in_small, b.projection_residual(a.element(null.col(c))));
  if (g.commutant_dim != g.small_dim || g.small_commutes >= tol.eq_tol ||
      g.commutant_in_small >= tol.eq_tol)
    throw ConstructionError("{e}' cap lambda(A) = lambda(B) fails");

  Matrix sum = Matrix::Zero(dim, dim);
  for (const auto& m : d->module_basis.elements) {
    Matrix lm = bc.lambda(m);
    sum += lm * ep * lm.adjoint();
  }
  g.partition_of_unity = op_norm(sum - Matrix::Identity(dim, dim));
  if (g.partition_of_unity >= tol.eq_tol)
    throw ConstructionError("sum_j lambda(m_j) e lambda(m_j)* = 1 fails");

  if (a.dim() <= opts.materialize_m1_limit) {
    std::vector<Matrix> spanning;
    spanning.reserve(a.dim() * a.dim());
    for (std::size_t p = 0; p < a.dim(); ++p)
      for (std::size_t q = 0; q < a.dim(); ++q) spanning.push_back(bc.spanning_element(p, q));
    d->m1 = StarAlgebra::from_span(static_cast<int>(dim), spanning, tol);
  }
  return bc;
}

/// theta_{x,y} = lambda(x) e lambda(y*), the rank-one module operator
/// z -> x E(y* z).
inline Matrix theta(const BasicConstruction& bc, const Matrix& x, const Matrix& y,
                    const Tolerances& tol = {}) {
  const StarAlgebra& a = bc.source().big();
  if (!contains(a, x, tol).member || !contains(a, y, tol).member)
    throw ArgumentError("theta: arguments must lie in A");
  return bc.lambda(x) * bc.jones_projection() * bc.lambda(y.adjoint());
}

/// The dual expectation E1: M1 -> lambda(A), E1(lambda(x) e lambda(y)) =
/// lambda(Ind_W(E)^{-1} x y).
///
/// Evaluation expands z in M1 through the module basis {m_k}:
/// z = sum_k lambda(z(m_k)) e lambda(m_k)*, hence E1(z) = Ind^{-1} sum_k z(m_k) m_k*.
/// The expansion residual certifies z in M1. For small dim A the
/// prescription is also solved as a minimum-norm least-squares problem on
/// the spanning set {lambda(x_p) e lambda(x_q)}, whose consistency residual
/// and agreement with the expansion route are recorded.
class DualExpectation {
 public:
  DualExpectation() = default;

  /// E1(z) as an element of A.
  Matrix operator()(const Matrix& z) const {
    const auto& mb = bc_.module_basis();
    const StarAlgebra& a = bc_.source().big();
    Matrix acc = Matrix::Zero(a.ambient_dim(), a.ambient_dim());
    for (const auto& m : mb.elements) acc += bc_.element(z * bc_.coords(m)) * m.adjoint();
    return bc_.index_inverse() * acc;
  }

  /// lambda(E1(z)).
  Matrix lambda_value(const Matrix& z) const { return bc_.lambda((*this)(z)); }

  /// ||z - sum_k lambda(z(m_k)) e lambda(m_k)*||; zero exactly when z lies in M1.
  double expansion_residual(const Matrix& z) const {
    Matrix acc = Matrix::Zero(z.rows(), z.cols());
    for (const auto& m : bc_.module_basis().elements)
      acc += bc_.lambda(bc_.element(z * bc_.coords(m))) * bc_.jones_projection() *
             bc_.lambda(m).adjoint();
    return op_norm(z - acc);
  }

  const BasicConstruction& construction() const { return bc_; }

  /// max ||E1(lambda(x_p) e lambda(x_q)) - Ind^{-1} x_p x_q|| over checked pairs.
  double spanning_residual() const { return spanning_residual_; }
  std::size_t spanning_pairs_checked() const { return spanning_pairs_checked_; }
  std::optional<double> lstsq_consistency() const { return lstsq_consistency_; }
  std::optional<double> lstsq_agreement() const { return lstsq_agreement_; }

  /// E1 packaged as a conditional expectation lambda(A) <= M1 (values on
  /// M1's basis). Requires M1 to be materialized.
  const std::optional<CondExpectation>& as_expectation() const { return as_expectation_; }
  const std::optional<ExpectationReport>& verification() const { return verification_; }

  CondExpectation require_expectation() const {
    if (!as_expectation_) throw SizeError("dual expectation: M1 not materialized");
    return *as_expectation_;
  }

 private:
  friend DualExpectation dual_expectation(const BasicConstruction&, const Tolerances&,
                                          std::uint64_t, bool);
  friend void package_dual(DualExpectation&, const BasicConstruction&, const Tolerances&,
                           std::uint64_t);
  BasicConstruction bc_;
  double spanning_residual_ = 0.0;
  std::size_t spanning_pairs_checked_ = 0;
  std::optional<double> lstsq_consistency_;
  std::optional<double> lstsq_agreement_;
  std::optional<CondExpectation> as_expectation_;
  std::optional<ExpectationReport> verification_;
};

inline void package_dual(DualExpectation& de, const BasicConstruction& bc, const Tolerances& tol,
                         std::uint64_t seed) {
  if (bc.m1()) {
    const StarAlgebra& m1 = *bc.m1();
    std::vector<Matrix> vals;
    vals.reserve(m1.dim());
    for (const auto& z : m1.basis()) vals.push_back(de.lambda_value(z));
    Inclusion inc(m1, bc.lambda_algebra(), tol);
    CondExpectation e1 = CondExpectation::unverified(inc, std::move(vals));
    ExpectationReport rep = verify(e1, 16, derive_seed(seed, 2), tol);
    de.verification_ = rep;
    if (!rep.passed()) throw ConstructionError("dual expectation fails " + rep.first_failure());
    de.as_expectation_ = std::move(e1);
  }
}

/// With `run_checks` false the spanning-pair and least-squares checks are
/// skipped; E1 is still packaged and verified when M1 is materialized.
inline DualExpectation dual_expectation(const BasicConstruction& bc, const Tolerances& tol = {},
                                        std::uint64_t seed = 0, bool run_checks = true) {
  DualExpectation de;
  de.bc_ = bc;
  if (!run_checks) {
    package_dual(de, bc, tol, seed);
    return de;
  }
  const StarAlgebra& a = bc.source().big();
  const std::size_t n = a.dim();
  const auto& opts = bc.options();

  auto pair_residual = [&](std::size_t p, std::size_t q) {
    Matrix want = bc.index_inverse() * a.basis(p) * a.basis(q);
    return op_norm(de(bc.spanning_element(p, q)) - want);
  };
  if (n * n <= opts.max_spanning_pairs) {
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = 0; q < n; ++q)
        de.spanning_residual_ = std::max(de.spanning_residual_, pair_residual(p, q));
    de.spanning_pairs_checked_ = n * n;
  } else {
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t t = 0; t < opts.max_spanning_pairs; ++t)
      de.spanning_residual_ = std::max(de.spanning_residual_, pair_residual(pick(rng), pick(rng)));
    de.spanning_pairs_checked_ = opts.max_spanning_pairs;
  }
  if (de.spanning_residual_ >= tol.eq_tol)
    throw ConstructionError("E1(lambda(x) e lambda(y)) = lambda(Ind^{-1} x y) fails");

  if (n <= opts.lstsq_limit) {
    const auto dd = static_cast<Eigen::Index>(n * n);
    Matrix k(dd, dd);
    Matrix values(static_cast<Eigen::Index>(n), dd);  // prescribed E1 as A-coefficients
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = 0; q < n; ++q) {
        const auto col = static_cast<Eigen::Index>(p * n + q);
        k.col(col) = bc.spanning_element(p, q).reshaped();
        values.col(col) = a.coefficients(bc.index_inverse() * a.basis(p) * a.basis(q));
      }
    // row space of the spanning system; same cutoff as the commutant check
    GramSpectrum spec = gram_spectrum(k);
    const double cut = tol.rank_tol * std::max(1.0, spec.squared(0));
    Eigen::Index rank = 0;
    while (rank < spec.squared.size() && spec.squared(rank) > cut) ++rank;
    Matrix w = spec.vectors.leftCols(rank);
    Matrix defect = values - (values * w) * w.adjoint();
    double consistency = 0.0;
    for (Eigen::Index c = 0; c < dd; ++c)
      consistency = std::max(consistency, op_norm(a.element(defect.col(c))));
    de.lstsq_consistency_ = consistency;
    if (consistency >= tol.eq_tol)
      throw ConstructionError("dual expectation spanning system is inconsistent");

    // least-squares E1 against the expansion route on random elements of M1
    Rng rng(derive_seed(seed, 1));
    RealVector inv_sq = spec.squared.head(rank).cwiseInverse();
    double agreement = 0.0;
    for (int t = 0; t < 8; ++t) {
      Vector coeff = random_vector(dd, rng);
      Vector z = k * coeff;
      // minimum-norm solution of k c = z
      Vector c = w * (inv_sq.asDiagonal() * (w.adjoint() * (k.adjoint() * z)));
      Matrix via_lstsq = a.element(values * c);
      Matrix zm = z.reshaped(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
      agreement = std::max(agreement, op_norm(via_lstsq - de(zm)) / std::max(1.0, op_norm(zm)));
    }
    de.lstsq_agreement_ = agreement;
  }

  package_dual(de, bc, tol, seed);
  return de;
}

/// e_P = sum_j lambda(mu_j) e lambda(mu_j)* for a quasi-basis {mu_j} of E|_P,
/// checked to be a projection dominating e and implementing F.
inline Matrix intermediate_jones_projection(const BasicConstruction& bc,
                                            const CompatibleIntermediate& ci,
                                            std::span<const Matrix> quasi_basis,
                                            const Tolerances& tol = {}) {
  const auto dim = static_cast<Eigen::Index>(bc.rep_dim());
  const Matrix& e = bc.jones_projection();
  Matrix ep = Matrix::Zero(dim, dim);
  for (const auto& mu : quasi_basis) {
    Matrix l = bc.lambda(mu);
    ep += l * e * l.adjoint();
  }
  if (op_norm(ep * ep - ep) >= tol.eq_tol || hermiticity_defect(ep) >= tol.eq_tol)
    throw InvariantError("e_P is not a projection");
  if (op_norm(ep * e - e) >= tol.eq_tol || op_norm(e * ep - e) >= tol.eq_tol)
    throw InvariantError("e_P e = e = e e_P fails");
  const StarAlgebra& a = bc.source().big();
  for (const auto& x : a.basis())
    if (op_norm(bc.element(ep * bc.coords(x)) - ci.onto(x)) >= tol.eq_tol)
      throw InvariantError("e_P does not implement F on coordinates");
  return ep;
}

inline Matrix intermediate_jones_projection(const BasicConstruction& bc,
                                            const CompatibleIntermediate& ci,
                                            const Tolerances& tol = {}) {
  ModuleBasis mu = orthonormal_basis(ci.restricted, tol);
  return intermediate_jones_projection(bc, ci, mu.elements, tol);
}

/// Floors of the tower B <= A <= M1 <= M2 ..., each built from the dual
/// expectation of the previous one. Depth counts basic constructions.
inline std::vector<BasicConstruction> basic_tower(const CondExpectation& e, int depth = 2,
                                                  const Tolerances& tol = {},
                                                  const BuildOptions& opts = {}) {
  if (depth < 1 || depth > 2) throw ArgumentError("tower depth must be 1 or 2");
  std::vector<BasicConstruction> floors{BasicConstruction::build(e, tol, opts)};
  if (depth == 2) {
    DualExpectation de = dual_expectation(floors.back(), tol);
    floors.push_back(BasicConstruction::build(de.require_expectation(), tol, opts));
  }
  return floors;
}

}  // namespace fdindex
