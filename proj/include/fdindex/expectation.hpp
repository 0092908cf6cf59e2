#pragma once

// Conditional expectations E: A -> B stored as their values on A's
// orthonormal basis, compatibility of intermediates, and a randomized lower
// bound for the probabilistic index.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "fdindex/algebra.hpp"
#include "fdindex/errors.hpp"
#include "fdindex/linalg.hpp"

namespace fdindex {

enum class ExpectationKind { trace_preserving, custom };

inline const char* to_string(ExpectationKind k) {
  return k == ExpectationKind::trace_preserving ? "trace_preserving" : "custom";
}

class CondExpectation;

/// Maximal violations of the conditional-expectation axioms. All values are
/// operator norms except `range` (HS residual outside B) and
/// `faithfulness_margin` (smallest ||E(x*x)|| over unit-norm samples).
struct ExpectationReport {
  double idempotency = 0.0;
  double range = 0.0;
  double fixes_small = 0.0;
  double unitality = 0.0;
  double bimodule = 0.0;
  double positivity = 0.0;
  double faithfulness_margin = 0.0;
  double eq_tol = 0.0;

  bool idempotent() const { return idempotency < eq_tol; }
  bool in_range() const { return range < eq_tol && fixes_small < eq_tol; }
  bool unital() const { return unitality < eq_tol; }
  bool bimodular() const { return bimodule < eq_tol; }
  bool positive() const { return positivity < eq_tol; }
  bool faithful() const { return faithfulness_margin > eq_tol; }

  /// Faithfulness is diagnostic only and does not enter `passed`.
  bool passed() const { return idempotent() && in_range() && unital() && bimodular() && positive(); }

  /// Name of the first failing axiom, or an empty string.
  std::string first_failure() const {
    if (!idempotent()) return "idempotency E(E(x)) = E(x)";
    if (!in_range()) return "range E(A) = B with E(b) = b";
    if (!unital()) return "unitality E(1) = 1";
    if (!bimodular()) return "bimodule property E(b1 x b2) = b1 E(x) b2";
    if (!positive()) return "positivity E(x*x) >= 0";
    return {};
  }
};

class CondExpectation {
 public:
  CondExpectation() = default;

  /// HS-orthogonal projection of A onto B, i.e. the expectation preserving
  /// the normalized ambient trace.
  static CondExpectation trace_preserving(const Inclusion& inc, const Tolerances& tol = {});

  /// A user-supplied map given by its values on A's basis; validated.
  static CondExpectation custom(const Inclusion& inc, std::vector<Matrix> values,
                                const Tolerances& tol = {});

  /// No validation. Used to inspect broken maps with `verify`.
  static CondExpectation unverified(const Inclusion& inc, std::vector<Matrix> values,
                                    ExpectationKind kind = ExpectationKind::custom) {
    if (values.size() != inc.big().dim())
      throw ArgumentError("expectation needs one value per basis element of A");
    auto d = std::make_shared<Data>(Data{inc, std::move(values), {}, kind});
    const int n = inc.big().ambient_dim();
    d->stacked.resize(static_cast<Eigen::Index>(n) * n,
                      static_cast<Eigen::Index>(d->values.size()));
    for (std::size_t i = 0; i < d->values.size(); ++i) {
      if (d->values[i].rows() != n || d->values[i].cols() != n)
        throw DimensionError("expectation value has the wrong shape");
      d->stacked.col(static_cast<Eigen::Index>(i)) = d->values[i].reshaped();
    }
    CondExpectation e;
    e.d_ = std::move(d);
    return e;
  }

  const Inclusion& inclusion() const { return d_->inclusion; }
  const StarAlgebra& big() const { return d_->inclusion.big(); }
  const StarAlgebra& small() const { return d_->inclusion.small(); }
  ExpectationKind kind() const { return d_->kind; }
  const std::vector<Matrix>& values() const { return d_->values; }

  /// E(x) for x in A (x is first projected onto A).
  Matrix operator()(const Matrix& x) const {
    Vector c = big().coefficients(x);
    Vector v = d_->stacked * c;
    const int n = big().ambient_dim();
    return v.reshaped(n, n);
  }

  /// tau(E(x)) with tau the normalized ambient trace.
  Complex state(const Matrix& x) const {
    return (*this)(x).trace() / static_cast<double>(big().ambient_dim());
  }

 private:
  struct Data {
    Inclusion inclusion;
    std::vector<Matrix> values;
    Matrix stacked;
    ExpectationKind kind;
  };
  std::shared_ptr<const Data> d_;
};

/// Checks every axiom on basis elements plus `samples` seeded random elements.
/// Bimodule triples are exhaustive when there are at most 4096 of them.
inline ExpectationReport verify(const CondExpectation& e, int samples = 16,
                                std::uint64_t seed = 0, const Tolerances& tol = {}) {
  ExpectationReport r;
  r.eq_tol = tol.eq_tol;
  const StarAlgebra& a = e.big();
  const StarAlgebra& b = e.small();
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const Matrix& v = e.values()[i];
    r.idempotency = std::max(r.idempotency, op_norm(e(v) - v));
    r.range = std::max(r.range, b.projection_residual(v));
  }
  for (const auto& y : b.basis()) r.fixes_small = std::max(r.fixes_small, op_norm(e(y) - y));
  r.unitality = op_norm(e(a.unit()) - a.unit());

  const std::size_t da = a.dim(), db = b.dim();
  auto triple = [&](std::size_t s, std::size_t i, std::size_t t) {
    const Matrix& b1 = b.basis(s);
    const Matrix& b2 = b.basis(t);
    const Matrix& x = a.basis(i);
    r.bimodule = std::max(r.bimodule, op_norm(e(b1 * x * b2) - b1 * e(x) * b2));
  };
  Rng rng(seed);
  if (db * db * da <= 4096) {
    for (std::size_t s = 0; s < db; ++s)
      for (std::size_t i = 0; i < da; ++i)
        for (std::size_t t = 0; t < db; ++t) triple(s, i, t);
  } else {
    std::uniform_int_distribution<std::size_t> pa(0, da - 1), pb(0, db - 1);
    for (int k = 0; k < 4096; ++k) triple(pb(rng), pa(rng), pb(rng));
  }

  r.faithfulness_margin = std::numeric_limits<double>::infinity();
  auto probe = [&](const Matrix& x0) {
    double nx = op_norm(x0);
    if (nx == 0.0) return;
    Matrix x = x0 / nx;
    Matrix ex = e(x.adjoint() * x);
    double herm = hermiticity_defect(ex);
    r.positivity = std::max({r.positivity, herm, -min_eigenvalue(ex)});
    r.faithfulness_margin = std::min(r.faithfulness_margin, op_norm(ex));
  };
  for (const auto& x : a.basis()) probe(x);
  for (int k = 0; k < samples; ++k)
    probe(a.element(random_vector(static_cast<Eigen::Index>(da), rng)));
  return r;
}

inline CondExpectation CondExpectation::trace_preserving(const Inclusion& inc,
                                                         const Tolerances& tol) {
  std::vector<Matrix> values;
  values.reserve(inc.big().dim());
  for (const auto& x : inc.big().basis()) values.push_back(inc.small().project(x));
  CondExpectation e = unverified(inc, std::move(values), ExpectationKind::trace_preserving);
  ExpectationReport rep = verify(e, 4, 0x7e11, tol);
  if (!rep.passed())
    throw ConstructionError("trace-preserving expectation fails " + rep.first_failure());
  return e;
}

inline CondExpectation CondExpectation::custom(const Inclusion& inc, std::vector<Matrix> values,
                                               const Tolerances& tol) {
  CondExpectation e = unverified(inc, std::move(values), ExpectationKind::custom);
  ExpectationReport rep = verify(e, 8, 0xc0ffee, tol);
  if (!rep.passed()) throw ConstructionError("custom expectation fails " + rep.first_failure());
  return e;
}

/// B <= P <= A together with the expectation F: A -> P satisfying
/// E|_P o F = E.
struct CompatibleIntermediate {
  StarAlgebra algebra;
  CondExpectation onto;        // F: A -> P
  CondExpectation restricted;  // E|_P: P -> B
  double compatibility_residual = 0.0;
};

/// F is the orthogonal projection of A onto P for the faithful state
/// tau o E; this is the only candidate, since E o F = E forces F to preserve
/// that state. Throws IncompatibilityError when F is not an expectation or
/// E|_P o F differs from E.
inline CompatibleIntermediate make_compatible(const CondExpectation& e, const StarAlgebra& p,
                                              const Tolerances& tol = {}) {
  const StarAlgebra& a = e.big();
  Inclusion a_over_p(a, p, tol);
  Inclusion p_over_b(p, e.small(), tol);

  CompatibleIntermediate ci;
  ci.algebra = p;
  if (e.kind() == ExpectationKind::trace_preserving) {
    ci.onto = CondExpectation::trace_preserving(a_over_p, tol);
    ci.restricted = CondExpectation::trace_preserving(p_over_b, tol);
  } else {
    const auto dp = static_cast<Eigen::Index>(p.dim());
    Matrix gram(dp, dp);
    for (Eigen::Index i = 0; i < dp; ++i)
      for (Eigen::Index j = 0; j < dp; ++j)
        gram(i, j) = e.state(p.basis(static_cast<std::size_t>(i)).adjoint() *
                             p.basis(static_cast<std::size_t>(j)));
    Eigen::LDLT<Matrix> solver(gram);
    std::vector<Matrix> f_values;
    for (const auto& x : a.basis()) {
      Vector c(dp);
      for (Eigen::Index i = 0; i < dp; ++i)
        c(i) = e.state(p.basis(static_cast<std::size_t>(i)).adjoint() * x);
      f_values.push_back(p.element(solver.solve(c)));
    }
    std::vector<Matrix> r_values;
    for (const auto& y : p.basis()) r_values.push_back(e(y));
    try {
      ci.onto = CondExpectation::custom(a_over_p, std::move(f_values), tol);
      ci.restricted = CondExpectation::custom(p_over_b, std::move(r_values), tol);
    } catch (const ConstructionError& err) {
      throw IncompatibilityError(std::string("no compatible expectation onto P: ") + err.what(),
                                 std::numeric_limits<double>::infinity());
    }
  }
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const Matrix& x = a.basis(i);
    ci.compatibility_residual =
        std::max(ci.compatibility_residual, op_norm(ci.restricted(ci.onto(x)) - e(x)));
  }
  if (ci.compatibility_residual >= tol.eq_tol)
    throw IncompatibilityError("E|_P o F != E", ci.compatibility_residual);
  return ci;
}

/// A^G with the averaging expectation |G|^{-1} sum_g Ad(U_g).
struct FixedPoint {
  StarAlgebra algebra;
  CondExpectation expectation;
};

inline FixedPoint fixed_point(const StarAlgebra& a, const GroupAction& act,
                              const Tolerances& tol = {}) {
  StarAlgebra fixed = fixed_point_algebra(a, act, tol);
  std::vector<Matrix> values;
  for (const auto& x : a.basis()) values.push_back(average_over_action(act, x));
  Inclusion inc(a, fixed, tol);
  return {fixed, CondExpectation::custom(inc, std::move(values), tol)};
}

namespace detail {

/// lambda_max(h^{-1/2} x h^{-1/2}) with h = E(x). The pseudo-inverse root
/// cuts eigenvalues of h below sqrt(machine epsilon) * ||h||: in those
/// directions x is rounding noise, and dividing by h would inflate it.
inline double indp_score(const CondExpectation& e, const Matrix& x, const Tolerances& tol) {
  Matrix h = e(x);
  h = (h + h.adjoint()) / 2.0;
  Tolerances cut = tol;
  cut.rank_tol = std::max(tol.rank_tol, std::sqrt(std::numeric_limits<double>::epsilon()) * op_norm(h));
  Matrix r = psd_calculus(h, PsdFunction::pinv_sqrt, cut);
  return max_eigenvalue(r * x * r);
}

/// Hermitian part of the projection onto A, scaled to unit norm. Repeated
/// squaring doubles any rounding component outside A (or off the Hermitian
/// part) at every step, so both are removed each time.
inline Matrix normalized(const StarAlgebra& a, const Matrix& x) {
  Matrix p = a.project(x);
  Matrix h = (p + p.adjoint()) / 2.0;
  return h / op_norm(h);
}

}  // namespace detail

/// Lower bound for Ind_p(E) = inf{gamma : gamma E - id is positive}.
///
/// Each trial starts from a random positive x = y*y in A and climbs the score
/// lambda_max(E(x)^{-1/2} x E(x)^{-1/2}) using two moves that keep x positive
/// and inside A: squaring (which concentrates x on its top spectral
/// projection) and congruence x -> (1 + eps z) x (1 + eps z)* by random z in A.
/// Trial t uses the seed derive_seed(seed, t), so the result is
/// non-decreasing in `trials`. Every score is attained by some x, so up to
/// rounding the returned value never exceeds Ind_p(E).
inline double ind_p_estimate(const CondExpectation& e, int trials, std::uint64_t seed,
                             const Tolerances& tol = {}, int steps = 60) {
  if (trials < 1) throw ArgumentError("ind_p_estimate needs at least one trial");
  const StarAlgebra& a = e.big();
  const auto da = static_cast<Eigen::Index>(a.dim());
  const Matrix one = a.unit();
  double best = 1.0;
  for (int t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    Matrix y = a.element(random_vector(da, rng));
    Matrix x = detail::normalized(a, y.adjoint() * y);
    double score = detail::indp_score(e, x, tol);
    for (int s = 0; s < steps; ++s) {
      Matrix cand_x = detail::normalized(a, x * x);
      double cand = detail::indp_score(e, cand_x, tol);
      for (double eps : {0.3, 0.05}) {
        Matrix z = detail::normalized(a, a.element(random_vector(da, rng)));
        Matrix w = one + eps * z;
        Matrix xx = detail::normalized(a, w * x * w.adjoint());
        double sc = detail::indp_score(e, xx, tol);
        if (sc > cand) {
          cand = sc;
          cand_x = std::move(xx);
        }
      }
      if (cand > score) {
        score = cand;
        x = std::move(cand_x);
      }
    }
    best = std::max(best, score);
  }
  return best;
}

}  // namespace fdindex
