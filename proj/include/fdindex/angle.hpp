#pragma once

// Interior and exterior angles between compatible intermediates
// B <= P, Q <= A, with B playing the role of N.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "fdindex/basic.hpp"

namespace fdindex {

enum class AnglePath { definition, quasibasis, both };

inline const char* to_string(AnglePath p) {
  switch (p) {
    case AnglePath::definition: return "definition";
    case AnglePath::quasibasis: return "quasibasis";
    case AnglePath::both: return "both";
  }
  return "?";
}

/// One evaluation of numerator / (den0 * den1).
struct PathValue {
  double raw_cos = 0.0;
  double numerator = 0.0;
  std::array<double, 2> denominators{};
};

struct AngleReport {
  double cos_value = 0.0;  // clamped to [0, 1]
  double raw_cos = 0.0;
  double angle = 0.0;      // arccos(cos_value)
  AnglePath path = AnglePath::both;
  double path_disagreement = 0.0;
  double numerator = 0.0;
  std::array<double, 2> denominators{};
  std::optional<PathValue> definition;
  std::optional<PathValue> quasibasis;
  bool commuting_square = false;
  double commuting_residual = 0.0;
  std::string provenance;
};

namespace detail {

/// Clamps to [0, 1]. Values within rounding noise of 1 snap to 1: acos
/// magnifies an error eps near 1 to sqrt(2 eps), which would otherwise turn
/// identical projections into a visibly nonzero angle.
inline double clamp_cos(double raw) {
  constexpr double noise = 1e3 * std::numeric_limits<double>::epsilon();
  if (raw > 1.0 - noise) return 1.0;
  return std::clamp(raw, 0.0, 1.0);
}

inline void finish(AngleReport& r, const PathValue& v) {
  r.raw_cos = v.raw_cos;
  r.numerator = v.numerator;
  r.denominators = v.denominators;
  r.cos_value = clamp_cos(v.raw_cos);
  r.angle = std::acos(r.cos_value);
}

inline PathValue ratio(double num, double den_p, double den_q) {
  return {num / (den_p * den_q), num, {den_p, den_q}};
}

}  // namespace detail

/// Everything the angle paths need from one basic construction; shared across
/// pairs of intermediates.
class AngleContext {
 public:
  static AngleContext build(const CondExpectation& e, const Tolerances& tol = {},
                            const BuildOptions& opts = {}) {
    AngleContext ctx;
    ctx.bc_ = BasicConstruction::build(e, tol, opts);
    ctx.dual_ = dual_expectation(ctx.bc_, tol, 0, false);
    return ctx;
  }

  const BasicConstruction& construction() const { return bc_; }
  const DualExpectation& dual() const { return dual_; }
  const CondExpectation& expectation() const { return bc_.source(); }

 private:
  BasicConstruction bc_;
  DualExpectation dual_;
};

/// Per-intermediate data: e_P and a module basis of E|_P.
struct IntermediateData {
  CompatibleIntermediate ci;
  ModuleBasis basis;
  Matrix jones;
};

inline IntermediateData prepare_intermediate(const AngleContext& ctx,
                                             const CompatibleIntermediate& ci,
                                             const Tolerances& tol = {}) {
  IntermediateData d{ci, orthonormal_basis(ci.restricted, tol), {}};
  d.jones = intermediate_jones_projection(ctx.construction(), ci, d.basis.elements, tol);
  if (op_norm(d.jones - ctx.construction().jones_projection()) < tol.eq_tol)
    throw DegenerateAngleError("intermediate coincides with B: e_P = e_N, angle undefined");
  return d;
}

/// cos = ||E1((e_P - e_N)(e_Q - e_N))|| / (||E1(e_P - e_N)||^{1/2} ||E1(e_Q - e_N)||^{1/2}).
inline PathValue definition_path(const AngleContext& ctx, const IntermediateData& p,
                                 const IntermediateData& q) {
  const Matrix& e = ctx.construction().jones_projection();
  Matrix fp = p.jones - e;
  Matrix fq = q.jones - e;
  const DualExpectation& e1 = ctx.dual();
  return detail::ratio(op_norm(e1(fp * fq)), std::sqrt(op_norm(e1(fp))),
                       std::sqrt(op_norm(e1(fq))));
}

/// cos = ||Ind^{-1}(sum_{j,k} mu_j E(mu_j* delta_k) delta_k* - 1)|| /
///       (||Ind^{-1}(Ind_W(E|_P) - 1)||^{1/2} ||Ind^{-1}(Ind_W(E|_Q) - 1)||^{1/2}),
/// with {mu_j}, {delta_k} quasi-bases of E|_P and E|_Q.
inline PathValue quasibasis_path(const CondExpectation& e, const Matrix& index_inverse,
                                 std::span<const Matrix> mu, std::span<const Matrix> delta) {
  const auto n = index_inverse.rows();
  const Matrix one = identity(n);
  Matrix cross = Matrix::Zero(n, n);
  for (const auto& m : mu)
    for (const auto& d : delta) cross += m * e(m.adjoint() * d) * d.adjoint();
  auto self = [&](std::span<const Matrix> family) {
    Matrix s = Matrix::Zero(n, n);
    for (const auto& u : family) s += u * u.adjoint();
    return std::sqrt(op_norm(index_inverse * (s - one)));
  };
  return detail::ratio(op_norm(index_inverse * (cross - one)), self(mu), self(delta));
}

inline AngleReport interior_angle(const AngleContext& ctx, const IntermediateData& p,
                                  const IntermediateData& q, AnglePath path = AnglePath::both,
                                  const Tolerances& tol = {}) {
  AngleReport r;
  r.path = path;
  const BasicConstruction& bc = ctx.construction();
  if (path != AnglePath::quasibasis) r.definition = definition_path(ctx, p, q);
  if (path != AnglePath::definition)
    r.quasibasis = quasibasis_path(bc.source(), bc.index_inverse(), p.basis.elements,
                                   q.basis.elements);
  detail::finish(r, r.definition ? *r.definition : *r.quasibasis);
  if (r.definition && r.quasibasis) {
    r.path_disagreement = std::abs(r.definition->raw_cos - r.quasibasis->raw_cos);
    if (r.path_disagreement >= tol.angle_tol)
      throw InvariantError("definition and quasi-basis paths disagree by " +
                           std::to_string(r.path_disagreement));
  }
  r.commuting_residual = op_norm(p.jones * q.jones - bc.jones_projection());
  r.commuting_square = r.commuting_residual < tol.eq_tol;
  r.provenance = "orthonormal bases of E|_P (" + std::to_string(p.basis.size()) +
                 " elements) and E|_Q (" + std::to_string(q.basis.size()) +
                 " elements); e_P = sum lambda(mu) e lambda(mu)*";
  return r;
}

inline AngleReport interior_angle(const CondExpectation& e, const CompatibleIntermediate& p,
                                  const CompatibleIntermediate& q,
                                  AnglePath path = AnglePath::both, const Tolerances& tol = {},
                                  const BuildOptions& opts = {}) {
  AngleContext ctx = AngleContext::build(e, tol, opts);
  return interior_angle(ctx, prepare_intermediate(ctx, p, tol), prepare_intermediate(ctx, q, tol),
                        path, tol);
}

/// (e_P e_Q = e_N, ||e_P e_Q - e_N||). P or Q may equal B here.
inline std::pair<bool, double> is_commuting_square(const AngleContext& ctx,
                                                   const CompatibleIntermediate& p,
                                                   const CompatibleIntermediate& q,
                                                   const Tolerances& tol = {}) {
  const BasicConstruction& bc = ctx.construction();
  Matrix ep = intermediate_jones_projection(bc, p, tol);
  Matrix eq = intermediate_jones_projection(bc, q, tol);
  double res = op_norm(ep * eq - bc.jones_projection());
  return {res < tol.eq_tol, res};
}

inline std::pair<bool, double> is_commuting_square(const CondExpectation& e,
                                                   const CompatibleIntermediate& p,
                                                   const CompatibleIntermediate& q,
                                                   const Tolerances& tol = {}) {
  return is_commuting_square(AngleContext::build(e, tol), p, q, tol);
}

/// Symmetric table of interior angles. Pairs that fail keep their error
/// message and the rest of the table is still computed.
struct AngleMatrix {
  std::vector<std::vector<std::optional<AngleReport>>> entries;
  std::vector<std::vector<std::string>> errors;
  std::size_t size() const { return entries.size(); }
};

inline AngleMatrix angle_matrix(const AngleContext& ctx,
                                std::span<const CompatibleIntermediate> intermediates,
                                AnglePath path = AnglePath::both, const Tolerances& tol = {}) {
  const std::size_t m = intermediates.size();
  AngleMatrix out;
  out.entries.assign(m, std::vector<std::optional<AngleReport>>(m));
  out.errors.assign(m, std::vector<std::string>(m));
  std::vector<std::optional<IntermediateData>> data(m);
  std::vector<std::string> prep_error(m);
  for (std::size_t i = 0; i < m; ++i) {
    try {
      data[i] = prepare_intermediate(ctx, intermediates[i], tol);
    } catch (const Error& err) {
      prep_error[i] = err.what();
    }
  }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j) {
      if (!data[i] || !data[j]) {
        out.errors[i][j] = out.errors[j][i] = !data[i] ? prep_error[i] : prep_error[j];
        continue;
      }
      try {
        AngleReport r = interior_angle(ctx, *data[i], *data[j], path, tol);
        if (i == j) {
          r.cos_value = 1.0;
          r.angle = 0.0;
        }
        out.entries[i][j] = out.entries[j][i] = std::move(r);
      } catch (const Error& err) {
        out.errors[i][j] = out.errors[j][i] = err.what();
      }
    }
  return out;
}

/// First-floor data for exterior angles: E1 packaged as an expectation
/// lambda(A) <= M1, and optionally the interior-angle context one floor up
/// (the second basic construction) for the definition-path cross-check.
class ExteriorContext {
 public:
  static ExteriorContext build(const CondExpectation& e, bool second_floor = true,
                               const Tolerances& tol = {}, const BuildOptions& opts = {}) {
    ExteriorContext ctx;
    ctx.first_ = AngleContext::build(e, tol, opts);
    ctx.e1_ = ctx.first_.dual().require_expectation();
    ModuleBasis mb = orthonormal_basis(ctx.e1_, tol);
    ctx.e1_index_inverse_ =
        psd_calculus(watatani_index(mb, ctx.e1_.big(), tol).value, PsdFunction::inv, tol);
    if (second_floor) {
      BuildOptions up = opts;
      up.materialize_m1_limit = 0;
      ctx.second_ = AngleContext::build(ctx.e1_, tol, up);
    }
    return ctx;
  }

  const AngleContext& first_floor() const { return first_; }
  const std::optional<AngleContext>& second_floor() const { return second_; }
  const CondExpectation& dual_expectation() const { return e1_; }
  const Matrix& dual_index_inverse() const { return e1_index_inverse_; }

  /// P1 = <lambda(A), e_P> inside M1, with its compatible expectation for E1.
  CompatibleIntermediate lift(const CompatibleIntermediate& p, const Tolerances& tol = {}) const {
    const BasicConstruction& bc = first_.construction();
    Matrix ep = intermediate_jones_projection(bc, p, tol);
    std::vector<Matrix> spanning = bc.lambda_algebra().basis();
    for (const auto& x : bc.lambda_algebra().basis())
      for (const auto& y : bc.lambda_algebra().basis()) spanning.push_back(x * ep * y);
    StarAlgebra p1 =
        StarAlgebra::from_span(static_cast<int>(bc.rep_dim()), spanning, tol);
    try {
      return make_compatible(e1_, p1, tol);
    } catch (const IncompatibilityError& err) {
      throw ExteriorAngleUndefined(std::string("P1 is not compatible with E1: ") + err.what(),
                                   err.residual());
    }
  }

 private:
  AngleContext first_;
  CondExpectation e1_;
  Matrix e1_index_inverse_;
  std::optional<AngleContext> second_;
};

/// P1 with a module basis of E1|_P1, and its second-floor data when the
/// second floor is built.
struct LiftedIntermediate {
  CompatibleIntermediate lifted;
  ModuleBasis basis;
  std::optional<IntermediateData> up;
};

inline LiftedIntermediate prepare_lifted(const ExteriorContext& ctx,
                                         const CompatibleIntermediate& p,
                                         const Tolerances& tol = {}) {
  LiftedIntermediate out;
  out.lifted = ctx.lift(p, tol);
  if (ctx.second_floor()) {
    out.up = prepare_intermediate(*ctx.second_floor(), out.lifted, tol);
    out.basis = out.up->basis;
  } else {
    out.basis = orthonormal_basis(out.lifted.restricted, tol);
  }
  return out;
}

/// beta(P, Q) = alpha(P1, Q1) for the dual expectation E1: M1 -> lambda(A).
/// The quasi-basis path needs only M1; the definition path runs on the
/// second basic construction and requires it to be built.
inline AngleReport exterior_angle(const ExteriorContext& ctx, const LiftedIntermediate& p,
                                  const LiftedIntermediate& q, AnglePath path = AnglePath::both,
                                  const Tolerances& tol = {}) {
  if (ctx.second_floor() && p.up && q.up) {
    AngleReport r = interior_angle(*ctx.second_floor(), *p.up, *q.up, path, tol);
    r.provenance = "one floor up: " + r.provenance;
    return r;
  }
  if (path != AnglePath::quasibasis)
    throw ArgumentError("definition path for the exterior angle needs the second floor");
  AngleReport r;
  r.path = path;
  r.quasibasis = quasibasis_path(ctx.dual_expectation(), ctx.dual_index_inverse(),
                                 p.basis.elements, q.basis.elements);
  if (r.quasibasis->denominators[0] < tol.eq_tol || r.quasibasis->denominators[1] < tol.eq_tol)
    throw DegenerateAngleError("intermediate coincides with B: P1 = lambda(A)");
  detail::finish(r, *r.quasibasis);
  r.provenance = "one floor up: orthonormal bases of E1|_P1 (" + std::to_string(p.basis.size()) +
                 " elements) and E1|_Q1 (" + std::to_string(q.basis.size()) + " elements)";
  return r;
}

inline AngleReport exterior_angle(const ExteriorContext& ctx, const CompatibleIntermediate& p,
                                  const CompatibleIntermediate& q,
                                  AnglePath path = AnglePath::both, const Tolerances& tol = {}) {
  return exterior_angle(ctx, prepare_lifted(ctx, p, tol), prepare_lifted(ctx, q, tol), path, tol);
}

inline AngleReport exterior_angle(const CondExpectation& e, const CompatibleIntermediate& p,
                                  const CompatibleIntermediate& q,
                                  AnglePath path = AnglePath::both, const Tolerances& tol = {}) {
  return exterior_angle(ExteriorContext::build(e, path != AnglePath::quasibasis, tol), p, q, path,
                        tol);
}

}  // namespace fdindex
