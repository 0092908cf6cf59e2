#include <gtest/gtest.h>

#include "support.hpp"

using namespace fdindex;

namespace {

StarAlgebra full(int n) {
  std::vector<Matrix> gens;
  for (int i = 0; i + 1 < n; ++i) gens.push_back(matrix_unit(n, i, i + 1));
  gens.push_back(matrix_unit(n, 0, 0));
  return from_generators(n, gens);
}

StarAlgebra scalars(int n) { return from_generators(n, std::vector<Matrix>{}); }

StarAlgebra diagonal(int n) {
  std::vector<Matrix> gens;
  for (int i = 0; i < n; ++i) gens.push_back(matrix_unit(n, i, i));
  return from_generators(n, gens);
}

// x -> Tr(h x) 1 for a density matrix h
CondExpectation state_expectation(const Matrix& h) {
  const int n = static_cast<int>(h.rows());
  Inclusion inc(full(n), scalars(n));
  std::vector<Matrix> values;
  for (const auto& b : inc.big().basis()) values.push_back((h * b).trace() * identity(n));
  return CondExpectation::custom(inc, values);
}

}  // namespace

TEST(TracePreserving, ScalarsInMatrixAlgebra) {
  for (int n : {2, 3}) {
    CondExpectation e = CondExpectation::trace_preserving(Inclusion(full(n), scalars(n)));
    Rng rng(static_cast<std::uint64_t>(n));
    Matrix x = random_gaussian(n, n, rng);
    EXPECT_LT(op_norm(e(x) - x.trace() / static_cast<double>(n) * identity(n)), 1e-12);
    EXPECT_EQ(e.kind(), ExpectationKind::trace_preserving);
  }
}

TEST(TracePreserving, DiagonalPart) {
  CondExpectation e = CondExpectation::trace_preserving(Inclusion(full(3), diagonal(3)));
  Rng rng(4);
  Matrix x = random_gaussian(3, 3, rng);
  Matrix d = x.diagonal().asDiagonal();
  EXPECT_LT(op_norm(e(x) - d), 1e-12);
}

TEST(Verify, PassesForGenuineExpectations) {
  CondExpectation e = CondExpectation::trace_preserving(Inclusion(full(3), diagonal(3)));
  ExpectationReport r = verify(e, 16, 3);
  EXPECT_TRUE(r.passed()) << r.first_failure();
  EXPECT_TRUE(r.faithful());
  EXPECT_EQ(r.first_failure(), "");
}

TEST(Verify, NamesTheFailingAxiom) {
  Inclusion inc(full(2), diagonal(2));
  std::vector<Matrix> doubled;
  for (const auto& b : inc.big().basis()) doubled.push_back(2.0 * inc.small().project(b));
  ExpectationReport r = verify(CondExpectation::unverified(inc, doubled));
  EXPECT_FALSE(r.passed());
  EXPECT_NE(r.first_failure().find("idempotency"), std::string::npos);
  EXPECT_THROW(CondExpectation::custom(inc, doubled), ConstructionError);

  // transpose onto the diagonal's complement is not even in range
  std::vector<Matrix> transposed;
  for (const auto& b : inc.big().basis()) transposed.push_back(b.transpose());
  EXPECT_FALSE(verify(CondExpectation::unverified(inc, transposed)).in_range());
}

TEST(Verify, WrongValueCount) {
  Inclusion inc(full(2), diagonal(2));
  EXPECT_THROW(CondExpectation::unverified(inc, {identity(2)}), ArgumentError);
}

TEST(Custom, NonTracialStateExpectation) {
  Matrix h = Matrix::Zero(2, 2);
  h(0, 0) = 0.25;
  h(1, 1) = 0.75;
  CondExpectation e = state_expectation(h);
  EXPECT_EQ(e.kind(), ExpectationKind::custom);
  EXPECT_NEAR(std::abs(e(matrix_unit(2, 0, 0))(0, 0) - 0.25), 0.0, 1e-12);
  EXPECT_TRUE(verify(e).passed());
}

TEST(FixedPoint, AveragingIsAnExpectation) {
  Matrix z = identity(2);
  z(1, 1) = -1.0;
  std::vector<Perm> gens{parse_cycles("(1 2)", 2)};
  std::vector<Matrix> us{z};
  FixedPoint fp = fixed_point(full(2), GroupAction::from_generators(2, gens, us));
  EXPECT_EQ(fp.algebra.dim(), 2u);
  Matrix x(2, 2);
  x << 1.0, 2.0, 3.0, 4.0;
  Matrix d = x.diagonal().asDiagonal();
  EXPECT_LT(op_norm(fp.expectation(x) - d), 1e-12);
}

TEST(Compatible, GroupIntermediate) {
  auto gi = group_inclusion(presets::dihedral4(), presets::trivial(4));
  PermGroup rot = fdtest::cycles_group(4, {"(1 2 3 4)"});
  CompatibleIntermediate ci = gi.intermediate(rot);
  EXPECT_EQ(ci.algebra.dim(), 4u);
  EXPECT_LT(ci.compatibility_residual, 1e-12);
  // F(lambda_g) = lambda_g on K and 0 off K
  GroupAlgebra ga = group_algebra(presets::dihedral4());
  for (const auto& g : ga.group.elements()) {
    Matrix expect = rot.contains(g) ? ga(g) : Matrix::Zero(8, 8);
    EXPECT_LT(op_norm(ci.onto(ga(g)) - expect), 1e-12);
  }
  EXPECT_THROW(gi.intermediate(presets::symmetric(4)), ContainmentError);
}

TEST(Compatible, CustomExpectationUsesStateProjection) {
  // C <= D_2 <= M_2 with a non-tracial state: F must preserve phi
  Matrix h = Matrix::Zero(2, 2);
  h(0, 0) = 0.25;
  h(1, 1) = 0.75;
  CondExpectation e = state_expectation(h);
  CompatibleIntermediate ci = make_compatible(e, diagonal(2));
  Matrix x(2, 2);
  x << 1.0, 2.0, 3.0, 4.0;
  Matrix d = x.diagonal().asDiagonal();
  EXPECT_LT(op_norm(ci.onto(x) - d), 1e-12);
  EXPECT_LT(ci.compatibility_residual, 1e-12);
}

TEST(Compatible, NonCompatibleIntermediateIsRejected) {
  // a rotated copy of the diagonal is not invariant under Ad(h^it)
  Matrix h = Matrix::Zero(2, 2);
  h(0, 0) = 0.25;
  h(1, 1) = 0.75;
  CondExpectation e = state_expectation(h);
  Matrix u(2, 2);
  u << 1.0, 1.0, 1.0, -1.0;
  u /= std::sqrt(2.0);
  std::vector<Matrix> gens{u * matrix_unit(2, 0, 0) * u.adjoint()};
  StarAlgebra rotated = from_generators(2, gens);
  EXPECT_THROW(make_compatible(e, rotated), IncompatibilityError);
}

TEST(IndP, ScalarsInMatrixAlgebraAttainN) {
  // tau(x) 1 >= x / n with equality on rank-one projections, so Ind_p = n
  for (int n : {2, 3}) {
    CondExpectation e = CondExpectation::trace_preserving(Inclusion(full(n), scalars(n)));
    double est = ind_p_estimate(e, 8, 7);
    EXPECT_NEAR(est, static_cast<double>(n), 1e-3);
    EXPECT_LE(est, static_cast<double>(n) + 1e-6);
  }
}

TEST(IndP, MonotoneInTrialsAndDeterministic) {
  auto gi = group_inclusion(presets::symmetric(3), fdtest::cycles_group(3, {"(1 2)"}));
  double few = ind_p_estimate(gi.expectation, 2, 11);
  double more = ind_p_estimate(gi.expectation, 6, 11);
  EXPECT_GE(more, few);
  EXPECT_EQ(more, ind_p_estimate(gi.expectation, 6, 11));
  EXPECT_GE(few, 1.0);
  EXPECT_LE(more, 3.0 + 1e-6);
  EXPECT_THROW(ind_p_estimate(gi.expectation, 0, 1), ArgumentError);
}

TEST(IndP, IdentityInclusionIsOne) {
  CondExpectation e = CondExpectation::trace_preserving(Inclusion(diagonal(3), diagonal(3)));
  EXPECT_NEAR(ind_p_estimate(e, 3, 5), 1.0, 1e-9);
}
