#include <gtest/gtest.h>

#include <numbers>

#include "support.hpp"

using namespace fdindex;

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;

StarAlgebra full(int n) {
  std::vector<Matrix> gens;
  for (int i = 0; i + 1 < n; ++i) gens.push_back(matrix_unit(n, i, i + 1));
  gens.push_back(matrix_unit(n, 0, 0));
  return from_generators(n, gens);
}

struct PairCase {
  PermGroup g, h;
};

void expect_closed_form(const PairCase& c, int k = 1) {
  auto gi = group_inclusion(c.g, c.h, {}, k);
  AngleContext ctx = AngleContext::build(gi.expectation);
  auto mids = gi.proper_intermediates();
  std::vector<IntermediateData> data;
  for (const auto& m : mids) data.push_back(prepare_intermediate(ctx, gi.intermediate(m)));
  for (std::size_t i = 0; i < mids.size(); ++i)
    for (std::size_t j = i + 1; j < mids.size(); ++j) {
      AngleReport r = interior_angle(ctx, data[i], data[j]);
      double oracle = fdtest::closed_form_cos(c.h, mids[i], mids[j]);
      EXPECT_NEAR(r.cos_value, oracle, 1e-8) << mids[i].label() << " " << mids[j].label();
      EXPECT_LT(r.path_disagreement, 1e-8);
    }
}

}  // namespace

TEST(InteriorAngle, D4OverTrivialMatchesClosedForm) {
  expect_closed_form({presets::dihedral4(), presets::trivial(4)});
}

TEST(InteriorAngle, S3OverTrivialMatchesClosedForm) {
  expect_closed_form({presets::symmetric(3), presets::trivial(3)});
}

TEST(InteriorAngle, D4OverCenterMatchesClosedForm) {
  expect_closed_form({presets::dihedral4(), fdtest::cycles_group(4, {"(1 3)(2 4)"})});
}

TEST(InteriorAngle, RotationVersusKleinIsOneThird) {
  auto gi = group_inclusion(presets::dihedral4(), presets::trivial(4));
  PermGroup rot = fdtest::cycles_group(4, {"(1 2 3 4)"});
  PermGroup klein = fdtest::cycles_group(4, {"(1 3)(2 4)", "(1 3)"});
  AngleReport r = interior_angle(gi.expectation, gi.intermediate(rot), gi.intermediate(klein));
  EXPECT_NEAR(r.cos_value, 1.0 / 3.0, 1e-10);
  EXPECT_NEAR(r.angle, std::acos(1.0 / 3.0), 1e-9);
  ASSERT_TRUE(r.definition && r.quasibasis);
  EXPECT_NEAR(r.definition->raw_cos, r.quasibasis->raw_cos, 1e-10);
  EXPECT_FALSE(r.commuting_square);
}

TEST(InteriorAngle, SymmetricInArguments) {
  auto gi = group_inclusion(presets::dihedral4(), presets::trivial(4));
  AngleContext ctx = AngleContext::build(gi.expectation);
  auto mids = gi.proper_intermediates();
  auto a = prepare_intermediate(ctx, gi.intermediate(mids[1]));
  auto b = prepare_intermediate(ctx, gi.intermediate(mids[6]));
  EXPECT_NEAR(interior_angle(ctx, a, b).cos_value, interior_angle(ctx, b, a).cos_value, 1e-12);
}

TEST(InteriorAngle, SinglePathsMatchBoth) {
  auto gi = group_inclusion(presets::symmetric(3), presets::trivial(3));
  AngleContext ctx = AngleContext::build(gi.expectation);
  auto mids = gi.proper_intermediates();
  auto a = prepare_intermediate(ctx, gi.intermediate(mids[0]));
  auto b = prepare_intermediate(ctx, gi.intermediate(mids[3]));
  AngleReport def = interior_angle(ctx, a, b, AnglePath::definition);
  AngleReport qb = interior_angle(ctx, a, b, AnglePath::quasibasis);
  EXPECT_TRUE(def.definition && !def.quasibasis);
  EXPECT_TRUE(qb.quasibasis && !qb.definition);
  EXPECT_NEAR(def.cos_value, qb.cos_value, 1e-10);
}

TEST(InteriorAngle, IntermediateEqualToBaseIsDegenerate) {
  auto gi = group_inclusion(presets::symmetric(3), fdtest::cycles_group(3, {"(1 2)"}));
  AngleContext ctx = AngleContext::build(gi.expectation);
  EXPECT_THROW(prepare_intermediate(ctx, gi.intermediate(gi.h)), DegenerateAngleError);
}

// e_K e_L = e_H exactly when K cap L = H, and then the angle is pi/2.
TEST(CommutingSquare, MatchesIntersectionCriterion) {
  for (const PairCase& c : {PairCase{presets::dihedral4(), presets::trivial(4)},
                            PairCase{presets::symmetric(3), presets::trivial(3)}}) {
    auto gi = group_inclusion(c.g, c.h);
    AngleContext ctx = AngleContext::build(gi.expectation);
    auto mids = gi.proper_intermediates();
    for (std::size_t i = 0; i < mids.size(); ++i)
      for (std::size_t j = i + 1; j < mids.size(); ++j) {
        bool expected = intersect(mids[i], mids[j]) == c.h;
        auto [square, residual] =
            is_commuting_square(ctx, gi.intermediate(mids[i]), gi.intermediate(mids[j]));
        EXPECT_EQ(square, expected) << residual;
        if (square) {
          AngleReport r = interior_angle(gi.expectation, gi.intermediate(mids[i]),
                                         gi.intermediate(mids[j]));
          EXPECT_NEAR(r.angle, kHalfPi, 1e-8);
        }
      }
  }
}

TEST(CommutingSquare, TensorFactorsInM4) {
  // C <= M2 (x) 1, 1 (x) M2 <= M4 with the trace
  std::vector<Matrix> none;
  StarAlgebra scalars = from_generators(4, none);
  std::vector<Matrix> left{kron(matrix_unit(2, 0, 1), identity(2)), kron(matrix_unit(2, 0, 0), identity(2))};
  std::vector<Matrix> right{kron(identity(2), matrix_unit(2, 0, 1)), kron(identity(2), matrix_unit(2, 0, 0))};
  CondExpectation e = CondExpectation::trace_preserving(Inclusion(full(4), scalars));
  auto p = make_compatible(e, from_generators(4, left));
  auto q = make_compatible(e, from_generators(4, right));
  EXPECT_TRUE(is_commuting_square(e, p, q).first);
  AngleReport r = interior_angle(e, p, q);
  EXPECT_NEAR(r.angle, kHalfPi, 1e-8);
}

TEST(InteriorAngle, NonTracialPathsAgree) {
  // phi with density diag(0.2, 0.3, 0.5) on M3; both intermediates are
  // invariant under Ad(h^it), so compatible expectations exist
  Matrix h = Matrix::Zero(3, 3);
  h.diagonal() << 0.2, 0.3, 0.5;
  std::vector<Matrix> none;
  Inclusion inc(full(3), from_generators(3, none));
  std::vector<Matrix> values;
  for (const auto& b : inc.big().basis()) values.push_back((h * b).trace() * identity(3));
  CondExpectation e = CondExpectation::custom(inc, values);
  std::vector<Matrix> diag{matrix_unit(3, 0, 0), matrix_unit(3, 1, 1)};
  std::vector<Matrix> block{matrix_unit(3, 1, 2), matrix_unit(3, 1, 1)};
  auto p = make_compatible(e, from_generators(3, diag));
  auto q = make_compatible(e, from_generators(3, block));
  AngleReport r = interior_angle(e, p, q);
  EXPECT_LT(r.path_disagreement, 1e-8);
  EXPECT_GE(r.cos_value, 0.0);
  EXPECT_LE(r.cos_value, 1.0);
}

TEST(TensorStability, S3WithFactorTwo) {
  expect_closed_form({presets::symmetric(3), presets::trivial(3)}, 2);
}

TEST(AngleMatrix, D4LatticeShape) {
  auto gi = group_inclusion(presets::dihedral4(), presets::trivial(4));
  AngleContext ctx = AngleContext::build(gi.expectation);
  std::vector<CompatibleIntermediate> cis;
  for (const auto& k : gi.proper_intermediates()) cis.push_back(gi.intermediate(k));
  AngleMatrix m = angle_matrix(ctx, cis);
  ASSERT_EQ(m.size(), 8u);
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) {
      ASSERT_TRUE(m.entries[i][j].has_value()) << m.errors[i][j];
      double a = m.entries[i][j]->angle;
      EXPECT_EQ(a, m.entries[j][i]->angle);
      EXPECT_GE(a, 0.0);
      EXPECT_LE(a, kHalfPi + 1e-12);
      if (i == j) EXPECT_EQ(a, 0.0);
      if (i < j) ++pairs;
    }
  EXPECT_EQ(pairs, 28u);
}

TEST(AngleMatrix, S3OffDiagonalIsRightAngle) {
  auto gi = group_inclusion(presets::symmetric(3), presets::trivial(3));
  AngleContext ctx = AngleContext::build(gi.expectation);
  std::vector<CompatibleIntermediate> cis;
  for (const auto& k : gi.proper_intermediates()) cis.push_back(gi.intermediate(k));
  AngleMatrix m = angle_matrix(ctx, cis);
  ASSERT_EQ(m.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      if (i != j) EXPECT_NEAR(m.entries[i][j]->angle, kHalfPi, 1e-8);
}

TEST(AngleMatrix, EmptyWhenHEqualsG) {
  auto gi = group_inclusion(presets::symmetric(3), presets::symmetric(3));
  EXPECT_TRUE(gi.proper_intermediates().empty());
  AngleContext ctx = AngleContext::build(gi.expectation);
  EXPECT_EQ(angle_matrix(ctx, std::vector<CompatibleIntermediate>{}).size(), 0u);
}

TEST(ExteriorAngle, PathsAgreeAndDiagonalVanishes) {
  auto gi = group_inclusion(presets::dihedral4(), presets::trivial(4));
  ExteriorContext ctx = ExteriorContext::build(gi.expectation);
  ASSERT_TRUE(ctx.second_floor().has_value());
  PermGroup rot = fdtest::cycles_group(4, {"(1 2 3 4)"});
  PermGroup klein = fdtest::cycles_group(4, {"(1 3)(2 4)", "(1 3)"});
  auto p = prepare_lifted(ctx, gi.intermediate(rot));
  auto q = prepare_lifted(ctx, gi.intermediate(klein));
  AngleReport both = exterior_angle(ctx, p, q);
  ASSERT_TRUE(both.definition && both.quasibasis);
  EXPECT_LT(std::abs(both.definition->raw_cos - both.quasibasis->raw_cos), 1e-7);
  EXPECT_LE(both.cos_value, 1.0);

  AngleReport self = exterior_angle(ctx, p, p);
  EXPECT_NEAR(self.angle, 0.0, 1e-7);
}

TEST(ExteriorAngle, QuasibasisOnlyWithoutSecondFloor) {
  auto gi = group_inclusion(presets::symmetric(3), presets::trivial(3));
  ExteriorContext full_ctx = ExteriorContext::build(gi.expectation, true);
  ExteriorContext light = ExteriorContext::build(gi.expectation, false);
  EXPECT_FALSE(light.second_floor().has_value());
  auto mids = gi.proper_intermediates();
  auto p = gi.intermediate(mids[0]);
  auto q = gi.intermediate(mids[3]);
  AngleReport a = exterior_angle(light, p, q, AnglePath::quasibasis);
  AngleReport b = exterior_angle(full_ctx, p, q, AnglePath::both);
  EXPECT_NEAR(a.cos_value, b.cos_value, 1e-7);
  EXPECT_THROW(exterior_angle(light, p, q, AnglePath::definition), ArgumentError);
}
