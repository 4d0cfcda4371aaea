#include <gtest/gtest.h>

#include "random_expr.hpp"

using namespace ddn;
using ddn::testing::ExprGen;
using ddn::testing::kCases;
using ddn::testing::make_context;

namespace {

Context tnu() { return make_context({"t"}, {"n"}, {"u"}); }

TEST(Calculus, DerivativeCommutesWithShift) {
  Context ctx = tnu();
  ExprGen g(ctx, 10);
  for (int i = 0; i < kCases; ++i) {
    Expr e = g.general(2).e;
    int k = g.pick(-2, 2);
    EXPECT_EQ(total_derivative(shift(e, 0, k, ctx), 0, ctx), shift(total_derivative(e, 0, ctx), 0, k, ctx))
        << render(e);
  }
}

TEST(Calculus, DerivativeCommutesWithShiftInTwoLattices) {
  Context ctx = make_context({"t", "x"}, {"m", "n"}, {"u", "w"});
  ExprGen g(ctx, 11);
  for (int i = 0; i < kCases; ++i) {
    Expr e = g.polynomial(3).e;
    int di = g.pick(0, 1), sj = g.pick(0, 1), k = g.pick(-1, 1);
    EXPECT_EQ(total_derivative(shift(e, sj, k, ctx), di, ctx), shift(total_derivative(e, di, ctx), sj, k, ctx));
  }
}

TEST(Calculus, EulerAnnihilatesDivergences) {
  Context ctx = tnu();
  ExprGen g(ctx, 12);
  for (int i = 0; i < kCases; ++i) {
    DivergencePair P{{g.polynomial(3).e}, {g.polynomial(3).e}};
    Expr div = divergence(P, ctx);
    EXPECT_TRUE(euler(div, 0, ctx).is_zero()) << render(P.p1[0]) << " ; " << render(P.p2[0]);
  }
}

TEST(Calculus, EulerAnnihilatesDivergencesWithTwoDependents) {
  Context ctx = make_context({"t"}, {"n"}, {"u", "w"});
  ExprGen g(ctx, 13);
  for (int i = 0; i < kCases; ++i) {
    DivergencePair P{{g.polynomial(2).e}, {g.polynomial(2).e}};
    Expr div = divergence(P, ctx);
    EXPECT_TRUE(euler(div, 0, ctx).is_zero());
    EXPECT_TRUE(euler(div, 1, ctx).is_zero());
  }
}

TEST(Calculus, LeibnizIdentityForEuler) {
  Context ctx = make_context({"t"}, {"n"}, {"u", "w"});
  ExprGen g(ctx, 14);
  for (int i = 0; i < kCases; ++i) {
    ExprTuple A = g.tuple(2, 2), B = g.tuple(2, 2);
    Expr AB = A[0] * B[0] + A[1] * B[1];
    ExprTuple lhs{euler(AB, 0, ctx), euler(AB, 1, ctx)};
    ExprTuple dA = frechet_adjoint(A, B, ctx), dB = frechet_adjoint(B, A, ctx);
    for (int a = 0; a < 2; ++a) EXPECT_EQ(lhs[a], dA[a] + dB[a]);
  }
}

TEST(Calculus, FrechetAdjointDuality) {
  Context ctx = tnu();
  ExprGen g(ctx, 15);
  for (int i = 0; i < kCases; ++i) {
    Expr A = g.polynomial(2).e, B = g.polynomial(2).e, F = g.polynomial(3).e;
    Expr lhs = A * frechet({F}, {B}, ctx)[0] - B * frechet_adjoint({F}, {A}, ctx)[0];
    EXPECT_TRUE(euler(lhs, 0, ctx).is_zero()) << render(F);
  }
}

TEST(Calculus, ByPartsReconstruction) {
  Context ctx = make_context({"t"}, {"n"}, {"u", "w"});
  ExprGen g(ctx, 16);
  for (int i = 0; i < kCases; ++i) {
    ExprTuple targets = g.tuple(2, 2);
    std::vector<ByPartsTerm> terms;
    Expr input;
    int k = g.pick(1, 3);
    for (int j = 0; j < k; ++j) {
      ByPartsTerm t{g.polynomial(2).e, {g.pick(0, 2)}, {g.pick(-2, 2)}, g.pick(0, 1)};
      JetAtom idx = ctx.atom(0);
      idx.deriv = t.deriv;
      idx.shift = t.shift;
      input += t.coeff * apply_jet(targets[static_cast<std::size_t>(t.target)], idx, ctx);
      terms.push_back(t);
    }
    ByPartsResult r = by_parts(terms, targets, ctx);
    Expr rebuilt = r.characteristic[0] * targets[0] + r.characteristic[1] * targets[1] +
                   divergence({r.flux_d, r.flux_s}, ctx);
    EXPECT_EQ(rebuilt, input);
  }
}

TEST(Calculus, HomotopyRecoversDivergence) {
  Context ctx = tnu();
  ExprGen g(ctx, 17);
  for (int i = 0; i < 100; ++i) {
    DivergencePair P{{g.polynomial(2).e}, {g.polynomial(2).e}};
    Expr div = divergence(P, ctx);
    DivergencePair R = null_lagrangian_decompose(div, ctx);
    EXPECT_EQ(divergence(R, ctx), div) << render(div);
  }
}

TEST(Calculus, HomotopyRejectsNonNullLagrangian) {
  Context ctx = tnu();
  EXPECT_THROW(null_lagrangian_decompose(parse("u^2", ctx), ctx), Error);
}

TEST(Calculus, ContinuousEulerOnKdvPotentialLagrangian) {
  Context ctx = make_context({"t", "x"}, {}, {"v"});
  Expr L = parse("-v[1,0]*v[0,1]/2 - v[0,1]^3/6 + v[0,2]^2/2", ctx);
  EXPECT_EQ(euler(L, 0, ctx), parse("v[1,1] + v[0,1]*v[0,2] + v[0,4]", ctx));
}

TEST(Calculus, DiscreteEulerWithoutContinuousVariables) {
  Context ctx = make_context({}, {"n"}, {"u"});
  Expr L = parse("u*u[1] - u^2", ctx);
  EXPECT_EQ(euler(L, 0, ctx), parse("u[1] + u[-1] - 2*u", ctx));
  EXPECT_THROW(total_derivative(L, 0, ctx), Error);
}

TEST(Calculus, ShiftFluxesAreSingleStep) {
  Context ctx = tnu();
  Expr g = parse("u*u[0;1]", ctx);
  Expr e = shift(g, 0, 2, ctx) - g;
  ByPartsResult r = by_parts({{Expr(1), {0}, {2}, 0}, {Expr(-1), {0}, {0}, 0}}, {g}, ctx);
  EXPECT_TRUE(r.characteristic[0].is_zero());
  EXPECT_EQ(divergence({r.flux_d, r.flux_s}, ctx), e);
}

}  // namespace
