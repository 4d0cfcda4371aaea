#include <gtest/gtest.h>

#include "ddnoether/symmetry.hpp"
#include "ddnoether/sysfile.hpp"
#include "random_expr.hpp"

using namespace ddn;
using ddn::testing::ExprGen;
using ddn::testing::kCases;
using ddn::testing::make_context;

namespace {

Context tnu() { return make_context({"t"}, {"n"}, {"u"}); }

// Polynomial in t, n, (-1)^n and u only.
Expr point_coefficient(ExprGen& g, const Context& ctx) {
  Expr pool[] = {ctx.x(), ctx.n(), ctx.parity(), ctx.u(), Expr(1)};
  Expr e;
  for (int k = g.pick(1, 3); k > 0; --k) {
    Expr m = g.pick(1, 3);
    for (int f = g.pick(1, 2); f > 0; --f) m *= pool[g.pick(0, 4)];
    e += m;
  }
  return e;
}

JetAtom jet(const Context& ctx, int d, int s) {
  JetAtom a = ctx.atom(0);
  a.deriv = {d};
  a.shift = {s};
  return a;
}

TEST(Prolongation, CaseIRecursions) {
  Context ctx = tnu();
  ExprGen g(ctx, 20);
  for (int i = 0; i < kCases; ++i) {
    VectorField X{{point_coefficient(g, ctx)}, {point_coefficient(g, ctx)}, FieldKind::Point};
    int d = g.pick(0, 2), s = g.pick(-2, 2);
    Expr lhs = prolongation_coefficient(X, jet(ctx, d + 1, s), ProlongationMode::CaseI, ctx);
    Expr rhs = total_derivative(prolongation_coefficient(X, jet(ctx, d, s), ProlongationMode::CaseI, ctx), 0, ctx) -
               total_derivative(X.xi[0], 0, ctx) * ctx.jet(jet(ctx, d + 1, s));
    EXPECT_EQ(lhs, rhs);
    Expr up = prolongation_coefficient(X, jet(ctx, 0, s + 1), ProlongationMode::CaseI, ctx);
    EXPECT_EQ(up, shift(prolongation_coefficient(X, jet(ctx, 0, s), ProlongationMode::CaseI, ctx), 0, 1, ctx));
    // Shifting a derived coefficient picks up the variation of xi along n.
    Expr dxi = shift(X.xi[0], 0, 1, ctx) - X.xi[0];
    Expr gap = total_derivative(dxi * ctx.jet(jet(ctx, 1, s + 1)), std::vector<int>{d}, ctx) -
               dxi * ctx.jet(jet(ctx, d + 1, s + 1));
    EXPECT_EQ(prolongation_coefficient(X, jet(ctx, d, s + 1), ProlongationMode::CaseI, ctx) -
                  shift(prolongation_coefficient(X, jet(ctx, d, s), ProlongationMode::CaseI, ctx), 0, 1, ctx),
              gap);
  }
}

TEST(Prolongation, CaseIIRecursions) {
  Context ctx = tnu();
  ExprGen g(ctx, 21);
  for (int i = 0; i < kCases; ++i) {
    VectorField X{{point_coefficient(g, ctx)}, {point_coefficient(g, ctx)}, FieldKind::Point};
    int d = g.pick(0, 2), s = g.pick(-2, 2);
    Expr lhs = prolongation_coefficient(X, jet(ctx, d + 1, s), ProlongationMode::CaseII, ctx);
    Expr rhs =
        total_derivative(prolongation_coefficient(X, jet(ctx, d, s), ProlongationMode::CaseII, ctx), 0, ctx) -
        shift(total_derivative(X.xi[0], 0, ctx), 0, s, ctx) * ctx.jet(jet(ctx, d + 1, s));
    EXPECT_EQ(lhs, rhs);
    EXPECT_EQ(shift(prolongation_coefficient(X, jet(ctx, d, s), ProlongationMode::CaseII, ctx), 0, 1, ctx),
              prolongation_coefficient(X, jet(ctx, d, s + 1), ProlongationMode::CaseII, ctx));
  }
}

TEST(Prolongation, CasesAgreeForRegularFields) {
  Context ctx = tnu();
  ExprGen g(ctx, 22);
  for (int i = 0; i < kCases; ++i) {
    Expr xi = g.pick(0, 1) ? ctx.x() * g.pick(1, 3) : pow(ctx.x(), 2) + 1;
    VectorField X{{xi}, {g.polynomial(2).e}, FieldKind::Regular};
    Expr e = g.polynomial(3).e;
    Expr a = prolong_apply(X, e, ProlongationMode::CaseI, ctx);
    EXPECT_EQ(a, prolong_apply(X, e, ProlongationMode::CaseII, ctx));
    EXPECT_EQ(a, prolong_apply(X, e, ProlongationMode::Regular, ctx));
  }
}

TEST(Prolongation, CasesDifferWhenXiDependsOnN) {
  Context ctx = tnu();
  VectorField X{{ctx.parity() * ctx.x()}, {Expr(0)}, FieldKind::Point};
  JetAtom a = jet(ctx, 1, 1);
  EXPECT_NE(prolongation_coefficient(X, a, ProlongationMode::CaseI, ctx),
            prolongation_coefficient(X, a, ProlongationMode::CaseII, ctx));
  EXPECT_THROW(prolongation_coefficient(X, a, ProlongationMode::Regular, ctx), Error);
}

TEST(Evolutionary, CommutesWithTotalDerivativeAndShift) {
  Context ctx = tnu();
  ExprGen g(ctx, 23);
  for (int i = 0; i < kCases; ++i) {
    EvolutionaryField Y{{g.polynomial(2).e}, {}};
    Expr e = g.polynomial(3).e;
    EXPECT_EQ(prolong_apply(Y, total_derivative(e, 0, ctx), ctx), total_derivative(prolong_apply(Y, e, ctx), 0, ctx));
    EXPECT_EQ(prolong_apply(Y, shift(e, 0, 1, ctx), ctx), shift(prolong_apply(Y, e, ctx), 0, 1, ctx));
  }
}

TEST(Evolutionary, ProlongationIsFrechetDerivative) {
  Context ctx = make_context({"t"}, {"n"}, {"u", "w"});
  ExprGen g(ctx, 24);
  for (int i = 0; i < kCases; ++i) {
    ExprTuple Q = g.tuple(2, 2);
    ExprTuple F = g.tuple(2, 3);
    ExprTuple D = frechet(F, Q, ctx);
    EvolutionaryField Y{Q, {}};
    for (int a = 0; a < 2; ++a) EXPECT_EQ(prolong_apply(Y, F[a], ctx), D[a]);
  }
}

TEST(Evolutionary, RegularFieldMatchesItsCharacteristic) {
  Context ctx = tnu();
  ExprGen g(ctx, 25);
  for (int i = 0; i < kCases; ++i) {
    VectorField X{{ctx.x() * g.pick(1, 2)}, {g.polynomial(2).e}, FieldKind::Regular};
    Expr e = g.polynomial(2).e;
    EvolutionaryField Y = to_evolutionary(X, ctx);
    Expr lhs = prolong_apply(X, e, ProlongationMode::Regular, ctx);
    Expr rhs = prolong_apply(Y, e, ctx) + X.xi[0] * total_derivative(e, 0, ctx);
    EXPECT_EQ(lhs, rhs);
  }
}

SystemFile fixture(const char* name) { return load_system_file(std::string(DDN_CORPUS_DIR) + "/" + name); }

TEST(Symmetry, BracketOfSymmetriesIsASymmetry) {
  SystemFile f = fixture("volterra.dde");
  EvolutionaryField a = f.evolutionary("X1"), b = f.evolutionary("Y4");
  EvolutionaryField c{{parse("u*u[0;1]*(u + u[0;1] + u[0;2]) - u*u[0;-1]*(u + u[0;-1] + u[0;-2])", f.ctx)}, {}};
  ASSERT_TRUE(check_symmetry(f.system, c, f.ctx).holds);
  EXPECT_TRUE(check_symmetry(f.system, lie_bracket(a, b, f.ctx), f.ctx).holds);
  EXPECT_TRUE(check_symmetry(f.system, lie_bracket(a, c, f.ctx), f.ctx).holds);
  EXPECT_TRUE(check_symmetry(f.system, lie_bracket(b, c, f.ctx), f.ctx).holds);
}

TEST(Symmetry, NonSymmetryLeavesResidue) {
  SystemFile f = fixture("volterra.dde");
  EvolutionaryField Y{{f.ctx.u() * f.ctx.u()}, {}};
  SymmetryVerdict v = check_symmetry(f.system, Y, f.ctx);
  EXPECT_FALSE(v.holds);
  EXPECT_FALSE(v.residue[0].is_zero());
}

TEST(Symmetry, DecompositionExpandsToProlongation) {
  SystemFile f = fixture("volterra.dde");
  for (const char* name : {"X1", "Y4"}) {
    EvolutionaryField Y = f.evolutionary(name);
    SymmetryDecomposition d = decompose_symmetry(f.system, Y, f.ctx);
    EXPECT_EQ(expand_decomposition(d.rows[0], f.system, f.ctx), prolong_apply(Y, f.system.equations[0], f.ctx))
        << name;
  }
}

TEST(Symmetry, ReduceModEliminatesLeadDerivatives) {
  SystemFile f = fixture("volterra.dde");
  const Context& ctx = f.ctx;
  Expr e = reduce_mod(parse("u[2;1]", ctx), f.system, ctx);
  for (const JetAtom& a : jet_atoms(e)) EXPECT_EQ(a.deriv[0], 0);
  EXPECT_TRUE(reduce_mod(f.system.equations[0], f.system, ctx).is_zero());
}

TEST(Symmetry, VariationalSymmetriesOfTodaAreSymmetries) {
  SystemFile f = fixture("toda.dde");
  for (const char* name : {"Q1", "Q2", "Q3"}) EXPECT_TRUE(check_symmetry(f.system, f.evolutionary(name), f.ctx).holds) << name;
}

TEST(PointSymmetries, VolterraGenerators) {
  SystemFile f = fixture("volterra.dde");
  PointSymmetryResult r = solve_point_symmetries(f.system, f.ctx);
  ASSERT_EQ(r.generators.size(), 3u);
  EXPECT_EQ(r.parameters.size(), 3u);
  EXPECT_TRUE(r.solution.consistent);
  EXPECT_TRUE(r.solution.unsplit.empty());
}

TEST(PointSymmetries, RejectsSystemsOutsideTheClass) {
  SystemFile f = fixture("toda.dde");
  EXPECT_THROW(solve_point_symmetries(f.system, f.ctx), Error);
}

}  // namespace
