#include <gtest/gtest.h>

#include <cmath>

#include "random_expr.hpp"

using namespace ddn;
using ddn::testing::ExprGen;
using ddn::testing::kCases;
using ddn::testing::leaf_value;
using ddn::testing::make_context;

namespace {

Context tnu() { return make_context({"t"}, {"n"}, {"u"}); }

TEST(Expr, CancellationToLiteralZero) {
  Context ctx = tnu();
  Expr u = ctx.u();
  EXPECT_TRUE((u - u).is_zero());
  EXPECT_TRUE(((u + 1) * (u - 1) - (u * u - 1)).is_zero());
  EXPECT_TRUE((u / (u + 1) + 1 / (u + 1) - 1).is_zero());
  EXPECT_EQ(parse("(u + 1)^2", ctx), parse("u^2 + 2*u + 1", ctx));
}

TEST(Expr, ParityRules) {
  Context ctx = tnu();
  Expr p = ctx.parity();
  EXPECT_EQ(p * p, Expr(1));
  EXPECT_EQ(shift(p, 0, 1, ctx), -p);
  EXPECT_EQ(shift(ctx.n(), 0, 2, ctx), ctx.n() + 2);
}

TEST(Expr, ExactRationalCoefficients) {
  Context ctx = tnu();
  Expr e = parse("u/3 + u/6", ctx);
  EXPECT_EQ(e, parse("u/2", ctx));
  EXPECT_THROW(parse("0.5*u", ctx), ParseError);
}

TEST(Expr, ParseErrorOffset) {
  Context ctx = tnu();
  try {
    parse("u + w", ctx);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 4u);
  }
}

TEST(Expr, RenderParseRoundTrip) {
  Context ctx = tnu();
  ExprGen g(ctx, 1);
  for (int i = 0; i < kCases; ++i) {
    Expr e = g.general(2).e;
    EXPECT_EQ(parse(render(e), ctx), e) << render(e);
  }
}

TEST(Expr, EvaluationMatchesUnnormalizedTree) {
  Context ctx = tnu();
  ExprGen g(ctx, 2);
  for (int i = 0; i < kCases; ++i) {
    auto s = g.general(2);
    double got = evaluate(s.e, leaf_value);
    EXPECT_NEAR(got, s.value, 1e-12 * std::max(1.0, s.scale)) << render(s.e);
  }
}

TEST(Expr, PartialIsADerivation) {
  Context ctx = tnu();
  ExprGen g(ctx, 3);
  for (int i = 0; i < kCases; ++i) {
    Expr a = g.general(1).e;
    Expr b = g.general(1).e;
    Expr x = g.leaf().e;
    // (-1)^n squares to 1, so differentiating along it is not a derivation.
    while (x.as_kernel()->kind == KernelKind::Parity) x = g.leaf().e;
    Expr lhs = partial(a * b, x);
    Expr rhs = partial(a, x) * b + a * partial(b, x);
    EXPECT_TRUE((lhs - rhs).is_zero()) << render(a) << " | " << render(b);
  }
}

TEST(Expr, ConstructionOrderIndependence) {
  Context ctx = tnu();
  ExprGen g(ctx, 4);
  for (int i = 0; i < kCases; ++i) {
    Expr a = g.general(1).e, b = g.general(1).e, c = g.general(1).e;
    EXPECT_EQ((a + b) + c, a + (c + b));
    EXPECT_EQ((a * b) * c, c * (b * a));
    EXPECT_EQ(a * (b + c), a * b + a * c);
  }
}

TEST(Expr, ContextValidation) {
  Context ctx;
  ctx.continuous = {"t"};
  EXPECT_THROW(ctx.validate(), Error);
  ctx.dependent = {"t"};
  EXPECT_THROW(ctx.validate(), Error);
}

}  // namespace
