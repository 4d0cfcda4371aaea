#include <gtest/gtest.h>

#include "ddnoether/adjointness.hpp"
#include "ddnoether/sysfile.hpp"
#include "ddnoether/variational.hpp"
#include "random_expr.hpp"

using namespace ddn;
using ddn::testing::ExprGen;
using ddn::testing::kCases;
using ddn::testing::make_context;

namespace {

SystemFile fixture(const char* name) { return load_system_file(std::string(DDN_CORPUS_DIR) + "/" + name); }

TEST(Variational, EulerLagrangeSystemsAreFrechetSelfAdjoint) {
  Context ctx = make_context({"t"}, {"n"}, {"u"});
  ExprGen g(ctx, 30);
  for (int i = 0; i < kCases; ++i) {
    Expr L = g.polynomial(3).e;
    ExprTuple E = euler_lagrange(L, ctx).equations;
    ExprTuple W{g.polynomial(2).e};
    EXPECT_EQ(frechet_adjoint(E, W, ctx), frechet(E, W, ctx)) << render(L);
  }
}

TEST(Variational, EulerLagrangeSystemsAreFrechetSelfAdjointForTwoFields) {
  Context ctx = make_context({"t"}, {"n"}, {"u", "w"});
  ExprGen g(ctx, 31);
  for (int i = 0; i < kCases; ++i) {
    Expr L = g.polynomial(3).e;
    ExprTuple E = euler_lagrange(L, ctx).equations;
    ExprTuple W = g.tuple(2, 2);
    EXPECT_EQ(frechet_adjoint(E, W, ctx), frechet(E, W, ctx));
  }
}

TEST(Variational, DivergenceIsAlwaysAVariationalSymmetryOfANullLagrangian) {
  Context ctx = make_context({"t"}, {"n"}, {"u"});
  ExprGen g(ctx, 32);
  for (int i = 0; i < 100; ++i) {
    Expr L = divergence({{g.polynomial(2).e}, {g.polynomial(2).e}}, ctx);
    EvolutionaryField Y{{g.polynomial(2).e}, {}};
    EXPECT_TRUE(is_variational_symmetry(L, Y, ctx).holds);
  }
}

TEST(Noether, OutputIsVerifiedExactly) {
  SystemFile f = fixture("toda.dde");
  for (const char* name : {"Q1", "Q2", "Q3"}) {
    ConservationLaw cl = noether(f.lagrangian("L"), f.evolutionary(name), f.ctx);
    EXPECT_EQ(cl.verified, Verification::ExactIdentity) << name;
    DDESystem el = euler_lagrange(f.lagrangian("L"), f.ctx);
    EXPECT_TRUE(verify_cl(cl, el, VerifyMode::Identity, f.ctx).holds) << name;
  }
}

TEST(Noether, RejectsNonVariationalField) {
  SystemFile f = fixture("toda.dde");
  EXPECT_THROW(noether(f.lagrangian("L"), f.evolutionary("Q4"), f.ctx), Error);
}

TEST(Noether, PendulumLaws) {
  SystemFile f = fixture("pendulum.dde");
  for (auto [field, law] : {std::pair{"Qc", "lawc"}, {"Qs", "laws"}, {"Qe", "energy"}}) {
    ConservationLaw cl = noether(f.lagrangian("L"), f.evolutionary(field), f.ctx);
    EXPECT_TRUE(equivalent_laws(cl.P, f.law(law).P, f.system, f.ctx)) << field;
  }
}

TEST(ConservationLaws, ContinuousKdvLawsAreIdentities) {
  SystemFile f = fixture("kdv.dde");
  for (const char* name : {"mass", "momentum", "energy"}) {
    LawVerdict v = verify_cl(f.law(name), f.system, VerifyMode::Identity, f.ctx);
    EXPECT_TRUE(v.holds) << name << ": " << render(v.residue);
  }
}

TEST(ConservationLaws, WrongCharacteristicFailsIdentity) {
  SystemFile f = fixture("kdv.dde");
  ConservationLaw cl = f.law("mass");
  cl.Q = {f.ctx.u()};
  EXPECT_FALSE(verify_cl(cl, f.system, VerifyMode::Identity, f.ctx).holds);
  EXPECT_TRUE(verify_cl(cl, f.system, VerifyMode::OnSolutions, f.ctx).holds);
}

TEST(ConservationLaws, TrivialLawsAreEquivalent) {
  SystemFile f = fixture("volterra.dde");
  const Context& ctx = f.ctx;
  DivergencePair P = f.law("law1").P;
  DivergencePair Q = P;
  Expr g = parse("u*u[0;1]", ctx);
  Q.p1[0] += g - shift(g, 0, -1, ctx);
  Q.p2[0] -= total_derivative(shift(g, 0, -1, ctx), 0, ctx);
  EXPECT_TRUE(equivalent_laws(P, Q, f.system, ctx));
  EXPECT_FALSE(equivalent_laws(P, f.law("quad").P, f.system, ctx));
}

TEST(ConservationLaws, MissingCharacteristicNeedsSolvedForms) {
  SystemFile f = fixture("volterra.dde");
  EXPECT_THROW(verify_cl(f.law("quad"), f.system, VerifyMode::Identity, f.ctx), Error);
  EXPECT_TRUE(verify_cl_best(f.law("quad"), f.system, f.ctx).holds);
}

}  // namespace
