#include <gtest/gtest.h>

#include <cmath>

#include "ddnoether/numeric.hpp"
#include "ddnoether/sysfile.hpp"

using namespace ddn;

namespace {

SystemFile fixture(const char* name) { return load_system_file(std::string(DDN_CORPUS_DIR) + "/" + name); }

SystemFile inline_system(const char* text) { return parse_system_file(text); }

TEST(Lattice, EvaluationWrapsAroundTheRing) {
  SystemFile f = fixture("volterra.dde");
  LatticeState s{4, {1}, {1.0, 2.0, 3.0, 4.0}, 0.5};
  EXPECT_DOUBLE_EQ(eval_on_lattice(parse("u[0;1]", f.ctx), s, 3), 1.0);
  EXPECT_DOUBLE_EQ(eval_on_lattice(parse("u[0;-1]", f.ctx), s, 0), 4.0);
  EXPECT_DOUBLE_EQ(eval_on_lattice(parse("u*u[0;1] + t", f.ctx), s, 1), 6.5);
  EXPECT_DOUBLE_EQ(eval_on_lattice(parse("(-1)^n*n", f.ctx), s, 3), -3.0);
  EXPECT_THROW(eval_on_lattice(parse("u[1;0]", f.ctx), s, 0), Error);
}

TEST(Lattice, SecondOrderLeadStoresVelocity) {
  SystemFile f = fixture("toda.dde");
  EXPECT_EQ(lattice_orders(f.system, f.ctx), std::vector<int>{2});
  LatticeState s = random_state(5, {2}, 42);
  EXPECT_EQ(static_cast<int>(s.values.size()), 10);
  EXPECT_DOUBLE_EQ(eval_on_lattice(parse("u[1;1]", f.ctx), s, 4), s.at(0, 0, 1));
}

TEST(Lattice, RandomStateIsSeeded) {
  LatticeState a = random_state(20, {1}, 42), b = random_state(20, {1}, 42), c = random_state(20, {1}, 43);
  EXPECT_EQ(a.values, b.values);
  EXPECT_NE(a.values, c.values);
  for (double x : a.values) {
    EXPECT_GE(x, 0.5);
    EXPECT_LE(x, 1.5);
  }
}

TEST(Lattice, UnboundParameterIsAnError) {
  SystemFile f = inline_system(
      "ddnoether/1\ncontinuous t\ndiscrete n\ndependent u\nparameter a\n"
      "equation F: u[1;0] - a*u  lead u[1;0] = a*u\n");
  LatticeState s = random_state(4, {1}, 1);
  EXPECT_THROW(eval_on_lattice(f.system.solved_forms[0].rhs, s, 0), Error);
  EXPECT_DOUBLE_EQ(eval_on_lattice(parse("a", f.ctx), s, 0, {{"a", 2.5}}), 2.5);
}

TEST(RungeKutta, ExponentialGrowthIsFourthOrder) {
  SystemFile f = inline_system(
      "ddnoether/1\ncontinuous t\ndiscrete n\ndependent u\n"
      "equation F: u[1;0] - u  lead u[1;0] = u\n");
  LatticeState s0{1, {1}, {1.0}, 0.0};
  double e1 = std::abs(integrate(f.system, s0, 0.1, 10, f.ctx).states.back().values[0] - std::exp(1.0));
  double e2 = std::abs(integrate(f.system, s0, 0.05, 20, f.ctx).states.back().values[0] - std::exp(1.0));
  EXPECT_LT(e1, 1e-5);
  EXPECT_NEAR(e1 / e2, 16.0, 2.0);
}

TEST(RungeKutta, RingMustCoverTheStencil) {
  SystemFile f = fixture("volterra.dde");
  EXPECT_THROW(integrate(f.system, random_state(2, {1}, 42), 1e-3, 1, f.ctx), Error);
}

TEST(ConservationLawNumerics, VolterraLawsAreConserved) {
  SystemFile f = fixture("volterra.dde");
  Trajectory tr = integrate(f.system, random_state(20, {1}, 42), 1e-3, 1000, f.ctx);
  for (const char* name : {"law1", "quad"}) {
    NumericReport r = check_cl_numeric(f.law(name), f.system, tr, f.ctx);
    EXPECT_LT(r.max_density_drift, 1e-9) << name;
    EXPECT_LT(r.pointwise_divergence_residual, 1e-10) << name;
  }
}

TEST(ConservationLawNumerics, NonConservedDensityDrifts) {
  SystemFile f = fixture("volterra.dde");
  ConservationLaw fake{{{parse("u^2", f.ctx)}, {Expr(0)}}, {}, Verification::Unverified};
  Trajectory tr = integrate(f.system, random_state(20, {1}, 42), 1e-3, 1000, f.ctx);
  NumericReport r = check_cl_numeric(fake, f.system, tr, f.ctx);
  EXPECT_GT(r.max_density_drift, 1e-3);
  EXPECT_GT(r.pointwise_divergence_residual, 1e-3);
}

}  // namespace
