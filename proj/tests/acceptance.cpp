// One line per acceptance criterion; exit status 1 when any line fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

#include "ddnoether/adjointness.hpp"
#include "ddnoether/numeric.hpp"
#include "ddnoether/symmetry.hpp"
#include "ddnoether/sysfile.hpp"
#include "ddnoether/variational.hpp"
#include "random_expr.hpp"

using namespace ddn;
using ddn::testing::ExprGen;
using ddn::testing::make_context;

namespace {

// Pinned tolerances for criterion 11.
constexpr double kDriftTol = 1e-6;
constexpr double kResidualTol = 1e-10;
constexpr double kOrderRatio = 16.0;
constexpr double kOrderSlack = 0.5;  // accepted ratio 16 * (1 +- 0.5)
constexpr int kPropertyCases = 500;

struct Result {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      note("failed: " + what);
    }
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

SystemFile fixture(const char* name) { return load_system_file(std::string(DDN_CORPUS_DIR) + "/" + name); }

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", x);
  return buf;
}

bool same_field(const VectorField& a, const VectorField& b) { return a.xi == b.xi && a.phi == b.phi; }

Result volterra_point_symmetries() {
  Result r;
  SystemFile f = fixture("volterra.dde");
  const Context& ctx = f.ctx;
  PointSymmetryResult res = solve_point_symmetries(f.system, ctx);
  r.require(res.parameters.size() == 3, "three parameters");
  r.require(res.generators.size() == 3, "three generators");
  std::vector<VectorField> expected = {
      {{parse("-t", ctx)}, {parse("u", ctx)}, FieldKind::Point},
      {{parse("(-1)^n*t", ctx)}, {parse("(-1)^n*u", ctx)}, FieldKind::Point},
      {{parse("c3(n)", ctx)}, {Expr(0)}, FieldKind::Point},
  };
  std::vector<bool> used(res.generators.size(), false);
  for (std::size_t i = 0; i < expected.size(); ++i) {
    bool found = false;
    for (std::size_t g = 0; g < res.generators.size() && !found; ++g)
      if (!used[g] && same_field(res.generators[g], expected[i])) used[g] = found = true;
    r.require(found, "generator X" + std::to_string(i + 1) + " returned");
    for (ProlongationMode m : {ProlongationMode::CaseI, ProlongationMode::CaseII})
      r.require(check_symmetry(f.system, expected[i], m, ctx).holds,
                "X" + std::to_string(i + 1) + " under " + mode_name(m));
  }
  r.note("xi = " + render(res.general.xi[0]) + ", phi = " + render(res.general.phi[0]));
  return r;
}

Result volterra_self_adjoint() {
  Result r;
  SystemFile f = fixture("volterra.dde");
  SelfAdjointVerdict v = check_self_adjoint(f.system, parse_substitution("v = -u", f.ctx), f.ctx);
  r.require(v.holds && v.residue[0].is_zero(), "residue 0");
  r.note(std::string("residue ") + render(v.residue[0]) + ", " + self_adjoint_kind_name(v.kind));
  return r;
}

Result volterra_adjoint_law() {
  Result r;
  SystemFile f = fixture("volterra.dde");
  const Context& ctx = f.ctx;
  AdjointLaw a = adjoint_cl(f.system, f.evolutionary("X1"), parse_substitution("v = -u", ctx), ctx);
  DivergencePair expected{{ctx.u()}, {parse("-u*u[0;-1]", ctx)}};
  r.require(equivalent_laws(a.law.P, expected, f.system, ctx), "equivalent to (u; -u u_-1)");
  r.require(a.law.Q.size() == 1 && a.law.Q[0] == ctx.u(), "Q = u");
  Expr literal = total_derivative(ctx.u(), 0, ctx) + shift(expected.p2[0], 0, 1, ctx) - expected.p2[0] -
                 ctx.u() * parse("u[1;0]/u - u[0;1] + u[0;-1]", ctx);
  r.require(literal.is_zero(), "literal identity normalizes to 0");
  r.note("P1 = " + render(a.law.P.p1[0]) + ", P2 = " + render(a.law.P.p2[0]) + ", Q = " + render(a.law.Q[0]));
  return r;
}

// Displayed laws verify as identities and Noether on each characteristic
// reproduces them up to trivial laws.
Result noether_fixture(const char* file, std::vector<std::pair<const char*, const char*>> pairs,
                       bool check_noether) {
  Result r;
  SystemFile f = fixture(file);
  const Expr& L = f.lagrangian("L");
  for (auto [field, law] : pairs) {
    const ConservationLaw& cl = f.law(law);
    LawVerdict v = verify_cl(cl, f.system, VerifyMode::Identity, f.ctx);
    r.require(v.holds, std::string(law) + " identity, residue " + render(v.residue));
    r.require(is_variational_symmetry(L, f.evolutionary(field), f.ctx).holds, std::string(field) + " variational");
    if (check_noether) {
      ConservationLaw got = noether(L, f.evolutionary(field), f.ctx);
      r.require(equivalent_laws(got.P, cl.P, f.system, f.ctx) && got.Q == cl.Q,
                std::string("noether ") + field + " reproduces " + law);
    }
  }
  if (r.pass) r.note(std::to_string(pairs.size()) + " laws");
  return r;
}

Result transformed_volterra() {
  Result r;
  SystemFile f = fixture("transformed_volterra.dde");
  DDESystem el = euler_lagrange(f.lagrangian("L"), f.ctx);
  r.require(el.equations[0] == f.system.equations[0], "E(L) is the fixture equation");
  for (const char* row : {"row1", "row2"}) {
    LawVerdict v = verify_cl_best(f.law(row), f.system, f.ctx);
    r.require(v.holds, std::string(row) + " verifies");
    r.note(std::string(row) + " " + verification_name(v.level));
  }
  LawVerdict v3 = verify_cl_best(f.law("row3"), f.system, f.ctx);
  r.note(std::string("row3 (Q = f(t)) ") + (v3.holds ? verification_name(v3.level) : "fails") + ", residue " +
         render(v3.residue));
  return r;
}

Result continuous_kdv() {
  Result r;
  SystemFile f = fixture("kdv.dde");
  for (const char* law : {"mass", "momentum", "energy"}) {
    LawVerdict v = verify_cl(f.law(law), f.system, VerifyMode::Identity, f.ctx);
    r.require(v.holds, std::string(law) + " identity, residue " + render(v.residue));
  }
  if (r.pass) r.note("3 laws exact");
  return r;
}

Result semi_discrete_kdv() {
  Result r;
  SystemFile p1 = fixture("sdkdv1_potential.dde");
  Expr want1 = parse(
      "(v[1;1] - v[1;-1])/2 + ((v[0;1] - v)^2 - (v - v[0;-1])^2)/2 + v[0;2] - 4*v[0;1] + 6*v - 4*v[0;-1] + v[0;-2]",
      p1.ctx);
  Expr got1 = euler_lagrange(p1.lagrangian("L1"), p1.ctx).equations[0];
  r.require(got1 == want1, "E(L1) verbatim, got " + render(got1));
  SystemFile p2 = fixture("sdkdv2_potential.dde");
  Expr want2 = parse("(v[1;1] - v[1;-1])/2 + v[1;0]*v[2;0] + v[4;0]", p2.ctx);
  Expr got2 = euler_lagrange(p2.lagrangian("L2"), p2.ctx).equations[0];
  r.require(got2 == want2, "E(L2) verbatim, got " + render(got2));

  SystemFile d1 = fixture("sdkdv1.dde");
  r.require(verify_cl(d1.law("mass"), d1.system, VerifyMode::Identity, d1.ctx).holds, "first semi-discretisation law");
  SystemFile d2 = fixture("sdkdv2.dde");
  for (const char* law : {"mass", "momentum"})
    r.require(verify_cl(d2.law(law), d2.system, VerifyMode::Identity, d2.ctx).holds,
              std::string("second semi-discretisation ") + law);
  LawVerdict printed = verify_cl(d2.law("mass_printed"), d2.system, VerifyMode::Identity, d2.ctx);
  r.note("discrete flux (u + u_-1)/2 used for the first law of the second set; printed (u_1 + u)/2 leaves residue " +
         render(printed.residue));
  return r;
}

Result pure_difference_adjointness() {
  Result r;
  SystemFile k = fixture("discrete_kdv.dde");
  SelfAdjointVerdict a = check_self_adjoint(k.system, k.sub("S1"), k.ctx);
  r.require(a.holds, "discrete KdV residue " + render(a.residue[0]));
  SystemFile y = fixture("yamilov.dde");
  SelfAdjointVerdict b = check_self_adjoint(y.system, parse_substitution("v = (-1)^n*u", y.ctx), y.ctx);
  r.require(b.holds, "Yamilov residue " + render(b.residue[0]));
  r.note(std::string("discrete KdV ") + self_adjoint_kind_name(a.kind) + ", Yamilov " + self_adjoint_kind_name(b.kind));
  return r;
}

// Each property over kPropertyCases random inputs; exact zero required.
Result property_suites() {
  Result r;
  Context c1 = make_context({"t"}, {"n"}, {"u"});
  Context c2 = make_context({"t"}, {"n"}, {"u", "w"});
  auto run = [&](const char* name, const std::function<bool(int)>& prop) {
    int failures = 0;
    for (int i = 0; i < kPropertyCases; ++i)
      if (!prop(i)) ++failures;
    r.require(failures == 0, std::string(name) + " (" + std::to_string(failures) + " failures)");
  };

  ExprGen g1(c1, 101);
  run("D o S commutation", [&](int) {
    Expr e = g1.general(2).e;
    int k = g1.pick(-2, 2);
    return (total_derivative(shift(e, 0, k, c1), 0, c1) - shift(total_derivative(e, 0, c1), 0, k, c1)).is_zero();
  });
  ExprGen g2(c1, 102);
  run("E o Div = 0", [&](int) {
    return euler(divergence({{g2.polynomial(3).e}, {g2.polynomial(3).e}}, c1), 0, c1).is_zero();
  });
  ExprGen g3(c2, 103);
  run("Leibniz identity", [&](int) {
    ExprTuple A = g3.tuple(2, 2), B = g3.tuple(2, 2);
    Expr AB = A[0] * B[0] + A[1] * B[1];
    ExprTuple dA = frechet_adjoint(A, B, c2), dB = frechet_adjoint(B, A, c2);
    return (euler(AB, 0, c2) - dA[0] - dB[0]).is_zero() && (euler(AB, 1, c2) - dA[1] - dB[1]).is_zero();
  });
  ExprGen g4(c1, 104);
  auto point = [&](ExprGen& g) {
    Expr pool[] = {c1.x(), c1.n(), c1.parity(), c1.u(), Expr(1)};
    Expr e;
    for (int k = g.pick(1, 3); k > 0; --k) e += Expr(g.pick(1, 3)) * pool[g.pick(0, 4)] * pool[g.pick(0, 4)];
    return e;
  };
  auto atom = [&](int d, int s) {
    JetAtom a = c1.atom(0);
    a.deriv = {d};
    a.shift = {s};
    return a;
  };
  run("prolongation recursions", [&](int) {
    VectorField X{{point(g4)}, {point(g4)}, FieldKind::Point};
    int d = g4.pick(0, 2), s = g4.pick(-2, 2);
    auto co = [&](int dd, int ss, ProlongationMode m) { return prolongation_coefficient(X, atom(dd, ss), m, c1); };
    Expr Dxi = total_derivative(X.xi[0], 0, c1);
    bool ok = (co(d + 1, s, ProlongationMode::CaseI) - total_derivative(co(d, s, ProlongationMode::CaseI), 0, c1) +
               Dxi * c1.jet(atom(d + 1, s)))
                  .is_zero();
    ok = ok && (co(0, s + 1, ProlongationMode::CaseI) - shift(co(0, s, ProlongationMode::CaseI), 0, 1, c1)).is_zero();
    Expr dxi = shift(X.xi[0], 0, 1, c1) - X.xi[0];
    Expr gap = total_derivative(dxi * c1.jet(atom(1, s + 1)), std::vector<int>{d}, c1) - dxi * c1.jet(atom(d + 1, s + 1));
    ok = ok && (co(d, s + 1, ProlongationMode::CaseI) - shift(co(d, s, ProlongationMode::CaseI), 0, 1, c1) - gap)
                   .is_zero();
    ok = ok && (co(d + 1, s, ProlongationMode::CaseII) - total_derivative(co(d, s, ProlongationMode::CaseII), 0, c1) +
                shift(Dxi, 0, s, c1) * c1.jet(atom(d + 1, s)))
                   .is_zero();
    ok = ok && (shift(co(d, s, ProlongationMode::CaseII), 0, 1, c1) - co(d, s + 1, ProlongationMode::CaseII)).is_zero();
    return ok;
  });
  ExprGen g5(c1, 105);
  run("evolutionary commutation", [&](int) {
    EvolutionaryField Y{{g5.polynomial(2).e}, {}};
    Expr e = g5.polynomial(3).e;
    return prolong_apply(Y, total_derivative(e, 0, c1), c1) == total_derivative(prolong_apply(Y, e, c1), 0, c1) &&
           prolong_apply(Y, shift(e, 0, 1, c1), c1) == shift(prolong_apply(Y, e, c1), 0, 1, c1);
  });
  ExprGen g6(c2, 106);
  run("Frechet = prolongation", [&](int) {
    ExprTuple Q = g6.tuple(2, 2), F = g6.tuple(2, 3);
    ExprTuple D = frechet(F, Q, c2);
    EvolutionaryField Y{Q, {}};
    return prolong_apply(Y, F[0], c2) == D[0] && prolong_apply(Y, F[1], c2) == D[1];
  });
  ExprGen g7(c2, 107);
  run("by-parts reconstruction", [&](int) {
    ExprTuple targets = g7.tuple(2, 2);
    std::vector<ByPartsTerm> terms;
    Expr input;
    for (int j = g7.pick(1, 3); j > 0; --j) {
      ByPartsTerm t{g7.polynomial(2).e, {g7.pick(0, 2)}, {g7.pick(-2, 2)}, g7.pick(0, 1)};
      JetAtom idx = c2.atom(0);
      idx.deriv = t.deriv;
      idx.shift = t.shift;
      input += t.coeff * apply_jet(targets[static_cast<std::size_t>(t.target)], idx, c2);
      terms.push_back(t);
    }
    ByPartsResult b = by_parts(terms, targets, c2);
    Expr rebuilt =
        b.characteristic[0] * targets[0] + b.characteristic[1] * targets[1] + divergence({b.flux_d, b.flux_s}, c2);
    return (rebuilt - input).is_zero();
  });
  ExprGen g8(c1, 108);
  run("E-L Frechet self-adjointness", [&](int) {
    ExprTuple E = euler_lagrange(g8.polynomial(3).e, c1).equations;
    ExprTuple W{g8.polynomial(2).e};
    return frechet_adjoint(E, W, c1) == frechet(E, W, c1);
  });
  if (r.pass) r.note("8 suites x " + std::to_string(kPropertyCases) + " cases, all exact zero");
  return r;
}

struct Drift {
  double drift;
  double residual;
};

Drift run_numeric(const SystemFile& f, const char* law, double dt) {
  int steps = static_cast<int>(std::lround(1.0 / dt));
  LatticeState s0 = random_state(20, lattice_orders(f.system, f.ctx), 42);
  Trajectory tr = integrate(f.system, s0, dt, steps, f.ctx);
  NumericReport rep = check_cl_numeric(f.law(law), f.system, tr, f.ctx);
  return {rep.max_density_drift, rep.pointwise_divergence_residual};
}

Result numeric_cross_check() {
  Result r;
  SystemFile v = fixture("volterra.dde");
  SystemFile t = fixture("toda.dde");
  Drift mass = run_numeric(v, "law1", 1e-3);
  Drift mass_half = run_numeric(v, "law1", 5e-4);
  Drift energy = run_numeric(t, "energy", 1e-3);
  r.require(mass.drift < kDriftTol && mass.residual < kResidualTol, "sum u drift " + sci(mass.drift));
  r.require(energy.drift < kDriftTol && energy.residual < kResidualTol, "Toda energy drift " + sci(energy.drift));
  r.note("sum u drift " + sci(mass.drift) + " (dt/2: " + sci(mass_half.drift) + ", round-off only)");
  r.note("Toda energy drift " + sci(energy.drift));

  // Order of accuracy, measured where truncation error dominates round-off.
  auto order = [&](const SystemFile& f, const char* law, const char* label) {
    double a = run_numeric(f, law, 1e-2).drift;
    double b = run_numeric(f, law, 5e-3).drift;
    double ratio = a / b;
    r.require(std::abs(ratio - kOrderRatio) <= kOrderSlack * kOrderRatio, std::string(label) + " ratio " + sci(ratio));
    r.note(std::string(label) + " halving ratio " + sci(ratio));
  };
  order(v, "quad", "Volterra quadratic law");
  order(t, "energy", "Toda energy");
  return r;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Result()> run;
  };
  std::vector<Criterion> criteria = {
      {"Volterra point symmetries", volterra_point_symmetries},
      {"Volterra self-adjointness", volterra_self_adjoint},
      {"Volterra conservation law from adjointness", volterra_adjoint_law},
      {"Toda laws and Noether",
       [] { return noether_fixture("toda.dde", {{"Q1", "momentum"}, {"Q2", "boost"}, {"Q3", "energy"}}, true); }},
      {"compound pendulum laws",
       [] { return noether_fixture("pendulum.dde", {{"Qc", "lawc"}, {"Qs", "laws"}, {"Qe", "energy"}}, false); }},
      {"transformed Volterra table", transformed_volterra},
      {"continuous KdV laws", continuous_kdv},
      {"semi-discrete KdV", semi_discrete_kdv},
      {"discrete KdV and Yamilov adjointness", pure_difference_adjointness},
      {"property suites", property_suites},
      {"numeric cross-check", numeric_cross_check},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Result res;
    auto start = std::chrono::steady_clock::now();
    try {
      res = criteria[i].run();
    } catch (const std::exception& e) {
      res.pass = false;
      res.note(std::string("error: ") + e.what());
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!res.pass) ++failed;
    std::printf("criterion %2zu %s: %s [%.2fs] %s\n", i + 1, res.pass ? "PASS" : "FAIL", criteria[i].name, secs,
                res.detail.c_str());
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed ? 1 : 0;
}
