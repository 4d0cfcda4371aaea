#include "ddnoether/checks.hpp"

#include <algorithm>
#include <filesystem>
#include <future>
#include <sstream>

#include "ddnoether/numeric.hpp"

namespace ddn {

namespace {

std::vector<std::string> words_of(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> w;
  for (std::string x; in >> x;) w.push_back(x);
  return w;
}

// Text after the first top-level '='.
std::string after_equals(const std::string& s) {
  auto eq = s.find('=');
  if (eq == std::string::npos) throw Error("expected '= <expr>'");
  return s.substr(eq + 1);
}

ExprTuple parse_exprs(const std::string& s, const Context& ctx) {
  ExprTuple out;
  for (const auto& part : split_top(s, ',')) out.push_back(parse(part, ctx));
  return out;
}

std::string render_tuple(const ExprTuple& v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + render(v[i]);
  return s + ")";
}

void need(const std::vector<std::string>& w, std::size_t n) {
  if (w.size() < n) throw Error("check needs " + std::to_string(n - 1) + " arguments");
}

ProlongationMode mode_of(const std::string& s) {
  if (s == "case-i") return ProlongationMode::CaseI;
  if (s == "case-ii") return ProlongationMode::CaseII;
  if (s == "regular") return ProlongationMode::Regular;
  throw Error("unknown prolongation mode '" + s + "'");
}

bool same_field(const VectorField& a, const VectorField& b) { return a.xi == b.xi && a.phi == b.phi; }

CheckOutcome compare(const ExprTuple& got, const ExprTuple& want) {
  CheckOutcome o;
  o.pass = got == want;
  o.detail = "got " + render_tuple(got);
  if (!o.pass) o.detail += ", expected " + render_tuple(want);
  return o;
}

CheckOutcome law_match(const ConservationLaw& got, const ConservationLaw& want, const DDESystem& sys,
                       const Context& ctx) {
  CheckOutcome o;
  bool eq = equivalent_laws(got.P, want.P, sys, ctx);
  bool q = got.Q == want.Q;
  o.pass = eq && q;
  o.detail = "P1=" + render_tuple(got.P.p1) + " P2=" + render_tuple(got.P.p2) + " Q=" + render_tuple(got.Q);
  if (!eq) o.detail += "; not equivalent to the expected law";
  if (!q) o.detail += "; characteristic differs from " + render_tuple(want.Q);
  return o;
}

CheckOutcome dispatch(const SystemFile& f, const std::string& text) {
  const Context& ctx = f.ctx;
  const DDESystem& sys = f.system;
  auto w = words_of(text);
  const std::string& kind = w.at(0);
  CheckOutcome o;

  if (kind == "symmetry") {
    need(w, 2);
    SymmetryVerdict v;
    if (const VectorField* X = f.field(w[1]))
      v = check_symmetry(sys, *X, mode_of(w.size() > 2 ? w[2] : "case-i"), ctx);
    else
      v = check_symmetry(sys, f.evolutionary(w[1]), ctx);
    o.pass = v.holds;
    o.detail = "residue " + render_tuple(v.residue);
    return o;
  }
  if (kind == "point-symmetries") {
    PointSymmetryResult r = solve_point_symmetries(sys, ctx);
    std::vector<bool> hit(r.generators.size(), false);
    bool all = r.generators.size() == w.size() - 1;
    for (std::size_t i = 1; i < w.size(); ++i) {
      const VectorField* X = f.field(w[i]);
      if (!X) throw Error("unknown field '" + w[i] + "'");
      bool found = false;
      for (std::size_t g = 0; g < r.generators.size(); ++g)
        if (!hit[g] && same_field(r.generators[g], *X)) hit[g] = found = true;
      if (!found) all = false;
    }
    o.pass = all;
    o.detail = "xi = " + render_tuple(r.general.xi) + ", phi = " + render_tuple(r.general.phi) + ", " +
               std::to_string(r.generators.size()) + " generators";
    return o;
  }
  if (kind == "euler") {
    need(w, 3);
    ExprTuple want;
    if (w[2] == "=") {
      want = parse_exprs(after_equals(text), ctx);
    } else {
      for (std::size_t i = 0; i < f.equation_names.size(); ++i)
        if (f.equation_names[i] == w[2]) want.push_back(sys.equations[i]);
      if (want.empty()) throw Error("unknown equation '" + w[2] + "'");
    }
    ExprTuple got = euler_lagrange(f.lagrangian(w[1]), ctx).equations;
    if (want.size() == 1 && got.size() > 1) got.resize(1);
    return compare(got, want);
  }
  if (kind == "variational") {
    need(w, 3);
    bool expect = !(w.size() > 3 && w[3] == "not");
    const Expr& L = f.lagrangian(w[1]);
    VariationalVerdict v;
    if (const VectorField* X = f.field(w[2]))
      v = is_variational_symmetry(L, *X, ctx);
    else
      v = is_variational_symmetry(L, f.evolutionary(w[2]), ctx);
    o.pass = v.holds == expect;
    o.detail = std::string(v.holds ? "variational" : "not variational") + ", residue " + render_tuple(v.residue);
    return o;
  }
  if (kind == "noether") {
    need(w, 4);
    const Expr& L = f.lagrangian(w[1]);
    ConservationLaw cl;
    if (const VectorField* X = f.field(w[2]))
      cl = noether(L, *X, ctx);
    else
      cl = noether(L, f.evolutionary(w[2]), ctx);
    return law_match(cl, f.law(w[3]), sys, ctx);
  }
  if (kind == "cl") {
    need(w, 3);
    const ConservationLaw& cl = f.law(w[1]);
    LawVerdict v;
    if (w[2] == "identity") {
      v = verify_cl(cl, sys, VerifyMode::Identity, ctx);
      o.pass = v.holds;
    } else if (w[2] == "on-solutions") {
      v = verify_cl(cl, sys, VerifyMode::OnSolutions, ctx);
      o.pass = v.holds;
    } else if (w[2] == "fails") {
      v = verify_cl_best(cl, sys, ctx);
      o.pass = !v.holds;
    } else {
      throw Error("unknown verification mode '" + w[2] + "'");
    }
    o.detail = std::string(verification_name(v.level)) + ", residue " + render(v.residue);
    return o;
  }
  if (kind == "formal") {
    return compare({formal_lagrangian(sys, ctx)}, parse_exprs(after_equals(text), ctx));
  }
  if (kind == "adjoint") {
    ExprTuple got = adjoint_system(sys, ctx);
    ExprTuple cross = frechet_adjoint(sys.equations, [&] {
      ExprTuple v;
      for (int a = 0; a < ctx.q(); ++a) v.push_back(ctx.v(a));
      return v;
    }(), ctx);
    o = compare(got, parse_exprs(after_equals(text), ctx));
    if (got != cross) {
      o.pass = false;
      o.detail += "; Frechet adjoint disagrees: " + render_tuple(cross);
    }
    return o;
  }
  if (kind == "self-adjoint") {
    need(w, 3);
    SelfAdjointVerdict v = check_self_adjoint(sys, f.sub(w[1]), ctx);
    o.pass = v.holds && self_adjoint_kind_name(v.kind) == w[2];
    o.detail = std::string(v.holds ? "self-adjoint (" : "not self-adjoint (") + self_adjoint_kind_name(v.kind) +
               "), residue " + render_tuple(v.residue);
    return o;
  }
  if (kind == "extend") {
    need(w, 3);
    return compare(extend_characteristic(sys, f.evolutionary(w[1]), ctx), parse_exprs(after_equals(text), ctx));
  }
  if (kind == "adjoint-cl") {
    need(w, 4);
    AdjointRoute route = AdjointRoute::Auto;
    if (w.size() > 4) {
      if (w[4] == "remark")
        route = AdjointRoute::Remark;
      else if (w[4] == "theorem")
        route = AdjointRoute::Theorem;
      else
        throw Error("unknown route '" + w[4] + "'");
    }
    AdjointLaw a = adjoint_cl(sys, f.evolutionary(w[1]), f.sub(w[2]), ctx, route);
    return law_match(a.law, f.law(w[3]), sys, ctx);
  }
  if (kind == "numeric") {
    need(w, 3);
    double tol = std::stod(w[2]);
    const ConservationLaw& cl = f.law(w[1]);
    const std::uint64_t seed = 42;
    LatticeState s0 = random_state(20, lattice_orders(sys, ctx), seed);
    Trajectory tr = integrate(sys, s0, 1e-3, 1000, ctx);
    NumericReport r = check_cl_numeric(cl, sys, tr, ctx);
    o.pass = r.max_density_drift < tol && r.pointwise_divergence_residual < 1e-10;
    std::ostringstream d;
    d << "drift " << r.max_density_drift << ", residual " << r.pointwise_divergence_residual;
    o.detail = d.str();
    return o;
  }
  throw Error("unknown check '" + kind + "'");
}

}  // namespace

CheckOutcome run_check(const SystemFile& file, const Check& check) {
  CheckOutcome o;
  try {
    o = dispatch(file, check.text);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("error: ") + e.what();
  }
  o.text = check.text;
  return o;
}

std::vector<CheckOutcome> run_checks(const SystemFile& file) {
  std::vector<CheckOutcome> out;
  for (const auto& c : file.checks) out.push_back(run_check(file, c));
  return out;
}

bool FixtureReport::pass() const {
  if (!error.empty()) return false;
  return std::all_of(outcomes.begin(), outcomes.end(), [](const CheckOutcome& o) { return o.pass; });
}

std::vector<FixtureReport> run_corpus(const std::string& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".dde") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<std::future<FixtureReport>> jobs;
  for (const auto& p : files) {
    jobs.push_back(std::async(std::launch::async, [p] {
      FixtureReport r;
      r.fixture = p.filename().string();
      try {
        r.outcomes = run_checks(load_system_file(p.string()));
      } catch (const std::exception& e) {
        r.error = e.what();
      }
      return r;
    }));
  }
  std::vector<FixtureReport> out;
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

}  // namespace ddn
