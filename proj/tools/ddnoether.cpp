#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ddnoether/adjointness.hpp"
#include "ddnoether/checks.hpp"
#include "ddnoether/numeric.hpp"
#include "ddnoether/symmetry.hpp"
#include "ddnoether/sysfile.hpp"
#include "ddnoether/variational.hpp"

#ifndef DDN_CORPUS_DIR
#define DDN_CORPUS_DIR "corpus"
#endif

using namespace ddn;

namespace {

constexpr int kOk = 0;
constexpr int kNegative = 1;
constexpr int kUsage = 2;

// Flat ordered key=value report, optionally emitted as JSON.
class Report {
 public:
  void add(const std::string& key, const std::string& value) { rows_.emplace_back(key, value); }
  void add(const std::string& key, const Expr& e) { add(key, render(e)); }
  void add(const std::string& key, const ExprTuple& v) {
    if (v.size() == 1) {
      add(key, v[0]);
      return;
    }
    for (std::size_t i = 0; i < v.size(); ++i) add(key + "[" + std::to_string(i) + "]", v[i]);
  }
  void add(const std::string& key, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6e", x);
    add(key, std::string(buf));
  }

  void print(bool json) const {
    if (json) {
      nlohmann::ordered_json j = nlohmann::ordered_json::object();
      for (const auto& [k, v] : rows_) j[k] = v;
      std::cout << j.dump(2) << '\n';
      return;
    }
    for (const auto& [k, v] : rows_) std::cout << k << '=' << v << '\n';
  }

 private:
  std::vector<std::pair<std::string, std::string>> rows_;
};

struct Options {
  std::string file;
  std::string field;
  std::string lagrangian;
  std::string sub;
  std::string law;
  std::string mode;
  std::string route = "auto";
  std::string dir = DDN_CORPUS_DIR;
  std::vector<std::string> params;
  int ring = 20;
  double dt = 1e-3;
  double t_end = 1.0;
  std::uint64_t seed = 42;
  bool json = false;
};

EvolutionaryField resolve_field(const SystemFile& f, const std::string& name) { return f.evolutionary(name); }

Substitution resolve_sub(const SystemFile& f, const std::string& text) {
  if (text.find('=') != std::string::npos) return parse_substitution(text, f.ctx);
  return f.sub(text);
}

int cmd_parse(const Options& o) {
  SystemFile f = load_system_file(o.file);
  std::cout << render_system_file(f);
  return kOk;
}

int cmd_check_symmetry(const Options& o, Report& r) {
  SystemFile f = load_system_file(o.file);
  SymmetryVerdict v;
  if (const VectorField* X = f.field(o.field)) {
    ProlongationMode m = ProlongationMode::CaseI;
    if (o.mode == "case-ii") m = ProlongationMode::CaseII;
    if (o.mode == "regular") m = ProlongationMode::Regular;
    if (!o.mode.empty() && o.mode != "case-i" && o.mode != "case-ii" && o.mode != "regular")
      throw CLI::ValidationError("--mode", "expected case-i, case-ii or regular");
    r.add("mode", mode_name(m));
    v = check_symmetry(f.system, *X, m, f.ctx);
  } else {
    v = check_symmetry(f.system, resolve_field(f, o.field), f.ctx);
  }
  r.add("field", o.field);
  r.add("verdict", v.holds ? "symmetry" : "not a symmetry");
  r.add("residue", v.residue);
  return v.holds ? kOk : kNegative;
}

int cmd_solve_point(const Options& o, Report& r) {
  SystemFile f = load_system_file(o.file);
  PointSymmetryResult res = solve_point_symmetries(f.system, f.ctx);
  for (std::size_t i = 0; i < res.determining.steps.size(); ++i)
    r.add("step[" + std::to_string(i) + "]", res.determining.steps[i]);
  for (std::size_t i = 0; i < res.determining.split.size(); ++i)
    r.add("condition[" + std::to_string(i) + "]", res.determining.split[i]);
  r.add("xi", res.general.xi);
  r.add("phi", res.general.phi);
  std::string params;
  for (const auto& p : res.parameters) params += (params.empty() ? "" : ", ") + p;
  r.add("parameters", params);
  for (std::size_t g = 0; g < res.generators.size(); ++g) {
    std::string k = "generator[" + std::to_string(g) + "]";
    r.add(k + ".xi", res.generators[g].xi);
    r.add(k + ".phi", res.generators[g].phi);
  }
  return kOk;
}

void add_law(Report& r, const ConservationLaw& cl) {
  r.add("P1", cl.P.p1);
  r.add("P2", cl.P.p2);
  r.add("Q", cl.Q);
  r.add("verified", verification_name(cl.verified));
}

int cmd_noether(const Options& o, Report& r) {
  SystemFile f = load_system_file(o.file);
  const Expr& L = f.lagrangian(o.lagrangian);
  ConservationLaw cl;
  if (const VectorField* X = f.field(o.field))
    cl = noether(L, *X, f.ctx);
  else
    cl = noether(L, resolve_field(f, o.field), f.ctx);
  add_law(r, cl);
  return kOk;
}

int cmd_check_variational(const Options& o, Report& r) {
  SystemFile f = load_system_file(o.file);
  const Expr& L = f.lagrangian(o.lagrangian);
  VariationalVerdict v;
  if (const VectorField* X = f.field(o.field))
    v = is_variational_symmetry(L, *X, f.ctx);
  else
    v = is_variational_symmetry(L, resolve_field(f, o.field), f.ctx);
  r.add("verdict", v.holds ? "variational" : "not variational");
  r.add("residue", v.residue);
  return v.holds ? kOk : kNegative;
}

int cmd_adjoint(const Options& o, Report& r) {
  SystemFile f = load_system_file(o.file);
  r.add("formal", formal_lagrangian(f.system, f.ctx));
  r.add("adjoint", adjoint_system(f.system, f.ctx));
  return kOk;
}

int cmd_check_self_adjoint(const Options& o, Report& r) {
  SystemFile f = load_system_file(o.file);
  SelfAdjointVerdict v = check_self_adjoint(f.system, resolve_sub(f, o.sub), f.ctx);
  std::string kind = self_adjoint_kind_name(v.kind);
  r.add("verdict", v.holds ? "self-adjoint (" + kind + ")" : "not self-adjoint");
  r.add("residue", v.residue);
  return v.holds ? kOk : kNegative;
}

int cmd_adjoint_cl(const Options& o, Report& r) {
  SystemFile f = load_system_file(o.file);
  AdjointRoute route = AdjointRoute::Auto;
  if (o.route == "remark") route = AdjointRoute::Remark;
  if (o.route == "theorem") route = AdjointRoute::Theorem;
  AdjointLaw a = adjoint_cl(f.system, resolve_field(f, o.field), resolve_sub(f, o.sub), f.ctx, route);
  r.add("route", a.route == AdjointRoute::Remark ? "remark" : "theorem");
  add_law(r, a.law);
  return kOk;
}

int cmd_verify_cl(const Options& o, Report& r) {
  SystemFile f = load_system_file(o.file);
  const ConservationLaw& cl = f.law(o.law);
  LawVerdict v;
  if (o.mode == "identity")
    v = verify_cl(cl, f.system, VerifyMode::Identity, f.ctx);
  else if (o.mode == "on-solutions")
    v = verify_cl(cl, f.system, VerifyMode::OnSolutions, f.ctx);
  else if (o.mode.empty())
    v = verify_cl_best(cl, f.system, f.ctx);
  else
    throw CLI::ValidationError("--mode", "expected identity or on-solutions");
  r.add("law", o.law);
  r.add("verdict", v.holds ? verification_name(v.level) : "fails");
  r.add("residue", v.residue);
  return v.holds ? kOk : kNegative;
}

int cmd_numeric(const Options& o, Report& r) {
  SystemFile f = load_system_file(o.file);
  ParameterValues params;
  for (const auto& p : o.params) {
    auto eq = p.find('=');
    if (eq == std::string::npos) throw CLI::ValidationError("--param", "expected NAME=VALUE");
    params[p.substr(0, eq)] = std::stod(p.substr(eq + 1));
  }
  const ConservationLaw& cl = f.law(o.law);
  int steps = static_cast<int>(o.t_end / o.dt + 0.5);
  LatticeState s0 = random_state(o.ring, lattice_orders(f.system, f.ctx), o.seed);
  Trajectory tr = integrate(f.system, s0, o.dt, steps, f.ctx, params);
  NumericReport rep = check_cl_numeric(cl, f.system, tr, f.ctx, params);
  rep.seed = o.seed;
  r.add("law", o.law);
  r.add("ring", std::to_string(o.ring));
  r.add("dt", o.dt);
  r.add("steps", std::to_string(rep.steps));
  r.add("seed", std::to_string(rep.seed));
  r.add("max_density_drift", rep.max_density_drift);
  r.add("pointwise_divergence_residual", rep.pointwise_divergence_residual);
  return kOk;
}

int cmd_corpus(const Options& o) {
  std::vector<FixtureReport> reports = run_corpus(o.dir);
  if (reports.empty()) {
    std::cerr << "warning: no fixtures in " << o.dir << '\n';
    return kOk;
  }
  bool all = true;
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& rep : reports) {
    all = all && rep.pass();
    if (o.json) {
      nlohmann::ordered_json fx = {{"fixture", rep.fixture}, {"pass", rep.pass()}};
      if (!rep.error.empty()) fx["error"] = rep.error;
      nlohmann::ordered_json rows = nlohmann::ordered_json::array();
      for (const auto& c : rep.outcomes) rows.push_back({{"check", c.text}, {"pass", c.pass}, {"detail", c.detail}});
      fx["checks"] = rows;
      j.push_back(fx);
      continue;
    }
    if (!rep.error.empty()) {
      std::cout << "FAIL " << rep.fixture << ": " << rep.error << '\n';
      continue;
    }
    for (const auto& c : rep.outcomes) {
      std::cout << (c.pass ? "PASS " : "FAIL ") << rep.fixture << ": " << c.text;
      if (!c.pass) std::cout << " -- " << c.detail;
      std::cout << '\n';
    }
  }
  if (o.json) std::cout << j.dump(2) << '\n';
  return all ? kOk : kNegative;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Symmetries and conservation laws of differential-difference equations"};
  app.require_subcommand(1);
  Options o;
  app.add_flag("--json", o.json, "emit reports as JSON");

  auto file_cmd = [&](const char* name, const char* help) {
    CLI::App* c = app.add_subcommand(name, help);
    c->add_option("file", o.file, "system file")->required();
    return c;
  };
  CLI::App* parse_c = file_cmd("parse", "parse a system file and print its canonical form");
  CLI::App* sym_c = file_cmd("check-symmetry", "check a field against the system");
  sym_c->add_option("--field", o.field)->required();
  sym_c->add_option("--mode", o.mode, "case-i, case-ii or regular");
  CLI::App* point_c = file_cmd("solve-point", "classify point symmetries of a first-order scalar equation");
  CLI::App* noether_c = file_cmd("noether", "conservation law from a variational symmetry");
  noether_c->add_option("--lagrangian", o.lagrangian)->required();
  noether_c->add_option("--field", o.field)->required();
  CLI::App* var_c = file_cmd("check-variational", "test the variational symmetry criterion");
  var_c->add_option("--lagrangian", o.lagrangian)->required();
  var_c->add_option("--field", o.field)->required();
  CLI::App* adj_c = file_cmd("adjoint", "formal Lagrangian and adjoint system");
  CLI::App* sa_c = file_cmd("check-self-adjoint", "test self-adjointness under a substitution");
  sa_c->add_option("--sub", o.sub, "substitution name or text such as \"v = -u\"")->required();
  CLI::App* acl_c = file_cmd("adjoint-cl", "conservation law from a symmetry of a self-adjoint system");
  acl_c->add_option("--field", o.field)->required();
  acl_c->add_option("--sub", o.sub)->required();
  acl_c->add_option("--route", o.route, "auto, remark or theorem")
      ->check(CLI::IsMember({"auto", "remark", "theorem"}));
  CLI::App* vcl_c = file_cmd("verify-cl", "verify a conservation law");
  vcl_c->add_option("--cl", o.law)->required();
  vcl_c->add_option("--mode", o.mode, "identity or on-solutions");
  CLI::App* num_c = file_cmd("numeric-verify", "integrate on a ring and measure conservation");
  num_c->add_option("--cl", o.law)->required();
  num_c->add_option("--ring", o.ring)->check(CLI::PositiveNumber);
  num_c->add_option("--dt", o.dt)->check(CLI::PositiveNumber);
  num_c->add_option("--t-end", o.t_end)->check(CLI::NonNegativeNumber);
  num_c->add_option("--seed", o.seed);
  num_c->add_option("--param", o.params, "parameter value NAME=VALUE");
  CLI::App* corpus_c = app.add_subcommand("corpus", "run every bundled fixture");
  corpus_c->add_option("dir", o.dir, "fixture directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  Report r;
  try {
    int code = kOk;
    if (*parse_c) return cmd_parse(o);
    if (*corpus_c) return cmd_corpus(o);
    if (*sym_c) code = cmd_check_symmetry(o, r);
    if (*point_c) code = cmd_solve_point(o, r);
    if (*noether_c) code = cmd_noether(o, r);
    if (*var_c) code = cmd_check_variational(o, r);
    if (*adj_c) code = cmd_adjoint(o, r);
    if (*sa_c) code = cmd_check_self_adjoint(o, r);
    if (*acl_c) code = cmd_adjoint_cl(o, r);
    if (*vcl_c) code = cmd_verify_cl(o, r);
    if (*num_c) code = cmd_numeric(o, r);
    r.print(o.json);
    return code;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kUsage;
  } catch (const CLI::Error& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    r.add("error", e.what());
    r.print(o.json);
    return kNegative;
  }
}
