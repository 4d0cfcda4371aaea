#include <algorithm>
#include <map>
#include <set>

#include "ddnoether/symmetry.hpp"

namespace ddn {

namespace {

Expr placeholder(int i) { return Expr::symbol("%" + std::to_string(i)); }

// Replaces every application name(args) (with any derivative index) of a
// function of `arity` arguments by body(args), body written in placeholders.
Expr replace_function(const Expr& e, const std::string& name, std::size_t arity, const Expr& body) {
  return map_kernels(e, [&](const Kernel* k) -> std::optional<Expr> {
    if (k->kind != KernelKind::Function || k->name != name || k->args.size() != arity) return std::nullopt;
    Expr b = body;
    for (std::size_t i = 0; i < arity; ++i)
      for (int d = 0; d < k->deriv[i]; ++d) b = partial(b, placeholder(static_cast<int>(i)));
    return map_leaves(b, [&](const Kernel* leaf) -> std::optional<Expr> {
      if (leaf->kind != KernelKind::Symbol || leaf->name.empty() || leaf->name[0] != '%') return std::nullopt;
      std::size_t i = std::stoul(leaf->name.substr(1));
      if (i >= arity) return std::nullopt;
      return k->args[i];
    });
  });
}

bool contains_unknown(const Expr& e, const std::set<std::string>& names) {
  bool found = false;
  map_kernels(e, [&](const Kernel* k) -> std::optional<Expr> {
    if (k->kind == KernelKind::Function && names.count(k->name)) found = true;
    return std::nullopt;
  });
  return found;
}

// Unknown function applications occurring in e.
std::vector<const Kernel*> unknown_kernels(const Expr& e, const std::set<std::string>& names) {
  std::vector<const Kernel*> out;
  map_kernels(e, [&](const Kernel* k) -> std::optional<Expr> {
    if (k->kind == KernelKind::Function && names.count(k->name) &&
        std::find(out.begin(), out.end(), k) == out.end())
      out.push_back(k);
    return std::nullopt;
  });
  return out;
}

std::optional<int> offset_from(const Expr& arg, const Expr& base) {
  auto c = (arg - base).constant();
  if (!c || c->get_den() != 1) return std::nullopt;
  return static_cast<int>(c->get_num().get_si());
}

Expr numerator_of(const Expr& e) { return Expr::from_poly(e.numerator()); }

// Groups the numerator terms of e by the part of their monomial selected by
// `split`; returns the coefficient of each group.
std::vector<Expr> split_terms(const Expr& e, const std::function<bool(const Kernel*)>& split) {
  std::map<Monomial, Poly, decltype([](const Monomial& a, const Monomial& b) { return compare(a, b) < 0; })> groups;
  for (const auto& t : e.numerator().terms) {
    Monomial key, rest;
    for (const auto& f : t.mono) (split(f.first) ? key : rest).push_back(f);
    groups[key].terms.push_back(Term{rest, t.coef});
  }
  std::vector<Expr> out;
  for (auto& [k, p] : groups) {
    Expr c = Expr::from_poly(std::move(p));
    if (!c.is_zero()) out.push_back(c);
  }
  return out;
}

Expr substitute_symbols(const Expr& e, const std::map<std::string, Expr>& values) {
  if (values.empty()) return e;
  return map_leaves(e, [&](const Kernel* k) -> std::optional<Expr> {
    if (k->kind != KernelKind::Symbol) return std::nullopt;
    auto it = values.find(k->name);
    if (it == values.end()) return std::nullopt;
    return it->second;
  });
}

// g(n + k) -> S^k value for every solved function of n.
Expr substitute_functions_of_n(const Expr& e, const std::map<std::string, Expr>& values, const Context& ctx) {
  if (values.empty()) return e;
  Expr n = ctx.n(0);
  return map_kernels(e, [&](const Kernel* k) -> std::optional<Expr> {
    if (k->kind != KernelKind::Function || k->args.size() != 1) return std::nullopt;
    auto it = values.find(k->name);
    if (it == values.end()) return std::nullopt;
    if (k->deriv[0] != 0) throw Error("cannot split: derivative of a function of a discrete variable");
    auto off = offset_from(k->args[0], n);
    if (!off) throw Error("cannot split: unshifted unknowns entangled");
    return shift(it->second, 0, *off, ctx);
  });
}

}  // namespace

VectorField point_ansatz(const Context& ctx) {
  if (ctx.p1() != 1 || ctx.p2() != 1 || ctx.q() != 1) throw Error("pre violated: not first-order scalar");
  std::vector<Expr> args{ctx.x(0), ctx.n(0), ctx.u(0)};
  VectorField X;
  X.xi.push_back(Expr::function("xi", args));
  X.phi.push_back(Expr::function("phi", args));
  X.kind = FieldKind::Point;
  return X;
}

namespace {

void check_first_order_scalar(const DDESystem& sys, const Context& ctx) {
  bool ok = ctx.p1() == 1 && ctx.p2() == 1 && ctx.q() == 1 && sys.equations.size() == 1 && sys.solved_forms.size() == 1;
  if (ok) {
    const SolvedForm& f = sys.solved_forms[0];
    ok = f.lead.ns == Namespace::Dependent && f.lead.deriv == std::vector<int>{1} && f.lead.shift == std::vector<int>{0};
    if (ok)
      for (const JetAtom& a : jet_atoms(f.rhs))
        if (a.deriv[0] != 0 || a.ns != Namespace::Dependent) ok = false;
  }
  if (!ok) throw Error("pre violated: not first-order scalar");
}

// A condition c * g = 0 with g a single unknown application.
const Kernel* structural_unknown(const Expr& c, const std::set<std::string>& names) {
  if (c.numerator().terms.size() != 1) return nullptr;
  for (const auto& [k, m] : c.denominator())
    if (contains_unknown(Expr::from_poly(k->poly), names)) return nullptr;
  const Kernel* found = nullptr;
  for (const auto& [k, d] : c.numerator().terms[0].mono) {
    if (k->kind == KernelKind::Function && names.count(k->name)) {
      if (found || !(d == Degree(1))) return nullptr;
      found = k;
    } else if (contains_unknown(Expr::from_poly(Poly{{Term{{{k, Degree(1)}}, Rational(1)}}}), names)) {
      return nullptr;
    }
  }
  return found;
}

}  // namespace

DeterminingSystem determining_equations(const DDESystem& sys, const VectorField& ansatz, const Context& ctx) {
  check_first_order_scalar(sys, ctx);
  DeterminingSystem det;
  det.ansatz = ansatz;
  for (const auto& e : ansatz.xi)
    map_kernels(e, [&](const Kernel* k) -> std::optional<Expr> {
      if (k->kind == KernelKind::Function) det.xi_functions.push_back(k->name);
      return std::nullopt;
    });
  for (const auto& e : ansatz.phi)
    map_kernels(e, [&](const Kernel* k) -> std::optional<Expr> {
      if (k->kind == KernelKind::Function) det.phi_functions.push_back(k->name);
      return std::nullopt;
    });
  auto unknown_set = [&] {
    std::set<std::string> s(det.xi_functions.begin(), det.xi_functions.end());
    s.insert(det.phi_functions.begin(), det.phi_functions.end());
    return s;
  };
  Expr R;
  for (int round = 0; round < 16; ++round) {
    R = reduce_mod(prolong_apply(det.ansatz, sys.equations[0], ProlongationMode::CaseI, ctx), sys, ctx);
    std::set<std::string> names = unknown_set();
    std::vector<JetAtom> shifted;
    for (const JetAtom& a : jet_atoms(R))
      if (a.shift[0] != 0) shifted.push_back(a);
    std::vector<Expr> candidates;
    for (std::size_t i = 0; i < shifted.size(); ++i)
      for (std::size_t j = i + 1; j < shifted.size(); ++j)
        candidates.push_back(partial(partial(R, ctx.jet(shifted[i])), ctx.jet(shifted[j])));
    for (const auto& a : shifted) candidates.push_back(partial(partial(R, ctx.jet(a)), ctx.jet(a)));
    bool progressed = false;
    for (const auto& c : candidates) {
      if (c.is_zero()) continue;
      const Kernel* g = structural_unknown(c, names);
      if (!g || g->args.size() != 3) continue;
      if (g->deriv[0] != 0 || g->deriv[1] != 0 || g->deriv[2] == 0) continue;
      int order = g->deriv[2];
      bool from_xi = std::count(det.xi_functions.begin(), det.xi_functions.end(), g->name) > 0;
      Expr body;
      std::vector<std::string> fresh;
      std::vector<Expr> args2{placeholder(0), placeholder(1)};
      if (order == 1) {
        fresh.push_back(g->name);
        body = Expr::function(g->name, args2);
      } else {
        for (int p = 0; p < order; ++p) {
          std::string nm;
          if (order == 2 && g->name == "phi")
            nm = p == 1 ? "a" : "b";
          else
            nm = g->name + std::to_string(p);
          fresh.push_back(nm);
          body += Expr::function(nm, args2) * pow(placeholder(2), static_cast<long>(p));
        }
      }
      det.steps.push_back(render(c) + " = 0");
      std::string dropped = g->name;
      for (auto& e : det.ansatz.xi) e = replace_function(e, dropped, 3, body);
      for (auto& e : det.ansatz.phi) e = replace_function(e, dropped, 3, body);
      auto& list = from_xi ? det.xi_functions : det.phi_functions;
      list.erase(std::remove(list.begin(), list.end(), dropped), list.end());
      list.insert(list.end(), fresh.begin(), fresh.end());
      progressed = true;
      break;
    }
    if (!progressed) break;
  }
  std::set<std::string> names = unknown_set();
  for (const Expr& c : split_terms(numerator_of(R), [&](const Kernel* k) {
         if (k->kind == KernelKind::Jet) return true;
         if (k->kind == KernelKind::Function && names.count(k->name)) {
           for (const Kernel* leaf : k->leaves)
             if (leaf->kind == KernelKind::Jet) throw Error("cannot split: unshifted unknowns entangled");
           return false;
         }
         for (const Kernel* leaf : k->leaves)
           if (leaf->kind == KernelKind::Jet) return true;
         return false;
       })) {
    Expr monic = c / Expr(c.numerator().terms[0].coef);
    if (std::find(det.split.begin(), det.split.end(), monic) == det.split.end()) det.split.push_back(monic);
  }
  return det;
}

CarrierAnsatz default_carrier_ansatz(const DeterminingSystem& det, const Context& ctx) {
  CarrierAnsatz A;
  Expr t = ctx.x(0), par = ctx.parity(0);
  for (const auto& f : det.xi_functions) {
    std::string f0 = f + "0", f1 = f + "1";
    A.bodies[f] = Expr::function(f0, {ctx.n(0)}) + Expr::function(f1, {ctx.n(0)}) * t;
    A.functions_of_n.push_back(f0);
    A.functions_of_n.push_back(f1);
  }
  for (const auto& f : det.phi_functions) {
    std::string c0 = f + "0", c1 = f + "1", c2 = f + "2";
    A.bodies[f] = Expr::symbol(c0) + Expr::symbol(c1) * par + Expr::symbol(c2) * t;
    A.constants.insert(A.constants.end(), {c0, c1, c2});
  }
  return A;
}

Expr apply_carrier_ansatz(const Expr& e, const CarrierAnsatz& A, const Context& ctx) {
  Expr t = ctx.x(0), n = ctx.n(0);
  return map_kernels(e, [&](const Kernel* k) -> std::optional<Expr> {
    if (k->kind != KernelKind::Function || k->args.size() != 2) return std::nullopt;
    auto it = A.bodies.find(k->name);
    if (it == A.bodies.end()) return std::nullopt;
    if (k->args[0] != t) throw Error("cannot split: unknown evaluated away from t");
    if (k->deriv[1] != 0) throw Error("cannot split: derivative along a discrete argument");
    auto off = offset_from(k->args[1], n);
    if (!off) throw Error("cannot split: unshifted unknowns entangled");
    Expr b = it->second;
    for (int d = 0; d < k->deriv[0]; ++d) b = partial(b, t);
    return shift(b, 0, *off, ctx);
  });
}

namespace {

struct LinearRow {
  std::map<int, Rational> coef;
  Rational rhs;
};

}  // namespace

LinearSolution solve_linear_ansatz(const ExprTuple& conditions, const std::vector<std::string>& constants,
                                   const std::vector<std::string>& functions_of_n, const Context& ctx) {
  LinearSolution sol;
  std::set<std::string> fn_names(functions_of_n.begin(), functions_of_n.end());
  std::map<std::string, int> col;
  for (std::size_t i = 0; i < constants.size(); ++i) col[constants[i]] = static_cast<int>(i);
  const Kernel* tk = ctx.p1() > 0 ? ctx.x(0).as_kernel() : nullptr;
  const Kernel* nk = ctx.p2() > 0 ? ctx.n(0).as_kernel() : nullptr;
  const Kernel* pk = ctx.p2() > 0 ? ctx.parity(0).as_kernel() : nullptr;

  ExprTuple work;
  for (const auto& c : conditions)
    if (!c.is_zero()) work.push_back(numerator_of(c));

  auto split_t = [&](const Expr& e) -> std::vector<Expr> {
    if (!tk) return {e};
    return split_terms(e, [&](const Kernel* k) { return k == tk; });
  };

  // Solve for unknown functions of n while some piece is linear in an
  // unshifted one with a known coefficient.
  for (int guard = 0; guard < 64; ++guard) {
    bool solved = false;
    for (const auto& w : work) {
      for (const Expr& piece : split_t(w)) {
        auto ks = unknown_kernels(piece, fn_names);
        if (ks.empty()) continue;
        for (const Kernel* g : ks) {
          if (g->args.size() != 1 || g->deriv[0] != 0 || !nk || g->args[0] != ctx.n(0)) continue;
          Expr marker = Expr::symbol("%g");
          Expr swapped = map_kernels(piece, [&](const Kernel* k) -> std::optional<Expr> {
            if (k == g) return marker;
            return std::nullopt;
          });
          Expr coef = partial(swapped, marker);
          if (coef.is_zero() || depends_on(coef, marker.as_kernel()) || contains_unknown(coef, fn_names)) continue;
          Expr rest = swapped - coef * marker;
          Expr value = -rest / coef;
          if (contains_unknown(value, {g->name})) continue;
          std::map<std::string, Expr> one{{g->name, value}};
          for (auto& [nm, v] : sol.function_values) v = substitute_functions_of_n(v, one, ctx);
          sol.function_values[g->name] = value;
          for (auto& x : work) x = numerator_of(substitute_functions_of_n(x, one, ctx));
          solved = true;
          break;
        }
        if (solved) break;
      }
      if (solved) break;
    }
    if (!solved) break;
  }

  // Remaining pieces: linear equations in the constants.
  std::vector<LinearRow> rows;
  for (const auto& w : work) {
    if (w.is_zero()) continue;
    if (contains_unknown(w, fn_names)) {
      sol.unsplit.push_back(w);
      continue;
    }
    auto carrier = [&](const Kernel* k) {
      if (k == tk || k == nk || k == pk) return true;
      return k->kind != KernelKind::Symbol || !col.count(k->name);
    };
    std::map<Monomial, LinearRow, decltype([](const Monomial& a, const Monomial& b) { return compare(a, b) < 0; })>
        groups;
    for (const auto& t : w.numerator().terms) {
      Monomial key;
      int which = -1;
      for (const auto& [k, d] : t.mono) {
        if (carrier(k)) {
          key.emplace_back(k, d);
        } else {
          if (which >= 0 || !(d == Degree(1))) throw Error("nonlinear in unknowns");
          which = col.at(k->name);
        }
      }
      LinearRow& row = groups[key];
      if (which < 0)
        row.rhs -= t.coef;
      else
        row.coef[which] += t.coef;
    }
    for (auto& [k, row] : groups) {
      for (auto it = row.coef.begin(); it != row.coef.end();)
        it = it->second == 0 ? row.coef.erase(it) : std::next(it);
      if (row.coef.empty() && row.rhs == 0) continue;
      rows.push_back(std::move(row));
    }
  }

  // Reduced row echelon form over Q.
  std::vector<int> pivot_of_row;
  std::size_t r = 0;
  for (int c = 0; c < static_cast<int>(constants.size()); ++c) {
    std::size_t p = r;
    while (p < rows.size() && !rows[p].coef.count(c)) ++p;
    if (p == rows.size()) continue;
    std::swap(rows[r], rows[p]);
    Rational inv = 1 / rows[r].coef[c];
    for (auto& [k, v] : rows[r].coef) v *= inv;
    rows[r].rhs *= inv;
    for (std::size_t o = 0; o < rows.size(); ++o) {
      if (o == r || !rows[o].coef.count(c)) continue;
      Rational f = rows[o].coef[c];
      for (const auto& [k, v] : rows[r].coef) rows[o].coef[k] -= f * v;
      rows[o].rhs -= f * rows[r].rhs;
      for (auto it = rows[o].coef.begin(); it != rows[o].coef.end();)
        it = it->second == 0 ? rows[o].coef.erase(it) : std::next(it);
    }
    pivot_of_row.push_back(c);
    ++r;
  }
  for (std::size_t o = r; o < rows.size(); ++o)
    if (rows[o].coef.empty() && rows[o].rhs != 0) sol.consistent = false;
  if (!sol.consistent) return sol;
  std::set<int> pivots(pivot_of_row.begin(), pivot_of_row.end());
  for (std::size_t c = 0; c < constants.size(); ++c)
    if (!pivots.count(static_cast<int>(c))) sol.free_constants.push_back(constants[c]);
  for (std::size_t i = 0; i < pivot_of_row.size(); ++i) {
    Expr v(rows[i].rhs);
    for (const auto& [k, coef] : rows[i].coef)
      if (k != pivot_of_row[i]) v -= Expr(coef) * Expr::symbol(constants[static_cast<std::size_t>(k)]);
    sol.constant_values[constants[static_cast<std::size_t>(pivot_of_row[i])]] = v;
  }
  for (auto& [nm, v] : sol.function_values) v = substitute_symbols(v, sol.constant_values);
  for (auto& u : sol.unsplit) u = substitute_symbols(u, sol.constant_values);
  for (const auto& f : functions_of_n)
    if (!sol.function_values.count(f)) sol.free_functions.push_back(f);
  return sol;
}

Expr apply_solution(const Expr& e, const LinearSolution& sol, const Context& ctx) {
  return substitute_symbols(substitute_functions_of_n(e, sol.function_values, ctx), sol.constant_values);
}

PointSymmetryResult solve_point_symmetries(const DDESystem& sys, const Context& ctx) {
  check_first_order_scalar(sys, ctx);
  PointSymmetryResult res;
  res.determining = determining_equations(sys, point_ansatz(ctx), ctx);
  CarrierAnsatz A = default_carrier_ansatz(res.determining, ctx);
  ExprTuple conds;
  for (const auto& c : res.determining.split) conds.push_back(apply_carrier_ansatz(c, A, ctx));
  res.solution = solve_linear_ansatz(conds, A.constants, A.functions_of_n, ctx);
  if (!res.solution.consistent) return res;
  if (!res.solution.unsplit.empty()) throw Error("cannot split: unshifted unknowns entangled");

  // c1..ck for the free constants, then c_{k+1}(n), ... for free functions.
  std::map<std::string, Expr> rename_const;
  std::map<std::string, std::string> rename_fn;
  int next = 1;
  for (const auto& c : res.solution.free_constants) {
    std::string nm = "c" + std::to_string(next++);
    rename_const[c] = Expr::symbol(nm);
    res.parameters.push_back(nm);
  }
  for (const auto& f : res.solution.free_functions) {
    std::string nm = "c" + std::to_string(next++);
    rename_fn[f] = nm;
    res.parameters.push_back(nm + "(" + ctx.discrete[0] + ")");
  }
  auto finish = [&](const Expr& e) {
    Expr r = apply_solution(apply_carrier_ansatz(e, A, ctx), res.solution, ctx);
    r = substitute_symbols(r, rename_const);
    return map_kernels(r, [&](const Kernel* k) -> std::optional<Expr> {
      if (k->kind != KernelKind::Function) return std::nullopt;
      auto it = rename_fn.find(k->name);
      if (it == rename_fn.end()) return std::nullopt;
      return Expr::function(it->second, k->args, k->deriv);
    });
  };
  res.general.kind = FieldKind::Point;
  for (const auto& e : res.determining.ansatz.xi) res.general.xi.push_back(finish(e));
  for (const auto& e : res.determining.ansatz.phi) res.general.phi.push_back(finish(e));

  auto specialize = [&](std::size_t which) {
    std::map<std::string, Expr> cv;
    std::set<std::string> zero_fn;
    for (std::size_t i = 0; i < res.solution.free_constants.size(); ++i)
      cv["c" + std::to_string(i + 1)] = Expr(i == which ? 1 : 0);
    std::size_t nc = res.solution.free_constants.size();
    for (std::size_t i = 0; i < res.solution.free_functions.size(); ++i)
      if (nc + i != which) zero_fn.insert("c" + std::to_string(nc + i + 1));
    auto one = [&](const Expr& e) {
      Expr r = substitute_symbols(e, cv);
      return map_kernels(r, [&](const Kernel* k) -> std::optional<Expr> {
        if (k->kind == KernelKind::Function && zero_fn.count(k->name)) return Expr();
        return std::nullopt;
      });
    };
    VectorField X;
    for (const auto& e : res.general.xi) X.xi.push_back(one(e));
    for (const auto& e : res.general.phi) X.phi.push_back(one(e));
    X.kind = classify(X);
    return X;
  };
  for (std::size_t i = 0; i < res.parameters.size(); ++i) res.generators.push_back(specialize(i));
  return res;
}

}  // namespace ddn
