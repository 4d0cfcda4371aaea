#include "ddnoether/symmetry.hpp"

#include <algorithm>
#include <map>

namespace ddn {

const char* mode_name(ProlongationMode m) {
  switch (m) {
    case ProlongationMode::CaseI:
      return "case-I";
    case ProlongationMode::CaseII:
      return "case-II";
    case ProlongationMode::Regular:
      return "regular";
  }
  return "?";
}

namespace {

bool depends_on_lattice_or_jets(const Expr& e) {
  for (const Kernel* k : leaves(e))
    if (k->kind == KernelKind::Jet || k->kind == KernelKind::Discrete || k->kind == KernelKind::Parity) return true;
  return false;
}

JetAtom bumped(const JetAtom& a, int i) {
  JetAtom b = a;
  ++b.deriv[static_cast<std::size_t>(i)];
  return b;
}

std::vector<int> zeros(int n) { return std::vector<int>(static_cast<std::size_t>(n), 0); }

}  // namespace

SolvedForm make_solved_form(const JetAtom& lead, const Expr& rhs, int equation, const Context& ctx) {
  SolvedForm f{lead, rhs, std::vector<char>(static_cast<std::size_t>(ctx.p2()), '*'), equation};
  std::vector<JetAtom> cls;
  for (const JetAtom& a : jet_atoms(rhs)) {
    if (a.ns != lead.ns || a.dep != lead.dep) continue;
    bool above = true;
    for (std::size_t i = 0; i < a.deriv.size(); ++i)
      if (a.deriv[i] < lead.deriv[i]) above = false;
    if (!above) continue;
    if (a == lead) throw Error("solved form rhs contains its lead " + render(ctx.jet(lead)));
    cls.push_back(a);
  }
  if (cls.empty()) return f;
  for (std::size_t j = 0; j < f.cone.size(); ++j) {
    int lo = lead.shift[j], hi = lead.shift[j];
    for (const auto& a : cls) {
      lo = std::min(lo, a.shift[j]);
      hi = std::max(hi, a.shift[j]);
    }
    if (lo == hi) continue;
    if (lead.shift[j] == hi)
      f.cone[j] = '+';
    else if (lead.shift[j] == lo)
      f.cone[j] = '-';
    else
      throw Error("solved form lead " + render(ctx.jet(lead)) + " is not extreme along " + ctx.discrete[j]);
  }
  // When some component is unrestricted, the other atoms of the class must be
  // separated from the lead along a restricted one.
  for (const auto& a : cls) {
    bool separated = false;
    for (std::size_t j = 0; j < f.cone.size(); ++j) {
      int m = a.shift[j] - lead.shift[j];
      if ((f.cone[j] == '+' && m < 0) || (f.cone[j] == '-' && m > 0)) separated = true;
    }
    if (!separated) throw Error("solved form for " + render(ctx.jet(lead)) + " does not terminate");
  }
  return f;
}

bool is_point_field(const VectorField& X) {
  auto ok = [](const Expr& e) {
    for (const JetAtom& a : jet_atoms(e)) {
      for (int d : a.deriv)
        if (d) return false;
      for (int s : a.shift)
        if (s) return false;
    }
    return true;
  };
  for (const auto& e : X.xi)
    if (!ok(e)) return false;
  for (const auto& e : X.phi)
    if (!ok(e)) return false;
  return true;
}

bool is_regular_field(const VectorField& X) {
  for (const auto& e : X.xi)
    if (depends_on_lattice_or_jets(e)) return false;
  return true;
}

FieldKind classify(const VectorField& X) {
  if (is_regular_field(X)) return FieldKind::Regular;
  if (is_point_field(X)) return FieldKind::Point;
  return FieldKind::Generalized;
}

EvolutionaryField to_evolutionary(const VectorField& X, const Context& ctx) {
  if (!is_regular_field(X)) throw Error("not regular: \xce\xbe depends on n or [u]");
  EvolutionaryField out;
  for (int a = 0; a < ctx.q(); ++a) {
    Expr Q = X.phi[static_cast<std::size_t>(a)];
    for (int i = 0; i < ctx.p1(); ++i) {
      JetAtom d = ctx.atom(a);
      ++d.deriv[static_cast<std::size_t>(i)];
      Q -= X.xi[static_cast<std::size_t>(i)] * ctx.jet(d);
    }
    out.Q.push_back(Q);
  }
  return out;
}

Expr prolongation_coefficient(const VectorField& X, const JetAtom& a, ProlongationMode mode, const Context& ctx) {
  if (a.ns != Namespace::Dependent) return Expr();
  const Expr& phi = X.phi[static_cast<std::size_t>(a.dep)];
  Expr r;
  switch (mode) {
    case ProlongationMode::CaseI: {
      // D_{J1} Q_{J2} + xi^i u_{J1+1_i;J2}, Q_{J2} = S_{J2} phi - xi^i u_{1_i;J2}
      JetAtom base = a;
      base.deriv = zeros(ctx.p1());
      Expr QJ = shift(phi, a.shift, ctx);
      for (int i = 0; i < ctx.p1(); ++i) QJ -= X.xi[static_cast<std::size_t>(i)] * ctx.jet(bumped(base, i));
      r = total_derivative(QJ, a.deriv, ctx);
      for (int i = 0; i < ctx.p1(); ++i) r += X.xi[static_cast<std::size_t>(i)] * ctx.jet(bumped(a, i));
      return r;
    }
    case ProlongationMode::Regular:
      if (!is_regular_field(X)) throw Error("not regular: \xce\xbe depends on n or [u]");
      [[fallthrough]];
    case ProlongationMode::CaseII: {
      // D_{J1} S_{J2} Q + (S_{J2} xi^i) u_{J1+1_i;J2}
      Expr Q = phi;
      JetAtom u0 = ctx.atom(a.dep);
      for (int i = 0; i < ctx.p1(); ++i) Q -= X.xi[static_cast<std::size_t>(i)] * ctx.jet(bumped(u0, i));
      r = apply_jet(Q, a, ctx);
      for (int i = 0; i < ctx.p1(); ++i)
        r += shift(X.xi[static_cast<std::size_t>(i)], a.shift, ctx) * ctx.jet(bumped(a, i));
      return r;
    }
  }
  return r;
}

Expr prolong_apply(const VectorField& X, const Expr& e, ProlongationMode mode, const Context& ctx) {
  if (static_cast<int>(X.xi.size()) != ctx.p1() || static_cast<int>(X.phi.size()) != ctx.q())
    throw Error("vector field arity mismatch");
  Expr r;
  for (int i = 0; i < ctx.p1(); ++i) {
    const Expr& xi = X.xi[static_cast<std::size_t>(i)];
    if (!xi.is_zero()) r += xi * partial(e, ctx.x(i));
  }
  for (const Kernel* k : leaves(e)) {
    if (k->kind != KernelKind::Jet || k->ns != Namespace::Dependent) continue;
    r += prolongation_coefficient(X, k->atom(), mode, ctx) * partial(e, k);
  }
  return r;
}

Expr prolong_apply(const EvolutionaryField& X, const Expr& e, const Context& ctx) {
  if (static_cast<int>(X.Q.size()) != ctx.q()) throw Error("characteristic arity mismatch");
  Expr r;
  for (const Kernel* k : leaves(e)) {
    if (k->kind != KernelKind::Jet) continue;
    const ExprTuple& src = k->ns == Namespace::Dependent ? X.Q : X.Q_aux;
    if (src.empty()) continue;
    r += apply_jet(src[static_cast<std::size_t>(k->index)], k->atom(), ctx) * partial(e, k);
  }
  return r;
}

// ------------------------------------------------------------ reduction

namespace {

struct Match {
  const SolvedForm* form = nullptr;
  std::vector<int> K;  // derivative extension
  std::vector<int> M;  // shift extension
};

std::optional<Match> match_atom(const JetAtom& a, const DDESystem& sys) {
  for (const auto& f : sys.solved_forms) {
    if (a.ns != f.lead.ns || a.dep != f.lead.dep) continue;
    Match m;
    m.form = &f;
    bool ok = true;
    for (std::size_t i = 0; i < a.deriv.size() && ok; ++i) {
      int k = a.deriv[i] - f.lead.deriv[i];
      if (k < 0) ok = false;
      m.K.push_back(k);
    }
    for (std::size_t j = 0; j < a.shift.size() && ok; ++j) {
      int s = a.shift[j] - f.lead.shift[j];
      if ((f.cone[j] == '+' && s < 0) || (f.cone[j] == '-' && s > 0)) ok = false;
      m.M.push_back(s);
    }
    if (ok) return m;
  }
  return std::nullopt;
}

class Reducer {
 public:
  Reducer(const DDESystem& sys, const Context& ctx, int cap) : sys_(sys), ctx_(ctx), cap_(cap) {}

  Expr expr(const Expr& e, int depth) {
    return map_leaves(e, [&](const Kernel* k) -> std::optional<Expr> {
      if (k->kind != KernelKind::Jet) return std::nullopt;
      JetAtom a = k->atom();
      if (!match_atom(a, sys_)) return std::nullopt;
      return atom(a, depth);
    });
  }

  Expr atom(const JetAtom& a, int depth) {
    if (depth > cap_) throw Error("reduction did not terminate");
    auto it = memo_.find(a);
    if (it != memo_.end()) return it->second;
    auto m = match_atom(a, sys_);
    if (!m) return ctx_.jet(a);
    Expr r;
    std::size_t i = 0;
    while (i < m->K.size() && m->K[i] == 0) ++i;
    if (i < m->K.size()) {
      JetAtom prev = a;
      --prev.deriv[i];
      r = expr(total_derivative(atom(prev, depth + 1), static_cast<int>(i), ctx_), depth + 1);
    } else {
      r = expr(shift(m->form->rhs, m->M, ctx_), depth + 1);
    }
    memo_.emplace(a, r);
    return r;
  }

 private:
  const DDESystem& sys_;
  const Context& ctx_;
  int cap_;
  std::map<JetAtom, Expr> memo_;
};

}  // namespace

bool is_eliminable(const JetAtom& a, const DDESystem& sys) { return match_atom(a, sys).has_value(); }

Expr reduce_mod(const Expr& e, const DDESystem& sys, const Context& ctx, int depth_cap) {
  if (sys.solved_forms.empty()) throw Error("missing solved form");
  Reducer r(sys, ctx, depth_cap);
  return r.expr(e, 0);
}

SymmetryVerdict check_symmetry(const DDESystem& sys, const VectorField& X, ProlongationMode mode, const Context& ctx) {
  SymmetryVerdict v{true, {}};
  for (const auto& F : sys.equations) {
    Expr r = reduce_mod(prolong_apply(X, F, mode, ctx), sys, ctx);
    if (!r.is_zero()) v.holds = false;
    v.residue.push_back(r);
  }
  return v;
}

SymmetryVerdict check_symmetry(const DDESystem& sys, const EvolutionaryField& X, const Context& ctx) {
  SymmetryVerdict v{true, {}};
  for (const auto& F : sys.equations) {
    Expr r = reduce_mod(prolong_apply(X, F, ctx), sys, ctx);
    if (!r.is_zero()) v.holds = false;
    v.residue.push_back(r);
  }
  return v;
}

EvolutionaryField lie_bracket(const EvolutionaryField& a, const EvolutionaryField& b, const Context& ctx) {
  EvolutionaryField r;
  for (std::size_t i = 0; i < a.Q.size(); ++i)
    r.Q.push_back(prolong_apply(a, b.Q[i], ctx) - prolong_apply(b, a.Q[i], ctx));
  if (!a.Q_aux.empty() && !b.Q_aux.empty())
    for (std::size_t i = 0; i < a.Q_aux.size(); ++i)
      r.Q_aux.push_back(prolong_apply(a, b.Q_aux[i], ctx) - prolong_apply(b, a.Q_aux[i], ctx));
  return r;
}

// -------------------------------------------------------- decomposition

namespace {

int total(const std::vector<int>& v, bool absolute) {
  int s = 0;
  for (int x : v) s += absolute ? std::abs(x) : x;
  return s;
}

// Elimination order: higher derivative order first, then farther from the
// lead, then the atom order.
bool ranks_higher(const JetAtom& a, const Match& ma, const JetAtom& b, const Match& mb) {
  int da = total(a.deriv, false), db = total(b.deriv, false);
  if (da != db) return da > db;
  int sa = total(ma.M, true), sb = total(mb.M, true);
  if (sa != sb) return sa > sb;
  return a < b;
}

}  // namespace

Decomposition decompose(const Expr& e, const DDESystem& sys, const Context& ctx) {
  if (sys.solved_forms.empty()) throw Error("missing solved form");
  Decomposition out;
  Expr G = e;
  for (int guard = 0; guard < 4096; ++guard) {
    std::optional<JetAtom> best;
    Match bm;
    for (const JetAtom& a : jet_atoms(G)) {
      auto m = match_atom(a, sys);
      if (!m) continue;
      if (!best || ranks_higher(a, *m, *best, bm)) {
        best = a;
        bm = *m;
      }
    }
    if (!best) break;
    const JetAtom& a = *best;
    JetAtom index{Namespace::Dependent, bm.form->equation, bm.K, bm.M};
    const Expr& F = sys.equations[static_cast<std::size_t>(bm.form->equation)];
    Expr T = apply_jet(F, index, ctx);
    Expr ak = ctx.jet(a);
    const Kernel* kk = ak.as_kernel();
    Expr dG = partial(G, kk);
    Expr dT = partial(T, kk);
    Expr K;
    if (!depends_on(dG, kk) && !depends_on(dT, kk) && !dT.is_zero()) {
      K = dG / dT;
      G = G - K * T;
    } else {
      // value of the atom on T = 0
      Expr val;
      if (bm.K == std::vector<int>(bm.K.size(), 0)) {
        val = shift(bm.form->rhs, bm.M, ctx);
      } else {
        if (dT.is_zero() || depends_on(dT, kk)) throw Error("decomposition failed");
        val = ak - T / dT;
      }
      Expr Gs = map_leaves(G, [&](const Kernel* k) -> std::optional<Expr> {
        if (k == kk) return val;
        return std::nullopt;
      });
      K = (G - Gs) / T;
      G = Gs;
    }
    if (depends_on(G, kk)) throw Error("decomposition failed");
    if (!K.is_zero()) {
      bool merged = false;
      for (auto& t : out.terms)
        if (t.index == index) {
          t.K += K;
          merged = true;
        }
      if (!merged) out.terms.push_back({K, index});
    }
  }
  out.remainder = G;
  return out;
}

Expr expand_decomposition(const std::vector<DecompositionTerm>& terms, const DDESystem& sys, const Context& ctx) {
  Expr r;
  for (const auto& t : terms)
    r += t.K * apply_jet(sys.equations[static_cast<std::size_t>(t.index.dep)], t.index, ctx);
  return r;
}

SymmetryDecomposition decompose_symmetry(const DDESystem& sys, const EvolutionaryField& X, const Context& ctx) {
  SymmetryDecomposition out;
  for (const auto& F : sys.equations) {
    Expr G = prolong_apply(X, F, ctx);
    Decomposition d = decompose(G, sys, ctx);
    if (!d.remainder.is_zero()) throw Error("decomposition failed: residue " + render(d.remainder));
    if (!(expand_decomposition(d.terms, sys, ctx) - G).is_zero()) throw Error("decomposition failed");
    out.rows.push_back(std::move(d.terms));
  }
  return out;
}

}  // namespace ddn
