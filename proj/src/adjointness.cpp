#include "ddnoether/adjointness.hpp"

namespace ddn {

namespace {

void require_auxiliary(const Context& ctx) {
  if (static_cast<int>(ctx.auxiliary.size()) != ctx.q()) throw Error("auxiliary variables not declared");
}

// Flux and characteristic of sum K D_{J1} S_{J2} F_beta for an expression
// that vanishes on solutions; the remainder must be zero.
ConservationLaw close_on_system(const DivergencePair& Phat, const DDESystem& sys, const Context& ctx) {
  Expr d = divergence(Phat, ctx);
  Decomposition dec = decompose(d, sys, ctx);
  if (!dec.remainder.is_zero())
    throw Error("divergence does not vanish on solutions: residue " + render(dec.remainder));
  std::vector<ByPartsTerm> terms;
  for (const auto& t : dec.terms) terms.push_back(ByPartsTerm{t.K, t.index.deriv, t.index.shift, t.index.dep});
  ByPartsResult R = by_parts(terms, sys.equations, ctx);

  ConservationLaw cl;
  cl.P = Phat - DivergencePair{R.flux_d, R.flux_s};
  cl.Q = R.characteristic;
  LawVerdict v = verify_cl(cl, sys, VerifyMode::Identity, ctx);
  if (!v.holds) throw Error("adjoint conservation law failed verification: residue " + render(v.residue));
  cl.verified = Verification::ExactIdentity;
  return cl;
}

DivergencePair substitute_pair(const DivergencePair& P, const Substitution& sub, const Context& ctx) {
  DivergencePair out = P;
  for (auto& e : out.p1) e = apply_substitution(e, sub, ctx);
  for (auto& e : out.p2) e = apply_substitution(e, sub, ctx);
  return out;
}

// -R from v . pr_Q F = Q . F* + Div R, so Div(-R) = Q . F* - v . pr_Q F.
DivergencePair remark_flux(const DDESystem& sys, const EvolutionaryField& X, const Context& ctx) {
  std::vector<ByPartsTerm> terms;
  for (std::size_t a = 0; a < sys.equations.size(); ++a) {
    const Expr& F = sys.equations[a];
    Expr va = ctx.v(static_cast<int>(a));
    for (const JetAtom& atom : jet_atoms(F, Namespace::Dependent)) {
      Expr dF = partial(F, ctx.jet(atom));
      terms.push_back(ByPartsTerm{va * dF, atom.deriv, atom.shift, atom.dep});
    }
  }
  ByPartsResult R = by_parts(terms, X.Q, ctx);
  return zero_pair(ctx) - DivergencePair{R.flux_d, R.flux_s};
}

}  // namespace

Expr formal_lagrangian(const DDESystem& sys, const Context& ctx) {
  require_auxiliary(ctx);
  if (static_cast<int>(sys.equations.size()) != ctx.q()) throw Error("formal Lagrangian needs one equation per dependent variable");
  Expr L;
  for (std::size_t a = 0; a < sys.equations.size(); ++a) L += ctx.v(static_cast<int>(a)) * sys.equations[a];
  return L;
}

ExprTuple adjoint_system(const DDESystem& sys, const Context& ctx) {
  Expr L = formal_lagrangian(sys, ctx);
  ExprTuple out;
  for (int a = 0; a < ctx.q(); ++a) out.push_back(euler(L, a, ctx));
  return out;
}

const char* self_adjoint_kind_name(SelfAdjointKind k) {
  switch (k) {
    case SelfAdjointKind::Strict:
      return "strict";
    case SelfAdjointKind::Quasi:
      return "quasi";
    case SelfAdjointKind::Weak:
      return "weak";
  }
  return "?";
}

void validate_substitution(const Substitution& sub, const Context& ctx) {
  require_auxiliary(ctx);
  if (static_cast<int>(sub.f.size()) != ctx.q()) throw Error("substitution arity mismatch");
  for (const auto& f : sub.f)
    if (!jet_atoms(f, Namespace::Auxiliary).empty()) throw Error("substitution binding contains auxiliary atoms");
}

Expr apply_substitution(const Expr& e, const Substitution& sub, const Context& ctx) {
  validate_substitution(sub, ctx);
  return map_leaves(e, [&](const Kernel* k) -> std::optional<Expr> {
    if (k->kind != KernelKind::Jet || k->ns != Namespace::Auxiliary) return std::nullopt;
    return apply_jet(sub.f[k->index], k->atom(), ctx);
  });
}

SelfAdjointKind classify_substitution(const Substitution& sub, const Context& ctx) {
  bool strict = true;
  bool autonomous = true;
  for (std::size_t a = 0; a < sub.f.size(); ++a) {
    if (sub.f[a] != ctx.u(static_cast<int>(a))) strict = false;
    for (const Kernel* k : leaves(sub.f[a]))
      if (k->kind == KernelKind::Continuous || k->kind == KernelKind::Discrete || k->kind == KernelKind::Parity)
        autonomous = false;
  }
  if (strict) return SelfAdjointKind::Strict;
  return autonomous ? SelfAdjointKind::Quasi : SelfAdjointKind::Weak;
}

SelfAdjointVerdict check_self_adjoint(const DDESystem& sys, const Substitution& sub, const Context& ctx) {
  if (sys.solved_forms.empty()) throw Error("missing solved form");
  SelfAdjointVerdict v;
  v.kind = classify_substitution(sub, ctx);
  v.holds = true;
  for (const auto& Fs : adjoint_system(sys, ctx)) {
    Expr r = reduce_mod(apply_substitution(Fs, sub, ctx), sys, ctx);
    if (!r.is_zero()) v.holds = false;
    v.residue.push_back(r);
  }
  return v;
}

std::vector<Substitution> enumerate_substitutions(const DDESystem& sys, const Context& ctx) {
  std::vector<Substitution> found;
  unsigned subsets = 1u << ctx.p2();
  for (int c : {1, -1}) {
    for (unsigned mask = 0; mask < subsets; ++mask) {
      Expr factor(c);
      for (int j = 0; j < ctx.p2(); ++j)
        if (mask & (1u << j)) factor *= ctx.parity(j);
      Substitution sub;
      for (int a = 0; a < ctx.q(); ++a) sub.f.push_back(factor * ctx.u(a));
      if (check_self_adjoint(sys, sub, ctx).holds) found.push_back(std::move(sub));
    }
  }
  return found;
}

ExprTuple extend_characteristic(const DDESystem& sys, const EvolutionaryField& X, const Context& ctx) {
  require_auxiliary(ctx);
  ExprTuple Qs(ctx.q());
  bool trivial = true;
  for (const auto& q : X.Q)
    if (!q.is_zero()) trivial = false;
  if (trivial) return Qs;
  SymmetryDecomposition dec = decompose_symmetry(sys, X, ctx);
  for (std::size_t a = 0; a < dec.rows.size(); ++a) {
    Expr va = ctx.v(static_cast<int>(a));
    for (const auto& t : dec.rows[a]) Qs[t.index.dep] -= adjoint_jet(va * t.K, t.index.deriv, t.index.shift, ctx);
  }
  return Qs;
}

AdjointLaw adjoint_cl(const DDESystem& sys, const EvolutionaryField& X, const Substitution& sub, const Context& ctx,
                      AdjointRoute route) {
  validate_substitution(sub, ctx);
  if (!check_symmetry(sys, X, ctx).holds) throw Error("pre violated: not a symmetry");
  if (!check_self_adjoint(sys, sub, ctx).holds) throw Error("pre violated: not self-adjoint under the substitution");

  AdjointLaw out;
  if (route != AdjointRoute::Theorem) {
    try {
      out.unsubstituted = remark_flux(sys, X, ctx);
      out.law = close_on_system(substitute_pair(out.unsubstituted, sub, ctx), sys, ctx);
      out.route = AdjointRoute::Remark;
      return out;
    } catch (const Error&) {
      if (route == AdjointRoute::Remark) throw;
    }
  }
  EvolutionaryField Y{X.Q, extend_characteristic(sys, X, ctx)};
  ConservationLaw formal = noether(formal_lagrangian(sys, ctx), Y, ctx);
  out.unsubstituted = formal.P;
  out.law = close_on_system(substitute_pair(formal.P, sub, ctx), sys, ctx);
  out.route = AdjointRoute::Theorem;
  return out;
}

}  // namespace ddn
