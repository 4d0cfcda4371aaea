#include "ddnoether/variational.hpp"

#include <map>

namespace ddn {

const char* verification_name(Verification v) {
  switch (v) {
    case Verification::ExactIdentity:
      return "exact-identity";
    case Verification::OnSolutions:
      return "on-solutions";
    case Verification::Unverified:
      return "unverified";
  }
  return "?";
}

DDESystem euler_lagrange(const Expr& L, const Context& ctx) {
  DDESystem sys;
  for (int a = 0; a < ctx.q(); ++a) sys.equations.push_back(euler(L, a, ctx));
  return sys;
}

namespace {

// pr X(L) + L Div xi, written as pr_Q(L) + D_i(xi^i L).
Expr variational_integrand(const Expr& L, const EvolutionaryField& Q, const ExprTuple& xi, const Context& ctx) {
  Expr A = prolong_apply(Q, L, ctx);
  for (std::size_t i = 0; i < xi.size(); ++i)
    if (!xi[i].is_zero()) A += total_derivative(xi[i] * L, static_cast<int>(i), ctx);
  return A;
}

VariationalVerdict euler_check(const Expr& A, const Context& ctx) {
  VariationalVerdict v{true, {}};
  for (const auto& [ns, dep] : jet_variables(ctx)) {
    Expr e = euler(A, dep, ctx, ns);
    if (!e.is_zero()) v.holds = false;
    v.residue.push_back(e);
  }
  return v;
}

ConservationLaw noether_impl(const Expr& L, const EvolutionaryField& X, const ExprTuple& xi, const Context& ctx) {
  Expr A = variational_integrand(L, X, xi, ctx);
  if (!euler_check(A, ctx).holds) throw Error("not a variational symmetry");
  DivergencePair Phat = null_lagrangian_decompose(A, ctx);

  ExprTuple targets = X.Q;
  std::size_t q = X.Q.size();
  for (const auto& e : X.Q_aux) targets.push_back(e);
  std::vector<ByPartsTerm> terms;
  for (const Kernel* k : leaves(L)) {
    if (k->kind != KernelKind::Jet) continue;
    int target = k->index;
    if (k->ns == Namespace::Auxiliary) {
      if (X.Q_aux.empty()) continue;
      target += static_cast<int>(q);
    }
    terms.push_back(ByPartsTerm{partial(L, k), k->deriv, k->shift, target});
  }
  ByPartsResult R = by_parts(terms, targets, ctx);

  ConservationLaw cl;
  cl.P = zero_pair(ctx);
  for (std::size_t i = 0; i < cl.P.p1.size(); ++i) {
    cl.P.p1[i] = Phat.p1[i] - R.flux_d[i];
    if (i < xi.size()) cl.P.p1[i] -= xi[i] * L;
  }
  for (std::size_t j = 0; j < cl.P.p2.size(); ++j) cl.P.p2[j] = Phat.p2[j] - R.flux_s[j];
  cl.Q = targets;

  Expr check = divergence(cl.P, ctx);
  for (std::size_t t = 0; t < targets.size(); ++t) check -= targets[t] * R.characteristic[t];
  if (!check.is_zero()) throw Error("Noether construction failed verification: residue " + render(check));
  cl.verified = Verification::ExactIdentity;
  return cl;
}

}  // namespace

VariationalVerdict is_variational_symmetry(const Expr& L, const VectorField& X, const Context& ctx) {
  return euler_check(variational_integrand(L, to_evolutionary(X, ctx), X.xi, ctx), ctx);
}

VariationalVerdict is_variational_symmetry(const Expr& L, const EvolutionaryField& X, const Context& ctx) {
  return euler_check(variational_integrand(L, X, {}, ctx), ctx);
}

ConservationLaw noether(const Expr& L, const VectorField& X, const Context& ctx) {
  return noether_impl(L, to_evolutionary(X, ctx), X.xi, ctx);
}

ConservationLaw noether(const Expr& L, const EvolutionaryField& X, const Context& ctx) {
  return noether_impl(L, X, {}, ctx);
}

LawVerdict verify_cl(const ConservationLaw& cl, const DDESystem& sys, VerifyMode mode, const Context& ctx) {
  LawVerdict v;
  Expr div = divergence(cl.P, ctx);
  if (mode == VerifyMode::Identity) {
    if (cl.Q.empty()) throw Error("identity check needs a characteristic");
    if (cl.Q.size() != sys.equations.size()) throw Error("characteristic arity mismatch");
    Expr r = div;
    for (std::size_t a = 0; a < cl.Q.size(); ++a) r -= cl.Q[a] * sys.equations[a];
    v.residue = r;
    v.holds = r.is_zero();
    if (v.holds) v.level = Verification::ExactIdentity;
  } else {
    v.residue = reduce_mod(div, sys, ctx);
    v.holds = v.residue.is_zero();
    if (v.holds) v.level = Verification::OnSolutions;
  }
  return v;
}

LawVerdict verify_cl_best(const ConservationLaw& cl, const DDESystem& sys, const Context& ctx) {
  if (cl.Q.empty()) return verify_cl(cl, sys, VerifyMode::OnSolutions, ctx);
  LawVerdict v = verify_cl(cl, sys, VerifyMode::Identity, ctx);
  if (v.holds || sys.solved_forms.empty()) return v;
  LawVerdict w = verify_cl(cl, sys, VerifyMode::OnSolutions, ctx);
  if (w.holds) return w;
  return v;
}

bool equivalent_laws(const DivergencePair& a, const DivergencePair& b, const DDESystem& sys, const Context& ctx) {
  Expr d = divergence(a - b, ctx);
  if (d.is_zero()) return true;
  if (sys.solved_forms.empty()) return false;
  // The difference is trivial iff its characteristic vanishes on solutions.
  Decomposition dec = decompose(d, sys, ctx);
  if (!dec.remainder.is_zero()) return false;
  std::vector<ByPartsTerm> terms;
  for (const auto& t : dec.terms) terms.push_back(ByPartsTerm{t.K, t.index.deriv, t.index.shift, t.index.dep});
  ByPartsResult R = by_parts(terms, sys.equations, ctx);
  for (const Expr& q : R.characteristic)
    if (!reduce_mod(q, sys, ctx).is_zero()) return false;
  return true;
}

}  // namespace ddn
