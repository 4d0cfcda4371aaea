#include "ddnoether/calculus.hpp"

#include <map>

namespace ddn {

Expr jet_expr(const Context& ctx, Namespace ns, int dep, const std::vector<int>& deriv, const std::vector<int>& shift) {
  return ctx.jet(JetAtom{ns, dep, deriv, shift});
}

Expr total_derivative(const Expr& e, int i, const Context& ctx) {
  if (i < 0 || i >= ctx.p1()) throw Error("total derivative index out of range");
  return derive(e, [i](const Kernel* k) -> std::optional<Expr> {
    if (k->kind == KernelKind::Jet) {
      JetAtom a = k->atom();
      ++a.deriv[static_cast<std::size_t>(i)];
      return Expr::jet(k->name, a);
    }
    if (k->kind == KernelKind::Continuous && k->index == i) return Expr(1);
    return std::nullopt;
  });
}

Expr total_derivative(const Expr& e, const std::vector<int>& orders, const Context& ctx) {
  Expr r = e;
  for (std::size_t i = 0; i < orders.size(); ++i)
    for (int k = 0; k < orders[i]; ++k) r = total_derivative(r, static_cast<int>(i), ctx);
  return r;
}

Expr shift(const Expr& e, const std::vector<int>& offsets, const Context& ctx) {
  if (static_cast<int>(offsets.size()) != ctx.p2()) throw Error("shift index arity mismatch");
  bool any = false;
  for (int o : offsets)
    if (o != 0) any = true;
  if (!any) return e;
  return map_leaves(e, [&](const Kernel* k) -> std::optional<Expr> {
    switch (k->kind) {
      case KernelKind::Jet: {
        JetAtom a = k->atom();
        for (std::size_t j = 0; j < offsets.size(); ++j) a.shift[j] += offsets[j];
        return Expr::jet(k->name, a);
      }
      case KernelKind::Discrete: {
        int o = offsets[static_cast<std::size_t>(k->index)];
        if (o == 0) return std::nullopt;
        return Expr::discrete(k->name, k->index) + Expr(o);
      }
      case KernelKind::Parity: {
        int o = offsets[static_cast<std::size_t>(k->index)];
        if (o % 2 == 0) return std::nullopt;
        return -Expr::parity(k->name, k->index);
      }
      default:
        return std::nullopt;
    }
  });
}

Expr shift(const Expr& e, int j, int k, const Context& ctx) {
  if (j < 0 || j >= ctx.p2()) throw Error("shift index out of range");
  std::vector<int> o(static_cast<std::size_t>(ctx.p2()), 0);
  o[static_cast<std::size_t>(j)] = k;
  return shift(e, o, ctx);
}

Expr apply_jet(const Expr& e, const JetAtom& index, const Context& ctx) {
  return total_derivative(shift(e, index.shift, ctx), index.deriv, ctx);
}

Expr adjoint_jet(const Expr& e, const std::vector<int>& deriv, const std::vector<int>& sh, const Context& ctx) {
  std::vector<int> neg(sh.size());
  for (std::size_t j = 0; j < sh.size(); ++j) neg[j] = -sh[j];
  Expr r = shift(e, neg, ctx);
  int order = 0;
  for (int d : deriv) order += d;
  r = total_derivative(r, deriv, ctx);
  return order % 2 ? -r : r;
}

std::vector<std::pair<Namespace, int>> jet_variables(const Context& ctx) {
  std::vector<std::pair<Namespace, int>> out;
  for (int a = 0; a < ctx.q(); ++a) out.emplace_back(Namespace::Dependent, a);
  for (int a = 0; a < static_cast<int>(ctx.auxiliary.size()); ++a) out.emplace_back(Namespace::Auxiliary, a);
  return out;
}

Expr euler(const Expr& L, int dep, const Context& ctx, Namespace ns) {
  Expr out;
  for (const Kernel* k : leaves(L)) {
    if (k->kind != KernelKind::Jet || k->ns != ns || k->index != dep) continue;
    out += adjoint_jet(partial(L, k), k->deriv, k->shift, ctx);
  }
  return out;
}

Expr euler(const Expr& L, const std::string& target, const Context& ctx) {
  if (auto i = ctx.dependent_index(target)) return euler(L, *i, ctx, Namespace::Dependent);
  if (auto i = ctx.auxiliary_index(target)) return euler(L, *i, ctx, Namespace::Auxiliary);
  throw Error("unknown Euler operator target: " + target);
}

ExprTuple frechet(const ExprTuple& F, const ExprTuple& Q, const Context& ctx) {
  if (static_cast<int>(Q.size()) != ctx.q()) throw Error("characteristic arity mismatch");
  std::map<JetAtom, Expr> cache;
  ExprTuple out;
  for (const auto& f : F) {
    Expr r;
    for (const Kernel* k : leaves(f)) {
      if (k->kind != KernelKind::Jet || k->ns != Namespace::Dependent) continue;
      JetAtom a = k->atom();
      auto it = cache.find(a);
      if (it == cache.end()) it = cache.emplace(a, apply_jet(Q[static_cast<std::size_t>(a.dep)], a, ctx)).first;
      r += partial(f, k) * it->second;
    }
    out.push_back(r);
  }
  return out;
}

ExprTuple frechet_adjoint(const ExprTuple& F, const ExprTuple& W, const Context& ctx) {
  if (W.size() != F.size()) throw Error("adjoint weight arity mismatch");
  ExprTuple out(static_cast<std::size_t>(ctx.q()));
  for (std::size_t b = 0; b < F.size(); ++b) {
    for (const Kernel* k : leaves(F[b])) {
      if (k->kind != KernelKind::Jet || k->ns != Namespace::Dependent) continue;
      out[static_cast<std::size_t>(k->index)] += adjoint_jet(partial(F[b], k) * W[b], k->deriv, k->shift, ctx);
    }
  }
  return out;
}

Expr divergence(const DivergencePair& P, const Context& ctx) {
  Expr r;
  for (std::size_t i = 0; i < P.p1.size(); ++i) r += total_derivative(P.p1[i], static_cast<int>(i), ctx);
  for (std::size_t j = 0; j < P.p2.size(); ++j) r += shift(P.p2[j], static_cast<int>(j), 1, ctx) - P.p2[j];
  return r;
}

DivergencePair zero_pair(const Context& ctx) {
  return DivergencePair{ExprTuple(static_cast<std::size_t>(ctx.p1())), ExprTuple(static_cast<std::size_t>(ctx.p2()))};
}

DivergencePair operator+(const DivergencePair& a, const DivergencePair& b) {
  DivergencePair r = a;
  for (std::size_t i = 0; i < r.p1.size(); ++i) r.p1[i] += b.p1[i];
  for (std::size_t j = 0; j < r.p2.size(); ++j) r.p2[j] += b.p2[j];
  return r;
}

DivergencePair operator-(const DivergencePair& a, const DivergencePair& b) {
  DivergencePair r = a;
  for (std::size_t i = 0; i < r.p1.size(); ++i) r.p1[i] -= b.p1[i];
  for (std::size_t j = 0; j < r.p2.size(); ++j) r.p2[j] -= b.p2[j];
  return r;
}

ByPartsResult by_parts(const std::vector<ByPartsTerm>& terms, const ExprTuple& targets, const Context& ctx) {
  ByPartsResult res;
  res.characteristic.assign(targets.size(), Expr());
  res.flux_d.assign(static_cast<std::size_t>(ctx.p1()), Expr());
  res.flux_s.assign(static_cast<std::size_t>(ctx.p2()), Expr());
  std::map<std::pair<int, JetAtom>, Expr> cache;
  auto image = [&](int target, const std::vector<int>& deriv, const std::vector<int>& sh) -> Expr {
    JetAtom key{Namespace::Dependent, 0, deriv, sh};
    auto it = cache.find({target, key});
    if (it != cache.end()) return it->second;
    Expr v = total_derivative(shift(targets[static_cast<std::size_t>(target)], sh, ctx), deriv, ctx);
    cache.emplace(std::make_pair(target, key), v);
    return v;
  };
  for (const auto& t : terms) {
    if (t.target < 0 || t.target >= static_cast<int>(targets.size())) throw Error("by_parts target out of range");
    if (static_cast<int>(t.deriv.size()) != ctx.p1() || static_cast<int>(t.shift.size()) != ctx.p2())
      throw Error("by_parts index arity mismatch");
    Expr c = t.coeff;
    std::vector<int> d = t.deriv;
    std::vector<int> s = t.shift;
    for (std::size_t i = 0; i < d.size(); ++i) {
      while (d[i] > 0) {
        if (c.is_zero()) break;
        --d[i];
        res.flux_d[i] += c * image(t.target, d, s);
        c = -total_derivative(c, static_cast<int>(i), ctx);
      }
    }
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = 0;
    if (c.is_zero()) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      while (s[j] > 0) {
        --s[j];
        c = shift(c, static_cast<int>(j), -1, ctx);
        res.flux_s[j] += c * image(t.target, d, s);
      }
      while (s[j] < 0) {
        res.flux_s[j] -= c * image(t.target, d, s);
        ++s[j];
        c = shift(c, static_cast<int>(j), 1, ctx);
      }
    }
    res.characteristic[static_cast<std::size_t>(t.target)] += c;
  }
  return res;
}

// ------------------------------------------------------------ homotopy

namespace {

const char* kEps = "%eps";

[[noreturn]] void not_closed_form() { throw Error("homotopy integrand not closed-form"); }

Expr eps_expr() { return Expr::symbol(kEps); }

const Kernel* eps_kernel() { return eps_expr().as_kernel(); }

bool has_eps(const Kernel* k) { return k->depends_on(eps_kernel()); }

bool has_eps(const Expr& e) { return depends_on(e, eps_kernel()); }

// Rewrites ln(eps^k R) as k ln(eps) + ln(R) inside one term.
Expr rewrite_term(const Term& t) {
  Expr r(t.coef);
  Monomial plain;
  for (const auto& [k, d] : t.mono) {
    if (!has_eps(k) || k->kind == KernelKind::Symbol || k->kind == KernelKind::Exp) {
      plain.emplace_back(k, d);
      continue;
    }
    if (k->kind != KernelKind::Log || !d.is_integer() || d.num < 0) not_closed_form();
    const Expr& B = k->args[0];
    for (const auto& [dk, m] : B.denominator())
      if (has_eps(dk)) not_closed_form();
    std::optional<Degree> common;
    for (const auto& bt : B.numerator().terms) {
      Degree e(0);
      for (const auto& [bk, bd] : bt.mono) {
        if (bk == eps_kernel())
          e = bd;
        else if (has_eps(bk))
          not_closed_form();
      }
      if (common && !(*common == e)) not_closed_form();
      common = e;
    }
    if (!common || !common->is_integer()) not_closed_form();
    Expr R = B * pow(eps_expr(), -common->num);
    Expr img = Expr(static_cast<long>(common->num)) * ln(eps_expr()) + ln(R);
    r *= pow(img, static_cast<long>(d.num));
  }
  Poly p;
  p.terms.push_back(Term{std::move(plain), Rational(1)});
  return r * Expr::from_poly(std::move(p));
}

// Integral over eps in [0,1] of eps^k exp(eps a + b) ln(eps)^m * rest.
Expr integrate_monomial(long k, long m, const std::optional<Expr>& a, const Expr& b_exp) {
  if (k < 0) not_closed_form();
  if (!a) {
    if (m == 0) return Expr(Rational(1, k + 1));
    if (m == 1) return Expr(Rational(-1, (k + 1) * (k + 1)));
    not_closed_form();
  }
  if (m != 0) not_closed_form();
  Expr inv = Expr(1) / *a;
  Expr ea = exp(*a);
  Expr I = (ea - Expr(1)) * inv;
  for (long j = 1; j <= k; ++j) I = ea * inv - Expr(j) * inv * I;
  return b_exp * I;
}

Expr integrate_eps(const Expr& F) {
  if (F.is_zero()) return F;
  for (const auto& [k, m] : F.denominator())
    if (has_eps(k)) not_closed_form();
  Expr num;
  for (const auto& t : F.numerator().terms) num += rewrite_term(t);
  for (const auto& [k, m] : num.denominator())
    if (has_eps(k)) not_closed_form();
  const Kernel* eps = eps_kernel();
  Expr lneps = ln(eps_expr());
  const Kernel* lnk = lneps.as_kernel();
  Expr total;
  Expr den = Expr::from_parts(Poly{{Term{{}, Rational(1)}}}, num.denominator());
  for (const auto& t : num.numerator().terms) {
    long k = 0, m = 0;
    std::optional<Expr> a;
    Expr b_exp(1);
    Monomial rest;
    for (const auto& [kk, d] : t.mono) {
      if (kk == eps) {
        if (!d.is_integer()) not_closed_form();
        k = d.num;
      } else if (kk == lnk) {
        m = d.num;
      } else if (kk->kind == KernelKind::Exp && has_eps(kk)) {
        const Expr& A = kk->args[0];
        Expr slope = partial(A, eps);
        if (has_eps(slope)) not_closed_form();
        Expr offset = A - slope * eps_expr();
        a = slope;
        b_exp = exp(offset);
      } else if (has_eps(kk)) {
        not_closed_form();
      } else {
        rest.emplace_back(kk, d);
      }
    }
    Poly rp;
    rp.terms.push_back(Term{std::move(rest), t.coef});
    total += Expr::from_poly(std::move(rp)) * integrate_monomial(k, m, a, b_exp);
  }
  return total / den;
}

// Antiderivative in x^0 of a term free of jets.
Expr integrate_x_term(const Expr& term, const Context& ctx);

Expr integrate_x_poly_trig(long k, const Expr& factor, const Kernel* trig, const Context& ctx, int depth);

Expr integrate_x(const Expr& e, const Context& ctx) {
  const Kernel* x = ctx.x(0).as_kernel();
  for (const auto& [k, m] : e.denominator())
    if (k->depends_on(x)) not_closed_form();
  Expr total;
  Expr den = Expr::from_parts(Poly{{Term{{}, Rational(1)}}}, e.denominator());
  for (const auto& t : e.numerator().terms) {
    Poly p;
    p.terms.push_back(t);
    total += integrate_x_term(Expr::from_poly(std::move(p)), ctx);
  }
  return total / den;
}

Expr integrate_x_term(const Expr& term, const Context& ctx) {
  const Kernel* x = ctx.x(0).as_kernel();
  const Term& t = term.numerator().terms[0];
  long k = 0;
  const Kernel* trans = nullptr;
  Monomial rest;
  for (const auto& [kk, d] : t.mono) {
    if (kk == x) {
      if (!d.is_integer()) not_closed_form();
      k = d.num;
    } else if (kk->depends_on(x)) {
      if (trans || !d.is_integer() || d.num != 1) not_closed_form();
      if (kk->kind != KernelKind::Exp && kk->kind != KernelKind::Sin && kk->kind != KernelKind::Cos) not_closed_form();
      trans = kk;
    } else {
      rest.emplace_back(kk, d);
    }
  }
  Poly rp;
  rp.terms.push_back(Term{std::move(rest), t.coef});
  Expr factor = Expr::from_poly(std::move(rp));
  if (!trans) {
    if (k == -1) not_closed_form();
    return factor * pow(ctx.x(0), k + 1) / Expr(k + 1);
  }
  if (k < 0) not_closed_form();
  return integrate_x_poly_trig(k, factor, trans, ctx, 0);
}

// Integral of factor * x^k * trig, trig in {exp, sin, cos} of a + b x.
Expr integrate_x_poly_trig(long k, const Expr& factor, const Kernel* trig, const Context& ctx, int depth) {
  if (depth > 64) not_closed_form();
  const Kernel* x = ctx.x(0).as_kernel();
  const Expr& A = trig->args[0];
  Expr slope = partial(A, x);
  if (depends_on(slope, x) || slope.is_zero()) not_closed_form();
  Expr X = ctx.x(0);
  Expr self = Expr::from_poly(Poly{{Term{Monomial{{trig, Degree(1)}}, Rational(1)}}});
  switch (trig->kind) {
    case KernelKind::Exp: {
      // x^k e = x^k e / s - k/s * int x^{k-1} e
      Expr r = factor * pow(X, k) * self / slope;
      if (k > 0) r -= Expr(k) / slope * integrate_x_poly_trig(k - 1, factor, trig, ctx, depth + 1);
      return r;
    }
    case KernelKind::Sin:
    case KernelKind::Cos: {
      bool is_sin = trig->kind == KernelKind::Sin;
      Expr other = is_sin ? cos(A) : sin(A);
      const Kernel* ok = other.as_kernel();
      Expr r = is_sin ? -factor * pow(X, k) * other / slope : factor * pow(X, k) * other / slope;
      if (k > 0) {
        Expr sub;
        if (ok)
          sub = integrate_x_poly_trig(k - 1, factor, ok, ctx, depth + 1);
        else
          not_closed_form();
        r += (is_sin ? Expr(k) : Expr(-k)) / slope * sub;
      }
      return r;
    }
    default:
      not_closed_form();
  }
}

// Indefinite sum in n^0: B with (S - id) B = e for e polynomial in n and
// (-1)^n.
Expr sum_n(const Expr& e, const Context& ctx) {
  const Kernel* n = ctx.n(0).as_kernel();
  const Kernel* par = ctx.parity(0).as_kernel();
  for (const auto& [k, m] : e.denominator())
    if (k->depends_on(n) || k->depends_on(par)) not_closed_form();
  // coefficient buckets by (parity, degree)
  std::map<std::pair<int, long>, Expr> buckets;
  long maxdeg = 0;
  for (const auto& t : e.numerator().terms) {
    int p = 0;
    long deg = 0;
    Monomial rest;
    for (const auto& [kk, d] : t.mono) {
      if (kk == n) {
        if (!d.is_integer() || d.num < 0) not_closed_form();
        deg = d.num;
      } else if (kk == par) {
        p = 1;
      } else if (kk->depends_on(n) || kk->depends_on(par)) {
        not_closed_form();
      } else {
        rest.emplace_back(kk, d);
      }
    }
    maxdeg = std::max(maxdeg, deg);
    Poly rp;
    rp.terms.push_back(Term{std::move(rest), t.coef});
    buckets[{p, deg}] += Expr::from_poly(std::move(rp));
  }
  auto binom = [](long a, long b) {
    mpz_class r;
    mpz_bin_uiui(r.get_mpz_t(), static_cast<unsigned long>(a), static_cast<unsigned long>(b));
    return Rational(r);
  };
  Expr N = ctx.n(0);
  Expr result;
  for (int p = 0; p < 2; ++p) {
    std::vector<Expr> q(static_cast<std::size_t>(maxdeg + 1));
    bool any = false;
    for (long j = 0; j <= maxdeg; ++j) {
      auto it = buckets.find({p, j});
      if (it != buckets.end()) {
        q[static_cast<std::size_t>(j)] = it->second;
        any = true;
      }
    }
    if (!any) continue;
    if (p == 0) {
      // sum_{k>j} C(k,j) b_k = q_j, b of degree maxdeg+1
      std::vector<Expr> b(static_cast<std::size_t>(maxdeg + 2));
      for (long j = maxdeg; j >= 0; --j) {
        Expr s = q[static_cast<std::size_t>(j)];
        for (long k = j + 2; k <= maxdeg + 1; ++k) s -= Expr(binom(k, j)) * b[static_cast<std::size_t>(k)];
        b[static_cast<std::size_t>(j + 1)] = s / Expr(binom(j + 1, j));
      }
      for (long k = 1; k <= maxdeg + 1; ++k) result += b[static_cast<std::size_t>(k)] * pow(N, k);
    } else {
      // -2 b_j - sum_{k>j} C(k,j) b_k = q_j
      std::vector<Expr> b(static_cast<std::size_t>(maxdeg + 1));
      for (long j = maxdeg; j >= 0; --j) {
        Expr s = q[static_cast<std::size_t>(j)];
        for (long k = j + 1; k <= maxdeg; ++k) s += Expr(binom(k, j)) * b[static_cast<std::size_t>(k)];
        b[static_cast<std::size_t>(j)] = -s / Expr(2);
      }
      Expr poly;
      for (long k = 0; k <= maxdeg; ++k) poly += b[static_cast<std::size_t>(k)] * pow(N, k);
      result += ctx.parity(0) * poly;
    }
  }
  return result;
}

}  // namespace

DivergencePair null_lagrangian_decompose(const Expr& L, const Context& ctx) {
  auto vars = jet_variables(ctx);
  for (const auto& [ns, dep] : vars)
    if (!euler(L, dep, ctx, ns).is_zero()) throw Error("not a null Lagrangian");
  Expr eps = eps_expr();
  auto scale = [&](const Expr& e) {
    return map_leaves(e, [&](const Kernel* k) -> std::optional<Expr> {
      if (k->kind == KernelKind::Jet) return eps * Expr::jet(k->name, k->atom());
      return std::nullopt;
    });
  };
  ExprTuple targets;
  std::map<std::pair<Namespace, int>, int> target_index;
  for (const auto& [ns, dep] : vars) {
    target_index[{ns, dep}] = static_cast<int>(targets.size());
    targets.push_back(ctx.jet(ctx.atom(dep, ns)));
  }
  std::vector<ByPartsTerm> terms;
  for (const Kernel* k : leaves(L)) {
    if (k->kind != KernelKind::Jet) continue;
    Expr c;
    try {
      c = scale(partial(L, k));
    } catch (const Error&) {
      not_closed_form();
    }
    terms.push_back(ByPartsTerm{c, k->deriv, k->shift, target_index.at({k->ns, k->index})});
  }
  ByPartsResult bp = by_parts(terms, targets, ctx);
  for (const auto& c : bp.characteristic)
    if (!c.is_zero()) throw Error("internal: homotopy characteristic does not vanish");
  DivergencePair P = zero_pair(ctx);
  for (std::size_t i = 0; i < P.p1.size(); ++i) P.p1[i] = integrate_eps(bp.flux_d[i]);
  for (std::size_t j = 0; j < P.p2.size(); ++j) P.p2[j] = integrate_eps(bp.flux_s[j]);
  // The jet-free part, taken as the defect of the homotopy rather than L at
  // u = 0 so that Lagrangians singular at the origin are covered.
  Expr L0 = L - divergence(P, ctx);
  for (const Kernel* k : leaves(L0))
    if (k->kind == KernelKind::Jet) not_closed_form();
  if (!L0.is_zero()) {
    if (ctx.p1() > 0)
      P.p1[0] += integrate_x(L0, ctx);
    else
      P.p2[0] += sum_n(L0, ctx);
  }
  if (!(divergence(P, ctx) - L).is_zero()) throw Error("internal: homotopy reconstruction failed");
  return P;
}

}  // namespace ddn
