#include "ddnoether/expr.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace ddn {

struct Expr::Rep {
  Poly num;
  Denominator den;
  std::size_t hash = 0;
};

ParseError::ParseError(const std::string& message, std::size_t offset)
    : Error(message + " at byte " + std::to_string(offset)), message_(message), offset_(offset) {}

// ---------------------------------------------------------------- Degree

Degree::Degree(std::int64_t n, std::int64_t d) : num(n), den(d) {
  if (d == 0) throw Error("zero denominator in exponent");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  std::int64_t g = std::gcd(num < 0 ? -num : num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
}

Degree operator+(Degree a, Degree b) { return Degree(a.num * b.den + b.num * a.den, a.den * b.den); }
Degree operator-(Degree a, Degree b) { return Degree(a.num * b.den - b.num * a.den, a.den * b.den); }
Degree operator*(Degree a, Degree b) { return Degree(a.num * b.num, a.den * b.den); }

int compare(Degree a, Degree b) {
  __int128 l = static_cast<__int128>(a.num) * b.den;
  __int128 r = static_cast<__int128>(b.num) * a.den;
  return l < r ? -1 : (l > r ? 1 : 0);
}

namespace {

std::size_t mix(std::size_t seed, std::size_t v) {
  return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

std::size_t hash_mpz(const mpz_class& z) {
  std::size_t h = static_cast<std::size_t>(mpz_sgn(z.get_mpz_t()) + 2);
  std::size_t n = mpz_size(z.get_mpz_t());
  for (std::size_t i = 0; i < n && i < 4; ++i) h = mix(h, mpz_getlimbn(z.get_mpz_t(), i));
  return mix(h, n);
}

std::size_t hash_rational(const Rational& q) {
  return mix(hash_mpz(q.get_num()), hash_mpz(q.get_den()));
}

std::size_t hash_poly(const Poly& p) {
  std::size_t h = p.terms.size();
  for (const auto& t : p.terms) {
    h = mix(h, hash_rational(t.coef));
    for (const auto& [k, d] : t.mono) {
      h = mix(h, k->hash);
      h = mix(h, static_cast<std::size_t>(d.num * 31 + d.den));
    }
  }
  return h;
}

bool poly_equal(const Poly& a, const Poly& b) {
  if (a.terms.size() != b.terms.size()) return false;
  for (std::size_t i = 0; i < a.terms.size(); ++i) {
    const auto& x = a.terms[i];
    const auto& y = b.terms[i];
    if (x.coef != y.coef || x.mono.size() != y.mono.size()) return false;
    for (std::size_t j = 0; j < x.mono.size(); ++j)
      if (x.mono[j].first != y.mono[j].first || !(x.mono[j].second == y.mono[j].second)) return false;
  }
  return true;
}

}  // namespace

bool identical(const Expr& a, const Expr& b) {
  if (a.hash() != b.hash()) return false;
  if (a.denominator() != b.denominator()) return false;
  return poly_equal(a.numerator(), b.numerator());
}

namespace {

// ------------------------------------------------------------ interning

struct KernelHash {
  std::size_t operator()(const Kernel* k) const { return k->hash; }
};

bool kernel_equal(const Kernel& a, const Kernel& b) {
  if (a.kind != b.kind || a.hash != b.hash || a.name != b.name || a.index != b.index || a.ns != b.ns ||
      a.deriv != b.deriv || a.shift != b.shift || !(a.exponent == b.exponent) || a.args.size() != b.args.size())
    return false;
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (!identical(a.args[i], b.args[i])) return false;
  return poly_equal(a.poly, b.poly);
}

struct KernelEq {
  bool operator()(const Kernel* a, const Kernel* b) const { return kernel_equal(*a, *b); }
};

class KernelTable {
 public:
  const Kernel* intern(Kernel&& k) {
    std::size_t h = static_cast<std::size_t>(k.kind) * 1000003u;
    h = mix(h, std::hash<std::string>{}(k.name));
    h = mix(h, static_cast<std::size_t>(k.index));
    h = mix(h, static_cast<std::size_t>(k.ns));
    for (int d : k.deriv) h = mix(h, static_cast<std::size_t>(d + 1000));
    h = mix(h, 77);
    for (int s : k.shift) h = mix(h, static_cast<std::size_t>(s + 1000));
    h = mix(h, static_cast<std::size_t>(k.exponent.num * 131 + k.exponent.den));
    for (const auto& a : k.args) h = mix(h, a.hash());
    h = mix(h, hash_poly(k.poly));
    k.hash = h;
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = table_.find(&k);
    if (it != table_.end()) return *it;
    auto owned = std::make_unique<Kernel>(std::move(k));
    Kernel* p = owned.get();
    if (p->is_leaf()) {
      p->leaves = {p};
    } else {
      std::set<const Kernel*> ls;
      for (const auto& a : p->args) {
        for (const auto& t : a.numerator().terms)
          for (const auto& [kk, d] : t.mono) ls.insert(kk->leaves.begin(), kk->leaves.end());
        for (const auto& [kk, m] : a.denominator()) ls.insert(kk->leaves.begin(), kk->leaves.end());
      }
      for (const auto& t : p->poly.terms)
        for (const auto& [kk, d] : t.mono) ls.insert(kk->leaves.begin(), kk->leaves.end());
      p->leaves.assign(ls.begin(), ls.end());
    }
    storage_.push_back(std::move(owned));
    table_.insert(p);
    return p;
  }

 private:
  std::mutex mutex_;
  std::unordered_set<const Kernel*, KernelHash, KernelEq> table_;
  std::vector<std::unique_ptr<Kernel>> storage_;
};

KernelTable& kernel_table() {
  static KernelTable* table = new KernelTable();
  return *table;
}

int kind_rank(KernelKind k) { return static_cast<int>(k); }

int compare_ints(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return a[i] < b[i] ? -1 : 1;
  return 0;
}

int abs_sum(const std::vector<int>& v) {
  int s = 0;
  for (int x : v) s += x < 0 ? -x : x;
  return s;
}

// Shift order: 0, 1, -1, 2, -2, ... per component.
int compare_shift(const std::vector<int>& a, const std::vector<int>& b) {
  int sa = abs_sum(a), sb = abs_sum(b);
  if (sa != sb) return sa < sb ? -1 : 1;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    if (a[i] == b[i]) continue;
    int ka = a[i] > 0 ? 2 * a[i] - 1 : -2 * a[i];
    int kb = b[i] > 0 ? 2 * b[i] - 1 : -2 * b[i];
    return ka < kb ? -1 : 1;
  }
  return compare_ints(a, b);
}

int compare_poly(const Poly& a, const Poly& b);

}  // namespace

// ------------------------------------------------------------- ordering

int compare(const Kernel* a, const Kernel* b) {
  if (a == b) return 0;
  if (a->kind != b->kind) return kind_rank(a->kind) < kind_rank(b->kind) ? -1 : 1;
  switch (a->kind) {
    case KernelKind::Symbol:
      return a->name < b->name ? -1 : (a->name > b->name ? 1 : 0);
    case KernelKind::Continuous:
    case KernelKind::Discrete:
    case KernelKind::Parity:
      if (a->index != b->index) return a->index < b->index ? -1 : 1;
      return a->name < b->name ? -1 : (a->name > b->name ? 1 : 0);
    case KernelKind::Jet: {
      if (a->ns != b->ns) return a->ns == Namespace::Dependent ? -1 : 1;
      if (a->index != b->index) return a->index < b->index ? -1 : 1;
      int da = abs_sum(a->deriv), db = abs_sum(b->deriv);
      if (da != db) return da < db ? -1 : 1;
      if (int c = compare_ints(b->deriv, a->deriv)) return c;
      if (int c = compare_shift(a->shift, b->shift)) return c;
      return a->name < b->name ? -1 : (a->name > b->name ? 1 : 0);
    }
    case KernelKind::Function: {
      if (a->name != b->name) return a->name < b->name ? -1 : 1;
      if (int c = compare_ints(a->deriv, b->deriv)) return c;
      if (a->args.size() != b->args.size()) return a->args.size() < b->args.size() ? -1 : 1;
      for (std::size_t i = 0; i < a->args.size(); ++i)
        if (int c = compare(a->args[i], b->args[i])) return c;
      return 0;
    }
    case KernelKind::Power:
      if (int c = compare(a->args[0], b->args[0])) return c;
      return compare(a->exponent, b->exponent);
    case KernelKind::Log:
    case KernelKind::Sin:
    case KernelKind::Cos:
    case KernelKind::Exp:
      return compare(a->args[0], b->args[0]);
    case KernelKind::Sum:
      return compare_poly(a->poly, b->poly);
  }
  return 0;
}

// Lexicographic on exponent vectors over the kernel order; multiplicative.
int compare(const Monomial& a, const Monomial& b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size()) return a[i].second.num > 0 ? 1 : -1;
    if (i == a.size()) return b[j].second.num > 0 ? -1 : 1;
    int c = compare(a[i].first, b[j].first);
    if (c == 0) {
      int d = compare(a[i].second, b[j].second);
      if (d != 0) return d;
      ++i;
      ++j;
    } else if (c < 0) {
      return a[i].second.num > 0 ? 1 : -1;
    } else {
      return b[j].second.num > 0 ? -1 : 1;
    }
  }
  return 0;
}

namespace {

int compare_poly(const Poly& a, const Poly& b) {
  std::size_t n = std::min(a.terms.size(), b.terms.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (int c = compare(a.terms[i].mono, b.terms[i].mono)) return c;
    int c = cmp(a.terms[i].coef, b.terms[i].coef);
    if (c != 0) return c < 0 ? -1 : 1;
  }
  if (a.terms.size() != b.terms.size()) return a.terms.size() < b.terms.size() ? -1 : 1;
  return 0;
}

}  // namespace

int compare(const Expr& a, const Expr& b) {
  if (int c = compare_poly(a.numerator(), b.numerator())) return c;
  const auto& da = a.denominator();
  const auto& db = b.denominator();
  std::size_t n = std::min(da.size(), db.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (int c = compare(da[i].first, db[i].first)) return c;
    if (da[i].second != db[i].second) return da[i].second < db[i].second ? -1 : 1;
  }
  if (da.size() != db.size()) return da.size() < db.size() ? -1 : 1;
  return 0;
}

bool Kernel::is_leaf() const {
  switch (kind) {
    case KernelKind::Symbol:
    case KernelKind::Continuous:
    case KernelKind::Discrete:
    case KernelKind::Parity:
    case KernelKind::Jet:
      return true;
    default:
      return false;
  }
}

JetAtom Kernel::atom() const {
  if (kind != KernelKind::Jet) throw Error("kernel is not a jet atom");
  return JetAtom{ns, index, deriv, shift};
}

bool Kernel::depends_on(const Kernel* leaf) const {
  return std::binary_search(leaves.begin(), leaves.end(), leaf);
}

// ------------------------------------------------------- monomial algebra

namespace {

Expr make_exp_expr(const Expr& arg);

struct MonoLess {
  bool operator()(const std::pair<const Kernel*, Degree>& a, const std::pair<const Kernel*, Degree>& b) const {
    return compare(a.first, b.first) < 0;
  }
};

// Sorts, merges equal kernels, reduces parity exponents mod 2 and fuses all
// exponential kernels into one.
Monomial canonical_monomial(Monomial m) {
  if (m.size() <= 1) {
    if (m.size() == 1) {
      auto& [k, d] = m[0];
      if (k->kind == KernelKind::Parity) {
        if (!d.is_integer()) throw Error("fractional power of a parity token");
        std::int64_t r = ((d.num % 2) + 2) % 2;
        if (r == 0) return {};
        d = Degree(1);
      } else if (k->kind == KernelKind::Exp && !(d == Degree(1))) {
        if (!d.is_integer()) throw Error("internal: fractional exponential degree");
        Expr arg = k->args[0] * Expr(static_cast<long>(d.num));
        Expr e = make_exp_expr(arg);
        if (e.numerator().terms.empty()) return {};
        return e.numerator().terms[0].mono;
      } else if (d.is_zero()) {
        return {};
      }
    }
    return m;
  }
  bool has_exp = false;
  for (const auto& p : m)
    if (p.first->kind == KernelKind::Exp) has_exp = true;
  Monomial out;
  out.reserve(m.size());
  if (has_exp) {
    Expr sum;
    Monomial rest;
    for (const auto& p : m) {
      if (p.first->kind == KernelKind::Exp) {
        if (!p.second.is_integer()) throw Error("internal: fractional exponential degree");
        sum += p.first->args[0] * Expr(static_cast<long>(p.second.num));
      } else {
        rest.push_back(p);
      }
    }
    m = std::move(rest);
    if (!sum.is_zero()) {
      Expr e = make_exp_expr(sum);
      for (const auto& p : e.numerator().terms[0].mono) m.push_back(p);
    }
  }
  std::sort(m.begin(), m.end(), MonoLess{});
  for (std::size_t i = 0; i < m.size();) {
    const Kernel* k = m[i].first;
    Degree d = m[i].second;
    std::size_t j = i + 1;
    while (j < m.size() && m[j].first == k) d = d + m[j++].second;
    if (k->kind == KernelKind::Parity) {
      if (!d.is_integer()) throw Error("fractional power of a parity token");
      d = Degree(((d.num % 2) + 2) % 2);
    }
    if (!d.is_zero()) out.emplace_back(k, d);
    i = j;
  }
  return out;
}

Monomial mono_mul(const Monomial& a, const Monomial& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  bool simple = true;
  for (const auto& p : a)
    if (p.first->kind == KernelKind::Exp || p.first->kind == KernelKind::Parity) simple = false;
  for (const auto& p : b)
    if (p.first->kind == KernelKind::Exp || p.first->kind == KernelKind::Parity) simple = false;
  if (!simple) {
    Monomial m = a;
    m.insert(m.end(), b.begin(), b.end());
    return canonical_monomial(std::move(m));
  }
  Monomial out;
  out.reserve(a.size() + b.size());
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size()) {
      out.push_back(a[i++]);
    } else if (i == a.size()) {
      out.push_back(b[j++]);
    } else {
      int c = compare(a[i].first, b[j].first);
      if (c == 0) {
        Degree d = a[i].second + b[j].second;
        if (!d.is_zero()) out.emplace_back(a[i].first, d);
        ++i;
        ++j;
      } else if (c < 0) {
        out.push_back(a[i++]);
      } else {
        out.push_back(b[j++]);
      }
    }
  }
  return out;
}

Monomial mono_inv(const Monomial& a) {
  Monomial m = a;
  bool special = false;
  for (auto& p : m) {
    if (p.first->kind == KernelKind::Parity) continue;
    if (p.first->kind == KernelKind::Exp) special = true;
    p.second = -p.second;
  }
  return special ? canonical_monomial(std::move(m)) : m;
}

// ------------------------------------------------------------ polynomials

struct TermDesc {
  bool operator()(const Term& a, const Term& b) const { return compare(a.mono, b.mono) > 0; }
};

Poly collect(std::vector<Term> terms) {
  std::sort(terms.begin(), terms.end(), TermDesc{});
  Poly out;
  out.terms.reserve(terms.size());
  for (auto& t : terms) {
    if (!out.terms.empty() && compare(out.terms.back().mono, t.mono) == 0) {
      out.terms.back().coef += t.coef;
      if (out.terms.back().coef == 0) out.terms.pop_back();
    } else if (t.coef != 0) {
      out.terms.push_back(std::move(t));
    }
  }
  return out;
}

Poly poly_constant(const Rational& c) {
  Poly p;
  if (c != 0) p.terms.push_back(Term{{}, c});
  return p;
}

Poly poly_add(const Poly& a, const Poly& b, const Rational& sb = 1) {
  Poly out;
  out.terms.reserve(a.terms.size() + b.terms.size());
  std::size_t i = 0, j = 0;
  while (i < a.terms.size() || j < b.terms.size()) {
    int c;
    if (j == b.terms.size())
      c = 1;
    else if (i == a.terms.size())
      c = -1;
    else
      c = compare(a.terms[i].mono, b.terms[j].mono);
    if (c > 0) {
      out.terms.push_back(a.terms[i++]);
    } else if (c < 0) {
      out.terms.push_back(Term{b.terms[j].mono, b.terms[j].coef * sb});
      ++j;
    } else {
      Rational s = a.terms[i].coef + b.terms[j].coef * sb;
      if (s != 0) out.terms.push_back(Term{a.terms[i].mono, s});
      ++i;
      ++j;
    }
  }
  return out;
}

Poly poly_mul_term(const Poly& a, const Term& t) {
  std::vector<Term> terms;
  terms.reserve(a.terms.size());
  bool simple = true;
  for (const auto& p : t.mono)
    if (p.first->kind == KernelKind::Exp || p.first->kind == KernelKind::Parity) simple = false;
  for (const auto& x : a.terms) terms.push_back(Term{mono_mul(x.mono, t.mono), x.coef * t.coef});
  if (simple) {
    // Multiplication by a plain monomial preserves the order.
    Poly out;
    out.terms = std::move(terms);
    return out;
  }
  return collect(std::move(terms));
}

Poly poly_mul(const Poly& a, const Poly& b) {
  if (a.terms.empty() || b.terms.empty()) return {};
  if (a.terms.size() == 1) return poly_mul_term(b, a.terms[0]);
  if (b.terms.size() == 1) return poly_mul_term(a, b.terms[0]);
  std::vector<Term> terms;
  terms.reserve(a.terms.size() * b.terms.size());
  for (const auto& x : a.terms)
    for (const auto& y : b.terms) terms.push_back(Term{mono_mul(x.mono, y.mono), x.coef * y.coef});
  return collect(std::move(terms));
}

Poly poly_scale(const Poly& a, const Rational& c) {
  if (c == 0) return {};
  Poly out = a;
  for (auto& t : out.terms) t.coef *= c;
  return out;
}

Poly poly_pow(const Poly& a, int k) {
  Poly r = poly_constant(1);
  Poly base = a;
  while (k > 0) {
    if (k & 1) r = poly_mul(r, base);
    k >>= 1;
    if (k) base = poly_mul(base, base);
  }
  return r;
}

bool poly_has_special(const Poly& p) {
  for (const auto& t : p.terms)
    for (const auto& [k, d] : t.mono)
      if (k->kind == KernelKind::Exp || k->kind == KernelKind::Parity) return true;
  return false;
}

// Exact division p / g with verification; nullopt when not exact or when the
// search leaves the per-kernel degree box.
std::optional<Poly> poly_divide(const Poly& p, const Poly& g) {
  if (g.terms.empty()) return std::nullopt;
  if (p.terms.empty()) return Poly{};
  if (g.terms.size() == 1) {
    Term inv{mono_inv(g.terms[0].mono), 1 / g.terms[0].coef};
    return poly_mul_term(p, inv);
  }
  if (p.terms.size() < g.terms.size() && !poly_has_special(p) && !poly_has_special(g)) return std::nullopt;
  struct Box {
    Degree pmin, pmax, gmin, gmax;
  };
  std::unordered_map<const Kernel*, Box> box;
  auto scan = [&](const Poly& poly, bool is_p) {
    std::unordered_map<const Kernel*, std::pair<Degree, Degree>> mm;
    std::unordered_map<const Kernel*, std::size_t> count;
    for (const auto& t : poly.terms)
      for (const auto& [k, d] : t.mono) {
        if (k->kind == KernelKind::Exp || k->kind == KernelKind::Parity) continue;
        auto it = mm.find(k);
        if (it == mm.end()) {
          mm.emplace(k, std::make_pair(d, d));
        } else {
          if (compare(d, it->second.first) < 0) it->second.first = d;
          if (compare(d, it->second.second) > 0) it->second.second = d;
        }
        ++count[k];
      }
    for (auto& [k, r] : mm) {
      if (count[k] < poly.terms.size()) {
        if (compare(r.first, Degree(0)) > 0) r.first = Degree(0);
        if (compare(r.second, Degree(0)) < 0) r.second = Degree(0);
      }
      auto& b = box[k];
      if (is_p) {
        b.pmin = r.first;
        b.pmax = r.second;
      } else {
        b.gmin = r.first;
        b.gmax = r.second;
      }
    }
  };
  scan(p, true);
  scan(g, false);
  for (const auto& [k, b] : box)
    if (compare(b.pmin - b.gmin, b.pmax - b.gmax) > 0) return std::nullopt;
  Monomial ginv = mono_inv(g.terms[0].mono);
  Rational gc = 1 / g.terms[0].coef;
  Poly r = p;
  std::vector<Term> q;
  std::size_t cap = 8 * (p.terms.size() + 2) * (g.terms.size() + 2);
  while (!r.terms.empty()) {
    if (cap-- == 0) return std::nullopt;
    Term t{mono_mul(r.terms[0].mono, ginv), r.terms[0].coef * gc};
    for (const auto& [k, d] : t.mono) {
      if (k->kind == KernelKind::Exp || k->kind == KernelKind::Parity) continue;
      auto it = box.find(k);
      if (it == box.end()) return std::nullopt;
      const Box& b = it->second;
      if (compare(d, b.pmin - b.gmin) < 0 || compare(d, b.pmax - b.gmax) > 0) return std::nullopt;
    }
    r = poly_add(r, poly_mul_term(g, t), Rational(-1));
    q.push_back(std::move(t));
  }
  return collect(std::move(q));
}

// p = c * m * rest with rest free of monomial content and leading coefficient 1.
struct Content {
  Rational coef;
  Monomial mono;
  Poly rest;
};

Content split_content(const Poly& p) {
  Content out;
  out.coef = p.terms[0].coef;
  std::map<const Kernel*, Degree> low;
  std::map<const Kernel*, std::size_t> count;
  for (const auto& t : p.terms)
    for (const auto& [k, d] : t.mono) {
      if (k->kind == KernelKind::Exp) continue;
      auto it = low.find(k);
      if (it == low.end())
        low.emplace(k, d);
      else if (compare(d, it->second) < 0)
        it->second = d;
      ++count[k];
    }
  Monomial m;
  for (auto& [k, d] : low) {
    Degree v = d;
    if (count[k] < p.terms.size() && compare(v, Degree(0)) > 0) v = Degree(0);
    if (k->kind == KernelKind::Parity && count[k] < p.terms.size()) v = Degree(0);
    if (!v.is_zero()) m.emplace_back(k, v);
  }
  out.mono = canonical_monomial(m);
  Term inv{mono_inv(out.mono), 1 / out.coef};
  out.rest = poly_mul_term(p, inv);
  return out;
}

const Kernel* sum_kernel(Poly p) {
  Kernel k;
  k.kind = KernelKind::Sum;
  k.poly = std::move(p);
  return kernel_table().intern(std::move(k));
}

Poly expand_den(const Denominator& den) {
  Poly r = poly_constant(1);
  for (const auto& [k, m] : den) r = poly_mul(r, poly_pow(k->poly, m));
  return r;
}

Denominator den_merge(const Denominator& a, const Denominator& b, bool add) {
  Denominator out;
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    int c;
    if (j == b.size())
      c = -1;
    else if (i == a.size())
      c = 1;
    else
      c = compare(a[i].first, b[j].first);
    if (c < 0) {
      out.push_back(a[i++]);
    } else if (c > 0) {
      out.push_back(b[j++]);
    } else {
      out.emplace_back(a[i].first, add ? a[i].second + b[j].second : std::max(a[i].second, b[j].second));
      ++i;
      ++j;
    }
  }
  return out;
}

// den / part as a polynomial (part divides den as factor multisets).
Poly den_quotient(const Denominator& den, const Denominator& part) {
  Denominator q;
  std::size_t j = 0;
  for (const auto& [k, m] : den) {
    int pm = 0;
    if (j < part.size() && part[j].first == k) pm = part[j++].second;
    if (m - pm > 0) q.emplace_back(k, m - pm);
  }
  return expand_den(q);
}

void cancel(Poly& num, Denominator& den) {
  if (num.terms.empty()) {
    den.clear();
    return;
  }
  Denominator out;
  for (auto [k, m] : den) {
    while (m > 0) {
      auto q = poly_divide(num, k->poly);
      if (!q) break;
      num = std::move(*q);
      --m;
    }
    if (m > 0) out.emplace_back(k, m);
  }
  den = std::move(out);
}

// Splits factors that are multiples of other factors in the list.
void refine(Poly& num, Denominator& den) {
  bool changed = true;
  int guard = 0;
  while (changed && den.size() > 1 && guard++ < 16) {
    changed = false;
    for (std::size_t i = 0; i < den.size() && !changed; ++i)
      for (std::size_t j = 0; j < den.size() && !changed; ++j) {
        if (i == j) continue;
        const Poly& f = den[i].first->poly;
        const Poly& g = den[j].first->poly;
        if (f.terms.size() <= g.terms.size()) continue;
        auto h = poly_divide(f, g);
        if (!h) continue;
        int mult = den[i].second;
        Content c = split_content(*h);
        // f^m = g^m * (c m rest)^m
        Term inv{mono_inv(c.mono), 1 / c.coef};
        for (int r = 0; r < mult; ++r) num = poly_mul_term(num, inv);
        Denominator add;
        add.emplace_back(den[j].first, mult);
        if (c.rest.terms.size() > 1) add.emplace_back(sum_kernel(c.rest), mult);
        std::sort(add.begin(), add.end(),
                  [](const auto& a, const auto& b) { return compare(a.first, b.first) < 0; });
        Denominator rest;
        for (std::size_t t = 0; t < den.size(); ++t)
          if (t != i) rest.push_back(den[t]);
        den = den_merge(rest, add, true);
        changed = true;
      }
  }
}

}  // namespace

// ------------------------------------------------------------------ Expr

Expr make_expr(Poly num, Denominator den) {
  auto rep = std::make_shared<Expr::Rep>();
  if (num.terms.empty()) den.clear();
  std::size_t h = hash_poly(num);
  for (const auto& [k, m] : den) h = mix(mix(h, k->hash), static_cast<std::size_t>(m));
  rep->num = std::move(num);
  rep->den = std::move(den);
  rep->hash = h;
  return Expr(std::shared_ptr<const Expr::Rep>(std::move(rep)));
}

namespace {

const std::shared_ptr<const Expr::Rep>& zero_rep() {
  static const std::shared_ptr<const Expr::Rep> z = std::make_shared<Expr::Rep>();
  return z;
}

Expr from_kernel(const Kernel* k, Degree d = Degree(1)) {
  Poly p;
  p.terms.push_back(Term{Monomial{{k, d}}, Rational(1)});
  return make_expr(std::move(p), {});
}

Expr make_exp_expr(const Expr& arg) {
  if (arg.is_zero()) return Expr(1);
  Kernel k;
  k.kind = KernelKind::Exp;
  k.args = {arg};
  return from_kernel(kernel_table().intern(std::move(k)));
}

Expr unary_kernel(KernelKind kind, const Expr& arg) {
  Kernel k;
  k.kind = kind;
  k.args = {arg};
  return from_kernel(kernel_table().intern(std::move(k)));
}

std::optional<mpz_class> exact_root(const mpz_class& z, unsigned long k) {
  if (z < 0) {
    if (k % 2 == 0) return std::nullopt;
    auto r = exact_root(-z, k);
    if (!r) return std::nullopt;
    return mpz_class(-*r);
  }
  mpz_class r;
  if (mpz_root(r.get_mpz_t(), z.get_mpz_t(), k) != 0) return r;
  return std::nullopt;
}

// g with g^k == p for a monic polynomial p, found term by term from the
// leading monomial down.
std::optional<Poly> poly_root(const Poly& p, int k) {
  if (p.terms.size() < 2 || poly_has_special(p)) return std::nullopt;
  const Term& lt = p.terms[0];
  if (lt.coef != 1) return std::nullopt;
  Monomial m;
  for (const auto& [kk, d] : lt.mono) {
    if (!d.is_integer() || d.num % k != 0) return std::nullopt;
    m.emplace_back(kk, Degree(d.num / k));
  }
  Poly g;
  g.terms.push_back(Term{m, Rational(1)});
  Rational kc(k);
  for (std::size_t iter = 0; iter <= p.terms.size(); ++iter) {
    Poly r = poly_add(p, poly_pow(g, k), Rational(-1));
    if (r.terms.empty()) return g;
    Poly lead = poly_pow(Poly{{g.terms[0]}}, k - 1);
    const Term& lg = lead.terms[0];
    Term t{mono_mul(r.terms[0].mono, mono_inv(lg.mono)), r.terms[0].coef / (kc * lg.coef)};
    if (compare(t.mono, g.terms.back().mono) >= 0) return std::nullopt;
    g.terms.push_back(std::move(t));
  }
  return std::nullopt;
}

Expr inverse(const Expr& a) {
  const Poly& num = a.numerator();
  if (num.terms.empty()) throw Error("division by zero");
  Content c = split_content(num);
  Poly d = expand_den(a.denominator());
  Term inv{mono_inv(c.mono), 1 / c.coef};
  Poly n = poly_mul_term(d, inv);
  if (c.rest.terms.size() == 1) return make_expr(std::move(n), {});
  Denominator den;
  for (int k = 4; k >= 2 && den.empty(); --k)
    if (auto g = poly_root(c.rest, k)) den.emplace_back(sum_kernel(std::move(*g)), k);
  if (den.empty()) den.emplace_back(sum_kernel(std::move(c.rest)), 1);
  cancel(n, den);
  return make_expr(std::move(n), std::move(den));
}

}  // namespace

Expr::Expr() : rep_(zero_rep()) {}
Expr::Expr(int value) : Expr(Rational(value)) {}
Expr::Expr(long value) : Expr(Rational(value)) {}
Expr::Expr(const Rational& value) {
  Rational v = value;
  v.canonicalize();
  *this = make_expr(poly_constant(v), {});
}

Expr Expr::symbol(const std::string& name) {
  Kernel k;
  k.kind = KernelKind::Symbol;
  k.name = name;
  return from_kernel(kernel_table().intern(std::move(k)));
}

Expr Expr::continuous(const std::string& name, int index) {
  Kernel k;
  k.kind = KernelKind::Continuous;
  k.name = name;
  k.index = index;
  return from_kernel(kernel_table().intern(std::move(k)));
}

Expr Expr::discrete(const std::string& name, int index) {
  Kernel k;
  k.kind = KernelKind::Discrete;
  k.name = name;
  k.index = index;
  return from_kernel(kernel_table().intern(std::move(k)));
}

Expr Expr::parity(const std::string& name, int index) {
  Kernel k;
  k.kind = KernelKind::Parity;
  k.name = name;
  k.index = index;
  return from_kernel(kernel_table().intern(std::move(k)));
}

Expr Expr::jet(const std::string& name, const JetAtom& atom) {
  for (int d : atom.deriv)
    if (d < 0) throw Error("negative derivative index");
  Kernel k;
  k.kind = KernelKind::Jet;
  k.name = name;
  k.index = atom.dep;
  k.ns = atom.ns;
  k.deriv = atom.deriv;
  k.shift = atom.shift;
  return from_kernel(kernel_table().intern(std::move(k)));
}

Expr Expr::function(const std::string& name, std::vector<Expr> args, std::vector<int> deriv) {
  if (deriv.empty()) deriv.assign(args.size(), 0);
  if (deriv.size() != args.size()) throw Error("derivative index arity mismatch for " + name);
  for (int d : deriv)
    if (d < 0) throw Error("negative derivative index");
  Kernel k;
  k.kind = KernelKind::Function;
  k.name = name;
  k.args = std::move(args);
  k.deriv = std::move(deriv);
  return from_kernel(kernel_table().intern(std::move(k)));
}

Expr Expr::from_poly(Poly p) {
  for (auto& t : p.terms) t.mono = canonical_monomial(std::move(t.mono));
  return make_expr(collect(std::move(p.terms)), {});
}

Expr Expr::from_parts(Poly num, const Denominator& den) {
  Expr n = from_poly(std::move(num));
  Expr d(1);
  for (const auto& [k, m] : den) d *= pow(make_expr(k->poly, {}), static_cast<long>(m));
  return n / d;
}

const Poly& Expr::numerator() const { return rep_->num; }
const Denominator& Expr::denominator() const { return rep_->den; }
bool Expr::is_zero() const { return rep_->num.terms.empty(); }
std::size_t Expr::hash() const { return rep_->hash; }

std::optional<Rational> Expr::constant() const {
  const auto& t = rep_->num.terms;
  if (t.empty()) return Rational(0);
  if (t.size() == 1 && t[0].mono.empty() && rep_->den.empty()) return t[0].coef;
  return std::nullopt;
}

const Kernel* Expr::as_kernel() const {
  const auto& t = rep_->num.terms;
  if (t.size() == 1 && rep_->den.empty() && t[0].coef == 1 && t[0].mono.size() == 1 &&
      t[0].mono[0].second == Degree(1))
    return t[0].mono[0].first;
  return nullptr;
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.rep_ == b.rep_ || identical(a, b)) return true;
  // Denominator factor lists are not unique (A*B may be one factor or two),
  // so different denominators fall back to an exact difference.
  if (a.rep_->den.empty() && b.rep_->den.empty()) return false;
  return (a - b).is_zero();
}

Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  const auto& da = a.denominator();
  const auto& db = b.denominator();
  if (da.empty() && db.empty()) return make_expr(poly_add(a.numerator(), b.numerator()), {});
  if (da == db) {
    Poly n = poly_add(a.numerator(), b.numerator());
    Denominator d = da;
    cancel(n, d);
    return make_expr(std::move(n), std::move(d));
  }
  Denominator l = den_merge(da, db, false);
  Poly n = poly_add(poly_mul(a.numerator(), den_quotient(l, da)), poly_mul(b.numerator(), den_quotient(l, db)));
  refine(n, l);
  cancel(n, l);
  return make_expr(std::move(n), std::move(l));
}

Expr operator-(const Expr& a) { return make_expr(poly_scale(a.numerator(), Rational(-1)), a.denominator()); }

Expr operator-(const Expr& a, const Expr& b) { return a + (-b); }

Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_zero() || b.is_zero()) return Expr();
  Poly n = poly_mul(a.numerator(), b.numerator());
  if (a.denominator().empty() && b.denominator().empty()) return make_expr(std::move(n), {});
  Denominator d = den_merge(a.denominator(), b.denominator(), true);
  refine(n, d);
  cancel(n, d);
  return make_expr(std::move(n), std::move(d));
}

Expr operator/(const Expr& a, const Expr& b) {
  if (b.is_zero()) throw Error("division by zero");
  return a * inverse(b);
}

// ------------------------------------------------------ elementary maps

Expr pow(const Expr& base, long k) {
  if (k == 0) return Expr(1);
  if (k < 0) return pow(inverse(base), -k);
  if (base.denominator().empty() && base.numerator().terms.size() == 1) {
    const Term& t = base.numerator().terms[0];
    Monomial m = t.mono;
    for (auto& p : m) p.second = p.second * Degree(k);
    Rational c;
    mpz_pow_ui(c.get_num_mpz_t(), t.coef.get_num_mpz_t(), static_cast<unsigned long>(k));
    mpz_pow_ui(c.get_den_mpz_t(), t.coef.get_den_mpz_t(), static_cast<unsigned long>(k));
    Poly p;
    p.terms.push_back(Term{canonical_monomial(std::move(m)), c});
    return make_expr(std::move(p), {});
  }
  Expr r(1);
  Expr b = base;
  while (k > 0) {
    if (k & 1) r *= b;
    k >>= 1;
    if (k) b *= b;
  }
  return r;
}

Expr pow(const Expr& base, const Rational& exponent) {
  Rational e = exponent;
  e.canonicalize();
  if (e.get_den() == 1) return pow(base, e.get_num().get_si());
  if (base.is_zero()) {
    if (e > 0) return Expr();
    throw Error("division by zero");
  }
  mpz_class fl;
  mpz_fdiv_q(fl.get_mpz_t(), e.get_num_mpz_t(), e.get_den_mpz_t());
  Rational frac = e - Rational(fl);
  std::int64_t fn = frac.get_num().get_si(), fd = frac.get_den().get_si();
  if (base.denominator().empty() && base.numerator().terms.size() == 1) {
    const Term& t = base.numerator().terms[0];
    Degree de(e.get_num().get_si(), e.get_den().get_si());
    Monomial m;
    for (const auto& [k, d] : t.mono) {
      if (k->kind == KernelKind::Exp) {
        m.emplace_back(k, d);
        continue;
      }
      if (k->kind == KernelKind::Parity) throw Error("fractional power of a parity token");
      m.emplace_back(k, d * de);
    }
    Expr result;
    {
      // exp(a)^e = exp(e a)
      Monomial plain;
      Expr factor(1);
      for (const auto& p : m) {
        if (p.first->kind == KernelKind::Exp)
          factor *= make_exp_expr(p.first->args[0] * Expr(e));
        else
          plain.push_back(p);
      }
      Poly pp;
      pp.terms.push_back(Term{canonical_monomial(std::move(plain)), Rational(1)});
      result = make_expr(std::move(pp), {}) * factor;
    }
    // coefficient^e
    Rational c = t.coef;
    if (c == 1) return result;
    auto rn = exact_root(c.get_num(), static_cast<unsigned long>(fd));
    auto rd = exact_root(c.get_den(), static_cast<unsigned long>(fd));
    if (rn && rd) {
      Rational root(*rn, *rd);
      root.canonicalize();
      return result * pow(Expr(root), e.get_num().get_si());
    }
    if (c < 0) throw Error("even root of a negative constant");
    Kernel k;
    k.kind = KernelKind::Power;
    k.args = {Expr(c)};
    k.exponent = Degree(fn, fd);
    return result * pow(Expr(c), fl.get_si()) * from_kernel(kernel_table().intern(std::move(k)));
  }
  Kernel k;
  k.kind = KernelKind::Power;
  k.args = {base};
  k.exponent = Degree(fn, fd);
  return pow(base, fl.get_si()) * from_kernel(kernel_table().intern(std::move(k)));
}

Expr sqrt(const Expr& e) { return pow(e, Rational(1, 2)); }

Expr exp(const Expr& e) { return make_exp_expr(e); }

Expr ln(const Expr& e) {
  if (e.is_zero()) throw Error("logarithm of zero");
  if (auto c = e.constant(); c && *c == 1) return Expr();
  if (const Kernel* k = e.as_kernel(); k && k->kind == KernelKind::Exp) return k->args[0];
  return unary_kernel(KernelKind::Log, e);
}

namespace {
bool leading_negative(const Expr& e) { return !e.is_zero() && e.numerator().terms[0].coef < 0; }
}  // namespace

Expr sin(const Expr& e) {
  if (e.is_zero()) return Expr();
  if (leading_negative(e)) return -unary_kernel(KernelKind::Sin, -e);
  return unary_kernel(KernelKind::Sin, e);
}

Expr cos(const Expr& e) {
  if (e.is_zero()) return Expr(1);
  if (leading_negative(e)) return unary_kernel(KernelKind::Cos, -e);
  return unary_kernel(KernelKind::Cos, e);
}

// ------------------------------------------------------------- traversal

std::vector<const Kernel*> leaves(const Expr& e) {
  std::set<const Kernel*> s;
  for (const auto& t : e.numerator().terms)
    for (const auto& [k, d] : t.mono) s.insert(k->leaves.begin(), k->leaves.end());
  for (const auto& [k, m] : e.denominator()) s.insert(k->leaves.begin(), k->leaves.end());
  std::vector<const Kernel*> out(s.begin(), s.end());
  std::sort(out.begin(), out.end(), [](const Kernel* a, const Kernel* b) { return compare(a, b) < 0; });
  return out;
}

std::vector<JetAtom> jet_atoms(const Expr& e, std::optional<Namespace> ns) {
  std::vector<JetAtom> out;
  for (const Kernel* k : leaves(e))
    if (k->kind == KernelKind::Jet && (!ns || k->ns == *ns)) out.push_back(k->atom());
  return out;
}

bool depends_on(const Expr& e, const Kernel* leaf) {
  for (const auto& t : e.numerator().terms)
    for (const auto& [k, d] : t.mono)
      if (k->depends_on(leaf)) return true;
  for (const auto& [k, m] : e.denominator())
    if (k->depends_on(leaf)) return true;
  return false;
}

bool contains_function(const Expr& e) {
  std::vector<const Kernel*> stack;
  for (const auto& t : e.numerator().terms)
    for (const auto& [k, d] : t.mono) stack.push_back(k);
  for (const auto& [k, m] : e.denominator()) stack.push_back(k);
  while (!stack.empty()) {
    const Kernel* k = stack.back();
    stack.pop_back();
    if (k->kind == KernelKind::Function) return true;
    for (const auto& a : k->args) {
      for (const auto& t : a.numerator().terms)
        for (const auto& [kk, d] : t.mono) stack.push_back(kk);
      for (const auto& [kk, m] : a.denominator()) stack.push_back(kk);
    }
    for (const auto& t : k->poly.terms)
      for (const auto& [kk, d] : t.mono) stack.push_back(kk);
  }
  return false;
}

namespace {

class Deriver {
 public:
  explicit Deriver(const LeafDerivative& rule) : rule_(rule) {}

  Expr run(const Expr& e) {
    Expr dn = poly_derivative(e.numerator());
    if (e.denominator().empty()) return dn;
    Expr n = make_expr(e.numerator(), {});
    Expr logd;
    for (const auto& [k, m] : e.denominator()) {
      Expr df = kernel_derivative(k);
      if (df.is_zero()) continue;
      logd += Expr(static_cast<long>(m)) * df / make_expr(k->poly, {});
    }
    Expr d = make_expr(poly_constant(1), e.denominator());
    return (dn - n * logd) * d;
  }

 private:
  bool relevant(const Kernel* k) {
    for (const Kernel* leaf : k->leaves)
      if (!leaf_derivative(leaf).is_zero()) return true;
    return false;
  }

  const Expr& leaf_derivative(const Kernel* leaf) {
    auto it = leaf_memo_.find(leaf);
    if (it != leaf_memo_.end()) return it->second;
    auto r = rule_(leaf);
    return leaf_memo_.emplace(leaf, r ? *r : Expr()).first->second;
  }

  Expr poly_derivative(const Poly& p) {
    std::vector<Term> plain;
    Expr extra;
    for (const auto& t : p.terms) {
      for (std::size_t i = 0; i < t.mono.size(); ++i) {
        const auto& [k, d] = t.mono[i];
        Expr dk = kernel_derivative(k);
        if (dk.is_zero()) continue;
        Monomial rest = t.mono;
        Degree nd = d - Degree(1);
        if (k->kind == KernelKind::Exp || nd.is_zero())
          rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(i));
        else
          rest[i].second = nd;
        Rational c = t.coef * (k->kind == KernelKind::Exp ? Rational(1) : d.to_rational());
        const Poly& dp = dk.numerator();
        if (dk.denominator().empty()) {
          for (const auto& s : dp.terms) plain.push_back(Term{mono_mul(rest, s.mono), c * s.coef});
        } else {
          Poly rp;
          rp.terms.push_back(Term{rest, c});
          extra += make_expr(std::move(rp), {}) * dk;
        }
      }
    }
    return make_expr(collect(std::move(plain)), {}) + extra;
  }

  Expr kernel_derivative(const Kernel* k) {
    auto it = memo_.find(k);
    if (it != memo_.end()) return it->second;
    Expr r;
    if (k->is_leaf()) {
      r = leaf_derivative(k);
    } else if (relevant(k)) {
      switch (k->kind) {
        case KernelKind::Exp:
          r = from_kernel(k) * run(k->args[0]);
          break;
        case KernelKind::Log:
          r = run(k->args[0]) / k->args[0];
          break;
        case KernelKind::Sin:
          r = cos(k->args[0]) * run(k->args[0]);
          break;
        case KernelKind::Cos:
          r = -sin(k->args[0]) * run(k->args[0]);
          break;
        case KernelKind::Power:
          r = Expr(k->exponent.to_rational()) * from_kernel(k) * run(k->args[0]) / k->args[0];
          break;
        case KernelKind::Function:
          for (std::size_t i = 0; i < k->args.size(); ++i) {
            Expr da = run(k->args[i]);
            if (da.is_zero()) continue;
            std::vector<int> d = k->deriv;
            ++d[i];
            r += da * Expr::function(k->name, k->args, d);
          }
          break;
        case KernelKind::Sum:
          r = run(make_expr(k->poly, {}));
          break;
        default:
          break;
      }
    }
    memo_.emplace(k, r);
    return r;
  }

  const LeafDerivative& rule_;
  std::unordered_map<const Kernel*, Expr> memo_;
  std::unordered_map<const Kernel*, Expr> leaf_memo_;
};

class Mapper {
 public:
  explicit Mapper(const LeafMap& f, const LeafMap* kernel_map = nullptr) : f_(f), kf_(kernel_map) {}

  Expr run(const Expr& e) {
    bool any = false;
    for (const auto& t : e.numerator().terms)
      for (const auto& [k, d] : t.mono)
        if (changes(k)) any = true;
    for (const auto& [k, m] : e.denominator())
      if (changes(k)) any = true;
    if (!any) return e;
    std::vector<Term> keep;
    Expr num;
    for (const auto& t : e.numerator().terms) {
      bool ch = false;
      for (const auto& [k, d] : t.mono)
        if (changes(k)) ch = true;
      if (!ch) {
        keep.push_back(t);
        continue;
      }
      Expr term(t.coef);
      Monomial fixed;
      for (const auto& [k, d] : t.mono) {
        if (!changes(k)) {
          fixed.emplace_back(k, d);
          continue;
        }
        const Expr& img = image(k);
        if (d.is_integer())
          term *= pow(img, static_cast<long>(d.num));
        else
          term *= pow(img, d.to_rational());
      }
      if (!fixed.empty()) {
        Poly fp;
        fp.terms.push_back(Term{std::move(fixed), Rational(1)});
        term *= make_expr(std::move(fp), {});
      }
      num += term;
    }
    num += make_expr(collect(std::move(keep)), {});
    if (e.denominator().empty()) return num;
    Expr den(1);
    for (const auto& [k, m] : e.denominator()) den *= pow(image(k), static_cast<long>(m));
    return num / den;
  }

 private:
  bool changes(const Kernel* k) {
    if (kf_) return true;
    for (const Kernel* leaf : k->leaves)
      if (leaf_image(leaf)) return true;
    return false;
  }

  const std::optional<Expr>& leaf_image(const Kernel* leaf) {
    auto it = leaf_memo_.find(leaf);
    if (it != leaf_memo_.end()) return it->second;
    return leaf_memo_.emplace(leaf, f_(leaf)).first->second;
  }

  const Expr& image(const Kernel* k) {
    auto it = memo_.find(k);
    if (it != memo_.end()) return it->second;
    Expr r;
    if (kf_) {
      if (auto v = (*kf_)(k)) return memo_.emplace(k, *v).first->second;
    }
    if (k->is_leaf()) {
      const auto& li = leaf_image(k);
      r = li ? *li : from_kernel(k);
    } else {
      switch (k->kind) {
        case KernelKind::Exp:
          r = exp(run(k->args[0]));
          break;
        case KernelKind::Log:
          r = ln(run(k->args[0]));
          break;
        case KernelKind::Sin:
          r = sin(run(k->args[0]));
          break;
        case KernelKind::Cos:
          r = cos(run(k->args[0]));
          break;
        case KernelKind::Power:
          r = pow(run(k->args[0]), k->exponent.to_rational());
          break;
        case KernelKind::Function: {
          std::vector<Expr> args;
          for (const auto& a : k->args) args.push_back(run(a));
          r = Expr::function(k->name, std::move(args), k->deriv);
          break;
        }
        case KernelKind::Sum:
          r = run(make_expr(k->poly, {}));
          break;
        default:
          r = from_kernel(k);
      }
    }
    return memo_.emplace(k, r).first->second;
  }

  const LeafMap& f_;
  const LeafMap* kf_;
  std::unordered_map<const Kernel*, Expr> memo_;
  std::unordered_map<const Kernel*, std::optional<Expr>> leaf_memo_;
};

}  // namespace

Expr derive(const Expr& e, const LeafDerivative& rule) { return Deriver(rule).run(e); }

Expr partial(const Expr& e, const Kernel* leaf) {
  if (!depends_on(e, leaf)) return Expr();
  return derive(e, [leaf](const Kernel* k) -> std::optional<Expr> {
    if (k == leaf) return Expr(1);
    return std::nullopt;
  });
}

Expr partial(const Expr& e, const Expr& leaf) {
  const Kernel* k = leaf.as_kernel();
  if (!k || !k->is_leaf()) throw Error("partial derivative requires a leaf coordinate");
  return partial(e, k);
}

Expr map_leaves(const Expr& e, const LeafMap& f) { return Mapper(f).run(e); }

Expr map_kernels(const Expr& e, const LeafMap& f) {
  LeafMap none = [](const Kernel*) -> std::optional<Expr> { return std::nullopt; };
  return Mapper(none, &f).run(e);
}

Expr substitute(const Expr& e, const std::map<JetAtom, Expr>& bindings, const Context& ctx) {
  (void)ctx;
  if (bindings.empty()) return e;
  std::set<std::pair<Namespace, int>> bound_vars;
  for (const auto& [a, v] : bindings) bound_vars.emplace(a.ns, a.dep);
  for (const Kernel* k : leaves(e)) {
    if (k->kind != KernelKind::Jet || k->ns != Namespace::Auxiliary) continue;
    if (bound_vars.count({k->ns, k->index}) && !bindings.count(k->atom()))
      throw Error("unbound shifted auxiliary atom " + render(k));
  }
  return map_leaves(e, [&](const Kernel* k) -> std::optional<Expr> {
    if (k->kind != KernelKind::Jet) return std::nullopt;
    auto it = bindings.find(k->atom());
    if (it == bindings.end()) return std::nullopt;
    return it->second;
  });
}

namespace {

class Evaluator {
 public:
  explicit Evaluator(const LeafValue& f) : f_(f) {}

  double run(const Expr& e) {
    double n = poly(e.numerator());
    for (const auto& [k, m] : e.denominator()) n /= std::pow(kernel(k), m);
    return n;
  }

 private:
  double poly(const Poly& p) {
    double s = 0;
    for (const auto& t : p.terms) {
      double v = t.coef.get_d();
      for (const auto& [k, d] : t.mono) {
        double kv = kernel(k);
        if (d.is_integer())
          v *= std::pow(kv, static_cast<double>(d.num));
        else
          v *= std::pow(kv, static_cast<double>(d.num) / static_cast<double>(d.den));
      }
      s += v;
    }
    return s;
  }

  double kernel(const Kernel* k) {
    auto it = memo_.find(k);
    if (it != memo_.end()) return it->second;
    double r = 0;
    switch (k->kind) {
      case KernelKind::Exp:
        r = std::exp(run(k->args[0]));
        break;
      case KernelKind::Log:
        r = std::log(run(k->args[0]));
        break;
      case KernelKind::Sin:
        r = std::sin(run(k->args[0]));
        break;
      case KernelKind::Cos:
        r = std::cos(run(k->args[0]));
        break;
      case KernelKind::Power:
        r = std::pow(run(k->args[0]), static_cast<double>(k->exponent.num) / static_cast<double>(k->exponent.den));
        break;
      case KernelKind::Sum:
        r = poly(k->poly);
        break;
      default:
        r = f_(k);
    }
    memo_.emplace(k, r);
    return r;
  }

  const LeafValue& f_;
  std::unordered_map<const Kernel*, double> memo_;
};

}  // namespace

double evaluate(const Expr& e, const LeafValue& value) { return Evaluator(value).run(e); }

// --------------------------------------------------------------- Context

void Context::validate() const {
  std::set<std::string> seen;
  auto add = [&](const std::string& n) {
    if (n.empty()) throw Error("empty name");
    if (!seen.insert(n).second) throw Error("duplicate name: " + n);
  };
  for (const auto& n : continuous) add(n);
  for (const auto& n : discrete) add(n);
  for (const auto& n : dependent) add(n);
  for (const auto& n : auxiliary) add(n);
  for (const auto& p : parameters) add(p.name);
  for (const auto& f : functions) add(f.name);
  if (dependent.empty()) throw Error("at least one dependent variable is required");
  if (continuous.empty() && discrete.empty()) throw Error("at least one independent variable is required");
  if (!auxiliary.empty() && auxiliary.size() != dependent.size())
    throw Error("auxiliary variables must match the dependent variables in number");
}

void Context::ensure_auxiliary() {
  if (!auxiliary.empty()) return;
  auto taken = [&](const std::string& n) { return is_declared(n); };
  if (dependent.size() == 1) {
    std::string base = "v";
    while (taken(base)) base += "v";
    auxiliary.push_back(base);
    return;
  }
  std::string base = "v";
  for (;;) {
    bool ok = true;
    for (std::size_t i = 0; i < dependent.size(); ++i)
      if (taken(base + std::to_string(i + 1))) ok = false;
    if (ok) break;
    base += "v";
  }
  for (std::size_t i = 0; i < dependent.size(); ++i) auxiliary.push_back(base + std::to_string(i + 1));
}

namespace {
std::optional<int> find_name(const std::vector<std::string>& v, std::string_view n) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] == n) return static_cast<int>(i);
  return std::nullopt;
}
}  // namespace

std::optional<int> Context::continuous_index(std::string_view n) const { return find_name(continuous, n); }
std::optional<int> Context::discrete_index(std::string_view n) const { return find_name(discrete, n); }
std::optional<int> Context::dependent_index(std::string_view n) const { return find_name(dependent, n); }
std::optional<int> Context::auxiliary_index(std::string_view n) const { return find_name(auxiliary, n); }

const Parameter* Context::parameter(std::string_view n) const {
  for (const auto& p : parameters)
    if (p.name == n) return &p;
  return nullptr;
}

const FunctionDecl* Context::function(std::string_view n) const {
  for (const auto& f : functions)
    if (f.name == n) return &f;
  return nullptr;
}

bool Context::is_declared(std::string_view n) const {
  return continuous_index(n) || discrete_index(n) || dependent_index(n) || auxiliary_index(n) || parameter(n) ||
         function(n);
}

JetAtom Context::atom(int dep, Namespace ns) const {
  return JetAtom{ns, dep, std::vector<int>(static_cast<std::size_t>(p1()), 0),
                 std::vector<int>(static_cast<std::size_t>(p2()), 0)};
}

const std::string& Context::name_of(const JetAtom& a) const {
  const auto& names = a.ns == Namespace::Dependent ? dependent : auxiliary;
  if (a.dep < 0 || a.dep >= static_cast<int>(names.size())) throw Error("jet atom index out of range");
  return names[static_cast<std::size_t>(a.dep)];
}

Expr Context::jet(const JetAtom& a) const {
  if (static_cast<int>(a.deriv.size()) != p1() || static_cast<int>(a.shift.size()) != p2())
    throw Error("index arity mismatch with context");
  return Expr::jet(name_of(a), a);
}

Expr Context::u(int dep) const { return jet(atom(dep)); }
Expr Context::v(int dep) const { return jet(atom(dep, Namespace::Auxiliary)); }
Expr Context::x(int i) const { return Expr::continuous(continuous.at(static_cast<std::size_t>(i)), i); }
Expr Context::n(int j) const { return Expr::discrete(discrete.at(static_cast<std::size_t>(j)), j); }
Expr Context::parity(int j) const { return Expr::parity(discrete.at(static_cast<std::size_t>(j)), j); }
Expr Context::param(std::string_view name) const { return Expr::symbol(std::string(name)); }

}  // namespace ddn
