#include <sstream>

#include "ddnoether/expr.hpp"

namespace ddn {

namespace {

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

bool all_zero(const std::vector<int>& v) {
  for (int x : v)
    if (x != 0) return false;
  return true;
}

std::string render_poly(const Poly& p);

std::string render_degree(Degree d) {
  if (d.is_integer() && d.num > 0) return std::to_string(d.num);
  if (d.is_integer()) return "(" + std::to_string(d.num) + ")";
  return "(" + std::to_string(d.num) + "/" + std::to_string(d.den) + ")";
}

std::string render_factor(const Kernel* k, Degree d) {
  std::string s = render(k);
  if (d == Degree(1)) return s;
  if (k->kind == KernelKind::Power || k->kind == KernelKind::Parity) s = "(" + s + ")";
  return s + "^" + render_degree(d);
}

// Renders |coef| * mono; the sign is handled by the caller.
std::string render_term_abs(const Term& t) {
  Rational c = abs(t.coef);
  std::vector<std::string> up, down;
  for (const auto& [k, d] : t.mono) {
    if (d.num > 0)
      up.push_back(render_factor(k, d));
    else
      down.push_back(render_factor(k, -d));
  }
  std::string num;
  if (up.empty()) {
    num = c.get_num().get_str();
  } else {
    if (c.get_num() != 1) num = c.get_num().get_str() + "*";
    for (std::size_t i = 0; i < up.size(); ++i) {
      if (i) num += "*";
      num += up[i];
    }
  }
  if (c.get_den() != 1) down.insert(down.begin(), c.get_den().get_str());
  if (down.empty()) return num;
  if (down.size() == 1) return num + "/" + down[0];
  std::string den;
  for (std::size_t i = 0; i < down.size(); ++i) {
    if (i) den += "*";
    den += down[i];
  }
  return num + "/(" + den + ")";
}

std::string render_poly(const Poly& p) {
  if (p.terms.empty()) return "0";
  std::string s;
  for (std::size_t i = 0; i < p.terms.size(); ++i) {
    const Term& t = p.terms[i];
    bool neg = t.coef < 0;
    if (i == 0)
      s += neg ? "-" : "";
    else
      s += neg ? " - " : " + ";
    s += render_term_abs(t);
  }
  return s;
}

}  // namespace

std::string render(const Kernel* k) {
  switch (k->kind) {
    case KernelKind::Symbol:
    case KernelKind::Continuous:
    case KernelKind::Discrete:
      return k->name;
    case KernelKind::Parity:
      return "(-1)^" + k->name;
    case KernelKind::Jet: {
      if (all_zero(k->deriv) && all_zero(k->shift)) return k->name;
      if (k->shift.empty()) return k->name + "[" + join_ints(k->deriv) + "]";
      if (k->deriv.empty()) return k->name + "[;" + join_ints(k->shift) + "]";
      return k->name + "[" + join_ints(k->deriv) + ";" + join_ints(k->shift) + "]";
    }
    case KernelKind::Function: {
      std::string s = k->name;
      if (!all_zero(k->deriv)) s += "{" + join_ints(k->deriv) + "}";
      s += "(";
      for (std::size_t i = 0; i < k->args.size(); ++i) {
        if (i) s += ", ";
        s += render(k->args[i]);
      }
      return s + ")";
    }
    case KernelKind::Power:
      return "(" + render(k->args[0]) + ")^" + render_degree(k->exponent);
    case KernelKind::Log:
      return "ln(" + render(k->args[0]) + ")";
    case KernelKind::Sin:
      return "sin(" + render(k->args[0]) + ")";
    case KernelKind::Cos:
      return "cos(" + render(k->args[0]) + ")";
    case KernelKind::Exp:
      return "exp(" + render(k->args[0]) + ")";
    case KernelKind::Sum:
      return "(" + render_poly(k->poly) + ")";
  }
  return "?";
}

std::string render(const Expr& e) {
  const Poly& num = e.numerator();
  const Denominator& den = e.denominator();
  if (den.empty()) return render_poly(num);
  std::string n = render_poly(num);
  if (num.terms.size() > 1) n = "(" + n + ")";
  std::string d;
  for (std::size_t i = 0; i < den.size(); ++i) {
    if (i) d += "*";
    d += render(den[i].first);
    if (den[i].second != 1) d += "^" + std::to_string(den[i].second);
  }
  if (den.size() > 1 || den[0].second != 1) d = "(" + d + ")";
  return n + "/" + d;
}

}  // namespace ddn
