#include <cctype>

#include "ddnoether/calculus.hpp"
#include "ddnoether/expr.hpp"

namespace ddn {

namespace {

class Parser {
 public:
  Parser(std::string_view text, const Context& ctx) : s_(text), ctx_(ctx) {}

  Expr run() {
    Expr e = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected character '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) { throw ParseError(msg, pos_); }
  [[noreturn]] void fail_at(const std::string& msg, std::size_t at) { throw ParseError(msg, at); }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool peek(char c) {
    skip();
    return pos_ < s_.size() && s_[pos_] == c;
  }

  bool accept(char c) {
    if (peek(c)) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  Expr expr() {
    Expr e = term();
    for (;;) {
      if (accept('+'))
        e = e + term();
      else if (accept('-'))
        e = e - term();
      else
        return e;
    }
  }

  Expr term() {
    Expr e = unary();
    for (;;) {
      if (accept('*')) {
        e = e * unary();
      } else if (peek('/')) {
        std::size_t at = pos_;
        ++pos_;
        for (const Expr& d : divisor()) {
          if (d.is_zero()) fail_at("division by zero", at);
          e = e / d;
        }
      } else {
        return e;
      }
    }
  }

  // a/(b*c) divides by b and c in turn so that rendered denominators keep
  // their factors.
  std::vector<Expr> divisor() {
    std::size_t start = pos_;
    if (accept('(')) {
      std::vector<Expr> factors{unary()};
      while (accept('*')) factors.push_back(unary());
      if (accept(')') && !peek('^')) return factors;
      pos_ = start;
    }
    return {unary()};
  }

  Expr unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    return power();
  }

  Expr power() {
    Expr base = primary();
    if (!peek('^')) return base;
    std::size_t at = pos_;
    ++pos_;
    Expr ex = unary();
    if (auto c = ex.constant()) {
      try {
        return pow(base, *c);
      } catch (const ParseError&) {
        throw;
      } catch (const Error& err) {
        fail_at(err.what(), at);
      }
    }
    auto b = base.constant();
    if (!b || *b != -1) fail_at("non-constant exponent", at);
    return parity_power(ex, at);
  }

  // (-1)^(k0 + sum k_j n_j)
  Expr parity_power(const Expr& ex, std::size_t at) {
    if (!ex.denominator().empty()) fail_at("parity exponent must be linear in discrete variables", at);
    Expr r(1);
    for (const auto& t : ex.numerator().terms) {
      if (t.coef.get_den() != 1) fail_at("parity exponent must have integer coefficients", at);
      bool odd = mpz_odd_p(t.coef.get_num_mpz_t()) != 0;
      if (t.mono.empty()) {
        if (odd) r = -r;
        continue;
      }
      if (t.mono.size() != 1 || t.mono[0].first->kind != KernelKind::Discrete || !(t.mono[0].second == Degree(1)))
        fail_at("parity exponent must be linear in discrete variables", at);
      if (odd) r *= Expr::parity(t.mono[0].first->name, t.mono[0].first->index);
    }
    return r;
  }

  std::string ident() {
    skip();
    std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    return std::string(s_.substr(start, pos_ - start));
  }

  long integer() {
    skip();
    bool neg = false;
    if (pos_ < s_.size() && (s_[pos_] == '-' || s_[pos_] == '+')) {
      neg = s_[pos_] == '-';
      ++pos_;
      skip();
    }
    std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (start == pos_) fail("expected integer");
    long v = std::stol(std::string(s_.substr(start, pos_ - start)));
    return neg ? -v : v;
  }

  std::vector<int> int_list(char close, char alt) {
    std::vector<int> v;
    skip();
    if (peek(close) || (alt && peek(alt))) return v;
    for (;;) {
      v.push_back(static_cast<int>(integer()));
      if (!accept(',')) break;
    }
    return v;
  }

  Expr number() {
    std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (pos_ < s_.size() && (s_[pos_] == '.' || s_[pos_] == 'e' || s_[pos_] == 'E'))
      fail_at("floating-point constants are not allowed", start);
    return Expr(Rational(mpz_class(std::string(s_.substr(start, pos_ - start)))));
  }

  std::vector<Expr> args() {
    expect('(');
    std::vector<Expr> out;
    if (accept(')')) return out;
    for (;;) {
      out.push_back(expr());
      if (accept(')')) return out;
      expect(',');
    }
  }

  Expr jet(const std::string& name, Namespace ns, int dep, std::size_t at) {
    JetAtom a = ctx_.atom(dep, ns);
    if (!accept('[')) return ctx_.jet(a);
    std::size_t bracket = pos_;
    std::vector<int> first = int_list(']', ';');
    if (accept(';')) {
      std::vector<int> second = int_list(']', 0);
      expect(']');
      if (static_cast<int>(first.size()) != ctx_.p1() || static_cast<int>(second.size()) != ctx_.p2())
        fail_at("index arity mismatch for " + name, bracket);
      a.deriv = first;
      a.shift = second;
    } else {
      expect(']');
      if (ctx_.p2() == 0 && static_cast<int>(first.size()) == ctx_.p1())
        a.deriv = first;
      else if (ctx_.p1() == 0 && static_cast<int>(first.size()) == ctx_.p2())
        a.shift = first;
      else
        fail_at("index arity mismatch for " + name, bracket);
    }
    for (int d : a.deriv)
      if (d < 0) fail_at("negative derivative index", bracket);
    (void)at;
    return ctx_.jet(a);
  }

  Expr operator_apply(char op, std::size_t at) {
    expect('[');
    std::string var = ident();
    long count = 1;
    if (accept(',')) count = integer();
    expect(']');
    expect('(');
    Expr e = expr();
    expect(')');
    if (op == 'D') {
      auto i = ctx_.continuous_index(var);
      if (!i) fail_at("unknown continuous variable '" + var + "'", at);
      if (count < 0) fail_at("negative derivative index", at);
      for (long k = 0; k < count; ++k) e = total_derivative(e, *i, ctx_);
      return e;
    }
    auto j = ctx_.discrete_index(var);
    if (!j) fail_at("unknown discrete variable '" + var + "'", at);
    return shift(e, *j, static_cast<int>(count), ctx_);
  }

  Expr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c))) return number();
    if (c == '(') {
      ++pos_;
      Expr e = expr();
      expect(')');
      return e;
    }
    if (!(std::isalpha(static_cast<unsigned char>(c)) || c == '_')) fail("unexpected character '" + std::string(1, c) + "'");
    std::size_t at = pos_;
    std::string name = ident();
    if (auto i = ctx_.dependent_index(name)) return jet(name, Namespace::Dependent, *i, at);
    if (auto i = ctx_.auxiliary_index(name)) return jet(name, Namespace::Auxiliary, *i, at);
    if (auto i = ctx_.continuous_index(name)) return ctx_.x(*i);
    if (auto j = ctx_.discrete_index(name)) return ctx_.n(*j);
    if (ctx_.parameter(name)) return Expr::symbol(name);
    if (const FunctionDecl* f = ctx_.function(name)) {
      std::vector<int> deriv;
      if (accept('{')) {
        deriv = int_list('}', 0);
        expect('}');
      }
      std::vector<Expr> a = args();
      if (a.size() != f->signature.size()) fail_at("argument count mismatch for " + name, at);
      if (!deriv.empty() && deriv.size() != a.size()) fail_at("derivative index arity mismatch for " + name, at);
      for (int d : deriv)
        if (d < 0) fail_at("negative derivative index", at);
      return Expr::function(name, std::move(a), deriv);
    }
    if ((name == "D" || name == "S") && peek('[')) return operator_apply(name[0], at);
    if (name == "exp" || name == "ln" || name == "sin" || name == "cos" || name == "sqrt") {
      std::vector<Expr> a = args();
      if (a.size() != 1) fail_at(name + " takes one argument", at);
      try {
        if (name == "exp") return exp(a[0]);
        if (name == "ln") return ln(a[0]);
        if (name == "sin") return sin(a[0]);
        if (name == "cos") return cos(a[0]);
        return sqrt(a[0]);
      } catch (const ParseError&) {
        throw;
      } catch (const Error& err) {
        fail_at(err.what(), at);
      }
    }
    fail_at("unknown identifier '" + name + "'", at);
  }

  std::string_view s_;
  const Context& ctx_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse(std::string_view text, const Context& ctx) { return Parser(text, ctx).run(); }

}  // namespace ddn
