#pragma once

#include <gmpxx.h>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ddn {

using Rational = mpq_class;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t offset);
  std::size_t offset() const { return offset_; }
  const std::string& message() const { return message_; }

 private:
  std::string message_;
  std::size_t offset_;
};

enum class Namespace { Dependent, Auxiliary };

// u^alpha_{J1;J2}: derivative orders per continuous variable, signed shifts
// per discrete variable.
struct JetAtom {
  Namespace ns = Namespace::Dependent;
  int dep = 0;
  std::vector<int> deriv;
  std::vector<int> shift;

  auto operator<=>(const JetAtom&) const = default;
  bool operator==(const JetAtom&) const = default;
};

struct Parameter {
  std::string name;
  bool positive = false;
};

struct FunctionDecl {
  std::string name;
  std::vector<std::string> signature;
};

class Expr;

class Context {
 public:
  std::vector<std::string> continuous;
  std::vector<std::string> discrete;
  std::vector<std::string> dependent;
  std::vector<std::string> auxiliary;
  std::vector<Parameter> parameters;
  std::vector<FunctionDecl> functions;

  int p1() const { return static_cast<int>(continuous.size()); }
  int p2() const { return static_cast<int>(discrete.size()); }
  int q() const { return static_cast<int>(dependent.size()); }

  // Throws Error when names collide or dimensions are degenerate.
  void validate() const;

  // Declares auxiliary names (v, or v1..vq) when none are present.
  void ensure_auxiliary();

  std::optional<int> continuous_index(std::string_view name) const;
  std::optional<int> discrete_index(std::string_view name) const;
  std::optional<int> dependent_index(std::string_view name) const;
  std::optional<int> auxiliary_index(std::string_view name) const;
  const Parameter* parameter(std::string_view name) const;
  const FunctionDecl* function(std::string_view name) const;
  bool is_declared(std::string_view name) const;

  JetAtom atom(int dep, Namespace ns = Namespace::Dependent) const;
  const std::string& name_of(const JetAtom& a) const;

  Expr jet(const JetAtom& a) const;
  Expr u(int dep = 0) const;
  Expr v(int dep = 0) const;
  Expr x(int i = 0) const;
  Expr n(int j = 0) const;
  Expr parity(int j = 0) const;
  Expr param(std::string_view name) const;
};

struct Kernel;

// Monomial exponent; integers in practice, rationals for radicals.
struct Degree {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Degree() = default;
  Degree(std::int64_t n) : num(n) {}  // NOLINT
  Degree(std::int64_t n, std::int64_t d);
  bool is_integer() const { return den == 1; }
  bool is_zero() const { return num == 0; }
  Rational to_rational() const { return Rational(num, den); }
  friend Degree operator+(Degree a, Degree b);
  friend Degree operator-(Degree a, Degree b);
  friend Degree operator*(Degree a, Degree b);
  friend Degree operator-(Degree a) { return Degree(-a.num, a.den); }
  friend bool operator==(Degree a, Degree b) { return a.num == b.num && a.den == b.den; }
  friend int compare(Degree a, Degree b);
};

using Monomial = std::vector<std::pair<const Kernel*, Degree>>;

struct Term {
  Monomial mono;
  Rational coef;
};

// Terms sorted by descending monomial order, no zero coefficients.
struct Poly {
  std::vector<Term> terms;
  bool empty() const { return terms.empty(); }
};

using Denominator = std::vector<std::pair<const Kernel*, int>>;

// Immutable symbolic value held in canonical rational-function form:
// a Laurent polynomial over kernels divided by a product of normalized
// multi-term polynomial factors.
class Expr {
 public:
  Expr();
  Expr(int value);                // NOLINT
  Expr(long value);               // NOLINT
  Expr(const Rational& value);    // NOLINT

  static Expr symbol(const std::string& name);
  static Expr continuous(const std::string& name, int index);
  static Expr discrete(const std::string& name, int index);
  static Expr parity(const std::string& name, int index);
  static Expr jet(const std::string& name, const JetAtom& atom);
  static Expr function(const std::string& name, std::vector<Expr> args,
                       std::vector<int> deriv = {});
  static Expr from_poly(Poly p);
  static Expr from_parts(Poly num, const Denominator& den);

  const Poly& numerator() const;
  const Denominator& denominator() const;

  bool is_zero() const;
  std::optional<Rational> constant() const;
  // The kernel when this is exactly one kernel to the first power.
  const Kernel* as_kernel() const;
  std::size_t hash() const;

  // Equal as rational functions; see identical() for the structural test.
  friend bool operator==(const Expr& a, const Expr& b);
  friend bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }
  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);
  Expr& operator+=(const Expr& b) { return *this = *this + b; }
  Expr& operator-=(const Expr& b) { return *this = *this - b; }
  Expr& operator*=(const Expr& b) { return *this = *this * b; }
  Expr& operator/=(const Expr& b) { return *this = *this / b; }

  struct Rep;

 private:
  explicit Expr(std::shared_ptr<const Rep> rep) : rep_(std::move(rep)) {}
  std::shared_ptr<const Rep> rep_;
  friend Expr make_expr(Poly num, Denominator den);
};

enum class KernelKind {
  Symbol,      // parameters, ansatz constants, homotopy variable
  Continuous,  // x^i
  Discrete,    // n^j
  Parity,      // (-1)^{n^j}
  Jet,         // u^alpha_{J1;J2} or v^alpha_{J1;J2}
  Function,    // f(args), possibly with partial derivative indices
  Power,       // args[0]^exponent for non-monomial bases
  Log,
  Sin,
  Cos,
  Exp,
  Sum  // normalized polynomial, only as a denominator factor
};

// Interned: two kernels are structurally equal iff they are the same object.
struct Kernel {
  KernelKind kind = KernelKind::Symbol;
  std::string name;
  int index = 0;
  Namespace ns = Namespace::Dependent;
  std::vector<int> deriv;
  std::vector<int> shift;
  std::vector<Expr> args;
  Degree exponent;
  Poly poly;
  std::size_t hash = 0;
  std::vector<const Kernel*> leaves;  // sorted by address

  bool is_leaf() const;
  JetAtom atom() const;
  bool depends_on(const Kernel* leaf) const;
};

// Same canonical representation. Implies ==, not conversely: a denominator
// may hold A*B as one factor or as two.
bool identical(const Expr& a, const Expr& b);

int compare(const Kernel* a, const Kernel* b);
int compare(const Monomial& a, const Monomial& b);
int compare(const Expr& a, const Expr& b);

struct ExprLess {
  bool operator()(const Expr& a, const Expr& b) const { return compare(a, b) < 0; }
};

Expr pow(const Expr& base, const Rational& exponent);
Expr pow(const Expr& base, long exponent);
Expr sqrt(const Expr& e);
Expr exp(const Expr& e);
Expr ln(const Expr& e);
Expr sin(const Expr& e);
Expr cos(const Expr& e);

// Leaves (symbols, variables, parity tokens, jets) reachable from e, ordered
// by kernel order.
std::vector<const Kernel*> leaves(const Expr& e);
std::vector<JetAtom> jet_atoms(const Expr& e, std::optional<Namespace> ns = std::nullopt);
bool depends_on(const Expr& e, const Kernel* leaf);
bool contains_function(const Expr& e);

// Derivation extending the given leaf rule by linearity, Leibniz and chain
// rules. The rule returns nullopt for leaves with zero derivative.
using LeafDerivative = std::function<std::optional<Expr>(const Kernel*)>;
Expr derive(const Expr& e, const LeafDerivative& rule);

// Formal partial derivative with respect to a leaf kernel.
Expr partial(const Expr& e, const Kernel* leaf);
Expr partial(const Expr& e, const Expr& leaf);

// Rebuilds e with leaves replaced; nullopt keeps a leaf as is.
using LeafMap = std::function<std::optional<Expr>(const Kernel*)>;
Expr map_leaves(const Expr& e, const LeafMap& f);
// Like map_leaves, but the map is consulted for every kernel (function
// applications included) before descending into its arguments.
Expr map_kernels(const Expr& e, const LeafMap& f);

// Simultaneous replacement of jet atoms. Auxiliary atoms of a variable with
// at least one binding must all be bound.
Expr substitute(const Expr& e, const std::map<JetAtom, Expr>& bindings, const Context& ctx);

using LeafValue = std::function<double(const Kernel*)>;
double evaluate(const Expr& e, const LeafValue& value);

std::string render(const Expr& e);
std::string render(const Kernel* k);

Expr parse(std::string_view text, const Context& ctx);

using ExprTuple = std::vector<Expr>;

}  // namespace ddn
