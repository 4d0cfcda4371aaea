#pragma once

#include <map>
#include <string>
#include <vector>

#include "ddnoether/calculus.hpp"
#include "ddnoether/expr.hpp"

namespace ddn {

enum class FieldKind { Point, Regular, Generalized };

// X = xi^i d/dx^i + phi^alpha d/du^alpha.
struct VectorField {
  ExprTuple xi;
  ExprTuple phi;
  FieldKind kind = FieldKind::Generalized;
};

// Q^alpha d/du^alpha, optionally with components along the auxiliary
// variables (used for the extended fields of formal Lagrangians).
struct EvolutionaryField {
  ExprTuple Q;
  ExprTuple Q_aux;
};

enum class ProlongationMode { CaseI, CaseII, Regular };

const char* mode_name(ProlongationMode m);

// lead = rhs. cone[j] is '*', '+' or '-': the shifts M along n^j for which
// S_M applies to the solved form ('+' means M >= 0).
struct SolvedForm {
  JetAtom lead;
  Expr rhs;
  std::vector<char> cone;
  int equation = 0;
};

struct DDESystem {
  ExprTuple equations;
  std::vector<SolvedForm> solved_forms;
};

// Computes the admissible shift cone; throws when the lead is not extreme
// among the atoms of its class.
SolvedForm make_solved_form(const JetAtom& lead, const Expr& rhs, int equation, const Context& ctx);

bool is_point_field(const VectorField& X);
bool is_regular_field(const VectorField& X);
FieldKind classify(const VectorField& X);

// Q^alpha = phi^alpha - xi^i u^alpha_{1_i;0}; requires xi = xi(x).
EvolutionaryField to_evolutionary(const VectorField& X, const Context& ctx);

// Coefficient of d/du^alpha_{J1;J2} in pr X.
Expr prolongation_coefficient(const VectorField& X, const JetAtom& a, ProlongationMode mode, const Context& ctx);

Expr prolong_apply(const VectorField& X, const Expr& e, ProlongationMode mode, const Context& ctx);
Expr prolong_apply(const EvolutionaryField& X, const Expr& e, const Context& ctx);

// Replaces every atom inside the cone of a solved form, repeatedly, until no
// such atom remains.
Expr reduce_mod(const Expr& e, const DDESystem& sys, const Context& ctx, int depth_cap = 64);

// True when the jet atom is an extension of some solved-form lead.
bool is_eliminable(const JetAtom& a, const DDESystem& sys);

struct SymmetryVerdict {
  bool holds = false;
  ExprTuple residue;
};

SymmetryVerdict check_symmetry(const DDESystem& sys, const VectorField& X, ProlongationMode mode, const Context& ctx);
SymmetryVerdict check_symmetry(const DDESystem& sys, const EvolutionaryField& X, const Context& ctx);

EvolutionaryField lie_bracket(const EvolutionaryField& a, const EvolutionaryField& b, const Context& ctx);

// K * D_{J1} S_{J2} F_beta; index.deriv = J1, index.shift = J2,
// index.dep = beta.
struct DecompositionTerm {
  Expr K;
  JetAtom index;
};

struct Decomposition {
  std::vector<DecompositionTerm> terms;
  Expr remainder;
};

// Writes e as sum K D_{J1} S_{J2} F_beta + remainder by eliminating the
// highest eliminable atom first.
Decomposition decompose(const Expr& e, const DDESystem& sys, const Context& ctx);

// pr X(F_alpha) = sum K^beta_{alpha;J} D_{J1} S_{J2} F_beta, one row per alpha.
struct SymmetryDecomposition {
  std::vector<std::vector<DecompositionTerm>> rows;
};

// Throws Error("decomposition failed") on a nonzero remainder.
SymmetryDecomposition decompose_symmetry(const DDESystem& sys, const EvolutionaryField& X, const Context& ctx);

// Rebuilds sum K D S F from the decomposition terms.
Expr expand_decomposition(const std::vector<DecompositionTerm>& terms, const DDESystem& sys, const Context& ctx);

// ---------------------------------------------------- point symmetries

// xi(t,n,u) d/dt + phi(t,n,u) d/du with opaque unknown functions.
VectorField point_ansatz(const Context& ctx);

struct DeterminingSystem {
  VectorField ansatz;                     // after the structural steps
  std::vector<std::string> xi_functions;  // unknown functions by origin
  std::vector<std::string> phi_functions;
  std::vector<std::string> steps;  // rendered structural conditions
  ExprTuple split;                 // coefficient conditions, linear in the unknowns
};

// For a scalar equation solved as u' = f(x, n, u_{-l1}, ..., u_{l2}): the
// reduced linearized condition, the structural consequences of its second
// derivatives along shifted atoms, and the polynomial split in the jets.
DeterminingSystem determining_equations(const DDESystem& sys, const VectorField& ansatz, const Context& ctx);

// Unknown functions of (t, n) replaced by closed-form carriers in t and
// (-1)^n with unknown constants, or by functions of n times powers of t.
struct CarrierAnsatz {
  std::map<std::string, Expr> bodies;  // in terms of t and n
  std::vector<std::string> constants;
  std::vector<std::string> functions_of_n;
};

CarrierAnsatz default_carrier_ansatz(const DeterminingSystem& det, const Context& ctx);
Expr apply_carrier_ansatz(const Expr& e, const CarrierAnsatz& ansatz, const Context& ctx);

struct LinearSolution {
  bool consistent = true;
  std::vector<std::string> free_constants;
  std::map<std::string, Expr> constant_values;
  std::vector<std::string> free_functions;
  std::map<std::string, Expr> function_values;
  ExprTuple unsplit;
};

// Solves conditions linear in the constants and in unknown functions of n,
// splitting on powers of t, n and (-1)^n.
LinearSolution solve_linear_ansatz(const ExprTuple& conditions, const std::vector<std::string>& constants,
                                   const std::vector<std::string>& functions_of_n, const Context& ctx);

// Substitutes solved constants and functions of n into e.
Expr apply_solution(const Expr& e, const LinearSolution& sol, const Context& ctx);

struct PointSymmetryResult {
  DeterminingSystem determining;
  LinearSolution solution;
  VectorField general;
  std::vector<std::string> parameters;  // c1, c2, ..., c_k(n)
  std::vector<VectorField> generators;
};

// Throws Error("pre violated: not first-order scalar") outside the
// supported class.
PointSymmetryResult solve_point_symmetries(const DDESystem& sys, const Context& ctx);

}  // namespace ddn
