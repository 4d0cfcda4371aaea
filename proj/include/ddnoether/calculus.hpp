#pragma once

#include <string>
#include <vector>

#include "ddnoether/expr.hpp"

namespace ddn {

// (P1; P2): fluxes along the continuous and the discrete directions.
struct DivergencePair {
  ExprTuple p1;
  ExprTuple p2;
};

// One summand coeff * D_{J1} S_{J2} (targets[target]).
struct ByPartsTerm {
  Expr coeff;
  std::vector<int> deriv;
  std::vector<int> shift;
  int target = 0;
};

struct ByPartsResult {
  ExprTuple characteristic;  // one entry per target
  ExprTuple flux_d;          // length p1
  ExprTuple flux_s;          // length p2
};

// D_i: explicit x^i dependence plus promotion of every jet atom.
Expr total_derivative(const Expr& e, int i, const Context& ctx);
Expr total_derivative(const Expr& e, const std::vector<int>& orders, const Context& ctx);

// S_J: jets, explicit n and (-1)^n translated by J.
Expr shift(const Expr& e, const std::vector<int>& offsets, const Context& ctx);
Expr shift(const Expr& e, int j, int k, const Context& ctx);

// D_{J1} S_{J2} e.
Expr apply_jet(const Expr& e, const JetAtom& index, const Context& ctx);

// Jet atom kernel for a (namespace, variable, J1, J2) tuple.
Expr jet_expr(const Context& ctx, Namespace ns, int dep, const std::vector<int>& deriv,
              const std::vector<int>& shift);

// E_alpha(L) = sum (-D)_{J1} S_{-J2} dL/du^alpha_{J1;J2}.
Expr euler(const Expr& L, int dep, const Context& ctx, Namespace ns = Namespace::Dependent);
Expr euler(const Expr& L, const std::string& target, const Context& ctx);

// (D_F Q)_alpha = sum dF_alpha/du^beta_J D_{J1} S_{J2} Q^beta.
ExprTuple frechet(const ExprTuple& F, const ExprTuple& Q, const Context& ctx);
// (D_F^* W)_alpha = sum (-D)_{J1} S_{-J2} (dF_beta/du^alpha_J W^beta).
ExprTuple frechet_adjoint(const ExprTuple& F, const ExprTuple& W, const Context& ctx);

Expr divergence(const DivergencePair& P, const Context& ctx);

// Integration and summation by parts, derivative indices first, then shifts;
// every flux step is single.
ByPartsResult by_parts(const std::vector<ByPartsTerm>& terms, const ExprTuple& targets, const Context& ctx);

// Decomposes the null Lagrangian L into a divergence via the scaling
// homotopy; throws Error("not a null Lagrangian") or
// Error("homotopy integrand not closed-form").
DivergencePair null_lagrangian_decompose(const Expr& L, const Context& ctx);

// sum (-D)_{J1} S_{-J2} over one index pair.
Expr adjoint_jet(const Expr& e, const std::vector<int>& deriv, const std::vector<int>& shift, const Context& ctx);

DivergencePair zero_pair(const Context& ctx);
DivergencePair operator+(const DivergencePair& a, const DivergencePair& b);
DivergencePair operator-(const DivergencePair& a, const DivergencePair& b);

// Names of the jet namespaces (dependent first, then auxiliary) with their
// variable counts.
std::vector<std::pair<Namespace, int>> jet_variables(const Context& ctx);

}  // namespace ddn
