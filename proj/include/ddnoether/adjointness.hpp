#pragma once

#include <string>
#include <vector>

#include "ddnoether/symmetry.hpp"
#include "ddnoether/variational.hpp"

namespace ddn {

// L = v^alpha F_alpha. Requires one auxiliary variable per dependent one.
Expr formal_lagrangian(const DDESystem& sys, const Context& ctx);

// F*_alpha = E_{u^alpha}(v^beta F_beta).
ExprTuple adjoint_system(const DDESystem& sys, const Context& ctx);

enum class SelfAdjointKind { Strict, Quasi, Weak };

const char* self_adjoint_kind_name(SelfAdjointKind k);

// v^alpha -> f^alpha(x, n, [u]); shifted and differentiated v atoms map to
// D_{J1} S_{J2} f^alpha.
struct Substitution {
  ExprTuple f;
};

// Throws Error when a binding contains auxiliary atoms or the arity is off.
void validate_substitution(const Substitution& sub, const Context& ctx);

Expr apply_substitution(const Expr& e, const Substitution& sub, const Context& ctx);

SelfAdjointKind classify_substitution(const Substitution& sub, const Context& ctx);

struct SelfAdjointVerdict {
  bool holds = false;
  SelfAdjointKind kind = SelfAdjointKind::Weak;
  ExprTuple residue;  // reduce_mod(F*|sub)
};

SelfAdjointVerdict check_self_adjoint(const DDESystem& sys, const Substitution& sub, const Context& ctx);

// Candidates v^alpha = c (-1)^{sum of a subset of n^j} u^alpha with c = +-1;
// returns those that pass check_self_adjoint. Heuristic, not a search.
std::vector<Substitution> enumerate_substitutions(const DDESystem& sys, const Context& ctx);

// Q*^beta = -sum_alpha sum_J (-D)_{J1} S_{-J2} (v^alpha K^beta_{alpha;J}).
ExprTuple extend_characteristic(const DDESystem& sys, const EvolutionaryField& X, const Context& ctx);

enum class AdjointRoute { Remark, Theorem, Auto };

struct AdjointLaw {
  ConservationLaw law;      // law of the original system, Div P = Q . F
  AdjointRoute route = AdjointRoute::Auto;  // the route that produced it
  DivergencePair unsubstituted;  // flux before v -> f
};

// Conservation law from a symmetry of a self-adjoint system. Auto tries the
// route without Q* first and falls back to Noether on the formal Lagrangian.
AdjointLaw adjoint_cl(const DDESystem& sys, const EvolutionaryField& X, const Substitution& sub, const Context& ctx,
                      AdjointRoute route = AdjointRoute::Auto);

}  // namespace ddn
