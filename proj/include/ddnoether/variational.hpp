#pragma once

#include <string>

#include "ddnoether/calculus.hpp"
#include "ddnoether/symmetry.hpp"

namespace ddn {

enum class Verification { ExactIdentity, OnSolutions, Unverified };

const char* verification_name(Verification v);

// Div P = Q . F, with F the equations of the system the law belongs to.
struct ConservationLaw {
  DivergencePair P;
  ExprTuple Q;
  Verification verified = Verification::Unverified;
};

// Equations E_alpha(L), one per dependent variable; no solved forms.
DDESystem euler_lagrange(const Expr& L, const Context& ctx);

struct VariationalVerdict {
  bool holds = false;
  ExprTuple residue;  // E(pr X(L) + L Div xi), dependent then auxiliary
};

VariationalVerdict is_variational_symmetry(const Expr& L, const VectorField& X, const Context& ctx);
VariationalVerdict is_variational_symmetry(const Expr& L, const EvolutionaryField& X, const Context& ctx);

// Constructive Noether map. The law satisfies Div P = Q . E(L) (auxiliary
// components included when X carries them) and is re-verified before it is
// returned. Throws Error("not a variational symmetry") when the criterion
// fails.
ConservationLaw noether(const Expr& L, const VectorField& X, const Context& ctx);
ConservationLaw noether(const Expr& L, const EvolutionaryField& X, const Context& ctx);

enum class VerifyMode { Identity, OnSolutions };

struct LawVerdict {
  bool holds = false;
  Verification level = Verification::Unverified;
  Expr residue;
};

// Identity: Div P - Q . F == 0. On solutions: reduce_mod(Div P) == 0.
LawVerdict verify_cl(const ConservationLaw& cl, const DDESystem& sys, VerifyMode mode, const Context& ctx);

// Tries the identity first, then on-solutions when solved forms exist.
LawVerdict verify_cl_best(const ConservationLaw& cl, const DDESystem& sys, const Context& ctx);

// P and P' differ by a trivial law: Div(P - P') vanishes identically, or
// the characteristic of P - P' vanishes on solutions (needs solved forms).
bool equivalent_laws(const DivergencePair& a, const DivergencePair& b, const DDESystem& sys, const Context& ctx);

}  // namespace ddn
