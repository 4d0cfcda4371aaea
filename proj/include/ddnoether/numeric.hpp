#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ddnoether/symmetry.hpp"
#include "ddnoether/variational.hpp"

namespace ddn {

// Periodic ring of N sites for a (1;1)-dimensional system. Each dependent
// variable stores orders[alpha] levels u, u', ..., so second-order leads are
// integrated as first-order pairs.
struct LatticeState {
  int N = 0;
  std::vector<int> orders;
  std::vector<double> values;  // site-major, levels of all variables per site
  double time = 0.0;

  int width() const;
  double& at(int site, int dep, int level);
  double at(int site, int dep, int level) const;
};

using ParameterValues = std::map<std::string, double>;

// Jets wrap mod N; t is the state time, n the site index. Throws on
// derivative atoms beyond the stored levels, auxiliary atoms, unknown
// functions, unbound parameters and non-finite results.
double eval_on_lattice(const Expr& e, const LatticeState& state, int site, const ParameterValues& params = {});

// Stored levels per variable from the solved forms u^alpha_{k;0} = rhs.
std::vector<int> lattice_orders(const DDESystem& sys, const Context& ctx);

// Uniform values in [lo, hi] for every level, drawn from mt19937_64(seed).
LatticeState random_state(int N, const std::vector<int>& orders, std::uint64_t seed, double lo = 0.5,
                          double hi = 1.5);

struct Trajectory {
  std::vector<LatticeState> states;
  double dt = 0.0;
};

// Classical fourth-order Runge-Kutta on the ring.
Trajectory integrate(const DDESystem& sys, const LatticeState& state0, double dt, int steps, const Context& ctx,
                     const ParameterValues& params = {});

struct NumericReport {
  double max_density_drift = 0.0;               // max_t |sum P1(t) - sum P1(0)| / |sum P1(0)|
  double pointwise_divergence_residual = 0.0;   // max |reduced D_t P1 + (S - id) P2|
  int steps = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
};

// The drift is absolute when the initial total vanishes.
NumericReport check_cl_numeric(const ConservationLaw& cl, const DDESystem& sys, const Trajectory& traj,
                               const Context& ctx, const ParameterValues& params = {});

}  // namespace ddn
