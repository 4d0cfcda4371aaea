#include "ddnoether/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace ddn {

int LatticeState::width() const {
  int w = 0;
  for (int k : orders) w += k;
  return w;
}

namespace {

int offset_of(const std::vector<int>& orders, int dep) {
  int off = 0;
  for (int a = 0; a < dep; ++a) off += orders[static_cast<std::size_t>(a)];
  return off;
}

int wrap(int i, int N) { return ((i % N) + N) % N; }

void require_ring(const Context& ctx) {
  if (ctx.p1() != 1 || ctx.p2() != 1) throw Error("numeric lab needs one continuous and one discrete variable");
}

int shift_span(const Expr& e) {
  int lo = 0, hi = 0;
  for (const JetAtom& a : jet_atoms(e)) {
    lo = std::min(lo, a.shift[0]);
    hi = std::max(hi, a.shift[0]);
  }
  return hi - lo;
}

}  // namespace

double& LatticeState::at(int site, int dep, int level) {
  return values[static_cast<std::size_t>(wrap(site, N) * width() + offset_of(orders, dep) + level)];
}

double LatticeState::at(int site, int dep, int level) const {
  return values[static_cast<std::size_t>(wrap(site, N) * width() + offset_of(orders, dep) + level)];
}

double eval_on_lattice(const Expr& e, const LatticeState& state, int site, const ParameterValues& params) {
  double r = evaluate(e, [&](const Kernel* k) -> double {
    switch (k->kind) {
      case KernelKind::Continuous:
        return state.time;
      case KernelKind::Discrete:
        return site;
      case KernelKind::Parity:
        return (site % 2 == 0) ? 1.0 : -1.0;
      case KernelKind::Jet: {
        if (k->ns != Namespace::Dependent) throw Error("auxiliary atom on lattice: " + render(k));
        int level = k->deriv[0];
        if (level >= state.orders[static_cast<std::size_t>(k->index)]) throw Error("unreduced derivative atom: " + render(k));
        return state.at(site + k->shift[0], k->index, level);
      }
      case KernelKind::Symbol: {
        auto it = params.find(k->name);
        if (it == params.end()) throw Error("unbound parameter: " + k->name);
        return it->second;
      }
      default:
        throw Error("cannot evaluate kernel numerically: " + render(k));
    }
  });
  if (!std::isfinite(r)) throw Error("non-finite value at site " + std::to_string(site));
  return r;
}

std::vector<int> lattice_orders(const DDESystem& sys, const Context& ctx) {
  require_ring(ctx);
  std::vector<int> orders(static_cast<std::size_t>(ctx.q()), 0);
  for (const auto& sf : sys.solved_forms) {
    if (sf.lead.ns != Namespace::Dependent || sf.lead.shift[0] != 0 || sf.lead.deriv[0] < 1) continue;
    int& k = orders[static_cast<std::size_t>(sf.lead.dep)];
    if (k == 0 || sf.lead.deriv[0] < k) k = sf.lead.deriv[0];
  }
  for (int k : orders)
    if (k == 0) throw Error("pre violated: every variable needs a solved form u_{k;0} = rhs");
  return orders;
}

LatticeState random_state(int N, const std::vector<int>& orders, std::uint64_t seed, double lo, double hi) {
  if (N <= 0) throw Error("ring size must be positive");
  LatticeState s;
  s.N = N;
  s.orders = orders;
  s.values.resize(static_cast<std::size_t>(N * s.width()));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  for (double& v : s.values) v = dist(rng);
  return s;
}

Trajectory integrate(const DDESystem& sys, const LatticeState& state0, double dt, int steps, const Context& ctx,
                     const ParameterValues& params) {
  if (!(dt > 0)) throw Error("dt must be positive");
  std::vector<int> orders = lattice_orders(sys, ctx);
  if (orders != state0.orders) throw Error("state layout does not match the system");
  std::vector<const Expr*> rhs(orders.size());
  int span = 0;
  for (const auto& sf : sys.solved_forms) {
    if (sf.lead.ns != Namespace::Dependent || sf.lead.shift[0] != 0) continue;
    if (sf.lead.deriv[0] != orders[static_cast<std::size_t>(sf.lead.dep)]) continue;
    if (!rhs[static_cast<std::size_t>(sf.lead.dep)]) rhs[static_cast<std::size_t>(sf.lead.dep)] = &sf.rhs;
    span = std::max(span, shift_span(sf.rhs));
  }
  if (state0.N < span + 1) throw Error("ring too small for the stencil");

  auto field = [&](const LatticeState& s, std::vector<double>& out) {
    out.assign(s.values.size(), 0.0);
    int w = s.width();
    for (int site = 0; site < s.N; ++site) {
      for (std::size_t a = 0; a < orders.size(); ++a) {
        int base = site * w + offset_of(orders, static_cast<int>(a));
        int k = orders[a];
        for (int l = 0; l + 1 < k; ++l) out[static_cast<std::size_t>(base + l)] = s.values[static_cast<std::size_t>(base + l + 1)];
        out[static_cast<std::size_t>(base + k - 1)] = eval_on_lattice(*rhs[a], s, site, params);
      }
    }
  };

  Trajectory traj;
  traj.dt = dt;
  traj.states.reserve(static_cast<std::size_t>(steps) + 1);
  traj.states.push_back(state0);
  LatticeState cur = state0;
  std::vector<double> k1, k2, k3, k4;
  LatticeState tmp = cur;
  auto stage = [&](const std::vector<double>& k, double h) {
    tmp.time = cur.time + h;
    for (std::size_t i = 0; i < cur.values.size(); ++i) tmp.values[i] = cur.values[i] + h * k[i];
  };
  for (int step = 1; step <= steps; ++step) {
    try {
      field(cur, k1);
      stage(k1, dt / 2);
      field(tmp, k2);
      stage(k2, dt / 2);
      field(tmp, k3);
      stage(k3, dt);
      field(tmp, k4);
    } catch (const Error& e) {
      throw Error("integration failed at step " + std::to_string(step) + ": " + e.what());
    }
    for (std::size_t i = 0; i < cur.values.size(); ++i) {
      cur.values[i] += dt / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
      if (!std::isfinite(cur.values[i])) throw Error("non-finite state at step " + std::to_string(step));
    }
    cur.time = state0.time + step * dt;
    traj.states.push_back(cur);
  }
  return traj;
}

NumericReport check_cl_numeric(const ConservationLaw& cl, const DDESystem& sys, const Trajectory& traj,
                               const Context& ctx, const ParameterValues& params) {
  require_ring(ctx);
  NumericReport rep;
  rep.steps = static_cast<int>(traj.states.size()) - 1;
  rep.dt = traj.dt;
  if (traj.states.empty()) return rep;
  const Expr& P1 = cl.P.p1[0];
  const Expr& P2 = cl.P.p2[0];
  Expr dP1 = reduce_mod(total_derivative(P1, 0, ctx), sys, ctx);

  auto total = [&](const LatticeState& s) {
    double sum = 0.0;
    for (int site = 0; site < s.N; ++site) sum += eval_on_lattice(P1, s, site, params);
    return sum;
  };
  double s0 = total(traj.states.front());
  double scale = s0 != 0.0 ? std::abs(s0) : 1.0;
  for (const auto& s : traj.states) {
    rep.max_density_drift = std::max(rep.max_density_drift, std::abs(total(s) - s0) / scale);
    for (int site = 0; site < s.N; ++site) {
      double r = eval_on_lattice(dP1, s, site, params) + eval_on_lattice(P2, s, site + 1, params) -
                 eval_on_lattice(P2, s, site, params);
      rep.pointwise_divergence_residual = std::max(rep.pointwise_divergence_residual, std::abs(r));
    }
  }
  return rep;
}

}  // namespace ddn
