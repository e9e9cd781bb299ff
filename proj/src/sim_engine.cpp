#include "switchstab/sim_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace switchstab {

namespace {

const SubsystemCertificate& cert_of(std::span<const SubsystemCertificate> certs,
                                    ModeId id) {
  auto it = std::find_if(certs.begin(), certs.end(),
                         [id](const SubsystemCertificate& c) { return c.id == id; });
  if (it == certs.end()) {
    throw InputError("no certificate for mode " + std::to_string(id));
  }
  return *it;
}

}  // namespace

Trajectory simulate(const SwitchedSystem& system, const SwitchingSignal& sigma,
                    const Vector& x0, std::size_t T,
                    std::span<const SubsystemCertificate> certs) {
  if (x0.size() != system.dim()) {
    throw InputError("x0 has dimension " + std::to_string(x0.size()) +
                     ", system has dimension " + std::to_string(system.dim()));
  }
  if (!x0.allFinite()) throw InputError("x0 has non-finite entries");
  if (sigma.available() <= T) {
    throw InputError("signal defines " + std::to_string(sigma.available()) +
                     " values, horizon " + std::to_string(T) + " needs " +
                     std::to_string(T + 1));
  }
  const TransitionGraph& g = system.graph();

  Trajectory traj;
  traj.modes.reserve(T + 1);
  traj.states.reserve(T + 1);
  traj.norms.reserve(T + 1);
  Vector x = x0;
  for (std::size_t t = 0;; ++t) {
    const ModeId m = sigma.at(t);
    if (!g.has_vertex(m)) {
      throw InputError("sigma(" + std::to_string(t) + ") = " + std::to_string(m) +
                       " is not a mode of the system");
    }
    if (t > 0 && !g.has_edge({traj.modes.back(), m})) {
      throw InputError("transition " + to_string(Edge{traj.modes.back(), m}) +
                       " at t = " + std::to_string(t - 1) + " is not admissible");
    }
    const double n = x.norm();
    if (!(n <= kDivergenceLimit)) {
      throw DivergenceError("state norm exceeded 1e300 at t = " + std::to_string(t), t);
    }
    traj.modes.push_back(m);
    traj.states.push_back(x);
    traj.norms.push_back(n);
    if (t == T) break;
    x = system.mode(m).a() * x;
  }

  if (!certs.empty()) {
    const GainTable gains = build_gain_table(g, certs);
    const double c = envelope_constant(certs);
    const std::vector<GValues> gv = g_series(sigma, T, gains);
    traj.lyap.reserve(T + 1);
    traj.envelope.reserve(T + 1);
    for (std::size_t t = 0; t <= T; ++t) {
      traj.lyap.push_back(cert_of(certs, traj.modes[t]).value(traj.states[t]));
      traj.envelope.push_back(c * traj.norms[0] * std::exp(0.5 * (gv[t].g2 - gv[t].g1)));
    }
  }
  return traj;
}

bool check_convergence(const Trajectory& traj, std::size_t window, double factor) {
  const std::size_t T = traj.horizon();
  if (window == 0) throw InputError("convergence window must be at least 1");
  if (window > T) {
    throw InputError("convergence window " + std::to_string(window) +
                     " exceeds the horizon " + std::to_string(T));
  }
  const double last = traj.norms[T];
  return last <= factor * traj.norms[T - window] && last <= factor * traj.norms[0];
}

EnvelopeCheck verify_envelope(const Trajectory& traj,
                              std::span<const SubsystemCertificate> certs,
                              const GainTable& gains, const SwitchingSignal& sigma,
                              double rel_tol) {
  EnvelopeCheck out;
  if (traj.states.empty()) return out;
  const std::size_t T = traj.horizon();
  const double c = envelope_constant(certs);
  const double v0 = cert_of(certs, traj.modes[0]).value(traj.states[0]);
  const std::vector<GValues> gv = g_series(sigma, T, gains);
  constexpr double kTiny = std::numeric_limits<double>::min();

  auto record = [&](double lhs, double bound, std::size_t t) {
    const double scale = std::max(bound, kTiny);
    const double violation = (lhs - bound) / scale;
    out.max_violation = std::max(out.max_violation, violation);
    if (lhs > bound * (1.0 + rel_tol) + kTiny && out.ok) {
      out.ok = false;
      out.first_failure = t;
    }
  };
  for (std::size_t t = 0; t <= T; ++t) {
    const double growth = std::exp(gv[t].g2 - gv[t].g1);
    record(cert_of(certs, traj.modes[t]).value(traj.states[t]), v0 * growth, t);
    record(traj.norms[t], c * traj.norms[0] * std::sqrt(growth), t);
  }
  return out;
}

}  // namespace switchstab
