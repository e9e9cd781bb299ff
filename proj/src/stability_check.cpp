#include "switchstab/stability_check.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace switchstab {

namespace {

// Contribution of one activation step of mode j and one traversal of edge e
// to (g1, g2).
double stable_weight(const GainTable& gains, ModeId j) {
  return gains.cls(j) == StabilityClass::AsymptoticallyStable
             ? std::abs(gains.log_lambda(j))
             : 0.0;
}

double unstable_weight(const GainTable& gains, ModeId j) {
  return gains.cls(j) == StabilityClass::Unstable ? std::abs(gains.log_lambda(j))
                                                  : 0.0;
}

}  // namespace

PrefixStats prefix_stats(const SwitchingSignal& sigma, std::size_t t) {
  if (t == 0) throw InputError("prefix_stats: horizon must be at least 1");
  if (sigma.available() <= t) {
    throw InputError("prefix_stats: horizon " + std::to_string(t) +
                     " needs sigma(0.." + std::to_string(t) + "), signal has " +
                     std::to_string(sigma.available()) + " values");
  }
  PrefixStats s;
  s.t = t;
  ModeId prev = sigma.at(0);
  for (std::size_t k = 0; k < t; ++k) {
    const ModeId next = sigma.at(k + 1);
    ++s.kappa[prev];
    ++s.rho[{prev, next}];
    if (next != prev) ++s.n_switches;
    prev = next;
  }
  s.nu = static_cast<double>(s.n_switches) / static_cast<double>(t);
  return s;
}

PrefixStats closed_walk_stats(const Walk& closed_walk) {
  if (!closed_walk.closed() || closed_walk.length() == 0) {
    throw InputError("closed_walk_stats: walk is not closed");
  }
  const WalkStats ws = walk_stats(closed_walk);
  PrefixStats s;
  s.t = closed_walk.length();
  s.rho = ws.rho;
  s.kappa = ws.kappa;
  for (const auto& [e, n] : ws.rho) {
    if (!e.is_self_loop()) s.n_switches += static_cast<std::size_t>(n);
  }
  s.nu = static_cast<double>(s.n_switches) / static_cast<double>(s.t);
  return s;
}

RatioReport theorem1_ratio(const PrefixStats& stats, const GainTable& gains,
                           double margin) {
  RatioReport r;
  for (const auto& [e, n] : stats.rho) {
    r.numerator += gains.log_mu(e) * static_cast<double>(n);
  }
  for (const auto& [j, n] : stats.kappa) {
    r.numerator += unstable_weight(gains, j) * static_cast<double>(n);
    r.denominator += stable_weight(gains, j) * static_cast<double>(n);
  }
  if (r.denominator > 0.0) {
    r.ratio = r.numerator / r.denominator;
    r.satisfied = r.ratio < 1.0 - margin;
  }
  return r;
}

AsymptoticVerdict asymptotic_check(const SwitchingSignal& sigma,
                                   const GainTable& gains) {
  if (!sigma.is_periodic()) {
    throw InputError(
        "asymptotic_check: signal is not periodic; only prefix ratios are "
        "available");
  }
  const auto& cycle = sigma.cycle();
  PrefixStats period;
  period.t = cycle.size();
  for (std::size_t k = 0; k < cycle.size(); ++k) {
    const Edge e{cycle[k], cycle[(k + 1) % cycle.size()]};
    ++period.kappa[e.from];
    ++period.rho[e];
    if (!e.is_self_loop()) ++period.n_switches;
  }
  period.nu = static_cast<double>(period.n_switches) /
              static_cast<double>(period.t);

  AsymptoticVerdict v;
  v.period = theorem1_ratio(period, gains);
  v.condition12 = period.n_switches > 0;
  v.condition13 = v.period.satisfied;
  v.trivial_case = !v.condition12 && v.condition13 &&
                   std::all_of(cycle.begin(), cycle.end(), [&](ModeId j) {
                     return gains.cls(j) == StabilityClass::AsymptoticallyStable;
                   });
  return v;
}

std::vector<GValues> g_series(const SwitchingSignal& sigma,
                              std::size_t horizon, const GainTable& gains) {
  if (horizon > 0 && sigma.available() <= horizon) {
    throw InputError("g_series: signal too short for horizon " +
                     std::to_string(horizon));
  }
  std::vector<GValues> out(horizon + 1);
  for (std::size_t s = 0; s < horizon; ++s) {
    const ModeId cur = sigma.at(s);
    const ModeId next = sigma.at(s + 1);
    out[s + 1].g1 = out[s].g1 + stable_weight(gains, cur);
    out[s + 1].g2 = out[s].g2 + unstable_weight(gains, cur) +
                    gains.log_mu({cur, next});
  }
  return out;
}

GValues g_functions(const SwitchingSignal& sigma, std::size_t t,
                    const GainTable& gains) {
  return g_series(sigma, t, gains).back();
}

double envelope_constant(std::span<const SubsystemCertificate> certs) {
  if (certs.empty()) throw InputError("envelope: no certificates");
  Matrix sum = Matrix::Zero(certs.front().p.rows(), certs.front().p.cols());
  double min_eig = std::numeric_limits<double>::infinity();
  for (const auto& c : certs) {
    if (c.p.rows() != sum.rows()) {
      throw InputError("envelope: certificate dimensions differ");
    }
    sum += c.p;
    Eigen::SelfAdjointEigenSolver<Matrix> es(c.p, Eigen::EigenvaluesOnly);
    min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(sum, Eigen::EigenvaluesOnly);
  return std::sqrt(es.eigenvalues().maxCoeff() / min_eig);
}

EnvelopeBound envelope(std::span<const SubsystemCertificate> certs,
                       const GainTable& gains, const Vector& x0,
                       const SwitchingSignal& sigma, std::size_t t) {
  const ModeId first = sigma.at(0);
  auto it = std::find_if(certs.begin(), certs.end(),
                         [&](const auto& c) { return c.id == first; });
  if (it == certs.end()) {
    throw InputError("envelope: no certificate for mode " + std::to_string(first));
  }
  if (x0.size() != it->p.rows()) throw InputError("envelope: x0 has the wrong dimension");

  const GValues g = g_functions(sigma, t, gains);
  EnvelopeBound b;
  b.g1 = g.g1;
  b.g2 = g.g2;
  b.c = envelope_constant(certs);
  const double growth = std::exp(g.g2 - g.g1);
  b.bound = b.c * x0.norm() * std::sqrt(growth);
  b.lyap_bound = it->value(x0) * growth;
  return b;
}

}  // namespace switchstab
