#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <vector>

#include "switchstab/lyap_cert.hpp"
#include "switchstab/switch_graph.hpp"

namespace switchstab {

/// Switching statistics of sigma on [0, t).
///
/// kappa[j] counts steps s in {0..t-1} with sigma(s) = j, rho[(k,l)] counts
/// steps s < t with sigma(s) = k and sigma(s+1) = l, and n_switches counts
/// s in {1..t} with sigma(s) != sigma(s-1). All three therefore read
/// sigma(0..t).
struct PrefixStats {
  std::size_t t = 0;
  std::size_t n_switches = 0;
  double nu = 0.0;
  std::map<Edge, long> rho;
  std::map<ModeId, long> kappa;
};

PrefixStats prefix_stats(const SwitchingSignal& sigma, std::size_t t);

/// Stats of a closed walk, read as one period of the repeated walk.
PrefixStats closed_walk_stats(const Walk& closed_walk);

/// Numerator and denominator of the switching ratio: gains of the traversed
/// transitions plus unstable activation, over stable activation.
struct RatioReport {
  double numerator = 0.0;
  double denominator = 0.0;
  double ratio = std::numeric_limits<double>::infinity();
  bool satisfied = false;  ///< ratio < 1 - margin with denominator > 0
};

/// Throws InputError naming the edge or mode if `gains` lacks an entry used
/// by `stats`. A zero denominator yields ratio = +inf, not satisfied.
RatioReport theorem1_ratio(const PrefixStats& stats, const GainTable& gains,
                           double margin = 0.0);

/// Exact asymptotic verdicts for a periodic signal.
struct AsymptoticVerdict {
  bool condition12 = false;  ///< switching frequency bounded away from zero
  bool condition13 = false;  ///< period ratio below one
  /// The cycle only dwells on an asymptotically stable mode through its
  /// self-loop: stable without any switching.
  bool trivial_case = false;
  RatioReport period;
};

/// Throws InputError for non-periodic signals.
AsymptoticVerdict asymptotic_check(const SwitchingSignal& sigma,
                                   const GainTable& gains);

struct GValues {
  double g1 = 0.0;  ///< stable activation, sum |ln lambda_j| kappa_j(t)
  double g2 = 0.0;  ///< transition gains plus unstable activation
};

/// The current holding interval is already inside kappa (which counts every
/// step before t), so it needs no separate term in g2. With this reading
/// V_{sigma(t)}(x(t)) <= V_{sigma(0)}(x0) exp(g2 - g1) holds for every t.
GValues g_functions(const SwitchingSignal& sigma, std::size_t t,
                    const GainTable& gains);

/// g_functions for t = 0..horizon, computed incrementally.
std::vector<GValues> g_series(const SwitchingSignal& sigma,
                              std::size_t horizon, const GainTable& gains);

struct EnvelopeBound {
  double g1 = 0.0;
  double g2 = 0.0;
  double c = 1.0;
  /// c ||x0|| exp((g2 - g1) / 2). V is quadratic in x, so the norm picks
  /// up the square root of the Lyapunov-level growth factor.
  double bound = 0.0;
  double lyap_bound = 0.0;  ///< V_{sigma(0)}(x0) exp(g2 - g1)
};

/// c = sqrt(lambda_max(sum_i P_i) / min_i lambda_min(P_i)).
double envelope_constant(std::span<const SubsystemCertificate> certs);

EnvelopeBound envelope(std::span<const SubsystemCertificate> certs,
                       const GainTable& gains, const Vector& x0,
                       const SwitchingSignal& sigma, std::size_t t);

}  // namespace switchstab
