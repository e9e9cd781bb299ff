#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "switchstab/lyap_cert.hpp"
#include "switchstab/stability_check.hpp"
#include "switchstab/switch_graph.hpp"

namespace switchstab {

inline constexpr double kDivergenceLimit = 1e300;

/// Thrown when ||x(t)|| leaves the representable range.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::size_t t)
      : std::runtime_error(what), step(t) {}
  std::size_t step;
};

/// x(0..T) under x(t+1) = A_{sigma(t)} x(t).
struct Trajectory {
  std::vector<ModeId> modes;   ///< sigma(0..T)
  std::vector<Vector> states;  ///< x(0..T)
  std::vector<double> norms;   ///< ||x(t)||_2
  /// V_{sigma(t)}(x(t)); empty unless certificates were supplied.
  std::vector<double> lyap;
  /// c ||x0|| exp((g2(t) - g1(t)) / 2); empty unless certificates were
  /// supplied.
  std::vector<double> envelope;

  std::size_t horizon() const { return states.empty() ? 0 : states.size() - 1; }
};

/// Iterates the dynamics for T steps. With certificates (one per mode) the
/// Lyapunov values and the norm envelope are filled in as well.
///
/// Throws InputError on a dimension mismatch, or when sigma(t) is not a mode
/// of the system or sigma(t) -> sigma(t+1) is not an edge (naming t), and
/// DivergenceError once ||x(t)|| exceeds kDivergenceLimit.
Trajectory simulate(const SwitchedSystem& system, const SwitchingSignal& sigma,
                    const Vector& x0, std::size_t T,
                    std::span<const SubsystemCertificate> certs = {});

/// ||x(T)|| <= factor ||x(T - window)|| and ||x(T)|| <= factor ||x0||.
/// Finite-horizon evidence only. Throws InputError for window == 0 or
/// window > T.
bool check_convergence(const Trajectory& traj, std::size_t window, double factor);

struct EnvelopeCheck {
  bool ok = true;
  /// Worst of (lhs - bound) / max(bound, tiny) over both bounds and all t;
  /// negative when every bound holds with room.
  double max_violation = -std::numeric_limits<double>::infinity();
  std::optional<std::size_t> first_failure;
};

/// V_{sigma(t)}(x(t)) <= V_{sigma(0)}(x0) exp(g2 - g1) with relative
/// tolerance `rel_tol`, and ||x(t)|| <= c ||x0|| exp((g2 - g1) / 2), for every t of
/// the trajectory.
EnvelopeCheck verify_envelope(const Trajectory& traj,
                              std::span<const SubsystemCertificate> certs,
                              const GainTable& gains, const SwitchingSignal& sigma,
                              double rel_tol = 1e-6);

}  // namespace switchstab
