#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "switchstab/switch_graph.hpp"
#include "switchstab/types.hpp"

namespace switchstab {

inline constexpr double kDefaultClassTolerance = 1e-9;

/// Square, full-rank dynamics matrix of one mode.
class SubsystemMatrix {
 public:
  /// Throws InputError if `a` is empty, non-square or rank deficient.
  SubsystemMatrix(ModeId id, Matrix a);

  ModeId id() const { return id_; }
  const Matrix& a() const { return a_; }
  Eigen::Index dim() const { return a_.rows(); }

 private:
  ModeId id_;
  Matrix a_;
};

enum class StabilityClass { AsymptoticallyStable, MarginallyStable, Unstable };

const char* to_string(StabilityClass c);

double spectral_radius(const Matrix& a);

/// Largest singular value, computed as sqrt(lambda_max(A^T A)).
double spectral_norm(const Matrix& a);

/// rho(A) < 1 - tol: asymptotically stable; rho(A) > 1 + tol: unstable.
/// In between, A is marginally stable only if every eigenvalue on the unit
/// circle is semisimple; otherwise its powers grow and it counts as unstable.
StabilityClass classify(const SubsystemMatrix& a,
                        double tol_class = kDefaultClassTolerance);

/// Unique symmetric P with A^T P A - P + Q = 0. Solved through the
/// d^2-dimensional Kronecker system. Throws InputError if rho(A) >= 1.
Matrix solve_discrete_lyapunov(const Matrix& a, const Matrix& q);

/// Quadratic Lyapunov-like function V(x) = x^T P x with decay/growth factor
/// lambda: V(Ax) <= lambda V(x).
struct SubsystemCertificate {
  ModeId id{};
  Matrix p;
  double lambda{};
  StabilityClass cls{};

  double value(const Vector& x) const { return x.dot(p * x); }
};

/// Builds the certificate for one mode.
///
///  * stable: P solves the Lyapunov equation with Q, lambda = 1 -
///    lambda_min(Q) / lambda_max(P);
///  * marginal: lambda = 1, P = I if A^T A <= I, otherwise assembled from the
///    stable and unit-circle invariant subspaces;
///  * unstable: P = I, lambda = max(1 + 2 ||A||, ||A||^2). The first term
///    is the usual crude estimate; it is a valid bound only for
///    ||A|| <= 1 + sqrt(2).
///
/// Throws CertificateError naming the mode when the marginal construction
/// fails.
SubsystemCertificate certificate_for(const SubsystemMatrix& a, const Matrix& q,
                                     double tol_class = kDefaultClassTolerance);

/// Smallest mu with x^T P_to x <= mu x^T P_from x for all x, i.e.
/// lambda_max(P_from^{-1/2} P_to P_from^{-1/2}).
double mu_gain(const Matrix& p_from, const Matrix& p_to);

/// lambda P - A^T P A is PSD up to -1e-9 ||P||.
bool verify_certificate(const SubsystemCertificate& cert,
                        const SubsystemMatrix& a);

/// Per-edge transition gains and per-mode decay factors, with the stability
/// class of each mode. Usually built from certificates, but may also be given
/// directly in log form.
class GainTable {
 public:
  GainTable() = default;

  void set_mode(ModeId j, double lambda, StabilityClass cls);
  void set_mu(const Edge& e, double mu);

  double mu(const Edge& e) const;
  double log_mu(const Edge& e) const;
  double lambda(ModeId j) const;
  double log_lambda(ModeId j) const;
  StabilityClass cls(ModeId j) const;

  bool has_mu(const Edge& e) const { return mu_.contains(e); }
  bool has_mode(ModeId j) const { return modes_.contains(j); }

  const std::map<Edge, double>& mu_map() const { return mu_; }
  std::vector<ModeId> modes() const;

  /// Table from log-gains. The class of each mode follows the sign of
  /// ln(lambda). Missing self-loop gains default to mu = 1; any other missing
  /// edge of `g` is an InputError.
  static GainTable from_logs(const TransitionGraph& g,
                             const std::map<ModeId, double>& log_lambda,
                             const std::map<Edge, double>& log_mu);

 private:
  struct ModeGain {
    double lambda;
    StabilityClass cls;
  };
  std::map<ModeId, ModeGain> modes_;
  std::map<Edge, double> mu_;
};

/// mu on every edge of `g` (exactly 1 on self-loops) plus lambda and class
/// for every certified mode.
GainTable build_gain_table(const TransitionGraph& g,
                           std::span<const SubsystemCertificate> certs);

/// Mode matrices plus their transition graph. Every graph vertex has exactly
/// one matrix and all matrices share one dimension.
class SwitchedSystem {
 public:
  /// Throws InputError on duplicate ids, mixed dimensions, or a mismatch
  /// between the matrix ids and the graph vertices. `q` optionally overrides
  /// the Lyapunov weight (default I) per mode.
  SwitchedSystem(std::vector<SubsystemMatrix> modes, TransitionGraph graph,
                 std::map<ModeId, Matrix> q = {});

  const std::vector<SubsystemMatrix>& modes() const { return modes_; }
  const TransitionGraph& graph() const { return graph_; }
  const SubsystemMatrix& mode(ModeId id) const;
  Eigen::Index dim() const { return modes_.front().dim(); }
  /// Q for mode `id`: the override if given, else the identity.
  Matrix q(ModeId id) const;

 private:
  std::vector<SubsystemMatrix> modes_;
  TransitionGraph graph_;
  std::map<ModeId, Matrix> q_;
  std::map<ModeId, std::size_t> index_;
};

/// One certificate per mode, in mode order.
std::vector<SubsystemCertificate> certify_all(
    const SwitchedSystem& system, double tol_class = kDefaultClassTolerance);

/// Worst observed ratios on random states: max V(Ax) / (lambda V(x)) per
/// mode and max V_to(x) / (mu V_from(x)) per non-loop edge. Values above 1
/// (beyond rounding) falsify a certificate.
struct SampledCheck {
  std::map<ModeId, double> decay_ratio;
  std::map<Edge, double> gain_ratio;
  std::size_t samples = 0;
  std::uint64_t seed = 0;

  bool ok(double rel_tol = 1e-9) const;
};

/// Gaussian samples from a seeded std::mt19937_64.
SampledCheck sample_certificates(const SwitchedSystem& system,
                                 std::span<const SubsystemCertificate> certs,
                                 const GainTable& gains, std::size_t samples,
                                 std::uint64_t seed);

}  // namespace switchstab
