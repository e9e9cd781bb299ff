#include "switchstab/lyap_cert.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <unordered_map>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <unsupported/Eigen/KroneckerProduct>

namespace switchstab {

namespace {

using ComplexMatrix = Eigen::MatrixXcd;
using Complex = std::complex<double>;

// Eigenvalues closer than this are treated as one repeated eigenvalue when
// counting multiplicities on the unit circle.
constexpr double kClusterTol = 1e-6;

bool is_symmetric(const Matrix& m, double tol = 1e-10) {
  return m.rows() == m.cols() &&
         (m - m.transpose()).norm() <= tol * std::max(1.0, m.norm());
}

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

Eigen::VectorXd symmetric_eigenvalues(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(m),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

void require_spd(const Matrix& m, const char* what) {
  if (m.rows() == 0 || !is_symmetric(m)) {
    throw InputError(std::string(what) + " must be square and symmetric");
  }
  if (symmetric_eigenvalues(m).minCoeff() <= 0.0) {
    throw InputError(std::string(what) + " must be positive definite");
  }
}

Eigen::Index complex_rank(const ComplexMatrix& m, double tol) {
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  const auto& sv = svd.singularValues();
  return static_cast<Eigen::Index>((sv.array() > tol).count());
}

// Distinct eigenvalues on (or numerically at) the unit circle with their
// algebraic multiplicities.
std::vector<std::pair<Complex, int>> unit_circle_clusters(
    const Eigen::VectorXcd& eig, double tol_class) {
  std::vector<std::pair<Complex, int>> clusters;
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    if (std::abs(std::abs(eig(i)) - 1.0) > tol_class) continue;
    auto it = std::find_if(clusters.begin(), clusters.end(), [&](const auto& c) {
      return std::abs(c.first - eig(i)) <= kClusterTol;
    });
    if (it == clusters.end()) {
      clusters.emplace_back(eig(i), 1);
    } else {
      ++it->second;
    }
  }
  return clusters;
}

// Orthonormal real basis for the span of the real and imaginary parts of the
// given complex columns.
Matrix real_span_basis(const ComplexMatrix& cols, Eigen::Index expected_dim) {
  Matrix stacked(cols.rows(), 2 * cols.cols());
  stacked << cols.real(), cols.imag();
  Eigen::JacobiSVD<Matrix> svd(stacked, Eigen::ComputeFullU);
  return svd.matrixU().leftCols(expected_dim);
}

// P with A^T P A = P for a diagonalizable A whose eigenvalues all have unit
// modulus: P = (W W^H)^{-1} where A = W diag W^{-1}.
Matrix unit_circle_block_p(const Matrix& a_unit) {
  Eigen::EigenSolver<Matrix> es(a_unit);
  const ComplexMatrix w = es.eigenvectors();
  const ComplexMatrix gram = w * w.adjoint();
  return symmetrized(gram.inverse().real());
}

Matrix marginal_p(const Matrix& a, double tol_class) {
  const Eigen::Index d = a.rows();
  const Matrix identity = Matrix::Identity(d, d);

  // (i) A is already non-expansive in the Euclidean norm.
  if (symmetric_eigenvalues(a.transpose() * a - identity).maxCoeff() <=
      1e-12) {
    return identity;
  }

  // (ii) Split R^d into the unit-circle and stable invariant subspaces.
  Eigen::EigenSolver<Matrix> right(a);
  Eigen::EigenSolver<Matrix> left(a.transpose());
  std::vector<Eigen::Index> unit_r, unit_l;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (std::abs(std::abs(right.eigenvalues()(i)) - 1.0) <= tol_class) {
      unit_r.push_back(i);
    }
    if (std::abs(std::abs(left.eigenvalues()(i)) - 1.0) <= tol_class) {
      unit_l.push_back(i);
    }
  }
  const auto k = static_cast<Eigen::Index>(unit_r.size());
  if (k == 0 || unit_l.size() != unit_r.size()) return Matrix();

  ComplexMatrix vr(d, k), vl(d, k);
  for (Eigen::Index c = 0; c < k; ++c) {
    vr.col(c) = right.eigenvectors().col(unit_r[static_cast<std::size_t>(c)]);
    vl.col(c) = left.eigenvectors().col(unit_l[static_cast<std::size_t>(c)]);
  }
  const Matrix basis_unit = real_span_basis(vr, k);
  Matrix basis_stable(d, d - k);
  if (k < d) {
    // The stable subspace is annihilated by every left eigenvector of a
    // unit-circle eigenvalue.
    Matrix left_rows(2 * k, d);
    left_rows << vl.real().transpose(), vl.imag().transpose();
    Eigen::JacobiSVD<Matrix> svd(left_rows, Eigen::ComputeFullV);
    basis_stable = svd.matrixV().rightCols(d - k);
  }

  Matrix t(d, d);
  t << basis_unit, basis_stable;
  Eigen::FullPivLU<Matrix> lu(t);
  if (!lu.isInvertible()) return Matrix();
  const Matrix t_inv = lu.inverse();
  const Matrix a_tilde = t_inv * a * t;

  Matrix p_tilde = Matrix::Zero(d, d);
  p_tilde.topLeftCorner(k, k) = unit_circle_block_p(a_tilde.topLeftCorner(k, k));
  if (k < d) {
    const Matrix a_stable = a_tilde.bottomRightCorner(d - k, d - k);
    if (spectral_radius(a_stable) >= 1.0) return Matrix();
    p_tilde.bottomRightCorner(d - k, d - k) = solve_discrete_lyapunov(
        a_stable, Matrix::Identity(d - k, d - k));
  }
  return symmetrized(t_inv.transpose() * p_tilde * t_inv);
}

}  // namespace

SubsystemMatrix::SubsystemMatrix(ModeId id, Matrix a) : id_(id), a_(std::move(a)) {
  const std::string who = "mode " + std::to_string(id_);
  if (a_.rows() == 0 || a_.rows() != a_.cols()) {
    throw InputError(who + ": matrix must be square and nonempty");
  }
  if (!a_.allFinite()) throw InputError(who + ": matrix has non-finite entries");
  Eigen::JacobiSVD<Matrix> svd(a_);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) <= 1e-12 * std::max(1.0, sv(0))) {
    throw InputError(who + ": matrix is rank deficient (smallest singular value " +
                     std::to_string(sv(sv.size() - 1)) + ")");
  }
}

const char* to_string(StabilityClass c) {
  switch (c) {
    case StabilityClass::AsymptoticallyStable:
      return "asymptotically_stable";
    case StabilityClass::MarginallyStable:
      return "marginally_stable";
    case StabilityClass::Unstable:
      return "unstable";
  }
  return "unknown";
}

double spectral_radius(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(a, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double spectral_norm(const Matrix& a) {
  return std::sqrt(
      std::max(0.0, symmetric_eigenvalues(a.transpose() * a).maxCoeff()));
}

StabilityClass classify(const SubsystemMatrix& a, double tol_class) {
  Eigen::EigenSolver<Matrix> es(a.a(), false);
  const Eigen::VectorXcd eig = es.eigenvalues();
  const double rho = eig.cwiseAbs().maxCoeff();
  if (rho < 1.0 - tol_class) return StabilityClass::AsymptoticallyStable;
  if (rho > 1.0 + tol_class) return StabilityClass::Unstable;

  const Eigen::Index d = a.dim();
  const double rank_tol = 1e-8 * std::max(1.0, spectral_norm(a.a()));
  const ComplexMatrix ac = a.a().cast<Complex>();
  for (const auto& [lambda, algebraic] : unit_circle_clusters(eig, tol_class)) {
    const Eigen::Index geometric =
        d - complex_rank(ac - lambda * ComplexMatrix::Identity(d, d), rank_tol);
    if (geometric < algebraic) return StabilityClass::Unstable;
  }
  return StabilityClass::MarginallyStable;
}

Matrix solve_discrete_lyapunov(const Matrix& a, const Matrix& q) {
  if (a.rows() != a.cols() || q.rows() != q.cols() || a.rows() != q.rows()) {
    throw InputError("solve_discrete_lyapunov: A and Q must be square and of equal size");
  }
  if (!is_symmetric(q)) throw InputError("solve_discrete_lyapunov: Q must be symmetric");
  const double rho = spectral_radius(a);
  if (rho >= 1.0) {
    throw InputError("solve_discrete_lyapunov: spectral radius " +
                     std::to_string(rho) + " >= 1, no unique solution");
  }
  const Eigen::Index d = a.rows();
  if (d == 0) return Matrix();

  // vec(A^T P A) = (A^T kron A^T) vec(P) with column-major vec.
  const Matrix at = a.transpose();
  const Matrix lhs = Matrix::Identity(d * d, d * d) -
                     Eigen::kroneckerProduct(at, at).eval();
  const Vector rhs = Eigen::Map<const Vector>(q.data(), d * d);
  const Vector vec_p = lhs.fullPivLu().solve(rhs);
  return symmetrized(Eigen::Map<const Matrix>(vec_p.data(), d, d));
}

SubsystemCertificate certificate_for(const SubsystemMatrix& a, const Matrix& q,
                                     double tol_class) {
  const Eigen::Index d = a.dim();
  SubsystemCertificate cert;
  cert.id = a.id();
  cert.cls = classify(a, tol_class);
  switch (cert.cls) {
    case StabilityClass::AsymptoticallyStable: {
      if (q.rows() != d) {
        throw InputError("mode " + std::to_string(a.id()) +
                         ": Q has the wrong dimension");
      }
      require_spd(q, "Q");
      cert.p = solve_discrete_lyapunov(a.a(), q);
      cert.lambda = 1.0 - symmetric_eigenvalues(q).minCoeff() /
                              symmetric_eigenvalues(cert.p).maxCoeff();
      break;
    }
    case StabilityClass::MarginallyStable: {
      cert.p = marginal_p(a.a(), tol_class);
      cert.lambda = 1.0;
      const bool ok =
          cert.p.size() > 0 && cert.p.allFinite() &&
          symmetric_eigenvalues(cert.p).minCoeff() > 0.0 &&
          symmetric_eigenvalues(a.a().transpose() * cert.p * a.a() - cert.p)
                  .maxCoeff() <= 1e-9 * spectral_norm(cert.p);
      if (!ok) {
        throw CertificateError("no certificate for marginally stable mode " +
                               std::to_string(a.id()));
      }
      break;
    }
    case StabilityClass::Unstable: {
      const double n = spectral_norm(a.a());
      cert.p = Matrix::Identity(d, d);
      cert.lambda = std::max(1.0 + 2.0 * n, n * n);
      break;
    }
  }
  return cert;
}

double mu_gain(const Matrix& p_from, const Matrix& p_to) {
  if (p_from.rows() != p_to.rows() || p_from.cols() != p_to.cols()) {
    throw InputError("mu_gain: dimension mismatch");
  }
  require_spd(p_from, "P_from");
  require_spd(p_to, "P_to");
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(p_from));
  const Matrix s = es.operatorInverseSqrt();
  return symmetric_eigenvalues(s * p_to * s).maxCoeff();
}

bool verify_certificate(const SubsystemCertificate& cert,
                        const SubsystemMatrix& a) {
  if (cert.p.rows() != a.dim() || cert.p.cols() != a.dim()) return false;
  const Matrix gap = cert.lambda * cert.p - a.a().transpose() * cert.p * a.a();
  return symmetric_eigenvalues(gap).minCoeff() >= -1e-9 * spectral_norm(cert.p);
}

void GainTable::set_mode(ModeId j, double lambda, StabilityClass cls) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw InputError("lambda for mode " + std::to_string(j) +
                     " must be positive and finite");
  }
  modes_[j] = {lambda, cls};
}

void GainTable::set_mu(const Edge& e, double mu) {
  if (!(mu > 0.0) || !std::isfinite(mu)) {
    throw InputError("mu" + to_string(e) + " must be positive and finite");
  }
  mu_[e] = mu;
}

double GainTable::mu(const Edge& e) const {
  auto it = mu_.find(e);
  if (it == mu_.end()) throw InputError("no gain for edge " + to_string(e));
  return it->second;
}

double GainTable::log_mu(const Edge& e) const { return std::log(mu(e)); }

double GainTable::lambda(ModeId j) const {
  auto it = modes_.find(j);
  if (it == modes_.end()) {
    throw InputError("no lambda for mode " + std::to_string(j));
  }
  return it->second.lambda;
}

double GainTable::log_lambda(ModeId j) const { return std::log(lambda(j)); }

StabilityClass GainTable::cls(ModeId j) const {
  auto it = modes_.find(j);
  if (it == modes_.end()) {
    throw InputError("no stability class for mode " + std::to_string(j));
  }
  return it->second.cls;
}

std::vector<ModeId> GainTable::modes() const {
  std::vector<ModeId> out;
  for (const auto& [j, _] : modes_) out.push_back(j);
  return out;
}

GainTable GainTable::from_logs(const TransitionGraph& g,
                               const std::map<ModeId, double>& log_lambda,
                               const std::map<Edge, double>& log_mu) {
  GainTable t;
  for (ModeId j : g.vertices()) {
    auto it = log_lambda.find(j);
    if (it == log_lambda.end()) {
      throw InputError("gains override: missing ln lambda for mode " +
                       std::to_string(j));
    }
    const double l = it->second;
    const StabilityClass cls = l < 0.0   ? StabilityClass::AsymptoticallyStable
                               : l > 0.0 ? StabilityClass::Unstable
                                         : StabilityClass::MarginallyStable;
    t.set_mode(j, std::exp(l), cls);
  }
  for (const auto& [e, _] : log_mu) {
    if (!g.has_edge(e)) {
      throw InputError("gains override: edge " + to_string(e) +
                       " is not in the transition graph");
    }
  }
  for (const Edge& e : g.edges()) {
    auto it = log_mu.find(e);
    if (it != log_mu.end()) {
      if (e.is_self_loop() && it->second != 0.0) {
        throw InputError("gains override: ln mu" + to_string(e) +
                         " must be 0 on a self-loop");
      }
      t.set_mu(e, std::exp(it->second));
    } else if (e.is_self_loop()) {
      t.set_mu(e, 1.0);
    } else {
      throw InputError("gains override: missing ln mu for edge " + to_string(e));
    }
  }
  return t;
}

GainTable build_gain_table(const TransitionGraph& g,
                           std::span<const SubsystemCertificate> certs) {
  std::unordered_map<ModeId, const SubsystemCertificate*> by_id;
  for (const auto& c : certs) by_id[c.id] = &c;
  GainTable t;
  for (ModeId j : g.vertices()) {
    auto it = by_id.find(j);
    if (it == by_id.end()) {
      throw InputError("no certificate for mode " + std::to_string(j));
    }
    t.set_mode(j, it->second->lambda, it->second->cls);
  }
  for (const Edge& e : g.edges()) {
    if (e.is_self_loop()) {
      t.set_mu(e, 1.0);
    } else {
      t.set_mu(e, mu_gain(by_id.at(e.from)->p, by_id.at(e.to)->p));
    }
  }
  return t;
}

SwitchedSystem::SwitchedSystem(std::vector<SubsystemMatrix> modes,
                               TransitionGraph graph,
                               std::map<ModeId, Matrix> q)
    : modes_(std::move(modes)), graph_(std::move(graph)), q_(std::move(q)) {
  if (modes_.empty()) throw InputError("system has no modes");
  for (std::size_t i = 0; i < modes_.size(); ++i) {
    const auto& m = modes_[i];
    if (!index_.emplace(m.id(), i).second) {
      throw InputError("duplicate mode id " + std::to_string(m.id()));
    }
    if (m.dim() != modes_.front().dim()) {
      throw InputError("mode " + std::to_string(m.id()) + " has dimension " +
                       std::to_string(m.dim()) + ", expected " +
                       std::to_string(modes_.front().dim()));
    }
    if (!graph_.has_vertex(m.id())) {
      throw InputError("mode " + std::to_string(m.id()) +
                       " is not a vertex of the transition graph");
    }
  }
  for (ModeId v : graph_.vertices()) {
    if (!index_.contains(v)) {
      throw InputError("vertex " + std::to_string(v) + " has no matrix");
    }
  }
  for (const auto& [id, qm] : q_) {
    if (!index_.contains(id)) {
      throw InputError("Q override for unknown mode " + std::to_string(id));
    }
    if (qm.rows() != dim() || qm.cols() != dim()) {
      throw InputError("Q override for mode " + std::to_string(id) +
                       " has the wrong dimension");
    }
    require_spd(qm, "Q override");
  }
}

const SubsystemMatrix& SwitchedSystem::mode(ModeId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw InputError("unknown mode " + std::to_string(id));
  return modes_[it->second];
}

Matrix SwitchedSystem::q(ModeId id) const {
  auto it = q_.find(id);
  return it != q_.end() ? it->second : Matrix::Identity(dim(), dim());
}

std::vector<SubsystemCertificate> certify_all(const SwitchedSystem& system,
                                              double tol_class) {
  std::vector<SubsystemCertificate> certs;
  for (const auto& m : system.modes()) {
    certs.push_back(certificate_for(m, system.q(m.id()), tol_class));
  }
  return certs;
}

bool SampledCheck::ok(double rel_tol) const {
  auto within = [rel_tol](const auto& kv) { return kv.second <= 1.0 + rel_tol; };
  return std::all_of(decay_ratio.begin(), decay_ratio.end(), within) &&
         std::all_of(gain_ratio.begin(), gain_ratio.end(), within);
}

SampledCheck sample_certificates(const SwitchedSystem& system,
                                 std::span<const SubsystemCertificate> certs,
                                 const GainTable& gains, std::size_t samples,
                                 std::uint64_t seed) {
  std::unordered_map<ModeId, const SubsystemCertificate*> by_id;
  for (const auto& c : certs) by_id[c.id] = &c;
  for (const auto& m : system.modes()) {
    if (!by_id.contains(m.id())) {
      throw InputError("no certificate for mode " + std::to_string(m.id()));
    }
  }
  SampledCheck out;
  out.samples = samples;
  out.seed = seed;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vector x(system.dim());
  for (std::size_t s = 0; s < samples; ++s) {
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = normal(rng);
    for (const auto& m : system.modes()) {
      const SubsystemCertificate& c = *by_id.at(m.id());
      const double r = c.value(m.a() * x) / (c.lambda * c.value(x));
      auto [it, _] = out.decay_ratio.try_emplace(m.id(), r);
      it->second = std::max(it->second, r);
    }
    for (const Edge& e : system.graph().edges()) {
      if (e.is_self_loop()) continue;
      const double r = by_id.at(e.to)->value(x) /
                       (gains.mu(e) * by_id.at(e.from)->value(x));
      auto [it, _] = out.gain_ratio.try_emplace(e, r);
      it->second = std::max(it->second, r);
    }
  }
  return out;
}

}  // namespace switchstab
