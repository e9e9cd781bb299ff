#include "switchstab/simplex.hpp"

#include <cmath>
#include <limits>
#include <optional>

namespace switchstab {

const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal:
      return "optimal";
    case LpStatus::Infeasible:
      return "infeasible";
    case LpStatus::Unbounded:
      return "unbounded";
    case LpStatus::IterationLimit:
      return "iteration_limit";
  }
  return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class BoundedTableau {
 public:
  BoundedTableau(Matrix t, Vector rhs, Vector upper, std::vector<Eigen::Index> basis,
                 double tol)
      : t_(std::move(t)),
        upper_(std::move(upper)),
        x_(Vector::Zero(t_.cols())),
        basis_(std::move(basis)),
        is_basic_(static_cast<std::size_t>(t_.cols()), false),
        tol_(tol) {
    for (Eigen::Index i = 0; i < t_.rows(); ++i) {
      x_(basis_[static_cast<std::size_t>(i)]) = rhs(i);
      is_basic_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])] = true;
    }
  }

  // Minimizes cost^T x from the current basis. Returns the terminal status;
  // Optimal means no improving column remains.
  LpStatus optimize(const Vector& cost, std::size_t& iterations,
                    std::size_t max_iterations) {
    const Eigen::Index m = t_.rows();
    const Eigen::Index n = t_.cols();
    while (true) {
      if (iterations >= max_iterations) return LpStatus::IterationLimit;

      Vector cb(m);
      for (Eigen::Index i = 0; i < m; ++i) cb(i) = cost(basis_[static_cast<std::size_t>(i)]);
      const Vector reduced = cost - t_.transpose() * cb;

      // Bland: lowest-index improving column.
      std::optional<Eigen::Index> entering;
      double dir = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (is_basic_[static_cast<std::size_t>(j)] || upper_(j) <= 0.0) continue;
        const bool at_upper = std::isfinite(upper_(j)) && x_(j) >= upper_(j) - tol_;
        if (!at_upper && reduced(j) < -tol_) {
          entering = j;
          dir = 1.0;
          break;
        }
        if (at_upper && reduced(j) > tol_) {
          entering = j;
          dir = -1.0;
          break;
        }
      }
      if (!entering) return LpStatus::Optimal;
      const Eigen::Index q = *entering;

      // Ratio test; the entering variable's own bound flip competes.
      double theta = upper_(q);
      std::optional<Eigen::Index> leave_row;
      bool leave_to_upper = false;
      for (Eigen::Index i = 0; i < m; ++i) {
        const double alpha = dir * t_(i, q);
        const Eigen::Index bi = basis_[static_cast<std::size_t>(i)];
        double limit = kInf;
        bool to_upper = false;
        if (alpha > tol_) {
          limit = std::max(0.0, x_(bi)) / alpha;
        } else if (alpha < -tol_ && std::isfinite(upper_(bi))) {
          limit = std::max(0.0, upper_(bi) - x_(bi)) / -alpha;
          to_upper = true;
        } else {
          continue;
        }
        const bool better =
            limit < theta - tol_ ||
            (leave_row && std::abs(limit - theta) <= tol_ &&
             bi < basis_[static_cast<std::size_t>(*leave_row)]);
        if (better) {
          theta = limit;
          leave_row = i;
          leave_to_upper = to_upper;
        }
      }
      if (!std::isfinite(theta)) return LpStatus::Unbounded;
      ++iterations;

      for (Eigen::Index i = 0; i < m; ++i) {
        x_(basis_[static_cast<std::size_t>(i)]) -= theta * dir * t_(i, q);
      }
      x_(q) += theta * dir;

      if (!leave_row) continue;  // bound flip, basis unchanged

      const Eigen::Index r = *leave_row;
      const Eigen::Index out = basis_[static_cast<std::size_t>(r)];
      x_(out) = leave_to_upper ? upper_(out) : 0.0;
      pivot(r, q);
      is_basic_[static_cast<std::size_t>(out)] = false;
      is_basic_[static_cast<std::size_t>(q)] = true;
      basis_[static_cast<std::size_t>(r)] = q;
    }
  }

  void fix_at_zero(Eigen::Index j) { upper_(j) = 0.0; }
  const Vector& x() const { return x_; }

 private:
  void pivot(Eigen::Index r, Eigen::Index q) {
    t_.row(r) /= t_(r, q);
    for (Eigen::Index i = 0; i < t_.rows(); ++i) {
      if (i == r) continue;
      const double f = t_(i, q);
      if (f != 0.0) t_.row(i) -= f * t_.row(r);
    }
  }

  Matrix t_;
  Vector upper_;
  Vector x_;
  std::vector<Eigen::Index> basis_;
  std::vector<bool> is_basic_;
  double tol_;
};

}  // namespace

LpResult solve_lp(const LpProblem& p, const SimplexOptions& opts) {
  const Eigen::Index m = p.a.rows();
  const Eigen::Index n = p.a.cols();
  if (p.b.size() != m || static_cast<Eigen::Index>(p.sense.size()) != m ||
      p.c.size() != n || p.upper.size() != n) {
    throw InputError("solve_lp: inconsistent problem dimensions");
  }

  Eigen::Index n_slack = 0;
  for (RowSense s : p.sense) n_slack += s == RowSense::Equal ? 0 : 1;
  const Eigen::Index n_total = n + n_slack + m;

  // Columns: structural | slack/surplus | artificial.
  Matrix t = Matrix::Zero(m, n_total);
  Vector rhs = p.b;
  Vector upper(n_total);
  upper.head(n) = p.upper;
  upper.tail(n_slack + m).setConstant(kInf);
  t.leftCols(n) = p.a;
  Eigen::Index slack = n;
  for (Eigen::Index i = 0; i < m; ++i) {
    const RowSense s = p.sense[static_cast<std::size_t>(i)];
    if (s == RowSense::LessEqual) t(i, slack++) = 1.0;
    if (s == RowSense::GreaterEqual) t(i, slack++) = -1.0;
    if (rhs(i) < 0.0) {
      t.row(i) *= -1.0;
      rhs(i) *= -1.0;
    }
    t(i, n + n_slack + i) = 1.0;
  }
  std::vector<Eigen::Index> basis;
  for (Eigen::Index i = 0; i < m; ++i) basis.push_back(n + n_slack + i);

  BoundedTableau tab(std::move(t), rhs, upper, std::move(basis), opts.tol);
  LpResult result;

  Vector phase1_cost = Vector::Zero(n_total);
  phase1_cost.tail(m).setOnes();
  LpStatus st = tab.optimize(phase1_cost, result.iterations, opts.max_iterations);
  if (st == LpStatus::IterationLimit) {
    result.status = st;
    return result;
  }
  const double infeasibility = tab.x().tail(m).sum();
  if (infeasibility > opts.tol * std::max(1.0, rhs.lpNorm<Eigen::Infinity>())) {
    result.status = LpStatus::Infeasible;
    return result;
  }

  for (Eigen::Index j = n + n_slack; j < n_total; ++j) tab.fix_at_zero(j);
  Vector phase2_cost = Vector::Zero(n_total);
  phase2_cost.head(n) = p.c;
  st = tab.optimize(phase2_cost, result.iterations, opts.max_iterations);
  result.status = st;
  result.x = tab.x().head(n);
  result.objective = p.c.dot(result.x);
  return result;
}

}  // namespace switchstab
