#pragma once

// Log-barrier interior-point method for
//
//   minimize    c'z + sum_j quad_j z_j^2
//   subject to  a_r'z <= b_r                        (linear rows)
//               z_u <= z_x^alpha * z_y^(1-alpha)    (geometric-mean cones)
//
// Each cone contributes -log(z_x^a z_y^(1-a) - z_u) - log z_x - log z_y.
// Newton systems are sparse and solved with a simplicial LDL' factorization
// whose symbolic analysis is shared across iterations.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

namespace lpq::detail {

struct LinearRow {
  std::vector<std::pair<int, double>> coeffs;
  double rhs = 0.0;
};

struct GeoMeanCone {
  int hypo;  // z_u
  int base_a;
  int base_b;
  double alpha; // exponent on base_a, in (0, 1)
};

struct BarrierProblem {
  int num_vars = 0;
  std::vector<double> linear_cost;
  std::vector<double> quad_cost;
  std::vector<LinearRow> rows;
  std::vector<GeoMeanCone> cones;

  double objective(const std::vector<double> &z) const {
    double f = 0.0;
    for (int j = 0; j < num_vars; ++j)
      f += linear_cost[j] * z[j] + quad_cost[j] * z[j] * z[j];
    return f;
  }

  /// Barrier parameter: the duality gap at a central point is nu / t.
  double nu() const {
    return static_cast<double>(rows.size() + 3 * cones.size());
  }
};

struct BarrierOptions {
  /// Stop once nu / t <= gap_abs + gap_rel * |objective|.
  double gap_abs = 1e-10;
  double gap_rel = 1e-10;
  /// Once converged, keep tightening toward this target while centering
  /// succeeds; a failed step reverts to the last centered point.
  double polish_abs = 0.0;
  double polish_rel = 0.0;
  double t0 = 1.0;
  double mu = 16.0;
  std::size_t max_newton = 2000;
};

struct BarrierResult {
  std::vector<double> z;
  double objective = 0.0;
  double gap = 0.0;
  std::size_t newton_steps = 0;
  bool converged = false;
};

class BarrierSolver {
public:
  explicit BarrierSolver(const BarrierProblem &prob) : prob_(prob) {}

  /// z0 must be strictly feasible.
  BarrierResult minimize(std::vector<double> z, const BarrierOptions &opt) {
    BarrierResult res;
    if (!strictly_feasible(z)) {
      res.z = std::move(z);
      return res;
    }
    const double nu = prob_.nu();
    double t = opt.t0;
    std::vector<double> last_centered;
    for (;;) {
      const bool centered = center(z, t, opt.max_newton, res.newton_steps);
      if (!centered) {
        if (!last_centered.empty())
          z = std::move(last_centered);
        break;
      }
      const double f = prob_.objective(z);
      const double gap = nu / t;
      res.gap = gap;
      last_centered = z;
      const double target = opt.gap_abs + opt.gap_rel * std::abs(f);
      const double polish = opt.polish_abs + opt.polish_rel * std::abs(f);
      if (gap <= target)
        res.converged = true;
      if (gap <= std::min(target, polish) || (res.converged && polish <= 0.0))
        break;
      if (res.newton_steps >= opt.max_newton)
        break;
      // Do not overshoot the t that meets the target; large t costs accuracy.
      t = std::min(t * opt.mu, 1.01 * nu / (res.converged ? polish : target));
    }
    res.objective = prob_.objective(z);
    res.z = std::move(z);
    return res;
  }

  bool strictly_feasible(const std::vector<double> &z) const {
    for (const auto &row : prob_.rows)
      if (!(slack(row, z) > 0.0))
        return false;
    for (const auto &c : prob_.cones) {
      const double x = z[c.base_a], y = z[c.base_b];
      if (!(x > 0.0) || !(y > 0.0))
        return false;
      if (!(geo(c, x, y) - z[c.hypo] > 0.0))
        return false;
    }
    return true;
  }

private:
  static double slack(const LinearRow &row, const std::vector<double> &z) {
    double s = row.rhs;
    for (auto [j, a] : row.coeffs)
      s -= a * z[j];
    return s;
  }

  static double geo(const GeoMeanCone &c, double x, double y) {
    return std::exp(c.alpha * std::log(x) + (1.0 - c.alpha) * std::log(y));
  }

  // Change in t * objective + barrier when moving by step * dir; +inf when
  // the trial point leaves the domain. Slack ratios go through log1p so the
  // difference stays accurate when t * objective dwarfs it.
  double merit_change(const std::vector<double> &z, const Eigen::VectorXd &dir,
                      double step, double t) const {
    double delta = 0.0;
    for (int j = 0; j < prob_.num_vars; ++j) {
      const double dz = step * dir[j];
      delta += t * (prob_.linear_cost[j] * dz +
                    prob_.quad_cost[j] * dz * (2.0 * z[j] + dz));
    }
    for (const auto &row : prob_.rows) {
      double ad = 0.0;
      for (auto [j, a] : row.coeffs)
        ad += a * dir[j];
      const double rel = -step * ad / slack(row, z);
      if (!(rel > -1.0))
        return std::numeric_limits<double>::infinity();
      delta -= std::log1p(rel);
    }
    for (const auto &c : prob_.cones) {
      const double x = z[c.base_a], y = z[c.base_b];
      const double xn = x + step * dir[c.base_a];
      const double yn = y + step * dir[c.base_b];
      if (!(xn > 0.0) || !(yn > 0.0))
        return std::numeric_limits<double>::infinity();
      const double g = geo(c, x, y) - z[c.hypo];
      const double gn = geo(c, xn, yn) - (z[c.hypo] + step * dir[c.hypo]);
      if (!(gn > 0.0))
        return std::numeric_limits<double>::infinity();
      delta -= std::log(gn / g) + std::log1p(step * dir[c.base_a] / x) +
               std::log1p(step * dir[c.base_b] / y);
    }
    return delta;
  }

  void assemble(const std::vector<double> &z, double t, Eigen::VectorXd &grad) {
    const int n = prob_.num_vars;
    triplets_.clear();
    grad.setZero(n);
    for (int j = 0; j < n; ++j) {
      grad[j] = t * (prob_.linear_cost[j] + 2.0 * prob_.quad_cost[j] * z[j]);
      // Always emit the diagonal so the sparsity pattern never changes.
      triplets_.emplace_back(j, j, 2.0 * t * prob_.quad_cost[j]);
    }
    for (const auto &row : prob_.rows) {
      const double inv = 1.0 / slack(row, z);
      const double inv2 = inv * inv;
      for (auto [i, ai] : row.coeffs) {
        grad[i] += ai * inv;
        for (auto [j, aj] : row.coeffs)
          triplets_.emplace_back(i, j, ai * aj * inv2);
      }
    }
    for (const auto &c : prob_.cones) {
      const double x = z[c.base_a], y = z[c.base_b];
      const double a = c.alpha, b = 1.0 - c.alpha;
      const double G = geo(c, x, y);
      const double g = G - z[c.hypo];
      const int idx[3] = {c.hypo, c.base_a, c.base_b};
      const double dg[3] = {-1.0, a * G / x, b * G / y};
      // Hessian of g on (x, y); negative semidefinite.
      const double gxx = a * (a - 1.0) * G / (x * x);
      const double gyy = b * (b - 1.0) * G / (y * y);
      const double gxy = a * b * G / (x * y);
      grad[c.hypo] += -dg[0] / g;
      grad[c.base_a] += -dg[1] / g - 1.0 / x;
      grad[c.base_b] += -dg[2] / g - 1.0 / y;
      const double ig2 = 1.0 / (g * g);
      for (int r = 0; r < 3; ++r)
        for (int s = 0; s < 3; ++s)
          triplets_.emplace_back(idx[r], idx[s], dg[r] * dg[s] * ig2);
      triplets_.emplace_back(c.base_a, c.base_a, -gxx / g + 1.0 / (x * x));
      triplets_.emplace_back(c.base_b, c.base_b, -gyy / g + 1.0 / (y * y));
      triplets_.emplace_back(c.base_a, c.base_b, -gxy / g);
      triplets_.emplace_back(c.base_b, c.base_a, -gxy / g);
    }
    hess_.resize(n, n);
    hess_.setFromTriplets(triplets_.begin(), triplets_.end());
  }

  // Solves H dir = -grad after symmetric diagonal scaling, which removes
  // most of the dynamic range barrier terms put on the diagonal.
  bool newton_direction(const Eigen::VectorXd &grad, Eigen::VectorXd &dir) {
    const int n = prob_.num_vars;
    scale_.resize(n);
    for (int j = 0; j < n; ++j) {
      const double h = hess_.coeff(j, j);
      if (!(h > 0.0) || !std::isfinite(h))
        scale_[j] = 1.0;
      else
        scale_[j] = 1.0 / std::sqrt(h);
    }
    if (!grad.allFinite() || !scale_.allFinite())
      return false;
    scaled_ = scale_.asDiagonal() * hess_ * scale_.asDiagonal();
    if (!analyzed_) {
      ldlt_.analyzePattern(scaled_);
      analyzed_ = true;
    }
    const Eigen::VectorXd rhs = -scale_.cwiseProduct(grad);
    const double rhs_norm = rhs.norm();
    // Falls back to the most accurate descent direction seen when no
    // attempt meets the residual bound (singular systems).
    Eigen::VectorXd best;
    double best_res = std::numeric_limits<double>::infinity();
    double shift = 0.0;
    for (int attempt = 0; attempt < 8; ++attempt) {
      ldlt_.setShift(shift);
      ldlt_.factorize(scaled_);
      if (ldlt_.info() == Eigen::Success) {
        // Refine against the unshifted matrix: the factorization has no
        // pivoting and can lose accuracy on nearly singular systems.
        Eigen::VectorXd x = ldlt_.solve(rhs);
        Eigen::VectorXd res = rhs - scaled_ * x;
        for (int r = 0; r < 4 && res.norm() > 1e-12 * (1.0 + rhs_norm); ++r) {
          x += ldlt_.solve(res);
          res = rhs - scaled_ * x;
        }
        dir = scale_.cwiseProduct(x);
        if (dir.allFinite() && -grad.dot(dir) >= 0.0) {
          const double err = res.norm();
          if (err <= 1e-6 * (1.0 + rhs_norm))
            return true;
          if (err < best_res) {
            best_res = err;
            best = dir;
          }
        }
      }
      shift = shift == 0.0 ? 1e-14 : shift * 100.0;
    }
    if (best.size() == 0)
      return false;
    dir = std::move(best);
    return true;
  }

  // Damped Newton on t*f + barrier. Returns true once the point is
  // centered: the Newton decrement falls below tolerance, or progress stalls
  // at the roundoff floor while the decrement still certifies the
  // quadratic-convergence region.
  bool center(std::vector<double> &z, double t, std::size_t max_steps,
              std::size_t &steps) {
    const int n = prob_.num_vars;
    Eigen::VectorXd grad, dir;
    std::vector<double> trial(z.size());
    int stalled = 0;
    double best_decrement = std::numeric_limits<double>::infinity();
    while (steps < max_steps) {
      assemble(z, t, grad);
      if (!newton_direction(grad, dir))
        return false;
      ++steps;
      const double decrement2 = -grad.dot(dir);
      if (!(decrement2 > 0.0) || decrement2 * 0.5 <= 1e-7)
        return true;
      double step = 1.0;
      bool moved = false;
      while (step > 1e-14) {
        const double change = merit_change(z, dir, step, t);
        if (change <= -0.25 * step * decrement2) {
          for (int j = 0; j < n; ++j)
            trial[j] = z[j] + step * dir[j];
          // Rounding in the update can still land on the boundary.
          if (strictly_feasible(trial)) {
            z.swap(trial);
            moved = true;
            break;
          }
        }
        step *= 0.5;
      }
      const bool progress =
          moved && step >= 1e-3 &&
          (decrement2 > 1.0 || decrement2 < 0.9 * best_decrement);
      stalled = progress ? 0 : stalled + 1;
      best_decrement = std::min(best_decrement, decrement2);
      if (stalled >= 5)
        return decrement2 <= 1.0;
    }
    return false;
  }

  const BarrierProblem &prob_;
  std::vector<Eigen::Triplet<double>> triplets_;
  Eigen::SparseMatrix<double> hess_;
  Eigen::SparseMatrix<double> scaled_;
  Eigen::VectorXd scale_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
  bool analyzed_ = false;
};

} // namespace lpq::detail
