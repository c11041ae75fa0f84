#pragma once

// Shared test fixtures and independent reference computations.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "lpq/axioms.hpp"
#include "lpq/domain.hpp"
#include "lpq/loss.hpp"

namespace lpq::test {

inline LpqConfig config(Exponent p, Exponent q) {
  LpqConfig c;
  c.p = p;
  c.q = q;
  return c;
}

/// Weiszfeld iteration for the point minimizing the sum of Euclidean
/// distances to `pts`.
inline std::pair<double, double>
geometric_median(const std::vector<std::pair<double, double>> &pts) {
  double x = 0.0, y = 0.0;
  for (auto [a, b] : pts) {
    x += a / static_cast<double>(pts.size());
    y += b / static_cast<double>(pts.size());
  }
  for (int it = 0; it < 100000; ++it) {
    double wx = 0.0, wy = 0.0, w = 0.0;
    for (auto [a, b] : pts) {
      const double dist = std::max(std::hypot(x - a, y - b), 1e-15);
      wx += a / dist;
      wy += b / dist;
      w += 1.0 / dist;
    }
    const double nx = wx / w, ny = wy / w;
    const bool done = std::hypot(nx - x, ny - y) < 1e-14;
    x = nx;
    y = ny;
    if (done)
      break;
  }
  return {x, y};
}

/// H*(f1, f2) = -f1 + (f1^p + (1-f2)^p)^(1/p) + (f1^p + f2^p)^(1/p) - 1.
inline double h_star(double f1, double f2, double p) {
  return -f1 + std::pow(std::pow(f1, p) + std::pow(1.0 - f2, p), 1.0 / p) +
         std::pow(std::pow(f1, p) + std::pow(f2, p), 1.0 / p) - 1.0;
}

/// Closed-form minimizer of H*.
inline std::pair<double, double> v_hat(double p) {
  return {0.5 * std::pow(std::pow(2.0, p / (p - 1.0)) - 1.0, -1.0 / p), 0.5};
}

/// Grid search over [0,1]^2 at `step`, then shrinking pattern search
/// around the best grid point.
inline std::pair<double, double>
minimize_unit_square(const std::function<double(double, double)> &f, double step) {
  double bx = 0.0, by = 0.0, best = f(0.0, 0.0);
  const int count = static_cast<int>(std::lround(1.0 / step));
  for (int i = 0; i <= count; ++i)
    for (int j = 0; j <= count; ++j) {
      const double x = i * step, y = j * step, v = f(x, y);
      if (v < best) {
        best = v;
        bx = x;
        by = y;
      }
    }
  for (double h = step; h > 1e-12; h *= 0.5) {
    bool improved = true;
    while (improved) {
      improved = false;
      for (auto [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1},
                            {1, 1}, {1, -1}, {-1, 1}, {-1, -1}}) {
        const double x = std::clamp(bx + dx * h, 0.0, 1.0);
        const double y = std::clamp(by + dy * h, 0.0, 1.0);
        const double v = f(x, y);
        if (v < best) {
          best = v;
          bx = x;
          by = y;
          improved = true;
        }
      }
    }
  }
  return {bx, by};
}

/// Raw left median: sort and take the element of rank ceil(n/2).
inline double naive_left_median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  return xs[(xs.size() + 1) / 2 - 1];
}

/// Complete, objective instance whose reviewers score monotonically:
/// distinct criteria vectors in {0..4}^2 and y_ia = sum_c w_ic * x_ac
/// with non-negative integer weights.
inline AxiomInstance random_monotone_instance(std::mt19937_64 &rng, std::size_t n_max = 5,
                                              std::size_t m_max = 4) {
  std::uniform_int_distribution<std::size_t> n_dist(1, n_max), m_dist(1, m_max);
  std::uniform_int_distribution<int> coord(0, 4), weight(0, 3), offset(0, 3);
  AxiomInstance inst;
  inst.n = n_dist(rng);
  inst.m = m_dist(rng);
  while (inst.criteria.size() < inst.m) {
    Vector x{double(coord(rng)), double(coord(rng))};
    if (std::find(inst.criteria.begin(), inst.criteria.end(), x) == inst.criteria.end())
      inst.criteria.push_back(x);
  }
  inst.y.assign(inst.n, Vector(inst.m));
  for (auto &row : inst.y) {
    const double w0 = weight(rng), w1 = weight(rng), c = offset(rng);
    for (std::size_t a = 0; a < inst.m; ++a)
      row[a] = c + w0 * inst.criteria[a][0] + w1 * inst.criteria[a][1];
  }
  return inst;
}

/// Tiny instance for exhaustive comparison: at most `max_nodes` distinct
/// criteria vectors, at most `max_reviewers` reviewers, scores on
/// multiples of 0.1 in [0, 1].
inline Dataset random_tiny_dataset(std::mt19937_64 &rng, std::size_t max_nodes = 4,
                                   std::size_t max_reviewers = 3) {
  std::uniform_int_distribution<std::size_t> nodes_dist(1, max_nodes),
      rev_dist(1, max_reviewers);
  std::uniform_int_distribution<int> coord(0, 2), tenth(0, 10);
  const auto nodes = nodes_dist(rng);
  std::vector<Vector> xs;
  while (xs.size() < nodes) {
    Vector x{double(coord(rng)), double(coord(rng))};
    if (std::find(xs.begin(), xs.end(), x) == xs.end())
      xs.push_back(x);
  }
  const auto reviewers = rev_dist(rng);
  std::vector<ReviewRecord> recs;
  for (std::size_t a = 0; a < xs.size(); ++a) {
    // Every paper gets at least one review.
    std::vector<std::size_t> who;
    for (std::size_t i = 0; i < reviewers; ++i)
      if (rng() % 2)
        who.push_back(i);
    if (who.empty())
      who.push_back(rng() % reviewers);
    for (auto i : who)
      recs.push_back({"r" + std::to_string(i), "p" + std::to_string(a), xs[a],
                      tenth(rng) / 10.0});
  }
  return Dataset::create(std::move(recs), 2);
}

/// Ascending grid from the smallest to the largest overall score.
inline std::vector<double> y_range_grid(const Dataset &ds, double step) {
  double lo = ds.records().front().overall, hi = lo;
  for (const auto &r : ds.records()) {
    lo = std::min(lo, r.overall);
    hi = std::max(hi, r.overall);
  }
  std::vector<double> g;
  const int count = static_cast<int>(std::lround((hi - lo) / step));
  for (int k = 0; k <= count; ++k)
    g.push_back(lo + k * step);
  return g;
}

} // namespace lpq::test
