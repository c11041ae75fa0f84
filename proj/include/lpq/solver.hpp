#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lpq/detail/barrier.hpp"
#include "lpq/domain.hpp"
#include "lpq/error.hpp"
#include "lpq/loss.hpp"
#include "lpq/order.hpp"

namespace lpq {

/// Absolute tolerance on v_u <= v_w along dominance edges.
inline constexpr double kFeasibilityTolerance = 1e-8;

/// Lower middle order statistic: element of rank ceil(n/2) in ascending
/// order.
inline double left_median(std::vector<double> xs) {
  if (xs.empty())
    throw InvalidArgument("left_median: empty input");
  const auto mid = xs.begin() + static_cast<std::ptrdiff_t>((xs.size() - 1) / 2);
  std::nth_element(xs.begin(), mid, xs.end());
  return *mid;
}

enum class ExtensionRule { LowerEnvelope, UpperEnvelope };

inline std::string to_string(ExtensionRule rule) {
  return rule == ExtensionRule::LowerEnvelope ? "lower" : "upper";
}

/// Learned values at the observed criteria vectors plus the rule used to
/// extend them monotonically to unseen points.
class AggregateFunction {
public:
  AggregateFunction() = default;

  AggregateFunction(std::vector<Vector> vectors, std::vector<double> values,
                    std::vector<std::size_t> multiplicity,
                    ExtensionRule rule = ExtensionRule::LowerEnvelope)
      : vectors_(std::move(vectors)), values_(std::move(values)),
        multiplicity_(std::move(multiplicity)), rule_(rule) {
    if (vectors_.size() != values_.size() ||
        vectors_.size() != multiplicity_.size())
      throw InvalidArgument("AggregateFunction: mismatched entry counts");
    if (vectors_.empty())
      throw InvalidArgument("AggregateFunction: no entries");
    d_ = vectors_.front().size();
  }

  AggregateFunction(const DominanceGraph &graph, std::vector<double> values,
                    ExtensionRule rule = ExtensionRule::LowerEnvelope)
      : AggregateFunction(graph.nodes(), std::move(values),
                          graph.multiplicity(), rule) {}

  std::size_t d() const { return d_; }
  std::size_t size() const { return values_.size(); }
  const std::vector<Vector> &vectors() const { return vectors_; }
  const std::vector<double> &node_values() const { return values_; }
  const std::vector<std::size_t> &multiplicity() const { return multiplicity_; }
  ExtensionRule extension_rule() const { return rule_; }

  AggregateFunction with_rule(ExtensionRule rule) const {
    AggregateFunction f = *this;
    f.rule_ = rule;
    return f;
  }

  /// Value used where no observed vector is comparable under the rule:
  /// the minimum node value (lower) or the maximum (upper).
  double default_value() const {
    return rule_ == ExtensionRule::LowerEnvelope
               ? *std::min_element(values_.begin(), values_.end())
               : *std::max_element(values_.begin(), values_.end());
  }

  /// Largest violation of v_u <= v_w over all comparable observed pairs.
  double feasibility_residual() const {
    double worst = 0.0;
    for (std::size_t u = 0; u < size(); ++u)
      for (std::size_t w = 0; w < size(); ++w)
        if (u != w && leq(vectors_[u], vectors_[w]))
          worst = std::max(worst, values_[u] - values_[w]);
    return worst;
  }

private:
  std::vector<Vector> vectors_;
  std::vector<double> values_;
  std::vector<std::size_t> multiplicity_;
  ExtensionRule rule_ = ExtensionRule::LowerEnvelope;
  std::size_t d_ = 0;
};

/// Monotone extension. Lower envelope: max value over observed vectors
/// <= x. Upper envelope: min value over observed vectors >= x. Observed
/// vectors map exactly to their own value.
inline double evaluate(const AggregateFunction &f, const Vector &x) {
  if (x.size() != f.d())
    throw InvalidArgument("evaluate: expected " + std::to_string(f.d()) +
                          " criteria, got " + std::to_string(x.size()));
  const auto &vs = f.vectors();
  for (std::size_t u = 0; u < vs.size(); ++u)
    if (vs[u] == x)
      return f.node_values()[u];
  std::optional<double> best;
  const bool lower = f.extension_rule() == ExtensionRule::LowerEnvelope;
  for (std::size_t u = 0; u < vs.size(); ++u) {
    const double v = f.node_values()[u];
    if (lower && leq(vs[u], x))
      best = best ? std::max(*best, v) : v;
    else if (!lower && leq(x, vs[u]))
      best = best ? std::min(*best, v) : v;
  }
  return best ? *best : f.default_value();
}

inline nlohmann::json to_json(const AggregateFunction &f) {
  nlohmann::json entries = nlohmann::json::array();
  for (std::size_t u = 0; u < f.size(); ++u)
    entries.push_back({{"vector", f.vectors()[u]},
                       {"value", f.node_values()[u]},
                       {"multiplicity", f.multiplicity()[u]}});
  return {{"d", f.d()},
          {"extension_rule", to_string(f.extension_rule())},
          {"default_value", f.default_value()},
          {"entries", std::move(entries)}};
}

inline AggregateFunction aggregate_function_from_json(const nlohmann::json &j) {
  std::vector<Vector> vectors;
  std::vector<double> values;
  std::vector<std::size_t> mult;
  for (const auto &e : j.at("entries")) {
    vectors.push_back(e.at("vector").get<Vector>());
    values.push_back(e.at("value").get<double>());
    mult.push_back(e.at("multiplicity").get<std::size_t>());
  }
  const auto rule = j.at("extension_rule").get<std::string>() == "upper"
                        ? ExtensionRule::UpperEnvelope
                        : ExtensionRule::LowerEnvelope;
  AggregateFunction f(std::move(vectors), std::move(values), std::move(mult),
                      rule);
  if (f.d() != j.at("d").get<std::size_t>())
    throw ValidationError("aggregate function: d does not match entries");
  return f;
}

struct SolveReport {
  /// Achieved L(p,q) loss.
  double objective = 0.0;
  /// Sum over reviews of f(x_ia)^2.
  double tie_norm = 0.0;
  /// max over edges of max(0, v_u - v_w).
  double feasibility_residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

inline nlohmann::json to_json(const SolveReport &r) {
  return {{"objective", r.objective},
          {"tie_norm", r.tie_norm},
          {"feasibility_residual", r.feasibility_residual},
          {"iterations", r.iterations},
          {"converged", r.converged}};
}

struct SolveResult {
  AggregateFunction function;
  SolveReport report;
};

namespace detail {

/// Review-weighted squared norm: a node shared by k reviews counts k times.
inline double tie_norm(std::span<const double> values,
                       const std::vector<std::size_t> &multiplicity) {
  double s = 0.0;
  for (std::size_t u = 0; u < values.size(); ++u)
    s += static_cast<double>(multiplicity[u]) * values[u] * values[u];
  return s;
}

inline double edge_residual(std::span<const double> values,
                            const DominanceGraph &graph) {
  double worst = 0.0;
  for (auto [u, w] : graph.edges())
    worst = std::max(worst, values[u] - values[w]);
  return worst;
}

/// Left median per node, lifted to the monotone cone by a running max in
/// topological order, then tilted by the node's depth so every edge holds
/// strictly.
inline std::vector<double> warm_start(const Dataset &ds,
                                      const DominanceGraph &graph) {
  const std::size_t n = graph.size();
  std::vector<std::vector<double>> ys(n);
  for (std::size_t k = 0; k < ds.size(); ++k)
    ys[graph.node_of_record()[k]].push_back(ds.records()[k].overall);
  std::vector<double> v(n);
  std::vector<double> depth(n, 0.0);
  for (std::size_t u = 0; u < n; ++u) {
    v[u] = left_median(ys[u]);
    for (auto pred : graph.predecessors()[u]) {
      v[u] = std::max(v[u], v[pred]);
      depth[u] = std::max(depth[u], depth[pred] + 1.0);
    }
  }
  for (std::size_t u = 0; u < n; ++u)
    v[u] += 1e-2 * depth[u];
  return v;
}

/// Epigraph form of the L(p,q) problem over node values. The loss is the
/// single variable `loss_var`; node values occupy indices [0, nodes).
struct LpqProgram {
  BarrierProblem problem;
  std::vector<double> start;
  int loss_var = 0;
};

inline LpqProgram build_program(const Dataset &ds, const DominanceGraph &graph,
                                const LpqConfig &cfg,
                                const std::vector<double> &v0) {
  LpqProgram prog;
  auto &P = prog.problem;
  auto &z = prog.start;
  auto add_var = [&](double init) {
    z.push_back(init);
    return static_cast<int>(z.size() - 1);
  };
  auto add_row = [&](std::vector<std::pair<int, double>> coeffs, double rhs) {
    P.rows.push_back(LinearRow{std::move(coeffs), rhs});
  };
  for (double v : v0)
    add_var(v);

  // |y - v| <= bound, written as two rows.
  auto bound_abs = [&](int v, double y, int bound) {
    add_row({{v, -1.0}, {bound, -1.0}}, -y);
    add_row({{v, 1.0}, {bound, -1.0}}, y);
  };

  const auto &node = graph.node_of_record();
  std::vector<int> reviewer_norm;
  for (const auto &[reviewer, idx] : ds.reviewer_records()) {
    std::vector<double> resid;
    for (auto k : idx)
      resid.push_back(std::abs(ds.records()[k].overall - v0[node[k]]));
    const auto v_of = [&](std::size_t k) { return static_cast<int>(node[k]); };
    if (cfg.p.is_infinite()) {
      const double mx = *std::max_element(resid.begin(), resid.end());
      const int t = add_var(mx + 1.0);
      for (auto k : idx)
        bound_abs(v_of(k), ds.records()[k].overall, t);
      reviewer_norm.push_back(t);
    } else if (cfg.p.is_one()) {
      std::vector<int> s;
      double total = 0.0;
      for (std::size_t j = 0; j < idx.size(); ++j) {
        s.push_back(add_var(resid[j] + 1.0));
        total += resid[j] + 1.0;
        bound_abs(v_of(idx[j]), ds.records()[idx[j]].overall, s.back());
      }
      const int t = add_var(total + 1.0);
      std::vector<std::pair<int, double>> sum;
      for (int sv : s)
        sum.emplace_back(sv, 1.0);
      sum.emplace_back(t, -1.0);
      add_row(std::move(sum), 0.0);
      reviewer_norm.push_back(t);
    } else {
      // ||r||_p <= t  <=>  |r_k| <= u_k, u_k <= s_k^(1/p) t^(1-1/p),
      // sum_k s_k <= t.
      const double inv_p = 1.0 / cfg.p.value();
      std::vector<int> u, s;
      double total = 0.0;
      for (std::size_t j = 0; j < idx.size(); ++j) {
        u.push_back(add_var(resid[j] + 1.0));
        s.push_back(add_var(resid[j] + 2.0));
        total += resid[j] + 2.0;
        bound_abs(v_of(idx[j]), ds.records()[idx[j]].overall, u.back());
      }
      const int t = add_var(total + 1.0);
      std::vector<std::pair<int, double>> sum;
      for (std::size_t j = 0; j < s.size(); ++j) {
        P.cones.push_back(GeoMeanCone{u[j], s[j], t, inv_p});
        sum.emplace_back(s[j], 1.0);
      }
      sum.emplace_back(t, -1.0);
      add_row(std::move(sum), 0.0);
      reviewer_norm.push_back(t);
    }
  }

  if (cfg.q.is_infinite()) {
    double mx = 0.0;
    for (int t : reviewer_norm)
      mx = std::max(mx, z[t]);
    prog.loss_var = add_var(mx + 1.0);
    for (int t : reviewer_norm)
      add_row({{t, 1.0}, {prog.loss_var, -1.0}}, 0.0);
  } else if (cfg.q.is_one()) {
    double total = 0.0;
    std::vector<std::pair<int, double>> sum;
    for (int t : reviewer_norm) {
      total += z[t];
      sum.emplace_back(t, 1.0);
    }
    prog.loss_var = add_var(total + 1.0);
    sum.emplace_back(prog.loss_var, -1.0);
    add_row(std::move(sum), 0.0);
  } else {
    const double inv_q = 1.0 / cfg.q.value();
    std::vector<int> w;
    double total = 0.0;
    for (int t : reviewer_norm) {
      w.push_back(add_var(z[t] + 1.0));
      total += z[t] + 1.0;
    }
    prog.loss_var = add_var(total + 1.0);
    std::vector<std::pair<int, double>> sum;
    for (std::size_t i = 0; i < w.size(); ++i) {
      P.cones.push_back(GeoMeanCone{reviewer_norm[i], w[i], prog.loss_var, inv_q});
      sum.emplace_back(w[i], 1.0);
    }
    sum.emplace_back(prog.loss_var, -1.0);
    add_row(std::move(sum), 0.0);
  }

  for (auto [u, w] : graph.edges())
    add_row({{static_cast<int>(u), 1.0}, {static_cast<int>(w), -1.0}}, 0.0);

  P.num_vars = static_cast<int>(z.size());
  P.linear_cost.assign(z.size(), 0.0);
  P.quad_cost.assign(z.size(), 0.0);
  P.linear_cost[prog.loss_var] = 1.0;
  return prog;
}

} // namespace detail

/// L(p,q) aggregation.
///
/// Phase 1 minimizes the loss over monotone node values. Phase 2 keeps the
/// loss within eps_tie * max(1, L*) of the phase-1 optimum and minimizes the
/// review-weighted squared norm of the values. Both phases run a log-barrier
/// interior-point method on an epigraph reformulation in which every
/// (p, q) combination becomes linear rows plus geometric-mean cones.
///
/// Non-convergence is reported through SolveReport::converged; the best
/// iterate is still returned and is always feasible.
inline SolveResult solve(const Dataset &ds, const DominanceGraph &graph,
                         const LpqConfig &cfg) {
  cfg.validate();
  if (ds.empty())
    throw InvalidArgument("solve: empty dataset");
  if (graph.node_of_record().size() != ds.size())
    throw InvalidArgument("solve: dominance graph was not built from this dataset");

  const std::size_t nodes = graph.size();
  auto prog = detail::build_program(ds, graph, cfg, detail::warm_start(ds, graph));

  detail::BarrierOptions phase1;
  phase1.gap_abs = 0.5 * cfg.eps_obj;
  phase1.gap_rel = 0.5 * cfg.eps_obj;
  phase1.max_newton = cfg.max_iters;
  detail::BarrierSolver solver1(prog.problem);
  auto r1 = solver1.minimize(prog.start, phase1);

  const double best_loss = r1.z[prog.loss_var];
  auto tie = prog.problem;
  tie.rows.push_back(detail::LinearRow{
      {{prog.loss_var, 1.0}},
      best_loss + cfg.eps_tie * std::max(1.0, std::abs(best_loss))});
  std::fill(tie.linear_cost.begin(), tie.linear_cost.end(), 0.0);
  for (std::size_t u = 0; u < nodes; ++u)
    tie.quad_cost[u] = static_cast<double>(graph.multiplicity()[u]);

  detail::BarrierOptions phase2;
  phase2.gap_abs = 1e-8;
  phase2.gap_rel = 1e-8;
  phase2.polish_abs = 1e-12;
  phase2.polish_rel = 1e-12;
  phase2.max_newton = cfg.max_iters;
  detail::BarrierSolver solver2(tie);
  auto r2 = solver2.minimize(r1.z, phase2);

  std::vector<double> values(r2.z.begin(), r2.z.begin() + static_cast<std::ptrdiff_t>(nodes));
  SolveResult out{AggregateFunction(graph, values), {}};
  out.report.objective = lpq_loss(values, ds, graph, cfg);
  out.report.tie_norm = detail::tie_norm(values, graph.multiplicity());
  out.report.feasibility_residual = detail::edge_residual(values, graph);
  out.report.iterations = r1.newton_steps + r2.newton_steps;
  out.report.converged = r1.converged && r2.converged &&
                         out.report.feasibility_residual <= kFeasibilityTolerance;
  return out;
}

inline SolveResult solve(const Dataset &ds, const LpqConfig &cfg) {
  return solve(ds, build_dominance_graph(ds), cfg);
}

/// Left-median closed form for p = q = 1 in the complete, objective
/// setting. `infeasibility` is set when the medians break monotonicity
/// (possible when reviewers do not score monotonically); callers must then
/// fall back to solve().
struct ClosedFormResult {
  AggregateFunction function;
  std::optional<std::string> infeasibility;
};

inline ClosedFormResult solve_l11_closed_form(const Dataset &ds,
                                              const DominanceGraph &graph) {
  if (ds.empty())
    throw InvalidArgument("solve_l11_closed_form: empty dataset");
  const auto flag = classify_setting(ds);
  if (!flag.is_complete || !flag.is_objective)
    throw InvalidArgument(
        "solve_l11_closed_form: requires a complete and objective dataset");
  // Papers sharing a node pool their reviews.
  std::vector<std::vector<double>> ys(graph.size());
  for (std::size_t k = 0; k < ds.size(); ++k)
    ys[graph.node_of_record()[k]].push_back(ds.records()[k].overall);
  std::vector<double> values;
  values.reserve(graph.size());
  for (auto &y : ys)
    values.push_back(left_median(std::move(y)));
  ClosedFormResult out{AggregateFunction(graph, values), std::nullopt};
  for (auto [u, w] : graph.edges())
    if (values[u] > values[w] + kFeasibilityTolerance) {
      out.infeasibility = "left medians violate monotonicity on edge (" +
                          std::to_string(u) + ", " + std::to_string(w) + ")";
      break;
    }
  return out;
}

inline ClosedFormResult solve_l11_closed_form(const Dataset &ds) {
  return solve_l11_closed_form(ds, build_dominance_graph(ds));
}

/// Exhaustive oracle: every monotone assignment of grid values to nodes.
/// Returns the smallest loss; ties within eps_tie * max(1, loss) go to the
/// smallest review-weighted squared norm, then to the lexicographically
/// smallest assignment.
inline SolveResult brute_force_solve(const Dataset &ds,
                                     const DominanceGraph &graph,
                                     const LpqConfig &cfg,
                                     const std::vector<double> &value_grid) {
  cfg.validate();
  if (ds.empty())
    throw InvalidArgument("brute_force_solve: empty dataset");
  if (graph.size() > 6)
    throw InvalidArgument("brute_force_solve: at most 6 nodes supported");
  if (value_grid.empty() || value_grid.size() > 64)
    throw InvalidArgument("brute_force_solve: grid must hold 1..64 values");
  if (!std::is_sorted(value_grid.begin(), value_grid.end()) ||
      std::adjacent_find(value_grid.begin(), value_grid.end()) != value_grid.end())
    throw InvalidArgument("brute_force_solve: grid must be strictly ascending");

  const std::size_t nodes = graph.size();
  const std::size_t G = value_grid.size();
  const bool p_inf = cfg.p.is_infinite();
  const double p = p_inf ? 1.0 : cfg.p.value();

  // Reviews attached to each node, with per-grid-value residual cost.
  struct Review {
    std::size_t reviewer;
    std::vector<double> cost;
  };
  std::vector<std::vector<Review>> at_node(nodes);
  std::size_t reviewer_count = 0;
  for (const auto &[id, idx] : ds.reviewer_records()) {
    for (auto k : idx) {
      Review rv{reviewer_count, std::vector<double>(G)};
      for (std::size_t g = 0; g < G; ++g) {
        const double r = std::abs(ds.records()[k].overall - value_grid[g]);
        rv.cost[g] = p_inf ? r : std::pow(r, p);
      }
      at_node[graph.node_of_record()[k]].push_back(std::move(rv));
    }
    ++reviewer_count;
  }

  // acc holds sum |r|^p per reviewer (max |r| when p = inf).
  const bool q_inf = cfg.q.is_infinite();
  const double q = q_inf ? 1.0 : cfg.q.value();
  auto loss_of = [&](const std::vector<double> &acc) {
    double outer = 0.0;
    for (double a : acc) {
      const double inner = p_inf || p == 1.0 ? a : p == 2.0 ? std::sqrt(a) : std::pow(a, 1.0 / p);
      if (q_inf)
        outer = std::max(outer, inner);
      else
        outer += q == 1.0 ? inner : q == 2.0 ? inner * inner : std::pow(inner, q);
    }
    return q_inf || q == 1.0 ? outer : q == 2.0 ? std::sqrt(outer) : std::pow(outer, 1.0 / q);
  };

  std::vector<std::size_t> choice(nodes, 0);
  std::vector<std::vector<double>> acc(nodes + 1,
                                       std::vector<double>(reviewer_count, 0.0));
  std::size_t leaves = 0;

  // visit(depth) enumerates choices for node `depth` given earlier choices.
  auto enumerate = [&](auto &&on_leaf) {
    auto visit = [&](auto &&self, std::size_t depth) -> void {
      if (depth == nodes) {
        on_leaf(loss_of(acc[nodes]));
        return;
      }
      std::size_t lo = 0;
      for (auto pred : graph.predecessors()[depth])
        lo = std::max(lo, choice[pred]);
      for (std::size_t g = lo; g < G; ++g) {
        choice[depth] = g;
        acc[depth + 1] = acc[depth];
        for (const auto &rv : at_node[depth]) {
          auto &a = acc[depth + 1][rv.reviewer];
          a = p_inf ? std::max(a, rv.cost[g]) : a + rv.cost[g];
        }
        self(self, depth + 1);
      }
    };
    visit(visit, 0);
  };

  double best_loss = std::numeric_limits<double>::infinity();
  enumerate([&](double loss) {
    ++leaves;
    best_loss = std::min(best_loss, loss);
  });

  const double window = best_loss + cfg.eps_tie * std::max(1.0, best_loss);
  double best_norm = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> best_choice;
  double chosen_loss = best_loss;
  enumerate([&](double loss) {
    if (loss > window)
      return;
    double norm = 0.0;
    for (std::size_t u = 0; u < nodes; ++u)
      norm += static_cast<double>(graph.multiplicity()[u]) *
              value_grid[choice[u]] * value_grid[choice[u]];
    if (best_choice.empty() || norm < best_norm - 1e-12 * std::max(1.0, best_norm)) {
      best_norm = norm;
      best_choice = choice;
      chosen_loss = loss;
    }
  });

  std::vector<double> values(nodes);
  for (std::size_t u = 0; u < nodes; ++u)
    values[u] = value_grid[best_choice[u]];
  SolveResult out{AggregateFunction(graph, values), {}};
  out.report.objective = chosen_loss;
  out.report.tie_norm = best_norm;
  out.report.feasibility_residual = detail::edge_residual(values, graph);
  out.report.iterations = leaves;
  out.report.converged = true;
  return out;
}

} // namespace lpq
