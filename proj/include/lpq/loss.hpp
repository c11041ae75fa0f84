#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lpq/domain.hpp"
#include "lpq/error.hpp"
#include "lpq/order.hpp"

namespace lpq {

/// Norm exponent in [1, inf]. Infinity is a distinct state, not a large
/// finite value.
class Exponent {
public:
  constexpr Exponent() = default;
  constexpr Exponent(double value) : value_(value) {}

  static constexpr Exponent infinity() {
    Exponent e;
    e.infinite_ = true;
    return e;
  }

  /// Accepts a decimal number or "inf" / "infinity" (case-sensitive).
  static Exponent parse(const std::string &text) {
    if (text == "inf" || text == "infinity")
      return infinity();
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(text, &used);
    } catch (const std::exception &) {
      throw InvalidArgument("not a norm exponent: '" + text + "'");
    }
    if (used != text.size() || !std::isfinite(v))
      throw InvalidArgument("not a norm exponent: '" + text + "'");
    return Exponent(v);
  }

  constexpr bool is_infinite() const { return infinite_; }
  /// Finite value; undefined for infinity.
  constexpr double value() const { return value_; }
  constexpr bool is_one() const { return !infinite_ && value_ == 1.0; }

  std::string to_string() const {
    return infinite_ ? "inf" : format_number(value_);
  }

  friend constexpr bool operator==(const Exponent &a, const Exponent &b) {
    return a.infinite_ == b.infinite_ && (a.infinite_ || a.value_ == b.value_);
  }

private:
  double value_ = 1.0;
  bool infinite_ = false;
};

/// Hyperparameters of L(p,q) aggregation plus solver tolerances.
struct LpqConfig {
  Exponent p{1.0};
  Exponent q{1.0};
  /// Relative accuracy of the loss minimum.
  double eps_obj = 1e-7;
  /// Slack on the loss while minimizing the tie-break norm, relative to
  /// max(1, optimal loss).
  double eps_tie = 1e-8;
  /// Cap on Newton steps per solver phase.
  std::size_t max_iters = 2000;

  void validate() const {
    auto check = [](const Exponent &e, const char *name) {
      if (!e.is_infinite() && !(e.value() >= 1.0))
        throw InvalidArgument(std::string(name) + " must lie in [1, inf], got " +
                              e.to_string());
    };
    check(p, "p");
    check(q, "q");
    if (!(eps_obj > 0.0) || !(eps_tie > 0.0))
      throw InvalidArgument("tolerances must be strictly positive");
    if (max_iters == 0)
      throw InvalidArgument("max_iters must be positive");
  }

  std::string label() const { return "(" + p.to_string() + "," + q.to_string() + ")"; }
};

/// Lp norm of a residual vector (max of absolute values when p = inf).
inline double lp_norm(std::span<const double> r, const Exponent &p) {
  double acc = 0.0;
  if (p.is_infinite()) {
    for (double x : r)
      acc = std::max(acc, std::abs(x));
    return acc;
  }
  if (p.value() == 1.0) {
    for (double x : r)
      acc += std::abs(x);
    return acc;
  }
  for (double x : r)
    acc += std::pow(std::abs(x), p.value());
  return std::pow(acc, 1.0 / p.value());
}

/// Nested norm: Lq over groups of the Lp norm within each group.
inline double nested_norm(const std::vector<Vector> &groups, const Exponent &p,
                          const Exponent &q) {
  Vector inner;
  inner.reserve(groups.size());
  for (const auto &g : groups)
    inner.push_back(lp_norm(g, p));
  return lp_norm(inner, q);
}

namespace detail {

inline const std::vector<std::size_t> &
checked_nodes(std::span<const double> values, const Dataset &ds,
              const DominanceGraph &graph) {
  if (values.size() != graph.size())
    throw InvalidArgument("node values: expected " +
                          std::to_string(graph.size()) + " entries, got " +
                          std::to_string(values.size()));
  if (graph.node_of_record().size() != ds.size())
    throw InvalidArgument("dominance graph was not built from this dataset");
  return graph.node_of_record();
}

} // namespace detail

/// Per-reviewer residual groups y_ia - f(x_ia), reviewers in id order.
inline std::vector<Vector> residual_groups(std::span<const double> values,
                                           const Dataset &ds,
                                           const DominanceGraph &graph) {
  const auto &node = detail::checked_nodes(values, ds, graph);
  std::vector<Vector> groups;
  groups.reserve(ds.n());
  for (const auto &[reviewer, idx] : ds.reviewer_records()) {
    Vector r;
    r.reserve(idx.size());
    for (auto k : idx) {
      if (graph.nodes()[node[k]] != ds.records()[k].criteria)
        throw InvalidArgument("record " + std::to_string(k) +
                              " has no matching node in the graph");
      r.push_back(ds.records()[k].overall - values[node[k]]);
    }
    groups.push_back(std::move(r));
  }
  return groups;
}

/// L(p,q) loss of node values: Lq across reviewers of each reviewer's Lp
/// residual norm. Feasibility of the values is not required.
inline double lpq_loss(std::span<const double> values, const Dataset &ds,
                       const DominanceGraph &graph, const LpqConfig &cfg) {
  cfg.validate();
  return nested_norm(residual_groups(values, ds, graph), cfg.p, cfg.q);
}

/// Mean absolute residual over the papers a reviewer scored.
inline double per_reviewer_normalized_loss(std::span<const double> values,
                                           const Dataset &ds,
                                           const DominanceGraph &graph,
                                           const std::string &reviewer) {
  const auto &node = detail::checked_nodes(values, ds, graph);
  auto it = ds.reviewer_records().find(reviewer);
  if (it == ds.reviewer_records().end())
    throw InvalidArgument("unknown reviewer '" + reviewer + "'");
  double sum = 0.0;
  for (auto k : it->second)
    sum += std::abs(ds.records()[k].overall - values[node[k]]);
  return sum / static_cast<double>(it->second.size());
}

} // namespace lpq
