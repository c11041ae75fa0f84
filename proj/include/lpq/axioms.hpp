#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lpq/domain.hpp"
#include "lpq/error.hpp"
#include "lpq/loss.hpp"
#include "lpq/order.hpp"
#include "lpq/solver.hpp"

namespace lpq {

/// Complete, objective instance: every reviewer scores every paper and
/// each paper carries one criteria vector.
struct AxiomInstance {
  std::size_t n = 0;
  std::size_t m = 0;
  /// criteria[a]: the vector of paper a.
  std::vector<Vector> criteria;
  /// y[i][a]: overall score of reviewer i for paper a.
  std::vector<Vector> y;

  void validate() const {
    if (n == 0 || m == 0)
      throw InvalidArgument("axiom instance needs n >= 1 and m >= 1");
    if (criteria.size() != m || y.size() != n)
      throw InvalidArgument("axiom instance shape does not match n, m");
    for (const auto &row : y)
      if (row.size() != m)
        throw InvalidArgument("axiom instance score row has wrong length");
    for (const auto &x : criteria)
      if (x.empty() || x.size() != criteria.front().size())
        throw InvalidArgument("axiom instance criteria have mixed lengths");
  }

  std::size_t d() const { return criteria.front().size(); }

  static std::string reviewer_id(std::size_t i) { return "r" + std::to_string(i + 1); }
  static std::string paper_id(std::size_t a) { return "p" + std::to_string(a + 1); }

  Vector column(std::size_t a) const {
    Vector c(n);
    for (std::size_t i = 0; i < n; ++i)
      c[i] = y[i][a];
    return c;
  }

  AxiomInstance with_row(std::size_t i, Vector row) const {
    AxiomInstance out = *this;
    out.y.at(i) = std::move(row);
    out.validate();
    return out;
  }

  /// Reviewers "r1".."rn", papers "p1".."pm".
  Dataset to_dataset() const {
    validate();
    std::vector<ReviewRecord> records;
    records.reserve(n * m);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t a = 0; a < m; ++a)
        records.push_back({reviewer_id(i), paper_id(a), criteria[a], y[i][a]});
    return Dataset::create(std::move(records), d());
  }
};

inline nlohmann::json to_json(const AxiomInstance &inst) {
  return {{"n", inst.n}, {"m", inst.m}, {"criteria", inst.criteria}, {"y", inst.y}};
}

/// Maps an instance to one aggregate score per paper.
using AggregationMethod = std::function<Vector(const AxiomInstance &)>;

/// L(p,q) aggregation as an axiom-check method. Throws ConvergenceError
/// when the solver does not converge. With `closed_form` set and
/// p = q = 1 the left-median closed form is used whenever it is feasible.
inline AggregationMethod lpq_method(LpqConfig cfg, bool closed_form = false) {
  cfg.validate();
  return [cfg, closed_form](const AxiomInstance &inst) {
    const auto ds = inst.to_dataset();
    const auto graph = build_dominance_graph(ds);
    std::optional<AggregateFunction> f;
    if (closed_form && cfg.p.is_one() && cfg.q.is_one()) {
      auto cf = solve_l11_closed_form(ds, graph);
      if (!cf.infeasibility)
        f = std::move(cf.function);
    }
    if (!f) {
      auto res = solve(ds, graph, cfg);
      if (!res.report.converged)
        throw ConvergenceError("L" + cfg.label() + " solve did not converge");
      f = std::move(res.function);
    }
    Vector out(inst.m);
    for (std::size_t a = 0; a < inst.m; ++a)
      out[a] = evaluate(*f, inst.criteria[a]);
    return out;
  };
}

/// Absolute tolerance separating solver noise from axiom failures.
inline constexpr double kAxiomTolerance = 1e-4;

enum class Axiom { Consensus, Efficiency, Strategyproofness };

inline std::string to_string(Axiom a) {
  switch (a) {
  case Axiom::Consensus:
    return "consensus";
  case Axiom::Efficiency:
    return "efficiency";
  case Axiom::Strategyproofness:
    return "strategyproofness";
  }
  return "unknown";
}

/// Evidence of a violation. `instance` is the truthful input; for
/// strategyproofness `manipulated` holds the instance after substitution.
struct AxiomWitness {
  AxiomInstance instance;
  std::optional<AxiomInstance> manipulated;
  std::optional<std::size_t> reviewer;
  std::size_t paper_a = 0;
  std::optional<std::size_t> paper_b;
  Vector aggregate;
  Vector aggregate_after;
  /// The inequality that failed: lhs <= rhs + tolerance is required.
  double lhs = 0.0;
  double rhs = 0.0;
  std::string description;
};

struct AxiomVerdict {
  Axiom axiom = Axiom::Consensus;
  bool holds = true;
  std::optional<AxiomWitness> witness;
  /// Number of method invocations performed.
  std::size_t evaluations = 0;
};

inline nlohmann::json to_json(const AxiomWitness &w) {
  nlohmann::json j{{"instance", to_json(w.instance)},
                   {"paper_a", AxiomInstance::paper_id(w.paper_a)},
                   {"aggregate", w.aggregate},
                   {"lhs", w.lhs},
                   {"rhs", w.rhs},
                   {"description", w.description}};
  if (w.paper_b)
    j["paper_b"] = AxiomInstance::paper_id(*w.paper_b);
  if (w.reviewer)
    j["reviewer"] = AxiomInstance::reviewer_id(*w.reviewer);
  if (w.manipulated) {
    j["manipulated_row"] = w.manipulated->y[*w.reviewer];
    j["aggregate_after"] = w.aggregate_after;
  }
  return j;
}

inline nlohmann::json to_json(const AxiomVerdict &v, const LpqConfig &cfg) {
  return {{"axiom", to_string(v.axiom)},
          {"pq", cfg.label()},
          {"holds", v.holds},
          {"witness", v.witness ? to_json(*v.witness) : nlohmann::json(nullptr)}};
}

namespace detail {

inline double l2_distance(const Vector &a, const Vector &b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

inline Vector checked_aggregate(const AggregationMethod &method,
                                const AxiomInstance &inst) {
  auto out = method(inst);
  if (out.size() != inst.m)
    throw InvalidArgument("aggregation method returned " +
                          std::to_string(out.size()) + " scores for " +
                          std::to_string(inst.m) + " papers");
  return out;
}

} // namespace detail

/// Consensus: a paper whose reviewers all report r is aggregated to r.
inline AxiomVerdict check_consensus(const AxiomInstance &inst,
                                    const AggregationMethod &method,
                                    double tol = kAxiomTolerance) {
  inst.validate();
  AxiomVerdict v{Axiom::Consensus, true, std::nullopt, 1};
  const auto agg = detail::checked_aggregate(method, inst);
  for (std::size_t a = 0; a < inst.m; ++a) {
    const auto col = inst.column(a);
    if (std::adjacent_find(col.begin(), col.end(), std::not_equal_to<>()) != col.end())
      continue;
    const double gap = std::abs(agg[a] - col.front());
    if (gap > tol) {
      v.holds = false;
      v.witness = AxiomWitness{inst, std::nullopt, std::nullopt, a, std::nullopt,
                               agg, {}, gap, 0.0,
                               AxiomInstance::paper_id(a) + " has unanimous score " +
                                   format_number(col.front()) + " but aggregate " +
                                   format_number(agg[a])};
      return v;
    }
  }
  return v;
}

/// Efficiency: if the sorted scores of a dominate those of b, then a's
/// aggregate is at least b's.
inline AxiomVerdict check_efficiency(const AxiomInstance &inst,
                                     const AggregationMethod &method,
                                     double tol = kAxiomTolerance) {
  inst.validate();
  AxiomVerdict v{Axiom::Efficiency, true, std::nullopt, 1};
  const auto agg = detail::checked_aggregate(method, inst);
  for (std::size_t a = 0; a < inst.m; ++a)
    for (std::size_t b = 0; b < inst.m; ++b) {
      if (a == b || !sorted_dominates(inst.column(a), inst.column(b)))
        continue;
      if (agg[a] < agg[b] - tol) {
        v.holds = false;
        v.witness = AxiomWitness{inst, std::nullopt, std::nullopt, a, b, agg, {},
                                 agg[b], agg[a],
                                 AxiomInstance::paper_id(a) + " dominates " +
                                     AxiomInstance::paper_id(b) + " but scores " +
                                     format_number(agg[a]) + " < " +
                                     format_number(agg[b])};
        return v;
      }
    }
  return v;
}

/// Alternative score rows a reviewer may report. Sound for finding
/// violations; a passing check certifies only the rows generated here.
struct ManipulationSet {
  /// Values substituted by single-coordinate changes and constant rows.
  Vector grid = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  bool single_coordinate = true;
  bool copy_rows = true;
  bool constant_rows = true;

  /// Distinct rows other than reviewer i's truthful row, in generation
  /// order: single-coordinate changes, copies of other rows, constants.
  std::vector<Vector> rows(const AxiomInstance &inst, std::size_t i) const {
    const Vector &truth = inst.y.at(i);
    std::vector<Vector> out;
    std::set<Vector> seen{truth};
    auto add = [&](Vector r) {
      if (seen.insert(r).second)
        out.push_back(std::move(r));
    };
    if (single_coordinate)
      for (std::size_t a = 0; a < inst.m; ++a)
        for (double g : grid) {
          Vector r = truth;
          r[a] = g;
          add(std::move(r));
        }
    if (copy_rows)
      for (std::size_t j = 0; j < inst.n; ++j)
        if (j != i)
          add(inst.y[j]);
    if (constant_rows)
      for (double g : grid)
        add(Vector(inst.m, g));
    return out;
  }
};

/// Strategyproofness: no reported row brings the aggregate closer (in L2)
/// to the reviewer's truthful row.
inline AxiomVerdict check_strategyproofness(const AxiomInstance &inst,
                                            const AggregationMethod &method,
                                            const ManipulationSet &manipulations = {},
                                            double tol = kAxiomTolerance) {
  inst.validate();
  AxiomVerdict v{Axiom::Strategyproofness, true, std::nullopt, 1};
  const auto agg = detail::checked_aggregate(method, inst);
  for (std::size_t i = 0; i < inst.n; ++i) {
    const double truthful = detail::l2_distance(agg, inst.y[i]);
    for (auto &row : manipulations.rows(inst, i)) {
      auto alt = inst.with_row(i, row);
      const auto after = detail::checked_aggregate(method, alt);
      ++v.evaluations;
      const double manipulated = detail::l2_distance(after, inst.y[i]);
      if (truthful > manipulated + tol) {
        v.holds = false;
        v.witness = AxiomWitness{inst, std::move(alt), i, 0, std::nullopt, agg,
                                 after, truthful, manipulated,
                                 AxiomInstance::reviewer_id(i) +
                                     " moves the aggregate from distance " +
                                     format_number(truthful) + " to " +
                                     format_number(manipulated) + " by misreporting"};
        return v;
      }
    }
  }
  return v;
}

/// Re-runs the method on a witness and reports whether the recorded
/// violation still occurs.
inline bool replay(const AxiomVerdict &verdict, const AggregationMethod &method,
                   double tol = kAxiomTolerance) {
  if (verdict.holds || !verdict.witness)
    return false;
  const auto &w = *verdict.witness;
  const auto agg = detail::checked_aggregate(method, w.instance);
  switch (verdict.axiom) {
  case Axiom::Consensus: {
    const auto col = w.instance.column(w.paper_a);
    return std::abs(agg[w.paper_a] - col.front()) > tol;
  }
  case Axiom::Efficiency:
    return w.paper_b &&
           sorted_dominates(w.instance.column(w.paper_a),
                            w.instance.column(*w.paper_b)) &&
           agg[w.paper_a] < agg[*w.paper_b] - tol;
  case Axiom::Strategyproofness: {
    if (!w.manipulated || !w.reviewer)
      return false;
    const auto &truth = w.instance.y[*w.reviewer];
    const auto after = detail::checked_aggregate(method, *w.manipulated);
    return detail::l2_distance(agg, truth) >
           detail::l2_distance(after, truth) + tol;
  }
  }
  return false;
}

/// Three reviewers, two papers with incomparable criteria; reviewer rows
/// (z, 0), (0, 1), (0, 0).
inline AxiomInstance make_fermat_instance(double z) {
  if (!(z > 1.0))
    throw InvalidArgument("make_fermat_instance: z must exceed 1");
  return AxiomInstance{3, 2, {{1, 2}, {2, 1}}, {{z, 0}, {0, 1}, {0, 0}}};
}

/// One paper, two reviewers scoring it 1 and 0.
inline AxiomInstance make_sp_instance() {
  return AxiomInstance{2, 1, {{1, 1}}, {{1}, {0}}};
}

/// Two reviewers, two papers with incomparable criteria; rows (0, 1) and
/// (2, 1), so the second paper is unanimous.
inline AxiomInstance make_consensus_instance() {
  return AxiomInstance{2, 2, {{1, 2}, {2, 1}}, {{0, 1}, {2, 1}}};
}

/// Random instance with n in [1, n_max], m in [1, m_max], integer scores
/// in [0, score_max] and antichain criteria (a, m - 1 - a).
inline AxiomInstance make_random_instance(std::mt19937_64 &rng,
                                          std::size_t n_max = 5,
                                          std::size_t m_max = 4,
                                          int score_max = 10) {
  if (n_max == 0 || m_max == 0 || score_max < 0)
    throw InvalidArgument("make_random_instance: invalid bounds");
  std::uniform_int_distribution<std::size_t> n_dist(1, n_max), m_dist(1, m_max);
  std::uniform_int_distribution<int> score(0, score_max);
  AxiomInstance inst;
  inst.n = n_dist(rng);
  inst.m = m_dist(rng);
  for (std::size_t a = 0; a < inst.m; ++a)
    inst.criteria.push_back({static_cast<double>(a),
                             static_cast<double>(inst.m - 1 - a)});
  inst.y.assign(inst.n, Vector(inst.m));
  for (auto &row : inst.y)
    for (auto &s : row)
      s = score(rng);
  return inst;
}

} // namespace lpq
