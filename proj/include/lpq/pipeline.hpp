#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lpq/domain.hpp"
#include "lpq/error.hpp"
#include "lpq/loss.hpp"
#include "lpq/order.hpp"
#include "lpq/solver.hpp"

namespace lpq {

struct PaperScore {
  std::string paper_id;
  double aggregate = 0.0;

  friend bool operator==(const PaperScore &, const PaperScore &) = default;
};

struct SelectionResult {
  /// Accepted paper ids, best first.
  std::vector<std::string> accepted;
  double fraction = 0.0;
  std::size_t k = 0;

  std::set<std::string> accepted_set() const {
    return {accepted.begin(), accepted.end()};
  }
};

/// Per-paper left median of f evaluated at each review's criteria vector,
/// in paper id order.
inline std::vector<PaperScore> aggregate_papers(const AggregateFunction &f,
                                                const Dataset &ds) {
  std::vector<PaperScore> out;
  out.reserve(ds.m());
  for (const auto &[paper, idx] : ds.paper_records()) {
    Vector vals;
    vals.reserve(idx.size());
    for (auto k : idx)
      vals.push_back(evaluate(f, ds.records()[k].criteria));
    out.push_back({paper, left_median(std::move(vals))});
  }
  return out;
}

/// Top round(fraction * m) papers by aggregate; ties go to the smaller
/// paper id.
inline SelectionResult select_top(std::vector<PaperScore> scores, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw InvalidArgument("select_top: fraction must lie in (0, 1]");
  if (scores.empty())
    throw InvalidArgument("select_top: no papers");
  std::sort(scores.begin(), scores.end(), [](const PaperScore &a, const PaperScore &b) {
    if (a.aggregate != b.aggregate)
      return a.aggregate > b.aggregate;
    return a.paper_id < b.paper_id;
  });
  SelectionResult r;
  r.fraction = fraction;
  r.k = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(scores.size())));
  for (std::size_t j = 0; j < r.k; ++j)
    r.accepted.push_back(scores[j].paper_id);
  return r;
}

/// |a intersect b| / |a| for equal-size, non-empty sets.
inline double overlap(const std::set<std::string> &a, const std::set<std::string> &b) {
  if (a.empty() || a.size() != b.size())
    throw InvalidArgument("overlap: sets must be non-empty and of equal size");
  std::size_t common = 0;
  for (const auto &x : a)
    common += b.count(x);
  return static_cast<double>(common) / static_cast<double>(a.size());
}

/// Solve, aggregate and select in one step.
struct SelectionRun {
  SolveResult solved;
  std::vector<PaperScore> scores;
  SelectionResult selection;
};

inline SelectionRun run_selection(const Dataset &ds, const LpqConfig &cfg,
                                  double fraction) {
  SelectionRun run{solve(ds, cfg), {}, {}};
  run.scores = aggregate_papers(run.solved.function, ds);
  run.selection = select_top(run.scores, fraction);
  return run;
}

struct SubsampleRow {
  std::size_t k = 0;
  double mean_overlap = 0.0;
  /// Half-width of the normal-approximation 95% interval.
  double ci_half_width = 0.0;
  std::size_t trials = 0;
  std::size_t nonconverged = 0;
};

struct SubsampleOptions {
  std::size_t k_max = 5;
  std::size_t trials = 20;
  std::uint64_t seed = 1;
  double fraction = 0.2727;
};

/// Keeps min(k, |R(a)|) reviews of every paper, drawn without replacement.
inline Dataset subsample_reviews(const Dataset &ds, std::size_t k, std::mt19937_64 &rng) {
  std::vector<std::size_t> keep;
  for (const auto &[paper, idx] : ds.paper_records()) {
    auto pick = idx;
    std::shuffle(pick.begin(), pick.end(), rng);
    pick.resize(std::min(k, pick.size()));
    keep.insert(keep.end(), pick.begin(), pick.end());
  }
  std::sort(keep.begin(), keep.end());
  std::vector<ReviewRecord> records;
  records.reserve(keep.size());
  for (auto k2 : keep)
    records.push_back(ds.records()[k2]);
  return Dataset::create(std::move(records), ds.d(), ds.score_domain());
}

/// Overlap between the selection on k-review subsamples and the selection
/// on the full data, for k = 1..k_max. Trial (k, t) draws from its own
/// generator seeded by (seed, k, t), so results do not depend on
/// evaluation order.
inline std::vector<SubsampleRow> subsample_experiment(const Dataset &ds,
                                                      const LpqConfig &cfg,
                                                      const SubsampleOptions &opt) {
  cfg.validate();
  if (opt.k_max < 1)
    throw InvalidArgument("subsample_experiment: k_max must be at least 1");
  if (opt.trials < 1)
    throw InvalidArgument("subsample_experiment: trials must be at least 1");
  if (ds.empty())
    throw InvalidArgument("subsample_experiment: empty dataset");
  const auto full = run_selection(ds, cfg, opt.fraction);
  const auto reference = full.selection.accepted_set();

  std::vector<SubsampleRow> rows;
  for (std::size_t k = 1; k <= opt.k_max; ++k) {
    SubsampleRow row{k, 0.0, 0.0, opt.trials, full.solved.report.converged ? 0u : 1u};
    std::vector<double> overlaps;
    for (std::size_t t = 0; t < opt.trials; ++t) {
      std::seed_seq seq{static_cast<std::uint32_t>(opt.seed),
                        static_cast<std::uint32_t>(opt.seed >> 32),
                        static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(t)};
      std::mt19937_64 rng(seq);
      const auto sub = subsample_reviews(ds, k, rng);
      const auto run = run_selection(sub, cfg, opt.fraction);
      if (!run.solved.report.converged)
        ++row.nonconverged;
      overlaps.push_back(reference.empty()
                             ? 1.0
                             : overlap(reference, run.selection.accepted_set()));
    }
    double sum = 0.0;
    for (double o : overlaps)
      sum += o;
    row.mean_overlap = sum / static_cast<double>(overlaps.size());
    if (overlaps.size() > 1) {
      double ss = 0.0;
      for (double o : overlaps)
        ss += (o - row.mean_overlap) * (o - row.mean_overlap);
      const double sd = std::sqrt(ss / static_cast<double>(overlaps.size() - 1));
      row.ci_half_width = 1.96 * sd / std::sqrt(static_cast<double>(overlaps.size()));
    }
    rows.push_back(row);
  }
  return rows;
}

struct PqOverlapMatrix {
  std::vector<LpqConfig> configs;
  std::vector<std::vector<double>> overlap;
  std::vector<bool> converged;
};

/// Pairwise selection overlap across every (p, q) in ps x qs, p outer.
inline PqOverlapMatrix pq_overlap_matrix(const Dataset &ds,
                                         const std::vector<Exponent> &ps,
                                         const std::vector<Exponent> &qs,
                                         double fraction,
                                         const LpqConfig &base = {}) {
  if (ps.empty() || qs.empty())
    throw InvalidArgument("pq_overlap_matrix: empty exponent list");
  PqOverlapMatrix out;
  std::vector<std::set<std::string>> selected;
  for (const auto &p : ps)
    for (const auto &q : qs) {
      LpqConfig cfg = base;
      cfg.p = p;
      cfg.q = q;
      const auto run = run_selection(ds, cfg, fraction);
      out.configs.push_back(cfg);
      out.converged.push_back(run.solved.report.converged);
      selected.push_back(run.selection.accepted_set());
    }
  const std::size_t c = out.configs.size();
  out.overlap.assign(c, std::vector<double>(c, 1.0));
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = i + 1; j < c; ++j) {
      const double o = selected[i].empty() ? 1.0 : overlap(selected[i], selected[j]);
      out.overlap[i][j] = out.overlap[j][i] = o;
    }
  return out;
}

struct SliceTable {
  std::size_t row_criterion = 0;
  std::size_t col_criterion = 0;
  Vector anchor;
  Vector grid;
  /// values[r][c] = f(anchor with (row, col) criteria set to (grid[r], grid[c])).
  std::vector<Vector> values;
};

/// Two-criterion slice of f with the remaining criteria held at the
/// dataset's marginal modes.
inline SliceTable slice_grid(const AggregateFunction &f, const Dataset &ds,
                             std::pair<std::size_t, std::size_t> vary,
                             const Vector &grid) {
  if (vary.first == vary.second || vary.first >= ds.d() || vary.second >= ds.d())
    throw InvalidArgument("slice_grid: criterion indices must be distinct and < d");
  if (grid.empty())
    throw InvalidArgument("slice_grid: empty grid");
  SliceTable t{vary.first, vary.second, marginal_modes(ds), grid, {}};
  t.values.assign(grid.size(), Vector(grid.size()));
  Vector x = t.anchor;
  for (std::size_t r = 0; r < grid.size(); ++r)
    for (std::size_t c = 0; c < grid.size(); ++c) {
      x[vary.first] = grid[r];
      x[vary.second] = grid[c];
      t.values[r][c] = evaluate(f, x);
    }
  return t;
}

/// Inclusive arithmetic grid lo, lo + step, ..., up to hi.
inline Vector make_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo) || !std::isfinite(lo) || !std::isfinite(hi))
    throw InvalidArgument("grid needs lo <= hi and step > 0");
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  Vector g(count);
  for (std::size_t k = 0; k < count; ++k)
    g[k] = lo + static_cast<double>(k) * step;
  return g;
}

struct Histogram {
  double lo = 0.0;
  double width = 0.0;
  std::vector<std::size_t> counts;
};

/// Fixed-width bins over [lo, hi]; values outside are clamped into the end
/// bins.
inline Histogram histogram(const Vector &values, double lo, double hi, double width) {
  if (!(width > 0.0) || !(hi > lo))
    throw InvalidArgument("histogram: need hi > lo and width > 0");
  Histogram h{lo, width,
              std::vector<std::size_t>(
                  static_cast<std::size_t>(std::ceil((hi - lo) / width - 1e-9)), 0)};
  for (double v : values) {
    auto b = static_cast<long>(std::floor((v - lo) / width));
    b = std::clamp<long>(b, 0, static_cast<long>(h.counts.size()) - 1);
    ++h.counts[static_cast<std::size_t>(b)];
  }
  return h;
}

/// Normalized L1 loss of every reviewer, in reviewer id order.
inline std::vector<std::pair<std::string, double>>
reviewer_losses(const AggregateFunction &f, const Dataset &ds) {
  const auto graph = build_dominance_graph(ds);
  std::vector<double> values(graph.size());
  for (std::size_t u = 0; u < graph.size(); ++u)
    values[u] = evaluate(f, graph.nodes()[u]);
  std::vector<std::pair<std::string, double>> out;
  for (const auto &[reviewer, idx] : ds.reviewer_records())
    out.emplace_back(reviewer, per_reviewer_normalized_loss(values, ds, graph, reviewer));
  return out;
}

// Writers.

inline void write_scores_csv(std::ostream &out, const std::vector<PaperScore> &scores,
                             const SelectionResult &sel) {
  const auto accepted = sel.accepted_set();
  out << "paper_id,aggregate,selected\n";
  for (const auto &s : scores)
    out << s.paper_id << ',' << format_number(s.aggregate) << ','
        << (accepted.count(s.paper_id) ? 1 : 0) << '\n';
}

inline void write_subsample_csv(std::ostream &out, const std::vector<SubsampleRow> &rows) {
  out << "k,mean_overlap,ci_half_width,trials,nonconverged\n";
  for (const auto &r : rows)
    out << r.k << ',' << format_number(r.mean_overlap) << ','
        << format_number(r.ci_half_width) << ',' << r.trials << ',' << r.nonconverged
        << '\n';
}

inline void write_overlap_csv(std::ostream &out, const PqOverlapMatrix &mat) {
  out << "pq";
  for (const auto &c : mat.configs)
    out << ",\"" << c.label() << '"';
  out << ",converged\n";
  for (std::size_t i = 0; i < mat.configs.size(); ++i) {
    out << '"' << mat.configs[i].label() << '"';
    for (double o : mat.overlap[i])
      out << ',' << format_number(o);
    out << ',' << (mat.converged[i] ? 1 : 0) << '\n';
  }
}

inline void write_slice_csv(std::ostream &out, const SliceTable &t) {
  out << "c" << t.row_criterion + 1 << "\\c" << t.col_criterion + 1;
  for (double g : t.grid)
    out << ',' << format_number(g);
  out << '\n';
  for (std::size_t r = 0; r < t.grid.size(); ++r) {
    out << format_number(t.grid[r]);
    for (double v : t.values[r])
      out << ',' << format_number(v);
    out << '\n';
  }
}

inline void write_histogram_csv(std::ostream &out, const Histogram &h) {
  out << "bin_lo,bin_hi,count\n";
  for (std::size_t b = 0; b < h.counts.size(); ++b)
    out << format_number(h.lo + static_cast<double>(b) * h.width) << ','
        << format_number(h.lo + static_cast<double>(b + 1) * h.width) << ','
        << h.counts[b] << '\n';
}

/// Heatmap of a slice. Cell colour ramps linearly from blue at the table
/// minimum to red at the maximum; rows run bottom to top.
inline void write_slice_svg(std::ostream &out, const SliceTable &t) {
  const std::size_t g = t.grid.size();
  const int cell = 24, margin = 48;
  double lo = t.values[0][0], hi = lo;
  for (const auto &row : t.values)
    for (double v : row) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  const int size = margin + static_cast<int>(g) * cell;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<!-- Linear colour ramp: blue = " << format_number(lo)
      << ", red = " << format_number(hi) << " -->\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size + 8
      << "\" height=\"" << size + 8 << "\">\n";
  for (std::size_t r = 0; r < g; ++r)
    for (std::size_t c = 0; c < g; ++c) {
      const double s = hi > lo ? (t.values[r][c] - lo) / (hi - lo) : 0.5;
      const int red = static_cast<int>(std::lround(255 * s));
      const int blue = 255 - red;
      const int x = margin + static_cast<int>(c) * cell;
      const int y = static_cast<int>(g - 1 - r) * cell;
      out << "  <rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell
          << "\" height=\"" << cell << "\" fill=\"rgb(" << red << ",64," << blue
          << ")\"><title>" << format_number(t.values[r][c]) << "</title></rect>\n";
    }
  for (std::size_t k = 0; k < g; ++k) {
    const int off = static_cast<int>(k) * cell + cell / 2;
    out << "  <text x=\"" << margin + off << "\" y=\"" << g * cell + 16
        << "\" font-size=\"10\" text-anchor=\"middle\">" << format_number(t.grid[k])
        << "</text>\n"
        << "  <text x=\"" << margin - 4 << "\" y=\""
        << static_cast<int>(g - 1 - k) * cell + cell / 2 + 4
        << "\" font-size=\"10\" text-anchor=\"end\">" << format_number(t.grid[k])
        << "</text>\n";
  }
  out << "  <text x=\"" << margin + static_cast<int>(g) * cell / 2 << "\" y=\""
      << g * cell + 32 << "\" font-size=\"12\" text-anchor=\"middle\">c"
      << t.col_criterion + 1 << "</text>\n"
      << "  <text x=\"12\" y=\"" << static_cast<int>(g) * cell / 2
      << "\" font-size=\"12\">c" << t.row_criterion + 1 << "</text>\n"
      << "</svg>\n";
}

} // namespace lpq
