#include <algorithm>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "lpq/pipeline.hpp"
#include "lpq/synth.hpp"
#include "support.hpp"

using namespace lpq;
using lpq::test::config;

namespace {

std::vector<PaperScore> scores_from(const Vector &values) {
  std::vector<PaperScore> out;
  for (std::size_t k = 0; k < values.size(); ++k) {
    std::string id = std::to_string(k);
    out.push_back({"p" + std::string(4 - id.size(), '0') + id, values[k]});
  }
  return out;
}

Dataset small_synth(std::uint64_t seed, double noise = 0.5) {
  SynthConfig cfg;
  cfg.n = 8;
  cfg.m = 12;
  cfg.d = 2;
  cfg.noise = noise;
  cfg.seed = seed;
  return generate_synthetic(cfg);
}

// Function whose value is the sum of the criteria at every observed vector.
AggregateFunction sum_function(const Dataset &ds) {
  auto g = build_dominance_graph(ds);
  std::vector<double> v;
  for (const auto &x : g.nodes()) {
    double s = 0.0;
    for (double c : x)
      s += c;
    v.push_back(s);
  }
  return AggregateFunction(g, v);
}

} // namespace

TEST(AggregatePapers, LeftMedianPerPaper) {
  auto ds = Dataset::create({{"r1", "odd", {4}, 0},
                             {"r2", "odd", {6}, 0},
                             {"r3", "odd", {5}, 0},
                             {"r1", "even", {4}, 0},
                             {"r2", "even", {6}, 0},
                             {"r1", "single", {7}, 0}},
                            1);
  auto scores = aggregate_papers(sum_function(ds), ds);
  ASSERT_EQ(scores.size(), 3u);
  EXPECT_EQ(scores[0], (PaperScore{"even", 4.0}));
  EXPECT_EQ(scores[1], (PaperScore{"odd", 5.0}));
  EXPECT_EQ(scores[2], (PaperScore{"single", 7.0}));
}

TEST(AggregatePapers, OneOneReproducesRawLeftMedians) {
  std::mt19937_64 rng(41);
  for (int t = 0; t < 10; ++t) {
    auto inst = test::random_monotone_instance(rng);
    auto ds = inst.to_dataset();
    auto res = solve(ds, config(1.0, 1.0));
    ASSERT_TRUE(res.report.converged);
    auto scores = aggregate_papers(res.function, ds);
    for (std::size_t a = 0; a < inst.m; ++a) {
      auto it = std::find_if(scores.begin(), scores.end(), [&](const PaperScore &s) {
        return s.paper_id == AxiomInstance::paper_id(a);
      });
      ASSERT_NE(it, scores.end());
      EXPECT_NEAR(it->aggregate, test::naive_left_median(inst.column(a)), 1e-4);
    }
  }
}

TEST(SelectTop, PaperScaleCount) {
  Vector v(2380);
  for (std::size_t k = 0; k < v.size(); ++k)
    v[k] = static_cast<double>(k % 97);
  auto sel = select_top(scores_from(v), 0.2727);
  EXPECT_EQ(sel.k, 649u);
  EXPECT_EQ(sel.accepted.size(), 649u);
}

TEST(SelectTop, DistinctScores) {
  auto sel = select_top(scores_from({3, 9, 1, 7, 5, 8, 2, 6, 4, 0}), 0.5);
  EXPECT_EQ(sel.k, 5u);
  EXPECT_EQ(sel.accepted,
            (std::vector<std::string>{"p0001", "p0005", "p0003", "p0007", "p0004"}));
}

TEST(SelectTop, TiesGoToSmallerId) {
  auto sel = select_top(scores_from({1, 1, 1, 1}), 0.5);
  EXPECT_EQ(sel.accepted, (std::vector<std::string>{"p0000", "p0001"}));
}

TEST(SelectTop, RejectsBadInput) {
  EXPECT_THROW(select_top(scores_from({1, 2}), 0.0), InvalidArgument);
  EXPECT_THROW(select_top(scores_from({1, 2}), 1.5), InvalidArgument);
  EXPECT_THROW(select_top({}, 0.5), InvalidArgument);
}

TEST(SelectTop, IdempotentAndOrderInvariant) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> score(0, 5);
  for (int t = 0; t < 100; ++t) {
    Vector v(1 + rng() % 30);
    for (auto &x : v)
      x = score(rng);
    auto scores = scores_from(v);
    const double fraction = 0.1 + 0.9 * static_cast<double>(rng() % 100) / 100.0;
    auto sel = select_top(scores, fraction);
    auto shuffled = scores;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EXPECT_EQ(select_top(shuffled, fraction).accepted, sel.accepted);
    // Selecting everything among the accepted papers keeps them all.
    std::vector<PaperScore> kept;
    for (const auto &s : scores)
      if (sel.accepted_set().count(s.paper_id))
        kept.push_back(s);
    if (!kept.empty())
      EXPECT_EQ(select_top(kept, 1.0).accepted_set(), sel.accepted_set());
    EXPECT_EQ(select_top(scores, fraction).accepted, sel.accepted);
  }
}

TEST(Overlap, Examples) {
  std::set<std::string> a{"1", "2", "3", "4"}, b{"3", "4", "5", "6"}, c{"7", "8", "9", "0"};
  EXPECT_EQ(overlap(a, a), 1.0);
  EXPECT_EQ(overlap(a, c), 0.0);
  EXPECT_EQ(overlap(a, b), 0.5);
  EXPECT_EQ(overlap(a, b), overlap(b, a));
  EXPECT_THROW(overlap({}, {}), InvalidArgument);
  EXPECT_THROW(overlap(a, {"1"}), InvalidArgument);
}

TEST(Subsample, KeepsAtMostKReviewsPerPaper) {
  auto ds = small_synth(3);
  std::mt19937_64 rng(1);
  auto sub = subsample_reviews(ds, 2, rng);
  for (const auto &[paper, idx] : sub.paper_records())
    EXPECT_EQ(idx.size(), std::min<std::size_t>(2, ds.paper_records().at(paper).size()));
  for (const auto &r : sub.records())
    EXPECT_NE(std::find(ds.records().begin(), ds.records().end(), r), ds.records().end());
}

TEST(Subsample, DeterministicAndSaturates) {
  auto ds = small_synth(5);
  SubsampleOptions opt;
  opt.k_max = 3;
  opt.trials = 3;
  opt.seed = 9;
  opt.fraction = 0.25;
  auto a = subsample_experiment(ds, config(1.0, 1.0), opt);
  auto b = subsample_experiment(ds, config(1.0, 1.0), opt);
  ASSERT_EQ(a.size(), 3u);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].k, k + 1);
    EXPECT_EQ(a[k].mean_overlap, b[k].mean_overlap);
    EXPECT_EQ(a[k].ci_half_width, b[k].ci_half_width);
    EXPECT_EQ(a[k].nonconverged, 0u);
    EXPECT_GE(a[k].mean_overlap, 0.0);
    EXPECT_LE(a[k].mean_overlap, 1.0);
  }
  // Every paper has 3 reviews, so k = 3 keeps the full data.
  EXPECT_EQ(a[2].mean_overlap, 1.0);
  EXPECT_EQ(a[2].ci_half_width, 0.0);
}

TEST(Subsample, SingleTrialHasZeroWidth) {
  auto ds = small_synth(6);
  SubsampleOptions opt;
  opt.k_max = 1;
  opt.trials = 1;
  auto rows = subsample_experiment(ds, config(1.0, 1.0), opt);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].ci_half_width, 0.0);
}

TEST(Subsample, RejectsBadOptions) {
  auto ds = small_synth(6);
  SubsampleOptions opt;
  opt.k_max = 0;
  EXPECT_THROW(subsample_experiment(ds, config(1.0, 1.0), opt), InvalidArgument);
  opt.k_max = 1;
  opt.trials = 0;
  EXPECT_THROW(subsample_experiment(ds, config(1.0, 1.0), opt), InvalidArgument);
}

TEST(PqOverlap, SymmetricWithUnitDiagonal) {
  auto ds = small_synth(8);
  auto mat = pq_overlap_matrix(ds, {1.0, 2.0}, {1.0, 2.0}, 0.25);
  ASSERT_EQ(mat.configs.size(), 4u);
  EXPECT_EQ(mat.configs[1].label(), "(1,2)");
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_TRUE(mat.converged[i]);
    EXPECT_EQ(mat.overlap[i][i], 1.0);
    for (std::size_t j = 0; j < 4; ++j) {
      EXPECT_EQ(mat.overlap[i][j], mat.overlap[j][i]);
      EXPECT_GE(mat.overlap[i][j], 0.0);
      EXPECT_LE(mat.overlap[i][j], 1.0);
    }
  }
  std::ostringstream out;
  write_overlap_csv(out, mat);
  EXPECT_EQ(out.str().rfind("pq,\"(1,1)\",\"(1,2)\",\"(2,1)\",\"(2,2)\",converged\n", 0), 0u);
}

TEST(Slice, ConstantFunctionGivesConstantTable) {
  auto ds = small_synth(4);
  auto g = build_dominance_graph(ds);
  AggregateFunction f(g, std::vector<double>(g.size(), 2.5));
  auto t = slice_grid(f, ds, {0, 1}, make_grid(1, 10, 1));
  for (const auto &row : t.values)
    for (double v : row)
      EXPECT_EQ(v, 2.5);
}

TEST(Slice, SinglePointAtObservedVector) {
  auto ds = Dataset::create({{"r1", "p1", {3, 4}, 1}, {"r1", "p2", {5, 5}, 2}}, 2);
  auto f = sum_function(ds);
  // Marginal modes are (3, 4), so a one-point grid must use both coordinates.
  auto t = slice_grid(f, ds, {0, 1}, {5});
  ASSERT_EQ(t.values.size(), 1u);
  EXPECT_EQ(t.values[0][0], 10.0);
  EXPECT_THROW(slice_grid(f, ds, {0, 0}, {1}), InvalidArgument);
  EXPECT_THROW(slice_grid(f, ds, {0, 2}, {1}), InvalidArgument);
  EXPECT_THROW(slice_grid(f, ds, {0, 1}, {}), InvalidArgument);
}

TEST(Slice, LearnedTablesAreMonotone) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SynthConfig cfg;
    cfg.n = 6;
    cfg.m = 15;
    cfg.d = 3;
    cfg.noise = 1.0;
    cfg.seed = seed;
    auto ds = generate_synthetic(cfg);
    auto res = solve(ds, config(1.0, 1.0));
    ASSERT_TRUE(res.report.converged);
    for (auto rule : {ExtensionRule::LowerEnvelope, ExtensionRule::UpperEnvelope}) {
      auto t = slice_grid(res.function.with_rule(rule), ds, {0, 2}, make_grid(1, 10, 1));
      EXPECT_EQ(t.anchor, marginal_modes(ds));
      for (std::size_t r = 0; r < t.grid.size(); ++r)
        for (std::size_t c = 0; c < t.grid.size(); ++c) {
          if (r + 1 < t.grid.size())
            EXPECT_LE(t.values[r][c], t.values[r + 1][c] + 1e-9);
          if (c + 1 < t.grid.size())
            EXPECT_LE(t.values[r][c], t.values[r][c + 1] + 1e-9);
        }
    }
  }
}

TEST(Slice, Writers) {
  SliceTable t{0, 1, {1, 1}, {1, 2}, {{0, 1}, {1, 2}}};
  std::ostringstream csv, svg;
  write_slice_csv(csv, t);
  EXPECT_EQ(csv.str(), "c1\\c2,1,2\n1,0,1\n2,1,2\n");
  write_slice_svg(svg, t);
  const auto s = svg.str();
  EXPECT_NE(s.find("Linear colour ramp: blue = 0, red = 2"), std::string::npos);
  EXPECT_NE(s.find("rgb(0,64,255)"), std::string::npos);
  EXPECT_NE(s.find("rgb(255,64,0)"), std::string::npos);
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n') > 4, true);
  EXPECT_NE(s.find("</svg>"), std::string::npos);
}

TEST(Grid, InclusiveEnds) {
  EXPECT_EQ(make_grid(1, 10, 1).size(), 10u);
  EXPECT_EQ(make_grid(0, 1, 0.25), (Vector{0, 0.25, 0.5, 0.75, 1}));
  EXPECT_EQ(make_grid(2, 2, 1), (Vector{2}));
  EXPECT_THROW(make_grid(2, 1, 1), InvalidArgument);
  EXPECT_THROW(make_grid(0, 1, 0), InvalidArgument);
}

TEST(Histogram, BinsAndClamping) {
  auto h = histogram({0.0, 0.1, 0.25, 8.99, 9.0, 12.0, -1.0}, 0, 9, 0.25);
  ASSERT_EQ(h.counts.size(), 36u);
  EXPECT_EQ(h.counts[0], 3u);
  EXPECT_EQ(h.counts[1], 1u);
  EXPECT_EQ(h.counts[35], 3u);
  std::size_t total = 0;
  for (auto c : h.counts)
    total += c;
  EXPECT_EQ(total, 7u);
  std::ostringstream out;
  write_histogram_csv(out, h);
  EXPECT_EQ(out.str().substr(0, 33), "bin_lo,bin_hi,count\n0,0.25,3\n0.25");
  EXPECT_THROW(histogram({}, 1, 1, 1), InvalidArgument);
}

TEST(ReviewerLosses, ZeroForExactFit) {
  SynthConfig cfg;
  cfg.n = 5;
  cfg.m = 10;
  cfg.d = 2;
  cfg.shared_g = true;
  auto ds = generate_synthetic(cfg);
  auto res = solve(ds, config(2.0, 2.0));
  ASSERT_TRUE(res.report.converged);
  for (const auto &[r, loss] : reviewer_losses(res.function, ds)) {
    EXPECT_GE(loss, 0.0);
    EXPECT_LT(loss, 1e-3) << r;
  }
}

TEST(Writers, ScoresAndSubsample) {
  std::ostringstream out;
  auto scores = scores_from({2, 1});
  write_scores_csv(out, scores, select_top(scores, 0.5));
  EXPECT_EQ(out.str(), "paper_id,aggregate,selected\np0000,2,1\np0001,1,0\n");
  std::ostringstream sub;
  write_subsample_csv(sub, {{1, 0.5, 0.1, 20, 0}});
  EXPECT_EQ(sub.str(), "k,mean_overlap,ci_half_width,trials,nonconverged\n1,0.5,0.1,20,0\n");
}
