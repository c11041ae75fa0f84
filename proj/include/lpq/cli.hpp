#pragma once

#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lpq/axioms.hpp"
#include "lpq/domain.hpp"
#include "lpq/error.hpp"
#include "lpq/loss.hpp"
#include "lpq/pipeline.hpp"
#include "lpq/solver.hpp"
#include "lpq/synth.hpp"

namespace lpq::cli {

enum ExitCode : int { kOk = 0, kInputError = 1, kConvergence = 2, kAxiomMismatch = 3 };

enum class Command { Solve, Axioms, Subsample, PqGrid, Slice, LossHist, Synth };

struct RunConfig {
  Command command = Command::Solve;
  std::string input;
  std::size_t d = 0;
  std::string p = "1";
  std::string q = "1";
  double fraction = 0.2727;
  std::uint64_t seed = 1;
  std::string out = "out";
  std::size_t trials = 20;
  std::size_t kmax = 5;
  std::string vary = "1,2";
  std::string grid = "1:10:1";
  double noise = 0.0;
  std::size_t n = 30;
  std::size_t m = 40;
  std::size_t reviews_per_paper = 3;
  bool shared_g = false;
  std::optional<double> eps_obj;
  std::optional<double> eps_tie;
  std::optional<std::size_t> max_iters;

  LpqConfig lpq() const {
    LpqConfig cfg;
    cfg.p = Exponent::parse(p);
    cfg.q = Exponent::parse(q);
    if (eps_obj)
      cfg.eps_obj = *eps_obj;
    if (eps_tie)
      cfg.eps_tie = *eps_tie;
    if (max_iters)
      cfg.max_iters = *max_iters;
    cfg.validate();
    return cfg;
  }
};

namespace detail {

inline std::pair<std::size_t, std::size_t> parse_vary(const std::string &text,
                                                      std::size_t d) {
  const auto comma = text.find(',');
  std::size_t i = 0, j = 0;
  try {
    if (comma == std::string::npos)
      throw std::invalid_argument("");
    std::size_t used = 0;
    i = std::stoul(text.substr(0, comma), &used);
    if (used != comma)
      throw std::invalid_argument("");
    const auto rest = text.substr(comma + 1);
    j = std::stoul(rest, &used);
    if (used != rest.size())
      throw std::invalid_argument("");
  } catch (const std::exception &) {
    throw InvalidArgument("--vary expects two criterion numbers 'i,j', got '" + text + "'");
  }
  if (i < 1 || j < 1 || i > d || j > d || i == j)
    throw InvalidArgument("--vary criteria must be distinct and in 1.." + std::to_string(d));
  return {i - 1, j - 1};
}

inline Vector parse_grid(const std::string &text) {
  const auto a = text.find(':');
  const auto b = a == std::string::npos ? a : text.find(':', a + 1);
  if (b == std::string::npos)
    throw InvalidArgument("--grid expects 'lo:hi:step', got '" + text + "'");
  try {
    std::size_t used = 0;
    auto num = [&](const std::string &s) {
      const double v = std::stod(s, &used);
      if (used != s.size())
        throw std::invalid_argument("");
      return v;
    };
    return make_grid(num(text.substr(0, a)), num(text.substr(a + 1, b - a - 1)),
                     num(text.substr(b + 1)));
  } catch (const InvalidArgument &) {
    throw;
  } catch (const std::exception &) {
    throw InvalidArgument("--grid expects 'lo:hi:step', got '" + text + "'");
  }
}

inline std::ofstream open_output(const RunConfig &rc, const std::string &name) {
  const std::filesystem::path dir(rc.out);
  std::filesystem::create_directories(dir);
  std::ofstream f(dir / name);
  if (!f)
    throw std::runtime_error("cannot write " + (dir / name).string());
  return f;
}

inline Dataset load(const RunConfig &rc) {
  if (rc.input.empty())
    throw InvalidArgument("--input is required");
  if (rc.d == 0)
    throw InvalidArgument("--d must be a positive integer");
  return ingest_csv(rc.input, rc.d);
}

} // namespace detail

inline int cmd_solve(const RunConfig &rc, std::ostream &log) {
  const auto cfg = rc.lpq();
  const auto ds = detail::load(rc);
  const auto run = run_selection(ds, cfg, rc.fraction);
  detail::open_output(rc, "function.json") << to_json(run.solved.function).dump(2) << '\n';
  detail::open_output(rc, "report.json") << to_json(run.solved.report).dump(2) << '\n';
  auto scores = detail::open_output(rc, "scores.csv");
  write_scores_csv(scores, run.scores, run.selection);
  log << "L" << cfg.label() << " loss " << format_number(run.solved.report.objective)
      << ", " << run.solved.function.size() << " nodes, "
      << (run.solved.report.converged ? "converged" : "NOT converged") << '\n';
  return run.solved.report.converged ? kOk : kConvergence;
}

/// Runs every check on the fermat, strategyproofness and consensus
/// instances plus `trials` random instances. All checks hold for p = q = 1
/// and at least one fails otherwise; anything else is a mismatch.
inline int cmd_axioms(const RunConfig &rc, std::ostream &log) {
  const auto cfg = rc.lpq();
  const auto method = lpq_method(cfg);
  std::vector<std::pair<std::string, AxiomInstance>> suite{
      {"fermat", make_fermat_instance(2.0)},
      {"strategyproofness", make_sp_instance()},
      {"consensus", make_consensus_instance()}};
  std::mt19937_64 rng(rc.seed);
  for (std::size_t t = 0; t < rc.trials; ++t)
    suite.emplace_back("random-" + std::to_string(t + 1), make_random_instance(rng));

  nlohmann::json results = nlohmann::json::array();
  bool all_hold = true;
  try {
    for (const auto &[label, inst] : suite) {
      for (const auto &v : {check_consensus(inst, method), check_efficiency(inst, method),
                            check_strategyproofness(inst, method)}) {
        auto j = to_json(v, cfg);
        j["instance"] = label;
        results.push_back(std::move(j));
        if (!v.holds) {
          all_hold = false;
          log << label << ": " << to_string(v.axiom) << " fails: " << v.witness->description
              << '\n';
        }
      }
    }
  } catch (const ConvergenceError &e) {
    log << e.what() << '\n';
    return kConvergence;
  }
  detail::open_output(rc, "axioms.json") << results.dump(2) << '\n';
  const bool expect_all = cfg.p.is_one() && cfg.q.is_one();
  if (expect_all != all_hold) {
    log << "mismatch: L" << cfg.label()
        << (expect_all ? " should satisfy every axiom but a check failed"
                       : " should violate an axiom but every check held")
        << '\n';
    return kAxiomMismatch;
  }
  log << "L" << cfg.label() << ": "
      << (all_hold ? "all axioms hold" : "axiom violations found, as expected") << '\n';
  return kOk;
}

inline int cmd_subsample(const RunConfig &rc, std::ostream &log) {
  const auto cfg = rc.lpq();
  const auto ds = detail::load(rc);
  const auto rows = subsample_experiment(ds, cfg, {rc.kmax, rc.trials, rc.seed, rc.fraction});
  auto out = detail::open_output(rc, "subsample.csv");
  write_subsample_csv(out, rows);
  std::size_t bad = 0;
  for (const auto &r : rows) {
    bad += r.nonconverged;
    log << "k=" << r.k << " overlap " << format_number(r.mean_overlap) << " +/- "
        << format_number(r.ci_half_width) << '\n';
  }
  return bad ? kConvergence : kOk;
}

inline int cmd_pq_grid(const RunConfig &rc, std::ostream &log) {
  LpqConfig base = rc.lpq();
  const auto ds = detail::load(rc);
  const std::vector<Exponent> exps{1.0, 2.0, 3.0};
  const auto mat = pq_overlap_matrix(ds, exps, exps, rc.fraction, base);
  auto out = detail::open_output(rc, "overlap.csv");
  write_overlap_csv(out, mat);
  bool ok = true;
  for (std::size_t i = 0; i < mat.configs.size(); ++i)
    if (!mat.converged[i]) {
      ok = false;
      log << "L" << mat.configs[i].label() << " did not converge\n";
    }
  return ok ? kOk : kConvergence;
}

inline int cmd_slice(const RunConfig &rc, std::ostream &log) {
  const auto cfg = rc.lpq();
  const auto ds = detail::load(rc);
  const auto vary = detail::parse_vary(rc.vary, ds.d());
  const auto grid = detail::parse_grid(rc.grid);
  const auto solved = solve(ds, cfg);
  const auto table = slice_grid(solved.function, ds, vary, grid);
  auto csv = detail::open_output(rc, "slice.csv");
  write_slice_csv(csv, table);
  auto svg = detail::open_output(rc, "slice.svg");
  write_slice_svg(svg, table);
  log << "slice over c" << vary.first + 1 << ", c" << vary.second + 1 << " ("
      << grid.size() << "x" << grid.size() << ")\n";
  return solved.report.converged ? kOk : kConvergence;
}

inline int cmd_loss_hist(const RunConfig &rc, std::ostream &log) {
  const auto cfg = rc.lpq();
  const auto ds = detail::load(rc);
  const auto solved = solve(ds, cfg);
  const auto losses = reviewer_losses(solved.function, ds);
  Vector values;
  auto per = detail::open_output(rc, "reviewer_losses.csv");
  per << "reviewer_id,normalized_loss\n";
  for (const auto &[id, l] : losses) {
    per << id << ',' << format_number(l) << '\n';
    values.push_back(l);
  }
  auto hist = detail::open_output(rc, "loss_hist.csv");
  write_histogram_csv(hist, histogram(values, 0.0, 9.0, 0.25));
  double mean = 0.0, var = 0.0;
  for (double v : values)
    mean += v;
  mean /= static_cast<double>(values.size());
  for (double v : values)
    var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  log << "reviewer loss mean " << format_number(mean) << ", std "
      << format_number(std::sqrt(var)) << '\n';
  return solved.report.converged ? kOk : kConvergence;
}

inline int cmd_synth(const RunConfig &rc, std::ostream &log) {
  SynthConfig sc;
  sc.n = rc.n;
  sc.m = rc.m;
  sc.d = rc.d == 0 ? 3 : rc.d;
  sc.noise = rc.noise;
  sc.seed = rc.seed;
  sc.reviews_per_paper = rc.reviews_per_paper;
  sc.shared_g = rc.shared_g;
  const auto ds = generate_synthetic(sc);
  auto out = detail::open_output(rc, "synth.csv");
  write_csv(out, ds);
  log << "wrote " << ds.size() << " reviews (" << ds.n() << " reviewers, " << ds.m()
      << " papers)\n";
  return kOk;
}

inline int dispatch(const RunConfig &rc, std::ostream &log) {
  switch (rc.command) {
  case Command::Solve:
    return cmd_solve(rc, log);
  case Command::Axioms:
    return cmd_axioms(rc, log);
  case Command::Subsample:
    return cmd_subsample(rc, log);
  case Command::PqGrid:
    return cmd_pq_grid(rc, log);
  case Command::Slice:
    return cmd_slice(rc, log);
  case Command::LossHist:
    return cmd_loss_hist(rc, log);
  case Command::Synth:
    return cmd_synth(rc, log);
  }
  return kInputError;
}

/// Parses argv, runs the chosen command and maps failures to exit codes.
inline int run(int argc, const char *const *argv, std::ostream &out = std::cout,
               std::ostream &err = std::cerr) {
  CLI::App app{"L(p,q) aggregation of peer-review scores"};
  app.require_subcommand(1);
  RunConfig rc;

  auto data_flags = [&rc](CLI::App *sub) {
    sub->add_option("--input", rc.input, "review CSV: reviewer_id,paper_id,c1..cd,overall")
        ->required();
    sub->add_option("--d", rc.d, "number of criteria")->required()->check(CLI::PositiveNumber);
  };
  auto pq_flags = [&rc](CLI::App *sub) {
    sub->add_option("--p", rc.p, "paper norm exponent in [1, inf]")->capture_default_str();
    sub->add_option("--q", rc.q, "reviewer norm exponent in [1, inf]")->capture_default_str();
    sub->add_option("--eps-obj", rc.eps_obj, "relative loss tolerance");
    sub->add_option("--eps-tie", rc.eps_tie, "tie-break loss slack");
    sub->add_option("--max-iters", rc.max_iters, "Newton step cap per phase");
  };
  auto out_flag = [&rc](CLI::App *sub) {
    sub->add_option("--out", rc.out, "output directory")->capture_default_str();
  };
  auto fraction_flag = [&rc](CLI::App *sub) {
    sub->add_option("--fraction", rc.fraction, "accepted fraction of papers")
        ->capture_default_str();
  };

  std::vector<std::pair<CLI::App *, Command>> subs;
  auto add = [&](const char *name, const char *help, Command c) {
    auto *sub = app.add_subcommand(name, help);
    subs.emplace_back(sub, c);
    out_flag(sub);
    return sub;
  };

  auto *solve_cmd = add("solve", "learn the aggregate function and score papers", Command::Solve);
  data_flags(solve_cmd);
  pq_flags(solve_cmd);
  fraction_flag(solve_cmd);

  auto *axioms_cmd = add("axioms", "check consensus, efficiency and strategyproofness",
                         Command::Axioms);
  pq_flags(axioms_cmd);
  axioms_cmd->add_option("--trials", rc.trials, "random instances")->capture_default_str();
  axioms_cmd->add_option("--seed", rc.seed, "random seed")->capture_default_str();

  auto *sub_cmd = add("subsample", "selection overlap when papers keep k reviews",
                      Command::Subsample);
  data_flags(sub_cmd);
  pq_flags(sub_cmd);
  fraction_flag(sub_cmd);
  sub_cmd->add_option("--kmax", rc.kmax, "largest k")->capture_default_str();
  sub_cmd->add_option("--trials", rc.trials, "subsamples per k")->capture_default_str();
  sub_cmd->add_option("--seed", rc.seed, "random seed")->capture_default_str();

  auto *grid_cmd = add("pq-grid", "selection overlap across (p,q) in {1,2,3}^2",
                       Command::PqGrid);
  data_flags(grid_cmd);
  fraction_flag(grid_cmd);

  auto *slice_cmd = add("slice", "two-criterion slice of the learned function", Command::Slice);
  data_flags(slice_cmd);
  pq_flags(slice_cmd);
  slice_cmd->add_option("--vary", rc.vary, "criteria to vary, 1-based 'i,j'")
      ->capture_default_str();
  slice_cmd->add_option("--grid", rc.grid, "values 'lo:hi:step'")->capture_default_str();

  auto *hist_cmd = add("loss-hist", "histogram of per-reviewer normalized loss",
                       Command::LossHist);
  data_flags(hist_cmd);
  pq_flags(hist_cmd);

  auto *synth_cmd = add("synth", "generate a synthetic review dataset", Command::Synth);
  synth_cmd->add_option("--n", rc.n, "reviewers")->capture_default_str();
  synth_cmd->add_option("--m", rc.m, "papers")->capture_default_str();
  synth_cmd->add_option("--d", rc.d, "criteria (default 3)");
  synth_cmd->add_option("--noise", rc.noise, "noise standard deviation")
      ->capture_default_str();
  synth_cmd->add_option("--seed", rc.seed, "random seed")->capture_default_str();
  synth_cmd->add_option("--reviews-per-paper", rc.reviews_per_paper, "reviews per paper")
      ->capture_default_str();
  synth_cmd->add_flag("--shared-g", rc.shared_g, "one scoring function for every reviewer");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == static_cast<int>(CLI::ExitCodes::Success) ? kOk : kInputError;
  }
  for (auto [sub, c] : subs)
    if (sub->parsed())
      rc.command = c;

  try {
    return dispatch(rc, out);
  } catch (const ConvergenceError &e) {
    err << "error: " << e.what() << '\n';
    return kConvergence;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
}

} // namespace lpq::cli
