#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "lpq/domain.hpp"
#include "lpq/error.hpp"

namespace lpq {

/// Synthetic review data. Each reviewer i scores with a monotone function
/// g_i(x) = lo + (hi - lo) * sum_c h_ic(x_c) / sum_c h_ic(hi), where every
/// h_ic is a random nondecreasing step table over the integer score range.
/// Overall scores are g_i plus Gaussian noise, rounded and clamped to the
/// score range.
struct SynthConfig {
  std::size_t n = 30;
  std::size_t m = 40;
  std::size_t d = 3;
  /// Distinct reviewers assigned to each paper (capped at n).
  std::size_t reviews_per_paper = 3;
  /// Standard deviation of the noise added before rounding.
  double noise = 0.0;
  /// Every reviewer shares one ground-truth function.
  bool shared_g = false;
  int score_lo = 1;
  int score_hi = 10;
  std::uint64_t seed = 1;

  void validate() const {
    if (n == 0 || m == 0 || d == 0 || reviews_per_paper == 0)
      throw InvalidArgument("synth: n, m, d and reviews per paper must be positive");
    if (!(noise >= 0.0) || !std::isfinite(noise))
      throw InvalidArgument("synth: noise must be a finite non-negative number");
    if (score_lo >= score_hi)
      throw InvalidArgument("synth: empty score range");
  }
};

/// Monotone additive step function over integer criteria.
class MonotoneStepFunction {
public:
  MonotoneStepFunction(std::mt19937_64 &rng, std::size_t d, int lo, int hi)
      : lo_(lo), hi_(hi), tables_(d) {
    std::exponential_distribution<double> step(1.0);
    std::uniform_real_distribution<double> weight(0.2, 1.0);
    total_ = 0.0;
    for (auto &t : tables_) {
      const double w = weight(rng);
      t.assign(static_cast<std::size_t>(hi - lo + 1), 0.0);
      for (std::size_t k = 1; k < t.size(); ++k)
        t[k] = t[k - 1] + w * step(rng);
      total_ += t.back();
    }
  }

  double operator()(const Vector &x) const {
    double s = 0.0;
    for (std::size_t c = 0; c < tables_.size(); ++c) {
      const auto k = static_cast<long>(std::lround(x[c])) - lo_;
      s += tables_[c][static_cast<std::size_t>(
          std::clamp<long>(k, 0, static_cast<long>(tables_[c].size()) - 1))];
    }
    return lo_ + (hi_ - lo_) * (total_ > 0.0 ? s / total_ : 0.0);
  }

private:
  int lo_;
  int hi_;
  double total_ = 0.0;
  std::vector<std::vector<double>> tables_;
};

/// Deterministic given the config. Papers have base criteria drawn
/// uniformly from the score range; each review perturbs every criterion by
/// -1, 0 or +1 (clamped), so reviewers of one paper may disagree.
inline Dataset generate_synthetic(const SynthConfig &cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::vector<MonotoneStepFunction> g;
  const std::size_t functions = cfg.shared_g ? 1 : cfg.n;
  for (std::size_t i = 0; i < functions; ++i)
    g.emplace_back(rng, cfg.d, cfg.score_lo, cfg.score_hi);

  std::uniform_int_distribution<int> base(cfg.score_lo, cfg.score_hi);
  std::uniform_int_distribution<int> jitter(-1, 1);
  std::normal_distribution<double> noise(0.0, 1.0);
  const std::size_t per_paper = std::min(cfg.reviews_per_paper, cfg.n);
  std::vector<std::size_t> reviewers(cfg.n);

  std::vector<ReviewRecord> records;
  records.reserve(cfg.m * per_paper);
  for (std::size_t a = 0; a < cfg.m; ++a) {
    Vector x0(cfg.d);
    for (auto &c : x0)
      c = base(rng);
    for (std::size_t i = 0; i < cfg.n; ++i)
      reviewers[i] = i;
    std::shuffle(reviewers.begin(), reviewers.end(), rng);
    std::vector<std::size_t> chosen(reviewers.begin(),
                                    reviewers.begin() + static_cast<std::ptrdiff_t>(per_paper));
    std::sort(chosen.begin(), chosen.end());
    for (auto i : chosen) {
      Vector x(cfg.d);
      for (std::size_t c = 0; c < cfg.d; ++c)
        x[c] = std::clamp<int>(static_cast<int>(x0[c]) + jitter(rng), cfg.score_lo,
                               cfg.score_hi);
      double y = g[cfg.shared_g ? 0 : i](x);
      if (cfg.noise > 0.0)
        y += cfg.noise * noise(rng);
      y = std::clamp<double>(std::round(y), cfg.score_lo, cfg.score_hi);
      records.push_back({"r" + std::to_string(i + 1), "p" + std::to_string(a + 1),
                         std::move(x), y});
    }
  }
  return Dataset::create(std::move(records), cfg.d,
                         ScoreDomain::uniform(cfg.d, cfg.score_lo, cfg.score_hi));
}

} // namespace lpq
