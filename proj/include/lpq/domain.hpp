#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lpq/error.hpp"

namespace lpq {

using Vector = std::vector<double>;

/// One reviewer's criteria scores and overall recommendation for one paper.
struct ReviewRecord {
  std::string reviewer_id;
  std::string paper_id;
  Vector criteria;
  double overall = 0.0;

  friend bool operator==(const ReviewRecord &, const ReviewRecord &) = default;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x) const { return x >= lo && x <= hi; }
  friend bool operator==(const Interval &, const Interval &) = default;
};

/// Closed score ranges, one per criterion plus one for the overall score.
struct ScoreDomain {
  std::vector<Interval> criteria;
  Interval overall;

  /// Same interval for every criterion and for the overall score.
  static ScoreDomain uniform(std::size_t d, double lo, double hi) {
    return ScoreDomain{std::vector<Interval>(d, Interval{lo, hi}),
                       Interval{lo, hi}};
  }
};

/// Reviewer-independent criteria and every reviewer scores every paper.
struct ObjectiveCompleteFlag {
  bool is_complete = false;
  bool is_objective = false;
};

/// Validated, immutable collection of reviews.
///
/// Reviewer and paper ids are opaque strings. Records keep their input
/// order; the indices below refer to positions in records().
class Dataset {
public:
  Dataset() = default;

  /// Validates `records` against `d` and the optional domain. Throws
  /// ValidationError on a dimension mismatch, non-finite score, duplicate
  /// (reviewer, paper) pair or out-of-domain score.
  static Dataset create(std::vector<ReviewRecord> records, std::size_t d,
                        std::optional<ScoreDomain> domain = std::nullopt) {
    if (d == 0)
      throw ValidationError("criteria dimensionality must be at least 1");
    if (domain && domain->criteria.size() != d)
      throw ValidationError("score domain has " +
                            std::to_string(domain->criteria.size()) +
                            " criteria intervals, expected " +
                            std::to_string(d));
    Dataset ds;
    ds.d_ = d;
    ds.domain_ = std::move(domain);
    std::set<std::pair<std::string, std::string>> seen;
    for (std::size_t k = 0; k < records.size(); ++k) {
      const auto &r = records[k];
      const auto where = "record " + std::to_string(k) + " (" + r.reviewer_id +
                         ", " + r.paper_id + ")";
      if (r.criteria.size() != d)
        throw ValidationError(where + ": expected " + std::to_string(d) +
                              " criteria, got " +
                              std::to_string(r.criteria.size()));
      if (!std::isfinite(r.overall) ||
          !std::all_of(r.criteria.begin(), r.criteria.end(),
                       [](double x) { return std::isfinite(x); }))
        throw ValidationError(where + ": non-finite score");
      if (!seen.emplace(r.reviewer_id, r.paper_id).second)
        throw ValidationError(where + ": duplicate (reviewer, paper) pair");
      if (ds.domain_) {
        for (std::size_t c = 0; c < d; ++c)
          if (!ds.domain_->criteria[c].contains(r.criteria[c]))
            throw ValidationError(where + ": criterion " +
                                  std::to_string(c + 1) +
                                  " outside the score domain");
        if (!ds.domain_->overall.contains(r.overall))
          throw ValidationError(where + ": overall outside the score domain");
      }
      ds.reviewer_index_[r.reviewer_id].insert(r.paper_id);
      ds.paper_index_[r.paper_id].insert(r.reviewer_id);
      ds.reviewer_records_[r.reviewer_id].push_back(k);
      ds.paper_records_[r.paper_id].push_back(k);
    }
    ds.records_ = std::move(records);
    return ds;
  }

  const std::vector<ReviewRecord> &records() const { return records_; }
  std::size_t d() const { return d_; }
  const std::optional<ScoreDomain> &score_domain() const { return domain_; }
  bool empty() const { return records_.empty(); }
  std::size_t size() const { return records_.size(); }

  /// Number of reviewers (n) and papers (m).
  std::size_t n() const { return reviewer_index_.size(); }
  std::size_t m() const { return paper_index_.size(); }

  /// reviewer -> papers reviewed, and its inverse.
  const std::map<std::string, std::set<std::string>> &reviewer_index() const {
    return reviewer_index_;
  }
  const std::map<std::string, std::set<std::string>> &paper_index() const {
    return paper_index_;
  }

  /// reviewer -> record indices, in input order.
  const std::map<std::string, std::vector<std::size_t>> &
  reviewer_records() const {
    return reviewer_records_;
  }
  /// paper -> record indices, in input order.
  const std::map<std::string, std::vector<std::size_t>> &paper_records() const {
    return paper_records_;
  }

private:
  std::vector<ReviewRecord> records_;
  std::size_t d_ = 0;
  std::optional<ScoreDomain> domain_;
  std::map<std::string, std::set<std::string>> reviewer_index_;
  std::map<std::string, std::set<std::string>> paper_index_;
  std::map<std::string, std::vector<std::size_t>> reviewer_records_;
  std::map<std::string, std::vector<std::size_t>> paper_records_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
    s = s.substr(1, s.size() - 2);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos)
      break;
    start = pos + 1;
  }
  return out;
}

inline double parse_number(std::string_view s, std::size_t line,
                           std::string_view column) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
    throw ParseError(line, "column " + std::string(column) +
                               ": not a number: '" + std::string(s) + "'");
  return value;
}

} // namespace detail

/// Shortest decimal text that round-trips to the same double.
inline std::string format_number(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

/// Expected CSV header for dimensionality d.
inline std::string csv_header(std::size_t d) {
  std::string h = "reviewer_id,paper_id";
  for (std::size_t c = 1; c <= d; ++c)
    h += ",c" + std::to_string(c);
  return h + ",overall";
}

/// Parses a review CSV. Header must be `reviewer_id,paper_id,c1..cd,overall`.
/// Blank lines are skipped. Throws ParseError (with line number) for
/// malformed rows and ValidationError for data-model violations.
inline Dataset parse_csv(std::istream &in, std::size_t d,
                         std::optional<ScoreDomain> domain = std::nullopt) {
  if (d == 0)
    throw InvalidArgument("d must be a positive integer");
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  const std::string header = csv_header(d);
  const auto expected = detail::split_commas(header);
  std::vector<ReviewRecord> records;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0)
      line.erase(0, 3);
    if (detail::trim(line).empty())
      continue;
    auto fields = detail::split_commas(line);
    if (!have_header) {
      if (fields != expected)
        throw ParseError(lineno, "expected header '" + csv_header(d) + "'");
      have_header = true;
      continue;
    }
    if (fields.size() != d + 3)
      throw ParseError(lineno, "expected " + std::to_string(d + 3) +
                                   " fields, got " +
                                   std::to_string(fields.size()));
    ReviewRecord r;
    r.reviewer_id = std::string(fields[0]);
    r.paper_id = std::string(fields[1]);
    if (r.reviewer_id.empty() || r.paper_id.empty())
      throw ParseError(lineno, "empty reviewer or paper id");
    r.criteria.reserve(d);
    for (std::size_t c = 0; c < d; ++c)
      r.criteria.push_back(
          detail::parse_number(fields[2 + c], lineno, expected[2 + c]));
    r.overall = detail::parse_number(fields[d + 2], lineno, "overall");
    records.push_back(std::move(r));
  }
  if (!have_header)
    throw ParseError(lineno == 0 ? 1 : lineno, "missing header row");
  return Dataset::create(std::move(records), d, std::move(domain));
}

inline Dataset ingest_csv(const std::filesystem::path &path, std::size_t d,
                          std::optional<ScoreDomain> domain = std::nullopt) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open " + path.string());
  return parse_csv(in, d, std::move(domain));
}

inline void write_csv(std::ostream &out, const Dataset &ds) {
  out << csv_header(ds.d()) << '\n';
  for (const auto &r : ds.records()) {
    out << r.reviewer_id << ',' << r.paper_id;
    for (double x : r.criteria)
      out << ',' << format_number(x);
    out << ',' << format_number(r.overall) << '\n';
  }
}

inline void write_csv(const std::filesystem::path &path, const Dataset &ds) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot write " + path.string());
  write_csv(out, ds);
}

inline nlohmann::json to_json(const Dataset &ds) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto &r : ds.records())
    records.push_back({{"reviewer_id", r.reviewer_id},
                       {"paper_id", r.paper_id},
                       {"criteria", r.criteria},
                       {"overall", r.overall}});
  nlohmann::json j{{"d", ds.d()}, {"records", std::move(records)}};
  if (const auto &dom = ds.score_domain()) {
    nlohmann::json crit = nlohmann::json::array();
    for (const auto &iv : dom->criteria)
      crit.push_back({iv.lo, iv.hi});
    j["score_domain"] = {{"criteria", crit},
                         {"overall", {dom->overall.lo, dom->overall.hi}}};
  }
  return j;
}

inline ObjectiveCompleteFlag classify_setting(const Dataset &ds) {
  ObjectiveCompleteFlag flag{true, true};
  const auto m = ds.m();
  for (const auto &[reviewer, papers] : ds.reviewer_index())
    if (papers.size() != m) {
      flag.is_complete = false;
      break;
    }
  for (const auto &[paper, idx] : ds.paper_records()) {
    const auto &first = ds.records()[idx.front()].criteria;
    for (std::size_t k : idx)
      if (ds.records()[k].criteria != first) {
        flag.is_objective = false;
        break;
      }
    if (!flag.is_objective)
      break;
  }
  return flag;
}

/// Per-criterion most frequent value; ties go to the smallest value.
inline Vector marginal_modes(const Dataset &ds) {
  if (ds.empty())
    throw InvalidArgument("marginal_modes: empty dataset");
  Vector modes(ds.d());
  for (std::size_t c = 0; c < ds.d(); ++c) {
    std::map<double, std::size_t> counts;
    for (const auto &r : ds.records())
      ++counts[r.criteria[c]];
    auto best = counts.begin();
    for (auto it = counts.begin(); it != counts.end(); ++it)
      if (it->second > best->second)
        best = it;
    modes[c] = best->first;
  }
  return modes;
}

} // namespace lpq
