#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lpq/domain.hpp"
#include "lpq/error.hpp"

namespace lpq {

/// Componentwise a <= b. Vectors must have equal length.
inline bool leq(const Vector &a, const Vector &b) {
  for (std::size_t k = 0; k < a.size(); ++k)
    if (a[k] > b[k])
      return false;
  return true;
}

/// Componentwise-dominance DAG over the distinct criteria vectors of a
/// dataset.
///
/// Nodes are sorted lexicographically, which is also a topological order:
/// u <= w componentwise with u != w implies u precedes w. Edges form the
/// transitive reduction of the strict order, so w is reachable from u iff
/// nodes()[u] <= nodes()[w] and u != w.
class DominanceGraph {
public:
  DominanceGraph() = default;

  const std::vector<Vector> &nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  std::size_t dim() const { return nodes_.empty() ? 0 : nodes_.front().size(); }

  /// Number of reviews carrying each node's vector.
  const std::vector<std::size_t> &multiplicity() const { return multiplicity_; }

  /// (u, w): nodes()[u] <= nodes()[w], transitively reduced.
  const std::vector<std::pair<std::size_t, std::size_t>> &edges() const {
    return edges_;
  }
  const std::vector<std::vector<std::size_t>> &predecessors() const {
    return preds_;
  }
  const std::vector<std::vector<std::size_t>> &successors() const {
    return succs_;
  }

  /// Node index of each dataset record, in record order.
  const std::vector<std::size_t> &node_of_record() const {
    return node_of_record_;
  }

  std::optional<std::size_t> find(const Vector &x) const {
    auto it = index_.find(x);
    if (it == index_.end())
      return std::nullopt;
    return it->second;
  }

  /// Directed path u -> ... -> w of length >= 1.
  bool reachable(std::size_t u, std::size_t w) const {
    if (u == w)
      return false;
    std::vector<char> seen(size(), 0);
    std::vector<std::size_t> stack{u};
    while (!stack.empty()) {
      auto x = stack.back();
      stack.pop_back();
      for (auto y : succs_[x]) {
        if (y == w)
          return true;
        if (!seen[y]) {
          seen[y] = 1;
          stack.push_back(y);
        }
      }
    }
    return false;
  }

  /// Graphviz export: label = vector, annotation = multiplicity.
  std::string to_dot() const {
    std::ostringstream out;
    out << "digraph dominance {\n";
    for (std::size_t u = 0; u < size(); ++u) {
      out << "  n" << u << " [label=\"(";
      for (std::size_t k = 0; k < nodes_[u].size(); ++k)
        out << (k ? "," : "") << format_number(nodes_[u][k]);
      out << ")\\nx" << multiplicity_[u] << "\"];\n";
    }
    for (auto [u, w] : edges_)
      out << "  n" << u << " -> n" << w << ";\n";
    out << "}\n";
    return out.str();
  }

  /// Builds the graph from an explicit list of (possibly repeated) vectors.
  static DominanceGraph from_vectors(const std::vector<Vector> &vectors) {
    DominanceGraph g;
    for (const auto &x : vectors)
      g.index_.emplace(x, 0);
    g.nodes_.reserve(g.index_.size());
    for (auto &[x, idx] : g.index_) {
      idx = g.nodes_.size();
      g.nodes_.push_back(x);
    }
    g.multiplicity_.assign(g.nodes_.size(), 0);
    g.node_of_record_.reserve(vectors.size());
    for (const auto &x : vectors) {
      auto u = g.index_.at(x);
      ++g.multiplicity_[u];
      g.node_of_record_.push_back(u);
    }
    g.reduce();
    return g;
  }

private:
  // Strict successor sets as bitsets, then drop every edge u->w for which
  // some strict successor z of u also reaches w.
  void reduce() {
    const std::size_t n = nodes_.size();
    const std::size_t words = (n + 63) / 64;
    std::vector<std::uint64_t> above(n * words, 0);
    auto bit = [&](std::size_t row, std::size_t col) -> std::uint64_t & {
      return above[row * words + col / 64];
    };
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t w = u + 1; w < n; ++w)
        if (leq(nodes_[u], nodes_[w]))
          bit(u, w) |= std::uint64_t{1} << (w % 64);

    std::vector<std::uint64_t> implied(words);
    preds_.assign(n, {});
    succs_.assign(n, {});
    for (std::size_t u = 0; u < n; ++u) {
      std::fill(implied.begin(), implied.end(), 0);
      for (std::size_t z = u + 1; z < n; ++z)
        if (bit(u, z) >> (z % 64) & 1)
          for (std::size_t k = 0; k < words; ++k)
            implied[k] |= above[z * words + k];
      for (std::size_t w = u + 1; w < n; ++w) {
        const auto mask = std::uint64_t{1} << (w % 64);
        if ((bit(u, w) & mask) && !(implied[w / 64] & mask)) {
          edges_.emplace_back(u, w);
          succs_[u].push_back(w);
          preds_[w].push_back(u);
        }
      }
    }
  }

  std::vector<Vector> nodes_;
  std::vector<std::size_t> multiplicity_;
  std::vector<std::pair<std::size_t, std::size_t>> edges_;
  std::vector<std::vector<std::size_t>> preds_;
  std::vector<std::vector<std::size_t>> succs_;
  std::vector<std::size_t> node_of_record_;
  std::map<Vector, std::size_t> index_;
};

inline DominanceGraph build_dominance_graph(const Dataset &ds) {
  std::vector<Vector> vectors;
  vectors.reserve(ds.size());
  for (const auto &r : ds.records())
    vectors.push_back(r.criteria);
  return DominanceGraph::from_vectors(vectors);
}

/// True iff sorted(ya) >= sorted(yb) pointwise, i.e. some bijection maps
/// every entry of ya onto a no-larger entry of yb.
inline bool sorted_dominates(Vector ya, Vector yb) {
  if (ya.size() != yb.size())
    throw InvalidArgument("sorted_dominates: vectors differ in length");
  std::sort(ya.begin(), ya.end());
  std::sort(yb.begin(), yb.end());
  for (std::size_t k = 0; k < ya.size(); ++k)
    if (ya[k] < yb[k])
      return false;
  return true;
}

} // namespace lpq
