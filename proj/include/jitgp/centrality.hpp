#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "jitgp/graph.hpp"

namespace jitgp {

// Path-based measures (betweenness, closeness, harmonic) use unweighted hop
// distances. Degree and PageRank use edge weights.

inline constexpr double kPageRankDamping = 0.85;

/// Weighted degree: sum of incident edge weights.
template <WeightedAdjacency G>
std::vector<double> degree(const G& g) {
  std::vector<double> out(g.node_count(), 0.0);
  for (NodeId u = 0; u < g.node_count(); ++u)
    for (const auto& n : g.neighbors(u)) out[u] += n.weight;
  return out;
}

namespace detail {

/// Hop distances from `source`; -1 marks unreachable nodes.
template <WeightedAdjacency G>
void bfs_distances(const G& g, NodeId source, std::vector<std::int64_t>& dist, std::vector<NodeId>& queue) {
  dist.assign(g.node_count(), -1);
  queue.clear();
  dist[source] = 0;
  queue.push_back(source);
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const NodeId u = queue[head];
    for (const auto& n : g.neighbors(u)) {
      if (dist[n.target] < 0) {
        dist[n.target] = dist[u] + 1;
        queue.push_back(n.target);
      }
    }
  }
}

}  // namespace detail

/// Unnormalized betweenness over unordered pairs, Brandes accumulation.
template <WeightedAdjacency G>
std::vector<double> betweenness(const G& g) {
  const std::size_t n = g.node_count();
  std::vector<double> score(n, 0.0);
  std::vector<std::int64_t> dist(n);
  std::vector<double> sigma(n), delta(n);
  std::vector<NodeId> order;
  order.reserve(n);

  for (NodeId s = 0; s < n; ++s) {
    dist.assign(n, -1);
    sigma.assign(n, 0.0);
    delta.assign(n, 0.0);
    order.clear();
    dist[s] = 0;
    sigma[s] = 1.0;
    order.push_back(s);
    for (std::size_t head = 0; head < order.size(); ++head) {
      const NodeId u = order[head];
      for (const auto& nb : g.neighbors(u)) {
        const NodeId v = nb.target;
        if (dist[v] < 0) {
          dist[v] = dist[u] + 1;
          order.push_back(v);
        }
        if (dist[v] == dist[u] + 1) sigma[v] += sigma[u];
      }
    }
    // Predecessors of w are exactly its neighbors one hop closer to s.
    for (std::size_t i = order.size(); i-- > 1;) {
      const NodeId w = order[i];
      for (const auto& nb : g.neighbors(w)) {
        const NodeId v = nb.target;
        if (dist[v] == dist[w] - 1) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      }
      score[w] += delta[w];
    }
  }
  // Every unordered pair was counted from both endpoints.
  for (auto& x : score) x /= 2.0;
  return score;
}

/// (|V| - 1) / sum of hop distances to the nodes reachable from i; 0 when
/// nothing is reachable.
template <WeightedAdjacency G>
std::vector<double> closeness(const G& g) {
  const std::size_t n = g.node_count();
  std::vector<double> out(n, 0.0);
  std::vector<std::int64_t> dist;
  std::vector<NodeId> queue;
  for (NodeId s = 0; s < n; ++s) {
    detail::bfs_distances(g, s, dist, queue);
    std::int64_t total = 0;
    for (NodeId v : queue) total += dist[v];
    if (total > 0) out[s] = static_cast<double>(n - 1) / static_cast<double>(total);
  }
  return out;
}

/// (|V| - 1)^-1 * sum over reachable j != i of 1 / d(i, j).
template <WeightedAdjacency G>
std::vector<double> harmonic(const G& g) {
  const std::size_t n = g.node_count();
  std::vector<double> out(n, 0.0);
  if (n < 2) return out;
  std::vector<std::int64_t> dist;
  std::vector<NodeId> queue;
  for (NodeId s = 0; s < n; ++s) {
    detail::bfs_distances(g, s, dist, queue);
    double sum = 0.0;
    for (std::size_t i = 1; i < queue.size(); ++i) sum += 1.0 / static_cast<double>(dist[queue[i]]);
    out[s] = sum / static_cast<double>(n - 1);
  }
  return out;
}

struct PageRankOptions {
  double damping = kPageRankDamping;
  double tolerance = 1e-8;  // L1 change between iterates
  int max_iterations = 100;
};

/// Weighted PageRank; each undirected edge acts as two directed edges.
/// Nodes without edges spread their mass uniformly.
template <WeightedAdjacency G>
std::vector<double> pagerank(const G& g, const PageRankOptions& options = {}) {
  const std::size_t n = g.node_count();
  if (n == 0) return {};
  const double p = options.damping;
  const auto strength = degree(g);
  std::vector<double> rank(n, 1.0 / static_cast<double>(n)), next(n);
  for (int it = 0; it < options.max_iterations; ++it) {
    double dangling = 0.0;
    for (NodeId u = 0; u < n; ++u)
      if (strength[u] == 0.0) dangling += rank[u];
    const double base = (1.0 - p) / static_cast<double>(n) + p * dangling / static_cast<double>(n);
    for (NodeId i = 0; i < n; ++i) {
      double flow = 0.0;
      for (const auto& nb : g.neighbors(i)) flow += nb.weight * rank[nb.target] / strength[nb.target];
      next[i] = base + p * flow;
    }
    double change = 0.0;
    for (NodeId i = 0; i < n; ++i) change += std::abs(next[i] - rank[i]);
    rank.swap(next);
    if (change < options.tolerance) break;
  }
  return rank;
}

struct CentralityVector {
  double degree = 0.0;
  double betweenness = 0.0;
  double closeness = 0.0;
  double harmonic = 0.0;
  double pagerank = 0.0;
};

template <WeightedAdjacency G>
std::vector<CentralityVector> all_centralities(const G& g) {
  const auto d = degree(g), b = betweenness(g), c = closeness(g), h = harmonic(g), pr = pagerank(g);
  std::vector<CentralityVector> out(g.node_count());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {d[i], b[i], c[i], h[i], pr[i]};
  return out;
}

}  // namespace jitgp
