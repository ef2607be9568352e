#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <vector>

#include "jitgp/graph.hpp"
#include "jitgp/rng.hpp"

namespace jitgp {

struct CommunityPartition {
  std::vector<std::int64_t> assignment;  // community id per node, numbered 0.. in order of first appearance
  double modularity = 0.0;
  /// Modularity after each completed level, in order.
  std::vector<double> level_modularity;

  std::size_t community_count() const {
    std::int64_t top = -1;
    for (auto c : assignment) top = std::max(top, c);
    return static_cast<std::size_t>(top + 1);
  }
};

/// Weighted Newman-Girvan modularity of `assignment` on g.
template <WeightedAdjacency G>
double modularity(const G& g, const std::vector<std::int64_t>& assignment) {
  const std::size_t n = g.node_count();
  std::map<std::int64_t, double> inside, total;
  double two_m = 0.0;
  for (NodeId u = 0; u < n; ++u) {
    for (const auto& nb : g.neighbors(u)) {
      two_m += nb.weight;
      total[assignment[u]] += nb.weight;
      if (assignment[nb.target] == assignment[u]) inside[assignment[u]] += nb.weight;
    }
  }
  if (two_m == 0.0) return 0.0;
  double q = 0.0;
  for (const auto& [c, tot] : total) {
    q += inside[c] / two_m - (tot / two_m) * (tot / two_m);
  }
  return q;
}

namespace detail {

/// Level graph for Louvain: symmetric weights, self-loops carry the weight of
/// collapsed internal edges with both directions already summed.
struct LouvainLevel {
  std::vector<std::vector<Neighbor>> adjacency;  // excludes self-loops
  std::vector<double> self_loop;
  std::vector<double> strength;  // row sums including self-loop
  double two_m = 0.0;

  std::size_t size() const { return adjacency.size(); }
};

template <WeightedAdjacency G>
LouvainLevel initial_level(const G& g) {
  LouvainLevel level;
  const std::size_t n = g.node_count();
  level.adjacency.resize(n);
  level.self_loop.assign(n, 0.0);
  level.strength.assign(n, 0.0);
  for (NodeId u = 0; u < n; ++u) {
    for (const auto& nb : g.neighbors(u)) {
      level.adjacency[u].push_back(nb);
      level.strength[u] += nb.weight;
    }
    level.two_m += level.strength[u];
  }
  return level;
}

inline double level_modularity(const LouvainLevel& level, const std::vector<std::size_t>& community) {
  if (level.two_m == 0.0) return 0.0;
  const std::size_t n = level.size();
  std::vector<double> inside(n, 0.0), total(n, 0.0);
  for (std::size_t u = 0; u < n; ++u) {
    total[community[u]] += level.strength[u];
    inside[community[u]] += level.self_loop[u];
    for (const auto& nb : level.adjacency[u])
      if (community[nb.target] == community[u]) inside[community[u]] += nb.weight;
  }
  double q = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    if (total[c] == 0.0 && inside[c] == 0.0) continue;
    q += inside[c] / level.two_m - (total[c] / level.two_m) * (total[c] / level.two_m);
  }
  return q;
}

inline constexpr int kMaxPasses = 1000;

/// Local moving phase. Returns true when any node changed community.
inline bool move_nodes(const LouvainLevel& level, std::vector<std::size_t>& community, Rng& rng) {
  const std::size_t n = level.size();
  std::vector<double> total(n, 0.0);
  for (std::size_t u = 0; u < n; ++u) total[community[u]] += level.strength[u];

  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), NodeId{0});
  rng.shuffle(order);

  std::vector<double> link(n, 0.0);
  std::vector<std::size_t> touched;
  bool any_move = false;
  for (int pass = 0; pass < kMaxPasses; ++pass) {
    bool moved = false;
    for (NodeId u : order) {
      const std::size_t own = community[u];
      const double k = level.strength[u];
      touched.clear();
      for (const auto& nb : level.adjacency[u]) {
        const std::size_t c = community[nb.target];
        if (link[c] == 0.0) touched.push_back(c);
        link[c] += nb.weight;
      }
      total[own] -= k;

      // Gain of joining c, up to a positive constant: k_{u,c} - tot_c * k / 2m.
      std::size_t best = own;
      double best_gain = link[own] - total[own] * k / level.two_m;
      std::sort(touched.begin(), touched.end());
      for (std::size_t c : touched) {
        const double gain = link[c] - total[c] * k / level.two_m;
        if (gain > best_gain) {
          best_gain = gain;
          best = c;
        }
      }
      total[best] += k;
      for (std::size_t c : touched) link[c] = 0.0;
      link[own] = 0.0;
      if (best != own) {
        community[u] = best;
        moved = true;
        any_move = true;
      }
    }
    if (!moved) break;
  }
  return any_move;
}

/// Renumbers community labels 0.. in order of first appearance.
inline std::size_t renumber(std::vector<std::size_t>& community) {
  std::vector<std::size_t> map(community.size(), SIZE_MAX);
  std::size_t next = 0;
  for (auto& c : community) {
    if (map[c] == SIZE_MAX) map[c] = next++;
    c = map[c];
  }
  return next;
}

inline LouvainLevel aggregate(const LouvainLevel& level, const std::vector<std::size_t>& community, std::size_t count) {
  LouvainLevel next;
  next.adjacency.resize(count);
  next.self_loop.assign(count, 0.0);
  next.strength.assign(count, 0.0);
  next.two_m = level.two_m;
  std::vector<std::map<NodeId, double>> links(count);
  for (std::size_t u = 0; u < level.size(); ++u) {
    const std::size_t cu = community[u];
    next.self_loop[cu] += level.self_loop[u];
    next.strength[cu] += level.strength[u];
    for (const auto& nb : level.adjacency[u]) {
      const std::size_t cv = community[nb.target];
      if (cu == cv) next.self_loop[cu] += nb.weight;
      else links[cu][static_cast<NodeId>(cv)] += nb.weight;
    }
  }
  for (std::size_t c = 0; c < count; ++c)
    for (const auto& [t, w] : links[c]) next.adjacency[c].push_back({t, w});
  return next;
}

}  // namespace detail

/// Multi-level Louvain modularity optimization. Node visiting order at each
/// level is a seeded shuffle, so the result is a pure function of (g, seed).
template <WeightedAdjacency G>
CommunityPartition louvain(const G& g, std::uint64_t seed) {
  const std::size_t n = g.node_count();
  CommunityPartition result;
  std::vector<std::size_t> membership(n);
  std::iota(membership.begin(), membership.end(), std::size_t{0});

  detail::LouvainLevel level = detail::initial_level(g);
  if (level.two_m > 0.0) {
    for (std::uint64_t depth = 0;; ++depth) {
      Rng rng(derive_seed(seed, depth));
      std::vector<std::size_t> community(level.size());
      std::iota(community.begin(), community.end(), std::size_t{0});
      const bool moved = detail::move_nodes(level, community, rng);
      if (!moved) break;
      const std::size_t count = detail::renumber(community);
      for (auto& m : membership) m = community[m];
      result.level_modularity.push_back(detail::level_modularity(level, community));
      level = detail::aggregate(level, community, count);
      if (count == 1) break;
    }
  }
  detail::renumber(membership);
  result.assignment.assign(membership.begin(), membership.end());
  result.modularity = modularity(g, result.assignment);
  return result;
}

}  // namespace jitgp
