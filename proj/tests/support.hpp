#pragma once

// Independent reference implementations and fixture generators for the tests.
// Nothing here calls the library code it is meant to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "jitgp/graph.hpp"
#include "jitgp/ingest.hpp"

namespace oracle {

/// Dense symmetric weight matrix; 0 = no edge.
using Dense = std::vector<std::vector<double>>;

inline Dense dense_of(const jitgp::WeightedGraph& g) {
  const std::size_t n = g.node_count();
  Dense w(n, std::vector<double>(n, 0.0));
  for (const auto& e : g.edges()) w[e.u][e.v] = w[e.v][e.u] = e.weight;
  return w;
}

inline jitgp::WeightedGraph graph_of(const Dense& w) {
  std::vector<std::string> names;
  std::vector<jitgp::WeightedEdge> edges;
  for (std::size_t i = 0; i < w.size(); ++i) names.push_back("n" + std::to_string(i));
  for (std::size_t i = 0; i < w.size(); ++i)
    for (std::size_t j = i + 1; j < w.size(); ++j)
      if (w[i][j] > 0) edges.push_back({static_cast<jitgp::NodeId>(i), static_cast<jitgp::NodeId>(j), w[i][j]});
  return jitgp::WeightedGraph(names, edges);
}

/// Random graph with `n` nodes, edge probability `p` and integer weights 1..5.
inline Dense random_dense(std::mt19937_64& gen, std::size_t n, double p) {
  std::bernoulli_distribution edge(p);
  std::uniform_int_distribution<int> weight(1, 5);
  Dense w(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (edge(gen)) w[i][j] = w[j][i] = weight(gen);
  return w;
}

inline std::vector<double> row_sums(const Dense& w) {
  std::vector<double> d(w.size(), 0.0);
  for (std::size_t i = 0; i < w.size(); ++i)
    for (double x : w[i]) d[i] += x;
  return d;
}

/// Hop distances by Floyd-Warshall; -1 = unreachable.
inline std::vector<std::vector<long>> hop_distances(const Dense& w) {
  const std::size_t n = w.size();
  const long inf = std::numeric_limits<long>::max() / 4;
  std::vector<std::vector<long>> d(n, std::vector<long>(n, inf));
  for (std::size_t i = 0; i < n; ++i) {
    d[i][i] = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (w[i][j] > 0) d[i][j] = 1;
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  for (auto& row : d)
    for (auto& x : row)
      if (x >= inf) x = -1;
  return d;
}

/// Betweenness by enumerating every simple path between each unordered pair
/// and keeping the shortest ones.
inline std::vector<double> betweenness(const Dense& w) {
  const std::size_t n = w.size();
  std::vector<double> b(n, 0.0);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t t = s + 1; t < n; ++t) {
      std::vector<std::vector<std::size_t>> paths;
      std::vector<std::size_t> path{s};
      std::vector<bool> on(n, false);
      on[s] = true;
      std::function<void(std::size_t)> dfs = [&](std::size_t u) {
        if (u == t) {
          paths.push_back(path);
          return;
        }
        for (std::size_t v = 0; v < n; ++v)
          if (w[u][v] > 0 && !on[v]) {
            on[v] = true;
            path.push_back(v);
            dfs(v);
            path.pop_back();
            on[v] = false;
          }
      };
      dfs(s);
      if (paths.empty()) continue;
      std::size_t shortest = paths.front().size();
      for (const auto& p : paths) shortest = std::min(shortest, p.size());
      std::vector<long> through(n, 0);
      long total = 0;
      for (const auto& p : paths) {
        if (p.size() != shortest) continue;
        ++total;
        for (std::size_t k = 1; k + 1 < p.size(); ++k) ++through[p[k]];
      }
      for (std::size_t i = 0; i < n; ++i)
        if (through[i]) b[i] += static_cast<double>(through[i]) / static_cast<double>(total);
    }
  return b;
}

inline std::vector<double> closeness(const Dense& w) {
  const auto d = hop_distances(w);
  const std::size_t n = w.size();
  std::vector<double> c(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    long sum = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && d[i][j] > 0) sum += d[i][j];
    c[i] = sum > 0 ? static_cast<double>(n - 1) / static_cast<double>(sum) : 0.0;
  }
  return c;
}

inline std::vector<double> harmonic(const Dense& w) {
  const auto d = hop_distances(w);
  const std::size_t n = w.size();
  std::vector<double> h(n, 0.0);
  if (n < 2) return h;
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && d[i][j] > 0) sum += 1.0 / static_cast<double>(d[i][j]);
    h[i] = sum / static_cast<double>(n - 1);
  }
  return h;
}

/// Dense transition-matrix power iteration with the same stopping rule.
inline std::vector<double> pagerank(const Dense& w, double p = 0.85, double tol = 1e-8, int max_it = 100) {
  const std::size_t n = w.size();
  const auto d = row_sums(w);
  std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m[i][j] = d[j] > 0 ? w[i][j] / d[j] : 1.0 / static_cast<double>(n);
  std::vector<double> r(n, 1.0 / static_cast<double>(n)), next(n);
  for (int it = 0; it < max_it; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += m[i][j] * r[j];
      next[i] = (1.0 - p) / static_cast<double>(n) + p * s;
    }
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) change += std::abs(next[i] - r[i]);
    r = next;
    if (change < tol) break;
  }
  return r;
}

/// Weighted modularity from the edge list: sum over communities of
/// L_c / m - (D_c / 2m)^2.
inline double modularity(const Dense& w, const std::vector<std::int64_t>& c) {
  double m = 0.0;
  std::map<std::int64_t, double> inside, degree;
  for (std::size_t i = 0; i < w.size(); ++i)
    for (std::size_t j = 0; j < w.size(); ++j) {
      degree[c[i]] += w[i][j];
      if (j > i) {
        m += w[i][j];
        if (c[i] == c[j]) inside[c[i]] += w[i][j];
      }
    }
  if (m == 0.0) return 0.0;
  double q = 0.0;
  for (const auto& [k, dk] : degree) q += inside[k] / m - (dk / (2 * m)) * (dk / (2 * m));
  return q;
}

/// Every set partition of n nodes as restricted growth strings.
inline void for_each_partition(std::size_t n, const std::function<void(const std::vector<std::int64_t>&)>& fn) {
  std::vector<std::int64_t> a(n, 0);
  std::function<void(std::size_t, std::int64_t)> rec = [&](std::size_t i, std::int64_t top) {
    if (i == n) {
      fn(a);
      return;
    }
    for (std::int64_t k = 0; k <= top + 1; ++k) {
      a[i] = k;
      rec(i + 1, std::max(top, k));
    }
  };
  if (n == 0) return;
  a[0] = 0;
  rec(1, 0);
}

/// Same-block relation, for comparing partitions up to relabeling.
inline bool same_partition(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j)
      if ((a[i] == a[j]) != (b[i] == b[j])) return false;
  return true;
}

/// Two k-cliques joined by one edge between node k-1 and node k.
inline Dense barbell(std::size_t k) {
  Dense w(2 * k, std::vector<double>(2 * k, 0.0));
  for (std::size_t side = 0; side < 2; ++side)
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i + 1; j < k; ++j) w[side * k + i][side * k + j] = w[side * k + j][side * k + i] = 1.0;
  w[k - 1][k] = w[k][k - 1] = 1.0;
  return w;
}

// ---------------------------------------------------------------------------
// Bipartite projection

/// incidence[d][f] = distinct commits by developer d touching file f.
using Incidence = std::vector<std::vector<long>>;

inline bool co_edit(const Incidence& inc, std::size_t u, std::size_t v) {
  for (std::size_t r = 0; r < inc[u].size(); ++r)
    if (inc[u][r] > 0 && inc[v][r] > 0) return true;
  return false;
}

/// The printed projection weight: sum over all files r of (w_ur + w_vr).
inline long projection_weight_as_printed(const Incidence& inc, std::size_t u, std::size_t v) {
  long s = 0;
  for (std::size_t r = 0; r < inc[u].size(); ++r) s += inc[u][r] + inc[v][r];
  return s;
}

inline long projection_weight_common(const Incidence& inc, std::size_t u, std::size_t v) {
  long s = 0;
  for (std::size_t r = 0; r < inc[u].size(); ++r)
    if (inc[u][r] > 0 && inc[v][r] > 0) s += inc[u][r] + inc[v][r];
  return s;
}

// ---------------------------------------------------------------------------
// Metrics

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

// ---------------------------------------------------------------------------
// Synthetic repository with a planted author-degree signal

struct PlantedRepo {
  std::vector<jitgp::ChangeRecord> records;
  std::vector<std::string> high_risk;  // authors with elevated defect probability
};

/// Developers have Zipf-like activity and a few home files each, plus a
/// shared pool, so projection degree varies widely. After the graph is fixed,
/// the `risky` developers with the highest as-printed projection degree get
/// defect probability `p_high`, everyone else `p_low`.
inline PlantedRepo planted_repo(std::uint64_t seed, std::size_t changes = 500, std::size_t developers = 20,
                                std::size_t risky = 4, double p_high = 0.9, double p_low = 0.02,
                                double zipf = 0.4) {
  std::mt19937_64 gen(seed);
  std::vector<double> activity(developers);
  for (std::size_t d = 0; d < developers; ++d) activity[d] = 1.0 / std::pow(static_cast<double>(d + 1), zipf);
  std::discrete_distribution<std::size_t> pick_dev(activity.begin(), activity.end());
  const std::size_t shared = 12, home = 3;
  const std::size_t files = shared + developers * home;
  std::bernoulli_distribution use_shared(0.35);
  std::uniform_int_distribution<std::size_t> pick_shared(0, shared - 1), pick_home(0, home - 1);

  PlantedRepo repo;
  Incidence inc(developers, std::vector<long>(files, 0));
  std::vector<std::size_t> author_of;
  for (std::size_t c = 0; c < changes; ++c) {
    const std::size_t d = pick_dev(gen);
    const std::size_t f = use_shared(gen) ? pick_shared(gen) : shared + d * home + pick_home(gen);
    ++inc[d][f];
    author_of.push_back(d);
    repo.records.push_back({"c" + std::to_string(1000 + c), "dev" + std::to_string(100 + d) + "@example.org",
                            "src/f" + std::to_string(f) + ".java", static_cast<jitgp::Timestamp>(1'000'000 + 3600 * c),
                            std::nullopt});
  }

  std::vector<std::pair<double, std::size_t>> deg;
  for (std::size_t u = 0; u < developers; ++u) {
    double s = 0;
    for (std::size_t v = 0; v < developers; ++v)
      if (v != u && co_edit(inc, u, v)) s += static_cast<double>(projection_weight_as_printed(inc, u, v));
    deg.push_back({-s, u});
  }
  std::sort(deg.begin(), deg.end());
  std::vector<bool> high(developers, false);
  for (std::size_t i = 0; i < risky && i < deg.size(); ++i) {
    high[deg[i].second] = true;
    repo.high_risk.push_back("dev" + std::to_string(100 + deg[i].second) + "@example.org");
  }
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (std::size_t c = 0; c < changes; ++c)
    repo.records[c].label = u01(gen) < (high[author_of[c]] ? p_high : p_low) ? 1 : 0;
  return repo;
}

// ---------------------------------------------------------------------------
// Files

inline std::filesystem::path fresh_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("jitgp-test-" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

}  // namespace oracle
