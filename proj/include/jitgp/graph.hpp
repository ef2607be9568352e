#pragma once

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "jitgp/csv.hpp"
#include "jitgp/error.hpp"
#include "jitgp/ingest.hpp"

namespace jitgp {

using NodeId = std::uint32_t;

struct Neighbor {
  NodeId target;
  double weight;
};

struct WeightedEdge {
  NodeId u;
  NodeId v;
  double weight;
};

/// Anything the graph algorithms can walk: dense node ids with weighted,
/// target-sorted neighbor lists.
template <class G>
concept WeightedAdjacency = requires(const G& g, NodeId u) {
  { g.node_count() } -> std::convertible_to<std::size_t>;
  { g.neighbors(u) } -> std::convertible_to<std::span<const Neighbor>>;
};

/// Undirected weighted simple graph with sorted adjacency. Immutable once built.
class WeightedGraph {
 public:
  WeightedGraph() = default;

  /// Node i is named names[i]. Self-loops, non-positive weights and repeated
  /// pairs are rejected.
  WeightedGraph(std::vector<std::string> names, const std::vector<WeightedEdge>& edges)
      : names_(std::move(names)), adjacency_(names_.size()) {
    for (const auto& e : edges) {
      if (e.u >= names_.size() || e.v >= names_.size()) fail(ErrorKind::value, "edge endpoint out of range");
      if (e.u == e.v) fail(ErrorKind::value, "self-loop on node " + names_[e.u]);
      if (!(e.weight > 0.0)) fail(ErrorKind::value, "edge weight must be positive");
      adjacency_[e.u].push_back({e.v, e.weight});
      adjacency_[e.v].push_back({e.u, e.weight});
    }
    for (auto& list : adjacency_) {
      std::sort(list.begin(), list.end(), [](const Neighbor& a, const Neighbor& b) { return a.target < b.target; });
      for (std::size_t i = 1; i < list.size(); ++i)
        if (list[i].target == list[i - 1].target) fail(ErrorKind::value, "repeated edge in graph");
    }
    edge_count_ = edges.size();
  }

  std::size_t node_count() const noexcept { return names_.size(); }
  std::size_t edge_count() const noexcept { return edge_count_; }
  std::span<const Neighbor> neighbors(NodeId u) const { return adjacency_[u]; }
  const std::string& name(NodeId u) const { return names_[u]; }
  const std::vector<std::string>& names() const noexcept { return names_; }

  std::optional<NodeId> find(std::string_view name) const {
    auto it = std::lower_bound(names_.begin(), names_.end(), name);
    if (it != names_.end() && *it == name) return static_cast<NodeId>(it - names_.begin());
    // names are not required to be sorted
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == name) return static_cast<NodeId>(i);
    return std::nullopt;
  }

  std::optional<double> weight(NodeId u, NodeId v) const {
    const auto& list = adjacency_[u];
    auto it = std::lower_bound(list.begin(), list.end(), v,
                               [](const Neighbor& n, NodeId t) { return n.target < t; });
    if (it != list.end() && it->target == v) return it->weight;
    return std::nullopt;
  }

  bool adjacent(NodeId u, NodeId v) const { return weight(u, v).has_value(); }

  /// Edges with u < v, ordered by (u, v).
  std::vector<WeightedEdge> edges() const {
    std::vector<WeightedEdge> out;
    out.reserve(edge_count_);
    for (NodeId u = 0; u < adjacency_.size(); ++u)
      for (const auto& n : adjacency_[u])
        if (u < n.target) out.push_back({u, n.target, n.weight});
    return out;
  }

 private:
  std::vector<std::string> names_;
  std::vector<std::vector<Neighbor>> adjacency_;
  std::size_t edge_count_ = 0;
};

static_assert(WeightedAdjacency<WeightedGraph>);

/// Developer-developer one-mode projection. Nodes are all developers of the
/// source contribution graph, in sorted order.
using ProjectionGraph = WeightedGraph;

enum class ProjectionWeight {
  /// w_uv = sum over every file r of (w_ur + w_vr).
  endpoint_sum,
  /// Same sum restricted to files both developers touched.
  common_neighbors,
};

inline std::string_view to_string(ProjectionWeight w) {
  return w == ProjectionWeight::endpoint_sum ? "endpoint-sum" : "common-neighbors";
}

inline ProjectionWeight parse_projection_weight(std::string_view text) {
  if (text == "endpoint-sum" || text == "as-paper") return ProjectionWeight::endpoint_sum;
  if (text == "common-neighbors") return ProjectionWeight::common_neighbors;
  fail(ErrorKind::config, "projection_weight must be 'endpoint-sum' or 'common-neighbors', got '" + std::string(text) + "'");
}

/// Weighted bipartite developer/file graph. Developers and files live in
/// separate index spaces, so the two node sets cannot collide.
class ContributionGraph {
 public:
  struct Incidence {
    NodeId file;
    std::int64_t weight;  // distinct commits by the developer touching the file
  };

  struct EdgeLabel {
    NodeId developer;
    NodeId file;
    std::string commit_id;
    int label;
  };

  const std::vector<std::string>& developers() const noexcept { return developers_; }
  const std::vector<std::string>& files() const noexcept { return files_; }
  std::span<const Incidence> incidences(NodeId developer) const { return incidence_[developer]; }
  const std::vector<EdgeLabel>& edge_labels() const noexcept { return labels_; }

  std::optional<NodeId> developer_index(std::string_view id) const { return lookup(developers_, id); }
  std::optional<NodeId> file_index(std::string_view path) const { return lookup(files_, path); }

  std::int64_t weight(NodeId developer, NodeId file) const {
    const auto& list = incidence_[developer];
    auto it = std::lower_bound(list.begin(), list.end(), file,
                               [](const Incidence& x, NodeId f) { return x.file < f; });
    return (it != list.end() && it->file == file) ? it->weight : 0;
  }

  std::size_t edge_count() const {
    std::size_t n = 0;
    for (const auto& list : incidence_) n += list.size();
    return n;
  }

  std::int64_t total_weight() const {
    std::int64_t sum = 0;
    for (const auto& list : incidence_)
      for (const auto& x : list) sum += x.weight;
    return sum;
  }

  static ContributionGraph from_changes(const ChangeSet& changes) {
    if (changes.empty()) fail(ErrorKind::domain, "cannot build a contribution graph from an empty change set");
    ContributionGraph g;
    for (const auto& r : changes.records()) {
      g.developers_.push_back(r.author_id);
      g.files_.push_back(r.file_path);
    }
    sort_unique(g.developers_);
    sort_unique(g.files_);

    std::vector<std::map<NodeId, std::int64_t>> counts(g.developers_.size());
    for (const auto& r : changes.records()) {
      const NodeId dev = *g.developer_index(r.author_id);
      const NodeId file = *g.file_index(r.file_path);
      // (commit, file) is unique in a ChangeSet, so each record is one distinct commit.
      ++counts[dev][file];
      if (r.label) g.labels_.push_back({dev, file, r.commit_id, *r.label});
    }
    g.incidence_.resize(g.developers_.size());
    for (std::size_t d = 0; d < counts.size(); ++d)
      for (const auto& [file, w] : counts[d]) g.incidence_[d].push_back({file, w});
    return g;
  }

 private:
  static void sort_unique(std::vector<std::string>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }

  static std::optional<NodeId> lookup(const std::vector<std::string>& sorted, std::string_view key) {
    auto it = std::lower_bound(sorted.begin(), sorted.end(), key);
    if (it != sorted.end() && *it == key) return static_cast<NodeId>(it - sorted.begin());
    return std::nullopt;
  }

  std::vector<std::string> developers_;
  std::vector<std::string> files_;
  std::vector<std::vector<Incidence>> incidence_;
  std::vector<EdgeLabel> labels_;
};

inline ContributionGraph build_contribution_graph(const ChangeSet& changes) {
  return ContributionGraph::from_changes(changes);
}

/// Connects developers that share at least one file.
inline ProjectionGraph project_developer_graph(const ContributionGraph& g,
                                               ProjectionWeight mode = ProjectionWeight::endpoint_sum) {
  const std::size_t n = g.developers().size();
  std::vector<std::vector<std::pair<NodeId, std::int64_t>>> by_file(g.files().size());
  std::vector<double> total(n, 0.0);
  for (NodeId d = 0; d < n; ++d) {
    for (const auto& x : g.incidences(d)) {
      by_file[x.file].push_back({d, x.weight});
      total[d] += static_cast<double>(x.weight);
    }
  }

  std::unordered_map<std::uint64_t, double> pairs;
  for (const auto& devs : by_file) {
    for (std::size_t a = 0; a < devs.size(); ++a) {
      for (std::size_t b = a + 1; b < devs.size(); ++b) {
        const auto [u, wu] = devs[a];
        const auto [v, wv] = devs[b];
        const std::uint64_t key = (static_cast<std::uint64_t>(std::min(u, v)) << 32) | std::max(u, v);
        double& w = pairs[key];
        if (mode == ProjectionWeight::common_neighbors) w += static_cast<double>(wu + wv);
      }
    }
  }

  std::vector<WeightedEdge> edges;
  edges.reserve(pairs.size());
  for (const auto& [key, w] : pairs) {
    const auto u = static_cast<NodeId>(key >> 32);
    const auto v = static_cast<NodeId>(key & 0xFFFFFFFFu);
    edges.push_back({u, v, mode == ProjectionWeight::endpoint_sum ? total[u] + total[v] : w});
  }
  std::sort(edges.begin(), edges.end(),
            [](const WeightedEdge& a, const WeightedEdge& b) { return std::pair(a.u, a.v) < std::pair(b.u, b.v); });
  return ProjectionGraph(g.developers(), edges);
}

// ---------------------------------------------------------------------------
// Edge-list persistence

inline std::string write_bipartite_edge_list(const ContributionGraph& g) {
  std::string out = "developer,file,weight\n";
  for (NodeId d = 0; d < g.developers().size(); ++d)
    for (const auto& x : g.incidences(d))
      csv::append_row(out, {g.developers()[d], g.files()[x.file], std::to_string(x.weight)});
  return out;
}

/// `dev_u,dev_v,weight` with dev_u < dev_v lexicographically, rows sorted.
inline std::string write_projection_edge_list(const ProjectionGraph& g) {
  std::vector<std::tuple<std::string, std::string, double>> rows;
  for (const auto& e : g.edges()) {
    const auto& a = g.name(e.u);
    const auto& b = g.name(e.v);
    if (a < b) rows.emplace_back(a, b, e.weight);
    else rows.emplace_back(b, a, e.weight);
  }
  std::sort(rows.begin(), rows.end());
  std::string out = "dev_u,dev_v,weight\n";
  for (const auto& [a, b, w] : rows) csv::append_row(out, {a, b, csv::format_double(w)});
  return out;
}

/// Reads a projection edge list. `extra_nodes` adds isolated developers that
/// an edge list cannot express. Nodes end up sorted by name.
inline ProjectionGraph load_projection_edge_list(std::string_view text, std::vector<std::string> extra_nodes = {}) {
  const auto rows = csv::parse(text);
  if (rows.empty()) fail(ErrorKind::schema, "projection edge list has no header");
  const csv::Header h(rows.front());
  const std::size_t cu = h.index("dev_u"), cv = h.index("dev_v"), cw = h.index("weight");
  std::vector<std::string> names = std::move(extra_nodes);
  struct Raw {
    std::string u, v;
    double w;
  };
  std::vector<Raw> raw;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r].fields;
    double w = 0;
    if (f.size() != h.size() || !csv::parse_double(f[cw], w))
      fail(ErrorKind::value, "projection edge row on line " + std::to_string(rows[r].line) + " is malformed");
    raw.push_back({f[cu], f[cv], w});
    names.push_back(f[cu]);
    names.push_back(f[cv]);
  }
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  auto index = [&](const std::string& s) {
    return static_cast<NodeId>(std::lower_bound(names.begin(), names.end(), s) - names.begin());
  };
  std::vector<WeightedEdge> edges;
  for (const auto& e : raw) edges.push_back({index(e.u), index(e.v), e.w});
  return ProjectionGraph(std::move(names), edges);
}

}  // namespace jitgp
