#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jitgp/centrality.hpp"
#include "jitgp/csv.hpp"
#include "jitgp/error.hpp"
#include "jitgp/graph.hpp"
#include "jitgp/ingest.hpp"
#include "jitgp/louvain.hpp"
#include "jitgp/node2vec.hpp"
#include "jitgp/rng.hpp"

namespace jitgp {

/// Setting 1: centralities. Setting 2: community id plus node embedding.
enum class FeatureSetting { centralities = 1, communities_embeddings = 2 };

inline FeatureSetting parse_setting(std::string_view text) {
  if (text == "1") return FeatureSetting::centralities;
  if (text == "2") return FeatureSetting::communities_embeddings;
  fail(ErrorKind::config, "setting must be 1 or 2, got '" + std::string(text) + "'");
}

inline int to_int(FeatureSetting s) { return static_cast<int>(s); }

/// Per-developer graph features for one setting, keyed by projection node.
struct GraphFeatures {
  FeatureSetting setting = FeatureSetting::centralities;
  std::vector<std::string> nodes;
  std::vector<CentralityVector> centralities;  // setting 1
  std::optional<CommunityPartition> partition;  // setting 2
  std::optional<EmbeddingMatrix> embeddings;    // setting 2
};

inline GraphFeatures compute_graph_features(const ProjectionGraph& g, FeatureSetting setting, std::uint64_t seed,
                                            const Node2VecParams& n2v = {}) {
  GraphFeatures out;
  out.setting = setting;
  out.nodes = g.names();
  if (setting == FeatureSetting::centralities) {
    out.centralities = all_centralities(g);
  } else {
    out.partition = louvain(g, derive_seed(seed, "louvain"));
    out.embeddings = node2vec_embed(g, derive_seed(seed, "node2vec"), n2v);
  }
  return out;
}

/// One row per labeled change, features of the change's author.
class FeatureMatrix {
 public:
  struct RowId {
    std::string commit_id;
    std::string file_path;
    std::string author_id;
  };

  FeatureMatrix() = default;
  FeatureMatrix(FeatureSetting setting, std::vector<std::string> columns)
      : setting_(setting), columns_(std::move(columns)) {}

  FeatureSetting setting() const noexcept { return setting_; }
  const std::vector<std::string>& columns() const noexcept { return columns_; }
  std::size_t rows() const noexcept { return labels_.size(); }
  std::size_t cols() const noexcept { return columns_.size(); }
  std::span<const double> row(std::size_t i) const { return {values_.data() + i * cols(), cols()}; }
  const std::vector<double>& values() const noexcept { return values_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  const std::vector<RowId>& ids() const noexcept { return ids_; }
  std::size_t excluded_unlabeled() const noexcept { return excluded_; }

  void add_row(RowId id, std::span<const double> features, int label) {
    if (features.size() != cols()) fail(ErrorKind::shape, "feature row width does not match the header");
    values_.insert(values_.end(), features.begin(), features.end());
    labels_.push_back(label);
    ids_.push_back(std::move(id));
  }

  void set_excluded(std::size_t n) { excluded_ = n; }

  friend bool operator==(const FeatureMatrix& a, const FeatureMatrix& b) {
    return a.setting_ == b.setting_ && a.columns_ == b.columns_ && a.values_ == b.values_ && a.labels_ == b.labels_;
  }

 private:
  FeatureSetting setting_ = FeatureSetting::centralities;
  std::vector<std::string> columns_;
  std::vector<double> values_;
  std::vector<int> labels_;
  std::vector<RowId> ids_;
  std::size_t excluded_ = 0;
};

inline std::vector<std::string> feature_columns(FeatureSetting setting, std::size_t dimensions = 128) {
  if (setting == FeatureSetting::centralities) return {"degree", "betweenness", "closeness", "harmonic", "pagerank"};
  std::vector<std::string> cols{"community"};
  for (std::size_t i = 0; i < dimensions; ++i) cols.push_back("emb_" + std::to_string(i));
  return cols;
}

/// Builds the change-level matrix. Authors missing from the projection get
/// zero centralities, a fresh singleton community and a zero embedding.
inline FeatureMatrix assemble_features(const ChangeSet& changes, const GraphFeatures& gf) {
  const std::size_t dims = gf.embeddings ? gf.embeddings->dimensions : 0;
  FeatureMatrix m(gf.setting, feature_columns(gf.setting, dims));
  if (gf.setting == FeatureSetting::centralities && gf.centralities.size() != gf.nodes.size())
    fail(ErrorKind::shape, "centrality vector does not cover every projection node");
  if (gf.setting == FeatureSetting::communities_embeddings && (!gf.partition || !gf.embeddings))
    fail(ErrorKind::value, "setting 2 requires a community partition and embeddings");

  std::map<std::string_view, std::size_t> index;
  for (std::size_t i = 0; i < gf.nodes.size(); ++i) index.emplace(gf.nodes[i], i);

  std::int64_t next_community = gf.partition ? static_cast<std::int64_t>(gf.partition->community_count()) : 0;
  std::map<std::string, std::int64_t> fresh_community;

  std::vector<double> row(m.cols(), 0.0);
  std::size_t excluded = 0;
  for (const auto& r : changes.records()) {
    if (!r.label) {
      ++excluded;
      continue;
    }
    std::fill(row.begin(), row.end(), 0.0);
    const auto it = index.find(r.author_id);
    if (gf.setting == FeatureSetting::centralities) {
      if (it != index.end()) {
        const auto& c = gf.centralities[it->second];
        row = {c.degree, c.betweenness, c.closeness, c.harmonic, c.pagerank};
      }
    } else if (it != index.end()) {
      row[0] = static_cast<double>(gf.partition->assignment[it->second]);
      const auto e = gf.embeddings->row(it->second);
      std::copy(e.begin(), e.end(), row.begin() + 1);
    } else {
      auto [pos, inserted] = fresh_community.emplace(r.author_id, next_community);
      if (inserted) ++next_community;
      row[0] = static_cast<double>(pos->second);
    }
    m.add_row({r.commit_id, r.file_path, r.author_id}, row, *r.label);
  }
  m.set_excluded(excluded);
  return m;
}

inline constexpr std::size_t kFeatureIdColumns = 3;

/// `commit,file,author,<features...>,label`.
inline std::string write_feature_csv(const FeatureMatrix& m) {
  std::string out;
  std::vector<std::string> header{"commit", "file", "author"};
  header.insert(header.end(), m.columns().begin(), m.columns().end());
  header.push_back("label");
  csv::append_row(out, header);
  std::vector<std::string> fields;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto& id = m.ids()[i];
    fields = {id.commit_id, id.file_path, id.author_id};
    for (double v : m.row(i)) fields.push_back(csv::format_double(v));
    fields.push_back(std::to_string(m.labels()[i]));
    csv::append_row(out, fields);
  }
  return out;
}

inline FeatureMatrix load_feature_csv(std::string_view text) {
  const auto rows = csv::parse(text);
  if (rows.empty()) fail(ErrorKind::schema, "feature CSV has no header");
  const auto& head = rows.front().fields;
  if (head.size() < kFeatureIdColumns + 2 || head[0] != "commit" || head[1] != "file" || head[2] != "author" ||
      head.back() != "label")
    fail(ErrorKind::schema, "feature CSV header must be commit,file,author,<features>,label");
  std::vector<std::string> columns(head.begin() + kFeatureIdColumns, head.end() - 1);
  const FeatureSetting setting =
      columns.size() == 5 && columns[0] == "degree" ? FeatureSetting::centralities : FeatureSetting::communities_embeddings;
  FeatureMatrix m(setting, columns);
  std::vector<double> values(columns.size());
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r].fields;
    const std::string where = "feature row on line " + std::to_string(rows[r].line);
    if (f.size() != head.size()) fail(ErrorKind::schema, where + " has the wrong number of fields");
    for (std::size_t c = 0; c < columns.size(); ++c)
      if (!csv::parse_double(f[kFeatureIdColumns + c], values[c]))
        fail(ErrorKind::value, where + ": non-numeric value '" + f[kFeatureIdColumns + c] + "'");
    const std::string& label = f.back();
    if (label != "0" && label != "1") fail(ErrorKind::value, where + ": label outside {0,1}");
    m.add_row({f[0], f[1], f[2]}, values, label[0] - '0');
  }
  return m;
}

}  // namespace jitgp
