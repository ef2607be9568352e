#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "jitgp/error.hpp"
#include "jitgp/graph.hpp"
#include "jitgp/rng.hpp"

namespace jitgp {

struct Node2VecParams {
  std::size_t dimensions = 128;
  std::size_t walk_length = 80;
  std::size_t walks_per_node = 10;
  std::size_t window = 10;
  double return_p = 1.0;
  double in_out_q = 1.0;
  std::size_t negative = 5;
  std::size_t epochs = 1;
  double learning_rate = 0.025;
};

/// Row-major node -> vector map.
struct EmbeddingMatrix {
  std::size_t rows = 0;
  std::size_t dimensions = 0;
  std::vector<double> values;

  std::span<const double> row(std::size_t i) const { return {values.data() + i * dimensions, dimensions}; }
  std::span<double> row(std::size_t i) { return {values.data() + i * dimensions, dimensions}; }
};

/// Second-order biased walk; each (source, round) pair has its own RNG stream.
template <WeightedAdjacency G>
std::vector<NodeId> node2vec_walk(const G& g, NodeId start, std::size_t length, double return_p, double in_out_q,
                                  Rng& rng) {
  std::vector<NodeId> walk{start};
  walk.reserve(length);
  std::vector<double> cumulative;
  while (walk.size() < length) {
    const NodeId cur = walk.back();
    const auto nbrs = g.neighbors(cur);
    if (nbrs.empty()) break;
    cumulative.resize(nbrs.size());
    double acc = 0.0;
    if (walk.size() == 1) {
      for (std::size_t i = 0; i < nbrs.size(); ++i) cumulative[i] = acc += nbrs[i].weight;
    } else {
      const NodeId prev = walk[walk.size() - 2];
      const auto prev_nbrs = g.neighbors(prev);
      for (std::size_t i = 0; i < nbrs.size(); ++i) {
        const NodeId x = nbrs[i].target;
        double bias;
        if (x == prev) {
          bias = 1.0 / return_p;
        } else if (std::binary_search(prev_nbrs.begin(), prev_nbrs.end(), Neighbor{x, 0.0},
                                      [](const Neighbor& a, const Neighbor& b) { return a.target < b.target; })) {
          bias = 1.0;
        } else {
          bias = 1.0 / in_out_q;
        }
        cumulative[i] = acc += nbrs[i].weight * bias;
      }
    }
    const double r = rng.uniform() * acc;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
    if (it == cumulative.end()) --it;
    walk.push_back(nbrs[static_cast<std::size_t>(it - cumulative.begin())].target);
  }
  return walk;
}

template <WeightedAdjacency G>
std::vector<std::vector<NodeId>> generate_walks(const G& g, const Node2VecParams& params, std::uint64_t seed) {
  const std::size_t n = g.node_count();
  std::vector<std::vector<NodeId>> walks;
  walks.reserve(n * params.walks_per_node);
  const std::uint64_t walk_seed = derive_seed(seed, "walks");
  for (std::size_t round = 0; round < params.walks_per_node; ++round) {
    for (NodeId u = 0; u < n; ++u) {
      if (g.neighbors(u).empty()) continue;
      Rng rng(derive_seed(derive_seed(walk_seed, u), round));
      walks.push_back(node2vec_walk(g, u, params.walk_length, params.return_p, params.in_out_q, rng));
    }
  }
  return walks;
}

/// Skip-gram with negative sampling trained on node2vec walks. Single
/// training thread, exact sigmoid; output depends only on (g, params, seed).
/// Nodes without edges get the zero vector.
template <WeightedAdjacency G>
EmbeddingMatrix node2vec_embed(const G& g, std::uint64_t seed, const Node2VecParams& params = {}) {
  const std::size_t n = g.node_count();
  bool has_edge = false;
  for (NodeId u = 0; u < n && !has_edge; ++u) has_edge = !g.neighbors(u).empty();
  if (!has_edge) fail(ErrorKind::domain, "node2vec needs a graph with at least one edge");

  const auto walks = generate_walks(g, params, seed);
  const std::size_t dim = params.dimensions;

  // Unigram^0.75 noise distribution over walk occurrences.
  std::vector<double> count(n, 0.0);
  std::size_t tokens = 0;
  for (const auto& w : walks) {
    for (NodeId v : w) count[v] += 1.0;
    tokens += w.size();
  }
  std::vector<double> noise_cdf(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) noise_cdf[i] = acc += std::pow(count[i], 0.75);

  Rng rng(derive_seed(seed, "skipgram"));
  EmbeddingMatrix input{n, dim, std::vector<double>(n * dim)};
  std::vector<double> output(n * dim, 0.0);
  for (auto& x : input.values) x = (rng.uniform() - 0.5) / static_cast<double>(dim);

  auto sample_noise = [&]() {
    const double r = rng.uniform() * acc;
    auto it = std::upper_bound(noise_cdf.begin(), noise_cdf.end(), r);
    if (it == noise_cdf.end()) --it;
    return static_cast<NodeId>(it - noise_cdf.begin());
  };
  auto sigmoid = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };

  std::vector<double> grad(dim);
  const double total_steps = static_cast<double>(tokens * params.epochs);
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    for (const auto& walk : walks) {
      for (std::size_t pos = 0; pos < walk.size(); ++pos, ++step) {
        const double lr = std::max(params.learning_rate * (1.0 - static_cast<double>(step) / total_steps),
                                   params.learning_rate * 1e-4);
        const std::size_t reduced = static_cast<std::size_t>(rng.below(params.window));
        const std::size_t span = params.window - reduced;
        const std::size_t lo = pos >= span ? pos - span : 0;
        const std::size_t hi = std::min(walk.size() - 1, pos + span);
        const NodeId center = walk[pos];
        for (std::size_t c = lo; c <= hi; ++c) {
          if (c == pos) continue;
          auto in = input.row(walk[c]);
          std::fill(grad.begin(), grad.end(), 0.0);
          for (std::size_t s = 0; s <= params.negative; ++s) {
            NodeId target = center;
            double label = 1.0;
            if (s > 0) {
              target = sample_noise();
              if (target == center) continue;
              label = 0.0;
            }
            double* out = output.data() + static_cast<std::size_t>(target) * dim;
            double dot = 0.0;
            for (std::size_t k = 0; k < dim; ++k) dot += in[k] * out[k];
            const double gstep = (label - sigmoid(dot)) * lr;
            for (std::size_t k = 0; k < dim; ++k) {
              grad[k] += gstep * out[k];
              out[k] += gstep * in[k];
            }
          }
          for (std::size_t k = 0; k < dim; ++k) in[k] += grad[k];
        }
      }
    }
  }
  for (NodeId u = 0; u < n; ++u)
    if (g.neighbors(u).empty()) std::fill(input.row(u).begin(), input.row(u).end(), 0.0);
  return input;
}

}  // namespace jitgp
