#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "ctxrec/linkrep.hpp"
#include "ctxrec/textrep.hpp"

namespace ctxrec {

struct GraphEmbeddingConfig {
  int dims = 64;
  int walks_per_node = 10;
  int walk_length = 40;  // transitions per walk
  int window = 5;
  int negatives = 5;
  int epochs = 1;
  double learning_rate = 0.025;
  std::uint64_t seed = 1;

  // Throws InvalidArgumentError.
  void validate() const;
};

using Walk = std::vector<NodeId>;

// walks_per_node passes; each pass starts one walk from every node (in a
// seeded shuffled order). The next node is drawn proportionally to edge
// weight.
std::vector<Walk> generate_walks(const WeightedGraph& graph, const GraphEmbeddingConfig& config);

struct GraphEmbedding {
  std::vector<std::string> nodes;
  Eigen::MatrixXd vectors;  // one row per entry of `nodes`
  GraphEmbeddingConfig config;

  std::optional<DenseVector> vector(std::string_view id) const;
  EmbeddingTable as_table() const;
};

// Weighted random walks followed by skip-gram with negative sampling.
// Deterministic for a fixed config (including seed).
GraphEmbedding train_graph_embedding(const WeightedGraph& graph, const GraphEmbeddingConfig& config);

}  // namespace ctxrec
