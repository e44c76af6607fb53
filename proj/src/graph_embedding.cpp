#include "ctxrec/graph_embedding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ctxrec/error.hpp"
#include "ctxrec/random.hpp"

namespace ctxrec {

namespace {

// Draws an index with probability proportional to its weight.
class WeightedSampler {
 public:
  explicit WeightedSampler(std::span<const double> weights) : cumulative_(weights.size()) {
    std::partial_sum(weights.begin(), weights.end(), cumulative_.begin());
  }

  std::size_t draw(Rng& rng) const {
    const double u = rng.uniform() * cumulative_.back();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return std::min(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
  }

 private:
  std::vector<double> cumulative_;
};

double sigmoid(double x) {
  if (x > 30.0) return 1.0;
  if (x < -30.0) return 0.0;
  return 1.0 / (1.0 + std::exp(-x));
}

}  // namespace

void GraphEmbeddingConfig::validate() const {
  if (dims < 2) throw InvalidArgumentError("graph embedding: dims must be >= 2");
  if (walks_per_node < 1 || walk_length < 1 || window < 1 || epochs < 1 || negatives < 0) {
    throw InvalidArgumentError("graph embedding: walks, length, window and epochs must be >= 1");
  }
  if (!(learning_rate > 0.0)) throw InvalidArgumentError("graph embedding: learning rate must be > 0");
}

std::vector<Walk> generate_walks(const WeightedGraph& graph, const GraphEmbeddingConfig& config) {
  config.validate();
  if (graph.empty()) throw InvalidArgumentError("graph embedding: graph has no edges");
  const std::size_t n = graph.node_count();

  std::vector<WeightedSampler> samplers;
  samplers.reserve(n);
  for (NodeId v = 0; v < n; ++v) {
    std::vector<double> w;
    for (const auto& nb : graph.neighbors(v)) w.push_back(nb.weight);
    samplers.emplace_back(w);
  }

  Rng rng(config.seed);
  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), NodeId{0});
  std::vector<Walk> walks;
  walks.reserve(n * static_cast<std::size_t>(config.walks_per_node));
  for (int pass = 0; pass < config.walks_per_node; ++pass) {
    rng.shuffle(order.begin(), order.end());
    for (NodeId start : order) {
      Walk walk;
      walk.reserve(static_cast<std::size_t>(config.walk_length) + 1);
      walk.push_back(start);
      NodeId at = start;
      for (int step = 0; step < config.walk_length; ++step) {
        at = graph.neighbors(at)[samplers[at].draw(rng)].node;
        walk.push_back(at);
      }
      walks.push_back(std::move(walk));
    }
  }
  return walks;
}

std::optional<DenseVector> GraphEmbedding::vector(std::string_view id) const {
  const auto it = std::find(nodes.begin(), nodes.end(), id);
  if (it == nodes.end()) return std::nullopt;
  return DenseVector(vectors.row(it - nodes.begin()).transpose());
}

EmbeddingTable GraphEmbedding::as_table() const {
  EmbeddingTable table;
  table.dim = vectors.cols();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    table.vectors.emplace(nodes[i], vectors.row(static_cast<Eigen::Index>(i)).transpose());
  }
  return table;
}

GraphEmbedding train_graph_embedding(const WeightedGraph& graph, const GraphEmbeddingConfig& config) {
  const auto walks = generate_walks(graph, config);
  const auto n = static_cast<Eigen::Index>(graph.node_count());
  const Eigen::Index dims = config.dims;

  // Initialisation stream, independent of the walk stream.
  Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  Eigen::MatrixXd input(n, dims);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < dims; ++k) input(i, k) = rng.uniform(-0.5, 0.5) / static_cast<double>(dims);
  }
  Eigen::MatrixXd output = Eigen::MatrixXd::Zero(n, dims);

  // Noise distribution: walk frequency ^ 0.75.
  std::vector<double> freq(static_cast<std::size_t>(n), 0.0);
  for (const auto& walk : walks) {
    for (NodeId v : walk) freq[v] += 1.0;
  }
  for (auto& f : freq) f = std::pow(f, 0.75);
  const WeightedSampler noise(freq);

  std::size_t total_pairs = 0;
  for (const auto& walk : walks) {
    const auto len = static_cast<std::ptrdiff_t>(walk.size());
    for (std::ptrdiff_t i = 0; i < len; ++i) {
      total_pairs += static_cast<std::size_t>(std::min<std::ptrdiff_t>(len - 1, i + config.window) -
                                              std::max<std::ptrdiff_t>(0, i - config.window));
    }
  }
  total_pairs *= static_cast<std::size_t>(config.epochs);

  Eigen::RowVectorXd grad(dims);
  std::size_t processed = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (const auto& walk : walks) {
      const auto len = static_cast<std::ptrdiff_t>(walk.size());
      for (std::ptrdiff_t i = 0; i < len; ++i) {
        const auto center = static_cast<Eigen::Index>(walk[static_cast<std::size_t>(i)]);
        const auto lo = std::max<std::ptrdiff_t>(0, i - config.window);
        const auto hi = std::min<std::ptrdiff_t>(len - 1, i + config.window);
        for (std::ptrdiff_t j = lo; j <= hi; ++j) {
          if (j == i) continue;
          const auto context = static_cast<Eigen::Index>(walk[static_cast<std::size_t>(j)]);
          const double lr = config.learning_rate *
                            std::max(1e-4, 1.0 - static_cast<double>(processed) / static_cast<double>(total_pairs));
          ++processed;
          grad.setZero();
          for (int s = 0; s <= config.negatives; ++s) {
            Eigen::Index target = context;
            double label = 1.0;
            if (s > 0) {
              target = static_cast<Eigen::Index>(noise.draw(rng));
              if (target == context) continue;
              label = 0.0;
            }
            const double g = (label - sigmoid(input.row(center).dot(output.row(target)))) * lr;
            grad += g * output.row(target);
            output.row(target) += g * input.row(center);
          }
          input.row(center) += grad;
        }
      }
    }
  }

  GraphEmbedding result;
  result.nodes.assign(graph.names().begin(), graph.names().end());
  result.vectors = std::move(input);
  result.config = config;
  return result;
}

}  // namespace ctxrec
