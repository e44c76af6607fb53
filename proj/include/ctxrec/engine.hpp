#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ctxrec/corpus.hpp"
#include "ctxrec/ctxsim.hpp"
#include "ctxrec/graph_embedding.hpp"
#include "ctxrec/pairclass.hpp"
#include "ctxrec/queryeng.hpp"

namespace ctxrec {

// File names inside an engine directory.
namespace layout {
inline constexpr const char* kContexts = "contexts.json";
inline constexpr const char* kIndex = "index.json";
inline constexpr const char* kWeightedGraph = "weighted_graph.txt";
inline constexpr const char* kGraphEmbedding = "graph_embedding.txt";
inline constexpr const char* kDocVectors = "doc_vectors.txt";
inline constexpr const char* kModel = "model.txt";
inline constexpr const char* kContextGraph = "context_graph.jsonl";
}  // namespace layout

struct IndexSummary {
  std::size_t documents = 0;
  std::size_t terms = 0;
  std::size_t citations = 0;
  std::size_t weighted_edges = 0;
};

// TF-IDF index plus CPI-weighted co-citation graph.
IndexSummary build_index(const std::filesystem::path& dir);

GraphEmbedding embed_graph(const std::filesystem::path& dir, const GraphEmbeddingConfig& config);

// Width of the hashed TF-IDF text vector used when no word embeddings are
// supplied.
inline constexpr Eigen::Index kHashedTextDim = 256;

// Signed feature hashing of a TF-IDF vector into `dim` buckets.
DenseVector hashed_tfidf(const SparseVector& v, const Vocabulary& vocab, Eigen::Index dim = kHashedTextDim);

// Classifier input per document: hybrid_concat(text, graph) when a graph
// embedding is given (zeros for documents outside it), otherwise the
// normalised text vector. Text is SIF over `words` when given, else the
// hashed TF-IDF vector.
DocVectors document_vectors(const Corpus& corpus, const TfidfIndex& index, const EmbeddingTable* words,
                            const EmbeddingTable* graph, double alpha = 0.5);

struct TrainOptions {
  std::optional<std::filesystem::path> config;      // copied to contexts.json when given
  std::optional<std::filesystem::path> embeddings;  // word vectors for SIF
  double negative_ratio = 1.0;
  double alpha = 0.5;
  SoftmaxConfig softmax;
};

struct TrainSummary {
  std::size_t positives = 0;
  std::size_t negatives = 0;
  double final_loss = 0.0;
  Metrics metrics;
};

TrainSummary train_classifier(const std::filesystem::path& dir, const std::filesystem::path& pairs,
                              const TrainOptions& options);

struct BuildContextOptions {
  std::optional<std::filesystem::path> config;  // copied to contexts.json when given
};

struct BuildContextSummary {
  std::size_t annotation = 0;
  std::size_t segment = 0;
  std::size_t citation_context = 0;
  std::size_t classifier = 0;
  std::size_t merged = 0;
  bool used_classifier = false;
};

// Runs every edge source the directory supports and writes the merged
// context graph.
BuildContextSummary build_context(const std::filesystem::path& dir, const BuildContextOptions& options = {});

// Read-only view over a fully built engine directory.
class Engine {
 public:
  static Engine open(const std::filesystem::path& dir);
  Engine(Corpus corpus, ContextConfig config, ContextGraph graph);

  const Corpus& corpus() const { return corpus_; }
  const ContextConfig& config() const { return config_; }
  const ContextSet& contexts() const { return config_.contexts; }
  const ContextGraph& graph() const { return graph_; }

  std::vector<RecommendationItem> query(const AnalogicalQuery& q) const;
  std::vector<RecommendationItem> diverse(std::string_view seed, std::size_t k) const;
  std::vector<RecommendationItem> focused(std::string_view seed, std::string_view context, std::size_t k) const;

  // Result items with titles: [{id, title, score, matched, provenance}].
  nlohmann::json to_json(const std::vector<RecommendationItem>& items) const;

 private:
  Corpus corpus_;
  ContextConfig config_;
  ContextGraph graph_;
};

}  // namespace ctxrec
