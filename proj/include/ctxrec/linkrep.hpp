#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ctxrec/corpus.hpp"

namespace ctxrec {

using NodeId = std::uint32_t;

// Closest structural container shared by two citation markers.
enum class ProximityLevel { SameSentence, SameParagraph, SameSection, SameDocument };

constexpr double proximity_weight(ProximityLevel level) {
  switch (level) {
    case ProximityLevel::SameSentence: return 1.0;
    case ProximityLevel::SameParagraph: return 0.5;
    case ProximityLevel::SameSection: return 0.25;
    case ProximityLevel::SameDocument: return 0.125;
  }
  return 0.0;
}

constexpr ProximityLevel proximity(const SentencePos& a, const SentencePos& b) {
  if (a.section != b.section) return ProximityLevel::SameDocument;
  if (a.paragraph != b.paragraph) return ProximityLevel::SameSection;
  if (a.sentence != b.sentence) return ProximityLevel::SameParagraph;
  return ProximityLevel::SameSentence;
}

// Directed citation multigraph. Nodes [0, document_count()) are the corpus
// documents in ordinal order; the remaining nodes are dangling targets in
// order of first appearance. Self-citations are kept here and ignored by
// the similarity measures.
class CitationGraph {
 public:
  struct OutEdge {
    NodeId target;
    SentencePos pos;
  };
  struct InEdge {
    NodeId citing;
    SentencePos pos;
  };

  std::size_t node_count() const { return names_.size(); }
  std::size_t document_count() const { return document_count_; }
  bool is_dangling(NodeId n) const { return n >= document_count_; }

  const std::string& name(NodeId n) const { return names_[n]; }
  std::optional<NodeId> node(std::string_view id) const;
  // Throws NotFoundError.
  NodeId require(std::string_view id) const;

  std::span<const OutEdge> out_edges(NodeId n) const { return out_[n]; }
  std::span<const InEdge> in_edges(NodeId n) const { return in_[n]; }

  // Distinct cited nodes, ascending, self excluded.
  std::vector<NodeId> references(NodeId n) const;
  // Distinct citing documents, ascending, self excluded.
  std::vector<NodeId> citing_documents(NodeId n) const;

 private:
  friend CitationGraph build_graph(const Corpus& corpus);

  std::vector<std::string> names_;
  std::unordered_map<std::string, NodeId> ids_;
  std::vector<std::vector<OutEdge>> out_;
  std::vector<std::vector<InEdge>> in_;
  std::size_t document_count_ = 0;
};

CitationGraph build_graph(const Corpus& corpus);

struct CountSimilarity {
  std::size_t count = 0;
  double normalized = 0.0;

  bool operator==(const CountSimilarity&) const = default;
};

struct CpiSimilarity {
  double raw = 0.0;
  double normalized = 0.0;

  bool operator==(const CpiSimilarity&) const = default;
};

// Overlap of the distinct reference lists (dangling targets included),
// cosine-normalised.
CountSimilarity bibliographic_coupling(const CitationGraph& g, std::string_view a, std::string_view b);

// Number of distinct documents citing both, cosine-normalised by in-degree.
CountSimilarity cocitation(const CitationGraph& g, std::string_view a, std::string_view b);

// Co-citation proximity index. Each co-citing document contributes the
// best proximity weight over its marker pairs; normalized is the mean
// contribution.
CpiSimilarity cpi(const CitationGraph& g, std::string_view a, std::string_view b);

// Undirected, positively weighted graph over named nodes. Node ids follow
// the lexicographic order of the names; every edge is stored with a < b.
class WeightedGraph {
 public:
  struct Edge {
    NodeId a;
    NodeId b;
    double weight;
  };
  struct Neighbor {
    NodeId node;
    double weight;
  };

  WeightedGraph() = default;
  // Throws InvalidArgumentError on self-loops, non-positive weights or
  // repeated pairs.
  static WeightedGraph from_edges(std::vector<std::tuple<std::string, std::string, double>> edges);

  std::size_t node_count() const { return names_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  bool empty() const { return edges_.empty(); }
  const std::string& name(NodeId n) const { return names_[n]; }
  std::span<const std::string> names() const { return names_; }
  std::optional<NodeId> node(std::string_view id) const;
  std::span<const Edge> edges() const { return edges_; }
  std::span<const Neighbor> neighbors(NodeId n) const { return adjacency_[n]; }
  // 0 when there is no edge.
  double weight(std::string_view a, std::string_view b) const;

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, NodeId> ids_;
  std::vector<Edge> edges_;
  std::vector<std::vector<Neighbor>> adjacency_;
};

// Edge (a, b, raw CPI) for every co-cited pair. Pairs are enumerated per
// citing document from its own markers.
WeightedGraph build_weighted_graph(const CitationGraph& g);

// `id_a id_b weight` per line, sorted, weight with 6 decimals.
void export_weighted_graph(const WeightedGraph& w, std::ostream& out);
void export_weighted_graph(const WeightedGraph& w, const std::filesystem::path& path);
WeightedGraph import_weighted_graph(std::istream& in);
WeightedGraph import_weighted_graph(const std::filesystem::path& path);

}  // namespace ctxrec
