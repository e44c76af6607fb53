#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ctxrec/context_set.hpp"
#include "ctxrec/corpus.hpp"
#include "ctxrec/linkrep.hpp"
#include "ctxrec/pairclass.hpp"
#include "ctxrec/textrep.hpp"

namespace ctxrec {

// Which construction path asserted an edge.
enum class Provenance : std::uint8_t {
  Annotation = 1 << 0,
  Segment = 1 << 1,
  CitationContext = 1 << 2,
  Classifier = 1 << 3,
};

std::string_view to_string(Provenance p);
// Throws FormatError for unknown names.
Provenance provenance_from_string(std::string_view name);

class ProvenanceSet {
 public:
  ProvenanceSet() = default;
  ProvenanceSet(Provenance p) : bits_(static_cast<std::uint8_t>(p)) {}  // NOLINT(google-explicit-constructor)

  bool empty() const { return bits_ == 0; }
  bool contains(Provenance p) const { return (bits_ & static_cast<std::uint8_t>(p)) != 0; }
  ProvenanceSet& operator|=(ProvenanceSet o) {
    bits_ |= o.bits_;
    return *this;
  }
  // Names in the fixed order annotation, segment, citation-context, classifier.
  std::vector<std::string> names() const;

  bool operator==(const ProvenanceSet&) const = default;

 private:
  std::uint8_t bits_ = 0;
};

// One scored triple (source, target, context).
struct ContextEdge {
  std::string source;
  std::string target;
  std::string context;
  double score = 0.0;
  ProvenanceSet provenance;

  bool operator==(const ContextEdge&) const = default;
};

// Directed store of context edges with source, target and context indexes.
// A (source, target, context) triple is stored once: re-adding it keeps the
// maximum score and the union of provenances.
class ContextGraph {
 public:
  ContextGraph() = default;
  explicit ContextGraph(ContextSet contexts) : contexts_(std::move(contexts)), by_context_(contexts_.size()) {}

  const ContextSet& contexts() const { return contexts_; }

  // Throws UnknownContextError for labels outside the set and
  // InvalidArgumentError for self-edges or scores outside [0, 1].
  void add(ContextEdge edge);

  std::size_t size() const { return edges_.size(); }
  bool empty() const { return edges_.empty(); }
  std::span<const ContextEdge> edges() const { return edges_; }

  const ContextEdge* find(std::string_view source, std::string_view target, std::string_view context) const;
  std::vector<const ContextEdge*> from(std::string_view source) const;
  std::vector<const ContextEdge*> to(std::string_view target) const;
  std::vector<const ContextEdge*> in_context(std::string_view context) const;

  // Same context set and the same edges, irrespective of insertion order.
  bool operator==(const ContextGraph& other) const;

 private:
  std::vector<const ContextEdge*> collect(const std::vector<std::size_t>* slots) const;

  ContextSet contexts_;
  std::vector<ContextEdge> edges_;
  std::map<std::tuple<std::string, std::string, std::size_t>, std::size_t> keys_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_source_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_target_;
  std::vector<std::vector<std::size_t>> by_context_;
};

/// Contextual similarity: the best score stored for (ds, dt, c) in either
/// direction, 0 when there is none. Throws UnknownContextError.
double sim(const ContextGraph& g, std::string_view ds, std::string_view dt, std::string_view context);

// Union of provenances over both directions of (ds, dt, c).
ProvenanceSet provenance_between(const ContextGraph& g, std::string_view ds, std::string_view dt,
                                 std::string_view context);

struct ContextScore {
  std::string context;
  double score = 0.0;

  bool operator==(const ContextScore&) const = default;
};

// Contexts with non-zero sim, by descending score then label.
std::vector<ContextScore> contexts_between(const ContextGraph& g, std::string_view ds, std::string_view dt);

// Documents linked to `doc` in `context` (either direction) with their sim,
// by descending score then ascending id.
std::vector<Neighbor> context_neighbors(const ContextGraph& g, std::string_view doc, std::string_view context);

// Section heading -> context rules. Patterns are case-insensitive
// substrings, or ECMAScript regular expressions when prefixed with "re:".
class HeadingMap {
 public:
  struct Rule {
    std::string pattern;
    std::string context;
  };

  HeadingMap() = default;
  // Throws UnknownContextError when a rule maps to a label outside `contexts`.
  HeadingMap(std::vector<Rule> rules, const ContextSet& contexts);

  std::span<const Rule> rules() const { return rules_; }
  bool empty() const { return rules_.empty(); }
  bool matches(std::string_view heading, std::string_view context) const;

 private:
  std::vector<Rule> rules_;
  std::vector<std::optional<std::regex>> compiled_;
};

// Context label -> keywords searched in citation sentences.
using KeywordRules = std::vector<std::pair<std::string, std::vector<std::string>>>;

struct Thresholds {
  double segment = 0.3;
  double classifier = 0.5;
  std::size_t candidate_neighbors = 10;
};

struct ContextConfig {
  ContextSet contexts;
  HeadingMap headings;
  KeywordRules citation_keywords;
  Thresholds thresholds;
};

ContextConfig parse_context_config(const nlohmann::json& j);
ContextConfig load_context_config(const std::filesystem::path& path);

// Score 1.0 per annotation. Throws UnknownContextError for labels outside
// the set.
ContextGraph from_annotations(const Corpus& corpus, const ContextSet& contexts);

using DocPair = std::pair<std::string, std::string>;

struct CandidateOptions {
  std::size_t tfidf_neighbors = 10;
  bool citation_links = true;
  bool all_pairs = false;
};

// Unordered document pairs (first precedes second in corpus order) that are
// linked by a citation or are among each other's top TF-IDF neighbours.
std::vector<DocPair> candidate_pairs(const Corpus& corpus, const CitationGraph& graph, const TfidfIndex& index,
                                     const CandidateOptions& options = {});

// Per context, compares the TF-IDF vectors of the sections whose headings
// map to that context. Emits an edge when the cosine reaches `tau`.
ContextGraph from_segments(const Corpus& corpus, const ContextSet& contexts, const HeadingMap& headings,
                           const TfidfIndex& index, std::span<const DocPair> candidates, double tau = 0.3);

// A citing -> cited edge (score 1.0) for every marker whose sentence
// matches the keywords of exactly one context.
ContextGraph from_citation_contexts(const Corpus& corpus, const CitationGraph& graph, const ContextSet& contexts,
                                    const KeywordRules& rules);

// Every context class whose predicted probability reaches `tau` becomes an
// edge scored with that probability. Throws InvalidArgumentError when the
// model's classes are not the context set plus "none".
ContextGraph from_classifier(const SoftmaxModel& model, const DocVectors& vectors, const ContextSet& contexts,
                             std::span<const DocPair> candidates, double tau = 0.5);

// Throws InvalidArgumentError for an empty list or differing context sets.
ContextGraph merge(std::span<const ContextGraph> graphs);

// JSONL `{"s", "t", "c", "score", "prov"}` per edge, sorted by (s, t, c).
void export_context_graph(const ContextGraph& g, std::ostream& out);
void export_context_graph(const ContextGraph& g, const std::filesystem::path& path);
ContextGraph import_context_graph(std::istream& in, const ContextSet& contexts);
ContextGraph import_context_graph(const std::filesystem::path& path, const ContextSet& contexts);

}  // namespace ctxrec
