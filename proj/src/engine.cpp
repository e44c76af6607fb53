#include "ctxrec/engine.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "ctxrec/error.hpp"

namespace ctxrec {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void require_file(const fs::path& path, const char* hint) {
  if (!fs::exists(path)) throw FormatError("missing " + path.string() + " (" + hint + ")");
}

ContextConfig load_dir_config(const fs::path& dir, const std::optional<fs::path>& override_path) {
  if (override_path) {
    ContextConfig cfg = load_context_config(*override_path);
    fs::copy_file(*override_path, dir / layout::kContexts, fs::copy_options::overwrite_existing);
    return cfg;
  }
  require_file(dir / layout::kContexts, "pass --config to provide the context configuration");
  return load_context_config(dir / layout::kContexts);
}

EmbeddingTable load_vectors_if_present(const fs::path& path) {
  return fs::exists(path) ? load_embeddings(path) : EmbeddingTable{};
}

}  // namespace

IndexSummary build_index(const fs::path& dir) {
  const Corpus corpus = load(dir);
  const TfidfIndex index = build_tfidf(corpus);
  save_index(index, dir / layout::kIndex);
  const CitationGraph graph = build_graph(corpus);
  const WeightedGraph weighted = build_weighted_graph(graph);
  export_weighted_graph(weighted, dir / layout::kWeightedGraph);
  return {corpus.size(), index.vocab.size(), stats(corpus).citations, weighted.edge_count()};
}

GraphEmbedding embed_graph(const fs::path& dir, const GraphEmbeddingConfig& config) {
  require_file(dir / layout::kWeightedGraph, "run `index` first");
  const WeightedGraph weighted = import_weighted_graph(dir / layout::kWeightedGraph);
  GraphEmbedding embedding = train_graph_embedding(weighted, config);
  save_embeddings(dir / layout::kGraphEmbedding, embedding.nodes, embedding.as_table());
  return embedding;
}

DenseVector hashed_tfidf(const SparseVector& v, const Vocabulary& vocab, Eigen::Index dim) {
  DenseVector out = DenseVector::Zero(dim);
  for (SparseVector::InnerIterator it(v); it; ++it) {
    const std::uint64_t h = fnv1a(vocab.entry(static_cast<TermId>(it.index())).term);
    const double sign = (h >> 63) ? -1.0 : 1.0;
    out[static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dim))] += sign * it.value();
  }
  return out;
}

DocVectors document_vectors(const Corpus& corpus, const TfidfIndex& index, const EmbeddingTable* words,
                            const EmbeddingTable* graph, double alpha) {
  std::vector<DenseVector> text;
  if (words && !words->empty()) {
    text = sif_embed_all(corpus, index.vocab, *words);
  } else {
    for (const auto& v : index.vectors) text.push_back(hashed_tfidf(v, index.vocab));
  }
  DocVectors out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& id = corpus.at(i).id;
    if (graph && !graph->empty()) {
      const auto* link = graph->find(id);
      out.emplace(id, hybrid_concat(text[i], link ? *link : DenseVector::Zero(graph->dim), alpha));
    } else {
      const double n = text[i].norm();
      out.emplace(id, n > 0.0 ? DenseVector(text[i] / n) : text[i]);
    }
  }
  return out;
}

TrainSummary train_classifier(const fs::path& dir, const fs::path& pairs_path, const TrainOptions& options) {
  const Corpus corpus = load(dir);
  const ContextConfig cfg = load_dir_config(dir, options.config);
  require_file(dir / layout::kIndex, "run `index` first");
  const TfidfIndex index = load_index(dir / layout::kIndex);

  EmbeddingTable words;
  if (options.embeddings) words = load_embeddings(*options.embeddings);
  const EmbeddingTable graph = load_vectors_if_present(dir / layout::kGraphEmbedding);
  const DocVectors vectors = document_vectors(corpus, index, &words, &graph, options.alpha);

  std::vector<LabeledPair> pairs = load_pairs(pairs_path);
  for (const auto& p : pairs) {
    if (!corpus.contains(p.a)) throw NotFoundError("training pair references unknown document '" + p.a + "'");
    if (!corpus.contains(p.b)) throw NotFoundError("training pair references unknown document '" + p.b + "'");
  }
  TrainSummary summary;
  summary.positives = pairs.size();
  const auto negatives = sample_negative_pairs(pairs, corpus.ids(), options.negative_ratio, options.softmax.seed);
  summary.negatives = negatives.size();
  pairs.insert(pairs.end(), negatives.begin(), negatives.end());

  const TrainResult result = train(pairs, vectors, cfg.contexts, options.softmax);
  summary.final_loss = result.final_loss;
  summary.metrics = evaluate(result.model, pairs, vectors);
  save_model(result.model, dir / layout::kModel);

  EmbeddingTable table;
  table.dim = vectors.begin()->second.size();
  for (const auto& [id, v] : vectors) table.vectors.emplace(id, v);
  save_embeddings(dir / layout::kDocVectors, corpus.ids(), table);
  return summary;
}

BuildContextSummary build_context(const fs::path& dir, const BuildContextOptions& options) {
  const Corpus corpus = load(dir);
  const ContextConfig cfg = load_dir_config(dir, options.config);
  require_file(dir / layout::kIndex, "run `index` first");
  const TfidfIndex index = load_index(dir / layout::kIndex);
  if (index.vectors.size() != corpus.size()) throw FormatError("index is stale; rerun `index`");
  const CitationGraph citations = build_graph(corpus);

  CandidateOptions candidate_options;
  candidate_options.tfidf_neighbors = cfg.thresholds.candidate_neighbors;
  const auto candidates = candidate_pairs(corpus, citations, index, candidate_options);

  std::vector<ContextGraph> parts;
  parts.push_back(from_annotations(corpus, cfg.contexts));
  parts.push_back(from_segments(corpus, cfg.contexts, cfg.headings, index, candidates, cfg.thresholds.segment));
  parts.push_back(from_citation_contexts(corpus, citations, cfg.contexts, cfg.citation_keywords));

  BuildContextSummary summary;
  if (fs::exists(dir / layout::kModel)) {
    require_file(dir / layout::kDocVectors, "rerun `train`");
    const SoftmaxModel model = load_model(dir / layout::kModel);
    const EmbeddingTable table = load_embeddings(dir / layout::kDocVectors);
    const DocVectors vectors(table.vectors.begin(), table.vectors.end());
    parts.push_back(from_classifier(model, vectors, cfg.contexts, candidates, cfg.thresholds.classifier));
    summary.used_classifier = true;
    summary.classifier = parts.back().size();
  }
  summary.annotation = parts[0].size();
  summary.segment = parts[1].size();
  summary.citation_context = parts[2].size();

  const ContextGraph merged = merge(parts);
  summary.merged = merged.size();
  export_context_graph(merged, dir / layout::kContextGraph);
  return summary;
}

Engine Engine::open(const fs::path& dir) {
  Corpus corpus = load(dir);
  require_file(dir / layout::kContexts, "run `build-context --config <file>` first");
  ContextConfig cfg = load_context_config(dir / layout::kContexts);
  require_file(dir / layout::kContextGraph, "run `build-context` first");
  ContextGraph graph = import_context_graph(dir / layout::kContextGraph, cfg.contexts);
  return Engine(std::move(corpus), std::move(cfg), std::move(graph));
}

Engine::Engine(Corpus corpus, ContextConfig config, ContextGraph graph)
    : corpus_(std::move(corpus)), config_(std::move(config)), graph_(std::move(graph)) {
  if (graph_.contexts() != config_.contexts) throw InvalidArgumentError("engine: context graph uses another context set");
}

std::vector<RecommendationItem> Engine::query(const AnalogicalQuery& q) const {
  return answer(graph_, corpus_.ids(), q);
}

std::vector<RecommendationItem> Engine::diverse(std::string_view seed, std::size_t k) const {
  return recommend_diverse(graph_, corpus_.ids(), seed, k);
}

std::vector<RecommendationItem> Engine::focused(std::string_view seed, std::string_view context, std::size_t k) const {
  return recommend_focused(graph_, corpus_.ids(), seed, context, k);
}

json Engine::to_json(const std::vector<RecommendationItem>& items) const {
  json out = json::array();
  for (const auto& item : items) {
    json matched = json::array();
    for (const auto& m : item.matched) matched.push_back({{"context", m.context}, {"sim", m.score}});
    const Document* doc = corpus_.find(item.id);
    out.push_back({{"id", item.id},
                   {"title", doc ? doc->title : std::string{}},
                   {"score", item.score},
                   {"matched", std::move(matched)},
                   {"provenance", item.provenance}});
  }
  return out;
}

}  // namespace ctxrec
