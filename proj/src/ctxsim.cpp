#include "ctxrec/ctxsim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "ctxrec/error.hpp"

namespace ctxrec {

using nlohmann::json;

namespace {

constexpr Provenance kAllProvenances[] = {Provenance::Annotation, Provenance::Segment, Provenance::CitationContext,
                                          Provenance::Classifier};

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) {
    if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
  }
  return out;
}

bool contains_sequence(const std::vector<std::string>& haystack, const std::vector<std::string>& needle) {
  if (needle.empty()) return false;
  return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) != haystack.end();
}

}  // namespace

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::Annotation: return "annotation";
    case Provenance::Segment: return "segment";
    case Provenance::CitationContext: return "citation-context";
    case Provenance::Classifier: return "classifier";
  }
  return "unknown";
}

Provenance provenance_from_string(std::string_view name) {
  for (auto p : kAllProvenances) {
    if (to_string(p) == name) return p;
  }
  throw FormatError("unknown provenance '" + std::string(name) + "'");
}

std::vector<std::string> ProvenanceSet::names() const {
  std::vector<std::string> out;
  for (auto p : kAllProvenances) {
    if (contains(p)) out.emplace_back(to_string(p));
  }
  return out;
}

void ContextGraph::add(ContextEdge edge) {
  const std::size_t ctx = contexts_.require(edge.context);
  if (edge.source == edge.target) throw InvalidArgumentError("context edge from '" + edge.source + "' to itself");
  if (!(edge.score >= 0.0 && edge.score <= 1.0)) {
    throw InvalidArgumentError("context edge score " + std::to_string(edge.score) + " outside [0, 1]");
  }
  auto key = std::make_tuple(edge.source, edge.target, ctx);
  if (auto it = keys_.find(key); it != keys_.end()) {
    auto& existing = edges_[it->second];
    existing.score = std::max(existing.score, edge.score);
    existing.provenance |= edge.provenance;
    return;
  }
  const std::size_t slot = edges_.size();
  keys_.emplace(std::move(key), slot);
  by_source_[edge.source].push_back(slot);
  by_target_[edge.target].push_back(slot);
  by_context_[ctx].push_back(slot);
  edges_.push_back(std::move(edge));
}

const ContextEdge* ContextGraph::find(std::string_view source, std::string_view target,
                                      std::string_view context) const {
  const auto ctx = contexts_.index_of(context);
  if (!ctx) return nullptr;
  auto it = keys_.find(std::make_tuple(std::string(source), std::string(target), *ctx));
  return it == keys_.end() ? nullptr : &edges_[it->second];
}

std::vector<const ContextEdge*> ContextGraph::collect(const std::vector<std::size_t>* slots) const {
  std::vector<const ContextEdge*> out;
  if (!slots) return out;
  out.reserve(slots->size());
  for (auto s : *slots) out.push_back(&edges_[s]);
  return out;
}

std::vector<const ContextEdge*> ContextGraph::from(std::string_view source) const {
  auto it = by_source_.find(std::string(source));
  return collect(it == by_source_.end() ? nullptr : &it->second);
}

std::vector<const ContextEdge*> ContextGraph::to(std::string_view target) const {
  auto it = by_target_.find(std::string(target));
  return collect(it == by_target_.end() ? nullptr : &it->second);
}

std::vector<const ContextEdge*> ContextGraph::in_context(std::string_view context) const {
  return collect(&by_context_[contexts_.require(context)]);
}

bool ContextGraph::operator==(const ContextGraph& other) const {
  if (contexts_ != other.contexts_ || edges_.size() != other.edges_.size()) return false;
  for (const auto& e : edges_) {
    const auto* o = other.find(e.source, e.target, e.context);
    if (!o || *o != e) return false;
  }
  return true;
}

double sim(const ContextGraph& g, std::string_view ds, std::string_view dt, std::string_view context) {
  g.contexts().require(context);
  double best = 0.0;
  if (const auto* e = g.find(ds, dt, context)) best = e->score;
  if (const auto* e = g.find(dt, ds, context)) best = std::max(best, e->score);
  return best;
}

ProvenanceSet provenance_between(const ContextGraph& g, std::string_view ds, std::string_view dt,
                                 std::string_view context) {
  g.contexts().require(context);
  ProvenanceSet p;
  if (const auto* e = g.find(ds, dt, context)) p |= e->provenance;
  if (const auto* e = g.find(dt, ds, context)) p |= e->provenance;
  return p;
}

std::vector<ContextScore> contexts_between(const ContextGraph& g, std::string_view ds, std::string_view dt) {
  std::vector<ContextScore> out;
  for (const auto& c : g.contexts().labels()) {
    const double s = sim(g, ds, dt, c);
    if (s > 0.0) out.push_back({c, s});
  }
  std::sort(out.begin(), out.end(), [](const ContextScore& a, const ContextScore& b) {
    return a.score != b.score ? a.score > b.score : a.context < b.context;
  });
  return out;
}

std::vector<Neighbor> context_neighbors(const ContextGraph& g, std::string_view doc, std::string_view context) {
  g.contexts().require(context);
  std::unordered_map<std::string, double> best;
  for (const auto* e : g.from(doc)) {
    if (e->context == context) best[e->target] = std::max(best[e->target], e->score);
  }
  for (const auto* e : g.to(doc)) {
    if (e->context == context) best[e->source] = std::max(best[e->source], e->score);
  }
  std::vector<Neighbor> out;
  out.reserve(best.size());
  for (auto& [id, score] : best) {
    if (score > 0.0) out.push_back({id, score});
  }
  std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
    return a.score != b.score ? a.score > b.score : a.id < b.id;
  });
  return out;
}

HeadingMap::HeadingMap(std::vector<Rule> rules, const ContextSet& contexts) : rules_(std::move(rules)) {
  compiled_.reserve(rules_.size());
  for (auto& rule : rules_) {
    contexts.require(rule.context);
    if (rule.pattern.rfind("re:", 0) == 0) {
      try {
        compiled_.emplace_back(std::regex(rule.pattern.substr(3), std::regex::ECMAScript | std::regex::icase));
      } catch (const std::regex_error& e) {
        throw InvalidArgumentError("heading pattern '" + rule.pattern + "' is not a valid regex: " + e.what());
      }
    } else {
      rule.pattern = ascii_lower(rule.pattern);
      compiled_.emplace_back(std::nullopt);
    }
  }
}

bool HeadingMap::matches(std::string_view heading, std::string_view context) const {
  const std::string lowered = ascii_lower(heading);
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    if (rules_[i].context != context) continue;
    if (compiled_[i]) {
      if (std::regex_search(std::string(heading), *compiled_[i])) return true;
    } else if (!rules_[i].pattern.empty() && lowered.find(rules_[i].pattern) != std::string::npos) {
      return true;
    }
  }
  return false;
}

ContextConfig parse_context_config(const json& j) {
  try {
    ContextConfig cfg;
    cfg.contexts = ContextSet(j.at("contexts").get<std::vector<std::string>>());
    const auto check_keys = [&](const char* field) {
      if (!j.contains(field)) return;
      for (const auto& [ctx, _] : j.at(field).items()) cfg.contexts.require(ctx);
    };
    check_keys("headings");
    check_keys("citation_keywords");
    std::vector<HeadingMap::Rule> rules;
    for (const auto& ctx : cfg.contexts.labels()) {
      if (j.contains("headings") && j.at("headings").contains(ctx)) {
        for (const auto& p : j.at("headings").at(ctx)) rules.push_back({p.get<std::string>(), ctx});
      }
      if (j.contains("citation_keywords") && j.at("citation_keywords").contains(ctx)) {
        cfg.citation_keywords.emplace_back(ctx, j.at("citation_keywords").at(ctx).get<std::vector<std::string>>());
      }
    }
    cfg.headings = HeadingMap(std::move(rules), cfg.contexts);
    if (j.contains("thresholds")) {
      const auto& t = j.at("thresholds");
      cfg.thresholds.segment = t.value("segment", cfg.thresholds.segment);
      cfg.thresholds.classifier = t.value("classifier", cfg.thresholds.classifier);
      cfg.thresholds.candidate_neighbors = t.value("candidate_neighbors", cfg.thresholds.candidate_neighbors);
    }
    return cfg;
  } catch (const json::exception& e) {
    throw FormatError("context config: " + std::string(e.what()));
  }
}

ContextConfig load_context_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return parse_context_config(json::parse(in));
  } catch (const json::exception& e) {
    throw FormatError("context config " + path.string() + ": " + e.what());
  }
}

ContextGraph from_annotations(const Corpus& corpus, const ContextSet& contexts) {
  ContextGraph g(contexts);
  for (const auto& doc : corpus.documents()) {
    for (const auto& a : doc.annotations) {
      if (!contexts.contains(a.context)) {
        throw UnknownContextError("document '" + doc.id + "' annotates unknown context '" + a.context + "'");
      }
      g.add({doc.id, a.target, a.context, 1.0, Provenance::Annotation});
    }
  }
  return g;
}

std::vector<DocPair> candidate_pairs(const Corpus& corpus, const CitationGraph& graph, const TfidfIndex& index,
                                     const CandidateOptions& options) {
  const std::size_t n = corpus.size();
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  if (options.all_pairs) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) pairs.emplace(i, j);
    }
  } else {
    if (options.citation_links) {
      for (NodeId z = 0; z < graph.document_count(); ++z) {
        for (const auto& e : graph.out_edges(z)) {
          if (!graph.is_dangling(e.target) && e.target != z) pairs.insert(std::minmax<std::size_t>(z, e.target));
        }
      }
    }
    if (options.tfidf_neighbors > 0 && n > 1) {
      const auto& ids = corpus.ids();
      for (std::size_t i = 0; i < n; ++i) {
        for (const auto& nb : top_k_neighbors<SparseVector>(ids, index.vectors, ids[i], options.tfidf_neighbors)) {
          if (nb.score > 0.0) pairs.insert(std::minmax(i, *corpus.ordinal(nb.id)));
        }
      }
    }
  }
  std::vector<DocPair> out;
  out.reserve(pairs.size());
  for (const auto& [i, j] : pairs) out.emplace_back(corpus.at(i).id, corpus.at(j).id);
  return out;
}

ContextGraph from_segments(const Corpus& corpus, const ContextSet& contexts, const HeadingMap& headings,
                           const TfidfIndex& index, std::span<const DocPair> candidates, double tau) {
  ContextGraph g(contexts);
  for (const auto& ctx : contexts.labels()) {
    // Segment vectors by document id; absent when no heading maps to ctx.
    std::unordered_map<std::string, SparseVector> segments;
    for (const auto& doc : corpus.documents()) {
      std::vector<std::string> tokens;
      bool any = false;
      for (const auto& section : doc.sections) {
        if (!headings.matches(section.heading, ctx)) continue;
        any = true;
        for (const auto& para : section.paragraphs) {
          for (const auto& sentence : para) {
            auto t = tokenize(sentence);
            tokens.insert(tokens.end(), t.begin(), t.end());
          }
        }
      }
      if (any) segments.emplace(doc.id, tfidf_vector(tokens, index.vocab));
    }
    for (const auto& [a, b] : candidates) {
      auto sa = segments.find(a);
      auto sb = segments.find(b);
      if (sa == segments.end() || sb == segments.end()) continue;
      const double score = std::clamp(cosine(sa->second, sb->second), 0.0, 1.0);
      if (score >= tau) g.add({a, b, ctx, score, Provenance::Segment});
    }
  }
  return g;
}

ContextGraph from_citation_contexts(const Corpus& corpus, const CitationGraph& graph, const ContextSet& contexts,
                                    const KeywordRules& rules) {
  std::vector<std::pair<std::string, std::vector<std::vector<std::string>>>> compiled;
  for (const auto& [ctx, words] : rules) {
    contexts.require(ctx);
    std::vector<std::vector<std::string>> phrases;
    for (const auto& w : words) {
      auto t = tokenize(w);
      if (!t.empty()) phrases.push_back(std::move(t));
    }
    compiled.emplace_back(ctx, std::move(phrases));
  }
  ContextGraph g(contexts);
  for (NodeId z = 0; z < graph.document_count(); ++z) {
    const Document& doc = corpus.at(z);
    for (const auto& e : graph.out_edges(z)) {
      if (e.target == z) continue;
      const auto tokens = tokenize(doc.sentence(e.pos));
      const std::string* matched = nullptr;
      std::size_t hits = 0;
      for (const auto& [ctx, phrases] : compiled) {
        const bool hit = std::any_of(phrases.begin(), phrases.end(),
                                     [&](const auto& phrase) { return contains_sequence(tokens, phrase); });
        if (hit) {
          ++hits;
          matched = &ctx;
        }
      }
      if (hits == 1) g.add({doc.id, graph.name(e.target), *matched, 1.0, Provenance::CitationContext});
    }
  }
  return g;
}

ContextGraph from_classifier(const SoftmaxModel& model, const DocVectors& vectors, const ContextSet& contexts,
                             std::span<const DocPair> candidates, double tau) {
  auto expected = contexts.labels();
  expected.emplace_back(kNoneLabel);
  if (model.classes != expected) {
    throw InvalidArgumentError("classifier classes do not match the context set plus 'none'");
  }
  ContextGraph g(contexts);
  for (const auto& [a, b] : candidates) {
    auto va = vectors.find(a);
    auto vb = vectors.find(b);
    if (va == vectors.end() || vb == vectors.end()) {
      throw InvalidArgumentError("no document vector for candidate pair '" + a + "' - '" + b + "'");
    }
    const Eigen::VectorXd p = predict(model, va->second, vb->second);
    for (std::size_t c = 0; c < contexts.size(); ++c) {
      const double prob = p[static_cast<Eigen::Index>(c)];
      if (prob >= tau) g.add({a, b, contexts.label(c), prob, Provenance::Classifier});
    }
  }
  return g;
}

ContextGraph merge(std::span<const ContextGraph> graphs) {
  if (graphs.empty()) throw InvalidArgumentError("merge: no graphs");
  ContextGraph out(graphs.front().contexts());
  for (const auto& g : graphs) {
    if (g.contexts() != out.contexts()) throw InvalidArgumentError("merge: context sets differ");
    for (const auto& e : g.edges()) out.add(e);
  }
  return out;
}

void export_context_graph(const ContextGraph& g, std::ostream& out) {
  std::vector<const ContextEdge*> edges;
  for (const auto& e : g.edges()) edges.push_back(&e);
  std::sort(edges.begin(), edges.end(), [](const ContextEdge* a, const ContextEdge* b) {
    return std::tie(a->source, a->target, a->context) < std::tie(b->source, b->target, b->context);
  });
  for (const auto* e : edges) {
    const json line = {{"s", e->source}, {"t", e->target}, {"c", e->context}, {"score", e->score},
                       {"prov", e->provenance.names()}};
    out << line.dump() << '\n';
  }
}

void export_context_graph(const ContextGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  export_context_graph(g, out);
}

ContextGraph import_context_graph(std::istream& in, const ContextSet& contexts) {
  ContextGraph g(contexts);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      ContextEdge e{j.at("s").get<std::string>(), j.at("t").get<std::string>(), j.at("c").get<std::string>(),
                    j.at("score").get<double>(), {}};
      for (const auto& p : j.at("prov")) e.provenance |= provenance_from_string(p.get<std::string>());
      g.add(std::move(e));
    } catch (const json::exception& e) {
      throw FormatError("context graph line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return g;
}

ContextGraph import_context_graph(const std::filesystem::path& path, const ContextSet& contexts) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  return import_context_graph(in, contexts);
}

}  // namespace ctxrec
