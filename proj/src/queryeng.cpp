#include "ctxrec/queryeng.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "ctxrec/error.hpp"

namespace ctxrec {

namespace {

bool contains(const std::vector<std::string>& v, std::string_view s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

void require_document(std::span<const std::string> documents, std::string_view id) {
  if (std::find(documents.begin(), documents.end(), id) == documents.end()) {
    throw NotFoundError("unknown document '" + std::string(id) + "'");
  }
}

void rank(std::vector<RecommendationItem>& items, std::size_t k) {
  std::sort(items.begin(), items.end(), [](const RecommendationItem& a, const RecommendationItem& b) {
    return a.score != b.score ? a.score > b.score : a.id < b.id;
  });
  if (items.size() > k) items.resize(k);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw InvalidArgumentError("query: bad value for " + std::string(key) + ": '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

void AnalogicalQuery::validate(const ContextSet& contexts) const {
  if (seed.empty()) throw InvalidArgumentError("query: missing seed");
  if (require.empty() && exclude.empty()) throw InvalidArgumentError("query: no contexts to require or exclude");
  if (k == 0) throw InvalidArgumentError("query: k must be >= 1");
  for (const auto& c : require) {
    contexts.require(c);
    if (contains(exclude, c)) throw InvalidArgumentError("query: context '" + c + "' is both required and excluded");
  }
  for (const auto& c : exclude) contexts.require(c);
}

AnalogicalQuery parse_query(std::string_view text, const ContextSet& contexts) {
  AnalogicalQuery q;
  bool has_seed = false;
  std::istringstream in{std::string(text)};
  for (std::string tok; in >> tok;) {
    if (tok[0] == '+' || tok[0] == '-') {
      const std::string ctx = tok.substr(1);
      if (ctx.empty()) throw InvalidArgumentError("query: empty context after '" + tok.substr(0, 1) + "'");
      contexts.require(ctx);
      auto& list = tok[0] == '+' ? q.require : q.exclude;
      if (!contains(list, ctx)) list.push_back(ctx);
      continue;
    }
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw InvalidArgumentError("query: unexpected token '" + tok + "'");
    const std::string_view key(tok.data(), eq);
    const std::string_view value(tok.data() + eq + 1, tok.size() - eq - 1);
    if (key == "seed") {
      if (has_seed) throw InvalidArgumentError("query: seed given twice");
      if (value.empty()) throw InvalidArgumentError("query: empty seed");
      q.seed = std::string(value);
      has_seed = true;
    } else if (key == "k") {
      q.k = parse_number<std::size_t>(key, value);
    } else if (key == "tau_sim") {
      q.tau_sim = parse_number<double>(key, value);
    } else if (key == "tau_dis") {
      q.tau_dis = parse_number<double>(key, value);
    } else {
      throw InvalidArgumentError("query: unknown parameter '" + std::string(key) + "'");
    }
  }
  if (!has_seed) throw InvalidArgumentError("query: missing seed");
  q.validate(contexts);
  return q;
}

std::vector<RecommendationItem> answer(const ContextGraph& g, std::span<const std::string> documents,
                                       const AnalogicalQuery& q) {
  q.validate(g.contexts());
  require_document(documents, q.seed);
  std::vector<RecommendationItem> items;
  for (const auto& d : documents) {
    if (d == q.seed) continue;
    RecommendationItem item{d, 0.0, {}, {}};
    ProvenanceSet prov;
    bool keep = true;
    double sum = 0.0;
    for (const auto& c : q.require) {
      const double s = sim(g, q.seed, d, c);
      if (!(s >= q.tau_sim)) {
        keep = false;
        break;
      }
      sum += s;
      item.matched.push_back({c, s});
      prov |= provenance_between(g, q.seed, d, c);
    }
    if (!keep) continue;
    double worst = 0.0;
    for (const auto& c : q.exclude) {
      const double s = sim(g, q.seed, d, c);
      if (!(s < q.tau_dis)) {
        keep = false;
        break;
      }
      worst = std::max(worst, s);
    }
    if (!keep) continue;
    item.score = q.require.empty() ? 1.0 - worst : sum / static_cast<double>(q.require.size());
    item.provenance = prov.names();
    items.push_back(std::move(item));
  }
  rank(items, q.k);
  return items;
}

std::vector<RecommendationItem> recommend_diverse(const ContextGraph& g, std::span<const std::string> documents,
                                                  std::string_view seed, std::size_t k) {
  require_document(documents, seed);
  const std::unordered_set<std::string_view> universe(documents.begin(), documents.end());
  const auto& labels = g.contexts().labels();
  std::vector<std::vector<Neighbor>> queues;
  for (const auto& c : labels) {
    auto nbs = context_neighbors(g, seed, c);
    std::erase_if(nbs, [&](const Neighbor& n) { return !universe.contains(n.id); });
    queues.push_back(std::move(nbs));
  }
  std::vector<std::size_t> cursor(labels.size(), 0);
  std::unordered_set<std::string> seen;
  const auto skip_seen = [&](std::size_t c) {
    while (cursor[c] < queues[c].size() && seen.contains(queues[c][cursor[c]].id)) ++cursor[c];
    return cursor[c] < queues[c].size();
  };

  std::vector<RecommendationItem> items;
  while (items.size() < k) {
    std::vector<std::size_t> round;
    for (std::size_t c = 0; c < labels.size(); ++c) {
      if (skip_seen(c)) round.push_back(c);
    }
    if (round.empty()) break;
    // Contexts by their best remaining candidate; ties keep context order.
    std::stable_sort(round.begin(), round.end(), [&](std::size_t a, std::size_t b) {
      return queues[a][cursor[a]].score > queues[b][cursor[b]].score;
    });
    for (std::size_t c : round) {
      if (items.size() >= k) break;
      if (!skip_seen(c)) continue;
      const Neighbor& n = queues[c][cursor[c]++];
      seen.insert(n.id);
      items.push_back({n.id, n.score, {{labels[c], n.score}}, provenance_between(g, seed, n.id, labels[c]).names()});
    }
  }
  return items;
}

std::vector<RecommendationItem> recommend_focused(const ContextGraph& g, std::span<const std::string> documents,
                                                  std::string_view seed, std::string_view context, std::size_t k) {
  g.contexts().require(context);
  require_document(documents, seed);
  const std::unordered_set<std::string_view> universe(documents.begin(), documents.end());
  // Best path score per reachable document and the provenances along it.
  std::unordered_map<std::string, std::pair<double, ProvenanceSet>> best;
  const auto offer = [&](const std::string& id, double score, ProvenanceSet prov) {
    auto [it, inserted] = best.try_emplace(id, score, prov);
    if (!inserted && score > it->second.first) it->second = {score, prov};
  };
  for (const auto& hop1 : context_neighbors(g, seed, context)) {
    const ProvenanceSet first = provenance_between(g, seed, hop1.id, context);
    if (universe.contains(hop1.id)) offer(hop1.id, hop1.score, first);
    for (const auto& hop2 : context_neighbors(g, hop1.id, context)) {
      if (hop2.id == seed || !universe.contains(hop2.id)) continue;
      ProvenanceSet path = first;
      path |= provenance_between(g, hop1.id, hop2.id, context);
      offer(hop2.id, hop1.score * hop2.score, path);
    }
  }
  std::vector<RecommendationItem> items;
  items.reserve(best.size());
  for (const auto& [id, entry] : best) {
    if (entry.first <= 0.0) continue;
    items.push_back({id, entry.first, {{std::string(context), entry.first}}, entry.second.names()});
  }
  rank(items, k);
  return items;
}

}  // namespace ctxrec
