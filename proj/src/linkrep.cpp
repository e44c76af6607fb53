#include "ctxrec/linkrep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "ctxrec/error.hpp"

namespace ctxrec {

namespace {

std::size_t intersection_size(const std::vector<NodeId>& a, const std::vector<NodeId>& b) {
  std::size_t n = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

double cosine_normalize(std::size_t count, std::size_t na, std::size_t nb) {
  if (na == 0 || nb == 0) return 0.0;
  return static_cast<double>(count) / std::sqrt(static_cast<double>(na) * static_cast<double>(nb));
}

std::pair<NodeId, NodeId> require_pair(const CitationGraph& g, std::string_view a, std::string_view b) {
  if (a == b) throw InvalidArgumentError("link similarity needs two distinct documents, got '" + std::string(a) + "' twice");
  return {g.require(a), g.require(b)};
}

// Best proximity weight between any marker of `citing` to a and any to b.
double best_proximity(const CitationGraph& g, NodeId citing, NodeId a, NodeId b) {
  double best = 0.0;
  const auto edges = g.out_edges(citing);
  for (const auto& ea : edges) {
    if (ea.target != a) continue;
    for (const auto& eb : edges) {
      if (eb.target != b) continue;
      best = std::max(best, proximity_weight(proximity(ea.pos, eb.pos)));
    }
  }
  return best;
}

}  // namespace

std::optional<NodeId> CitationGraph::node(std::string_view id) const {
  auto it = ids_.find(std::string(id));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

NodeId CitationGraph::require(std::string_view id) const {
  if (auto n = node(id)) return *n;
  throw NotFoundError("unknown document '" + std::string(id) + "'");
}

std::vector<NodeId> CitationGraph::references(NodeId n) const {
  std::vector<NodeId> refs;
  for (const auto& e : out_[n]) {
    if (e.target != n) refs.push_back(e.target);
  }
  std::sort(refs.begin(), refs.end());
  refs.erase(std::unique(refs.begin(), refs.end()), refs.end());
  return refs;
}

std::vector<NodeId> CitationGraph::citing_documents(NodeId n) const {
  std::vector<NodeId> citing;
  for (const auto& e : in_[n]) {
    if (e.citing != n) citing.push_back(e.citing);
  }
  std::sort(citing.begin(), citing.end());
  citing.erase(std::unique(citing.begin(), citing.end()), citing.end());
  return citing;
}

CitationGraph build_graph(const Corpus& corpus) {
  CitationGraph g;
  g.document_count_ = corpus.size();
  const auto intern = [&g](const std::string& id) {
    auto [it, inserted] = g.ids_.emplace(id, static_cast<NodeId>(g.names_.size()));
    if (inserted) {
      g.names_.push_back(id);
      g.out_.emplace_back();
      g.in_.emplace_back();
    }
    return it->second;
  };
  for (const auto& doc : corpus.documents()) intern(doc.id);
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    const auto citing = static_cast<NodeId>(d);
    for (const auto& m : corpus.at(d).citations) {
      const NodeId target = intern(m.target);
      g.out_[citing].push_back({target, m.pos});
      g.in_[target].push_back({citing, m.pos});
    }
  }
  return g;
}

CountSimilarity bibliographic_coupling(const CitationGraph& g, std::string_view a, std::string_view b) {
  const auto [na, nb] = require_pair(g, a, b);
  const auto ra = g.references(na);
  const auto rb = g.references(nb);
  const std::size_t count = intersection_size(ra, rb);
  return {count, cosine_normalize(count, ra.size(), rb.size())};
}

CountSimilarity cocitation(const CitationGraph& g, std::string_view a, std::string_view b) {
  const auto [na, nb] = require_pair(g, a, b);
  const auto ca = g.citing_documents(na);
  const auto cb = g.citing_documents(nb);
  const std::size_t count = intersection_size(ca, cb);
  return {count, cosine_normalize(count, ca.size(), cb.size())};
}

CpiSimilarity cpi(const CitationGraph& g, std::string_view a, std::string_view b) {
  const auto [na, nb] = require_pair(g, a, b);
  const auto ca = g.citing_documents(na);
  const auto cb = g.citing_documents(nb);
  std::vector<NodeId> both;
  std::set_intersection(ca.begin(), ca.end(), cb.begin(), cb.end(), std::back_inserter(both));
  if (both.empty()) return {};
  double raw = 0.0;
  for (NodeId z : both) raw += best_proximity(g, z, na, nb);
  return {raw, raw / static_cast<double>(both.size())};
}

WeightedGraph WeightedGraph::from_edges(std::vector<std::tuple<std::string, std::string, double>> edges) {
  WeightedGraph w;
  for (auto& [a, b, weight] : edges) {
    if (a == b) throw InvalidArgumentError("weighted graph: self-loop on '" + a + "'");
    if (!(weight > 0.0) || !std::isfinite(weight)) {
      throw InvalidArgumentError("weighted graph: non-positive weight on '" + a + "' - '" + b + "'");
    }
    if (b < a) std::swap(a, b);
  }
  std::sort(edges.begin(), edges.end());
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (std::get<0>(edges[i]) == std::get<0>(edges[i - 1]) && std::get<1>(edges[i]) == std::get<1>(edges[i - 1])) {
      throw InvalidArgumentError("weighted graph: repeated edge '" + std::get<0>(edges[i]) + "' - '" +
                                 std::get<1>(edges[i]) + "'");
    }
  }
  for (const auto& [a, b, weight] : edges) {
    w.names_.push_back(a);
    w.names_.push_back(b);
  }
  std::sort(w.names_.begin(), w.names_.end());
  w.names_.erase(std::unique(w.names_.begin(), w.names_.end()), w.names_.end());
  for (std::size_t i = 0; i < w.names_.size(); ++i) w.ids_.emplace(w.names_[i], static_cast<NodeId>(i));
  w.adjacency_.resize(w.names_.size());
  w.edges_.reserve(edges.size());
  for (const auto& [a, b, weight] : edges) {
    const NodeId na = w.ids_.at(a);
    const NodeId nb = w.ids_.at(b);
    w.edges_.push_back({na, nb, weight});
    w.adjacency_[na].push_back({nb, weight});
    w.adjacency_[nb].push_back({na, weight});
  }
  for (auto& adj : w.adjacency_) {
    std::sort(adj.begin(), adj.end(), [](const Neighbor& x, const Neighbor& y) { return x.node < y.node; });
  }
  return w;
}

std::optional<NodeId> WeightedGraph::node(std::string_view id) const {
  auto it = ids_.find(std::string(id));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

double WeightedGraph::weight(std::string_view a, std::string_view b) const {
  const auto na = node(a);
  const auto nb = node(b);
  if (!na || !nb) return 0.0;
  for (const auto& n : adjacency_[*na]) {
    if (n.node == *nb) return n.weight;
  }
  return 0.0;
}

WeightedGraph build_weighted_graph(const CitationGraph& g) {
  // Keyed by citation-graph node pair (lo, hi).
  std::map<std::pair<NodeId, NodeId>, double> acc;
  for (NodeId z = 0; z < g.document_count(); ++z) {
    std::vector<NodeId> targets;
    for (const auto& e : g.out_edges(z)) {
      if (e.target != z) targets.push_back(e.target);
    }
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    for (std::size_t i = 0; i < targets.size(); ++i) {
      for (std::size_t j = i + 1; j < targets.size(); ++j) {
        acc[{targets[i], targets[j]}] += best_proximity(g, z, targets[i], targets[j]);
      }
    }
  }
  std::vector<std::tuple<std::string, std::string, double>> edges;
  edges.reserve(acc.size());
  for (const auto& [pair, weight] : acc) edges.emplace_back(g.name(pair.first), g.name(pair.second), weight);
  return WeightedGraph::from_edges(std::move(edges));
}

void export_weighted_graph(const WeightedGraph& w, std::ostream& out) {
  char buf[64];
  for (const auto& e : w.edges()) {
    const auto& a = w.name(e.a);
    const auto& b = w.name(e.b);
    if (a.find_first_of(" \t\r\n") != std::string::npos || b.find_first_of(" \t\r\n") != std::string::npos) {
      throw FormatError("weighted graph export: node id contains whitespace");
    }
    std::snprintf(buf, sizeof buf, "%.6f", e.weight);
    out << a << ' ' << b << ' ' << buf << '\n';
  }
}

void export_weighted_graph(const WeightedGraph& w, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  export_weighted_graph(w, out);
}

WeightedGraph import_weighted_graph(std::istream& in) {
  std::vector<std::tuple<std::string, std::string, double>> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(line);
    std::string a, b, extra;
    double weight = 0.0;
    if (!(fields >> a)) continue;
    if (!(fields >> b >> weight) || (fields >> extra)) {
      throw FormatError("weighted graph line " + std::to_string(lineno) + " is malformed");
    }
    edges.emplace_back(std::move(a), std::move(b), weight);
  }
  try {
    return WeightedGraph::from_edges(std::move(edges));
  } catch (const InvalidArgumentError& e) {
    throw FormatError(e.what());
  }
}

WeightedGraph import_weighted_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  return import_weighted_graph(in);
}

}  // namespace ctxrec
