#include "ctxrec/textrep.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <Eigen/SVD>
#include <nlohmann/json.hpp>
#include <unicode/uchar.h>
#include <unicode/utf8.h>

namespace ctxrec {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  const auto* s = reinterpret_cast<const uint8_t*>(text.data());
  const auto length = static_cast<int32_t>(text.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(s, i, length, c);
    if (c >= 0 && u_isalnum(c)) {
      const UChar32 lower = u_tolower(c);
      char buf[U8_MAX_LENGTH];
      int32_t n = 0;
      U8_APPEND_UNSAFE(buf, n, lower);
      current.append(buf, static_cast<std::size_t>(n));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::vector<std::string> document_tokens(const Document& doc) {
  std::vector<std::string> tokens = tokenize(doc.title);
  for (const auto& section : doc.sections) {
    for (const auto& para : section.paragraphs) {
      for (const auto& sentence : para) {
        auto t = tokenize(sentence);
        tokens.insert(tokens.end(), std::make_move_iterator(t.begin()), std::make_move_iterator(t.end()));
      }
    }
  }
  return tokens;
}

Vocabulary::Vocabulary(std::vector<Entry> entries, std::size_t documents)
    : entries_(std::move(entries)), documents_(documents) {
  ids_.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (e.doc_freq < 1 || e.doc_freq > documents_ || e.count < e.doc_freq) {
      throw FormatError("vocabulary entry '" + e.term + "' has inconsistent frequencies");
    }
    if (!ids_.emplace(e.term, static_cast<TermId>(i)).second) {
      throw FormatError("vocabulary repeats term '" + e.term + "'");
    }
    total_tokens_ += e.count;
  }
}

Vocabulary Vocabulary::build(std::span<const std::vector<std::string>> token_lists) {
  std::vector<Entry> entries;
  std::unordered_map<std::string, TermId> ids;
  std::vector<std::size_t> last_doc;
  for (std::size_t d = 0; d < token_lists.size(); ++d) {
    for (const auto& token : token_lists[d]) {
      auto [it, inserted] = ids.emplace(token, static_cast<TermId>(entries.size()));
      if (inserted) {
        entries.push_back({token, 0, 0});
        last_doc.push_back(SIZE_MAX);
      }
      auto& e = entries[it->second];
      ++e.count;
      if (last_doc[it->second] != d) {
        last_doc[it->second] = d;
        ++e.doc_freq;
      }
    }
  }
  return Vocabulary(std::move(entries), token_lists.size());
}

std::optional<TermId> Vocabulary::id(std::string_view term) const {
  auto it = ids_.find(std::string(term));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

double Vocabulary::probability(std::string_view term) const {
  const auto t = id(term);
  if (!t || total_tokens_ == 0) return 0.0;
  return static_cast<double>(entries_[*t].count) / static_cast<double>(total_tokens_);
}

SparseVector tfidf_vector(std::span<const std::string> tokens, const Vocabulary& vocab) {
  std::map<TermId, std::size_t> counts;
  for (const auto& token : tokens) {
    if (auto t = vocab.id(token)) ++counts[*t];
  }
  SparseVector v(static_cast<Eigen::Index>(vocab.size()));
  v.reserve(static_cast<Eigen::Index>(counts.size()));
  for (const auto& [term, count] : counts) {
    const double w = static_cast<double>(count) * vocab.idf(term);
    if (w != 0.0) v.insert(static_cast<Eigen::Index>(term)) = w;
  }
  return v;
}

TfidfIndex build_tfidf(const Corpus& corpus) {
  if (corpus.empty()) throw InvalidArgumentError("build_tfidf: corpus is empty");
  std::vector<std::vector<std::string>> tokens;
  tokens.reserve(corpus.size());
  for (const auto& doc : corpus.documents()) tokens.push_back(document_tokens(doc));
  TfidfIndex index{Vocabulary::build(tokens), {}};
  index.vectors.reserve(tokens.size());
  for (const auto& t : tokens) index.vectors.push_back(tfidf_vector(t, index.vocab));
  return index;
}

void save_index(const TfidfIndex& index, const fs::path& path) {
  json terms = json::array();
  for (const auto& e : index.vocab.entries()) terms.push_back({e.term, e.doc_freq, e.count});
  json vectors = json::array();
  for (const auto& v : index.vectors) {
    json entries = json::array();
    for (SparseVector::InnerIterator it(v); it; ++it) entries.push_back({it.index(), it.value()});
    vectors.push_back(std::move(entries));
  }
  json j = {{"format", "ctxrec-tfidf"},
            {"version", 1},
            {"documents", index.vocab.documents()},
            {"terms", std::move(terms)},
            {"vectors", std::move(vectors)}};
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << j.dump() << '\n';
}

TfidfIndex load_index(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    const json j = json::parse(in);
    if (j.value("format", std::string{}) != "ctxrec-tfidf" || j.value("version", 0) != 1) {
      throw FormatError("unsupported index file " + path.string());
    }
    std::vector<Vocabulary::Entry> entries;
    for (const auto& t : j.at("terms")) {
      entries.push_back({t.at(0).get<std::string>(), t.at(1).get<std::size_t>(), t.at(2).get<std::size_t>()});
    }
    TfidfIndex index{Vocabulary(std::move(entries), j.at("documents").get<std::size_t>()), {}};
    const auto dim = static_cast<Eigen::Index>(index.vocab.size());
    for (const auto& entries_json : j.at("vectors")) {
      SparseVector v(dim);
      for (const auto& e : entries_json) {
        const auto term = e.at(0).get<Eigen::Index>();
        if (term < 0 || term >= dim) throw FormatError("index vector term id out of range");
        v.insert(term) = e.at(1).get<double>();
      }
      index.vectors.push_back(std::move(v));
    }
    return index;
  } catch (const json::exception& e) {
    throw FormatError("malformed index file " + path.string() + ": " + e.what());
  }
}

EmbeddingTable load_embeddings(std::istream& in) {
  EmbeddingTable table;
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(line);
    std::vector<std::string> tokens;
    for (std::string tok; fields >> tok;) tokens.push_back(std::move(tok));
    if (tokens.empty()) continue;
    if (first) {
      first = false;
      // "count dim" header: exactly two integer fields.
      if (tokens.size() == 2 && tokens[0].find_first_not_of("0123456789") == std::string::npos &&
          tokens[1].find_first_not_of("0123456789") == std::string::npos) {
        continue;
      }
    }
    if (tokens.size() < 2) throw FormatError("embedding line " + std::to_string(lineno) + " has no values");
    const auto dim = static_cast<Eigen::Index>(tokens.size() - 1);
    if (table.dim == 0) table.dim = dim;
    if (dim != table.dim) {
      throw FormatError("embedding line " + std::to_string(lineno) + " has dimension " +
                        std::to_string(dim) + ", expected " + std::to_string(table.dim));
    }
    DenseVector v(dim);
    for (Eigen::Index k = 0; k < dim; ++k) {
      const auto& tok = tokens[static_cast<std::size_t>(k) + 1];
      char* end = nullptr;
      v[k] = std::strtod(tok.c_str(), &end);
      if (end != tok.c_str() + tok.size() || !std::isfinite(v[k])) {
        throw FormatError("embedding line " + std::to_string(lineno) + ": bad value '" + tok + "'");
      }
    }
    table.vectors.insert_or_assign(tokens[0], std::move(v));
  }
  return table;
}

EmbeddingTable load_embeddings(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  return load_embeddings(in);
}

void save_embeddings(const fs::path& path, std::span<const std::string> keys, const EmbeddingTable& table) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << keys.size() << ' ' << table.dim << '\n';
  char buf[32];
  for (const auto& key : keys) {
    const auto* v = table.find(key);
    if (!v) throw InvalidArgumentError("save_embeddings: no vector for '" + key + "'");
    if (key.find_first_of(" \t\n") != std::string::npos) {
      throw FormatError("save_embeddings: key '" + key + "' contains whitespace");
    }
    out << key;
    for (Eigen::Index k = 0; k < v->size(); ++k) {
      std::snprintf(buf, sizeof buf, " %.17g", (*v)[k]);
      out << buf;
    }
    out << '\n';
  }
}

DenseVector sif_embed(const Document& doc, const Vocabulary& vocab, const EmbeddingTable& table) {
  if (table.empty()) throw InvalidArgumentError("sif_embed: embedding table is empty");
  const double a = table.smoothing;
  DenseVector sum = DenseVector::Zero(table.dim);
  std::size_t used = 0;
  for (const auto& token : document_tokens(doc)) {
    const auto* v = table.find(token);
    if (!v) continue;
    sum += (a / (a + vocab.probability(token))) * *v;
    ++used;
  }
  if (used > 0) sum /= static_cast<double>(used);
  return sum;
}

std::vector<DenseVector> sif_embed_all(const Corpus& corpus, const Vocabulary& vocab,
                                       const EmbeddingTable& table, SifOptions options) {
  std::vector<DenseVector> out;
  out.reserve(corpus.size());
  for (const auto& doc : corpus.documents()) out.push_back(sif_embed(doc, vocab, table));
  if (options.remove_common_component && !out.empty()) {
    Eigen::MatrixXd stacked(static_cast<Eigen::Index>(out.size()), table.dim);
    for (std::size_t i = 0; i < out.size(); ++i) stacked.row(static_cast<Eigen::Index>(i)) = out[i].transpose();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(stacked, Eigen::ComputeThinV);
    const DenseVector u = svd.matrixV().col(0);
    for (auto& v : out) v -= u * u.dot(v);
  }
  return out;
}

DenseVector hybrid_concat(const DenseVector& text, const DenseVector& link, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgumentError("hybrid_concat: alpha must lie in [0, 1]");
  if (!text.allFinite() || !link.allFinite()) throw InvalidArgumentError("hybrid_concat: non-finite input");
  DenseVector out(text.size() + link.size());
  const double nt = text.norm();
  const double nl = link.norm();
  out.head(text.size()) = nt > 0.0 ? DenseVector((1.0 - alpha) / nt * text) : DenseVector::Zero(text.size());
  out.tail(link.size()) = nl > 0.0 ? DenseVector(alpha / nl * link) : DenseVector::Zero(link.size());
  return out;
}

}  // namespace ctxrec
