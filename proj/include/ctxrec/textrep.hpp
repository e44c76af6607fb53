#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "ctxrec/corpus.hpp"
#include "ctxrec/error.hpp"

namespace ctxrec {

template <typename Scalar>
using DenseVec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using DenseVector = DenseVec<double>;

// Term-weighted document vector over a Vocabulary's id space. Entries are
// stored sorted by term id with no explicit zeros.
using SparseVector = Eigen::SparseVector<double>;

using TermId = std::uint32_t;

// Lowercased alphanumeric runs (Unicode-aware); everything else separates.
std::vector<std::string> tokenize(std::string_view text);

// Title followed by every sentence, in document order.
std::vector<std::string> document_tokens(const Document& doc);

class Vocabulary {
 public:
  struct Entry {
    std::string term;
    std::size_t doc_freq = 0;
    std::size_t count = 0;  // occurrences over the whole corpus
  };

  Vocabulary() = default;
  // Throws FormatError if the entries violate 1 <= df <= N or repeat a term.
  Vocabulary(std::vector<Entry> entries, std::size_t documents);

  // Terms receive ids in order of first occurrence.
  static Vocabulary build(std::span<const std::vector<std::string>> token_lists);

  std::size_t size() const { return entries_.size(); }
  std::size_t documents() const { return documents_; }
  std::size_t total_tokens() const { return total_tokens_; }

  std::optional<TermId> id(std::string_view term) const;
  const Entry& entry(TermId id) const { return entries_[id]; }
  std::span<const Entry> entries() const { return entries_; }

  // ln(N / df); zero for terms present in every document.
  double idf(TermId id) const {
    return std::log(static_cast<double>(documents_) / static_cast<double>(entries_[id].doc_freq));
  }
  // Corpus unigram probability; 0 for terms outside the vocabulary.
  double probability(std::string_view term) const;

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, TermId> ids_;
  std::size_t documents_ = 0;
  std::size_t total_tokens_ = 0;
};

struct TfidfIndex {
  Vocabulary vocab;
  std::vector<SparseVector> vectors;  // by corpus ordinal
};

// weight(t, d) = count(t, d) * ln(N / df(t)); df = N terms are omitted.
// Throws InvalidArgumentError on an empty corpus.
TfidfIndex build_tfidf(const Corpus& corpus);

// TF-IDF vector for an arbitrary token list using the vocabulary's idf.
// Out-of-vocabulary tokens are ignored.
SparseVector tfidf_vector(std::span<const std::string> tokens, const Vocabulary& vocab);

void save_index(const TfidfIndex& index, const std::filesystem::path& path);
TfidfIndex load_index(const std::filesystem::path& path);

/// Cosine similarity of two dense vectors; 0 when either norm is 0.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine(const Eigen::MatrixBase<DerivedA>& a,
                                 const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.size() != b.size()) {
    throw InvalidArgumentError("cosine: dimension mismatch (" + std::to_string(a.size()) +
                               " vs " + std::to_string(b.size()) + ")");
  }
  const Scalar na = a.norm();
  const Scalar nb = b.norm();
  if (na == Scalar(0) || nb == Scalar(0)) return Scalar(0);
  return a.dot(b) / (na * nb);
}

/// Cosine similarity of two sparse vectors; 0 when either norm is 0.
template <typename Scalar>
Scalar cosine(const Eigen::SparseVector<Scalar>& a, const Eigen::SparseVector<Scalar>& b) {
  if (a.size() != b.size()) {
    throw InvalidArgumentError("cosine: dimension mismatch (" + std::to_string(a.size()) +
                               " vs " + std::to_string(b.size()) + ")");
  }
  const Scalar na = a.norm();
  const Scalar nb = b.norm();
  if (na == Scalar(0) || nb == Scalar(0)) return Scalar(0);
  return a.dot(b) / (na * nb);
}

// Word vectors for SIF averaging. `smoothing` is the constant a in the
// weight a / (a + p(t)).
struct EmbeddingTable {
  std::unordered_map<std::string, DenseVector> vectors;
  Eigen::Index dim = 0;
  double smoothing = 1e-3;

  bool empty() const { return vectors.empty(); }
  const DenseVector* find(std::string_view key) const {
    auto it = vectors.find(std::string(key));
    return it == vectors.end() ? nullptr : &it->second;
  }
};

// `key v1 ... vd` per line; an optional leading `count dim` header line is
// recognised by its arity.
EmbeddingTable load_embeddings(std::istream& in);
EmbeddingTable load_embeddings(const std::filesystem::path& path);
// Writes a header line plus one line per key (ordered as given), with
// round-trip precision.
void save_embeddings(const std::filesystem::path& path, std::span<const std::string> keys,
                     const EmbeddingTable& table);

// Smooth inverse-frequency weighted average of the word vectors of the
// document's tokens. Tokens absent from the table are skipped; the zero
// vector is returned when none is present.
DenseVector sif_embed(const Document& doc, const Vocabulary& vocab, const EmbeddingTable& table);

struct SifOptions {
  // Subtract each vector's projection on the first singular vector of the
  // stacked document matrix.
  bool remove_common_component = false;
};

std::vector<DenseVector> sif_embed_all(const Corpus& corpus, const Vocabulary& vocab,
                                       const EmbeddingTable& table, SifOptions options = {});

// [ (1 - alpha) * text / |text| ; alpha * link / |link| ], zero parts stay zero.
DenseVector hybrid_concat(const DenseVector& text, const DenseVector& link, double alpha = 0.5);

struct Neighbor {
  std::string id;
  double score = 0.0;

  bool operator==(const Neighbor&) const = default;
};

/// The k vectors most cosine-similar to the seed's vector, seed excluded.
/// Ties are broken by ascending id.
template <typename Vec>
std::vector<Neighbor> top_k_neighbors(std::span<const std::string> ids, std::span<const Vec> vectors,
                                      std::string_view seed, std::size_t k) {
  if (ids.size() != vectors.size()) throw InvalidArgumentError("top_k_neighbors: ids/vectors size mismatch");
  if (k == 0) throw InvalidArgumentError("top_k_neighbors: k must be >= 1");
  const auto seed_it = std::find(ids.begin(), ids.end(), seed);
  if (seed_it == ids.end()) throw NotFoundError("unknown document '" + std::string(seed) + "'");
  const auto seed_idx = static_cast<std::size_t>(seed_it - ids.begin());

  std::vector<Neighbor> all;
  all.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i == seed_idx) continue;
    all.push_back({ids[i], static_cast<double>(cosine(vectors[seed_idx], vectors[i]))});
  }
  const auto by_rank = [](const Neighbor& a, const Neighbor& b) {
    return a.score != b.score ? a.score > b.score : a.id < b.id;
  };
  const std::size_t n = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end(), by_rank);
  all.resize(n);
  return all;
}

}  // namespace ctxrec
