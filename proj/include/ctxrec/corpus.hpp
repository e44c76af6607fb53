#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace ctxrec {

using Paragraph = std::vector<std::string>;

struct Section {
  std::string heading;
  std::vector<Paragraph> paragraphs;

  bool operator==(const Section&) const = default;
};

// Address of one sentence inside a document.
struct SentencePos {
  std::size_t section = 0;
  std::size_t paragraph = 0;
  std::size_t sentence = 0;

  bool operator==(const SentencePos&) const = default;
};

struct CitationMarker {
  std::string target;
  SentencePos pos;
  // Set by the corpus: true iff `target` is not a document of the corpus.
  bool dangling = false;

  bool operator==(const CitationMarker&) const = default;
};

struct Annotation {
  std::string context;
  std::string target;

  bool operator==(const Annotation&) const = default;
};

struct Document {
  std::string id;
  std::string title;
  std::vector<Section> sections;
  std::vector<CitationMarker> citations;
  std::vector<Annotation> annotations;

  const std::string& sentence(const SentencePos& pos) const {
    return sections[pos.section].paragraphs[pos.paragraph][pos.sentence];
  }

  bool operator==(const Document&) const = default;
};

struct IngestReport {
  std::size_t documents = 0;
  std::size_t citations = 0;
  std::size_t dangling = 0;
};

struct CorpusStats {
  std::size_t documents = 0;
  std::size_t sections = 0;
  std::size_t paragraphs = 0;
  std::size_t sentences = 0;
  std::size_t citations = 0;
  std::size_t dangling = 0;
  std::size_t annotations = 0;

  bool operator==(const CorpusStats&) const = default;
};

// Immutable document collection. Documents keep their ingestion order;
// a document's position in that order is its ordinal.
class Corpus {
 public:
  Corpus() = default;

  // Validates every document and recomputes the dangling flags.
  // Throws FormatError on duplicate ids or structural violations.
  static Corpus from_documents(std::vector<Document> documents);

  std::size_t size() const { return documents_.size(); }
  bool empty() const { return documents_.empty(); }

  std::span<const Document> documents() const { return documents_; }
  const Document& at(std::size_t ordinal) const { return documents_.at(ordinal); }

  // nullptr when the id is unknown.
  const Document* find(std::string_view id) const;
  // Throws NotFoundError when the id is unknown.
  const Document& get(std::string_view id) const;
  std::optional<std::size_t> ordinal(std::string_view id) const;
  bool contains(std::string_view id) const { return ordinal(id).has_value(); }

  // Ids in ordinal order.
  const std::vector<std::string>& ids() const { return ids_; }

  bool operator==(const Corpus& other) const { return documents_ == other.documents_; }

 private:
  std::vector<Document> documents_;
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

// Throws FormatError with line numbers for malformed records, duplicate ids
// and out-of-range citation markers.
Corpus ingest_jsonl(const std::filesystem::path& path, IngestReport* report = nullptr);
Corpus ingest_jsonl(std::istream& in, IngestReport* report = nullptr);

// On-disk layout: manifest.json (format, version, document count, crc32 of
// documents.jsonl) next to documents.jsonl.
inline constexpr int kCorpusLayoutVersion = 1;
void save(const Corpus& corpus, const std::filesystem::path& dir);
Corpus load(const std::filesystem::path& dir);

CorpusStats stats(const Corpus& corpus);

// JSONL record <-> Document. Dangling flags are not part of the record.
nlohmann::json to_json(const Document& doc);
Document document_from_json(const nlohmann::json& record);

}  // namespace ctxrec
