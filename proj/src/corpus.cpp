#include "ctxrec/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <zlib.h>

#include "ctxrec/error.hpp"

namespace ctxrec {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifestFile = "manifest.json";
constexpr const char* kDocumentsFile = "documents.jsonl";
constexpr const char* kLayoutName = "ctxrec-corpus";

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

// Structural checks that do not depend on other documents.
void validate(const Document& doc) {
  if (doc.id.empty()) throw FormatError("document id is empty");
  if (doc.sections.empty()) throw FormatError("document '" + doc.id + "' has no sections");
  for (std::size_t s = 0; s < doc.sections.size(); ++s) {
    const auto& section = doc.sections[s];
    if (section.paragraphs.empty()) {
      throw FormatError("document '" + doc.id + "' section " + std::to_string(s) +
                        " has no paragraphs");
    }
    for (std::size_t p = 0; p < section.paragraphs.size(); ++p) {
      const auto& para = section.paragraphs[p];
      if (para.empty()) {
        throw FormatError("document '" + doc.id + "' section " + std::to_string(s) +
                          " paragraph " + std::to_string(p) + " has no sentences");
      }
      for (const auto& sentence : para) {
        if (is_blank(sentence)) {
          throw FormatError("document '" + doc.id + "' has an empty sentence in section " +
                            std::to_string(s) + " paragraph " + std::to_string(p));
        }
      }
    }
  }
  for (const auto& m : doc.citations) {
    if (m.target.empty()) throw FormatError("document '" + doc.id + "' has a citation without target");
    const bool ok = m.pos.section < doc.sections.size() &&
                    m.pos.paragraph < doc.sections[m.pos.section].paragraphs.size() &&
                    m.pos.sentence < doc.sections[m.pos.section].paragraphs[m.pos.paragraph].size();
    if (!ok) {
      throw FormatError("document '" + doc.id + "' citation to '" + m.target +
                        "' points outside the document (section " + std::to_string(m.pos.section) +
                        ", paragraph " + std::to_string(m.pos.paragraph) + ", sentence " +
                        std::to_string(m.pos.sentence) + ")");
    }
  }
  for (const auto& a : doc.annotations) {
    if (a.context.empty() || a.target.empty()) {
      throw FormatError("document '" + doc.id + "' has an incomplete annotation");
    }
  }
}

std::uint32_t crc32_of(std::string_view bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  crc = ::crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

std::string hex32(std::uint32_t v) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Corpus Corpus::from_documents(std::vector<Document> documents) {
  Corpus c;
  c.by_id_.reserve(documents.size());
  for (std::size_t i = 0; i < documents.size(); ++i) {
    validate(documents[i]);
    auto [it, inserted] = c.by_id_.emplace(documents[i].id, i);
    if (!inserted) {
      throw FormatError("duplicate document id '" + documents[i].id + "' (documents " +
                        std::to_string(it->second + 1) + " and " + std::to_string(i + 1) + ")");
    }
  }
  for (auto& doc : documents) {
    for (auto& m : doc.citations) m.dangling = !c.by_id_.contains(m.target);
  }
  c.ids_.reserve(documents.size());
  for (const auto& doc : documents) c.ids_.push_back(doc.id);
  c.documents_ = std::move(documents);
  return c;
}

const Document* Corpus::find(std::string_view id) const {
  auto o = ordinal(id);
  return o ? &documents_[*o] : nullptr;
}

const Document& Corpus::get(std::string_view id) const {
  if (const auto* doc = find(id)) return *doc;
  throw NotFoundError("unknown document '" + std::string(id) + "'");
}

std::optional<std::size_t> Corpus::ordinal(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

json to_json(const Document& doc) {
  json sections = json::array();
  for (const auto& s : doc.sections) {
    sections.push_back({{"heading", s.heading}, {"paragraphs", s.paragraphs}});
  }
  json citations = json::array();
  for (const auto& m : doc.citations) {
    citations.push_back({{"target", m.target},
                         {"section", m.pos.section},
                         {"paragraph", m.pos.paragraph},
                         {"sentence", m.pos.sentence}});
  }
  json annotations = json::array();
  for (const auto& a : doc.annotations) {
    annotations.push_back({{"context", a.context}, {"target", a.target}});
  }
  return {{"id", doc.id},
          {"title", doc.title},
          {"sections", std::move(sections)},
          {"citations", std::move(citations)},
          {"annotations", std::move(annotations)}};
}

Document document_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("record is not a JSON object");
  Document doc;
  doc.id = j.at("id").get<std::string>();
  doc.title = j.value("title", std::string{});
  for (const auto& s : j.at("sections")) {
    Section section;
    section.heading = s.value("heading", std::string{});
    section.paragraphs = s.at("paragraphs").get<std::vector<Paragraph>>();
    doc.sections.push_back(std::move(section));
  }
  if (j.contains("citations")) {
    for (const auto& c : j.at("citations")) {
      CitationMarker m;
      m.target = c.at("target").get<std::string>();
      m.pos.section = c.at("section").get<std::size_t>();
      m.pos.paragraph = c.at("paragraph").get<std::size_t>();
      m.pos.sentence = c.at("sentence").get<std::size_t>();
      doc.citations.push_back(std::move(m));
    }
  }
  if (j.contains("annotations")) {
    for (const auto& a : j.at("annotations")) {
      doc.annotations.push_back({a.at("context").get<std::string>(), a.at("target").get<std::string>()});
    }
  }
  return doc;
}

Corpus ingest_jsonl(std::istream& in, IngestReport* report) {
  std::vector<Document> docs;
  std::unordered_map<std::string, std::size_t> first_line;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_blank(line)) continue;
    Document doc;
    try {
      doc = document_from_json(json::parse(line));
      validate(doc);
    } catch (const json::exception& e) {
      throw FormatError("line " + std::to_string(lineno) + ": malformed record: " + e.what());
    } catch (const FormatError& e) {
      throw FormatError("line " + std::to_string(lineno) + ": " + e.what());
    }
    auto [it, inserted] = first_line.emplace(doc.id, lineno);
    if (!inserted) {
      throw FormatError("duplicate document id '" + doc.id + "' on lines " +
                        std::to_string(it->second) + " and " + std::to_string(lineno));
    }
    docs.push_back(std::move(doc));
  }
  Corpus corpus = Corpus::from_documents(std::move(docs));
  if (report) {
    const auto s = stats(corpus);
    *report = {s.documents, s.citations, s.dangling};
  }
  return corpus;
}

Corpus ingest_jsonl(const fs::path& path, IngestReport* report) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  return ingest_jsonl(in, report);
}

void save(const Corpus& corpus, const fs::path& dir) {
  fs::create_directories(dir);
  std::string body;
  for (const auto& doc : corpus.documents()) {
    body += to_json(doc).dump();
    body += '\n';
  }
  {
    std::ofstream out(dir / kDocumentsFile, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + (dir / kDocumentsFile).string());
    out << body;
  }
  json manifest = {{"format", kLayoutName},
                   {"version", kCorpusLayoutVersion},
                   {"documents", corpus.size()},
                   {"checksum", hex32(crc32_of(body))}};
  std::ofstream out(dir / kManifestFile, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + (dir / kManifestFile).string());
  out << manifest.dump(2) << '\n';
}

Corpus load(const fs::path& dir) {
  if (!fs::exists(dir / kManifestFile) || !fs::exists(dir / kDocumentsFile)) {
    throw FormatError("no corpus layout in " + dir.string() + " (missing manifest or documents)");
  }
  json manifest;
  try {
    manifest = json::parse(read_file(dir / kManifestFile));
  } catch (const json::exception& e) {
    throw FormatError("corrupt corpus manifest: " + std::string(e.what()));
  }
  if (manifest.value("format", std::string{}) != kLayoutName) {
    throw FormatError("not a corpus manifest: " + (dir / kManifestFile).string());
  }
  if (manifest.value("version", -1) != kCorpusLayoutVersion) {
    throw FormatError("corpus layout version mismatch: expected " +
                      std::to_string(kCorpusLayoutVersion) + ", found " +
                      manifest.value("version", json(nullptr)).dump());
  }
  const std::string body = read_file(dir / kDocumentsFile);
  if (manifest.value("checksum", std::string{}) != hex32(crc32_of(body))) {
    throw FormatError("corpus checksum mismatch in " + dir.string() + " (corrupted files)");
  }
  std::istringstream in(body);
  Corpus corpus = ingest_jsonl(in);
  if (manifest.value("documents", std::size_t{0}) != corpus.size()) {
    throw FormatError("corpus manifest document count does not match documents file");
  }
  return corpus;
}

CorpusStats stats(const Corpus& corpus) {
  CorpusStats s;
  s.documents = corpus.size();
  for (const auto& doc : corpus.documents()) {
    s.sections += doc.sections.size();
    for (const auto& section : doc.sections) {
      s.paragraphs += section.paragraphs.size();
      for (const auto& para : section.paragraphs) s.sentences += para.size();
    }
    s.citations += doc.citations.size();
    s.dangling += static_cast<std::size_t>(
        std::count_if(doc.citations.begin(), doc.citations.end(), [](const auto& m) { return m.dangling; }));
    s.annotations += doc.annotations.size();
  }
  return s;
}

}  // namespace ctxrec
