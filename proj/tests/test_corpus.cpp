#include <doctest.h>

#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "ctxrec/corpus.hpp"
#include "ctxrec/error.hpp"
#include "support/fixtures.hpp"
#include "support/generators.hpp"

using namespace ctxrec;
using ctxrec::testing::data_path;
using ctxrec::testing::TempDir;

namespace {

template <typename F>
std::string error_of(F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

// Direct recount over the documents, independent of stats().
CorpusStats recount(const Corpus& c) {
  CorpusStats s;
  for (const auto& d : c.documents()) {
    ++s.documents;
    for (const auto& sec : d.sections) {
      ++s.sections;
      for (const auto& p : sec.paragraphs) {
        ++s.paragraphs;
        s.sentences += p.size();
      }
    }
    for (const auto& m : d.citations) {
      ++s.citations;
      bool found = false;
      for (const auto& other : c.documents()) found = found || other.id == m.target;
      if (!found) ++s.dangling;
    }
    s.annotations += d.annotations.size();
  }
  return s;
}

}  // namespace

TEST_CASE("ingest the three document fixture") {
  IngestReport report;
  const Corpus c = ingest_jsonl(data_path("micro.jsonl"), &report);
  CHECK(c.size() == 3);
  CHECK(report.documents == 3);
  CHECK(report.citations == 1);
  CHECK(report.dangling == 0);
  CHECK(c.ids() == std::vector<std::string>{"zhao2013", "cortes1995", "farber2019"});

  const Document& zhao = c.get("zhao2013");
  CHECK(zhao.title.starts_with("Author name disambiguation"));
  REQUIRE(zhao.citations.size() == 1);
  CHECK(zhao.citations[0].target == "cortes1995");
  CHECK_FALSE(zhao.citations[0].dangling);
  CHECK(zhao.sentence(zhao.citations[0].pos).find("[cortes1995]") != std::string::npos);
  CHECK(zhao.annotations.size() == 2);
}

TEST_CASE("lookup by id") {
  const Corpus c = ingest_jsonl(data_path("micro.jsonl"));
  CHECK(&c.get("zhao2013") == &c.at(0));
  CHECK(c.find("missing") == nullptr);
  CHECK_THROWS_AS(c.get("missing"), NotFoundError);
  CHECK_FALSE(c.ordinal("missing").has_value());
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(c.get(c.ids()[i]).id == c.ids()[i]);
    CHECK(c.ordinal(c.ids()[i]) == i);
  }
}

TEST_CASE("duplicate ids are reported with both line numbers") {
  const std::string msg = error_of([] { ingest_jsonl(data_path("duplicate.jsonl")); });
  CHECK(msg.find("'a'") != std::string::npos);
  CHECK(msg.find("lines 1 and 3") != std::string::npos);
  CHECK_THROWS_AS(ingest_jsonl(data_path("duplicate.jsonl")), FormatError);

  std::vector<Document> docs(2);
  docs[0].id = docs[1].id = "x";
  docs[0].sections = docs[1].sections = {{"", {{"s"}}}};
  CHECK_THROWS_AS(Corpus::from_documents(docs), FormatError);
}

TEST_CASE("dangling citations are kept and flagged") {
  IngestReport report;
  const Corpus c = ingest_jsonl(data_path("dangling.jsonl"), &report);
  CHECK(report.dangling == 1);
  CHECK(report.citations == 2);
  const auto& cites = c.get("zhao2013").citations;
  REQUIRE(cites.size() == 2);
  CHECK(cites[1].target == "ghost");
  CHECK(cites[1].dangling);
  CHECK_FALSE(cites[0].dangling);
}

TEST_CASE("malformed input names the offending line") {
  SUBCASE("not json") {
    std::istringstream in("{\"id\":\"a\",\"sections\":[{\"paragraphs\":[[\"x\"]]}]}\n{oops\n");
    const std::string msg = error_of([&] { ingest_jsonl(in); });
    CHECK(msg.starts_with("line 2:"));
  }
  SUBCASE("missing sections") {
    std::istringstream in("{\"id\":\"a\"}\n");
    CHECK(error_of([&] { ingest_jsonl(in); }).starts_with("line 1:"));
  }
  SUBCASE("marker out of range") {
    std::istringstream in(
        "{\"id\":\"a\",\"sections\":[{\"paragraphs\":[[\"x\"]]}],"
        "\"citations\":[{\"target\":\"b\",\"section\":0,\"paragraph\":0,\"sentence\":3}]}\n");
    const std::string msg = error_of([&] { ingest_jsonl(in); });
    CHECK(msg.starts_with("line 1:"));
  }
  SUBCASE("empty paragraph") {
    std::istringstream in("{\"id\":\"a\",\"sections\":[{\"paragraphs\":[[]]}]}\n");
    CHECK_THROWS_AS(ingest_jsonl(in), FormatError);
  }
  SUBCASE("blank lines are skipped") {
    std::istringstream in("\n{\"id\":\"a\",\"sections\":[{\"paragraphs\":[[\"x\"]]}]}\n\n");
    CHECK(ingest_jsonl(in).size() == 1);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(ingest_jsonl(data_path("no_such_file.jsonl")), FormatError);
  }
}

TEST_CASE("save and load round trip") {
  TempDir dir;
  const Corpus c = ingest_jsonl(data_path("dangling.jsonl"));
  save(c, dir.path());
  const Corpus back = load(dir.path());
  CHECK(back == c);
  CHECK(back.get("zhao2013").citations[1].dangling);

  ctxrec::Rng rng(11);
  for (int i = 0; i < 20; ++i) {
    const Corpus r = ctxrec::testing::random_corpus(rng);
    TempDir d;
    save(r, d.path());
    CHECK(load(d.path()) == r);
  }
}

TEST_CASE("load rejects missing, corrupted and foreign layouts") {
  TempDir empty;
  CHECK_THROWS_AS(load(empty.path()), FormatError);

  TempDir dir;
  save(ingest_jsonl(data_path("micro.jsonl")), dir.path());
  const auto manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  nlohmann::json manifest = nlohmann::json::parse(in);
  in.close();

  SUBCASE("checksum byte flipped") {
    std::string sum = manifest["checksum"];
    sum[0] = sum[0] == '0' ? '1' : '0';
    manifest["checksum"] = sum;
    std::ofstream(manifest_path) << manifest.dump();
    const std::string msg = error_of([&] { load(dir.path()); });
    CHECK(msg.find("corrupted") != std::string::npos);
  }
  SUBCASE("documents file edited") {
    std::ofstream(dir / "documents.jsonl", std::ios::app) << "\n";
    CHECK_THROWS_AS(load(dir.path()), FormatError);
  }
  SUBCASE("version mismatch") {
    manifest["version"] = kCorpusLayoutVersion + 1;
    std::ofstream(manifest_path) << manifest.dump();
    CHECK(error_of([&] { load(dir.path()); }).find("version") != std::string::npos);
  }
}

TEST_CASE("stats") {
  CHECK(stats(ingest_jsonl(data_path("micro.jsonl"))).documents == 3);
  CHECK(stats(Corpus{}) == CorpusStats{});

  const auto micro = stats(ingest_jsonl(data_path("micro.jsonl")));
  CHECK(micro.sections == 7);
  CHECK(micro.annotations == 2);

  ctxrec::Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const Corpus c = ctxrec::testing::random_corpus(rng);
    CHECK(stats(c) == recount(c));
  }
}

TEST_CASE("non-dangling targets resolve") {
  ctxrec::Rng rng(5);
  for (int i = 0; i < 30; ++i) {
    const Corpus c = ctxrec::testing::random_corpus(rng);
    for (const auto& d : c.documents()) {
      for (const auto& m : d.citations) {
        CHECK(m.dangling == !c.contains(m.target));
        if (!m.dangling) CHECK(c.get(m.target).id == m.target);
      }
    }
  }
}

TEST_CASE("json record round trip") {
  const Corpus c = ingest_jsonl(data_path("micro.jsonl"));
  for (const auto& d : c.documents()) {
    Document back = document_from_json(to_json(d));
    CHECK(back == d);
  }
}
