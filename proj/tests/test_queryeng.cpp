#include <doctest.h>

#include <map>
#include <set>

#include "ctxrec/queryeng.hpp"
#include "support/fixtures.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace ctxrec;
using ctxrec::testing::data_path;

namespace {

const ContextSet kMicro({"method", "resource"});
const ContextSet kScholarly({"background", "method", "resource", "findings"});

ContextGraph micro_graph() { return from_annotations(ingest_jsonl(data_path("micro.jsonl")), kMicro); }

const std::vector<std::string> kMicroDocs = {"zhao2013", "cortes1995", "farber2019"};

std::vector<std::string> ids_of(const std::vector<RecommendationItem>& items) {
  std::vector<std::string> out;
  for (const auto& i : items) out.push_back(i.id);
  return out;
}

}  // namespace

TEST_CASE("query grammar") {
  const AnalogicalQuery q = parse_query("seed=zhao2013 +method -resource k=5", kMicro);
  CHECK(q.seed == "zhao2013");
  CHECK(q.require == std::vector<std::string>{"method"});
  CHECK(q.exclude == std::vector<std::string>{"resource"});
  CHECK(q.k == 5);
  CHECK(q.tau_sim == 0.5);
  CHECK(q.tau_dis == 0.2);

  const AnalogicalQuery r = parse_query("  -method tau_dis=0.05\tseed=x   tau_sim=0.75 ", kMicro);
  CHECK(r.seed == "x");
  CHECK(r.require.empty());
  CHECK(r.tau_sim == 0.75);
  CHECK(r.tau_dis == 0.05);
  CHECK(r.k == 10);
  CHECK(parse_query("seed=x +method +method", kMicro).require.size() == 1);

  CHECK_THROWS_AS(parse_query("seed=x +method -method", kMicro), InvalidArgumentError);
  CHECK_THROWS_AS(parse_query("seed=x +outcome", kMicro), UnknownContextError);
  CHECK_THROWS_AS(parse_query("+method", kMicro), InvalidArgumentError);
  CHECK_THROWS_AS(parse_query("seed=x", kMicro), InvalidArgumentError);
  CHECK_THROWS_AS(parse_query("seed=x +method k=0", kMicro), InvalidArgumentError);
  CHECK_THROWS_AS(parse_query("seed=x +method k=two", kMicro), InvalidArgumentError);
  CHECK_THROWS_AS(parse_query("seed=x +method tau_sim=0.5x", kMicro), InvalidArgumentError);
  CHECK_THROWS_AS(parse_query("seed=x +method colour=red", kMicro), InvalidArgumentError);
  CHECK_THROWS_AS(parse_query("seed=x seed=y +method", kMicro), InvalidArgumentError);
  CHECK_THROWS_AS(parse_query("seed=x + ", kMicro), InvalidArgumentError);
  CHECK_THROWS_AS(parse_query("seed=x method", kMicro), InvalidArgumentError);
}

TEST_CASE("answers on the three document fixture") {
  const ContextGraph g = micro_graph();
  const auto method = answer(g, kMicroDocs, parse_query("seed=zhao2013 +method", kMicro));
  CHECK(ids_of(method) == std::vector<std::string>{"cortes1995"});
  CHECK(method[0].score == 1.0);
  CHECK(method[0].matched == std::vector<ContextScore>{{"method", 1.0}});
  CHECK(method[0].provenance == std::vector<std::string>{"annotation"});

  const auto resource = answer(g, kMicroDocs, parse_query("seed=zhao2013 +resource -method", kMicro));
  CHECK(ids_of(resource) == std::vector<std::string>{"farber2019"});

  const auto only_exclude = answer(g, kMicroDocs, parse_query("seed=zhao2013 -method", kMicro));
  CHECK(ids_of(only_exclude) == std::vector<std::string>{"farber2019"});
  CHECK(only_exclude[0].score == 1.0);

  CHECK(answer(g, kMicroDocs, parse_query("seed=cortes1995 +resource", kMicro)).empty());
  CHECK_THROWS_AS(answer(g, kMicroDocs, parse_query("seed=nobody +method", kMicro)), NotFoundError);
}

TEST_CASE("answer equals the filter-then-sort oracle") {
  Rng rng(100);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(29);
    const ContextSet& contexts = trial % 2 ? kScholarly : kMicro;
    const ContextGraph g = ctxrec::testing::random_context_graph(rng, n, contexts, 0.1 + 0.3 * rng.uniform());
    const std::vector<ContextEdge> edges(g.edges().begin(), g.edges().end());
    const auto docs = ctxrec::testing::doc_ids(n);
    const auto seed = docs[rng.below(n)];
    const AnalogicalQuery q = ctxrec::testing::random_query(rng, seed, contexts);
    const auto got = answer(g, docs, q);
    CHECK(ctxrec::testing::same_items(got, ctxrec::testing::oracle_answer(edges, docs, q)));

    for (const auto& item : got) {
      for (const auto& c : q.require) CHECK(sim(g, seed, item.id, c) >= q.tau_sim);
      for (const auto& c : q.exclude) CHECK(sim(g, seed, item.id, c) < q.tau_dis);
      for (const auto& m : item.matched) CHECK(m.score >= q.tau_sim);
    }
    CHECK(answer(g, docs, q) == got);
  }
}

TEST_CASE("raising tau_sim never enlarges the answer") {
  Rng rng(101);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(29);
    const ContextGraph g = ctxrec::testing::random_context_graph(rng, n, kScholarly, 0.3);
    const auto docs = ctxrec::testing::doc_ids(n);
    AnalogicalQuery q = ctxrec::testing::random_query(rng, docs[rng.below(n)], kScholarly);
    q.k = n;
    const auto low = ids_of(answer(g, docs, q));
    q.tau_sim += rng.uniform(0.0, 0.5);
    const auto high = ids_of(answer(g, docs, q));
    const std::set<std::string> low_set(low.begin(), low.end());
    for (const auto& id : high) CHECK(low_set.contains(id));
  }
}

TEST_CASE("diverse recommendations") {
  SUBCASE("fixture covers both contexts") {
    const auto items = recommend_diverse(micro_graph(), kMicroDocs, "zhao2013", 2);
    REQUIRE(items.size() == 2);
    std::set<std::string> ids, contexts;
    for (const auto& i : items) {
      ids.insert(i.id);
      contexts.insert(i.matched.at(0).context);
    }
    CHECK(ids == std::set<std::string>{"cortes1995", "farber2019"});
    CHECK(contexts == std::set<std::string>{"method", "resource"});
  }
  SUBCASE("single context degenerates to its top-k") {
    ContextGraph g(kMicro);
    g.add({"s", "a", "method", 0.4, Provenance::Segment});
    g.add({"b", "s", "method", 0.9, Provenance::Segment});
    g.add({"s", "c", "method", 0.7, Provenance::Segment});
    const std::vector<std::string> docs = {"s", "a", "b", "c"};
    CHECK(ids_of(recommend_diverse(g, docs, "s", 2)) == std::vector<std::string>{"b", "c"});
    CHECK(ids_of(recommend_diverse(g, docs, "s", 10)) == std::vector<std::string>{"b", "c", "a"});
  }
  SUBCASE("rounds start with the best remaining candidate") {
    ContextGraph g(kMicro);
    g.add({"s", "a", "method", 0.5, Provenance::Segment});
    g.add({"s", "b", "method", 0.4, Provenance::Segment});
    g.add({"s", "x", "resource", 0.9, Provenance::Segment});
    g.add({"s", "y", "resource", 0.1, Provenance::Segment});
    g.add({"s", "a", "resource", 0.8, Provenance::Segment});
    const std::vector<std::string> docs = {"s", "a", "b", "x", "y"};
    const auto items = recommend_diverse(g, docs, "s", 10);
    CHECK(ids_of(items) == std::vector<std::string>{"x", "a", "b", "y"});
    CHECK(items[1].matched.at(0).context == "method");
    CHECK(items[2].matched.at(0).context == "method");
  }
  SUBCASE("properties on random graphs") {
    Rng rng(102);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 2 + rng.below(29);
      const ContextGraph g = ctxrec::testing::random_context_graph(rng, n, kScholarly, 0.05 + 0.2 * rng.uniform());
      const std::vector<ContextEdge> edges(g.edges().begin(), g.edges().end());
      const auto docs = ctxrec::testing::doc_ids(n);
      const auto seed = docs[rng.below(n)];
      const std::size_t k = 1 + rng.below(12);
      const auto items = recommend_diverse(g, docs, seed, k);

      std::map<std::string, std::set<std::string>> neighbours;
      std::set<std::string> reachable;
      for (const auto& c : kScholarly.labels()) {
        for (const auto& d : docs) {
          if (d != seed && ctxrec::testing::oracle_sim(edges, seed, d, c) > 0) {
            neighbours[c].insert(d);
            reachable.insert(d);
          }
        }
      }
      CHECK(items.size() == std::min(k, reachable.size()));

      std::set<std::string> ids, used;
      std::map<std::string, double> last_score;
      for (const auto& item : items) {
        CHECK(ids.insert(item.id).second);
        REQUIRE(item.matched.size() == 1);
        const auto& c = item.matched[0].context;
        used.insert(c);
        CHECK(item.score == ctxrec::testing::oracle_sim(edges, seed, item.id, c));
        if (last_score.contains(c)) CHECK(item.score <= last_score[c]);
        last_score[c] = item.score;
      }
      std::set<std::string> first;
      for (std::size_t i = 0; i < std::min(k, used.size()); ++i) first.insert(items[i].matched[0].context);
      CHECK(first.size() == std::min(k, used.size()));
      if (items.size() < k) {
        // A context that never contributed had all its neighbours taken.
        for (const auto& [c, nbs] : neighbours) {
          if (used.contains(c)) continue;
          for (const auto& d : nbs) CHECK(ids.contains(d));
        }
      }
      if (!items.empty()) {
        double best = 0.0;
        for (const auto& e : edges) {
          if (e.source == seed || e.target == seed) best = std::max(best, e.score);
        }
        CHECK(items[0].score == best);
      }
    }
  }
  SUBCASE("disjoint neighbourhoods cover every context first") {
    Rng rng(103);
    for (int trial = 0; trial < 100; ++trial) {
      ContextGraph g(kScholarly);
      std::vector<std::string> docs = {"s"};
      std::set<std::string> with_neighbours;
      for (std::size_t c = 0; c < kScholarly.size(); ++c) {
        const std::size_t m = rng.below(4);
        for (std::size_t i = 0; i < m; ++i) {
          const std::string id = kScholarly.label(c) + std::to_string(i);
          docs.push_back(id);
          g.add({"s", id, kScholarly.label(c), 0.05 + 0.95 * rng.uniform(), Provenance::Classifier});
          with_neighbours.insert(kScholarly.label(c));
        }
      }
      const std::size_t k = 1 + rng.below(8);
      const auto items = recommend_diverse(g, docs, "s", k);
      const std::size_t head = std::min(k, with_neighbours.size());
      std::set<std::string> contexts;
      for (std::size_t i = 0; i < head; ++i) contexts.insert(items.at(i).matched[0].context);
      CHECK(contexts.size() == head);
    }
  }
  CHECK_THROWS_AS(recommend_diverse(micro_graph(), kMicroDocs, "nobody", 2), NotFoundError);
}

TEST_CASE("focused recommendations") {
  SUBCASE("two-hop product") {
    ContextGraph g(kMicro);
    g.add({"seed", "a", "method", 0.9, Provenance::Segment});
    g.add({"b", "a", "method", 0.8, Provenance::Classifier});
    g.add({"seed", "c", "resource", 1.0, Provenance::Annotation});
    const std::vector<std::string> docs = {"seed", "a", "b", "c"};
    const auto items = recommend_focused(g, docs, "seed", "method", 10);
    REQUIRE(items.size() == 2);
    CHECK(items[0].id == "a");
    CHECK(items[1].id == "b");
    CHECK(std::abs(items[1].score - 0.72) < 1e-12);
    CHECK(items[1].provenance == std::vector<std::string>{"segment", "classifier"});
  }
  SUBCASE("direct edge beats a weaker path") {
    ContextGraph g(kMicro);
    g.add({"s", "m", "method", 0.9, Provenance::Segment});
    g.add({"m", "d", "method", 0.9, Provenance::Segment});
    g.add({"s", "d", "method", 0.5, Provenance::Annotation});
    const std::vector<std::string> docs = {"s", "m", "d"};
    const auto items = recommend_focused(g, docs, "s", "method", 10);
    REQUIRE(items.size() == 2);
    CHECK(items[1].id == "d");
    CHECK(items[1].score == 0.9 * 0.9);
    CHECK(items[1].provenance == std::vector<std::string>{"segment"});
  }
  SUBCASE("fixture") {
    const auto items = recommend_focused(micro_graph(), kMicroDocs, "zhao2013", "method", 10);
    CHECK(ids_of(items) == std::vector<std::string>{"cortes1995"});
    CHECK_THROWS_AS(recommend_focused(micro_graph(), kMicroDocs, "zhao2013", "outcome", 10), UnknownContextError);
    CHECK_THROWS_AS(recommend_focused(micro_graph(), kMicroDocs, "nobody", "method", 10), NotFoundError);
  }
  SUBCASE("path enumeration oracle") {
    Rng rng(104);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 2 + rng.below(29);
      const ContextGraph g = ctxrec::testing::random_context_graph(rng, n, kScholarly, 0.05 + 0.2 * rng.uniform());
      const std::vector<ContextEdge> edges(g.edges().begin(), g.edges().end());
      const auto all = ctxrec::testing::doc_ids(n);
      const auto seed = all[rng.below(n)];
      std::vector<std::string> docs;
      for (const auto& d : all) {
        if (d == seed || rng.uniform() < 0.8) docs.push_back(d);
      }
      const auto& c = kScholarly.label(rng.below(kScholarly.size()));
      const std::size_t k = 1 + rng.below(15);
      const auto got = recommend_focused(g, docs, seed, c, k);
      CHECK(ctxrec::testing::same_items(got, ctxrec::testing::oracle_focused(edges, docs, seed, c, k)));
      for (const auto& item : got) {
        CHECK(item.score > 0.0);
        CHECK(item.score <= 1.0);
      }
    }
  }
}

TEST_CASE("query validation") {
  AnalogicalQuery q;
  q.seed = "x";
  CHECK_THROWS_AS(q.validate(kMicro), InvalidArgumentError);
  q.require = {"method"};
  CHECK_NOTHROW(q.validate(kMicro));
  q.exclude = {"method"};
  CHECK_THROWS_AS(q.validate(kMicro), InvalidArgumentError);
  q.exclude = {"outcome"};
  CHECK_THROWS_AS(q.validate(kMicro), UnknownContextError);
  q.exclude.clear();
  q.k = 0;
  CHECK_THROWS_AS(q.validate(kMicro), InvalidArgumentError);
}
