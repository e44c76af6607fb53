#include "ctxrec/cli.hpp"

#include <filesystem>
#include <iostream>
#include <memory>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ctxrec/api.hpp"
#include "ctxrec/engine.hpp"
#include "ctxrec/error.hpp"

namespace ctxrec {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void print_items(std::ostream& out, const Engine& engine, const std::vector<RecommendationItem>& items, bool as_json) {
  if (as_json) {
    out << engine.to_json(items).dump() << '\n';
    return;
  }
  std::size_t rank = 0;
  for (const auto& item : items) {
    out << ++rank << '\t' << item.id << '\t' << item.score;
    for (const auto& m : item.matched) out << '\t' << m.context << '=' << m.score;
    out << '\n';
  }
  if (items.empty()) out << "(no results)\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Contextual literature recommender engine", "ctxrec"};
  app.require_subcommand(1);
  app.fallthrough();
  bool as_json = false;
  app.add_flag("--json", as_json, "Machine-readable JSON on stdout");

  std::string jsonl, dir, pairs, query_text, seed, config, embeddings, mode = "diverse", context, host = "127.0.0.1";
  std::size_t k = 10;
  int port = 8080;
  GraphEmbeddingConfig embed_cfg;
  TrainOptions train_opts;

  auto* ingest = app.add_subcommand("ingest", "Validate a JSONL corpus and store it in an engine directory");
  ingest->add_option("jsonl", jsonl, "Corpus file, one JSON document per line")->required();
  ingest->add_option("dir", dir, "Engine directory")->required();

  auto* index = app.add_subcommand("index", "Build the TF-IDF index, citation graph and CPI-weighted graph");
  index->add_option("dir", dir)->required();

  auto* embed = app.add_subcommand("embed-graph", "Train node embeddings over the CPI-weighted graph");
  embed->add_option("dir", dir)->required();
  embed->add_option("--dims", embed_cfg.dims);
  embed->add_option("--walks", embed_cfg.walks_per_node);
  embed->add_option("--walk-length", embed_cfg.walk_length);
  embed->add_option("--window", embed_cfg.window);
  embed->add_option("--negatives", embed_cfg.negatives);
  embed->add_option("--epochs", embed_cfg.epochs);
  embed->add_option("--lr", embed_cfg.learning_rate);
  embed->add_option("--seed", embed_cfg.seed);

  auto* train_cmd = app.add_subcommand("train", "Train the pairwise context classifier");
  train_cmd->add_option("dir", dir)->required();
  train_cmd->add_option("pairs", pairs, "JSONL training pairs {a, b, label}")->required();
  train_cmd->add_option("--config", config, "Context configuration (JSON)");
  train_cmd->add_option("--embeddings", embeddings, "Word embedding file for SIF text vectors");
  train_cmd->add_option("--negative-ratio", train_opts.negative_ratio);
  train_cmd->add_option("--alpha", train_opts.alpha, "Link share in the hybrid document vector");
  train_cmd->add_option("--epochs", train_opts.softmax.epochs);
  train_cmd->add_option("--lr", train_opts.softmax.learning_rate);
  train_cmd->add_option("--l2", train_opts.softmax.l2);
  train_cmd->add_option("--batch-size", train_opts.softmax.batch_size);
  train_cmd->add_option("--seed", train_opts.softmax.seed);

  auto* build = app.add_subcommand("build-context", "Build and merge the context graph from every edge source");
  build->add_option("dir", dir)->required();
  build->add_option("--config", config, "Context configuration (JSON)");

  auto* query = app.add_subcommand("query", "Answer an analogical query");
  query->add_option("dir", dir)->required();
  query->add_option("query", query_text, "e.g. \"seed=doc +method -resource k=5\"")->required();

  auto* recommend = app.add_subcommand("recommend", "Diverse or focused recommendations for a seed");
  recommend->add_option("dir", dir)->required();
  recommend->add_option("seed", seed)->required();
  recommend->add_option("--mode", mode)->check(CLI::IsMember({"diverse", "focused"}));
  recommend->add_option("--context", context);
  recommend->add_option("-k", k)->check(CLI::PositiveNumber);

  auto* serve = app.add_subcommand("serve", "Serve the HTTP JSON API");
  serve->add_option("dir", dir)->required();
  serve->add_option("--host", host);
  serve->add_option("--port", port)->check(CLI::Range(1, 65535));

  std::vector<std::string> argv_storage{"ctxrec"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return 1;
  }

  try {
    if (*ingest) {
      IngestReport report;
      const Corpus corpus = ingest_jsonl(fs::path(jsonl), &report);
      save(corpus, dir);
      if (as_json) {
        out << json{{"documents", report.documents}, {"citations", report.citations}, {"dangling", report.dangling}}.dump()
            << '\n';
      } else {
        out << "ingested " << report.documents << " documents, " << report.citations << " citations ("
            << report.dangling << " dangling)\n";
      }
    } else if (*index) {
      const auto s = build_index(dir);
      if (as_json) {
        out << json{{"documents", s.documents}, {"terms", s.terms}, {"citations", s.citations},
                    {"weighted_edges", s.weighted_edges}}.dump()
            << '\n';
      } else {
        out << "indexed " << s.documents << " documents, " << s.terms << " terms, " << s.weighted_edges
            << " co-citation edges\n";
      }
    } else if (*embed) {
      const auto e = embed_graph(dir, embed_cfg);
      if (as_json) {
        out << json{{"nodes", e.nodes.size()}, {"dims", e.vectors.cols()}}.dump() << '\n';
      } else {
        out << "embedded " << e.nodes.size() << " nodes in " << e.vectors.cols() << " dimensions\n";
      }
    } else if (*train_cmd) {
      if (!config.empty()) train_opts.config = config;
      if (!embeddings.empty()) train_opts.embeddings = embeddings;
      const auto s = train_classifier(dir, pairs, train_opts);
      if (as_json) {
        out << json{{"positives", s.positives}, {"negatives", s.negatives}, {"final_loss", s.final_loss},
                    {"train_accuracy", s.metrics.accuracy}, {"macro_f1", s.metrics.macro_f1}}.dump()
            << '\n';
      } else {
        out << "trained on " << s.positives << " pairs + " << s.negatives << " negatives; loss " << s.final_loss
            << ", train accuracy " << s.metrics.accuracy << ", macro-F1 " << s.metrics.macro_f1 << '\n';
      }
    } else if (*build) {
      BuildContextOptions opts;
      if (!config.empty()) opts.config = config;
      const auto s = build_context(dir, opts);
      if (as_json) {
        out << json{{"annotation", s.annotation}, {"segment", s.segment}, {"citation_context", s.citation_context},
                    {"classifier", s.classifier}, {"merged", s.merged}}.dump()
            << '\n';
      } else {
        out << "context edges: annotation " << s.annotation << ", segment " << s.segment << ", citation-context "
            << s.citation_context << ", classifier " << (s.used_classifier ? std::to_string(s.classifier) : "skipped")
            << "; merged " << s.merged << '\n';
      }
    } else if (*query) {
      const Engine engine = Engine::open(dir);
      print_items(out, engine, engine.query(parse_query(query_text, engine.contexts())), as_json);
    } else if (*recommend) {
      const Engine engine = Engine::open(dir);
      if (mode == "focused") {
        if (context.empty()) throw InvalidArgumentError("--mode focused needs --context");
        print_items(out, engine, engine.focused(seed, context, k), as_json);
      } else {
        print_items(out, engine, engine.diverse(seed, k), as_json);
      }
    } else if (*serve) {
      auto engine = std::make_shared<const Engine>(Engine::open(dir));
      HttpServer server(engine, {host, port, true});
      out << "serving on http://" << host << ':' << port << std::endl;
      server.run();
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace ctxrec
