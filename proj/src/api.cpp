#include "ctxrec/api.hpp"

#include <charconv>
#include <thread>

#include <httplib.h>

#include "ctxrec/error.hpp"

namespace ctxrec {

using nlohmann::json;

namespace {

ApiError error_for(const std::exception& e) {
  if (dynamic_cast<const NotFoundError*>(&e)) return {404, "unknown_document", e.what()};
  if (dynamic_cast<const UnknownContextError*>(&e)) return {422, "unknown_context", e.what()};
  if (dynamic_cast<const InvalidArgumentError*>(&e)) return {400, "bad_query", e.what()};
  if (dynamic_cast<const json::exception*>(&e)) return {400, "bad_query", e.what()};
  return {500, "internal", e.what()};
}

ApiResponse fail(const ApiError& e) { return {e.status, e.to_json()}; }

std::vector<std::string_view> split_path(std::string_view path) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (start < path.size()) {
    if (path[start] == '/') {
      ++start;
      continue;
    }
    const auto end = path.find('/', start);
    parts.push_back(path.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return parts;
}

std::size_t parse_k(const std::map<std::string, std::string>& params) {
  auto it = params.find("k");
  if (it == params.end()) return 10;
  std::size_t k = 0;
  const auto& s = it->second;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), k);
  if (ec != std::errc() || ptr != s.data() + s.size() || k == 0) {
    throw InvalidArgumentError("k must be a positive integer, got '" + s + "'");
  }
  return k;
}

AnalogicalQuery query_from_json(const json& body, const ContextSet& contexts) {
  if (!body.is_object()) throw InvalidArgumentError("query body must be a JSON object");
  AnalogicalQuery q;
  if (!body.contains("seed") || !body.at("seed").is_string()) throw InvalidArgumentError("query: missing seed");
  q.seed = body.at("seed").get<std::string>();
  q.require = body.value("require", std::vector<std::string>{});
  q.exclude = body.value("exclude", std::vector<std::string>{});
  if (body.contains("k")) {
    const auto& k = body.at("k");
    if (!k.is_number_integer() || k.get<long long>() < 1) throw InvalidArgumentError("query: k must be >= 1");
    q.k = k.get<std::size_t>();
  }
  if (body.contains("tau_sim")) q.tau_sim = body.at("tau_sim").get<double>();
  if (body.contains("tau_dis")) q.tau_dis = body.at("tau_dis").get<double>();
  q.validate(contexts);
  return q;
}

}  // namespace

json ApiError::to_json() const { return {{"error", {{"code", code}, {"message", message}}}}; }

const std::vector<RouteSpec>& Api::routes() {
  static const std::vector<RouteSpec> table = {
      {"GET", "/health", "Liveness probe", {}, {}},
      {"GET", "/contexts", "Configured similarity contexts", {}, {}},
      {"GET", "/documents/{id}", "One document", {}, {404}},
      {"GET", "/documents/{id}/recommendations", "Diverse or focused recommendations for a seed",
       {"mode", "context", "k"}, {400, 404, 422}},
      {"POST", "/query", "Analogical query", {}, {400, 404, 422}},
      {"GET", "/openapi.json", "This description", {}, {}},
  };
  return table;
}

json Api::openapi_describe() {
  json paths = json::object();
  const json error_schema = {{"type", "object"},
                             {"properties",
                              {{"error",
                                {{"type", "object"},
                                 {"properties", {{"code", {{"type", "string"}}}, {"message", {{"type", "string"}}}}}}}}}};
  const std::map<int, std::string> codes = {
      {400, "bad_query"}, {404, "unknown_document"}, {422, "unknown_context"}, {500, "internal"}};
  for (const auto& r : routes()) {
    json op = {{"summary", r.summary}, {"parameters", json::array()}};
    if (r.path.find("{id}") != std::string::npos) {
      op["parameters"].push_back({{"name", "id"}, {"in", "path"}, {"required", true}, {"schema", {{"type", "string"}}}});
    }
    for (const auto& p : r.query_params) {
      json schema = p == "k" ? json{{"type", "integer"}, {"minimum", 1}} : json{{"type", "string"}};
      if (p == "mode") schema["enum"] = {"diverse", "focused"};
      op["parameters"].push_back({{"name", p}, {"in", "query"}, {"required", false}, {"schema", schema}});
    }
    if (r.method == "POST" && r.path == "/query") {
      op["requestBody"] = {
          {"required", true},
          {"content",
           {{"application/json",
             {{"schema",
               {{"type", "object"},
                {"required", {"seed"}},
                {"properties",
                 {{"seed", {{"type", "string"}}},
                  {"require", {{"type", "array"}, {"items", {{"type", "string"}}}}},
                  {"exclude", {{"type", "array"}, {"items", {{"type", "string"}}}}},
                  {"k", {{"type", "integer"}, {"minimum", 1}}},
                  {"tau_sim", {{"type", "number"}}},
                  {"tau_dis", {{"type", "number"}}}}}}}}}}}};
    }
    op["responses"]["200"] = {{"description", "OK"}};
    for (int status : r.errors) {
      op["responses"][std::to_string(status)] = {
          {"description", codes.at(status)},
          {"content", {{"application/json", {{"schema", error_schema}}}}}};
    }
    op["responses"]["500"] = {{"description", "internal"}};
    std::string method = r.method;
    for (auto& ch : method) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    paths[r.path][method] = std::move(op);
  }
  return {{"openapi", "3.0.3"},
          {"info", {{"title", "ctxrec contextual recommender API"}, {"version", "1.0.0"}}},
          {"paths", std::move(paths)},
          {"x-error-codes", {{"400", "bad_query"}, {"404", "unknown_document"}, {"422", "unknown_context"}, {"500", "internal"}}}};
}

ApiResponse Api::handle(std::string_view method, std::string_view path,
                        const std::map<std::string, std::string>& params, std::string_view body) const {
  try {
    return dispatch(method, path, params, body);
  } catch (const std::exception& e) {
    return fail(error_for(e));
  }
}

ApiResponse Api::dispatch(std::string_view method, std::string_view path,
                          const std::map<std::string, std::string>& params, std::string_view body) const {
  const auto parts = split_path(path);
  const Engine& engine = *engine_;
  if (method == "GET") {
    if (parts.size() == 1 && parts[0] == "health") return {200, {{"status", "ok"}}};
    if (parts.size() == 1 && parts[0] == "contexts") return {200, {{"contexts", engine.contexts().labels()}}};
    if (parts.size() == 1 && parts[0] == "openapi.json") return {200, openapi_describe()};
    if (parts.size() == 2 && parts[0] == "documents") return {200, to_json(engine.corpus().get(parts[1]))};
    if (parts.size() == 3 && parts[0] == "documents" && parts[2] == "recommendations") {
      const std::string seed(parts[1]);
      engine.corpus().get(seed);
      const std::size_t k = parse_k(params);
      const auto mode_it = params.find("mode");
      const std::string mode = mode_it == params.end() ? "diverse" : mode_it->second;
      json out = {{"seed", seed}, {"mode", mode}};
      if (mode == "diverse") {
        out["items"] = engine.to_json(engine.diverse(seed, k));
      } else if (mode == "focused") {
        const auto ctx = params.find("context");
        if (ctx == params.end() || ctx->second.empty()) throw InvalidArgumentError("mode=focused needs a context");
        out["context"] = ctx->second;
        out["items"] = engine.to_json(engine.focused(seed, ctx->second, k));
      } else {
        throw InvalidArgumentError("unknown mode '" + mode + "' (expected diverse or focused)");
      }
      return {200, std::move(out)};
    }
  } else if (method == "POST" && parts.size() == 1 && parts[0] == "query") {
    json parsed;
    try {
      parsed = json::parse(body);
    } catch (const json::exception& e) {
      throw InvalidArgumentError("query body is not valid JSON: " + std::string(e.what()));
    }
    const AnalogicalQuery q = query_from_json(parsed, engine.contexts());
    return {200, {{"items", engine.to_json(engine.query(q))}}};
  }
  return fail({404, "not_found", "no route for " + std::string(method) + " " + std::string(path)});
}

struct HttpServer::Impl {
  int bind() {
    const int port = options.port == 0 ? server.bind_to_any_port(options.host)
                                       : (server.bind_to_port(options.host, options.port) ? options.port : -1);
    if (port <= 0) throw Error("cannot bind " + options.host + ":" + std::to_string(options.port));
    return port;
  }

  Api api;
  ServerOptions options;
  httplib::Server server;
  std::thread thread;

  Impl(std::shared_ptr<const Engine> engine, ServerOptions opts) : api(std::move(engine)), options(std::move(opts)) {
    const auto adapter = [this](const httplib::Request& req, httplib::Response& res) {
      std::map<std::string, std::string> params;
      for (const auto& [key, value] : req.params) params.emplace(key, value);
      const ApiResponse r = api.handle(req.method, req.path, params, req.body);
      res.status = r.status;
      res.set_content(r.body.dump(), "application/json");
    };
    server.Get(".*", adapter);
    server.Post(".*", adapter);
    server.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    if (options.cors) {
      server.set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
      });
    }
  }
};

HttpServer::HttpServer(std::shared_ptr<const Engine> engine, ServerOptions options)
    : impl_(std::make_unique<Impl>(std::move(engine), std::move(options))) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start() {
  port_ = impl_->bind();
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port_;
}

void HttpServer::run() {
  port_ = impl_->bind();
  impl_->server.listen_after_bind();
}

void HttpServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace ctxrec
