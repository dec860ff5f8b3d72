#include "evidex/service.hpp"

#include <thread>

#include "httplib.h"

namespace evidex::service {

namespace {

using json = nlohmann::json;

Response json_response(int status, const json& body) { return {status, body.dump(), {}}; }

Response error_response(int status, const std::string& message, json extra = json::object()) {
  extra["error"] = message;
  return json_response(status, extra);
}

}  // namespace

Service::Service(pipeline::Config config)
    : config_(std::move(config)), registry_(std::make_shared<sources::SourceRegistry>(config_.sources)) {}

void Service::load() {
  try {
    set_engine(pipeline::Engine::from_config(config_, registry_));
  } catch (const std::exception& e) {
    std::lock_guard lock(mu_);
    load_error_ = e.what();
  }
}

void Service::set_engine(std::shared_ptr<const pipeline::Engine> engine) {
  std::lock_guard lock(mu_);
  engine_ = std::move(engine);
  load_error_.reset();
}

std::shared_ptr<const pipeline::Engine> Service::engine() const {
  std::lock_guard lock(mu_);
  return engine_;
}

Response Service::verify(const std::string& request_body) const {
  json req;
  try {
    req = json::parse(request_body);
  } catch (const json::parse_error&) {
    return error_response(400, "request body is not valid JSON");
  }
  if (!req.is_object()) return error_response(400, "request body must be a JSON object");
  for (const auto& [key, value] : req.items()) {
    if (key != "url" && key != "html" && key != "sources") return error_response(400, "unknown field '" + key + "'");
  }
  const bool has_url = req.contains("url") && !req["url"].is_null();
  const bool has_html = req.contains("html") && !req["html"].is_null();
  if (has_url == has_html) return error_response(400, "exactly one of url or html is required");
  if ((has_url && !req["url"].is_string()) || (has_html && !req["html"].is_string()))
    return error_response(400, "url and html must be strings");
  if (!req.contains("sources") || !req["sources"].is_array() || req["sources"].empty())
    return error_response(400, "sources must be a non-empty array of source ids");

  pipeline::VerifyInput input;
  for (const auto& s : req["sources"]) {
    if (!s.is_string()) return error_response(400, "sources must be a non-empty array of source ids");
    input.sources.push_back(s.get<std::string>());
  }
  json valid = json::array();
  for (const auto& id : registry_->ids()) valid.push_back(id);
  for (const auto& id : input.sources) {
    auto spec = registry_->find(id);
    if (!spec) return error_response(400, "unknown source '" + id + "'", {{"valid_sources", valid}});
    if (!spec->enabled) return error_response(400, "source '" + id + "' is disabled", {{"valid_sources", valid}});
  }
  if (has_url) input.url = req["url"].get<std::string>();
  if (has_html) input.html = req["html"].get<std::string>();

  auto eng = engine();
  if (!eng) {
    std::lock_guard lock(mu_);
    if (load_error_) return error_response(500, "engine failed to load: " + *load_error_);
    Response r = error_response(503, "embeddings are still loading");
    r.headers.emplace_back("Retry-After", "5");
    return r;
  }

  try {
    auto report = eng->verify(input);
    return json_response(200, pipeline::to_json(report, registry_.get()));
  } catch (const InputError& e) {
    return error_response(400, e.what(), {{"valid_sources", valid}});
  } catch (const ExtractionError& e) {
    return error_response(422, std::string("extraction failed: ") + e.what());
  } catch (const EmptyDocumentError& e) {
    return error_response(422, "extraction failed: no in-vocabulary words in the article");
  } catch (const NetworkError& e) {
    return error_response(422, std::string("cannot fetch article: ") + e.what());
  } catch (const FetchError& e) {
    json failures = json::array();
    for (const auto& f : e.failures()) failures.push_back({{"source_id", f.source_id}, {"message", f.message}});
    return error_response(502, "all sources failed", {{"failures", failures}});
  } catch (const Error& e) {
    return error_response(500, e.what());
  }
}

Response Service::sources() const {
  json list = json::array();
  for (const auto& s : *registry_->snapshot())
    list.push_back({{"id", s.id}, {"display_name", s.display_name}, {"enabled", s.enabled}});
  return json_response(200, list);
}

Response Service::health() const {
  auto eng = engine();
  std::lock_guard lock(mu_);
  json body{{"status", load_error_ ? "error" : "ok"},
            {"embeddings_loaded", eng != nullptr},
            {"vocab_size", eng ? eng->table().vocab_size() : 0}};
  if (load_error_) body["error"] = *load_error_;
  return json_response(200, body);
}

void Service::mount(httplib::Server& server) const {
  const std::string origin = config_.cors_origin;
  auto send = [origin](httplib::Response& res, const Response& r) {
    res.status = r.status;
    for (const auto& [k, v] : r.headers) res.set_header(k, v);
    res.set_header("Access-Control-Allow-Origin", origin);
    res.set_content(r.body, "application/json");
  };
  server.Post("/api/verify",
              [this, send](const httplib::Request& req, httplib::Response& res) { send(res, verify(req.body)); });
  server.Get("/api/sources", [this, send](const httplib::Request&, httplib::Response& res) { send(res, sources()); });
  server.Get("/api/health", [this, send](const httplib::Request&, httplib::Response& res) { send(res, health()); });
  server.Options(R"(/api/.*)", [origin](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
    res.set_header("Access-Control-Allow-Origin", origin);
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
  });
}

void serve(const pipeline::Config& config, const std::string& host, int port) {
  Service service(config);
  httplib::Server server;
  service.mount(server);
  if (!server.bind_to_port(host, port)) throw NetworkError("cannot listen on " + host + ":" + std::to_string(port));
  std::thread loader([&service] { service.load(); });
  server.listen_after_bind();
  loader.join();
}

}  // namespace evidex::service
