#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "evidex/pipeline.hpp"

namespace httplib {
class Server;
}

namespace evidex::service {

struct Response {
  int status = 200;
  std::string body;  // JSON
  std::vector<std::pair<std::string, std::string>> headers;
};

// HTTP-independent request handling; mount() wires it to a server. The
// source list is served from the config right away, verification waits for
// the engine.
class Service {
 public:
  explicit Service(pipeline::Config config);

  // Blocking load of embeddings and the rest; failures are kept and reported
  // by /api/health and /api/verify.
  void load();
  void set_engine(std::shared_ptr<const pipeline::Engine> engine);

  Response verify(const std::string& request_body) const;
  Response sources() const;
  Response health() const;

  void mount(httplib::Server& server) const;

  const pipeline::Config& config() const { return config_; }

 private:
  std::shared_ptr<const pipeline::Engine> engine() const;

  pipeline::Config config_;
  std::shared_ptr<sources::SourceRegistry> registry_;
  mutable std::mutex mu_;
  std::shared_ptr<const pipeline::Engine> engine_;
  std::optional<std::string> load_error_;
};

inline constexpr int kDefaultPort = 8080;

// Binds host:port, loads the engine in the background and serves until the
// process is stopped. NetworkError if the port cannot be bound.
void serve(const pipeline::Config& config, const std::string& host, int port);

}  // namespace evidex::service
