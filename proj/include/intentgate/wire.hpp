#pragma once

// Backend wire protocol:
//   POST /v1/embed    {"texts": ["..."]}                                  -> {"dim": d, "embeddings": [[...]]}
//   POST /v1/generate {"prompt": "...", "max_tokens": n, "temperature": t} -> {"text": "..."}
// Errors: {"error": {"code": "...", "message": "..."}} with an HTTP 4xx/5xx status.

#include "intentgate/backend.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <memory>
#include <string>
#include <thread>
#include <vector>

namespace httplib {
class Server;
}

namespace intentgate::wire {

using nlohmann::json;

json embed_request(const std::vector<std::string>& texts);
json embed_response(const std::vector<std::vector<double>>& embeddings);
std::vector<std::vector<double>> parse_embed_response(const json& body, std::size_t expected_count);

json generate_request(const GenerateRequest& request);
json generate_response(const std::string& text);
std::string parse_generate_response(const json& body);

json error_body(std::string_view code, std::string_view message);
// "code: message" from an error body, or the raw text if it is not one.
std::string describe_error(int status, const std::string& body);

struct Endpoint {
  std::string scheme_host_port;  // e.g. http://127.0.0.1:8000
  std::string path_prefix;       // e.g. "" or "/api"
};
Endpoint parse_endpoint(const std::string& base_url);

class HttpEmbedBackend final : public EmbedBackend {
 public:
  HttpEmbedBackend(std::string base_url, std::chrono::milliseconds timeout);
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;
  std::string describe() const override { return base_url_; }

 private:
  std::string base_url_;
  Endpoint endpoint_;
  std::chrono::milliseconds timeout_;
};

class HttpGenerateBackend final : public GenerateBackend {
 public:
  HttpGenerateBackend(std::string base_url, std::chrono::milliseconds timeout);
  std::string generate(const GenerateRequest& request) override;
  std::string describe() const override { return base_url_; }

 private:
  std::string base_url_;
  Endpoint endpoint_;
  std::chrono::milliseconds timeout_;
};

// Serves the wire protocol on top of in-process backends (mock models for local runs and tests).
class BackendServer {
 public:
  BackendServer(std::shared_ptr<EmbedBackend> embedder, std::shared_ptr<GenerateBackend> generator);
  ~BackendServer();
  BackendServer(const BackendServer&) = delete;
  BackendServer& operator=(const BackendServer&) = delete;

  // port 0 picks a free port; returns the bound port.
  int bind(const std::string& host, int port = 0);
  void listen();  // blocking
  void start();   // background thread
  void stop();
  int port() const noexcept { return port_; }
  std::string url() const;

 private:
  std::shared_ptr<EmbedBackend> embedder_;
  std::shared_ptr<GenerateBackend> generator_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::string host_;
  int port_ = 0;
};

}  // namespace intentgate::wire
