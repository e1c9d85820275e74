#include "intentgate/wire.hpp"

#include "intentgate/error.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

namespace intentgate::wire {

json embed_request(const std::vector<std::string>& texts) { return {{"texts", texts}}; }

json embed_response(const std::vector<std::vector<double>>& embeddings) {
  const std::size_t dim = embeddings.empty() ? 0 : embeddings.front().size();
  return {{"dim", dim}, {"embeddings", embeddings}};
}

std::vector<std::vector<double>> parse_embed_response(const json& body, std::size_t expected_count) {
  if (!body.is_object() || !body.contains("embeddings") || !body["embeddings"].is_array()) {
    throw BackendError("embed response: missing 'embeddings' array");
  }
  std::vector<std::vector<double>> out;
  try {
    out = body["embeddings"].get<std::vector<std::vector<double>>>();
  } catch (const json::exception& e) {
    throw BackendError(std::string("embed response: ") + e.what());
  }
  if (out.size() != expected_count) {
    throw BackendError("embed response: expected " + std::to_string(expected_count) + " embeddings, got " +
                       std::to_string(out.size()));
  }
  if (!body.contains("dim") || !body["dim"].is_number_unsigned()) {
    throw BackendError("embed response: missing non-negative integer 'dim'");
  }
  const auto dim = body["dim"].get<std::size_t>();
  for (const auto& v : out) {
    if (v.size() != dim) throw BackendError("embed response: embedding length does not match 'dim'");
  }
  return out;
}

json generate_request(const GenerateRequest& request) {
  return {{"prompt", request.prompt}, {"max_tokens", request.max_tokens}, {"temperature", request.temperature}};
}

json generate_response(const std::string& text) { return {{"text", text}}; }

std::string parse_generate_response(const json& body) {
  if (!body.is_object() || !body.contains("text") || !body["text"].is_string()) {
    throw BackendError("generate response: missing 'text'");
  }
  return body["text"].get<std::string>();
}

json error_body(std::string_view code, std::string_view message) {
  return {{"error", {{"code", code}, {"message", message}}}};
}

std::string describe_error(int status, const std::string& body) {
  std::string detail = body;
  try {
    const auto j = json::parse(body);
    if (j.contains("error") && j["error"].is_object()) {
      detail = j["error"].value("code", std::string("error")) + ": " + j["error"].value("message", std::string());
    }
  } catch (const json::exception&) {
  }
  return "HTTP " + std::to_string(status) + " (" + detail + ")";
}

Endpoint parse_endpoint(const std::string& base_url) {
  const auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) throw InvalidArgument("backend url needs a scheme: '" + base_url + "'");
  const auto path_start = base_url.find('/', scheme_end + 3);
  Endpoint e;
  e.scheme_host_port = base_url.substr(0, path_start);
  if (path_start != std::string::npos) {
    e.path_prefix = base_url.substr(path_start);
    while (!e.path_prefix.empty() && e.path_prefix.back() == '/') e.path_prefix.pop_back();
  }
  return e;
}

namespace {

json post_json(const Endpoint& endpoint, const std::string& path, const json& body,
               std::chrono::milliseconds timeout) {
  httplib::Client client(endpoint.scheme_host_port);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  const auto full_path = endpoint.path_prefix + path;
  auto res = client.Post(full_path, body.dump(), "application/json");
  if (!res) {
    throw BackendError("POST " + endpoint.scheme_host_port + full_path + ": " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw BackendError("POST " + endpoint.scheme_host_port + full_path + ": " + describe_error(res->status, res->body));
  }
  try {
    return json::parse(res->body);
  } catch (const json::parse_error& e) {
    throw BackendError("POST " + full_path + ": malformed JSON response: " + e.what());
  }
}

}  // namespace

HttpEmbedBackend::HttpEmbedBackend(std::string base_url, std::chrono::milliseconds timeout)
    : base_url_(std::move(base_url)), endpoint_(parse_endpoint(base_url_)), timeout_(timeout) {}

std::vector<std::vector<double>> HttpEmbedBackend::embed(const std::vector<std::string>& texts) {
  return parse_embed_response(post_json(endpoint_, "/v1/embed", embed_request(texts), timeout_), texts.size());
}

HttpGenerateBackend::HttpGenerateBackend(std::string base_url, std::chrono::milliseconds timeout)
    : base_url_(std::move(base_url)), endpoint_(parse_endpoint(base_url_)), timeout_(timeout) {}

std::string HttpGenerateBackend::generate(const GenerateRequest& request) {
  return parse_generate_response(post_json(endpoint_, "/v1/generate", generate_request(request), timeout_));
}

namespace {

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

}  // namespace

BackendServer::BackendServer(std::shared_ptr<EmbedBackend> embedder, std::shared_ptr<GenerateBackend> generator)
    : embedder_(std::move(embedder)), generator_(std::move(generator)), server_(std::make_unique<httplib::Server>()) {
  server_->Post("/v1/embed", [this](const httplib::Request& req, httplib::Response& res) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::parse_error&) {
      return reply(res, 400, error_body("bad_request", "body is not valid JSON"));
    }
    if (!body.is_object() || !body.contains("texts") || !body["texts"].is_array()) {
      return reply(res, 400, error_body("bad_request", "'texts' must be an array of strings"));
    }
    if (body["texts"].empty()) return reply(res, 400, error_body("bad_request", "'texts' is empty"));
    std::vector<std::string> texts;
    for (const auto& t : body["texts"]) {
      if (!t.is_string()) return reply(res, 400, error_body("bad_request", "'texts' must be an array of strings"));
      texts.push_back(t.get<std::string>());
    }
    if (!embedder_) return reply(res, 501, error_body("not_implemented", "no embedding model loaded"));
    try {
      reply(res, 200, embed_response(embedder_->embed(texts)));
    } catch (const std::exception& e) {
      reply(res, 500, error_body("model_error", e.what()));
    }
  });

  server_->Post("/v1/generate", [this](const httplib::Request& req, httplib::Response& res) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::parse_error&) {
      return reply(res, 400, error_body("bad_request", "body is not valid JSON"));
    }
    if (!body.is_object() || !body.contains("prompt") || !body["prompt"].is_string()) {
      return reply(res, 400, error_body("bad_request", "'prompt' is required"));
    }
    GenerateRequest request;
    request.prompt = body["prompt"].get<std::string>();
    if (request.prompt.empty()) return reply(res, 400, error_body("bad_request", "'prompt' is empty"));
    if (body.contains("max_tokens")) {
      if (!body["max_tokens"].is_number_integer()) {
        return reply(res, 400, error_body("bad_request", "'max_tokens' must be an integer"));
      }
      request.max_tokens = body["max_tokens"].get<int>();
    }
    if (body.contains("temperature")) {
      if (!body["temperature"].is_number()) {
        return reply(res, 400, error_body("bad_request", "'temperature' must be a number"));
      }
      request.temperature = body["temperature"].get<double>();
    }
    if (!generator_) return reply(res, 501, error_body("not_implemented", "no generation model loaded"));
    try {
      reply(res, 200, generate_response(generator_->generate(request)));
    } catch (const std::exception& e) {
      reply(res, 500, error_body("model_error", e.what()));
    }
  });

  server_->Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, {{"status", "ok"}, {"ready", true}});
  });
}

BackendServer::~BackendServer() { stop(); }

int BackendServer::bind(const std::string& host, int port) {
  host_ = host;
  port_ = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (port_ < 0) throw Error("backend server: cannot bind " + host + ":" + std::to_string(port));
  return port_;
}

void BackendServer::listen() { server_->listen_after_bind(); }

void BackendServer::start() {
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void BackendServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string BackendServer::url() const { return "http://" + host_ + ":" + std::to_string(port_); }

}  // namespace intentgate::wire
