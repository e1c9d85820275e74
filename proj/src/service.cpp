#include "intentgate/service.hpp"

#include "intentgate/error.hpp"
#include "intentgate/io.hpp"
#include "intentgate/wire.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

namespace intentgate {

Service::Service(std::shared_ptr<const Pipeline> pipeline, std::filesystem::path audit_log)
    : pipeline_(std::move(pipeline)), server_(std::make_unique<httplib::Server>()) {
  if (!audit_log.empty()) {
    audit_.open(audit_log, std::ios::app);
    if (!audit_) throw InvalidArgument("cannot open audit log " + audit_log.string());
  }

  auto send = [](httplib::Response& res, const HttpReply& reply, const std::string& request_id = {}) {
    res.status = reply.status;
    if (!request_id.empty()) res.set_header("X-Request-Id", request_id);
    res.set_content(reply.body.dump(), "application/json");
  };
  server_->Post("/v1/classify", [this, send](const httplib::Request& req, httplib::Response& res) {
    const auto reply = handle_classify(req.body, req.get_header_value("X-Request-Id"));
    send(res, reply, reply.body.value("request_id", std::string()));
  });
  server_->Get("/v1/health", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, handle_health());
  });
  server_->Get("/v1/stats", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, handle_stats());
  });
}

Service::~Service() { stop(); }

void Service::set_pipeline(std::shared_ptr<const Pipeline> pipeline) {
  std::lock_guard lock(pipeline_mutex_);
  pipeline_ = std::move(pipeline);
}

std::shared_ptr<const Pipeline> Service::pipeline() const {
  std::lock_guard lock(pipeline_mutex_);
  return pipeline_;
}

bool Service::ready() const { return pipeline() != nullptr; }

std::string Service::next_request_id() { return "req-" + std::to_string(++id_counter_); }

void Service::audit(const nlohmann::json& record) {
  if (!audit_.is_open()) return;
  std::lock_guard lock(audit_mutex_);
  audit_ << record.dump() << '\n';
  audit_.flush();
}

HttpReply Service::handle_classify(const std::string& body, const std::string& header_request_id) {
  ++requests_;
  auto error = [this](int status, std::string_view code, std::string_view message, const std::string& id) {
    ++errors_;
    HttpReply reply{status, wire::error_body(code, message)};
    if (!id.empty()) reply.body["request_id"] = id;
    return reply;
  };

  nlohmann::json request;
  try {
    request = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error&) {
    return error(400, "bad_request", "body is not valid JSON", header_request_id);
  }
  if (!request.is_object()) return error(400, "bad_request", "body must be a JSON object", header_request_id);

  std::string request_id = header_request_id;
  if (request.contains("id")) {
    if (!request["id"].is_string()) return error(400, "bad_request", "'id' must be a string", header_request_id);
    request_id = request["id"].get<std::string>();
  }
  if (request_id.empty()) request_id = next_request_id();

  const bool has_text = request.contains("text");
  const bool has_embedding = request.contains("embedding");
  if (!has_text && !has_embedding) {
    return error(400, "bad_request", "expected 'text' or 'embedding'", request_id);
  }
  if (has_text && !request["text"].is_string()) return error(400, "bad_request", "'text' must be a string", request_id);
  Vector embedding;
  if (has_embedding) {
    try {
      embedding = io::vector_from_json(request["embedding"]);
      embedding = normalize_embedding(embedding);
    } catch (const Error& e) {
      return error(400, "bad_request", std::string("'embedding': ") + e.what(), request_id);
    }
  }

  const auto p = pipeline();
  if (!p) return error(503, "not_ready", "pipeline not loaded", request_id);

  const std::string text = has_text ? request["text"].get<std::string>() : std::string();
  ClassifyResponse response;
  try {
    response = has_embedding ? p->classify_embedding(embedding, text) : p->classify(text);
  } catch (const BackendError& e) {
    return error(502, "backend_error", e.what(), request_id);
  } catch (const InvalidArgument& e) {
    return error(400, "bad_request", e.what(), request_id);
  } catch (const std::exception& e) {
    spdlog::error("classify {}: {}", request_id, e.what());
    return error(500, "internal", e.what(), request_id);
  }
  response.request_id = request_id;

  ++classified_;
  if (response.escalated) ++escalated_;
  if (response.degraded) ++degraded_;
  auto json = response_to_json(response);
  audit(json);
  return {200, std::move(json)};
}

HttpReply Service::handle_health() const {
  return {200, {{"status", "ok"}, {"ready", ready()}}};
}

ServiceStats Service::stats() const {
  return {requests_.load(), classified_.load(), escalated_.load(), degraded_.load(), errors_.load()};
}

HttpReply Service::handle_stats() const {
  const auto s = stats();
  return {200,
          {{"requests", s.requests},
           {"classified", s.classified},
           {"escalated", s.escalated},
           {"degraded", s.degraded},
           {"errors", s.errors},
           {"escalation_rate", s.escalation_rate()}}};
}

int Service::bind(const std::string& host, int port) {
  host_ = host;
  port_ = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (port_ < 0) throw Error("service: cannot bind " + host + ":" + std::to_string(port));
  return port_;
}

void Service::listen() { server_->listen_after_bind(); }

void Service::start() {
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void Service::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string Service::url() const { return "http://" + host_ + ":" + std::to_string(port_); }

}  // namespace intentgate
