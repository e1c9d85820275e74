#pragma once

#include "intentgate/pipeline.hpp"

#include <json.hpp>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

namespace httplib {
class Server;
}

namespace intentgate {

struct HttpReply {
  int status = 200;
  nlohmann::json body;
};

struct ServiceStats {
  std::uint64_t requests = 0;
  std::uint64_t classified = 0;  // 200 responses
  std::uint64_t escalated = 0;
  std::uint64_t degraded = 0;
  std::uint64_t errors = 0;

  double escalation_rate() const noexcept {
    return classified == 0 ? 0.0 : static_cast<double>(escalated) / static_cast<double>(classified);
  }
};

// HTTP front end: POST /v1/classify, GET /v1/health, GET /v1/stats. The pipeline is shared
// read-only across request threads; only the counters and the audit file are mutable.
class Service {
 public:
  explicit Service(std::shared_ptr<const Pipeline> pipeline = nullptr, std::filesystem::path audit_log = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  void set_pipeline(std::shared_ptr<const Pipeline> pipeline);
  bool ready() const;

  // Body: {"text": "..."} or {"embedding": [...]}, optional "id". 400 on malformed input,
  // 503 before a pipeline is set, 502 when a backend fails under the "fail" policy.
  HttpReply handle_classify(const std::string& body, const std::string& header_request_id = {});
  HttpReply handle_health() const;
  HttpReply handle_stats() const;
  ServiceStats stats() const;

  int bind(const std::string& host, int port = 0);
  void listen();  // blocking
  void start();   // background thread
  void stop();
  int port() const noexcept { return port_; }
  std::string url() const;

 private:
  std::shared_ptr<const Pipeline> pipeline() const;
  std::string next_request_id();
  void audit(const nlohmann::json& record);

  mutable std::mutex pipeline_mutex_;
  std::shared_ptr<const Pipeline> pipeline_;

  std::atomic<std::uint64_t> requests_{0}, classified_{0}, escalated_{0}, degraded_{0}, errors_{0};
  std::atomic<std::uint64_t> id_counter_{0};

  std::mutex audit_mutex_;
  std::ofstream audit_;

  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::string host_;
  int port_ = 0;
};

}  // namespace intentgate
