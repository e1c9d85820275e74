#pragma once

#include "intentgate/pipeline.hpp"

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>

namespace intentgate {

// Flat "section.key" -> value view of a TOML-style file: [section] headers, key = value lines,
// '#' comments, double-quoted strings, numbers and booleans. No arrays or inline tables.
class ConfigFile {
 public:
  static ConfigFile parse(const std::string& text);
  static ConfigFile load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.contains(key); }
  std::optional<std::string> get(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  const std::map<std::string, std::string>& values() const noexcept { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

struct PipelineConfig {
  std::string embed_backend = "mock";         // "mock", "mock:<dim>", or http(s)://...
  std::string generate_backend = "mock:top1";  // "mock:top1" | "mock:oos" | "mock:text=<s>" | "mock:oracle" | url
  std::chrono::milliseconds timeout{30000};
  int concurrency = 4;  // in-flight generate calls

  std::string strategy = "moderate";
  std::size_t k = 3;
  std::string score_method = "nnk";
  std::string on_backend_failure = "degrade";
  std::string oos_token;  // empty: use the catalog's

  int max_tokens = 32;
  double temperature = 0.0;

  std::filesystem::path catalog_path;
  std::filesystem::path classifier_path;
  std::filesystem::path dictionary_path;
  std::filesystem::path template_path;  // empty: built-in template

  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path audit_log;

  // Relative artifact paths resolve against `base_dir`.
  static PipelineConfig from_file(const ConfigFile& file, const std::filesystem::path& base_dir = {});
  void validate() const;
};

std::shared_ptr<EmbedBackend> make_embed_backend(const std::string& spec, std::chrono::milliseconds timeout);
// `gold_by_text` feeds "mock:oracle".
std::shared_ptr<GenerateBackend> make_generate_backend(
    const std::string& spec, std::chrono::milliseconds timeout, int concurrency,
    const std::unordered_map<std::string, std::string>* gold_by_text = nullptr);

PipelineOptions make_pipeline_options(const PipelineConfig& config);

// Loads catalog, classifier, dictionary and template, and builds the backends.
Pipeline build_pipeline(const PipelineConfig& config,
                        const std::unordered_map<std::string, std::string>* gold_by_text = nullptr);

}  // namespace intentgate
