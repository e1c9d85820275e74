#pragma once

#include "intentgate/evaluation.hpp"
#include "intentgate/pipeline.hpp"

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace intentgate {

struct BenchmarkRecord {
  std::string id;
  std::string text;
  std::string gold;
  std::string classifier_label;  // top-1
  double score = 0.0;
};

struct StrategyResult {
  RoutingStrategy strategy;
  std::vector<std::string> predictions;  // aligned with BenchmarkResult::records
  std::vector<Source> sources;
  std::size_t escalated = 0;
  std::size_t degraded = 0;
  MetricsReport metrics;

  double escalation_rate() const noexcept {
    return predictions.empty() ? 0.0 : static_cast<double>(escalated) / static_cast<double>(predictions.size());
  }
};

struct BenchmarkResult {
  std::vector<BenchmarkRecord> records;
  std::vector<StrategyResult> strategies;
  RoutingAnalysis routing;
};

// Classifies every item under each strategy. Each item is scored once and sent to the gate at
// most once; strategies reuse that verdict. Items lacking embeddings go through the pipeline's
// embed backend.
BenchmarkResult run_benchmark(const Pipeline& pipeline, LabeledDataset dataset,
                              const std::vector<RoutingStrategy>& strategies, const std::vector<double>& thresholds);

// Gold label by utterance text, for the oracle mock generator.
std::unordered_map<std::string, std::string> gold_by_text(const LabeledDataset& dataset);

// Writes report.json, report.txt, routing.csv and records.jsonl into `out_dir`.
// `headline` names the F1 aggregate shown first (micro_f1 | macro_f1 | weighted_f1).
void write_benchmark_reports(const BenchmarkResult& result, const std::filesystem::path& out_dir,
                             const std::string& headline = "micro_f1");

nlohmann::ordered_json benchmark_to_json(const BenchmarkResult& result, const std::string& headline = "micro_f1");
std::string benchmark_to_table(const BenchmarkResult& result, const std::string& headline = "micro_f1");

}  // namespace intentgate
