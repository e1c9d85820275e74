#pragma once

#include "intentgate/domain.hpp"

#include <json.hpp>

#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace intentgate {

inline constexpr const char* kHint3OosSentinel = "NO_NODES_DETECTED";

// CSV with header columns `sentence` and `label` (others ignored). Labels equal to
// `oos_sentinel` become `oos_token`. Items carry ids "row-<n>" and no embeddings.
LabeledDataset parse_hint3(std::istream& in, const std::string& oos_sentinel = kHint3OosSentinel,
                           const std::string& oos_token = "OOS");
LabeledDataset load_hint3(const std::filesystem::path& path, const std::string& oos_sentinel = kHint3OosSentinel,
                          const std::string& oos_token = "OOS");

struct ClassMetrics {
  std::string label;
  std::size_t support = 0;    // gold count
  std::size_t predicted = 0;  // prediction count
  std::size_t true_positives = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool precision_undefined = false;  // no predictions of this class
  bool recall_undefined = false;     // no gold items of this class
};

struct MetricsReport {
  std::size_t n = 0;
  std::vector<std::string> labels;  // catalog intents, then the oos_token
  std::vector<ClassMetrics> per_class;
  std::vector<std::vector<std::size_t>> confusion;  // [gold][predicted]

  double accuracy = 0.0;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;     // over labels present in gold or predictions
  double weighted_f1 = 0.0;  // support-weighted
  double ins_accuracy = 0.0;
  double oos_precision = 0.0;
  double oos_recall = 0.0;
  double oos_f1 = 0.0;
  // Zero-denominator notes, e.g. "oos_precision_undefined"; affected values are reported as 0.
  std::vector<std::string> flags;

  bool has_flag(std::string_view flag) const;
  const ClassMetrics& metrics_for(std::string_view label) const;
};

// Labels must be catalog intents or the catalog's oos_token.
MetricsReport evaluate(const std::vector<std::string>& predictions, const std::vector<std::string>& gold,
                       const IntentCatalog& catalog);

struct RoutingRecord {
  std::string gold;
  std::string predicted;  // classifier top-1
  double score = 0.0;
};

enum class RoutingCategory { gold_oos, misclassified_ins, correct_ins };
std::string_view to_string(RoutingCategory category);

struct RoutingRow {
  double tau = 0.0;
  // Fraction routed (score > tau) per category; nullopt when the category is empty.
  std::optional<double> gold_oos;
  std::optional<double> misclassified_ins;
  std::optional<double> correct_ins;

  std::optional<double> fraction(RoutingCategory category) const;
};

struct RoutingAnalysis {
  std::size_t gold_oos_count = 0;
  std::size_t misclassified_ins_count = 0;
  std::size_t correct_ins_count = 0;
  std::vector<RoutingRow> rows;  // one per threshold, input order
};

RoutingAnalysis routing_analysis(const std::vector<RoutingRecord>& records, const std::vector<double>& thresholds,
                                 const std::string& oos_token);

// Report rendering. Numbers are printed with fixed precision so output is byte-stable.
nlohmann::ordered_json metrics_to_json(const MetricsReport& report);
std::string metrics_to_table(const MetricsReport& report);
nlohmann::ordered_json routing_to_json(const RoutingAnalysis& analysis);
std::string routing_to_csv(const RoutingAnalysis& analysis);  // threshold,category,fraction
std::string routing_to_table(const RoutingAnalysis& analysis);
std::string format_number(double value, int precision = 6);

}  // namespace intentgate
