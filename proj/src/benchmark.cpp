#include "intentgate/benchmark.hpp"

#include "intentgate/error.hpp"
#include "intentgate/io.hpp"

#include <spdlog/spdlog.h>

#include <fstream>
#include <optional>
#include <sstream>

namespace intentgate {

namespace {

double headline_value(const MetricsReport& m, const std::string& headline) {
  if (headline == "micro_f1") return m.micro_f1;
  if (headline == "macro_f1") return m.macro_f1;
  if (headline == "weighted_f1") return m.weighted_f1;
  throw InvalidArgument("unknown headline metric '" + headline + "' (micro_f1|macro_f1|weighted_f1)");
}

std::string item_context(std::size_t index, const std::string& id) {
  return "item " + std::to_string(index) + " ('" + id + "'): ";
}

}  // namespace

std::unordered_map<std::string, std::string> gold_by_text(const LabeledDataset& dataset) {
  std::unordered_map<std::string, std::string> out;
  for (const auto& item : dataset.items) out.emplace(item.utterance.text, item.label);
  return out;
}

BenchmarkResult run_benchmark(const Pipeline& pipeline, LabeledDataset dataset,
                              const std::vector<RoutingStrategy>& strategies, const std::vector<double>& thresholds) {
  if (dataset.empty()) throw InvalidArgument("bench: empty dataset");
  if (strategies.empty()) throw InvalidArgument("bench: no strategies");
  const auto& catalog = pipeline.catalog();
  auto report = validate_dataset(dataset, catalog);
  if (!report.ok()) throw InvalidArgument("bench: " + report.summary());

  if (!dataset.fully_embedded()) {
    if (!pipeline.embedder()) throw InvalidArgument("bench: dataset lacks embeddings and no embed backend is configured");
    embed_dataset(dataset, *pipeline.embedder());
  }

  const auto n = dataset.size();
  BenchmarkResult result;
  std::vector<Assessment> assessments;
  assessments.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& item = dataset.items[i];
    try {
      assessments.push_back(pipeline.assess(item.utterance.embedding));
    } catch (const BackendError& e) {
      throw BackendError(item_context(i, item.utterance.id) + e.what());
    } catch (const Error& e) {
      throw Error(item_context(i, item.utterance.id) + e.what());
    }
    result.records.push_back({item.utterance.id, item.utterance.text, item.label, assessments.back().topk.top1(),
                              assessments.back().score});
  }

  const auto route_all = resolve_strategy("full");
  std::vector<std::optional<ClassifyResponse>> escalated(n);
  auto escalate = [&](std::size_t i) -> const ClassifyResponse& {
    if (!escalated[i]) {
      try {
        escalated[i] = pipeline.resolve(dataset.items[i].utterance.text, assessments[i], route_all);
      } catch (const BackendError& e) {
        throw BackendError(item_context(i, dataset.items[i].utterance.id) + e.what());
      }
    }
    return *escalated[i];
  };

  std::vector<std::string> gold;
  gold.reserve(n);
  for (const auto& item : dataset.items) gold.push_back(item.label);

  for (const auto& strategy : strategies) {
    StrategyResult sr;
    sr.strategy = strategy;
    for (std::size_t i = 0; i < n; ++i) {
      if (route(assessments[i].score, strategy)) {
        const auto& r = escalate(i);
        ++sr.escalated;
        if (r.degraded) ++sr.degraded;
        sr.predictions.push_back(r.intent);
        sr.sources.push_back(r.source);
      } else {
        sr.predictions.push_back(assessments[i].topk.top1());
        sr.sources.push_back(Source::classifier);
      }
    }
    sr.metrics = evaluate(sr.predictions, gold, catalog);
    spdlog::info("bench: {} escalated {}/{} micro_f1={:.4f}", strategy.name(), sr.escalated, n, sr.metrics.micro_f1);
    result.strategies.push_back(std::move(sr));
  }

  std::vector<RoutingRecord> routing_records;
  routing_records.reserve(n);
  for (const auto& r : result.records) routing_records.push_back({r.gold, r.classifier_label, r.score});
  result.routing = routing_analysis(routing_records, thresholds, catalog.oos_token);
  return result;
}

nlohmann::ordered_json benchmark_to_json(const BenchmarkResult& result, const std::string& headline) {
  using oj = nlohmann::ordered_json;
  oj strategies = oj::array();
  for (const auto& s : result.strategies) {
    strategies.push_back({{"strategy", s.strategy.name()},
                          {"headline", headline},
                          {"headline_value", headline_value(s.metrics, headline)},
                          {"escalated", s.escalated},
                          {"escalation_rate", s.escalation_rate()},
                          {"degraded", s.degraded},
                          {"metrics", metrics_to_json(s.metrics)}});
  }
  return {{"items", result.records.size()}, {"strategies", std::move(strategies)},
          {"routing", routing_to_json(result.routing)}};
}

std::string benchmark_to_table(const BenchmarkResult& result, const std::string& headline) {
  std::ostringstream out;
  out << "items: " << result.records.size() << "\n\n";
  out << "strategy              " << headline << "   ins_acc   oos_prec  oos_rec   routed\n";
  for (const auto& s : result.strategies) {
    auto name = s.strategy.name();
    name.resize(std::max<std::size_t>(name.size(), 22), ' ');
    out << name << format_number(headline_value(s.metrics, headline), 4) << "     "
        << format_number(s.metrics.ins_accuracy, 4) << "    " << format_number(s.metrics.oos_precision, 4) << "    "
        << format_number(s.metrics.oos_recall, 4) << "    " << format_number(s.escalation_rate(), 4) << '\n';
  }
  for (const auto& s : result.strategies) {
    out << "\n== " << s.strategy.name() << " ==\n" << metrics_to_table(s.metrics);
  }
  out << "\n== routing analysis ==\n" << routing_to_table(result.routing);
  return out.str();
}

void write_benchmark_reports(const BenchmarkResult& result, const std::filesystem::path& out_dir,
                             const std::string& headline) {
  std::filesystem::create_directories(out_dir);
  io::write_text_file(out_dir / "report.json", benchmark_to_json(result, headline).dump(2) + "\n");
  io::write_text_file(out_dir / "report.txt", benchmark_to_table(result, headline));
  io::write_text_file(out_dir / "routing.csv", routing_to_csv(result.routing));

  std::ostringstream records;
  for (std::size_t i = 0; i < result.records.size(); ++i) {
    const auto& r = result.records[i];
    nlohmann::ordered_json predictions = nlohmann::ordered_json::object();
    for (const auto& s : result.strategies) predictions[s.strategy.name()] = s.predictions[i];
    nlohmann::ordered_json rec = {{"id", r.id},       {"gold", r.gold},   {"classifier", r.classifier_label},
                                  {"score", r.score}, {"predictions", predictions}};
    records << rec.dump() << '\n';
  }
  io::write_text_file(out_dir / "records.jsonl", records.str());
}

}  // namespace intentgate
