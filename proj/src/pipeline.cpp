#include "intentgate/pipeline.hpp"

#include "intentgate/error.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>

namespace intentgate {

FailurePolicy parse_failure_policy(std::string_view name) {
  if (name == "fail") return FailurePolicy::fail;
  if (name == "degrade") return FailurePolicy::degrade;
  throw InvalidArgument("unknown backend failure policy '" + std::string(name) + "' (fail|degrade)");
}

std::string_view to_string(FailurePolicy policy) {
  return policy == FailurePolicy::fail ? "fail" : "degrade";
}

std::string_view to_string(Source source) { return source == Source::llm ? "llm" : "classifier"; }

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

}  // namespace

nlohmann::json response_to_json(const ClassifyResponse& r) {
  nlohmann::json top_k = nlohmann::json::array();
  for (const auto& [name, p] : r.topk.ranked) top_k.push_back({{"intent", name}, {"probability", p}});
  nlohmann::json out = {
      {"request_id", r.request_id},
      {"intent", r.intent},
      {"oos", r.oos},
      {"source", to_string(r.source)},
      {"escalated", r.escalated},
      {"degraded", r.degraded},
      {"uncertainty", r.uncertainty},
      {"score_method", to_string(r.score_method)},
      {"strategy", r.strategy.name()},
      {"tau", std::isfinite(r.strategy.tau) ? nlohmann::json(r.strategy.tau) : nlohmann::json(nullptr)},
      {"top_k", std::move(top_k)},
      {"parse_path", r.parse_path ? nlohmann::json(to_string(*r.parse_path)) : nlohmann::json(nullptr)},
      {"timings",
       {{"embed_ms", r.timings.embed_ms},
        {"classify_ms", r.timings.classify_ms},
        {"score_ms", r.timings.score_ms},
        {"llm_ms", r.timings.llm_ms}}}};
  if (r.degraded) out["degraded_reason"] = r.degraded_reason;
  if (r.source == Source::llm) out["llm_raw"] = r.llm_raw;
  return out;
}

Pipeline::Pipeline(IntentCatalog catalog, ClassifierModel classifier, std::optional<NnkDictionary> dictionary,
                   PipelineOptions options, std::shared_ptr<EmbedBackend> embedder,
                   std::shared_ptr<GenerateBackend> generator, PromptTemplate tmpl)
    : catalog_(std::make_shared<const IntentCatalog>(std::move(catalog))),
      classifier_(std::make_shared<const ClassifierModel>(std::move(classifier))),
      dictionary_(dictionary ? std::make_shared<const NnkDictionary>(std::move(*dictionary)) : nullptr),
      template_(std::make_shared<const PromptTemplate>(std::move(tmpl))),
      options_(std::move(options)),
      embedder_(std::move(embedder)),
      generator_(std::move(generator)) {
  require_valid(*catalog_);
  classifier_->check_compatible(*catalog_);
  if (options_.k < 1 || options_.k > catalog_->size()) {
    throw InvalidArgument("pipeline: k must satisfy 1 <= k <= N");
  }
  if (options_.score_method == ScoreMethod::nnk) {
    if (!dictionary_) throw InvalidArgument("pipeline: nnk scoring needs a dictionary");
    if (dictionary_->dim() != classifier_->dim()) {
      throw InvalidArgument("pipeline: dictionary and classifier dimensions differ");
    }
  }
}

Pipeline Pipeline::with(const RoutingStrategy& strategy) const {
  Pipeline copy = *this;
  copy.options_.strategy = strategy;
  return copy;
}

Assessment Pipeline::assess(const Vector& embedding) const {
  Assessment a;
  a.embedding = normalize_embedding(embedding);

  auto t0 = Clock::now();
  a.topk = predict_topk(*classifier_, a.embedding, options_.k);
  a.timings.classify_ms = elapsed_ms(t0);

  t0 = Clock::now();
  ScoringInput input;
  input.dictionary = dictionary_.get();
  input.embedding = &a.embedding;
  input.probabilities = &a.topk.distribution;
  input.logits = &a.topk.logits;
  a.score = score(input, options_.score_method).value;
  a.timings.score_ms = elapsed_ms(t0);
  return a;
}

ClassifyResponse Pipeline::resolve(const std::string& text, const Assessment& assessment,
                                   const RoutingStrategy& strategy) const {
  ClassifyResponse r;
  r.topk = assessment.topk;
  r.uncertainty = assessment.score;
  r.score_method = options_.score_method;
  r.strategy = strategy;
  r.timings = assessment.timings;
  r.escalated = route(assessment.score, strategy);
  r.intent = assessment.topk.top1();
  r.source = Source::classifier;
  if (!r.escalated) return r;

  const auto t0 = Clock::now();
  try {
    if (!generator_) throw BackendError("no generate backend configured", assessment.topk.top1());
    const auto verdict = decide(*generator_, text, assessment.topk, *catalog_, *template_, options_.gate);
    r.intent = verdict.label;
    r.source = Source::llm;
    r.oos = catalog_->is_oos(verdict.label);
    r.parse_path = verdict.path;
    r.llm_raw = verdict.raw;
  } catch (const BackendError& e) {
    if (options_.on_backend_failure == FailurePolicy::fail) throw;
    spdlog::warn("pipeline: escalation failed ({}), keeping classifier top-1", e.what());
    r.degraded = true;
    r.degraded_reason = e.what();
  }
  r.timings.llm_ms = elapsed_ms(t0);
  return r;
}

ClassifyResponse Pipeline::classify_embedding(const Vector& embedding, const std::string& text) const {
  return resolve(text, assess(embedding), options_.strategy);
}

ClassifyResponse Pipeline::classify(const std::string& text) const {
  if (!embedder_) throw BackendError("no embed backend configured");
  const auto t0 = Clock::now();
  Vector raw;
  try {
    raw = embed_text(*embedder_, text);
  } catch (const BackendError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw BackendError(std::string("embed backend returned an unusable vector: ") + e.what());
  } catch (const std::exception& e) {
    throw BackendError(std::string("embed backend failed: ") + e.what());
  }
  const double embed_ms = elapsed_ms(t0);
  auto response = classify_embedding(raw, text);
  response.timings.embed_ms = embed_ms;
  return response;
}

}  // namespace intentgate
