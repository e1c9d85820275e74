#pragma once

// Trained synthetic world shared by the pipeline, service, benchmark and acceptance tests.

#include "intentgate/classifier.hpp"
#include "intentgate/pipeline.hpp"
#include "intentgate/synthetic.hpp"
#include "intentgate/uncertainty.hpp"

#include <memory>

namespace intentgate::testing {

struct TrainedWorld {
  SyntheticWorld world;
  ClassifierModel classifier;
  NnkDictionary dictionary;
};

inline TrainedWorld train_world(const SyntheticWorldConfig& config) {
  TrainedWorld t{make_synthetic_world(config), {}, {}};
  TrainingConfig tc;
  tc.seed = config.seed;
  t.classifier = train_classifier(t.world.train, t.world.catalog, tc);
  t.dictionary = fit_nnk(t.world.train.embedding_matrix(), {20, 10, 20, config.seed});
  return t;
}

inline Pipeline make_pipeline(const TrainedWorld& t, const std::string& strategy,
                              std::shared_ptr<GenerateBackend> generator,
                              FailurePolicy policy = FailurePolicy::degrade) {
  PipelineOptions o;
  o.strategy = resolve_strategy(strategy);
  o.on_backend_failure = policy;
  auto embedder = std::make_shared<LookupEmbedder>(t.world.train);
  embedder->add(t.world.test);
  return Pipeline(t.world.catalog, t.classifier, t.dictionary, o, std::move(embedder), std::move(generator));
}

}  // namespace intentgate::testing
