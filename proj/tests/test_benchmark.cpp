#include "intentgate/benchmark.hpp"
#include "intentgate/error.hpp"
#include "intentgate/io.hpp"
#include "support.hpp"

#include <doctest.h>

#include <atomic>
#include <filesystem>

using namespace intentgate;
using intentgate::testing::make_pipeline;

namespace {

const testing::TrainedWorld& world() {
  static const auto t = [] {
    SyntheticWorldConfig cfg;
    cfg.oos_mode = OosMode::spread;
    cfg.ins_test = 200;
    cfg.oos_test = 50;
    cfg.seed = 12;
    return intentgate::testing::train_world(cfg);
  }();
  return t;
}

std::vector<RoutingStrategy> strategies(std::initializer_list<const char*> names) {
  std::vector<RoutingStrategy> out;
  for (const char* n : names) out.push_back(resolve_strategy(n));
  return out;
}

}  // namespace

TEST_SUITE("benchmark") {

TEST_CASE("oracle gate never hurts and catches every OOS item") {
  const auto& t = world();
  const auto p = make_pipeline(t, "moderate", std::make_shared<OracleGenerator>(gold_by_text(t.world.test)));
  const auto r = run_benchmark(p, t.world.test, strategies({"classifier-only", "low", "moderate", "high", "full"}),
                               {0.15, 0.10, 0.05});
  REQUIRE(r.strategies.size() == 5);
  const auto& bare = r.strategies[0].metrics;
  const auto& full = r.strategies[4].metrics;
  CHECK(full.micro_f1 >= bare.micro_f1);
  CHECK(full.oos_recall == 1.0);
  CHECK(r.strategies[0].escalated == 0);
  CHECK(r.strategies[4].escalated == t.world.test.size());
  for (std::size_t i = 1; i < r.strategies.size(); ++i) CHECK(r.strategies[i].escalated >= r.strategies[i - 1].escalated);
  CHECK(r.routing.rows.size() == 3);
}

TEST_CASE("each item reaches the gate at most once") {
  const auto& t = world();
  auto calls = std::make_shared<std::atomic<int>>(0);
  auto counting = std::make_shared<FunctionGenerator>([calls](const GenerateRequest& r) {
    ++*calls;
    return r.context->candidates.front();
  });
  const auto p = make_pipeline(t, "moderate", counting);
  const auto r = run_benchmark(p, t.world.test, strategies({"low", "moderate", "high", "full", "full"}), {0.1});
  CHECK(*calls == static_cast<int>(t.world.test.size()));
}

TEST_CASE("reports are byte-identical across runs") {
  const auto& t = world();
  const auto dir = std::filesystem::temp_directory_path() / "intentgate_bench_test";
  std::filesystem::remove_all(dir);
  for (const char* sub : {"a", "b"}) {
    const auto p = make_pipeline(t, "moderate", std::make_shared<OracleGenerator>(gold_by_text(t.world.test)));
    const auto r = run_benchmark(p, t.world.test, strategies({"classifier-only", "full"}), {0.15, 0.10, 0.05});
    write_benchmark_reports(r, dir / sub, "macro_f1");
  }
  for (const char* f : {"report.json", "report.txt", "routing.csv", "records.jsonl"}) {
    CHECK(io::read_text_file(dir / "a" / f) == io::read_text_file(dir / "b" / f));
  }
  const auto j = io::load_json(dir / "a" / "report.json");
  CHECK(j["strategies"][0]["headline"] == "macro_f1");
  CHECK(j["routing"]["rows"].size() == 3);
  std::filesystem::remove_all(dir);
}

TEST_CASE("errors") {
  const auto& t = world();
  const auto p = make_pipeline(t, "moderate", std::make_shared<TopCandidateGenerator>());
  CHECK_THROWS_AS(run_benchmark(p, LabeledDataset{}, strategies({"full"}), {0.1}), InvalidArgument);
  CHECK_THROWS_AS(run_benchmark(p, t.world.test, {}, {0.1}), InvalidArgument);

  auto broken = std::make_shared<FunctionGenerator>([](const GenerateRequest&) -> std::string { throw std::runtime_error("down"); });
  const auto fail = make_pipeline(t, "moderate", broken, FailurePolicy::fail);
  CHECK_THROWS_WITH_AS(run_benchmark(fail, t.world.test, strategies({"full"}), {0.1}), doctest::Contains("item 0 ('test-0')"),
                       BackendError);

  // Items without embeddings go through the embed backend.
  auto unembedded = t.world.test;
  for (auto& it : unembedded.items) it.utterance.embedding = Vector();
  const auto r = run_benchmark(p, unembedded, strategies({"classifier-only"}), {0.1});
  const auto ref = run_benchmark(p, t.world.test, strategies({"classifier-only"}), {0.1});
  CHECK(r.strategies[0].predictions == ref.strategies[0].predictions);

  auto unknown = t.world.test;
  unknown.items[0].label = "mystery";
  CHECK_THROWS_AS(run_benchmark(p, unknown, strategies({"full"}), {0.1}), InvalidArgument);
}

}
