#include "intentgate/io.hpp"
#include "intentgate/service.hpp"
#include "support.hpp"

#include <doctest.h>
#include <httplib.h>

#include <filesystem>
#include <set>
#include <sstream>

using namespace intentgate;
using intentgate::testing::make_pipeline;

namespace {

const testing::TrainedWorld& world() {
  static const auto t = [] {
    SyntheticWorldConfig cfg;
    cfg.oos_mode = OosMode::spread;
    cfg.seed = 9;
    return intentgate::testing::train_world(cfg);
  }();
  return t;
}

std::shared_ptr<const Pipeline> shared(const std::string& strategy, std::shared_ptr<GenerateBackend> g,
                                       FailurePolicy policy = FailurePolicy::degrade) {
  return std::make_shared<const Pipeline>(make_pipeline(world(), strategy, std::move(g), policy));
}

std::string body_for(const LabeledItem& item) { return nlohmann::json{{"text", item.utterance.text}}.dump(); }

}  // namespace

TEST_SUITE("service") {

TEST_CASE("classify handler: success and required fields") {
  Service s(shared("moderate", std::make_shared<FixedGenerator>("OOS")));
  const auto r = s.handle_classify(body_for(world().world.test.items[0]));
  CHECK(r.status == 200);
  for (const char* key : {"request_id", "intent", "oos", "source", "uncertainty", "tau", "top_k", "timings"}) {
    CHECK_MESSAGE(r.body.contains(key), key);
  }
  CHECK(r.body["request_id"] == "req-1");
  CHECK(s.handle_classify(body_for(world().world.test.items[1])).body["request_id"] == "req-2");
}

TEST_CASE("classify handler: malformed input") {
  Service s(shared("moderate", std::make_shared<FixedGenerator>("OOS")));
  CHECK(s.handle_classify(R"({"txt": "hi"})").status == 400);
  CHECK(s.handle_classify("{not json").status == 400);
  CHECK(s.handle_classify("[1, 2]").status == 400);
  CHECK(s.handle_classify(R"({"text": 5})").status == 400);
  CHECK(s.handle_classify(R"({"text": "x", "id": 5})").status == 400);
  CHECK(s.handle_classify(R"({"embedding": [0, 0, 0]})").status == 400);
  const auto bad = s.handle_classify(R"({"txt": "hi"})");
  CHECK(bad.body["error"]["code"] == "bad_request");
  CHECK(bad.body["error"]["message"].get<std::string>().find("text") != std::string::npos);
  // Wrong embedding dimension is a client error too.
  CHECK(s.handle_classify(R"({"embedding": [1, 0]})").status == 400);
  CHECK(s.stats().errors == 8);
}

TEST_CASE("classify handler: readiness, ids, embeddings") {
  Service s;
  CHECK(s.handle_classify(R"({"text": "hi"})").status == 503);
  CHECK(s.handle_health().body["ready"] == false);
  s.set_pipeline(shared("moderate", std::make_shared<FixedGenerator>("OOS")));
  CHECK(s.handle_health().body["ready"] == true);
  CHECK(s.handle_health().body["status"] == "ok");

  const auto& item = world().world.test.items[3];
  auto r = s.handle_classify(nlohmann::json{{"text", item.utterance.text}, {"id", "mine"}}.dump(), "header-id");
  CHECK(r.body["request_id"] == "mine");
  r = s.handle_classify(body_for(item), "header-id");
  CHECK(r.body["request_id"] == "header-id");

  nlohmann::json emb = {{"embedding", io::vector_to_json(3.0 * item.utterance.embedding)}};
  r = s.handle_classify(emb.dump());
  CHECK(r.status == 200);
  CHECK(r.body["timings"]["embed_ms"] == 0.0);
}

TEST_CASE("classify handler: backend failure policies") {
  auto broken = std::make_shared<FunctionGenerator>([](const GenerateRequest&) -> std::string { throw std::runtime_error("down"); });
  const auto body = body_for(world().world.test.items[0]);
  Service degrade(shared("full", broken, FailurePolicy::degrade));
  auto r = degrade.handle_classify(body);
  CHECK(r.status == 200);
  CHECK(r.body["degraded"] == true);
  CHECK(r.body["source"] == "classifier");
  Service fail(shared("full", broken, FailurePolicy::fail));
  r = fail.handle_classify(body);
  CHECK(r.status == 502);
  CHECK(r.body["error"]["code"] == "backend_error");
  CHECK(r.body.contains("request_id"));
}

TEST_CASE("escalation rate equals the offline count from logged scores") {
  const auto audit = std::filesystem::temp_directory_path() / "intentgate_service_audit.jsonl";
  std::filesystem::remove(audit);
  {
    Service s(shared("moderate", std::make_shared<TopCandidateGenerator>()), audit);
    for (const auto& it : world().world.test.items) CHECK(s.handle_classify(body_for(it)).status == 200);
    const auto stats = s.stats();
    std::size_t above = 0, lines = 0;
    std::istringstream in(io::read_text_file(audit));
    for (std::string line; std::getline(in, line);) {
      ++lines;
      above += nlohmann::json::parse(line)["uncertainty"].get<double>() > 0.10;
    }
    CHECK(lines == world().world.test.size());
    CHECK(stats.escalated == above);
    CHECK(stats.escalation_rate() == static_cast<double>(above) / static_cast<double>(lines));
    CHECK(s.handle_stats().body["escalated"] == above);
  }
  std::filesystem::remove(audit);
}

TEST_CASE("http front end") {
  Service s(shared("moderate", std::make_shared<TopCandidateGenerator>()));
  s.bind("127.0.0.1", 0);
  s.start();
  httplib::Client c("127.0.0.1", s.port());
  auto res = c.Post("/v1/classify", body_for(world().world.test.items[0]), "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  const auto j = nlohmann::json::parse(res->body);
  CHECK(res->get_header_value("X-Request-Id") == j["request_id"].get<std::string>());
  res = c.Post("/v1/classify", R"({"txt": "hi"})", "application/json");
  REQUIRE(res);
  CHECK(res->status == 400);
  res = c.Get("/v1/health");
  REQUIRE(res);
  CHECK(nlohmann::json::parse(res->body) == nlohmann::json{{"status", "ok"}, {"ready", true}});
  s.stop();
}

}
