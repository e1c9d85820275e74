#include "intentgate/config.hpp"
#include "intentgate/error.hpp"
#include "intentgate/io.hpp"
#include "support.hpp"

#include <doctest.h>

#include <filesystem>

using namespace intentgate;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("intentgate_config_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("toml-style parsing") {
  const auto f = ConfigFile::parse(R"(
# comment
top = 1
[backend]
embed = "http://localhost:8000"   # trailing comment
generate = "mock:text=a # not a comment"
timeout_s = 2.5
[routing]
strategy = tau=0.2
escaped = "line\nnext \"quoted\""
flag = true
)");
  CHECK(f.get_int("top", 0) == 1);
  CHECK(f.get_string("backend.embed", "") == "http://localhost:8000");
  CHECK(f.get_string("backend.generate", "") == "mock:text=a # not a comment");
  CHECK(f.get_double("backend.timeout_s", 0) == 2.5);
  CHECK(f.get_string("routing.strategy", "") == "tau=0.2");
  CHECK(f.get_string("routing.escaped", "") == "line\nnext \"quoted\"");
  CHECK(f.get_bool("routing.flag", false));
  CHECK(f.get_int("missing", 7) == 7);
  CHECK_FALSE(f.has("missing"));
  CHECK_THROWS_AS(f.get_int("backend.embed", 0), InvalidArgument);
  CHECK_THROWS_AS(f.get_bool("top", false), InvalidArgument);

  CHECK_THROWS_AS(ConfigFile::parse("[open\n"), InvalidArgument);
  CHECK_THROWS_AS(ConfigFile::parse("novalue\n"), InvalidArgument);
  CHECK_THROWS_AS(ConfigFile::parse("a = \"unterminated\n"), InvalidArgument);
  CHECK_THROWS_AS(ConfigFile::parse(" = 3\n"), InvalidArgument);
}

TEST_CASE("pipeline config from file resolves relative paths") {
  const auto f = ConfigFile::parse(R"(
[backend]
generate = "mock:oos"
concurrency = 2
timeout_s = 1.5
[routing]
strategy = "high"
k = 2
score = "entropy"
on_backend_failure = "fail"
[artifacts]
catalog = "catalog.json"
classifier = "/abs/classifier.json"
[service]
port = 9001
)");
  const auto c = PipelineConfig::from_file(f, "/etc/gate");
  CHECK(c.generate_backend == "mock:oos");
  CHECK(c.embed_backend == "mock");
  CHECK(c.concurrency == 2);
  CHECK(c.timeout == std::chrono::milliseconds(1500));
  CHECK(c.strategy == "high");
  CHECK(c.k == 2);
  CHECK(c.score_method == "entropy");
  CHECK(c.on_backend_failure == "fail");
  CHECK(c.catalog_path == fs::path("/etc/gate/catalog.json"));
  CHECK(c.classifier_path == fs::path("/abs/classifier.json"));
  CHECK(c.dictionary_path.empty());
  CHECK(c.port == 9001);
  CHECK_NOTHROW(c.validate());

  const auto o = make_pipeline_options(c);
  CHECK(o.strategy.tau == 0.05);
  CHECK(o.k == 2);
  CHECK(o.on_backend_failure == FailurePolicy::fail);
}

TEST_CASE("validation") {
  PipelineConfig c;
  c.k = 0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = {};
  c.strategy = "warp9";
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = {};
  c.on_backend_failure = "retry";
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = {};
  c.concurrency = 0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
}

TEST_CASE("backend factories") {
  const auto t = std::chrono::seconds(1);
  CHECK(make_embed_backend("mock", t)->embed({"x"})[0].size() == 64);
  CHECK(make_embed_backend("mock:12", t)->embed({"x"})[0].size() == 12);
  CHECK_THROWS_AS(make_embed_backend("mock:abc", t), InvalidArgument);
  CHECK(make_embed_backend("http://127.0.0.1:1", t)->describe() == "http://127.0.0.1:1");

  GateContext ctx{"utt", {"a", "b"}, "NONE"};
  GenerateRequest req{"- b\n", 8, 0.0, &ctx};
  CHECK(make_generate_backend("mock:top1", t, 1)->generate(req) == "a");
  CHECK(make_generate_backend("mock", t, 1)->generate(req) == "a");
  CHECK(make_generate_backend("mock:oos", t, 1)->generate(req) == "NONE");
  CHECK(make_generate_backend("mock:text=hello", t, 1)->generate(req) == "hello");
  CHECK_THROWS_AS(make_generate_backend("mock:oracle", t, 1), InvalidArgument);
  const std::unordered_map<std::string, std::string> gold{{"utt", "b"}};
  CHECK(make_generate_backend("mock:oracle", t, 1, &gold)->generate(req) == "b");
  CHECK_THROWS_AS(make_generate_backend("mock:nope", t, 1), InvalidArgument);
}

TEST_CASE("build_pipeline loads artifacts from disk") {
  SyntheticWorldConfig wc;
  wc.train = 60;
  wc.ins_test = 6;
  wc.oos_test = 3;
  const auto t = intentgate::testing::train_world(wc);
  const auto dir = scratch("build");
  io::save_catalog(t.world.catalog, dir / "catalog.json");
  io::save_json(classifier_to_json(t.classifier), dir / "classifier.json");
  io::save_json(dictionary_to_json(t.dictionary), dir / "dictionary.json");
  io::write_text_file(dir / "gate.toml",
                      "[backend]\ngenerate = \"mock:oos\"\n[routing]\nstrategy = \"full\"\n"
                      "[artifacts]\ncatalog = \"catalog.json\"\nclassifier = \"classifier.json\"\ndictionary = \"dictionary.json\"\n");
  const auto cfg = PipelineConfig::from_file(ConfigFile::load(dir / "gate.toml"), dir);
  const auto p = build_pipeline(cfg);
  const auto r = p.classify_embedding(t.world.test.items.front().utterance.embedding, "x");
  CHECK(r.oos);
  CHECK(r.source == Source::llm);

  PipelineConfig missing = cfg;
  missing.classifier_path.clear();
  CHECK_THROWS_AS(build_pipeline(missing), InvalidArgument);
  PipelineConfig renamed = cfg;
  renamed.oos_token = "intent_0";  // collides with an intent
  CHECK_THROWS_AS(build_pipeline(renamed), InvalidArgument);
}

}
