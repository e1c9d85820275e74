#include "intentgate/error.hpp"
#include "intentgate/io.hpp"

#include <doctest.h>

#include <sstream>

using namespace intentgate;

TEST_SUITE("io") {

TEST_CASE("catalog json round trip") {
  IntentCatalog c{{{"refund", "Asking for money back."}, {"cancel", ""}}, "NONE"};
  const auto j = io::catalog_to_json(c);
  CHECK(j.at("oos_token") == "NONE");
  CHECK(j.at("intents").size() == 2);
  const auto back = io::catalog_from_json(j);
  CHECK(back.oos_token == "NONE");
  CHECK(back.intents[0].guideline == "Asking for money back.");
  CHECK(back.names() == c.names());
}

TEST_CASE("catalog json rejects invalid catalogs") {
  auto j = nlohmann::json::parse(R"({"oos_token": "OOS", "intents": [{"name": "A"}, {"name": "A"}]})");
  CHECK_THROWS_AS(io::catalog_from_json(j), InvalidArgument);
  CHECK_THROWS_AS(io::catalog_from_json(nlohmann::json::parse(R"({"intents": 3})")), InvalidArgument);
  // Guideline and oos_token are optional.
  const auto c = io::catalog_from_json(nlohmann::json::parse(R"({"intents": [{"name": "A"}, {"name": "B"}]})"));
  CHECK(c.oos_token == "OOS");
  CHECK(c.intents[0].guideline.empty());
}

TEST_CASE("dataset jsonl parse normalizes and round-trips") {
  std::istringstream in(
      "{\"id\": \"a\", \"text\": \"hello\", \"label\": \"A\", \"embedding\": [3, 4]}\n"
      "\n"
      "{\"text\": \"no id\", \"label\": \"B\"}\n");
  const auto d = io::parse_dataset_jsonl(in);
  REQUIRE(d.size() == 2);
  CHECK(d.items[0].utterance.embedding(0) == doctest::Approx(0.6));
  CHECK(d.items[1].utterance.id == "line-3");
  CHECK_FALSE(d.items[1].utterance.has_embedding());

  std::ostringstream out;
  io::write_dataset_jsonl(d, out);
  std::istringstream again(out.str());
  const auto d2 = io::parse_dataset_jsonl(again);
  REQUIRE(d2.size() == 2);
  CHECK(d2.items[0].utterance.embedding == d.items[0].utterance.embedding);
  CHECK(d2.items[1].utterance.id == "line-3");
  CHECK(d2.items[1].label == "B");
}

TEST_CASE("dataset jsonl errors name the line") {
  std::istringstream bad_json("{\"text\": \"x\", \"label\": \"A\"}\n{oops\n");
  CHECK_THROWS_WITH(io::parse_dataset_jsonl(bad_json), doctest::Contains("line 2"));
  std::istringstream zero("{\"text\": \"x\", \"label\": \"A\", \"embedding\": [0, 0]}\n");
  CHECK_THROWS_WITH(io::parse_dataset_jsonl(zero), doctest::Contains("degenerate"));
  std::istringstream no_label("{\"text\": \"x\"}\n");
  CHECK_THROWS_AS(io::parse_dataset_jsonl(no_label), InvalidArgument);
}

TEST_CASE("matrix json is row major") {
  Matrix m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  const auto j = io::matrix_to_json(m);
  CHECK(j.size() == 2);
  CHECK(j[1][0] == 4.0);
  CHECK(io::matrix_from_json(j) == m);
  CHECK_THROWS_AS(io::matrix_from_json(nlohmann::json::parse("[[1, 2], [3]]")), InvalidArgument);
  CHECK(io::vector_from_json(io::vector_to_json(Vector{{1.5, -2.0}})) == Vector{{1.5, -2.0}});
}

}
