#include "intentgate/domain.hpp"
#include "intentgate/error.hpp"

#include <doctest.h>

#include <random>

using namespace intentgate;

namespace {

bool mentions(const ValidationReport& r, const std::string& needle) {
  for (const auto& v : r.violations) {
    if (v.find(needle) != std::string::npos) return true;
  }
  return false;
}

LabeledItem item(std::string id, std::string label, Vector e = {}) {
  LabeledItem it;
  it.utterance.id = std::move(id);
  it.utterance.text = "text " + it.utterance.id;
  it.utterance.embedding = std::move(e);
  it.label = std::move(label);
  return it;
}

}  // namespace

TEST_SUITE("domain") {

TEST_CASE("normalize_embedding examples") {
  const auto a = normalize_embedding(Vector{{3.0, 4.0}});
  CHECK(a(0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(a(1) == doctest::Approx(0.8).epsilon(1e-15));

  const auto b = normalize_embedding(Vector{{1.0, 0.0, 0.0}});
  CHECK(b == Vector{{1.0, 0.0, 0.0}});

  CHECK_THROWS_WITH_AS(normalize_embedding(Vector{{0.0, 0.0}}), doctest::Contains("degenerate embedding"), InvalidArgument);
  CHECK_THROWS_AS(normalize_embedding(Vector()), InvalidArgument);
  CHECK_THROWS_AS(normalize_embedding(Vector{{1.0, std::nan("")}}), InvalidArgument);
  CHECK_THROWS_AS(normalize_embedding(Vector{{1.0, INFINITY}}), InvalidArgument);
}

TEST_CASE("normalize_embedding is idempotent and scale invariant") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  for (int trial = 0; trial < 200; ++trial) {
    Vector v(1 + trial % 20);
    for (auto& x : v) x = g(rng);
    const auto n = normalize_embedding(v);
    CHECK(std::abs(n.norm() - 1.0) <= 1e-12);
    CHECK((normalize_embedding(n) - n).cwiseAbs().maxCoeff() <= 1e-12);
    const Vector scaled = scale(rng) * v;
    CHECK((normalize_embedding(scaled) - n).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("validate_catalog examples") {
  IntentCatalog ok{{{"A", ""}, {"B", ""}}, "OOS"};
  CHECK(validate_catalog(ok).ok());

  IntentCatalog dup{{{"A", ""}, {"A", ""}}, "OOS"};
  const auto r1 = validate_catalog(dup);
  CHECK_FALSE(r1.ok());
  CHECK(mentions(r1, "duplicate name"));

  IntentCatalog collide{{{"OOS", ""}}, "OOS"};
  const auto r2 = validate_catalog(collide);
  CHECK_FALSE(r2.ok());
  CHECK(mentions(r2, "sentinel collision"));

  IntentCatalog empty_name{{{"", ""}}, "OOS"};
  CHECK_FALSE(validate_catalog(empty_name).ok());
  IntentCatalog untrimmed{{{" A", ""}}, "OOS"};
  CHECK_FALSE(validate_catalog(untrimmed).ok());
  CHECK_FALSE(validate_catalog(IntentCatalog{}).ok());
  CHECK_THROWS_AS(require_valid(dup), InvalidArgument);
}

TEST_CASE("catalog lookup") {
  IntentCatalog c{{{"refund", "money back"}, {"cancel", ""}}, "OOS"};
  CHECK(c.index_of("cancel") == 1u);
  CHECK_FALSE(c.index_of("nope").has_value());
  CHECK(c.at("refund").guideline == "money back");
  CHECK_THROWS_AS(c.at("nope"), InvalidArgument);
  CHECK(c.names() == std::vector<std::string>{"refund", "cancel"});
  CHECK(c.is_oos("OOS"));
}

TEST_CASE("validate_dataset") {
  IntentCatalog c{{{"A", ""}, {"B", ""}}, "OOS"};
  LabeledDataset d;
  d.items = {item("1", "A", Vector{{1.0, 0.0}}), item("2", "OOS", Vector{{0.0, 1.0}})};
  CHECK(validate_dataset(d, c).ok());
  CHECK_FALSE(validate_dataset(d, c, /*ins_only=*/true).ok());

  d.items.push_back(item("1", "B"));
  CHECK_FALSE(validate_dataset(d, c).ok());  // duplicate id

  LabeledDataset unknown;
  unknown.items = {item("x", "C")};
  CHECK_FALSE(validate_dataset(unknown, c).ok());

  LabeledDataset not_unit;
  not_unit.items = {item("x", "A", Vector{{3.0, 4.0}})};
  CHECK_FALSE(validate_dataset(not_unit, c).ok());
}

TEST_CASE("dataset dimension and matrix") {
  LabeledDataset d;
  d.items = {item("1", "A", Vector{{1.0, 0.0}}), item("2", "B", Vector{{0.0, 1.0}})};
  CHECK(d.dimension() == 2);
  CHECK(d.fully_embedded());
  const auto m = d.embedding_matrix();
  CHECK(m.rows() == 2);
  CHECK(m(1, 1) == 1.0);

  d.items.push_back(item("3", "A", Vector{{1.0, 0.0, 0.0}}));
  CHECK_THROWS_AS(d.dimension(), InvalidArgument);

  LabeledDataset partial;
  partial.items = {item("1", "A", Vector{{1.0, 0.0}}), item("2", "A")};
  CHECK_FALSE(partial.fully_embedded());
  CHECK_THROWS_AS(partial.embedding_matrix(), InvalidArgument);
}

TEST_CASE("trim") {
  CHECK(trim("  a b \t\n") == "a b");
  CHECK(trim("") == "");
  CHECK(trim(" \t ") == "");
}

}
