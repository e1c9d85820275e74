#include "intentgate/synthetic.hpp"

#include "intentgate/error.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace intentgate {

namespace {

Vector noisy(const Vector& center, double noise, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector g(center.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = gauss(rng);
  return normalize_embedding(Vector(center + noise * g / std::sqrt(static_cast<double>(center.size()))));
}

LabeledItem make_item(std::string id, std::string label, Vector embedding) {
  LabeledItem item;
  item.utterance.text = "synthetic utterance " + id;
  item.utterance.id = std::move(id);
  item.utterance.embedding = std::move(embedding);
  item.label = std::move(label);
  return item;
}

}  // namespace

SyntheticWorld make_synthetic_world(const SyntheticWorldConfig& config) {
  if (config.n_intents < 2) throw InvalidArgument("synthetic world: need at least 2 intents");
  if (config.dim < config.n_intents + 1) throw InvalidArgument("synthetic world: dim must exceed the intent count");
  if (!(config.noise >= 0.0)) throw InvalidArgument("synthetic world: noise must be >= 0");
  if (!(config.spread_min_angle_deg >= 0.0 && config.spread_min_angle_deg <= 90.0)) {
    throw InvalidArgument("synthetic world: spread_min_angle_deg must lie in [0, 90]");
  }

  SyntheticWorld world;
  for (std::size_t i = 0; i < config.n_intents; ++i) {
    world.catalog.intents.push_back({"intent_" + std::to_string(i), "Synthetic intent number " + std::to_string(i) + "."});
  }
  const auto basis = [&](std::size_t i) { return Vector(Vector::Unit(static_cast<Eigen::Index>(config.dim), static_cast<Eigen::Index>(i))); };
  const Vector oos_direction = basis(config.n_intents);

  std::mt19937_64 rng(config.seed);
  for (std::size_t i = 0; i < config.train; ++i) {
    const auto c = i % config.n_intents;
    world.train.items.push_back(make_item("train-" + std::to_string(i), world.catalog.intents[c].name, noisy(basis(c), config.noise, rng)));
  }
  for (std::size_t i = 0; i < config.ins_test; ++i) {
    const auto c = i % config.n_intents;
    world.test.items.push_back(make_item("test-" + std::to_string(i), world.catalog.intents[c].name, noisy(basis(c), config.noise, rng)));
  }
  std::uniform_real_distribution<double> angle(config.spread_min_angle_deg, 90.0);
  std::uniform_int_distribution<std::size_t> pick(0, config.n_intents - 1);
  for (std::size_t i = 0; i < config.oos_test; ++i) {
    Vector center = oos_direction;
    if (config.oos_mode == OosMode::spread) {
      const double phi = angle(rng) * std::numbers::pi / 180.0;
      center = std::cos(phi) * basis(pick(rng)) + std::sin(phi) * oos_direction;
    }
    world.test.items.push_back(make_item("oos-" + std::to_string(i), world.catalog.oos_token, noisy(center, config.noise, rng)));
  }
  return world;
}

LookupEmbedder::LookupEmbedder(const LabeledDataset& dataset) { add(dataset); }

void LookupEmbedder::add(const LabeledDataset& dataset) {
  for (const auto& item : dataset.items) {
    const auto& e = item.utterance.embedding;
    if (e.size() == 0) throw InvalidArgument("lookup embedder: item '" + item.utterance.id + "' has no embedding");
    if (dim_ == 0) dim_ = static_cast<std::size_t>(e.size());
    if (static_cast<std::size_t>(e.size()) != dim_) throw InvalidArgument("lookup embedder: mixed dimensions");
    table_[item.utterance.text] = std::vector<double>(e.data(), e.data() + e.size());
  }
}

std::vector<std::vector<double>> LookupEmbedder::embed(const std::vector<std::string>& texts) {
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    auto it = table_.find(t);
    if (it == table_.end()) throw BackendError("lookup embedder: unknown text '" + t + "'");
    out.push_back(it->second);
  }
  return out;
}

}  // namespace intentgate
