#include "intentgate/classifier.hpp"

#include "intentgate/error.hpp"
#include "intentgate/io.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

namespace intentgate {

Vector softmax(const Vector& logits) {
  if (logits.size() == 0) throw InvalidArgument("softmax of empty logits");
  const double max = logits.maxCoeff();
  Vector e = (logits.array() - max).exp().matrix();
  return e / e.sum();
}

FocalLoss focal_loss(std::span<const double> probabilities, std::size_t gold, double gamma,
                     double alpha) {
  if (probabilities.empty()) throw InvalidArgument("focal_loss: empty probability vector");
  if (gold >= probabilities.size()) throw InvalidArgument("focal_loss: gold index out of range");
  if (gamma < 0.0) throw InvalidArgument("focal_loss: gamma must be >= 0");
  if (!(alpha > 0.0)) throw InvalidArgument("focal_loss: alpha must be > 0");
  const double total = std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-6) {
    throw InvalidArgument("focal_loss: probabilities sum to " + std::to_string(total));
  }

  FocalLoss out;
  double pt = probabilities[gold];
  if (pt < kFocalEpsilon) {
    spdlog::debug("focal_loss: p_t={} clamped to {}", pt, kFocalEpsilon);
    pt = kFocalEpsilon;
    out.clamped = true;
  }
  const double q = 1.0 - pt;
  const double log_pt = std::log(pt);
  const double modulator = std::pow(q, gamma);
  out.loss = -alpha * modulator * log_pt;
  if (out.loss < 0.0) out.loss = 0.0;  // -0.0 when p_t == 1

  // dFL/dz_j = g * (delta_tj - p_j) with g = alpha * (gamma * q^(gamma-1) * p_t * log p_t - q^gamma).
  // The first term vanishes as q -> 0 for any gamma >= 0.
  const double focusing = (gamma == 0.0 || q == 0.0) ? 0.0 : gamma * std::pow(q, gamma - 1.0) * pt * log_pt;
  const double g = alpha * (focusing - modulator);
  out.gradient.resize(static_cast<Eigen::Index>(probabilities.size()));
  for (std::size_t j = 0; j < probabilities.size(); ++j) {
    const double delta = j == gold ? 1.0 : 0.0;
    out.gradient[static_cast<Eigen::Index>(j)] = g * (delta - probabilities[j]);
  }
  return out;
}

std::vector<std::string> TopKPrediction::labels() const {
  std::vector<std::string> out;
  out.reserve(ranked.size());
  for (const auto& [name, p] : ranked) out.push_back(name);
  return out;
}

ClassifierModel::ClassifierModel(Matrix weights, Vector biases, std::vector<std::string> classes,
                                 TrainingMeta meta)
    : weights_(std::move(weights)),
      biases_(std::move(biases)),
      classes_(std::move(classes)),
      meta_(std::move(meta)) {
  if (classes_.empty()) throw InvalidArgument("classifier: no classes");
  if (static_cast<std::size_t>(weights_.cols()) != classes_.size() ||
      static_cast<std::size_t>(biases_.size()) != classes_.size()) {
    throw InvalidArgument("classifier: weight/bias shape does not match class count");
  }
  if (!weights_.allFinite() || !biases_.allFinite()) {
    throw InvalidArgument("classifier: non-finite parameters");
  }
}

Vector ClassifierModel::logits(const Vector& x) const {
  if (x.size() != weights_.rows()) {
    throw InvalidArgument("classifier: embedding dimension " + std::to_string(x.size()) +
                          " does not match model dimension " + std::to_string(weights_.rows()));
  }
  return weights_.transpose() * x + biases_;
}

void ClassifierModel::check_compatible(const IntentCatalog& catalog) const {
  if (catalog.names() != classes_) {
    throw InvalidArgument("classifier classes do not match the intent catalog");
  }
}

namespace {

std::vector<double> resolve_alpha(const ClassWeighting& weighting, const std::vector<std::size_t>& counts) {
  const std::size_t n_classes = counts.size();
  if (const auto* scalar = std::get_if<double>(&weighting)) {
    if (!(*scalar > 0.0)) throw InvalidArgument("alpha must be > 0");
    return std::vector<double>(n_classes, *scalar);
  }
  if (const auto* per_class = std::get_if<std::vector<double>>(&weighting)) {
    if (per_class->size() != n_classes) throw InvalidArgument("alpha vector length must equal N");
    for (double a : *per_class) {
      if (!(a > 0.0)) throw InvalidArgument("alpha entries must be > 0");
    }
    return *per_class;
  }
  // Inverse class frequency over the classes present, normalized to mean 1.
  std::vector<double> alpha(n_classes, 1.0);
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (counts[c] == 0) continue;
    alpha[c] = 1.0 / static_cast<double>(counts[c]);
    sum += alpha[c];
    ++present;
  }
  const double mean = sum / static_cast<double>(present);
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (counts[c] > 0) alpha[c] /= mean;
  }
  return alpha;
}

struct Batch {
  Matrix x;                        // n x d
  std::vector<std::size_t> gold;   // class index per row
};

Batch make_batch(const LabeledDataset& dataset, const std::vector<std::string>& classes) {
  Batch batch;
  batch.x = dataset.embedding_matrix();
  batch.gold.reserve(dataset.size());
  for (const auto& item : dataset.items) {
    auto it = std::find(classes.begin(), classes.end(), item.label);
    if (it == classes.end()) throw InvalidArgument("label '" + item.label + "' not among classifier classes");
    batch.gold.push_back(static_cast<std::size_t>(it - classes.begin()));
  }
  return batch;
}

double batch_loss(const Matrix& weights, const Vector& biases, const Batch& batch, double gamma,
                  const std::vector<double>& alpha, Matrix* grad_w, Vector* grad_b) {
  const auto n = batch.x.rows();
  const Matrix logits = (batch.x * weights).rowwise() + biases.transpose();
  if (grad_w) grad_w->setZero(weights.rows(), weights.cols());
  if (grad_b) grad_b->setZero(biases.size());
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector p = softmax(logits.row(i).transpose());
    const auto gold = batch.gold[static_cast<std::size_t>(i)];
    const auto fl = focal_loss(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())),
                               gold, gamma, alpha[gold]);
    total += fl.loss;
    if (grad_w) grad_w->noalias() += batch.x.row(i).transpose() * fl.gradient.transpose();
    if (grad_b) *grad_b += fl.gradient;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  if (grad_w) *grad_w *= inv_n;
  if (grad_b) *grad_b *= inv_n;
  return total * inv_n;
}

}  // namespace

ClassifierModel train_classifier(const LabeledDataset& dataset, const IntentCatalog& catalog,
                                 const TrainingConfig& config) {
  require_valid(catalog);
  if (dataset.empty()) throw InvalidArgument("train: empty dataset");
  if (config.gamma < 0.0) throw InvalidArgument("train: gamma must be >= 0");
  if (!(config.learning_rate > 0.0)) throw InvalidArgument("train: learning_rate must be > 0");
  if (config.epochs < 1) throw InvalidArgument("train: epochs must be >= 1");

  std::set<std::string> distinct;
  for (const auto& item : dataset.items) {
    if (catalog.is_oos(item.label)) throw InvalidArgument("OOS not permitted in classifier training");
    if (!catalog.contains(item.label)) throw InvalidArgument("train: unknown label '" + item.label + "'");
    distinct.insert(item.label);
  }
  if (distinct.size() < 2) throw InvalidArgument("train: need at least 2 distinct labels");

  const auto classes = catalog.names();
  const Batch batch = make_batch(dataset, classes);
  const auto dim = batch.x.cols();
  const auto n_classes = static_cast<Eigen::Index>(classes.size());

  std::vector<std::size_t> counts(classes.size(), 0);
  for (auto g : batch.gold) ++counts[g];
  const auto alpha = resolve_alpha(config.alpha, counts);

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> init(0.0, 0.01);
  Matrix weights(dim, n_classes);
  for (Eigen::Index c = 0; c < n_classes; ++c) {
    for (Eigen::Index r = 0; r < dim; ++r) weights(r, c) = init(rng);
  }
  Vector biases = Vector::Zero(n_classes);

  Matrix grad_w;
  Vector grad_b;
  const double initial = batch_loss(weights, biases, batch, config.gamma, alpha, nullptr, nullptr);
  double loss = initial;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    loss = batch_loss(weights, biases, batch, config.gamma, alpha, &grad_w, &grad_b);
    weights -= config.learning_rate * grad_w;
    biases -= config.learning_rate * grad_b;
  }
  loss = batch_loss(weights, biases, batch, config.gamma, alpha, nullptr, nullptr);
  spdlog::debug("train: focal loss {} -> {} over {} epochs", initial, loss, config.epochs);

  TrainingMeta meta{config.gamma, alpha, config.learning_rate, config.epochs, config.seed, initial, loss};
  return ClassifierModel(std::move(weights), std::move(biases), classes, std::move(meta));
}

double mean_focal_loss(const ClassifierModel& model, const LabeledDataset& dataset, double gamma) {
  if (dataset.empty()) throw InvalidArgument("mean_focal_loss: empty dataset");
  const Batch batch = make_batch(dataset, model.classes());
  auto alpha = model.meta().alpha;
  if (alpha.size() != model.num_classes()) alpha.assign(model.num_classes(), 1.0);
  return batch_loss(model.weights(), model.biases(), batch, gamma, alpha, nullptr, nullptr);
}

TopKPrediction rank_topk(const Vector& logits, const std::vector<std::string>& classes,
                         std::size_t k) {
  if (k == 0) throw InvalidArgument("predict_topk: k must be >= 1");
  if (k > classes.size()) {
    throw InvalidArgument("predict_topk: k=" + std::to_string(k) + " exceeds N=" +
                          std::to_string(classes.size()));
  }
  if (static_cast<std::size_t>(logits.size()) != classes.size()) {
    throw InvalidArgument("predict_topk: logits length does not match class count");
  }
  TopKPrediction out;
  out.logits = logits;
  out.distribution = softmax(logits);
  std::vector<std::size_t> order(classes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return out.distribution[static_cast<Eigen::Index>(a)] > out.distribution[static_cast<Eigen::Index>(b)];
  });
  for (std::size_t i = 0; i < k; ++i) {
    out.ranked.emplace_back(classes[order[i]], out.distribution[static_cast<Eigen::Index>(order[i])]);
  }
  return out;
}

TopKPrediction predict_topk(const ClassifierModel& model, const Vector& x, std::size_t k) {
  return rank_topk(model.logits(x), model.classes(), k);
}

nlohmann::json classifier_to_json(const ClassifierModel& model) {
  const auto& m = model.meta();
  return {{"dim", model.dim()},
          {"classes", model.classes()},
          {"weights", io::matrix_to_json(model.weights())},
          {"biases", io::vector_to_json(model.biases())},
          {"meta",
           {{"gamma", m.gamma},
            {"alpha", m.alpha},
            {"learning_rate", m.learning_rate},
            {"epochs", m.epochs},
            {"seed", m.seed},
            {"initial_loss", m.initial_loss},
            {"final_loss", m.final_loss}}}};
}

ClassifierModel classifier_from_json(const nlohmann::json& j) {
  try {
    const auto dim = j.at("dim").get<std::size_t>();
    auto classes = j.at("classes").get<std::vector<std::string>>();
    Matrix weights = io::matrix_from_json(j.at("weights"));
    if (static_cast<std::size_t>(weights.rows()) != dim) {
      throw InvalidArgument("classifier file: weights row count does not match dim");
    }
    Vector biases = io::vector_from_json(j.at("biases"));
    TrainingMeta meta;
    if (j.contains("meta")) {
      const auto& jm = j["meta"];
      meta.gamma = jm.value("gamma", 0.0);
      meta.alpha = jm.value("alpha", std::vector<double>{});
      meta.learning_rate = jm.value("learning_rate", 0.0);
      meta.epochs = jm.value("epochs", 0);
      meta.seed = jm.value("seed", std::uint64_t{0});
      meta.initial_loss = jm.value("initial_loss", 0.0);
      meta.final_loss = jm.value("final_loss", 0.0);
    }
    return ClassifierModel(std::move(weights), std::move(biases), std::move(classes), std::move(meta));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("classifier file: ") + e.what());
  }
}

}  // namespace intentgate
