#pragma once

#include "intentgate/domain.hpp"

#include <json.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace intentgate {

// Probability clamp used inside log() so the loss stays finite.
inline constexpr double kFocalEpsilon = 1e-12;

struct FocalLoss {
  double loss = 0.0;
  Vector gradient;  // d loss / d logits
  bool clamped = false;
};

// FL(p_t) = -alpha * (1 - p_t)^gamma * log(p_t), with the gradient taken through the
// softmax with respect to the logits that produced `probabilities`.
FocalLoss focal_loss(std::span<const double> probabilities, std::size_t gold, double gamma,
                     double alpha);

// Numerically stable softmax.
Vector softmax(const Vector& logits);

struct InverseFrequency {};
// Scalar weight for all classes, or an explicit per-class vector in catalog order.
using ClassWeighting = std::variant<InverseFrequency, double, std::vector<double>>;

struct TrainingConfig {
  double gamma = 2.0;
  ClassWeighting alpha = InverseFrequency{};
  double learning_rate = 0.5;
  int epochs = 300;
  std::uint64_t seed = 0;
};

struct TrainingMeta {
  double gamma = 0.0;
  std::vector<double> alpha;
  double learning_rate = 0.0;
  int epochs = 0;
  std::uint64_t seed = 0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

struct TopKPrediction {
  std::vector<std::pair<std::string, double>> ranked;  // descending probability
  Vector distribution;                                 // full P_C in catalog order
  Vector logits;

  const std::string& top1() const { return ranked.front().first; }
  std::vector<std::string> labels() const;
};

// Linear softmax head over unit embeddings: P_C(y|x) = softmax(W^T x + b).
class ClassifierModel {
 public:
  ClassifierModel() = default;
  ClassifierModel(Matrix weights, Vector biases, std::vector<std::string> classes,
                  TrainingMeta meta = {});

  std::size_t dim() const noexcept { return static_cast<std::size_t>(weights_.rows()); }
  std::size_t num_classes() const noexcept { return classes_.size(); }
  const Matrix& weights() const noexcept { return weights_; }
  const Vector& biases() const noexcept { return biases_; }
  const std::vector<std::string>& classes() const noexcept { return classes_; }
  const TrainingMeta& meta() const noexcept { return meta_; }

  Vector logits(const Vector& x) const;
  Vector probabilities(const Vector& x) const { return softmax(logits(x)); }

  // Must name exactly the catalog's intents in catalog order.
  void check_compatible(const IntentCatalog& catalog) const;

 private:
  Matrix weights_;  // d x N
  Vector biases_;   // N
  std::vector<std::string> classes_;
  TrainingMeta meta_;
};

// Full-batch gradient descent on the mean alpha-weighted focal loss. Dataset must be INS-only
// with at least two distinct labels; classes are the catalog's intents.
ClassifierModel train_classifier(const LabeledDataset& dataset, const IntentCatalog& catalog,
                                 const TrainingConfig& config);

// Mean weighted focal loss of `model` on `dataset`, using the alpha recorded in the model.
double mean_focal_loss(const ClassifierModel& model, const LabeledDataset& dataset, double gamma);

// Ranks by probability; ties keep catalog order.
TopKPrediction rank_topk(const Vector& logits, const std::vector<std::string>& classes,
                         std::size_t k);
TopKPrediction predict_topk(const ClassifierModel& model, const Vector& x, std::size_t k);

nlohmann::json classifier_to_json(const ClassifierModel& model);
ClassifierModel classifier_from_json(const nlohmann::json& j);

}  // namespace intentgate
