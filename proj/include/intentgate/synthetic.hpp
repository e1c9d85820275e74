#pragma once

#include "intentgate/backend.hpp"
#include "intentgate/domain.hpp"

#include <cstdint>
#include <string>
#include <unordered_map>

namespace intentgate {

// OOS placement. `cluster`: one extra orthogonal direction. `spread`: each OOS point leans
// from a random in-scope center towards that direction by an angle drawn uniformly from
// [spread_min_angle_deg, 90], so its distance to the in-scope data varies continuously.
enum class OosMode { cluster, spread };

struct SyntheticWorldConfig {
  std::size_t dim = 16;
  std::size_t n_intents = 3;
  std::size_t train = 300;     // in-scope only, round-robin over intents
  std::size_t ins_test = 100;
  std::size_t oos_test = 100;
  double noise = 0.35;         // expected norm of the perturbation added to a center
  OosMode oos_mode = OosMode::cluster;
  double spread_min_angle_deg = 10.0;
  std::uint64_t seed = 0;
};

// Centers are the first n_intents standard basis vectors (pairwise 90 degrees); the OOS
// direction is the next basis vector. Test items list in-scope first, then OOS.
struct SyntheticWorld {
  IntentCatalog catalog;
  LabeledDataset train;
  LabeledDataset test;
};

SyntheticWorld make_synthetic_world(const SyntheticWorldConfig& config);

// Serves stored embeddings by exact text; unknown text is a BackendError.
class LookupEmbedder final : public EmbedBackend {
 public:
  explicit LookupEmbedder(const LabeledDataset& dataset);
  void add(const LabeledDataset& dataset);
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;
  std::string describe() const override { return "lookup"; }

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::vector<double>> table_;
};

}  // namespace intentgate
