#include "intentgate/uncertainty.hpp"

#include "intentgate/error.hpp"
#include "intentgate/io.hpp"
#include "intentgate/nnls.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace intentgate {

NnkDictionary::NnkDictionary(Matrix atoms, std::size_t neighbors, NnkFitMeta meta)
    : atoms_(std::move(atoms)), neighbors_(neighbors), meta_(std::move(meta)) {
  if (atoms_.rows() == 0 || atoms_.cols() == 0) throw InvalidArgument("nnk dictionary: no atoms");
  if (neighbors_ < 1 || neighbors_ > num_atoms()) {
    throw InvalidArgument("nnk dictionary: neighbors K must satisfy 1 <= K <= M");
  }
  for (Eigen::Index r = 0; r < atoms_.rows(); ++r) {
    if (!atoms_.row(r).allFinite() || std::abs(atoms_.row(r).norm() - 1.0) > kUnitNormTolerance) {
      throw InvalidArgument("nnk dictionary: atom " + std::to_string(r) + " is not unit-norm");
    }
  }
}

NnkDictionary NnkDictionary::with_neighbors(std::size_t neighbors) const {
  return NnkDictionary(atoms_, neighbors, meta_);
}

namespace {

SparseCode code_with_similarities(const Matrix& atoms, std::size_t neighbors, const Vector& x,
                                  const Vector& similarities) {
  const auto m = static_cast<std::size_t>(atoms.rows());
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  const auto k = std::min(neighbors, m);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      const double sa = similarities[static_cast<Eigen::Index>(a)];
                      const double sb = similarities[static_cast<Eigen::Index>(b)];
                      return sa > sb || (sa == sb && a < b);
                    });
  order.resize(k);

  Matrix selected(atoms.cols(), static_cast<Eigen::Index>(k));  // d x K
  Vector rhs(static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) {
    selected.col(static_cast<Eigen::Index>(i)) = atoms.row(static_cast<Eigen::Index>(order[i])).transpose();
    rhs[static_cast<Eigen::Index>(i)] = similarities[static_cast<Eigen::Index>(order[i])];
  }
  const Matrix gram = selected.transpose() * selected;

  SparseCode code;
  code.atoms = std::move(order);
  code.weights = solve_nnls_gram(gram, rhs).weights;
  code.residual = (x - selected * code.weights).squaredNorm();
  return code;
}

struct CodingPass {
  std::vector<SparseCode> codes;
  std::vector<double> residuals;
  double mean = 0.0;
};

CodingPass code_all(const Matrix& atoms, std::size_t neighbors, const Matrix& embeddings) {
  CodingPass pass;
  const Matrix sims = embeddings * atoms.transpose();  // n x M
  const auto n = embeddings.rows();
  pass.codes.reserve(static_cast<std::size_t>(n));
  pass.residuals.reserve(static_cast<std::size_t>(n));
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    pass.codes.push_back(code_with_similarities(atoms, neighbors, embeddings.row(i).transpose(),
                                                sims.row(i).transpose()));
    pass.residuals.push_back(pass.codes.back().residual);
    total += pass.residuals.back();
  }
  pass.mean = total / static_cast<double>(n);
  return pass;
}

// D^2 seeding: the first atom is uniform, each further atom is drawn with probability
// proportional to its squared distance from the nearest chosen atom.
Matrix seed_atoms(const Matrix& embeddings, std::size_t n_atoms, std::mt19937_64& rng) {
  const auto n = static_cast<std::size_t>(embeddings.rows());
  std::vector<std::size_t> chosen;
  std::vector<bool> taken(n, false);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());

  auto take = [&](std::size_t idx) {
    chosen.push_back(idx);
    taken[idx] = true;
    const Vector a = embeddings.row(static_cast<Eigen::Index>(idx)).transpose();
    for (std::size_t i = 0; i < n; ++i) {
      const double d = (embeddings.row(static_cast<Eigen::Index>(i)).transpose() - a).squaredNorm();
      nearest[i] = std::min(nearest[i], d);
    }
  };

  take(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
  while (chosen.size() < n_atoms) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!taken[i]) total += nearest[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (std::size_t i = 0; i < n; ++i) {
        if (taken[i] || nearest[i] <= 0.0) continue;
        pick = i;
        u -= nearest[i];
        if (u <= 0.0) break;
      }
    }
    if (pick == n) {
      // Only duplicates of chosen atoms remain.
      std::vector<std::size_t> free;
      for (std::size_t i = 0; i < n; ++i) {
        if (!taken[i]) free.push_back(i);
      }
      pick = free[std::uniform_int_distribution<std::size_t>(0, free.size() - 1)(rng)];
    }
    take(pick);
  }

  Matrix atoms(static_cast<Eigen::Index>(n_atoms), embeddings.cols());
  for (std::size_t j = 0; j < n_atoms; ++j) {
    atoms.row(static_cast<Eigen::Index>(j)) = embeddings.row(static_cast<Eigen::Index>(chosen[j]));
  }
  return atoms;
}

// Least-squares atoms for the current codes, min_D ||X - W D||_F^2 with W the n x M code matrix,
// then unit rows. A tiny ridge keeps unused atoms solvable; they are reseeded instead.
Matrix update_atoms(const Matrix& atoms, const CodingPass& pass, const Matrix& embeddings) {
  const Eigen::Index m = atoms.rows();
  Matrix gram = Matrix::Zero(m, m);
  Matrix rhs = Matrix::Zero(m, atoms.cols());
  std::vector<bool> used(static_cast<std::size_t>(m), false);
  for (std::size_t i = 0; i < pass.codes.size(); ++i) {
    const auto& code = pass.codes[i];
    for (std::size_t s = 0; s < code.atoms.size(); ++s) {
      const double w = code.weights[static_cast<Eigen::Index>(s)];
      if (w <= 0.0) continue;
      const auto a = static_cast<Eigen::Index>(code.atoms[s]);
      used[code.atoms[s]] = true;
      rhs.row(a) += w * embeddings.row(static_cast<Eigen::Index>(i));
      for (std::size_t r = 0; r < code.atoms.size(); ++r) {
        gram(a, static_cast<Eigen::Index>(code.atoms[r])) += w * code.weights[static_cast<Eigen::Index>(r)];
      }
    }
  }
  gram.diagonal().array() += 1e-10 * std::max(1.0, gram.diagonal().maxCoeff());
  const Matrix solved = gram.ldlt().solve(rhs);

  // Dead atoms go to the worst-reconstructed points, one point per atom.
  std::vector<std::size_t> worst(pass.residuals.size());
  std::iota(worst.begin(), worst.end(), 0);
  std::stable_sort(worst.begin(), worst.end(),
                   [&](std::size_t a, std::size_t b) { return pass.residuals[a] > pass.residuals[b]; });
  std::size_t next_worst = 0;

  Matrix updated = atoms;
  for (Eigen::Index j = 0; j < m; ++j) {
    const double norm = solved.row(j).norm();
    if (used[static_cast<std::size_t>(j)] && std::isfinite(norm) && norm > 1e-12) {
      updated.row(j) = solved.row(j) / norm;
    } else if (next_worst < worst.size() && pass.residuals[worst[next_worst]] > 0.0) {
      updated.row(j) = embeddings.row(static_cast<Eigen::Index>(worst[next_worst++]));
    }
  }
  return updated;
}

// Unit rows of (1 - eta) * from + eta * to; rows that cancel out keep `from`.
Matrix blend_atoms(const Matrix& from, const Matrix& to, double eta) {
  Matrix out = (1.0 - eta) * from + eta * to;
  for (Eigen::Index j = 0; j < out.rows(); ++j) {
    const double norm = out.row(j).norm();
    if (norm > 1e-12) {
      out.row(j) /= norm;
    } else {
      out.row(j) = from.row(j);
    }
  }
  return out;
}

void require_unit_rows(const Matrix& embeddings) {
  for (Eigen::Index r = 0; r < embeddings.rows(); ++r) {
    if (!embeddings.row(r).allFinite() || std::abs(embeddings.row(r).norm() - 1.0) > kUnitNormTolerance) {
      throw InvalidArgument("fit_nnk: embedding " + std::to_string(r) + " is not unit-norm");
    }
  }
}

}  // namespace

SparseCode nnk_code(const NnkDictionary& dictionary, const Vector& x) {
  if (static_cast<std::size_t>(x.size()) != dictionary.dim()) {
    throw InvalidArgument("nnk_code: embedding dimension " + std::to_string(x.size()) +
                          " does not match dictionary dimension " + std::to_string(dictionary.dim()));
  }
  const Vector sims = dictionary.atoms() * x;
  return code_with_similarities(dictionary.atoms(), dictionary.neighbors(), x, sims);
}

NnkDictionary fit_nnk(const Matrix& embeddings, const NnkFitConfig& config) {
  const auto n = static_cast<std::size_t>(embeddings.rows());
  if (n == 0) throw InvalidArgument("fit_nnk: no embeddings");
  if (config.n_atoms < 1) throw InvalidArgument("fit_nnk: n_atoms must be >= 1");
  if (config.n_atoms > n) {
    throw InvalidArgument("fit_nnk: n_atoms=" + std::to_string(config.n_atoms) + " exceeds the " +
                          std::to_string(n) + " training embeddings");
  }
  if (config.neighbors < 1 || config.neighbors > config.n_atoms) {
    throw InvalidArgument("fit_nnk: neighbors K must satisfy 1 <= K <= n_atoms");
  }
  if (config.iterations < 1) throw InvalidArgument("fit_nnk: iterations must be >= 1");
  require_unit_rows(embeddings);

  std::mt19937_64 rng(config.seed);
  Matrix atoms = seed_atoms(embeddings, config.n_atoms, rng);
  CodingPass pass = code_all(atoms, config.neighbors, embeddings);

  NnkFitMeta meta;
  meta.iterations = config.iterations;
  meta.seed = config.seed;
  meta.error_trace.push_back(pass.mean);
  for (int t = 1; t <= config.iterations; ++t) {
    // Full step first, then shorter steps towards it. Coding picks atoms by inner product, so
    // even the exact least-squares step can raise the residual; a step that never helps is
    // rejected and the trace stays flat.
    const Matrix target = update_atoms(atoms, pass, embeddings);
    bool accepted = false;
    for (double eta = 1.0; eta >= 1.0 / 16 && !accepted; eta /= 2) {
      Matrix candidate = eta == 1.0 ? target : blend_atoms(atoms, target, eta);
      CodingPass next = code_all(candidate, config.neighbors, embeddings);
      if (next.mean <= pass.mean) {
        atoms = std::move(candidate);
        pass = std::move(next);
        accepted = true;
      }
    }
    if (!accepted) {
      ++meta.rejected_updates;
      spdlog::debug("fit_nnk: iteration {} rejected", t);
    }
    meta.error_trace.push_back(pass.mean);
    spdlog::debug("fit_nnk: iteration {} mean residual {}", t, pass.mean);
  }
  meta.final_error = pass.mean;
  return NnkDictionary(std::move(atoms), config.neighbors, std::move(meta));
}

double mean_residual(const NnkDictionary& dictionary, const Matrix& embeddings) {
  if (embeddings.rows() == 0) throw InvalidArgument("mean_residual: no embeddings");
  if (static_cast<std::size_t>(embeddings.cols()) != dictionary.dim()) {
    throw InvalidArgument("mean_residual: dimension mismatch");
  }
  return code_all(dictionary.atoms(), dictionary.neighbors(), embeddings).mean;
}

ScoreMethod parse_score_method(std::string_view name) {
  if (name == "nnk") return ScoreMethod::nnk;
  if (name == "entropy") return ScoreMethod::entropy;
  if (name == "energy") return ScoreMethod::energy;
  throw InvalidArgument("unknown score method '" + std::string(name) + "' (nnk|entropy|energy)");
}

std::string_view to_string(ScoreMethod method) {
  switch (method) {
    case ScoreMethod::nnk: return "nnk";
    case ScoreMethod::entropy: return "entropy";
    case ScoreMethod::energy: return "energy";
  }
  return "unknown";
}

double entropy_score(std::span<const double> probabilities) {
  if (probabilities.empty()) throw InvalidArgument("entropy: empty probability vector");
  double total = 0.0;
  double h = 0.0;
  for (double p : probabilities) {
    if (!(p >= 0.0) || p > 1.0 + 1e-12) throw InvalidArgument("entropy: probability outside [0,1]");
    total += p;
    if (p > 0.0) h -= p * std::log(p);
  }
  if (std::abs(total - 1.0) > 1e-6) {
    throw InvalidArgument("entropy: probabilities sum to " + std::to_string(total));
  }
  return std::max(h, 0.0);
}

double energy_score(std::span<const double> logits) {
  if (logits.empty()) throw InvalidArgument("energy: empty logits");
  const double max = *std::max_element(logits.begin(), logits.end());
  if (!std::isfinite(max)) throw InvalidArgument("energy: non-finite logits");
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - max);
  return -(max + std::log(sum));
}

namespace {
std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}
}  // namespace

UncertaintyScore score(const ScoringInput& input, ScoreMethod method) {
  switch (method) {
    case ScoreMethod::nnk:
      if (!input.dictionary || !input.embedding) {
        throw InvalidArgument("nnk score requires a dictionary and an embedding");
      }
      return {nnk_code(*input.dictionary, *input.embedding).residual, method};
    case ScoreMethod::entropy:
      if (!input.probabilities) throw InvalidArgument("entropy score requires probabilities");
      return {entropy_score(as_span(*input.probabilities)), method};
    case ScoreMethod::energy:
      if (!input.logits) throw InvalidArgument("energy score requires logits");
      return {energy_score(as_span(*input.logits)), method};
  }
  throw InvalidArgument("unknown score method");
}

nlohmann::json dictionary_to_json(const NnkDictionary& dictionary) {
  const auto& m = dictionary.meta();
  return {{"dim", dictionary.dim()},
          {"K", dictionary.neighbors()},
          {"atoms", io::matrix_to_json(dictionary.atoms())},
          {"meta",
           {{"iterations", m.iterations},
            {"seed", m.seed},
            {"final_error", m.final_error},
            {"error_trace", m.error_trace},
            {"rejected_updates", m.rejected_updates}}}};
}

NnkDictionary dictionary_from_json(const nlohmann::json& j) {
  try {
    Matrix atoms = io::matrix_from_json(j.at("atoms"));
    if (static_cast<std::size_t>(atoms.cols()) != j.at("dim").get<std::size_t>()) {
      throw InvalidArgument("dictionary file: atom length does not match dim");
    }
    NnkFitMeta meta;
    if (j.contains("meta")) {
      const auto& jm = j["meta"];
      meta.iterations = jm.value("iterations", 0);
      meta.seed = jm.value("seed", std::uint64_t{0});
      meta.final_error = jm.value("final_error", 0.0);
      meta.error_trace = jm.value("error_trace", std::vector<double>{});
      meta.rejected_updates = jm.value("rejected_updates", 0);
    }
    return NnkDictionary(std::move(atoms), j.at("K").get<std::size_t>(), std::move(meta));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("dictionary file: ") + e.what());
  }
}

std::size_t default_atom_count(std::size_t n_train, std::size_t n_classes) {
  return std::min(n_train, 20 * n_classes);
}

}  // namespace intentgate
