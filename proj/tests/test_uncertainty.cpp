#include "intentgate/error.hpp"
#include "intentgate/synthetic.hpp"
#include "intentgate/uncertainty.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace intentgate;

namespace {

Matrix random_unit_rows(std::mt19937_64& rng, int n, int d) {
  std::normal_distribution<double> g;
  Matrix m(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) m(i, j) = g(rng);
    m.row(i).normalize();
  }
  return m;
}

Vector random_unit(std::mt19937_64& rng, int d) { return random_unit_rows(rng, 1, d).row(0).transpose(); }

// Oracle: P(score_oos > score_ins) + 0.5 P(tie), by counting every pair.
double auroc_pairs(const std::vector<double>& ins, const std::vector<double>& oos) {
  double wins = 0.0;
  for (double o : oos)
    for (double i : ins) wins += o > i ? 1.0 : (o == i ? 0.5 : 0.0);
  return wins / (static_cast<double>(ins.size()) * static_cast<double>(oos.size()));
}

// Oracle: best Euclidean 2-partition by enumeration; returns the two normalized means.
std::pair<Vector, Vector> exhaustive_two_means(const Matrix& x) {
  const int n = static_cast<int>(x.rows());
  double best = INFINITY;
  std::pair<Vector, Vector> out;
  for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
    Vector s0 = Vector::Zero(x.cols()), s1 = Vector::Zero(x.cols());
    int n0 = 0, n1 = 0;
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) { s1 += x.row(i).transpose(); ++n1; }
      else { s0 += x.row(i).transpose(); ++n0; }
    }
    const Vector m0 = s0 / n0, m1 = s1 / n1;
    double sse = 0.0;
    for (int i = 0; i < n; ++i) sse += (x.row(i).transpose() - ((mask & (1u << i)) ? m1 : m0)).squaredNorm();
    if (sse < best) {
      best = sse;
      out = {m0.normalized(), m1.normalized()};
    }
  }
  return out;
}

}  // namespace

TEST_SUITE("uncertainty") {

TEST_CASE("nnk_code analytic cases") {
  const NnkDictionary dict(Matrix::Identity(2, 2), 2);
  const auto a = nnk_code(dict, Vector{{0.6, 0.8}});
  REQUIRE(a.atoms.size() == 2);
  CHECK(a.atoms[0] == 1);  // larger inner product first
  CHECK(a.weights(0) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(a.weights(1) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(a.residual <= 1e-12);

  const auto b = nnk_code(dict, Vector{{-1.0, 0.0}});
  CHECK(b.weights.isZero());
  CHECK(b.residual == doctest::Approx(1.0).epsilon(1e-12));

  std::mt19937_64 rng(1);
  const Matrix atoms = random_unit_rows(rng, 8, 5);
  const NnkDictionary d8(atoms, 3);
  for (int j = 0; j < 8; ++j) {
    const auto c = nnk_code(d8, atoms.row(j).transpose());
    CHECK(c.residual <= 1e-10);
    CHECK(c.atoms[0] == static_cast<std::size_t>(j));
    CHECK(c.weights(0) == doctest::Approx(1.0));
  }
  CHECK_THROWS_AS(nnk_code(d8, Vector{{1.0, 0.0}}), InvalidArgument);
}

TEST_CASE("nnk_code KKT, bounds and K monotonicity on random queries") {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 100; ++t) {
    const int d = 4 + t % 8, m = 6 + t % 10;
    const Matrix atoms = random_unit_rows(rng, m, d);
    const Vector x = random_unit(rng, d);
    double previous = INFINITY;
    for (int k = 1; k <= m; ++k) {
      const auto c = nnk_code(NnkDictionary(atoms, static_cast<std::size_t>(k)), x);
      Matrix as(c.atoms.size(), d);
      for (std::size_t i = 0; i < c.atoms.size(); ++i) as.row(static_cast<Eigen::Index>(i)) = atoms.row(static_cast<Eigen::Index>(c.atoms[i]));
      const Vector r = as.transpose() * c.weights - x;
      CHECK(std::abs(r.squaredNorm() - c.residual) <= 1e-12);
      const Vector grad = 2.0 * as * r;
      for (Eigen::Index i = 0; i < c.weights.size(); ++i) {
        CHECK(c.weights(i) >= 0.0);
        if (c.weights(i) > 0) CHECK(std::abs(grad(i)) <= 1e-6);
        else CHECK(grad(i) >= -1e-6);
      }
      CHECK(c.residual >= 0.0);
      CHECK(c.residual <= 1.0 + 1e-12);
      CHECK(c.residual <= previous + 1e-12);
      previous = c.residual;
    }
  }
}

TEST_CASE("dictionary invariants") {
  CHECK_THROWS_AS(NnkDictionary(Matrix::Identity(2, 2), 3), InvalidArgument);
  CHECK_THROWS_AS(NnkDictionary(Matrix::Identity(2, 2), 0), InvalidArgument);
  CHECK_THROWS_AS(NnkDictionary(2.0 * Matrix::Identity(2, 2), 1), InvalidArgument);
  const NnkDictionary d(Matrix::Identity(3, 3), 1);
  CHECK(d.with_neighbors(3).neighbors() == 3);
}

TEST_CASE("fit_nnk on copies of one point") {
  Matrix x(10, 3);
  for (int i = 0; i < 10; ++i) x.row(i) = Vector{{0.0, 0.6, 0.8}}.transpose();
  const auto d = fit_nnk(x, {1, 1, 5, 0});
  CHECK((d.atoms().row(0) - x.row(0)).norm() <= 1e-12);
  for (int i = 0; i < 10; ++i) CHECK(nnk_code(d, x.row(i).transpose()).residual <= 1e-12);
}

TEST_CASE("fit_nnk with one atom per distinct point reconstructs exactly") {
  std::mt19937_64 rng(4);
  const Matrix x = random_unit_rows(rng, 12, 6);
  const auto d = fit_nnk(x, {12, 3, 5, 9});
  for (int i = 0; i < 12; ++i) CHECK(nnk_code(d, x.row(i).transpose()).residual <= 1e-10);
}

TEST_CASE("fit_nnk recovers two separated clusters like exhaustive 2-means") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> g(0.0, 0.05);
  const Vector c0{{1.0, 0.0, 0.0}}, c1{{0.0, 1.0, 0.0}};  // 90 degrees apart
  Matrix x(12, 3);
  for (int i = 0; i < 12; ++i) {
    Vector p = (i < 6 ? c0 : c1);
    for (auto& v : p) v += g(rng);
    x.row(i) = p.normalized().transpose();
  }
  const auto [m0, m1] = exhaustive_two_means(x);
  const auto d = fit_nnk(x, {2, 1, 20, 3});
  for (const Vector& m : {m0, m1}) {
    const double best_cos = std::max(d.atoms().row(0).dot(m), d.atoms().row(1).dot(m));
    CHECK(1.0 - best_cos <= 0.1);
  }
}

TEST_CASE("fit_nnk descent and determinism") {
  std::mt19937_64 rng(2024);
  for (int t = 0; t < 20; ++t) {
    const int n = 40 + 5 * t, d = 4 + t % 6;
    const Matrix x = random_unit_rows(rng, n, d);
    const NnkFitConfig cfg{static_cast<std::size_t>(5 + t % 6), static_cast<std::size_t>(1 + t % 4), 15, static_cast<std::uint64_t>(t)};
    const auto dict = fit_nnk(x, cfg);
    const auto& trace = dict.meta().error_trace;
    REQUIRE(trace.size() == static_cast<std::size_t>(cfg.iterations) + 1);
    for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-9);
    CHECK(dict.meta().final_error == doctest::Approx(mean_residual(dict, x)).epsilon(1e-12));
    for (Eigen::Index r = 0; r < dict.atoms().rows(); ++r) CHECK(std::abs(dict.atoms().row(r).norm() - 1.0) <= 1e-6);
    if (t < 3) CHECK(fit_nnk(x, cfg).atoms() == dict.atoms());
  }
}

TEST_CASE("fit_nnk moves atoms off their seeds") {
  // Seeds are data points, so the updates must beat an already decent start.
  SyntheticWorldConfig cfg;
  cfg.seed = 5;
  const auto x = make_synthetic_world(cfg).train.embedding_matrix();
  const auto dict = fit_nnk(x, {60, 10, 10, 5});
  const auto& trace = dict.meta().error_trace;
  CHECK(trace.back() < 0.8 * trace.front());
  CHECK(dict.meta().rejected_updates < 10);
}

TEST_CASE("fit_nnk preconditions") {
  CHECK_THROWS_AS(fit_nnk(Matrix(0, 3), {1, 1, 1, 0}), InvalidArgument);
  CHECK_THROWS_AS(fit_nnk(Matrix::Identity(2, 2), {3, 1, 1, 0}), InvalidArgument);
  CHECK_THROWS_AS(fit_nnk(Matrix::Identity(2, 2), {2, 3, 1, 0}), InvalidArgument);
  CHECK_THROWS_AS(fit_nnk(Matrix::Identity(2, 2), {2, 1, 0, 0}), InvalidArgument);
  CHECK_THROWS_AS(fit_nnk(2.0 * Matrix::Identity(2, 2), {2, 1, 1, 0}), InvalidArgument);
  CHECK(default_atom_count(1000, 7) == 140);
  CHECK(default_atom_count(50, 7) == 50);
}

TEST_CASE("score methods") {
  const Vector uniform = Vector::Constant(4, 0.25);
  CHECK(entropy_score(std::span<const double>(uniform.data(), 4)) == doctest::Approx(1.386294).epsilon(1e-6));
  const Vector one_hot{{0.0, 1.0, 0.0}};
  CHECK(entropy_score(std::span<const double>(one_hot.data(), 3)) == 0.0);
  const Vector bad{{0.5, 0.6}};
  CHECK_THROWS_AS(entropy_score(std::span<const double>(bad.data(), 2)), InvalidArgument);

  const Vector z{{1.0, 2.0, 3.0}};
  CHECK(energy_score(std::span<const double>(z.data(), 3)) ==
        doctest::Approx(-std::log(std::exp(1.0) + std::exp(2.0) + std::exp(3.0))));
  CHECK_THROWS_AS(energy_score(std::span<const double>()), InvalidArgument);

  const NnkDictionary dict(Matrix::Identity(3, 3), 2);
  const Vector atom{{0.0, 0.0, 1.0}};
  ScoringInput in;
  in.dictionary = &dict;
  in.embedding = &atom;
  in.probabilities = &uniform;
  in.logits = &z;
  CHECK(score(in, ScoreMethod::nnk).value <= 1e-10);
  CHECK(score(in, ScoreMethod::entropy).value == doctest::Approx(std::log(4.0)));
  CHECK(score(in, ScoreMethod::energy).method == ScoreMethod::energy);
  CHECK_THROWS_AS(score(ScoringInput{}, ScoreMethod::nnk), InvalidArgument);

  CHECK(parse_score_method("entropy") == ScoreMethod::entropy);
  CHECK(to_string(ScoreMethod::energy) == "energy");
  CHECK_THROWS_AS(parse_score_method("vibes"), InvalidArgument);
}

TEST_CASE("nnk separates a distant OOS cluster") {
  SyntheticWorldConfig cfg;
  cfg.seed = 3;
  const auto world = make_synthetic_world(cfg);
  const auto dict = fit_nnk(world.train.embedding_matrix(), {20, 10, 20, 3});
  std::vector<double> ins, oos;
  for (const auto& it : world.test.items) {
    (it.label == "OOS" ? oos : ins).push_back(nnk_code(dict, it.utterance.embedding).residual);
  }
  CHECK(auroc_pairs(ins, oos) >= 0.99);
}

TEST_CASE("dictionary json round trip") {
  std::mt19937_64 rng(8);
  const Matrix x = random_unit_rows(rng, 30, 4);
  const auto d = fit_nnk(x, {6, 2, 4, 8});
  const auto j = dictionary_to_json(d);
  CHECK(j.at("dim") == 4);
  CHECK(j.at("K") == 2);
  const auto back = dictionary_from_json(j);
  CHECK(back.atoms() == d.atoms());
  CHECK(back.meta().error_trace == d.meta().error_trace);
  CHECK_THROWS_AS(dictionary_from_json(nlohmann::json::parse(R"({"dim": 2, "K": 1, "atoms": [[1, 0, 0]]})")), InvalidArgument);
}

}
