#include "intentgate/nnls.hpp"

#include <doctest.h>

#include <random>

using namespace intentgate;

namespace {

// KKT for min 0.5 w'Gw - b'w, w >= 0: g = Gw - b; g_i = 0 where w_i > 0, g_i >= 0 where w_i = 0.
double kkt_violation(const Matrix& G, const Vector& b, const Vector& w) {
  const Vector g = G * w - b;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w(i) < 0) worst = std::max(worst, -w(i));
    worst = std::max(worst, w(i) > 0 ? std::abs(g(i)) : std::max(0.0, -g(i)));
  }
  return worst;
}

}  // namespace

TEST_SUITE("nnls") {

TEST_CASE("unconstrained optimum inside the orthant") {
  Matrix G = Matrix::Identity(2, 2);
  const auto r = solve_nnls_gram(G, Vector{{0.6, 0.8}});
  CHECK(r.converged);
  CHECK(r.weights(0) == doctest::Approx(0.6));
  CHECK(r.weights(1) == doctest::Approx(0.8));
}

TEST_CASE("negative projections are clamped") {
  const auto r = solve_nnls_gram(Matrix::Identity(2, 2), Vector{{-1.0, 0.0}});
  CHECK(r.weights.isZero());
}

TEST_CASE("random problems satisfy KKT") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g;
  for (int t = 0; t < 200; ++t) {
    const int n = 1 + t % 12, d = 3 + t % 9;
    Matrix A(d, n);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = g(rng);
    Vector x(d);
    for (auto& v : x) v = g(rng);
    const Matrix G = A.transpose() * A;
    const Vector b = A.transpose() * x;
    const auto r = solve_nnls_gram(G, b);
    CHECK(r.converged);
    CHECK(kkt_violation(G, b, r.weights) <= 1e-8);
  }
}

TEST_CASE("rank-deficient gram") {
  // Two identical columns.
  Matrix A(3, 2);
  A << 1, 1, 0, 0, 0, 0;
  const Matrix G = A.transpose() * A;
  const Vector b = A.transpose() * Vector{{1.0, 1.0, 0.0}};
  const auto r = solve_nnls_gram(G, b);
  CHECK(r.converged);
  CHECK(r.weights.minCoeff() >= 0.0);
  CHECK(r.weights.sum() == doctest::Approx(1.0));
}

}
