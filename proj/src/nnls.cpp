#include "intentgate/nnls.hpp"

#include "intentgate/error.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <vector>

namespace intentgate {

namespace {

// Solves G_PP z = b_P for the passive set, minimum-norm when G_PP is singular.
Vector solve_passive(const Matrix& gram, const Vector& rhs, const std::vector<Eigen::Index>& passive) {
  const auto p = static_cast<Eigen::Index>(passive.size());
  Matrix g(p, p);
  Vector b(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    b[i] = rhs[passive[static_cast<std::size_t>(i)]];
    for (Eigen::Index j = 0; j < p; ++j) {
      g(i, j) = gram(passive[static_cast<std::size_t>(i)], passive[static_cast<std::size_t>(j)]);
    }
  }
  Eigen::LLT<Matrix> llt(g);
  if (llt.info() == Eigen::Success) {
    Vector z = llt.solve(b);
    if (z.allFinite()) return z;
  }
  return g.completeOrthogonalDecomposition().solve(b);
}

}  // namespace

NnlsResult solve_nnls_gram(const Matrix& gram, const Vector& rhs, double tolerance, int max_iterations) {
  const auto n = rhs.size();
  if (gram.rows() != n || gram.cols() != n) throw InvalidArgument("nnls: Gram/rhs shape mismatch");
  if (max_iterations <= 0) max_iterations = static_cast<int>(3 * n + 10);

  NnlsResult result;
  result.weights = Vector::Zero(n);
  if (n == 0) return result;

  Vector& w = result.weights;
  std::vector<bool> in_passive(static_cast<std::size_t>(n), false);
  // Scale-aware threshold on the negative gradient b - Gw.
  const double tol = tolerance * std::max(1.0, rhs.cwiseAbs().maxCoeff());

  Vector neg_grad = rhs;
  int outer = 0;
  while (true) {
    Eigen::Index best = -1;
    double best_value = tol;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!in_passive[static_cast<std::size_t>(j)] && neg_grad[j] > best_value) {
        best_value = neg_grad[j];
        best = j;
      }
    }
    if (best < 0) break;
    if (++outer > max_iterations) {
      result.converged = false;
      spdlog::warn("nnls: iteration cap {} reached", max_iterations);
      break;
    }
    in_passive[static_cast<std::size_t>(best)] = true;

    while (true) {
      std::vector<Eigen::Index> passive;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (in_passive[static_cast<std::size_t>(j)]) passive.push_back(j);
      }
      if (passive.empty()) break;
      const Vector z = solve_passive(gram, rhs, passive);
      ++result.iterations;

      bool feasible = true;
      for (Eigen::Index i = 0; i < z.size(); ++i) {
        if (z[i] <= 0.0) feasible = false;
      }
      if (feasible) {
        w.setZero();
        for (std::size_t i = 0; i < passive.size(); ++i) w[passive[i]] = z[static_cast<Eigen::Index>(i)];
        break;
      }

      // Step from w toward z until the first passive weight hits zero.
      double step = 1.0;
      for (std::size_t i = 0; i < passive.size(); ++i) {
        const double zi = z[static_cast<Eigen::Index>(i)];
        if (zi <= 0.0) {
          const double wi = w[passive[i]];
          step = std::min(step, wi / (wi - zi));
        }
      }
      for (std::size_t i = 0; i < passive.size(); ++i) {
        const auto j = passive[i];
        w[j] += step * (z[static_cast<Eigen::Index>(i)] - w[j]);
        if (w[j] <= tol * 1e-3) {
          w[j] = 0.0;
          in_passive[static_cast<std::size_t>(j)] = false;
        }
      }
    }
    neg_grad = rhs - gram * w;
  }
  return result;
}

}  // namespace intentgate
