#pragma once

#include "intentgate/domain.hpp"

namespace intentgate {

struct NnlsResult {
  Vector weights;
  int iterations = 0;
  bool converged = true;
};

// Lawson-Hanson active-set solver for min_{w >= 0} 0.5 w^T G w - b^T w, i.e. the normal-equation
// form of min_{w >= 0} ||x - A w||^2 with G = A^T A and b = A^T x. G must be symmetric PSD.
// Rank-deficient G is handled through a minimum-norm subproblem solve.
NnlsResult solve_nnls_gram(const Matrix& gram, const Vector& rhs, double tolerance = 1e-12,
                           int max_iterations = 0);

}  // namespace intentgate
