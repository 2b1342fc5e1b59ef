#pragma once

#include <optional>

#include "fase/jacobians.hpp"

namespace fase {

struct VarimaxOptions {
    bool kaiser_normalize = false;  // rescale rows to unit communality first
    int max_sweeps = 1000;
    double angle_tol = 1e-13;  // largest planar angle in a sweep at convergence
    double fd_step = 1e-6;     // step for the numeric rotation-stage Jacobian
};

struct RotatedSolution {
    Matrix loadings;  // p x k, equals unrotated * rotation
    Matrix rotation;  // k x k orthogonal
    double criterion = 0.0;  // varimax value at the optimum (normalized basis if kaiser)
    std::optional<Matrix> se;  // p x k, filled by rotated_se
};

// Orthogonal varimax rotation by cycling pairwise planar rotations.  Columns
// of the result are ordered by descending sum of squares and signed so the
// largest-magnitude entry is positive.  k == 1 returns the identity rotation.
RotatedSolution varimax(const Matrix& loadings, const VarimaxOptions& opts = {});

// Largest stationarity defect over column pairs (the planar angle that would
// still improve the criterion); ~0 at a converged rotation.
double varimax_max_pair_angle(const Matrix& loadings, bool kaiser_normalize = false);

// Standard errors for the rotated loadings via the chained Jacobian: a
// central-difference Jacobian of Lambda -> varimax(Lambda) composed with the
// analytic loading Jacobian, then the delta-method sandwich.  Throws
// SingularSystem when the varimax optimum is not locally unique.
Matrix rotated_se(const SymmetricMatrix& sigma, const FactorSolution& sol,
                  const JacobianSystem& jac, const AcovMatrix& acov_sigma,
                  const VarimaxOptions& opts = {});

}  // namespace fase
