#pragma once

#include <optional>

#include "fase/extraction.hpp"
#include "fase/sigma_cov.hpp"

namespace fase {

// Coefficient matrices of the implicit differentials, per method.  Rows are
// indexed by the loading position (i, r) at i*k + r and columns either by a
// loading position (j, t) at j*k + t or by a covariance position (x, y) at
// x*p + y (0-based; the 1-based contract is (i-1)k + r and (x-1)p + y).
// Off-diagonal dsigma coefficients are attributed entirely to the (i, y)
// ordered pair; duplicated columns are meaningful only through their sums.

struct PfaSystem {
    Matrix A;  // pk x pk, coefficients of d lambda_jt
    Matrix B;  // pk x p^2, coefficients of d sigma_xy; A dL = B dS
};

struct LsSystem {
    Matrix C;  // pk x p^2; C dS = D dL
    Matrix D;  // pk x pk
};

struct AlphaSystem {
    Matrix E;  // pk x pk, dGamma = E dLambda
    Matrix F;  // pk x p^2; F dS = G dGamma + J dLambda
    Matrix G;  // pk x pk
    Matrix J;  // pk x pk
};

struct ImageSystem {
    Matrix L;   // pk x p^2; L dS = P dL + pi dtau
    Matrix P;   // pk x pk
    Vector pi;  // pk
    Vector mu;  // p^2; dtau = mu' dS + eta' dL
    Vector eta; // pk
};

PfaSystem build_pfa_system(const SymmetricMatrix& sigma, const FactorSolution& sol);
LsSystem build_ls_system(const SymmetricMatrix& sigma, const FactorSolution& sol);
AlphaSystem build_alpha_system(const SymmetricMatrix& sigma, const FactorSolution& sol);
ImageSystem build_image_system(const SymmetricMatrix& sigma, const FactorSolution& sol);

// Assembled linear system lhs * dLambda_v = rhs * dSigma_v with the solved
// loading Jacobian M (dLambda_v = M dSigma_v).  For image solutions phi holds
// the gradient of the scale: dtau = phi' dSigma_v.
struct JacobianSystem {
    Method method = Method::ipcfa;
    Matrix lhs;                 // pk x pk
    Matrix rhs;                 // pk x p^2
    Matrix M;                   // pk x p^2
    std::optional<Vector> phi;  // p^2, image only
    Matrix uniq_jac;            // p x p^2, d psi = uniq_jac dSigma_v
};

// Builds the method's system, solves for M, and fills the uniqueness chain.
// Throws SingularSystem when the left-hand side is numerically singular
// (coincident eigenvalues theta_r = theta_{r+1}, boundary solutions).
JacobianSystem loading_jacobian(const SymmetricMatrix& sigma, const FactorSolution& sol);

// d psi = (T + Z M) dSigma_v in covariance mode, Z M in correlation mode
// (d sigma_ii = 0 there), and Q for image solutions (phi required).
Matrix uniqueness_jacobian(const SymmetricMatrix& sigma, const FactorSolution& sol,
                           const Matrix& M,
                           const std::optional<Vector>& phi = std::nullopt);

struct SeReport {
    Matrix acov_loadings;      // pk x pk
    Matrix acov_uniquenesses;  // p x p
    Matrix se_loadings;        // p x k
    Vector se_uniquenesses;    // p
    std::optional<double> se_tau;
};

// Delta-method sandwich: acov(Lambda_v) = M acov(Sigma_v) M', and likewise
// for the uniquenesses and (image) the scale.
SeReport assemble_se(const SymmetricMatrix& sigma, const FactorSolution& sol,
                     const AcovMatrix& acov_sigma);

}  // namespace fase
