#pragma once

#include <optional>
#include <string>

#include "fase/linalg.hpp"

namespace fase {

enum class Method { ipcfa, pfa, least_square, alpha, image };
enum class PrincipalStart { zeros, smc };

const char* to_string(Method m);
Method method_from_string(const std::string& s);

struct FitOptions {
    double psi_tol = 1e-10;  // max |psi^(t+1) - psi^(t)| at convergence
    double tau_tol = 1e-10;  // image: additionally |tau^(t+1) - tau^(t)|
    int max_iterations = 5000;
    // Warm starts, mainly for finite-difference work where the perturbed fit
    // should land on the same fixed-point branch as a reference solution.
    std::optional<Vector> init_psi;
    std::optional<double> init_tau;
};

// Converged point estimates for one extraction method.
struct FactorSolution {
    Method method = Method::ipcfa;
    Matrix loadings;                // p x k
    Vector uniquenesses;            // p
    Vector eigenvalues;             // k, theta_r at convergence, descending
    Vector communalities;           // p, h_i = sum_t lambda_it^2
    std::optional<double> tau;      // image scale
    std::optional<Matrix> gamma;    // alpha: p x k with lambda_r = H^2 gamma_r
    int iterations = 0;
    bool converged = false;

    int order() const { return static_cast<int>(loadings.rows()); }
    int factors() const { return static_cast<int>(loadings.cols()); }
};

// Squared multiple correlation on the variance scale: sigma_ii - 1/sigma^ii,
// the classic starting communality guess.
Vector smc(const SymmetricMatrix& sigma);

// Iterated principal-axis extraction.  start selects psi^(0): zeros (IPCFA)
// or sigma_ii - smc_i (PFA).  With iterate == false a single eigenvalue
// extraction from psi^(0) is returned; `converged` then reports whether that
// happens to already be a fixed point.
FactorSolution fit_principal(const SymmetricMatrix& sigma, int k, PrincipalStart start,
                             bool iterate = true, const FitOptions& opts = {});

// Least-square extraction (minimal off-diagonal residual of Sigma - Lambda
// Lambda').  Computed by the iterated principal-axis scheme; the first-order
// conditions are verified explicitly at convergence.
FactorSolution fit_least_square(const SymmetricMatrix& sigma, int k, const FitOptions& opts = {});

// Alpha extraction: eigenstructure of H^-1 (Sigma - Psi) H^-1 with
// H^2 = Diag(Lambda Lambda'), iterated on the communalities from an SMC start.
FactorSolution fit_alpha(const SymmetricMatrix& sigma, int k, const FitOptions& opts = {});

// Image extraction for Sigma = Lambda Lambda' + tau Delta with
// Delta = (Diag Sigma^-1)^-1: alternate the spectral step on Sigma - tau Delta
// with the least-square regression update for tau.
FactorSolution fit_image(const SymmetricMatrix& sigma, int k, const FitOptions& opts = {});

FactorSolution fit(const SymmetricMatrix& sigma, Method method, int k,
                   const FitOptions& opts = {});

}  // namespace fase
