#include "fase/extraction.hpp"

#include <cmath>

namespace fase {

namespace {

constexpr double kHeywoodTol = 1e-12;
constexpr double kStationarityTol = 1e-8;

void validate_k(const SymmetricMatrix& sigma, int k) {
    if (k < 1) throw InvalidInput("k must be >= 1");
    if (k >= sigma.order()) throw InvalidInput("k must be < p");
}

// Rank check for the reduced matrix: the top k eigenvalues must be clearly
// positive or the scaled eigenvector columns are meaningless.
void require_positive_topk(const Vector& values, int k) {
    const double floor = 1e-12 * std::max(1.0, std::abs(values(0)));
    if (values(k - 1) <= floor)
        throw RankDeficient("theta_" + std::to_string(k) + " <= 0: fewer than k = " +
                            std::to_string(k) + " common factors are supported");
}

Matrix scaled_topk(const EigenPairs& ep, int k) {
    return ep.vectors.leftCols(k) *
           ep.values.head(k).cwiseSqrt().asDiagonal();
}

// Column sign fix on the final loadings (and gamma, when present): largest
// magnitude entry positive, ties toward the lowest row.
void fix_column_signs(FactorSolution& sol) {
    for (int r = 0; r < sol.factors(); ++r) {
        Index arg = 0;
        double best = -1.0;
        for (Index i = 0; i < sol.loadings.rows(); ++i) {
            const double a = std::abs(sol.loadings(i, r));
            if (a > best) {
                best = a;
                arg = i;
            }
        }
        if (sol.loadings(arg, r) < 0.0) {
            sol.loadings.col(r) = -sol.loadings.col(r);
            if (sol.gamma) sol.gamma->col(r) = -sol.gamma->col(r);
        }
    }
}

void check_heywood(const Vector& psi) {
    for (Index i = 0; i < psi.size(); ++i)
        if (psi(i) < -kHeywoodTol)
            throw HeywoodCase("uniqueness " + std::to_string(i + 1) + " is negative (" +
                              std::to_string(psi(i)) + ")");
}

double eigen_residual(const Matrix& reduced, const Matrix& loadings, const Vector& theta) {
    double worst = 0.0;
    for (int r = 0; r < theta.size(); ++r) {
        const Vector res = reduced * loadings.col(r) - theta(r) * loadings.col(r);
        worst = std::max(worst, res.cwiseAbs().maxCoeff());
    }
    return worst;
}

FactorSolution principal_impl(const SymmetricMatrix& sigma, int k, Vector psi, bool iterate,
                              const FitOptions& opts, Method tag) {
    const int p = sigma.order();
    const Matrix& s = sigma.mat();

    FactorSolution sol;
    sol.method = tag;

    for (;;) {
        Matrix reduced = s;
        reduced.diagonal() -= psi;
        const EigenPairs ep = symmetric_eigen(reduced);
        require_positive_topk(ep.values, k);
        sol.loadings = scaled_topk(ep, k);
        sol.eigenvalues = ep.values.head(k);
        sol.communalities = sol.loadings.array().square().rowwise().sum();
        const Vector psi_next = s.diagonal() - sol.communalities;
        ++sol.iterations;

        if (!iterate) {
            psi = psi_next;
            break;
        }
        const double delta = (psi_next - psi).cwiseAbs().maxCoeff();
        psi = psi_next;
        if (delta <= opts.psi_tol) {
            sol.converged = true;
            break;
        }
        if (sol.iterations >= opts.max_iterations)
            throw NotConverged("principal-axis iteration hit " +
                               std::to_string(opts.max_iterations) + " iterations");
    }
    sol.uniquenesses = psi;

    Matrix reduced = s;
    reduced.diagonal() -= psi;
    const double resid = eigen_residual(reduced, sol.loadings, sol.eigenvalues);
    if (iterate) {
        check_heywood(psi);
        if (resid > kStationarityTol)
            throw NotConverged("eigen-equation residual " + std::to_string(resid) +
                               " exceeds tolerance at convergence");
    } else {
        sol.converged = resid <= kStationarityTol;
    }
    fix_column_signs(sol);
    return sol;
}

// First-order conditions of the off-diagonal least-square criterion:
// sum_{z != i} lambda_zr (sigma_iz - sum_t lambda_it lambda_zt) = 0.
double ls_gradient_norm(const Matrix& s, const Matrix& loadings) {
    Matrix resid = s - loadings * loadings.transpose();
    resid.diagonal().setZero();
    return (resid * loadings).cwiseAbs().maxCoeff();
}

}  // namespace

const char* to_string(Method m) {
    switch (m) {
        case Method::ipcfa: return "ipcfa";
        case Method::pfa: return "pfa";
        case Method::least_square: return "least_square";
        case Method::alpha: return "alpha";
        case Method::image: return "image";
    }
    return "?";
}

Method method_from_string(const std::string& s) {
    if (s == "ipcfa") return Method::ipcfa;
    if (s == "pfa") return Method::pfa;
    if (s == "least_square") return Method::least_square;
    if (s == "alpha") return Method::alpha;
    if (s == "image") return Method::image;
    throw InvalidInput("unknown method '" + s + "'");
}

Vector smc(const SymmetricMatrix& sigma) {
    const int p = sigma.order();
    Matrix inv;
    try {
        inv = solve_linear(sigma.mat(), Matrix::Identity(p, p));
    } catch (const SingularSystem& e) {
        throw SingularInput(std::string("smc: ") + e.what());
    }
    Vector out(p);
    for (int i = 0; i < p; ++i) out(i) = sigma(i, i) - 1.0 / inv(i, i);
    return out;
}

FactorSolution fit_principal(const SymmetricMatrix& sigma, int k, PrincipalStart start,
                             bool iterate, const FitOptions& opts) {
    validate_k(sigma, k);
    Vector psi0;
    if (opts.init_psi) {
        psi0 = *opts.init_psi;
        if (psi0.size() != sigma.order()) throw InvalidInput("init_psi has wrong length");
    } else if (start == PrincipalStart::zeros) {
        psi0 = Vector::Zero(sigma.order());
    } else {
        psi0 = sigma.mat().diagonal() - smc(sigma);
    }
    const Method tag = start == PrincipalStart::zeros ? Method::ipcfa : Method::pfa;
    return principal_impl(sigma, k, std::move(psi0), iterate, opts, tag);
}

FactorSolution fit_least_square(const SymmetricMatrix& sigma, int k, const FitOptions& opts) {
    validate_k(sigma, k);
    Vector psi0 = opts.init_psi ? *opts.init_psi
                                : Vector(sigma.mat().diagonal() - smc(sigma));
    FactorSolution sol =
        principal_impl(sigma, k, std::move(psi0), true, opts, Method::least_square);
    const double grad = ls_gradient_norm(sigma.mat(), sol.loadings);
    if (grad > kStationarityTol)
        throw NotConverged("least-square first-order conditions violated (residual " +
                           std::to_string(grad) + ")");
    return sol;
}

FactorSolution fit_alpha(const SymmetricMatrix& sigma, int k, const FitOptions& opts) {
    validate_k(sigma, k);
    const int p = sigma.order();
    const Matrix& s = sigma.mat();

    Vector comm;
    if (opts.init_psi) {
        if (opts.init_psi->size() != p) throw InvalidInput("init_psi has wrong length");
        comm = s.diagonal() - *opts.init_psi;
    } else {
        comm = smc(sigma);
    }
    {
        const double diag_scale = s.diagonal().maxCoeff();
        if (comm.maxCoeff() <= 1e-8 * std::max(diag_scale, 1e-300))
            throw RankDeficient("no common variance: all starting communalities are ~0");
    }

    FactorSolution sol;
    sol.method = Method::alpha;
    Matrix off = s;
    off.diagonal().setZero();

    Matrix beta;
    for (;;) {
        for (int i = 0; i < p; ++i)
            if (comm(i) <= 1e-8 * std::max(s(i, i), 1e-300))
                throw CommunalityCollapse("communality of variable " + std::to_string(i + 1) +
                                          " collapsed during iteration");
        const Vector h = comm.cwiseSqrt();
        // H^-1 (Sigma - Psi) H^-1 has unit diagonal and s_ij / (h_i h_j) off it.
        Matrix scaled = off.cwiseQuotient(h * h.transpose());
        scaled.diagonal().setOnes();
        const EigenPairs ep = symmetric_eigen(scaled);
        require_positive_topk(ep.values, k);
        beta = scaled_topk(ep, k);
        sol.loadings = h.asDiagonal() * beta;
        sol.eigenvalues = ep.values.head(k);
        const Vector comm_next = sol.loadings.array().square().rowwise().sum();
        ++sol.iterations;
        const double delta = (comm_next - comm).cwiseAbs().maxCoeff();
        comm = comm_next;
        if (delta <= opts.psi_tol) {
            sol.converged = true;
            break;
        }
        if (sol.iterations >= opts.max_iterations)
            throw NotConverged("alpha iteration hit " + std::to_string(opts.max_iterations) +
                               " iterations");
    }

    sol.communalities = comm;
    sol.uniquenesses = s.diagonal() - comm;
    check_heywood(sol.uniquenesses);
    // gamma_r = H^-1 beta_r, so lambda_r = H^2 gamma_r entrywise.
    sol.gamma = comm.cwiseSqrt().cwiseInverse().asDiagonal() * beta;

    // Self-consistency: (Sigma - Psi) gamma_r = (gamma_r' lambda_r) lambda_r.
    Matrix reduced = s;
    reduced.diagonal() = comm;
    double worst = 0.0;
    for (int r = 0; r < k; ++r) {
        const double theta = sol.gamma->col(r).dot(sol.loadings.col(r));
        const Vector res = reduced * sol.gamma->col(r) - theta * sol.loadings.col(r);
        worst = std::max(worst, res.cwiseAbs().maxCoeff());
        worst = std::max(worst, std::abs(theta - sol.eigenvalues(r)));
    }
    if (worst > kStationarityTol)
        throw NotConverged("alpha stationarity residual " + std::to_string(worst) +
                           " exceeds tolerance");
    fix_column_signs(sol);
    return sol;
}

FactorSolution fit_image(const SymmetricMatrix& sigma, int k, const FitOptions& opts) {
    validate_k(sigma, k);
    const int p = sigma.order();
    const Matrix& s = sigma.mat();

    Matrix sinv;
    try {
        sinv = solve_linear(s, Matrix::Identity(p, p));
    } catch (const SingularSystem& e) {
        throw SingularInput(std::string("fit_image: ") + e.what());
    }
    const Vector delta_diag = sinv.diagonal().cwiseInverse();  // Delta = (Diag Sigma^-1)^-1
    const double delta_sq = delta_diag.squaredNorm();

    double tau;
    if (opts.init_tau) {
        tau = *opts.init_tau;
    } else {
        // Start below the plausible uniqueness scale: one minus the largest
        // SMC ratio, kept inside (0, 1].
        const Vector m = smc(sigma);
        double ratio = 0.0;
        for (int i = 0; i < p; ++i) ratio = std::max(ratio, m(i) / s(i, i));
        tau = std::min(1.0, std::max(1.0 - ratio, 1e-3));
    }

    FactorSolution sol;
    sol.method = Method::image;
    Vector psi_prev = tau * delta_diag;
    for (;;) {
        Matrix reduced = s;
        reduced.diagonal() -= tau * delta_diag;
        const EigenPairs ep = symmetric_eigen(reduced);
        require_positive_topk(ep.values, k);
        sol.loadings = scaled_topk(ep, k);
        sol.eigenvalues = ep.values.head(k);
        sol.communalities = sol.loadings.array().square().rowwise().sum();
        const double tau_next =
            delta_diag.dot(s.diagonal() - sol.communalities) / delta_sq;
        const Vector psi_next = tau_next * delta_diag;
        ++sol.iterations;
        const double dtau = std::abs(tau_next - tau);
        const double dpsi = (psi_next - psi_prev).cwiseAbs().maxCoeff();
        tau = tau_next;
        psi_prev = psi_next;
        if (dtau <= opts.tau_tol && dpsi <= opts.psi_tol) {
            sol.converged = true;
            break;
        }
        if (sol.iterations >= opts.max_iterations)
            throw NotConverged("image iteration hit " + std::to_string(opts.max_iterations) +
                               " iterations");
    }

    if (tau <= 0.0)
        throw ImproperScale("image scale tau converged to " + std::to_string(tau));
    sol.tau = tau;
    sol.uniquenesses = tau * delta_diag;  // psi_i = tau / sigma^ii

    Matrix reduced = s;
    reduced.diagonal() -= tau * delta_diag;
    if (eigen_residual(reduced, sol.loadings, sol.eigenvalues) > kStationarityTol)
        throw NotConverged("image eigen-equation residual exceeds tolerance at convergence");
    fix_column_signs(sol);
    return sol;
}

FactorSolution fit(const SymmetricMatrix& sigma, Method method, int k, const FitOptions& opts) {
    switch (method) {
        case Method::ipcfa: return fit_principal(sigma, k, PrincipalStart::zeros, true, opts);
        case Method::pfa: return fit_principal(sigma, k, PrincipalStart::smc, true, opts);
        case Method::least_square: return fit_least_square(sigma, k, opts);
        case Method::alpha: return fit_alpha(sigma, k, opts);
        case Method::image: return fit_image(sigma, k, opts);
    }
    throw InvalidInput("unknown method");
}

}  // namespace fase
