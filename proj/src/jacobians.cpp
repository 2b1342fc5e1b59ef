#include "fase/jacobians.hpp"

#include <cmath>

namespace fase {

namespace {

void require_converged(const FactorSolution& sol, Method expected) {
    if (sol.method != expected)
        throw InvalidInput("solution method does not match the requested system");
    if (!sol.converged)
        throw InvalidInput("Jacobians are defined only at converged solutions");
}

Matrix inverse_of(const SymmetricMatrix& sigma) {
    try {
        return solve_linear(sigma.mat(), Matrix::Identity(sigma.order(), sigma.order()));
    } catch (const SingularSystem& e) {
        throw SingularInput(std::string("image system: ") + e.what());
    }
}

PfaSystem pfa_matrices(const Matrix& s, const Matrix& lam, const Vector& h,
                       const Vector& theta) {
    const int p = static_cast<int>(lam.rows()), k = static_cast<int>(lam.cols());
    PfaSystem sys;
    sys.A = Matrix::Zero(p * k, p * k);
    sys.B = Matrix::Zero(p * k, p * p);
    for (int i = 0; i < p; ++i)
        for (int r = 0; r < k; ++r) {
            const int row = i * k + r;
            for (int j = 0; j < p; ++j)
                for (int t = 0; t < k; ++t) {
                    double v = 0.0;
                    if (j == i && t == r)
                        v = h(i) - theta(r);
                    else if (j == i)
                        v = 2.0 * lam(i, r) * lam(i, t);
                    else if (t == r)
                        v = s(i, j) - 2.0 * lam(i, r) * lam(j, r);
                    sys.A(row, j * k + t) = v;
                }
            for (int y = 0; y < p; ++y)
                if (y != i) sys.B(row, i * p + y) = -lam(y, r);
        }
    return sys;
}

// Worst residual of K * M = R over symmetric perturbation directions: the
// duplicated (x,y)/(y,x) columns are meaningful only through their sums.
double symmetric_residual(const Matrix& K, const Matrix& M, const Matrix& R, int p) {
    const Matrix resid = K * M - R;
    double worst = 0.0;
    for (int x = 0; x < p; ++x) {
        worst = std::max(worst, resid.col(x * p + x).cwiseAbs().maxCoeff());
        for (int y = x + 1; y < p; ++y)
            worst = std::max(
                worst, (resid.col(x * p + y) + resid.col(y * p + x)).cwiseAbs().maxCoeff());
    }
    return worst;
}

}  // namespace

PfaSystem build_pfa_system(const SymmetricMatrix& sigma, const FactorSolution& sol) {
    if (sol.method != Method::ipcfa && sol.method != Method::pfa)
        throw InvalidInput("build_pfa_system expects an ipcfa or pfa solution");
    if (!sol.converged) throw InvalidInput("Jacobians are defined only at converged solutions");
    return pfa_matrices(sigma.mat(), sol.loadings, sol.communalities, sol.eigenvalues);
}

LsSystem build_ls_system(const SymmetricMatrix& sigma, const FactorSolution& sol) {
    require_converged(sol, Method::least_square);
    const int p = sol.order(), k = sol.factors();
    const Matrix& s = sigma.mat();
    const Matrix& lam = sol.loadings;
    const Matrix gram = lam.transpose() * lam;       // k x k, sum_z lambda_zr lambda_zt
    const Matrix model = lam * lam.transpose();      // p x p, sum_z lambda_iz lambda_jz

    LsSystem sys;
    sys.C = Matrix::Zero(p * k, p * p);
    sys.D = Matrix::Zero(p * k, p * k);
    for (int i = 0; i < p; ++i)
        for (int r = 0; r < k; ++r) {
            const int row = i * k + r;
            for (int y = 0; y < p; ++y)
                if (y != i) sys.C(row, i * p + y) = lam(y, r);
            for (int j = 0; j < p; ++j)
                for (int t = 0; t < k; ++t) {
                    double v;
                    if (j == i)
                        v = gram(r, t) - lam(i, r) * lam(i, t);
                    else if (t == r)
                        v = -s(i, j) + lam(i, r) * lam(j, r) + model(i, j);
                    else
                        v = lam(j, r) * lam(i, t);
                    sys.D(row, j * k + t) = v;
                }
        }
    return sys;
}

AlphaSystem build_alpha_system(const SymmetricMatrix& sigma, const FactorSolution& sol) {
    require_converged(sol, Method::alpha);
    if (!sol.gamma) throw InternalContractViolation("alpha solution is missing gamma");
    const int p = sol.order(), k = sol.factors();
    const Matrix& s = sigma.mat();
    const Matrix& lam = sol.loadings;
    const Matrix& gam = *sol.gamma;
    const Vector& h = sol.communalities;
    for (int i = 0; i < p; ++i)
        if (h(i) <= 0.0) throw CommunalityCollapse("nonpositive communality in alpha system");

    AlphaSystem sys;
    sys.E = Matrix::Zero(p * k, p * k);
    sys.F = Matrix::Zero(p * k, p * p);
    sys.G = Matrix::Zero(p * k, p * k);
    sys.J = Matrix::Zero(p * k, p * k);

    // sum_z lambda_zr gamma_zr per column, for J's diagonal case.
    Vector colsum(k);
    for (int r = 0; r < k; ++r) colsum(r) = lam.col(r).dot(gam.col(r));

    for (int i = 0; i < p; ++i)
        for (int r = 0; r < k; ++r) {
            const int row = i * k + r;
            for (int t = 0; t < k; ++t)
                sys.E(row, i * k + t) =
                    ((t == r ? 1.0 : 0.0) - 2.0 * gam(i, r) * lam(i, t)) / h(i);
            for (int y = 0; y < p; ++y)
                if (y != i) sys.F(row, i * p + y) = gam(y, r);
            for (int j = 0; j < p; ++j) {
                sys.G(row, j * k + r) = (j == i) ? lam(i, r) * lam(i, r) - h(i)
                                                 : lam(i, r) * lam(j, r) - s(i, j);
            }
            for (int t = 0; t < k; ++t)
                if (t != r) sys.J(row, i * k + t) = -2.0 * gam(i, r) * lam(i, t);
            sys.J(row, i * k + r) = colsum(r) - lam(i, r) * gam(i, r);
            for (int j = 0; j < p; ++j)
                if (j != i) sys.J(row, j * k + r) = lam(i, r) * gam(j, r);
        }
    return sys;
}

ImageSystem build_image_system(const SymmetricMatrix& sigma, const FactorSolution& sol) {
    require_converged(sol, Method::image);
    if (!sol.tau) throw InternalContractViolation("image solution is missing tau");
    const int p = sol.order(), k = sol.factors();
    const Matrix& s = sigma.mat();
    const Matrix& lam = sol.loadings;
    const Vector& h = sol.communalities;
    const double tau = *sol.tau;
    const Matrix sinv = inverse_of(sigma);
    const Vector colsq = lam.array().square().colwise().sum();  // sum_z lambda_zr^2

    // sum_z (1/sigma^zz)^2
    double ssum = 0.0;
    for (int z = 0; z < p; ++z) ssum += 1.0 / (sinv(z, z) * sinv(z, z));

    ImageSystem sys;
    sys.L = Matrix::Zero(p * k, p * p);
    sys.P = Matrix::Zero(p * k, p * k);
    sys.pi = Vector::Zero(p * k);
    sys.mu = Vector::Zero(p * p);
    sys.eta = Vector::Zero(p * k);

    for (int i = 0; i < p; ++i) {
        const double sii = sinv(i, i);
        for (int r = 0; r < k; ++r) {
            const int row = i * k + r;
            for (int x = 0; x < p; ++x)
                for (int y = 0; y < p; ++y)
                    sys.L(row, x * p + y) =
                        (x == i) ? lam(y, r) - tau * lam(i, r) * sinv(i, y) / sii
                                 : -tau * lam(i, r) * sinv(i, x) * sinv(i, y) / (sii * sii);
            for (int j = 0; j < p; ++j)
                sys.P(row, j * k + r) =
                    (j == i) ? 2.0 * lam(i, r) * lam(i, r) - s(i, i) + tau / sii + colsq(r)
                             : 2.0 * lam(i, r) * lam(j, r) - s(i, j);
            sys.pi(row) = lam(i, r) / sii;
            sys.eta(row) = -2.0 * lam(i, r) / (sii * ssum);
        }
    }
    for (int x = 0; x < p; ++x)
        for (int y = 0; y < p; ++y) {
            double acc = (x == y) ? 1.0 / sinv(x, x) : 0.0;
            for (int i = 0; i < p; ++i) {
                const double sii = sinv(i, i);
                acc += (s(i, i) - h(i) - 2.0 * tau / sii) * sinv(i, x) * sinv(i, y) / (sii * sii);
            }
            sys.mu(x * p + y) = acc / ssum;
        }
    return sys;
}

JacobianSystem loading_jacobian(const SymmetricMatrix& sigma, const FactorSolution& sol) {
    JacobianSystem out;
    out.method = sol.method;
    switch (sol.method) {
        case Method::ipcfa:
        case Method::pfa: {
            PfaSystem sys = build_pfa_system(sigma, sol);
            out.lhs = std::move(sys.A);
            out.rhs = std::move(sys.B);
            break;
        }
        case Method::least_square: {
            LsSystem sys = build_ls_system(sigma, sol);
            out.lhs = std::move(sys.D);
            out.rhs = std::move(sys.C);
            try {
                out.M = solve_linear(out.lhs, out.rhs);
            } catch (const SingularSystem&) {
                // For k >= 2 the least-square stationarity conditions are
                // invariant under rotation of the factor columns, so D has the
                // orbit tangent in its null space.  The fitted solution is the
                // eigen-gauge fixed point, whose derivative is given by the
                // iterated-principal-axis system at the same point; certify
                // that it solves this system on symmetric perturbations.
                const PfaSystem anchor = pfa_matrices(sigma.mat(), sol.loadings,
                                                      sol.communalities, sol.eigenvalues);
                Matrix m = solve_linear(anchor.A, anchor.B);
                const double scale = std::max(out.rhs.cwiseAbs().maxCoeff(), 1.0);
                const double resid = symmetric_residual(out.lhs, m, out.rhs, sol.order());
                if (resid > 1e-8 * scale)
                    throw SingularSystem(
                        "least-square system is singular and the eigen-gauge Jacobian does "
                        "not satisfy it (residual " + std::to_string(resid) + ")");
                out.M = std::move(m);
            }
            break;
        }
        case Method::alpha: {
            AlphaSystem sys = build_alpha_system(sigma, sol);
            out.lhs = sys.G * sys.E + sys.J;
            out.rhs = std::move(sys.F);
            break;
        }
        case Method::image: {
            ImageSystem sys = build_image_system(sigma, sol);
            out.lhs = sys.P + sys.pi * sys.eta.transpose();
            out.rhs = sys.L - sys.pi * sys.mu.transpose();
            out.M = solve_linear(out.lhs, out.rhs);
            // d tau = [mu' + eta' M] dSigma_v.
            out.phi = Vector(sys.mu + out.M.transpose() * sys.eta);
            break;
        }
    }
    if (out.M.size() == 0) out.M = solve_linear(out.lhs, out.rhs);
    out.uniq_jac = uniqueness_jacobian(sigma, sol, out.M, out.phi);
    return out;
}

Matrix uniqueness_jacobian(const SymmetricMatrix& sigma, const FactorSolution& sol,
                           const Matrix& M, const std::optional<Vector>& phi) {
    const int p = sol.order(), k = sol.factors();

    if (sol.method == Method::image) {
        if (!phi) throw InternalContractViolation("image uniqueness Jacobian requires phi");
        if (!sol.tau) throw InternalContractViolation("image solution is missing tau");
        const Matrix sinv = inverse_of(sigma);
        const double tau = *sol.tau;
        Matrix q(p, p * p);
        for (int i = 0; i < p; ++i) {
            const double sii = sinv(i, i);
            for (int x = 0; x < p; ++x)
                for (int y = 0; y < p; ++y)
                    q(i, x * p + y) =
                        (sii * (*phi)(x * p + y) + tau * sinv(i, x) * sinv(i, y)) / (sii * sii);
        }
        return q;
    }

    if (M.rows() != static_cast<Index>(p) * k || M.cols() != static_cast<Index>(p) * p)
        throw InvalidInput("uniqueness_jacobian: M has wrong shape");
    // Z M with Z_{i,(j,t)} = -2 delta_ij lambda_it.
    Matrix u = Matrix::Zero(p, p * p);
    for (int i = 0; i < p; ++i)
        for (int t = 0; t < k; ++t) u.row(i) -= 2.0 * sol.loadings(i, t) * M.row(i * k + t);
    if (sigma.mode() == Mode::covariance) {
        for (int i = 0; i < p; ++i) u(i, i * p + i) += 1.0;  // the T term
    }
    return u;
}

SeReport assemble_se(const SymmetricMatrix& sigma, const FactorSolution& sol,
                     const AcovMatrix& acov_sigma) {
    const int p = sol.order(), k = sol.factors();
    if (acov_sigma.order() != p)
        throw InvalidInput("acov(Sigma) dimension does not match the solution order");
    if (acov_sigma.mode() != sigma.mode())
        throw WrongMode("acov(Sigma) mode does not match the input matrix mode");

    const JacobianSystem jac = loading_jacobian(sigma, sol);
    const Matrix& a = acov_sigma.mat();

    SeReport rep;
    rep.acov_loadings = jac.M * a * jac.M.transpose();
    rep.acov_loadings = 0.5 * (rep.acov_loadings + rep.acov_loadings.transpose()).eval();
    rep.acov_uniquenesses = jac.uniq_jac * a * jac.uniq_jac.transpose();
    rep.acov_uniquenesses =
        0.5 * (rep.acov_uniquenesses + rep.acov_uniquenesses.transpose()).eval();

    auto safe_sqrt = [](double v, const char* what) {
        if (v < -1e-12)
            throw NumericalBreakdown(std::string("negative variance for ") + what + " (" +
                                     std::to_string(v) + ")");
        return std::sqrt(std::max(v, 0.0));
    };

    rep.se_loadings.resize(p, k);
    for (int i = 0; i < p; ++i)
        for (int r = 0; r < k; ++r)
            rep.se_loadings(i, r) = safe_sqrt(rep.acov_loadings(i * k + r, i * k + r), "loading");
    rep.se_uniquenesses.resize(p);
    for (int i = 0; i < p; ++i)
        rep.se_uniquenesses(i) = safe_sqrt(rep.acov_uniquenesses(i, i), "uniqueness");
    if (sol.method == Method::image)
        rep.se_tau = safe_sqrt(jac.phi->dot(a * *jac.phi), "tau");
    return rep;
}

}  // namespace fase
