#include "fase/rotation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace fase {

namespace {

struct PairTrig {
    double num = 0.0;  // sine component of the 4*angle phase
    double den = 0.0;  // cosine component
    double angle() const { return 0.25 * std::atan2(num, den); }
};

PairTrig pair_trig(const Matrix& b, int r, int s) {
    const double p = static_cast<double>(b.rows());
    double A = 0.0, B = 0.0, C = 0.0, D = 0.0;
    for (Index i = 0; i < b.rows(); ++i) {
        const double u = b(i, r) * b(i, r) - b(i, s) * b(i, s);
        const double v = 2.0 * b(i, r) * b(i, s);
        A += u;
        B += v;
        C += u * u - v * v;
        D += 2.0 * u * v;
    }
    return {D - 2.0 * A * B / p, C - (A * A - B * B) / p};
}

void rotate_pair(Matrix& m, int r, int s, double c, double sn) {
    for (Index i = 0; i < m.rows(); ++i) {
        const double xr = m(i, r), xs = m(i, s);
        m(i, r) = c * xr + sn * xs;
        m(i, s) = -sn * xr + c * xs;
    }
}

double criterion_value(const Matrix& b) {
    const double p = static_cast<double>(b.rows());
    double total = 0.0;
    for (Index r = 0; r < b.cols(); ++r) {
        double s2 = 0.0, s4 = 0.0;
        for (Index i = 0; i < b.rows(); ++i) {
            const double q = b(i, r) * b(i, r);
            s2 += q;
            s4 += q * q;
        }
        total += s4 / p - (s2 / p) * (s2 / p);
    }
    return total;
}

Matrix normalized_rows(const Matrix& loadings, Vector& weights) {
    weights = loadings.rowwise().norm();
    Matrix b = loadings;
    for (Index i = 0; i < b.rows(); ++i)
        if (weights(i) > 0.0) b.row(i) /= weights(i);
    return b;
}

}  // namespace

RotatedSolution varimax(const Matrix& loadings, const VarimaxOptions& opts) {
    const int k = static_cast<int>(loadings.cols());
    if (k < 1) throw InvalidInput("varimax requires at least one column");

    RotatedSolution out;
    out.rotation = Matrix::Identity(k, k);
    if (k == 1) {
        out.loadings = loadings;
        out.criterion = criterion_value(loadings);
        return out;
    }

    Vector weights;
    Matrix b = opts.kaiser_normalize ? normalized_rows(loadings, weights) : loadings;
    Matrix rot = Matrix::Identity(k, k);

    int sweep = 0;
    for (;;) {
        double max_angle = 0.0;
        for (int r = 0; r < k - 1; ++r)
            for (int s = r + 1; s < k; ++s) {
                const double phi = pair_trig(b, r, s).angle();
                max_angle = std::max(max_angle, std::abs(phi));
                const double c = std::cos(phi), sn = std::sin(phi);
                rotate_pair(b, r, s, c, sn);
                rotate_pair(rot, r, s, c, sn);
            }
        ++sweep;
        if (max_angle <= opts.angle_tol) break;
        if (sweep >= opts.max_sweeps)
            throw NotConverged("varimax did not converge in " + std::to_string(opts.max_sweeps) +
                               " sweeps");
    }

    // Fix the column permutation/sign indeterminacy: descending sum of squares,
    // largest-magnitude entry positive.
    Matrix rotated = loadings * rot;
    std::vector<int> order(k);
    std::iota(order.begin(), order.end(), 0);
    const Vector ssq = rotated.array().square().colwise().sum();
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int c) { return ssq(a) > ssq(c); });
    Matrix final_rot(k, k);
    for (int c = 0; c < k; ++c) {
        Vector col = rot.col(order[c]);
        Index arg = 0;
        double best = -1.0;
        for (Index i = 0; i < rotated.rows(); ++i) {
            const double a = std::abs(rotated(i, order[c]));
            if (a > best) {
                best = a;
                arg = i;
            }
        }
        if (rotated(arg, order[c]) < 0.0) col = -col;
        final_rot.col(c) = col;
    }

    out.rotation = final_rot;
    out.loadings = loadings * final_rot;
    if (opts.kaiser_normalize) {
        Vector w;
        out.criterion = criterion_value(normalized_rows(out.loadings, w));
    } else {
        out.criterion = criterion_value(out.loadings);
    }
    return out;
}

double varimax_max_pair_angle(const Matrix& loadings, bool kaiser_normalize) {
    const int k = static_cast<int>(loadings.cols());
    if (k < 2) return 0.0;
    Vector w;
    const Matrix b = kaiser_normalize ? normalized_rows(loadings, w) : loadings;
    double worst = 0.0;
    for (int r = 0; r < k - 1; ++r)
        for (int s = r + 1; s < k; ++s)
            worst = std::max(worst, std::abs(pair_trig(b, r, s).angle()));
    return worst;
}

Matrix rotated_se(const SymmetricMatrix& sigma, const FactorSolution& sol,
                  const JacobianSystem& jac, const AcovMatrix& acov_sigma,
                  const VarimaxOptions& opts) {
    const int p = sol.order(), k = sol.factors();
    if (acov_sigma.order() != p)
        throw InvalidInput("acov(Sigma) dimension does not match the solution order");
    if (acov_sigma.mode() != sigma.mode())
        throw WrongMode("acov(Sigma) mode does not match the input matrix mode");

    const RotatedSolution base = varimax(sol.loadings, opts);

    if (k >= 2) {
        // The pair criterion along a planar angle is a pure 4*phi harmonic;
        // its curvature at the optimum scales with hypot(num, den).  A flat
        // direction means the stationary point is not locally unique.
        Vector w;
        const Matrix b =
            opts.kaiser_normalize ? normalized_rows(base.loadings, w) : base.loadings;
        double scale = 0.0;
        for (Index i = 0; i < b.rows(); ++i) {
            const double q = b.row(i).squaredNorm();
            scale += q * q;
        }
        for (int r = 0; r < k - 1; ++r)
            for (int s = r + 1; s < k; ++s) {
                const PairTrig t = pair_trig(b, r, s);
                if (std::hypot(t.num, t.den) <= 1e-10 * std::max(scale, 1e-300))
                    throw SingularSystem("varimax optimum is not locally unique for columns " +
                                         std::to_string(r + 1) + "," + std::to_string(s + 1));
            }
    }

    // Central-difference Jacobian of the rotation stage, row-major in both
    // loading spaces: rows index rotated (i, r), columns unrotated (j, t).
    const double h = opts.fd_step;
    Matrix rot_jac(p * k, p * k);
    for (int j = 0; j < p; ++j)
        for (int t = 0; t < k; ++t) {
            Matrix up = sol.loadings, dn = sol.loadings;
            up(j, t) += h;
            dn(j, t) -= h;
            const Matrix lp = varimax(up, opts).loadings;
            const Matrix lm = varimax(dn, opts).loadings;
            for (int i = 0; i < p; ++i)
                for (int r = 0; r < k; ++r)
                    rot_jac(i * k + r, j * k + t) = (lp(i, r) - lm(i, r)) / (2.0 * h);
        }

    const Matrix chained = rot_jac * jac.M;
    Matrix acov_rot = chained * acov_sigma.mat() * chained.transpose();
    acov_rot = 0.5 * (acov_rot + acov_rot.transpose()).eval();

    Matrix se(p, k);
    for (int i = 0; i < p; ++i)
        for (int r = 0; r < k; ++r) {
            const double v = acov_rot(i * k + r, i * k + r);
            if (v < -1e-12)
                throw NumericalBreakdown("negative variance for rotated loading");
            se(i, r) = std::sqrt(std::max(v, 0.0));
        }
    return se;
}

}  // namespace fase
