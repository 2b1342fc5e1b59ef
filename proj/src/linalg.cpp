#include "fase/linalg.hpp"

#include <cmath>

namespace fase {

const char* to_string(Mode mode) {
    return mode == Mode::covariance ? "covariance" : "correlation";
}

Mode mode_from_string(const std::string& s) {
    if (s == "covariance") return Mode::covariance;
    if (s == "correlation") return Mode::correlation;
    throw InvalidInput("unknown mode '" + s + "'");
}

SymmetricMatrix::SymmetricMatrix(Matrix m, Mode mode, double sym_tol) : mode_(mode) {
    if (m.rows() == 0 || m.rows() != m.cols())
        throw InvalidInput("matrix must be square and non-empty");
    if (!m.allFinite()) throw InvalidInput("matrix has non-finite entries");
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > sym_tol)
        throw InvalidInput("matrix is not symmetric (max |m - m'| = " + std::to_string(asym) + ")");
    // (a+b)/2 == (b+a)/2 entrywise, so the average is exactly symmetric.
    m_ = 0.5 * (m + m.transpose());
    if (mode_ == Mode::correlation) {
        for (Index i = 0; i < m_.rows(); ++i) {
            if (std::abs(m_(i, i) - 1.0) > 1e-12)
                throw InvalidInput("correlation matrix must have a unit diagonal");
            m_(i, i) = 1.0;
        }
    }
}

void SymmetricMatrix::require_psd(double tol_factor) const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().cwiseAbs().maxCoeff();
    if (lo < -tol_factor * std::max(hi, 1e-300))
        throw InvalidInput("matrix is not positive semidefinite (min eigenvalue " +
                           std::to_string(lo) + ")");
}

namespace {

void apply_sign_convention(Matrix& vectors) {
    for (Index c = 0; c < vectors.cols(); ++c) {
        Index arg = 0;
        double best = -1.0;
        for (Index i = 0; i < vectors.rows(); ++i) {
            const double a = std::abs(vectors(i, c));
            if (a > best) {  // strict: ties keep the lowest index
                best = a;
                arg = i;
            }
        }
        if (vectors(arg, c) < 0.0) vectors.col(c) = -vectors.col(c);
    }
}

}  // namespace

EigenPairs symmetric_eigen(const Matrix& s) {
    if (!s.allFinite()) throw InvalidInput("eigendecomposition input has non-finite entries");
    Eigen::SelfAdjointEigenSolver<Matrix> es(s);
    if (es.info() != Eigen::Success)
        throw NumericalBreakdown("symmetric eigendecomposition failed to converge");
    EigenPairs out;
    out.values = es.eigenvalues().reverse();
    out.vectors = es.eigenvectors().rowwise().reverse();
    apply_sign_convention(out.vectors);
    return out;
}

EigenPairs symmetric_eigen(const SymmetricMatrix& s) { return symmetric_eigen(s.mat()); }

Matrix solve_linear(const Matrix& K, const Matrix& rhs) {
    if (K.rows() != K.cols()) throw InvalidInput("solve_linear: K must be square");
    if (rhs.rows() != K.rows()) throw InvalidInput("solve_linear: rhs row count mismatch");
    if (!K.allFinite() || !rhs.allFinite())
        throw InvalidInput("solve_linear: non-finite entries");

    Eigen::PartialPivLU<Matrix> lu(K);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-12))
        throw SingularSystem("coefficient matrix is numerically singular (condition estimate " +
                             std::to_string(rcond > 0 ? 1.0 / rcond : INFINITY) + ")");
    Matrix x = lu.solve(rhs);
    x += lu.solve(rhs - K * x);  // one refinement step keeps the residual near eps
    if (!x.allFinite()) throw SingularSystem("solution has non-finite entries");
    return x;
}

RowVec vec_by_rows(const Matrix& m) {
    RowVec v;
    v.rows = m.rows();
    v.cols = m.cols();
    v.values.resize(m.size());
    for (Index i = 0; i < m.rows(); ++i)
        for (Index r = 0; r < m.cols(); ++r) v.values(flat_index(i, r, m.cols())) = m(i, r);
    return v;
}

Matrix unvec(const RowVec& v) {
    if (v.values.size() != v.rows * v.cols)
        throw InvalidInput("unvec: length does not match rows*cols");
    Matrix m(v.rows, v.cols);
    for (Index i = 0; i < v.rows; ++i)
        for (Index r = 0; r < v.cols; ++r) m(i, r) = v.values(flat_index(i, r, v.cols));
    return m;
}

}  // namespace fase
