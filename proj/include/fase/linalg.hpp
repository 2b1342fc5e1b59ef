#pragma once

#include <Eigen/Dense>

#include "fase/errors.hpp"

namespace fase {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class Mode { covariance, correlation };

const char* to_string(Mode mode);
Mode mode_from_string(const std::string& s);

// A p x p symmetric matrix with a covariance/correlation mode tag.
// Storage is exactly symmetric: the constructor verifies |m - m'| against
// `sym_tol` (absolute, default 0) and then stores the symmetrized copy.
// Correlation mode additionally requires a unit diagonal (within 1e-12,
// snapped to exactly 1).
class SymmetricMatrix {
public:
    SymmetricMatrix(Matrix m, Mode mode, double sym_tol = 0.0);

    int order() const { return static_cast<int>(m_.rows()); }
    const Matrix& mat() const { return m_; }
    Mode mode() const { return mode_; }
    double operator()(Index i, Index j) const { return m_(i, j); }

    // Throws InvalidInput unless the smallest eigenvalue is
    // >= -tol_factor * |largest eigenvalue|.
    void require_psd(double tol_factor = 1e-10) const;

private:
    Matrix m_;
    Mode mode_;
};

// Full spectrum of a symmetric matrix, eigenvalues descending.  Each
// eigenvector is normalized and signed so its entry of largest magnitude is
// positive (ties resolved toward the lowest index); this pins down the
// otherwise arbitrary +/- of every loading column built from it.
struct EigenPairs {
    Vector values;   // descending
    Matrix vectors;  // orthonormal columns, matching order
};

EigenPairs symmetric_eigen(const SymmetricMatrix& s);
EigenPairs symmetric_eigen(const Matrix& s);  // same, for derived symmetric matrices

// Dense solve K * X = rhs via partial-pivot LU with one step of iterative
// refinement.  Never forms an explicit inverse.  Throws SingularSystem when
// the estimated condition number exceeds 1e12 (coincident eigenvalues or a
// degenerate solution upstream).
Matrix solve_linear(const Matrix& K, const Matrix& rhs);

// Row-major vectorization: element (i, r) of an rows x cols matrix lands at
// flat index i * cols + r (0-based; the 1-based contract is (i-1)*cols + r).
struct RowVec {
    Index rows = 0;
    Index cols = 0;
    Vector values;
};

RowVec vec_by_rows(const Matrix& m);
Matrix unvec(const RowVec& v);

inline Index flat_index(Index i, Index r, Index cols) { return i * cols + r; }

}  // namespace fase
