#pragma once

#include <string>

#include "fase/linalg.hpp"

namespace fase {

// Asymptotic covariance of a vectorized estimate, scaled "per observation":
// entries are the covariance of the limiting distribution divided by the
// sample size n, so diagonals are directly the variances of the estimates.
// For sample covariances/correlations dim = p^2 with the full duplicated
// row-major indexing (both (i,j) and (j,i) present).
class AcovMatrix {
public:
    AcovMatrix(Matrix entries, Mode mode, long n);

    int dim() const { return static_cast<int>(m_.rows()); }
    int order() const { return p_; }  // p with dim == p^2
    const Matrix& mat() const { return m_; }
    Mode mode() const { return mode_; }
    long sample_size() const { return n_; }

private:
    Matrix m_;
    Mode mode_;
    long n_;
    int p_;
};

// Normal-theory covariance of sample covariances:
//   acov(s_ij, s_kl) = (sigma_ik sigma_jl + sigma_il sigma_jk) / n.
AcovMatrix acov_sample_covariances(const SymmetricMatrix& sigma, long n);

// Normal-theory covariance of sample correlations:
//   acov(r_ij, r_kl) = (1/n) [ 1/2 r_ij r_kl (r_ik^2 + r_il^2 + r_jk^2 + r_jl^2)
//                              + r_ik r_jl + r_il r_jk
//                              - r_ij (r_jk r_jl + r_ik r_il)
//                              - r_kl (r_ik r_jk + r_il r_jl) ].
// Rows and columns indexed by diagonal pairs (i,i) are identically zero.
AcovMatrix acov_sample_correlations(const SymmetricMatrix& sigma, long n);

// Reads an externally supplied acov matrix (e.g. a non-normal estimate).
// Format: optional '#' comment lines, a first value "dim", then dim x dim
// whitespace-separated reals, already scaled per observation.
AcovMatrix load_external_acov(const std::string& path, Mode mode, long n = 0);

void write_external_acov(const std::string& path, const AcovMatrix& acov);

}  // namespace fase
