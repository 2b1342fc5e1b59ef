#include "fase/sigma_cov.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace fase {

namespace {

int isqrt_exact(Index dim) {
    const int p = static_cast<int>(std::lround(std::sqrt(static_cast<double>(dim))));
    if (static_cast<Index>(p) * p != dim) return 0;
    return p;
}

}  // namespace

AcovMatrix::AcovMatrix(Matrix entries, Mode mode, long n) : mode_(mode), n_(n) {
    if (entries.rows() == 0 || entries.rows() != entries.cols())
        throw InvalidInput("acov matrix must be square and non-empty");
    if (!entries.allFinite()) throw InvalidInput("acov matrix has non-finite entries");
    p_ = isqrt_exact(entries.rows());
    if (p_ == 0) throw InvalidInput("acov dimension must be a perfect square p^2");

    const double scale = std::max(entries.cwiseAbs().maxCoeff(), 1e-300);
    if ((entries - entries.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw InvalidInput("acov matrix must be symmetric");
    m_ = 0.5 * (entries + entries.transpose());

    if (mode_ == Mode::correlation) {
        // sigma_hat_ii == 1, so rows/columns for diagonal pairs must vanish.
        for (int i = 0; i < p_; ++i) {
            const Index d = static_cast<Index>(i) * p_ + i;
            if (m_.row(d).cwiseAbs().maxCoeff() > 1e-10 * scale)
                throw InvalidInput("correlation acov has a nonzero diagonal-pair row");
            m_.row(d).setZero();
            m_.col(d).setZero();
        }
    }

    Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
    const double tol = 1e-8 * std::max(m_.trace(), 0.0) / static_cast<double>(m_.rows());
    if (es.eigenvalues().minCoeff() < -std::max(tol, 1e-14 * scale))
        throw InvalidInput("acov matrix is not positive semidefinite");
}

AcovMatrix acov_sample_covariances(const SymmetricMatrix& sigma, long n) {
    if (sigma.mode() != Mode::covariance)
        throw WrongMode("acov_sample_covariances requires a covariance-mode matrix");
    if (n < 2) throw InvalidInput("sample size must be at least 2");
    const int p = sigma.order();
    const Matrix& s = sigma.mat();
    const double inv_n = 1.0 / static_cast<double>(n);

    Matrix a(p * p, p * p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j)
            for (int k = 0; k < p; ++k)
                for (int l = 0; l < p; ++l)
                    a(i * p + j, k * p + l) = (s(i, k) * s(j, l) + s(i, l) * s(j, k)) * inv_n;
    return AcovMatrix(std::move(a), Mode::covariance, n);
}

AcovMatrix acov_sample_correlations(const SymmetricMatrix& sigma, long n) {
    if (sigma.mode() != Mode::correlation)
        throw WrongMode("acov_sample_correlations requires a correlation-mode matrix");
    if (n < 2) throw InvalidInput("sample size must be at least 2");
    const int p = sigma.order();
    const Matrix& r = sigma.mat();
    const double inv_n = 1.0 / static_cast<double>(n);

    auto sq = [](double x) { return x * x; };
    Matrix a(p * p, p * p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j)
            for (int k = 0; k < p; ++k)
                for (int l = 0; l < p; ++l) {
                    const double t =
                        0.5 * r(i, j) * r(k, l) *
                            (sq(r(i, k)) + sq(r(i, l)) + sq(r(j, k)) + sq(r(j, l))) +
                        r(i, k) * r(j, l) + r(i, l) * r(j, k) -
                        r(i, j) * (r(j, k) * r(j, l) + r(i, k) * r(i, l)) -
                        r(k, l) * (r(i, k) * r(j, k) + r(i, l) * r(j, l));
                    a(i * p + j, k * p + l) = t * inv_n;
                }
    // The formula cancels exactly at diagonal pairs; clear the rounding dust
    // so the zero-row invariant holds bit-exactly.
    for (int i = 0; i < p; ++i) {
        a.row(i * p + i).setZero();
        a.col(i * p + i).setZero();
    }
    a = 0.5 * (a + a.transpose()).eval();
    return AcovMatrix(std::move(a), Mode::correlation, n);
}

AcovMatrix load_external_acov(const std::string& path, Mode mode, long n) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open acov file '" + path + "'");

    std::vector<double> tokens;
    std::string line;
    while (std::getline(in, line)) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string tok;
        while (ls >> tok) {
            try {
                std::size_t used = 0;
                const double v = std::stod(tok, &used);
                if (used != tok.size()) throw std::invalid_argument(tok);
                tokens.push_back(v);
            } catch (const std::exception&) {
                throw ParseError("invalid numeric token '" + tok + "' in '" + path + "'");
            }
        }
    }
    if (tokens.empty()) throw ParseError("empty acov file '" + path + "'");

    const double dim_val = tokens.front();
    const auto dim = static_cast<Index>(std::llround(dim_val));
    if (dim < 1 || std::abs(dim_val - static_cast<double>(dim)) > 1e-12)
        throw InvalidInput("acov file must start with the integer dimension");
    if (static_cast<Index>(tokens.size()) - 1 != dim * dim)
        throw InvalidInput("acov file has " + std::to_string(tokens.size() - 1) +
                           " values, expected " + std::to_string(dim * dim));

    Matrix m(dim, dim);
    for (Index i = 0; i < dim; ++i)
        for (Index j = 0; j < dim; ++j) m(i, j) = tokens[1 + i * dim + j];

    const double scale = std::max(m.cwiseAbs().maxCoeff(), 1.0);
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
        throw InvalidInput("acov file is asymmetric beyond tolerance");
    m = 0.5 * (m + m.transpose()).eval();
    return AcovMatrix(std::move(m), mode, n);
}

void write_external_acov(const std::string& path, const AcovMatrix& acov) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write acov file '" + path + "'");
    out << acov.dim() << "\n";
    char buf[32];
    for (int i = 0; i < acov.dim(); ++i) {
        for (int j = 0; j < acov.dim(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", acov.mat()(i, j));
            out << buf << (j + 1 == acov.dim() ? "" : " ");
        }
        out << "\n";
    }
}

}  // namespace fase
