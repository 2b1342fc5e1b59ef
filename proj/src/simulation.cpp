#include "fase/simulation.hpp"

#include <cmath>
#include <thread>
#include <vector>

namespace fase {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    auto splitmix = [](std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    };
    return splitmix(splitmix(seed) ^ splitmix(index + 1));
}

Matrix wishart_sample(const SymmetricMatrix& sigma, long df, std::mt19937_64& engine) {
    const int p = sigma.order();
    if (df <= p - 1) throw InvalidInput("Wishart degrees of freedom must exceed p - 1");
    Eigen::LLT<Matrix> llt(sigma.mat());
    if (llt.info() != Eigen::Success)
        throw SingularInput("Wishart scale matrix is not positive definite");

    Matrix bartlett = Matrix::Zero(p, p);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < p; ++i) {
        std::chi_squared_distribution<double> chi(static_cast<double>(df - i));
        bartlett(i, i) = std::sqrt(chi(engine));
        for (int j = 0; j < i; ++j) bartlett(i, j) = gauss(engine);
    }
    const Matrix la = Matrix(llt.matrixL()) * bartlett;
    Matrix w = la * la.transpose();
    return 0.5 * (w + w.transpose()).eval();
}

SymmetricMatrix wishart_correlation(const SymmetricMatrix& sigma, long n, std::uint64_t seed) {
    std::mt19937_64 engine(seed);
    const Matrix w = wishart_sample(sigma, n, engine);
    const int p = sigma.order();
    const Vector d = w.diagonal().cwiseSqrt();
    Matrix r(p, p);
    for (int i = 0; i < p; ++i) {
        r(i, i) = 1.0;
        for (int j = 0; j < i; ++j) r(i, j) = r(j, i) = w(i, j) / (d(i) * d(j));
    }
    return SymmetricMatrix(std::move(r), Mode::correlation);
}

SimulationReport run_simulation(const SymmetricMatrix& sigma, long n, int k, Method method,
                                int m, std::uint64_t seed, int threads) {
    if (sigma.mode() != Mode::correlation)
        throw WrongMode("run_simulation draws correlation matrices; input must be one");
    if (m < 2) throw InvalidInput("simulation needs m >= 2 replicates");
    if (n <= sigma.order()) throw InvalidInput("simulation needs n > p");
    const int p = sigma.order();

    SimulationReport rep;
    rep.m = m;
    rep.n = n;
    rep.method = method;
    rep.k = k;
    rep.seed = seed;
    rep.theoretical_se_uniq =
        assemble_se(sigma, fit(sigma, method, k), acov_sample_correlations(sigma, n))
            .se_uniquenesses;

    // Per-replicate results keyed by index; the fold below is order-fixed, so
    // the report is identical for any thread schedule.
    std::vector<char> ok(m, 0);
    std::vector<Vector> psi(m);
    auto worker = [&](int begin, int stride) {
        for (int i = begin; i < m; i += stride) {
            try {
                const SymmetricMatrix r = wishart_correlation(sigma, n, mix_seed(seed, i));
                psi[i] = fit(r, method, k).uniquenesses;
                ok[i] = 1;
            } catch (const Error&) {
                ok[i] = 0;
            }
        }
    };

    int nthreads = threads;
    if (nthreads <= 0)
        nthreads = std::max(1u, std::thread::hardware_concurrency());
    nthreads = std::min(nthreads, m);
    if (nthreads == 1) {
        worker(0, 1);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nthreads);
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker, t, nthreads);
        for (auto& t : pool) t.join();
    }

    int successes = 0;
    Vector mean = Vector::Zero(p);
    for (int i = 0; i < m; ++i)
        if (ok[i]) {
            ++successes;
            mean += psi[i];
        }
    rep.failures = m - successes;
    if (rep.failures > m / 5)
        throw UnreliableSimulation(std::to_string(rep.failures) + " of " + std::to_string(m) +
                                   " replicates failed to produce a proper solution");
    if (successes < 2)
        throw UnreliableSimulation("fewer than two successful replicates");
    mean /= successes;
    Vector ss = Vector::Zero(p);
    for (int i = 0; i < m; ++i)
        if (ok[i]) ss += (psi[i] - mean).cwiseAbs2();
    rep.empirical_se_uniq = (ss / (successes - 1)).cwiseSqrt();
    return rep;
}

}  // namespace fase
