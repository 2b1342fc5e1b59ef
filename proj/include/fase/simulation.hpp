#pragma once

#include <cstdint>
#include <random>

#include "fase/jacobians.hpp"

namespace fase {

// Deterministic stream splitting for per-replicate generators: serial and
// parallel schedules see identical draws.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

// One Wishart(Sigma, df) draw via the Bartlett decomposition.
Matrix wishart_sample(const SymmetricMatrix& sigma, long df, std::mt19937_64& engine);

// W/n rescaled to unit diagonal: one simulated sample correlation matrix.
SymmetricMatrix wishart_correlation(const SymmetricMatrix& sigma, long n, std::uint64_t seed);

struct SimulationReport {
    int m = 0;        // requested replicates
    long n = 0;       // Wishart degrees of freedom / sample size
    Method method = Method::least_square;
    int k = 0;
    Vector empirical_se_uniq;    // sd of psi-hat over successful replicates
    Vector theoretical_se_uniq;  // delta-method SEs at Sigma
    int failures = 0;            // non-converged / Heywood replicates, excluded
    std::uint64_t seed = 0;
};

// Draws m sample correlation matrices from Wishart(Sigma, n), refits the
// chosen method on each, and compares the empirical standard errors of the
// uniquenesses with the analytic ones.  threads == 0 picks a hardware count;
// results are identical for any thread count.
SimulationReport run_simulation(const SymmetricMatrix& sigma, long n, int k, Method method,
                                int m, std::uint64_t seed, int threads = 1);

}  // namespace fase
