#pragma once

#include <cstdint>

namespace pqf {

// Central numeric tolerances. Every hard-coded epsilon in the library comes
// from here so that they can be reviewed (and overridden in tests) in one place.
struct Tolerances {
    double unitarity = 1e-10;       // max-norm of U^dag U - I
    double distribution_sum = 1e-9; // exact distributions must sum to 1 within this
};

// Work budgets for brute-force paths. Exceeding a budget raises BudgetExceeded
// rather than silently degrading the result.
struct Budgets {
    // Guard for exact_noisy_distribution: C(m, n-l) * 2^(n-l) * C(n, l).
    std::uint64_t oracle_work = 50'000'000;
    // Above this many collision-free patterns the ideal sampler switches from a
    // cached enumerated CDF to per-draw chain-rule sampling.
    std::uint64_t enumeration_patterns = 2'000'000;
};

struct StatConfig {
    int bootstrap_resamples = 200;
};

struct Config {
    Tolerances tol;
    Budgets budget;
    StatConfig stat;
};

inline const Config& default_config() {
    static const Config cfg{};
    return cfg;
}

}  // namespace pqf
