#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace pqf::rng {

// splitmix64 step; used to mix seeds and derive independent stream labels.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministically combines a master seed with a path of tags
// (e.g. {kUnitary, unitary_index, record_index}) into a new 64-bit seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = master ^ 0xa0761d6478bd642fULL;
    std::uint64_t out = splitmix64(s);
    for (std::uint64_t tag : path) {
        s = out ^ (tag + 0x8ebc6af09c88c6e3ULL);
        out = splitmix64(s);
    }
    return out;
}

// Stream labels for seed derivation. Values are part of the reproducibility
// contract: changing them changes every seeded result.
enum StreamTag : std::uint64_t {
    kUnitary = 1,
    kRecord = 2,
    kBootstrap = 3,
    kReference = 4,
};

// Deterministic random stream. Wraps std::mt19937_64 (whose output sequence is
// fixed by the standard) and converts to doubles explicitly so results do not
// depend on library-specific distribution implementations.
class Stream {
  public:
    explicit Stream(std::uint64_t seed) : eng_(seed) {}

    static Stream derived(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
        return Stream(derive_seed(master, path));
    }

    std::uint64_t bits() { return eng_(); }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1]; safe as a log argument.
    double uniform_open() { return static_cast<double>((eng_() >> 11) + 1) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    // Unbiased integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = eng_();
        } while (v >= limit);
        return v % n;
    }

    // Standard normal via Box-Muller on explicit uniforms.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_open();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    std::complex<double> complex_gaussian() {
        const double u1 = uniform_open();
        const double u2 = uniform();
        const double r = std::sqrt(-std::log(u1)); // variance 1/2 per quadrature
        const double a = 2.0 * M_PI * u2;
        return {r * std::cos(a), r * std::sin(a)};
    }

  private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace pqf::rng
