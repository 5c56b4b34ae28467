#include "pqf/combinatorics.hpp"

#include <cmath>
#include <limits>

#include "pqf/errors.hpp"

namespace pqf::comb {

std::uint64_t binomial(int n, int k) {
    if (k < 0 || n < 0 || k > n) return 0;
    if (k > n - k) k = n - k;
    unsigned __int128 acc = 1;
    for (int i = 1; i <= k; ++i) {
        acc = acc * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
        if (acc > std::numeric_limits<std::uint64_t>::max()) {
            throw Error("binomial coefficient overflows 64 bits");
        }
    }
    return static_cast<std::uint64_t>(acc);
}

double binomial_d(double n, double k) {
    if (k < 0 || k > n) return 0.0;
    return std::exp(std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1));
}

double factorial(int k) {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

std::uint64_t combination_rank(std::span<const int> combo) {
    std::uint64_t r = 0;
    for (std::size_t i = 0; i < combo.size(); ++i) {
        r += binomial(combo[i], static_cast<int>(i) + 1);
    }
    return r;
}

void combination_unrank(std::uint64_t rank, int k, std::span<int> out) {
    for (int i = k; i >= 1; --i) {
        // largest c with C(c, i) <= rank
        int c = i - 1;
        std::uint64_t v = 0; // C(i-1, i) = 0
        while (true) {
            const std::uint64_t next = binomial(c + 1, i);
            if (next > rank) break;
            ++c;
            v = next;
        }
        out[i - 1] = c;
        rank -= v;
    }
}

std::uint64_t multiset_rank(std::span<const int> modes) {
    std::uint64_t r = 0;
    for (std::size_t i = 0; i < modes.size(); ++i) {
        r += binomial(modes[i] + static_cast<int>(i), static_cast<int>(i) + 1);
    }
    return r;
}

void multiset_unrank(std::uint64_t rank, int k, std::span<int> out) {
    combination_unrank(rank, k, out);
    for (int i = 0; i < k; ++i) out[i] -= i;
}

}  // namespace pqf::comb
