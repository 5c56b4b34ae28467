#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace pqf::comb {

// Exact binomial coefficient; throws pqf::Error on uint64 overflow.
std::uint64_t binomial(int n, int k);

// Binomial coefficient in double precision via lgamma; usable for large n.
double binomial_d(double n, double k);

double factorial(int k);

// --- combinations: strictly increasing index tuples c_0 < c_1 < ... < c_{k-1} ---

// Colexicographic rank of a combination drawn from [0, m).
std::uint64_t combination_rank(std::span<const int> combo);
void combination_unrank(std::uint64_t rank, int k, std::span<int> out);

// --- multisets: non-decreasing index tuples a_0 <= a_1 <= ... <= a_{k-1} ---

inline std::uint64_t multiset_count(int m, int k) { return binomial(m + k - 1, k); }

std::uint64_t multiset_rank(std::span<const int> modes);
void multiset_unrank(std::uint64_t rank, int k, std::span<int> out);

// Iterates all non-decreasing k-tuples over [0, m) in multiset_rank order
// (colexicographic: ordered by the last element, then the one before, ...).
template <typename Fn>
void for_each_multiset(int m, int k, Fn&& fn) {
    std::vector<int> t(k, 0);
    if (k == 0) {
        fn(std::span<const int>(t.data(), 0));
        return;
    }
    while (true) {
        fn(std::span<const int>(t.data(), t.size()));
        int i = 0;
        while (i < k - 1 && t[i] == t[i + 1]) ++i;
        if (i == k - 1 && t[i] == m - 1) return;
        ++t[i];
        for (int j = 0; j < i; ++j) t[j] = 0;
    }
}

// Iterates all strictly increasing k-tuples over [0, m), in lexicographic
// order (not combination_rank order).
template <typename Fn>
void for_each_combination(int m, int k, Fn&& fn) {
    if (k > m) return;
    std::vector<int> t(k);
    for (int i = 0; i < k; ++i) t[i] = i;
    if (k == 0) {
        fn(std::span<const int>(t.data(), 0));
        return;
    }
    while (true) {
        fn(std::span<const int>(t.data(), t.size()));
        int i = k - 1;
        while (i >= 0 && t[i] == m - k + i) --i;
        if (i < 0) return;
        ++t[i];
        for (int j = i + 1; j < k; ++j) t[j] = t[j - 1] + 1;
    }
}

// Packed index of an unordered mode pair i < j over m modes.
inline std::size_t pair_index(int i, int j, int m) {
    return static_cast<std::size_t>(i) * (2 * m - i - 1) / 2 + (j - i - 1);
}

inline std::size_t pair_count(int m) { return static_cast<std::size_t>(m) * (m - 1) / 2; }

}  // namespace pqf::comb
