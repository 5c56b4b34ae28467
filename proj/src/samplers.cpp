#include "pqf/samplers.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "pqf/errors.hpp"

namespace pqf {

namespace {

// Draws an index from non-negative weights. The caller guarantees a positive total.
int draw_weighted(const std::vector<double>& w, double total, rng::Stream& rng) {
    double target = rng.uniform() * total;
    for (std::size_t j = 0; j + 1 < w.size(); ++j) {
        target -= w[j];
        if (target < 0) return static_cast<int>(j);
    }
    return static_cast<int>(w.size()) - 1;
}

// Masks over k bits grouped by popcount, in ascending numeric order.
std::vector<std::vector<std::uint32_t>> masks_by_popcount(int k) {
    std::vector<std::vector<std::uint32_t>> groups(k + 1);
    for (std::uint32_t mask = 0; mask < (1u << k); ++mask) {
        groups[std::popcount(mask)].push_back(mask);
    }
    return groups;
}

// Classical single-photon placement: mode j with probability |U_{j,c}|^2.
int place_classically(const Unitary& u, int input_mode, rng::Stream& rng) {
    const int m = u.dim();
    double target = rng.uniform();
    double acc = 0.0;
    for (int j = 0; j + 1 < m; ++j) {
        acc += std::norm(u(j, input_mode));
        if (target < acc) return j;
    }
    return m - 1;
}

}  // namespace

NoiseParams::NoiseParams(double loss_probability, double pairwise_overlap)
    : loss(loss_probability), overlap(pairwise_overlap) {
    if (loss < 0.0 || loss > 1.0) throw InvalidDimension("loss probability outside [0, 1]");
    if (overlap < 0.0 || overlap > 1.0) throw InvalidDimension("overlap outside [0, 1]");
}

std::vector<int> apply_loss(int n, double loss, rng::Stream& rng) {
    std::vector<int> survivors;
    survivors.reserve(n);
    for (int i = 0; i < n; ++i) {
        if (!rng.bernoulli(loss)) survivors.push_back(i);
    }
    return survivors;
}

InternalPartition collapse_internal(const std::vector<int>& survivors, double overlap,
                                    rng::Stream& rng) {
    InternalPartition part;
    for (int s : survivors) {
        if (rng.bernoulli(overlap)) {
            part.interfering.push_back(s);
        } else {
            part.singletons.push_back(s);
        }
    }
    return part;
}

FockPattern sample_ideal_output(const Unitary& u, const std::vector<int>& input_modes,
                                rng::Stream& rng) {
    const int m = u.dim();
    const int k = static_cast<int>(input_modes.size());
    if (k > m) throw InvalidDimension("more photons than modes");
    for (int c : input_modes) {
        if (c < 0 || c >= m) throw InvalidDimension("input mode out of range");
    }
    if (k == 0) return FockPattern::zeros(m);
    if (k > 20) throw BudgetExceeded("chain-rule sampler limited to 20 photons");

    // perm[mask] holds Perm(U[rows so far | columns in mask]) for |mask| = step.
    // Extending by a row is a Laplace expansion along that row, so the
    // conditional weight of the next mode j is
    //   w_j = sum_{|mask| = step+1} |sum_{c in mask} U(j, col_c) perm[mask \ c]|^2.
    const auto groups = masks_by_popcount(k);
    std::vector<std::complex<double>> perm(1u << k), next(1u << k);
    perm[0] = {1.0, 0.0};
    std::vector<double> w(m);
    std::vector<int> rows;
    rows.reserve(k);
    for (int step = 0; step < k; ++step) {
        const auto& masks = groups[step + 1];
        std::fill(w.begin(), w.end(), 0.0);
        for (int j = 0; j < m; ++j) {
            double wj = 0.0;
            for (std::uint32_t mask : masks) {
                std::complex<double> val{0.0, 0.0};
                std::uint32_t rest = mask;
                while (rest) {
                    const int c = std::countr_zero(rest);
                    rest &= rest - 1;
                    val += u(j, input_modes[c]) * perm[mask ^ (1u << c)];
                }
                wj += std::norm(val);
            }
            w[j] = wj;
        }
        const double total = std::accumulate(w.begin(), w.end(), 0.0);
        const int chosen = draw_weighted(w, total, rng);
        rows.push_back(chosen);
        for (std::uint32_t mask : masks) {
            std::complex<double> val{0.0, 0.0};
            std::uint32_t rest = mask;
            while (rest) {
                const int c = std::countr_zero(rest);
                rest &= rest - 1;
                val += u(chosen, input_modes[c]) * perm[mask ^ (1u << c)];
            }
            next[mask] = val;
        }
        std::swap(perm, next);
    }
    return FockPattern::from_modes(rows, m);
}

ClickRecord sample_noisy_output(const Unitary& u, int n, const NoiseParams& noise,
                                rng::Stream& rng) {
    const int m = u.dim();
    if (n > m) throw InvalidDimension("more photons than modes");
    const std::vector<int> survivors = apply_loss(n, noise.loss, rng);
    const InternalPartition part = collapse_internal(survivors, noise.overlap, rng);

    FockPattern pattern = sample_ideal_output(u, part.interfering, rng);
    for (int c : part.singletons) {
        ++pattern.occupations[place_classically(u, c, rng)];
    }
    ClickRecord rec;
    rec.pattern = std::move(pattern);
    rec.lost = n - static_cast<int>(survivors.size());
    return rec;
}

FockPattern sample_distinguishable(const Unitary& u, int n, rng::Stream& rng) {
    const int m = u.dim();
    if (n > m) throw InvalidDimension("more photons than modes");
    FockPattern pattern = FockPattern::zeros(m);
    for (int c = 0; c < n; ++c) {
        ++pattern.occupations[place_classically(u, c, rng)];
    }
    return pattern;
}

FockPattern sample_meanfield(const Unitary& u, int n, rng::Stream& rng) {
    const int m = u.dim();
    if (n > m) throw InvalidDimension("more photons than modes");
    std::vector<double> q(m);
    double qsum = 0.0;
    std::vector<std::complex<double>> phases(n);
    for (int c = 0; c < n; ++c) {
        const double theta = rng.uniform(0.0, 2.0 * M_PI);
        phases[c] = {std::cos(theta), std::sin(theta)};
    }
    for (int j = 0; j < m; ++j) {
        std::complex<double> amp{0.0, 0.0};
        for (int c = 0; c < n; ++c) amp += u(j, c) * phases[c];
        q[j] = std::norm(amp) / n;
        qsum += q[j];
    }
    FockPattern pattern = FockPattern::zeros(m);
    for (int c = 0; c < n; ++c) {
        ++pattern.occupations[draw_weighted(q, qsum, rng)];
    }
    return pattern;
}

FockPattern sample_uniform_cf(int m, int n, rng::Stream& rng) {
    if (n > m || n < 0 || m < 1) throw InvalidDimension("need 0 <= n <= m, m >= 1");
    // Partial Fisher-Yates over a scratch index vector.
    thread_local std::vector<int> scratch;
    scratch.resize(m);
    std::iota(scratch.begin(), scratch.end(), 0);
    FockPattern pattern = FockPattern::zeros(m);
    for (int i = 0; i < n; ++i) {
        const std::size_t pick = i + rng.below(m - i);
        std::swap(scratch[i], scratch[pick]);
        pattern.occupations[scratch[i]] = 1;
    }
    return pattern;
}

FockPattern sample_dad(int m, int n, int K, double alpha, rng::Stream& rng) {
    if (K < n || K > m) throw InvalidDimension("K must lie in [n, m]");
    if (alpha < 0.0 || alpha > 1.0) throw InvalidDimension("alpha outside [0, 1]");
    if (K == m && alpha < 1.0) throw InvalidDimension("complement support is empty for K = m");
    if (rng.bernoulli(alpha)) {
        FockPattern head = sample_uniform_cf(K, n, rng);
        head.occupations.resize(m, 0);
        return head;
    }
    // Uniform over collision-free patterns not fully contained in the first K
    // modes, by rejection from the full collision-free set.
    while (true) {
        FockPattern pattern = sample_uniform_cf(m, n, rng);
        for (int j = K; j < m; ++j) {
            if (pattern.occupations[j] > 0) return pattern;
        }
    }
}

// ---------------------------------------------------------------------------
// IdealSampler

IdealSampler::IdealSampler(const Unitary& u, std::vector<int> input_modes, const Config& cfg)
    : u_(&u), modes_(std::move(input_modes)) {
    const int m = u.dim();
    const int k = static_cast<int>(modes_.size());
    double cf_patterns = comb::binomial_d(m, k);
    if (cf_patterns <= static_cast<double>(cfg.budget.enumeration_patterns) && k <= 16) {
        const PatternDistribution dist = exact_ideal_distribution(u, modes_, cfg);
        cdf_.resize(dist.p.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < dist.p.size(); ++i) {
            acc += dist.p[i];
            cdf_[i] = acc;
        }
    }
}

FockPattern IdealSampler::draw(rng::Stream& rng) const {
    if (cdf_.empty()) return sample_ideal_output(*u_, modes_, rng);
    const double target = rng.uniform() * cdf_.back();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
    const std::uint64_t rank = static_cast<std::uint64_t>(it - cdf_.begin());
    const int k = static_cast<int>(modes_.size());
    std::vector<int> pat(k);
    comb::multiset_unrank(std::min<std::uint64_t>(rank, cdf_.size() - 1), k, pat);
    return FockPattern::from_modes(pat, u_->dim());
}

// ---------------------------------------------------------------------------
// Exact distributions

PatternDistribution::PatternDistribution(int m, int k)
    : modes(m), photons(k), p(comb::multiset_count(m, k), 0.0) {}

double& PatternDistribution::at(const FockPattern& pat) {
    const std::vector<int> list = pat.mode_list();
    return p[comb::multiset_rank(list)];
}

double PatternDistribution::at(const FockPattern& pat) const {
    const std::vector<int> list = pat.mode_list();
    return p[comb::multiset_rank(list)];
}

double PatternDistribution::sum() const {
    return std::accumulate(p.begin(), p.end(), 0.0);
}

void PatternDistribution::normalize() {
    const double s = sum();
    if (s <= 0) throw UndefinedStatistic("cannot normalize a zero distribution");
    for (double& v : p) v /= s;
}

double PatternDistribution::tvd(const PatternDistribution& a, const PatternDistribution& b) {
    if (a.modes != b.modes || a.photons != b.photons) {
        throw ShapeError("TVD requires distributions over the same pattern space");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.p.size(); ++i) acc += std::abs(a.p[i] - b.p[i]);
    return 0.5 * acc;
}

namespace {

// Binomial lookup for fast multiset ranking during convolutions.
struct RankTable {
    int k_max;
    std::vector<std::uint64_t> c; // c[a * (k_max + 1) + b] = C(a, b)

    RankTable(int a_max, int k) : k_max(k), c((a_max + 1) * (k + 1), 0) {
        for (int a = 0; a <= a_max; ++a) {
            c[idx(a, 0)] = 1;
            for (int b = 1; b <= std::min(a, k); ++b) {
                c[idx(a, b)] = c[idx(a - 1, b - 1)] + c[idx(a - 1, b)];
            }
        }
    }
    std::size_t idx(int a, int b) const { return static_cast<std::size_t>(a) * (k_max + 1) + b; }
    std::uint64_t rank(std::span<const int> modes) const {
        std::uint64_t r = 0;
        for (std::size_t i = 0; i < modes.size(); ++i) {
            r += c[idx(modes[i] + static_cast<int>(i), static_cast<int>(i) + 1)];
        }
        return r;
    }
};

}  // namespace

PatternDistribution exact_ideal_distribution(const Unitary& u, const std::vector<int>& input_modes,
                                             const Config& cfg) {
    const int m = u.dim();
    const int k = static_cast<int>(input_modes.size());
    const double patterns = comb::binomial_d(m + k - 1, k);
    if (patterns > static_cast<double>(cfg.budget.oracle_work)) {
        throw BudgetExceeded("ideal distribution enumeration exceeds the work budget");
    }
    PatternDistribution dist(m, k);
    if (k == 0) {
        dist.p[0] = 1.0;
        return dist;
    }
    ComplexMatrix sub(k, k);
    std::size_t rank = 0;
    comb::for_each_multiset(m, k, [&](std::span<const int> rows) {
        for (int r = 0; r < k; ++r) {
            for (int c = 0; c < k; ++c) sub(r, c) = u(rows[r], input_modes[c]);
        }
        double denom = 1.0;
        int run = 1;
        for (int r = 1; r < k; ++r) {
            run = (rows[r] == rows[r - 1]) ? run + 1 : 1;
            denom *= run;
        }
        dist.p[rank++] = std::norm(permanent(sub)) / denom;
    });
    return dist;
}

PatternDistribution exact_noisy_distribution(const Unitary& u, int n, const NoiseParams& noise,
                                             int lost, const Config& cfg) {
    const int m = u.dim();
    if (lost < 0 || lost > n) throw InvalidDimension("lost count outside [0, n]");
    if (n > m) throw InvalidDimension("more photons than modes");
    const int k = n - lost;
    const double work = comb::binomial_d(m, k) * std::pow(2.0, k) * comb::binomial_d(n, lost);
    if (work > static_cast<double>(cfg.budget.oracle_work)) {
        throw BudgetExceeded("exact noisy distribution exceeds the work budget");
    }

    PatternDistribution result(m, k);
    if (k == 0) {
        result.p[0] = 1.0;
        return result;
    }

    const RankTable ranks(m + k, k);
    const double x = noise.overlap;
    const std::uint64_t survivor_sets = comb::binomial(n, lost);

    // Ideal distributions of interfering subsets, memoized by column mask.
    std::unordered_map<std::uint32_t, PatternDistribution> ideal_memo;

    std::vector<double> next;
    comb::for_each_combination(n, k, [&](std::span<const int> survivors) {
        for (std::uint32_t g_mask = 0; g_mask < (1u << k); ++g_mask) {
            const int g_size = std::popcount(g_mask);
            const double weight = std::pow(x, g_size) * std::pow(1.0 - x, k - g_size) /
                                  static_cast<double>(survivor_sets);
            if (weight == 0.0) continue;

            std::uint32_t col_mask = 0;
            std::vector<int> g_cols;
            for (int b = 0; b < k; ++b) {
                if ((g_mask >> b) & 1u) {
                    g_cols.push_back(survivors[b]);
                    col_mask |= 1u << survivors[b];
                }
            }
            auto memo = ideal_memo.find(col_mask);
            if (memo == ideal_memo.end()) {
                memo = ideal_memo.emplace(col_mask, exact_ideal_distribution(u, g_cols, cfg)).first;
            }

            // Convolve the interfering-group distribution with one classical
            // placement per singleton, then accumulate.
            int photons = g_size;
            std::vector<double> cur = memo->second.p;
            for (int b = 0; b < k; ++b) {
                if ((g_mask >> b) & 1u) continue;
                const int col = survivors[b];
                next.assign(comb::multiset_count(m, photons + 1), 0.0);
                std::size_t rank = 0;
                std::vector<int> extended(photons + 1);
                comb::for_each_multiset(m, photons, [&](std::span<const int> pat) {
                    const double base = cur[rank++];
                    if (base != 0.0) {
                        for (int j = 0; j < m; ++j) {
                            // insert j keeping the tuple sorted
                            int pos = 0;
                            while (pos < photons && pat[pos] <= j) {
                                extended[pos] = pat[pos];
                                ++pos;
                            }
                            extended[pos] = j;
                            for (int t = pos; t < photons; ++t) extended[t + 1] = pat[t];
                            next[ranks.rank(std::span<const int>(extended.data(), photons + 1))] +=
                                base * std::norm(u(j, col));
                        }
                    }
                });
                cur.swap(next);
                ++photons;
            }
            for (std::size_t i = 0; i < cur.size(); ++i) result.p[i] += weight * cur[i];
        }
    });
    return result;
}

double occupancy_bunching(const PatternDistribution& dist, int bunching_modes) {
    double acc = 0.0;
    dist.for_each([&](std::span<const int> pat, double prob) {
        if (pat.empty() || pat.back() < bunching_modes) acc += prob;
    });
    return acc;
}

std::map<int, SectorClickStats> click_sector_stats(const PatternDistribution& dist, int n_total,
                                                   int bunching_modes) {
    const int m = dist.modes;
    std::map<int, SectorClickStats> out;
    std::vector<int> clicked;
    dist.for_each([&](std::span<const int> pat, double prob) {
        if (prob == 0.0) return;
        clicked.clear();
        for (int mode : pat) {
            if (clicked.empty() || clicked.back() != mode) clicked.push_back(mode);
        }
        const int sector = n_total - static_cast<int>(clicked.size());
        auto& st = out[sector];
        if (st.click.empty()) {
            st.click.assign(m, 0.0);
            st.pair.assign(comb::pair_count(m), 0.0);
        }
        st.mass += prob;
        for (std::size_t a = 0; a < clicked.size(); ++a) {
            st.click[clicked[a]] += prob;
            for (std::size_t b = a + 1; b < clicked.size(); ++b) {
                st.pair[comb::pair_index(clicked[a], clicked[b], m)] += prob;
            }
        }
        if (clicked.empty() || clicked.back() < bunching_modes) st.bunched += prob;
    });
    return out;
}

}  // namespace pqf
