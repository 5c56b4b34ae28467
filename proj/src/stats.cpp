#include "pqf/stats.hpp"

#include <algorithm>
#include <cmath>

#include "pqf/errors.hpp"

namespace pqf::stats {

double MomentTriple::cv_value() const {
    if (!cv) throw UndefinedStatistic("CV is undefined (zero dataset mean)");
    return *cv;
}

double MomentTriple::s_value() const {
    if (!s) throw UndefinedStatistic("skewness is undefined (zero dataset variance)");
    return *s;
}

std::string test_name(TestId id) {
    switch (id) {
        case TestId::Loss: return "t_loss";
        case TestId::D1: return "t_d1";
        case TestId::D2: return "t_d2";
        case TestId::D3: return "t_d3";
        case TestId::D4: return "t_d4";
    }
    return "?";
}

// --- loss --------------------------------------------------------------------

LossEstimate estimate_loss(const std::vector<std::vector<ClickRecord>>& records_by_unitary, int n,
                           const std::optional<IntInterval>& window) {
    LossEstimate est;
    for (const auto& records : records_by_unitary) {
        if (records.empty()) throw InsufficientData("a unitary has no records");
        if (window) {
            std::vector<std::uint64_t> hist(n + 1, 0);
            for (const ClickRecord& r : records) {
                if (r.lost < 0 || r.lost > n) throw ShapeError("record loss outside [0, n]");
                ++hist[r.lost];
            }
            est.per_unitary.push_back(estimate_loss_windowed(hist, n, *window));
        } else {
            double acc = 0.0;
            for (const ClickRecord& r : records) {
                if (r.lost < 0 || r.lost > n) throw ShapeError("record loss outside [0, n]");
                acc += r.lost;
            }
            est.per_unitary.push_back(acc / (static_cast<double>(records.size()) * n));
        }
    }
    if (est.per_unitary.empty()) throw InsufficientData("no unitaries in the record set");
    double pooled = 0.0;
    for (double v : est.per_unitary) pooled += v;
    est.pooled = pooled / static_cast<double>(est.per_unitary.size());
    return est;
}

LossEstimate estimate_loss_from_histograms(
    const std::vector<std::vector<std::uint64_t>>& sector_counts_by_unitary, int n) {
    LossEstimate est;
    for (const auto& counts : sector_counts_by_unitary) {
        std::uint64_t total = 0;
        double acc = 0.0;
        for (std::size_t l = 0; l < counts.size(); ++l) {
            total += counts[l];
            acc += static_cast<double>(l) * static_cast<double>(counts[l]);
        }
        if (total == 0) throw InsufficientData("a unitary has no records");
        est.per_unitary.push_back(acc / (static_cast<double>(total) * n));
    }
    if (est.per_unitary.empty()) throw InsufficientData("no unitaries in the record set");
    double pooled = 0.0;
    for (double v : est.per_unitary) pooled += v;
    est.pooled = pooled / static_cast<double>(est.per_unitary.size());
    return est;
}

double estimate_loss_windowed(const std::vector<std::uint64_t>& sector_counts, int n,
                              const IntInterval& window) {
    std::uint64_t total = 0;
    for (int l = window.lo; l <= window.hi && l < static_cast<int>(sector_counts.size()); ++l) {
        total += sector_counts[l];
    }
    if (total == 0) throw InsufficientData("no records inside the loss window");

    // Negative log-likelihood of the window-truncated binomial.
    auto nll = [&](double lambda) {
        double logz = -HUGE_VAL;
        for (int l = window.lo; l <= window.hi; ++l) {
            const double term = std::log(comb::binomial_d(n, l)) + (n - l) * std::log1p(-lambda) +
                                l * std::log(lambda);
            logz = logz > term ? logz + std::log1p(std::exp(term - logz))
                               : term + std::log1p(std::exp(logz - term));
        }
        double acc = 0.0;
        for (int l = window.lo; l <= window.hi && l < static_cast<int>(sector_counts.size()); ++l) {
            if (sector_counts[l] == 0) continue;
            const double logp = std::log(comb::binomial_d(n, l)) +
                                (n - l) * std::log1p(-lambda) + l * std::log(lambda) - logz;
            acc -= static_cast<double>(sector_counts[l]) * logp;
        }
        return acc;
    };

    // Golden-section minimization on (0, 1).
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = 1e-9, b = 1.0 - 1e-9;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = nll(c), fd = nll(d);
    for (int it = 0; it < 200 && (b - a) > 1e-10; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = nll(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = nll(d);
        }
    }
    return 0.5 * (a + b);
}

IntInterval loss_window(double lambda, int n, double confidence) {
    if (confidence <= 0.0 || confidence >= 1.0) {
        throw InvalidDimension("confidence must lie in (0, 1)");
    }
    const double mean = lambda * n;
    const int center = static_cast<int>(std::ceil(mean));
    int half = 0;
    if (mean > 0.0) {
        half = static_cast<int>(std::ceil(std::sqrt(3.0 * mean * std::log(2.0 / (1.0 - confidence)))));
    }
    IntInterval w{center - half, center + half};
    w.lo = std::max(w.lo, 0);
    w.hi = std::min(w.hi, n);
    return w;
}

TestVerdict test_loss(double lambda, int n, const Thresholds& th, double stat_error) {
    TestVerdict v;
    v.id = TestId::Loss;
    v.sector = -1;
    v.measured = lambda;
    v.reference = 0.0;
    v.bound = th.c_loss * std::pow(n, -th.eps1);
    v.stat_error = stat_error;
    v.pass = lambda <= v.bound;
    v.inconclusive = std::abs(lambda - v.bound) <= 2.0 * stat_error;
    return v;
}

// --- correlators ----------------------------------------------------------------

CorrelatorSet compute_cdataset(std::span<const ClickRecord> records, int m) {
    if (records.empty()) throw InsufficientData("no records in this loss sector");
    const std::size_t pairs = comb::pair_count(m);
    std::vector<double> fi(m, 0.0);
    std::vector<double> fij(pairs, 0.0);
    const int sector = records.front().lost;
    for (const ClickRecord& r : records) {
        if (r.pattern.modes() != m) throw ShapeError("record mode count mismatch");
        if (!r.pattern.collision_free()) {
            throw ShapeError("correlator estimation expects collision-free click records");
        }
        if (r.lost != sector) throw ShapeError("records span multiple loss sectors");
        const std::vector<int> clicked = r.pattern.support();
        for (std::size_t a = 0; a < clicked.size(); ++a) {
            fi[clicked[a]] += 1.0;
            for (std::size_t b = a + 1; b < clicked.size(); ++b) {
                fij[comb::pair_index(clicked[a], clicked[b], m)] += 1.0;
            }
        }
    }
    const double inv = 1.0 / static_cast<double>(records.size());
    CorrelatorSet set;
    set.modes = m;
    set.sector = sector;
    set.values.resize(pairs);
    for (int i = 0; i < m; ++i) fi[i] *= inv;
    std::size_t idx = 0;
    for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j, ++idx) {
            set.values[idx] = fij[idx] * inv - fi[i] * fi[j];
        }
    }
    return set;
}

CorrelatorSummary summarize(const CorrelatorSet& set) {
    CorrelatorSummary s;
    s.pairs = set.values.size();
    for (double v : set.values) {
        s.s1 += v;
        s.s2 += v * v;
        s.s3 += v * v * v;
    }
    return s;
}

MomentTriple moments_from_summaries(std::span<const CorrelatorSummary> summaries, int n_eff,
                                    int m) {
    if (summaries.empty()) throw InsufficientData("no correlator sets to average");
    if (n_eff < 2) throw InvalidDimension("moments require n_eff >= 2");
    double s1 = 0.0, s2 = 0.0, s3 = 0.0;
    double count = 0.0;
    for (const CorrelatorSummary& s : summaries) {
        s1 += s.s1;
        s2 += s.s2;
        s3 += s.s3;
        count += static_cast<double>(s.pairs);
    }
    const double m1 = s1 / count;
    const double m2 = s2 / count;
    const double m3 = s3 / count;
    const double var = m2 - m1 * m1;
    const double third = m3 - 3.0 * m2 * m1 + 2.0 * m1 * m1 * m1;

    MomentTriple t;
    t.nm = static_cast<double>(m) * static_cast<double>(m) / n_eff * m1;
    if (m1 != 0.0) t.cv = std::sqrt(std::max(var, 0.0)) / m1;
    if (var > 0.0) t.s = third / std::pow(var, 1.5);
    return t;
}

MomentTriple haar_average_moments(std::span<const CorrelatorSet> per_unitary_sets, int n_eff,
                                  int m) {
    std::vector<CorrelatorSummary> sums;
    sums.reserve(per_unitary_sets.size());
    for (const CorrelatorSet& set : per_unitary_sets) sums.push_back(summarize(set));
    return moments_from_summaries(sums, n_eff, m);
}

MomentTriple theory_moments(TheorySpecies species, int n_eff) {
    if (n_eff < 2) throw InvalidDimension("theory moments require n_eff >= 2");
    const double n = n_eff;
    MomentTriple t;
    switch (species) {
        case TheorySpecies::Ideal:
            t.nm = -1.0;
            t.cv = 2.0 / n - 1.0;
            t.s = 2.0 - 30.0 / n;
            break;
        case TheorySpecies::Distinguishable:
            t.nm = 1.0;
            t.cv = -std::sqrt(3.0 / n);
            t.s = -(26.0 / std::sqrt(27.0)) * std::sqrt(1.0 / n);
            break;
        case TheorySpecies::SimulatedBoson:
            t.nm = -1.0;
            t.cv = 1.0 / (2.0 * n) - 1.0;
            t.s = 2.0 - 21.0 / n;
            break;
    }
    return t;
}

namespace {

TestVerdict moment_verdict(TestId id, std::optional<double> measured,
                           std::optional<double> reference, std::optional<double> se, double bound,
                           int sector) {
    TestVerdict v;
    v.id = id;
    v.sector = sector;
    v.bound = bound;
    if (!measured || !reference) {
        v.inconclusive = true;
        v.note = !measured ? "measured moment undefined" : "reference moment undefined";
        return v;
    }
    v.measured = *measured;
    v.reference = *reference;
    v.stat_error = se.value_or(0.0);
    v.pass = v.deviation() <= bound;
    v.inconclusive = std::abs(v.deviation() - bound) <= 2.0 * v.stat_error;
    return v;
}

}  // namespace

std::vector<TestVerdict> test_moments(const MomentTriple& measured, const MomentTriple& reference,
                                      const MomentTriple& stat_errors, int n, const Thresholds& th,
                                      int sector) {
    const double b1 = th.c1 * std::pow(n, -(1.0 + th.eps2));
    const double b2 = th.c2 * std::pow(n, -(1.0 + th.eps2));
    const double b3 = th.c3 * std::pow(n, -(1.0 + th.eps2));
    return {
        moment_verdict(TestId::D1, measured.nm, reference.nm, stat_errors.nm, b1, sector),
        moment_verdict(TestId::D2, measured.cv, reference.cv, stat_errors.cv, b2, sector),
        moment_verdict(TestId::D3, measured.s, reference.s, stat_errors.s, b3, sector),
    };
}

// --- bunching --------------------------------------------------------------------

BunchingEstimate estimate_bunching(const std::vector<std::vector<ClickRecord>>& records_by_unitary,
                                   int bunching_modes) {
    BunchingEstimate est;
    for (const auto& records : records_by_unitary) {
        if (records.empty()) throw InsufficientData("a unitary has no records in this sector");
        std::uint64_t bunched = 0;
        for (const ClickRecord& r : records) {
            bool inside = true;
            for (int j = bunching_modes; j < r.pattern.modes(); ++j) {
                if (r.pattern.occupations[j] > 0) {
                    inside = false;
                    break;
                }
            }
            bunched += inside ? 1 : 0;
        }
        est.per_unitary.push_back(static_cast<double>(bunched) /
                                  static_cast<double>(records.size()));
    }
    if (est.per_unitary.empty()) throw InsufficientData("no unitaries in the record set");
    double acc = 0.0;
    for (double v : est.per_unitary) acc += v;
    est.averaged = acc / static_cast<double>(est.per_unitary.size());
    return est;
}

double theory_bunching_id(int n_eff, int m, int bunching_modes) {
    return 1.0 - static_cast<double>(n_eff) * (m - bunching_modes) / static_cast<double>(m);
}

double theory_bunching_shift(double x, int n_eff, int m, double p_next) {
    return (1.0 - x * x) * (n_eff - 1.0) * n_eff / static_cast<double>(m) * p_next;
}

TestVerdict test_bunching(double measured, double reference, double stat_error, int n,
                          const Thresholds& th, int sector) {
    TestVerdict v;
    v.id = TestId::D4;
    v.sector = sector;
    v.measured = measured;
    v.reference = reference;
    v.bound = th.c4 * std::pow(n, -(th.gamma + th.eps3));
    v.stat_error = stat_error;
    v.pass = v.deviation() <= v.bound;
    v.inconclusive = std::abs(v.deviation() - v.bound) <= 2.0 * stat_error;
    return v;
}

// --- planning ---------------------------------------------------------------------

std::uint64_t chebyshev_sample_size(double eps, double confidence, double var_bound) {
    if (eps <= 0.0) throw InvalidDimension("precision must be positive");
    if (confidence < 0.0 || confidence >= 1.0) throw InvalidDimension("confidence must lie in [0, 1)");
    if (var_bound < 0.0) throw InvalidDimension("variance bound must be non-negative");
    const double raw = var_bound / ((1.0 - confidence) * eps * eps);
    std::uint64_t L = std::max<std::uint64_t>(static_cast<std::uint64_t>(std::ceil(raw)), 1);
    // Make L exactly minimal under double arithmetic; the plain ceiling can be
    // one off when the bound lands within rounding error of an integer.
    const auto satisfies = [&](std::uint64_t candidate) {
        return static_cast<double>(candidate) * (1.0 - confidence) * eps * eps >= var_bound;
    };
    while (!satisfies(L)) ++L;
    while (L > 1 && satisfies(L - 1)) --L;
    return L;
}

SeriesGap lemma_series_gap(double x, std::uint64_t n) {
    if (x < 0.0 || x >= 1.0) throw InvalidDimension("series gap requires 0 <= x < 1");
    SeriesGap g;
    const double log_x = std::log1p(x - 1.0);
    g.exact = -std::expm1(static_cast<double>(n + 1) * log_x) / (1.0 - x);
    const double nn = static_cast<double>(n);
    g.approx = nn + 1.0 - nn * (nn + 1.0) / 2.0 * (1.0 - x);
    g.kappa = g.exact - g.approx;
    return g;
}

// --- chi-square --------------------------------------------------------------------

namespace {

// Regularized lower incomplete gamma by series expansion (x < a + 1).
double gamma_p_series(double a, double x) {
    double sum = 1.0 / a;
    double term = sum;
    for (int k = 1; k < 1000; ++k) {
        term *= x / (a + k);
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma by Lentz continued fraction (x >= a + 1).
double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 1000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-15) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double regularized_gamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw InvalidDimension("invalid incomplete gamma arguments");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_cf(a, x);
}

ChiSquareResult binomial_gof(const std::vector<std::uint64_t>& sector_counts, int n, double lambda,
                             double min_expected) {
    std::uint64_t total = 0;
    for (std::uint64_t c : sector_counts) total += c;
    if (total == 0) throw InsufficientData("empty histogram");

    std::vector<double> expected(n + 1, 0.0);
    for (int l = 0; l <= n; ++l) {
        expected[l] = comb::binomial_d(n, l) * std::pow(1.0 - lambda, n - l) *
                      std::pow(lambda, l) * static_cast<double>(total);
    }
    std::vector<double> observed(n + 1, 0.0);
    for (int l = 0; l <= n && l < static_cast<int>(sector_counts.size()); ++l) {
        observed[l] = static_cast<double>(sector_counts[l]);
    }

    // Pool from the upper tail until every bin has enough expected mass.
    std::vector<double> obs_bins, exp_bins;
    double obs_acc = 0.0, exp_acc = 0.0;
    for (int l = 0; l <= n; ++l) {
        obs_acc += observed[l];
        exp_acc += expected[l];
        if (exp_acc >= min_expected) {
            obs_bins.push_back(obs_acc);
            exp_bins.push_back(exp_acc);
            obs_acc = exp_acc = 0.0;
        }
    }
    if (exp_acc > 0.0) {
        if (!exp_bins.empty()) {
            obs_bins.back() += obs_acc;
            exp_bins.back() += exp_acc;
        } else {
            obs_bins.push_back(obs_acc);
            exp_bins.push_back(exp_acc);
        }
    }

    ChiSquareResult r;
    for (std::size_t i = 0; i < exp_bins.size(); ++i) {
        const double diff = obs_bins[i] - exp_bins[i];
        r.statistic += diff * diff / exp_bins[i];
    }
    r.dof = static_cast<int>(exp_bins.size()) - 2; // one df for the fitted lambda
    if (r.dof < 1) {
        r.dof = std::max(r.dof, 0);
        r.p_value = 1.0;
        return r;
    }
    r.p_value = regularized_gamma_q(r.dof / 2.0, r.statistic / 2.0);
    return r;
}

}  // namespace pqf::stats
