#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pqf/samplers.hpp"

namespace pqf::stats {

// --- domain types -----------------------------------------------------------

// Two-mode correlator data set at one loss sector: values C_ij for all i < j,
// packed by pair_index.
struct CorrelatorSet {
    int modes = 0;
    int sector = 0;
    std::vector<double> values;
};

// First three standardized moments of a correlator data set. CV is undefined
// when the mean vanishes, the skewness when the variance vanishes.
struct MomentTriple {
    double nm = 0.0;
    std::optional<double> cv;
    std::optional<double> s;

    double cv_value() const;
    double s_value() const;
};

// Test strictness knobs. gamma also fixes the mode scaling m = ceil(n^{2+gamma}).
struct Thresholds {
    double gamma = 0.5;
    double eps1 = 0.5;
    double eps2 = 0.5;
    double eps3 = 0.5;
    double c_loss = 1.0;
    double c1 = 1.0;
    double c2 = 1.0;
    double c3 = 1.0;
    double c4 = 1.0;
};

enum class TestId { Loss, D1, D2, D3, D4 };
std::string test_name(TestId id);

struct TestVerdict {
    TestId id = TestId::Loss;
    int sector = -1; // -1 when the test is not sector-resolved (t_loss)
    double measured = 0.0;
    double reference = 0.0;
    double bound = 0.0;
    double stat_error = 0.0;
    bool pass = false;
    bool inconclusive = false;
    std::string note;

    double deviation() const { return std::abs(measured - reference); }
};

struct IntInterval {
    int lo = 0;
    int hi = 0;
    bool contains(int v) const { return v >= lo && v <= hi; }
};

// --- loss --------------------------------------------------------------------

struct LossEstimate {
    std::vector<double> per_unitary;
    double pooled = 0.0;
};

// Mean lost fraction per unitary, then pooled across unitaries. When the
// records only cover a loss window, pass it and a window-restricted binomial
// fit is used instead of the plain mean.
LossEstimate estimate_loss(const std::vector<std::vector<ClickRecord>>& records_by_unitary, int n,
                           const std::optional<IntInterval>& window = std::nullopt);
LossEstimate estimate_loss_from_histograms(
    const std::vector<std::vector<std::uint64_t>>& sector_counts_by_unitary, int n);

// Maximum-likelihood binomial fit restricted to a loss window, for data sets
// that only cover part of the sector range.
double estimate_loss_windowed(const std::vector<std::uint64_t>& sector_counts, int n,
                              const IntInterval& window);

// Sector window around the mean loss: center ceil(lambda*n), Chernoff-style
// half-width ceil(sqrt(3 lambda n ln(2/(1-confidence)))), clamped to [0, n].
IntInterval loss_window(double lambda, int n, double confidence);

TestVerdict test_loss(double lambda, int n, const Thresholds& th, double stat_error = 0.0);

// --- correlators and moments --------------------------------------------------

// C_ij = freq(i and j click) - freq(i clicks) freq(j clicks) over records of a
// single sector. Records must be collision-free (click-level data).
CorrelatorSet compute_cdataset(std::span<const ClickRecord> records, int m);

// Per-unitary sums required for pooled moments; kept separate so bootstrap
// resampling over unitaries is cheap.
struct CorrelatorSummary {
    double s1 = 0.0;
    double s2 = 0.0;
    double s3 = 0.0;
    std::size_t pairs = 0;
};
CorrelatorSummary summarize(const CorrelatorSet& set);

// Pooled dataset moments over (pair, unitary) samples, as in the averaged
// data-set equations: NM = (m^2/n_eff) * mean, CV = std/mean, S = standardized
// third central moment.
MomentTriple moments_from_summaries(std::span<const CorrelatorSummary> summaries, int n_eff, int m);
MomentTriple haar_average_moments(std::span<const CorrelatorSet> per_unitary_sets, int n_eff,
                                  int m);

enum class TheorySpecies { Ideal, Distinguishable, SimulatedBoson };

// Leading-order theory values of (NM, CV, S) for the three particle species.
MomentTriple theory_moments(TheorySpecies species, int n_eff);

// Verdicts for the three moment tests given measured and reference triples.
// Bounds are c_k * n^-(1+eps2). Undefined moments yield inconclusive verdicts.
std::vector<TestVerdict> test_moments(const MomentTriple& measured, const MomentTriple& reference,
                                      const MomentTriple& stat_errors, int n, const Thresholds& th,
                                      int sector);

// --- full bunching -------------------------------------------------------------

struct BunchingEstimate {
    std::vector<double> per_unitary;
    double averaged = 0.0;
};

// Fraction of records whose clicks all lie in the first K modes, per unitary,
// then averaged. Records must all belong to one sector.
BunchingEstimate estimate_bunching(const std::vector<std::vector<ClickRecord>>& records_by_unitary,
                                   int bunching_modes);

// Leading-order ideal value 1 - n_eff (m - K) / m.
double theory_bunching_id(int n_eff, int m, int bunching_modes);

// Bunching shift caused by distinguishability x:
// (1 - x^2) (n_eff - 1) n_eff / m * p_next.
double theory_bunching_shift(double x, int n_eff, int m, double p_next);

TestVerdict test_bunching(double measured, double reference, double stat_error, int n,
                          const Thresholds& th, int sector);

// --- planning and numeric checks ----------------------------------------------

// Smallest L with 1 - var_bound / (L eps^2) >= confidence.
std::uint64_t chebyshev_sample_size(double eps, double confidence, double var_bound);

struct SeriesGap {
    double exact = 0.0;  // (1 - x^{n+1}) / (1 - x)
    double approx = 0.0; // n + 1 - n (n+1) (1-x) / 2
    double kappa = 0.0;  // exact - approx
};
SeriesGap lemma_series_gap(double x, std::uint64_t n);

// --- goodness of fit ------------------------------------------------------------

// Regularized upper incomplete gamma Q(a, x); Q(df/2, stat/2) is the
// chi-square survival function.
double regularized_gamma_q(double a, double x);

struct ChiSquareResult {
    double statistic = 0.0;
    int dof = 0;
    double p_value = 0.0;
};

// Chi-square goodness of fit of sector counts against Binomial(n, lambda).
// Tail bins are pooled until every expected count reaches min_expected, and one
// degree of freedom is charged for the fitted lambda.
ChiSquareResult binomial_gof(const std::vector<std::uint64_t>& sector_counts, int n, double lambda,
                             double min_expected = 5.0);

}  // namespace pqf::stats
