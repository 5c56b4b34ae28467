#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "pqf/combinatorics.hpp"
#include "pqf/config.hpp"
#include "pqf/linalg.hpp"
#include "pqf/rng.hpp"

namespace pqf {

// Noise model: uniform per-photon loss probability and pairwise overlap of the
// single-photon internal states. The pairwise fidelity is overlap^2.
struct NoiseParams {
    double loss = 0.0;
    double overlap = 1.0;

    NoiseParams() = default;
    NoiseParams(double loss_probability, double pairwise_overlap);
    double fidelity() const { return overlap * overlap; }
};

// One BosonSampling run: the detected occupation pattern and how many of the
// n input photons were lost. Simulator-produced records carry the true loss;
// records ingested from click files infer it from the click count.
struct ClickRecord {
    int unitary_index = 0;
    FockPattern pattern;
    int lost = 0;

    int clicks() const { return static_cast<int>(pattern.support().size()); }
    // Loss sector as click detectors see it: collisions hide photons, so the
    // sector is n minus the number of clicked modes.
    int click_sector(int n) const { return n - clicks(); }
};

// Outcome of collapsing the internal states of the surviving photons: the
// interfering group behaves as ideal bosons, singletons propagate classically.
struct InternalPartition {
    std::vector<int> interfering;
    std::vector<int> singletons;
};

// Each photon survives independently with probability 1 - loss.
// Returns the surviving input modes (photons enter modes 0..n-1), ascending.
std::vector<int> apply_loss(int n, double loss, rng::Stream& rng);

// Each survivor joins the interfering group independently with probability
// `overlap`, otherwise it becomes a singleton. Stochastic collapse is
// distribution-exact for the pairwise-overlap noise model because the internal
// label measurement commutes with the spatial interferometer.
InternalPartition collapse_internal(const std::vector<int>& survivors, double overlap,
                                    rng::Stream& rng);

// Exact sample from the ideal output distribution of |input_modes| photons.
// Chain-rule sampling: modes are drawn one photon at a time, with conditional
// weights given by sums of squared permanents over column subsets.
FockPattern sample_ideal_output(const Unitary& u, const std::vector<int>& input_modes,
                                rng::Stream& rng);

// Full noisy pipeline: loss, internal collapse, joint sampling of the
// interfering group and classical placement of each singleton.
ClickRecord sample_noisy_output(const Unitary& u, int n, const NoiseParams& noise,
                                rng::Stream& rng);

// Fully distinguishable particles: each photon lands in mode j with
// probability |U_{j,c}|^2 independently.
FockPattern sample_distinguishable(const Unitary& u, int n, rng::Stream& rng);

// Mean-field sampler: draws random phases for the nominal input modes, forms
// the single-particle distribution q(j) = |sum_k U_{jk} e^{i theta_k}|^2 / n,
// and places all n particles i.i.d. from q.
FockPattern sample_meanfield(const Unitary& u, int n, rng::Stream& rng);

// Uniform over collision-free patterns of n photons in m modes.
FockPattern sample_uniform_cf(int m, int n, rng::Stream& rng);

// Two-component mixture: with probability alpha uniform over collision-free
// patterns supported on the first K modes, otherwise uniform over the
// remaining collision-free patterns.
FockPattern sample_dad(int m, int n, int K, double alpha, rng::Stream& rng);

// Repeated exact sampling from one ideal configuration. Builds an enumerated
// CDF over all output patterns when the pattern count is within budget,
// otherwise falls back to chain-rule sampling per draw.
class IdealSampler {
  public:
    IdealSampler(const Unitary& u, std::vector<int> input_modes,
                 const Config& cfg = default_config());

    FockPattern draw(rng::Stream& rng) const;
    bool enumerated() const { return !cdf_.empty(); }

  private:
    const Unitary* u_;
    std::vector<int> modes_;
    std::vector<double> cdf_; // over multiset ranks; empty => chain rule
};

// Exact distribution over occupation patterns with a fixed photon count.
// Probabilities are indexed by the multiset rank of the pattern.
struct PatternDistribution {
    int modes = 0;
    int photons = 0;
    std::vector<double> p;

    PatternDistribution() = default;
    PatternDistribution(int m, int k);

    double& at(const FockPattern& pat);
    double at(const FockPattern& pat) const;
    double sum() const;
    void normalize();

    static double tvd(const PatternDistribution& a, const PatternDistribution& b);

    // Calls fn(pattern_modes, probability) for every pattern (modes with
    // multiplicity, ascending), in rank order.
    template <typename Fn>
    void for_each(Fn&& fn) const;
};

// Exact ideal output distribution for photons entering `input_modes`.
PatternDistribution exact_ideal_distribution(const Unitary& u, const std::vector<int>& input_modes,
                                             const Config& cfg = default_config());

// Exact conditional output distribution of the noisy model given that exactly
// `lost` photons were lost: averages over survivor subsets, sums over internal
// partitions, and convolves interfering-group statistics with classical
// singleton placements. Refuses (BudgetExceeded) when the brute-force work
// C(m, n-l) * 2^(n-l) * C(n, l) exceeds the configured budget.
PatternDistribution exact_noisy_distribution(const Unitary& u, int n, const NoiseParams& noise,
                                             int lost, const Config& cfg = default_config());

// Click-level summary of one loss sector: everything the statistical tests
// consume, computed exactly from a pattern distribution.
struct SectorClickStats {
    double mass = 0.0;            // total probability of the sector
    std::vector<double> click;    // joint P(sector and mode i clicked)
    std::vector<double> pair;     // joint P(sector and modes i,j clicked), packed i<j
    double bunched = 0.0;         // joint P(sector and all clicks in first K modes)
};

// Splits a fixed-photon-count distribution into click sectors
// (sector = n_total - number of distinct occupied modes).
std::map<int, SectorClickStats> click_sector_stats(const PatternDistribution& dist, int n_total,
                                                   int bunching_modes);

// Total probability of patterns supported entirely on the first K modes
// (collision outcomes included).
double occupancy_bunching(const PatternDistribution& dist, int bunching_modes);

template <typename Fn>
void PatternDistribution::for_each(Fn&& fn) const {
    std::size_t rank = 0;
    comb::for_each_multiset(modes, photons, [&](std::span<const int> pat) {
        fn(pat, p[rank]);
        ++rank;
    });
}

}  // namespace pqf
