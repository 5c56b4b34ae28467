#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pqf/samplers.hpp"
#include "pqf/stats.hpp"

namespace pqf::engine {

// Particle models a campaign can draw from.
enum class Species { Ideal, Noisy, Distinguishable, MeanField, UniformCF, Dad };

std::string species_name(Species s);
Species parse_species(const std::string& name);

struct SourceSpec {
    Species species = Species::Ideal;
    NoiseParams noise{};
    // Mixture weight for the two-component adversarial sampler. Unset means the
    // leading-order default 1 - n (m - K) / m.
    std::optional<double> dad_alpha;
};

// Where the ideal-reference values for the tests come from.
//   ClosedForm      leading-order formulas (NM_id = -1)
//   ClosedFormGamma closed forms with the 1/n^(1+gamma) correction on NM_id
//   Oracle          exact per-unitary click-sector values from the pattern oracle
//   IdealSim        high-statistics ideal simulation on the campaign's unitaries
enum class RefMode { ClosedForm, ClosedFormGamma, Oracle, IdealSim };

struct ReferencePolicy {
    RefMode moments = RefMode::ClosedForm;
    RefMode bunching = RefMode::ClosedForm;
};

struct ExperimentPlan {
    int n = 3;
    double gamma = 0.5;
    int m = 0;               // 0 resolves to ceil(n^(2+gamma))
    int bunching_modes = 0;  // 0 resolves to m - n + 1
    std::uint64_t kprime = 20'000;    // runs per unitary
    std::uint64_t kdoubleprime = 40;  // number of unitaries
    std::uint64_t seed = 1;
    stats::Thresholds thresholds{};
    SourceSpec source{};
    ReferencePolicy refs{};
    double confidence = 0.99;
    // When the records only cover part of the sector range, the loss rate is
    // recovered by a binomial fit restricted to this window instead of the
    // plain mean lost fraction.
    std::optional<stats::IntInterval> fit_window;

    int resolved_m() const;
    int resolved_bunching_modes() const;
    double resolved_dad_alpha() const;
    void validate() const;
};

// Leading-order default mixture weight for the adversarial sampler.
double dad_alpha_leading(int n, int m, int bunching_modes);
// Exact Haar-averaged ideal full-bunching probability (multiset counting).
double dad_alpha_haar_exact(int n, int m, int bunching_modes);

// Exact total variation distance between the adversarial mixture and the
// uniform collision-free distribution, by enumeration over patterns.
double dad_uniform_tvd(int m, int n, int bunching_modes, double alpha,
                       const Config& cfg = default_config());

struct SectorOutcome {
    int sector = 0;
    std::uint64_t records = 0;
    int unitaries_with_data = 0;
    stats::MomentTriple measured, reference, stat_error;
    double bunching_measured = 0.0;
    double bunching_reference = 0.0;
    double bunching_stat_error = 0.0;
    bool has_moments = false;  // sector in scope for the moment tests
    bool has_bunching = false; // sector in scope for the bunching test
};

struct SimulationInfo {
    double collision_fraction = 0.0; // records whose true pattern had a collision
    double true_loss_mean = 0.0;     // mean lost fraction before click flattening
};

struct CampaignResult {
    ExperimentPlan plan;
    double lambda = 0.0;
    double lambda_stat_error = 0.0;
    std::vector<double> lambda_per_unitary;
    stats::IntInterval window;
    std::vector<std::uint64_t> sector_counts; // pooled, by click sector
    std::vector<SectorOutcome> sectors;
    std::vector<stats::TestVerdict> verdicts;
    std::optional<SimulationInfo> simulation;

    bool all_pass() const;
    const stats::TestVerdict* find(stats::TestId id, int sector) const;
};

// Runs the full protocol: draws the unitaries, generates kprime records each,
// estimates loss, builds per-sector statistics and verdicts. Deterministic for
// a fixed plan, independent of the worker count.
CampaignResult run_campaign(const ExperimentPlan& plan, int workers = 1);

// Generates the same records run_campaign would see (same streams, same click
// flattening) and hands them to `sink` one unitary block at a time: the block
// index, the unitary, and one click-level record per run.
void for_each_simulated_block(
    const ExperimentPlan& plan,
    const std::function<void(int, const Unitary&, const std::vector<ClickRecord>&)>& sink);

// Same statistics pipeline on ingested click records (grouped by unitary,
// click-level patterns). Reference modes that need the interferometer matrices
// require `unitaries` to be supplied in batch order.
CampaignResult run_campaign_on(const ExperimentPlan& plan,
                               const std::vector<std::vector<ClickRecord>>& records_by_unitary,
                               const std::vector<Unitary>* unitaries = nullptr, int workers = 1);

struct PqfEntry {
    int n = 0;
    bool all_pass = false;
    std::vector<std::string> failures;     // conclusive failures, "t_d2@l=1" style
    std::vector<std::string> inconclusive; // verdicts without enough statistics
};

struct PqfReport {
    std::vector<PqfEntry> entries;       // in evaluation order
    std::optional<int> pqf;              // largest passing n; unset when none pass
    bool non_monotone = false;           // some smaller n failed below the maximum
    stats::Thresholds thresholds;
};

PqfReport evaluate_pqf(const std::vector<CampaignResult>& results);

enum class CellOutcome { Pass, Fail, Inconclusive };
std::string cell_name(CellOutcome c);

struct SpeciesMatrix {
    std::vector<Species> species;
    // outcome[species index][test index 0..4 = t_loss, t_d1..t_d4]
    std::vector<std::vector<CellOutcome>> outcome;
    std::vector<CampaignResult> campaigns;
};

// Identical campaigns per species (shared unitaries, species-tagged record
// streams); per-test outcome aggregated over all in-scope sectors.
SpeciesMatrix compare_species(const ExperimentPlan& base, const std::vector<Species>& list,
                              int workers = 1);

// Exact per-sector ideal-photon reference values on the campaign's unitaries,
// computed from the pattern oracle with the same click flattening and sector
// conditioning the estimators use.
struct OracleReferences {
    std::map<int, stats::MomentTriple> moments; // keyed by click sector
    std::map<int, double> bunching;
};
OracleReferences oracle_references(const ExperimentPlan& plan, int workers = 1);

}  // namespace pqf::engine
