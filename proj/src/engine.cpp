#include "pqf/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <thread>

#include "pqf/errors.hpp"

namespace pqf::engine {

std::string species_name(Species s) {
    switch (s) {
        case Species::Ideal: return "ideal";
        case Species::Noisy: return "noisy";
        case Species::Distinguishable: return "distinguishable";
        case Species::MeanField: return "meanfield";
        case Species::UniformCF: return "uniform";
        case Species::Dad: return "dad";
    }
    return "?";
}

Species parse_species(const std::string& name) {
    if (name == "ideal") return Species::Ideal;
    if (name == "noisy") return Species::Noisy;
    if (name == "distinguishable") return Species::Distinguishable;
    if (name == "meanfield") return Species::MeanField;
    if (name == "uniform") return Species::UniformCF;
    if (name == "dad") return Species::Dad;
    throw InvalidDimension("unknown species: " + name);
}

int ExperimentPlan::resolved_m() const {
    if (m > 0) return m;
    return static_cast<int>(std::ceil(std::pow(static_cast<double>(n), 2.0 + gamma)));
}

int ExperimentPlan::resolved_bunching_modes() const {
    if (bunching_modes > 0) return bunching_modes;
    return resolved_m() - n + 1;
}

double dad_alpha_leading(int n, int m, int bunching_modes) {
    return 1.0 - static_cast<double>(n) * (m - bunching_modes) / static_cast<double>(m);
}

double dad_alpha_haar_exact(int n, int m, int bunching_modes) {
    return comb::binomial_d(bunching_modes + n - 1, n) / comb::binomial_d(m + n - 1, n);
}

double ExperimentPlan::resolved_dad_alpha() const {
    if (source.dad_alpha) return *source.dad_alpha;
    return dad_alpha_leading(n, resolved_m(), resolved_bunching_modes());
}

void ExperimentPlan::validate() const {
    if (n < 1) throw InvalidDimension("plan needs n >= 1");
    const int mm = resolved_m();
    if (mm <= n * n) throw InvalidDimension("plan violates the no-collision regime m > n^2");
    if (kprime < 1 || kdoubleprime < 1) throw InvalidDimension("kprime and kdoubleprime must be >= 1");
    const int K = resolved_bunching_modes();
    if (K < n || K > mm) throw InvalidDimension("bunching mode count outside [n, m]");
    const double alpha = resolved_dad_alpha();
    if (source.species == Species::Dad && (alpha < 0.0 || alpha > 1.0)) {
        throw InvalidDimension("resolved dad mixture weight outside [0, 1]");
    }
}

double dad_uniform_tvd(int m, int n, int bunching_modes, double alpha, const Config& cfg) {
    const double total_d = comb::binomial_d(m, n);
    if (total_d > static_cast<double>(cfg.budget.oracle_work)) {
        throw BudgetExceeded("collision-free enumeration exceeds the work budget");
    }
    const std::uint64_t total = comb::binomial(m, n);
    const std::uint64_t head = bunching_modes >= n ? comb::binomial(bunching_modes, n) : 0;
    const std::uint64_t tail = total - head;
    if (tail == 0 && alpha < 1.0) throw InvalidDimension("empty mixture complement");
    const double p_unif = 1.0 / static_cast<double>(total);
    const double p_head = head > 0 ? alpha / static_cast<double>(head) : 0.0;
    const double p_tail = tail > 0 ? (1.0 - alpha) / static_cast<double>(tail) : 0.0;
    double acc = 0.0;
    comb::for_each_combination(m, n, [&](std::span<const int> combo) {
        const bool in_head = combo.back() < bunching_modes;
        acc += std::abs((in_head ? p_head : p_tail) - p_unif);
    });
    return 0.5 * acc;
}

// ---------------------------------------------------------------------------
// record accumulation

namespace {

struct SectorAccum {
    std::uint64_t count = 0;
    std::uint64_t bunched = 0;
    std::vector<std::uint32_t> clicks;
    std::vector<std::uint32_t> pairs;
};

struct UAccum {
    std::vector<SectorAccum> sectors;          // by click sector, size n+1
    std::vector<std::uint64_t> true_loss_hist; // by true lost count (simulation only)
    std::uint64_t collisions = 0;
    std::uint64_t records = 0;
};

void accumulate_clicks(UAccum& acc, const std::vector<int>& clicked, int n, int m,
                       int bunching_modes) {
    const int sector = n - static_cast<int>(clicked.size());
    if (sector < 0 || sector > n) throw ShapeError("record click count exceeds n");
    SectorAccum& st = acc.sectors[sector];
    if (st.clicks.empty()) {
        st.clicks.assign(m, 0);
        st.pairs.assign(comb::pair_count(m), 0);
    }
    ++st.count;
    ++acc.records;
    bool inside = true;
    for (std::size_t a = 0; a < clicked.size(); ++a) {
        if (clicked[a] >= bunching_modes) inside = false;
        st.clicks[clicked[a]] += 1;
        for (std::size_t b = a + 1; b < clicked.size(); ++b) {
            st.pairs[comb::pair_index(clicked[a], clicked[b], m)] += 1;
        }
    }
    if (inside) ++st.bunched;
}

// One record from the configured species. Returns the true occupation pattern
// and the number of photons lost before the interferometer.
std::pair<FockPattern, int> draw_record(const ExperimentPlan& plan, const Unitary& u,
                                        const IdealSampler* ideal_cache, rng::Stream& rng) {
    const int n = plan.n;
    switch (plan.source.species) {
        case Species::Ideal:
            return {ideal_cache->draw(rng), 0};
        case Species::Noisy: {
            ClickRecord rec = sample_noisy_output(u, n, plan.source.noise, rng);
            return {std::move(rec.pattern), rec.lost};
        }
        case Species::Distinguishable:
            return {sample_distinguishable(u, n, rng), 0};
        case Species::MeanField:
            return {sample_meanfield(u, n, rng), 0};
        case Species::UniformCF:
            return {sample_uniform_cf(u.dim(), n, rng), 0};
        case Species::Dad:
            return {sample_dad(u.dim(), n, plan.resolved_bunching_modes(),
                               plan.resolved_dad_alpha(), rng),
                    0};
    }
    throw InvalidDimension("unhandled species");
}

void run_parallel(int jobs, int workers, const std::function<void(int)>& body) {
    workers = std::max(1, std::min(workers, jobs));
    if (workers == 1) {
        for (int j = 0; j < jobs; ++j) body(j);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            while (true) {
                const int j = next.fetch_add(1);
                if (j >= jobs) return;
                try {
                    body(j);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

std::vector<Unitary> draw_unitaries(const ExperimentPlan& plan, int workers) {
    const int m = plan.resolved_m();
    const int count = static_cast<int>(plan.kdoubleprime);
    std::vector<std::optional<Unitary>> slots(count);
    run_parallel(count, workers, [&](int k) {
        rng::Stream stream = rng::Stream::derived(plan.seed, {rng::kUnitary, (std::uint64_t)k});
        slots[k].emplace(haar_random_unitary(m, stream));
    });
    std::vector<Unitary> out;
    out.reserve(count);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

struct DrawnRecord {
    std::vector<int> clicked; // clicked modes, ascending
    int lost_true = 0;
    bool collision = false;
};

void draw_click_record(const ExperimentPlan& plan, const Unitary& u, const IdealSampler* cache,
                       rng::Stream& rng, DrawnRecord& out) {
    auto [pattern, lost] = draw_record(plan, u, cache, rng);
    out.clicked.clear();
    out.collision = false;
    for (int mode = 0; mode < pattern.modes(); ++mode) {
        if (pattern.occupations[mode] > 0) {
            out.clicked.push_back(mode);
            if (pattern.occupations[mode] > 1) out.collision = true;
        }
    }
    out.lost_true = lost;
}

// Generates plan.kprime records per unitary and accumulates click statistics.
// stream_tag separates the measured pass from reference passes.
std::vector<UAccum> run_sampling(const ExperimentPlan& plan, const std::vector<Unitary>& unitaries,
                                 std::uint64_t stream_tag, std::uint64_t species_tag, int workers,
                                 bool ideal_override = false) {
    const int n = plan.n;
    const int m = plan.resolved_m();
    const int K = plan.resolved_bunching_modes();
    ExperimentPlan local = plan;
    if (ideal_override) local.source = SourceSpec{Species::Ideal, NoiseParams{}, std::nullopt};

    std::vector<UAccum> accums(unitaries.size());
    run_parallel(static_cast<int>(unitaries.size()), workers, [&](int k) {
        UAccum& acc = accums[k];
        acc.sectors.resize(n + 1);
        acc.true_loss_hist.assign(n + 1, 0);
        const Unitary& u = unitaries[k];
        std::optional<IdealSampler> cache;
        if (local.source.species == Species::Ideal) {
            std::vector<int> modes(n);
            for (int i = 0; i < n; ++i) modes[i] = i;
            cache.emplace(u, std::move(modes));
        }
        DrawnRecord rec;
        for (std::uint64_t i = 0; i < local.kprime; ++i) {
            rng::Stream rec_stream = rng::Stream::derived(
                local.seed, {stream_tag, species_tag, (std::uint64_t)k, i});
            draw_click_record(local, u, cache ? &*cache : nullptr, rec_stream, rec);
            if (rec.collision) ++acc.collisions;
            ++acc.true_loss_hist[rec.lost_true];
            accumulate_clicks(acc, rec.clicked, n, m, K);
        }
    });
    return accums;
}

stats::CorrelatorSet correlators_from_counts(const SectorAccum& st, int m, int sector) {
    stats::CorrelatorSet set;
    set.modes = m;
    set.sector = sector;
    const double inv = 1.0 / static_cast<double>(st.count);
    set.values.resize(comb::pair_count(m));
    std::size_t idx = 0;
    for (int i = 0; i < m; ++i) {
        const double fi = st.clicks[i] * inv;
        for (int j = i + 1; j < m; ++j, ++idx) {
            set.values[idx] = st.pairs[idx] * inv - fi * (st.clicks[j] * inv);
        }
    }
    return set;
}

double mean_of(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

double population_std(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double mu = mean_of(v);
    double acc = 0.0;
    for (double x : v) acc += (x - mu) * (x - mu);
    return std::sqrt(acc / static_cast<double>(v.size()));
}

// Bootstrap standard error of the mean of per-unitary scalars.
double bootstrap_se_scalar(const std::vector<double>& per_u, int resamples, rng::Stream& rng) {
    if (per_u.size() < 2) return 0.0;
    std::vector<double> stats;
    stats.reserve(resamples);
    const std::size_t count = per_u.size();
    for (int r = 0; r < resamples; ++r) {
        double acc = 0.0;
        for (std::size_t i = 0; i < count; ++i) acc += per_u[rng.below(count)];
        stats.push_back(acc / static_cast<double>(count));
    }
    return population_std(stats);
}

// Bootstrap standard errors of the pooled dataset moments over unitaries.
stats::MomentTriple bootstrap_se_moments(const std::vector<stats::CorrelatorSummary>& sums,
                                         int n_eff, int m, int resamples, rng::Stream& rng) {
    stats::MomentTriple se;
    if (sums.size() < 2) return se;
    std::vector<double> nm_s, cv_s, s_s;
    std::vector<stats::CorrelatorSummary> picked(sums.size());
    for (int r = 0; r < resamples; ++r) {
        for (std::size_t i = 0; i < sums.size(); ++i) picked[i] = sums[rng.below(sums.size())];
        const stats::MomentTriple t = stats::moments_from_summaries(picked, n_eff, m);
        nm_s.push_back(t.nm);
        if (t.cv) cv_s.push_back(*t.cv);
        if (t.s) s_s.push_back(*t.s);
    }
    se.nm = population_std(nm_s);
    if (!cv_s.empty()) se.cv = population_std(cv_s);
    if (!s_s.empty()) se.s = population_std(s_s);
    return se;
}

struct ReferenceData {
    // keyed by sector
    std::map<int, stats::MomentTriple> moments;
    std::map<int, stats::MomentTriple> moment_errors;
    std::map<int, double> bunching;
    std::map<int, double> bunching_errors;
};

ReferenceData closed_form_references(const ExperimentPlan& plan, bool gamma_corrected) {
    ReferenceData refs;
    const int n = plan.n;
    const int m = plan.resolved_m();
    const int K = plan.resolved_bunching_modes();
    for (int sector = 0; sector <= n; ++sector) {
        const int n_eff = n - sector;
        if (n_eff >= 2) {
            stats::MomentTriple t = stats::theory_moments(stats::TheorySpecies::Ideal, n_eff);
            if (gamma_corrected) {
                t.nm = -1.0 - std::pow(static_cast<double>(n_eff), -(1.0 + plan.thresholds.gamma));
            }
            refs.moments[sector] = t;
            refs.moment_errors[sector] = stats::MomentTriple{0.0, 0.0, 0.0};
        }
        if (n_eff >= 1) {
            refs.bunching[sector] = stats::theory_bunching_id(n_eff, m, K);
            refs.bunching_errors[sector] = 0.0;
        }
    }
    return refs;
}

ReferenceData oracle_reference_data(const ExperimentPlan& plan,
                                    const std::vector<Unitary>& unitaries, int workers) {
    const int n = plan.n;
    const int m = plan.resolved_m();
    const int K = plan.resolved_bunching_modes();
    std::vector<int> modes(n);
    for (int i = 0; i < n; ++i) modes[i] = i;

    struct PerU {
        std::map<int, stats::CorrelatorSummary> sums;
        std::map<int, double> bunch;
        std::map<int, double> mass;
    };
    std::vector<PerU> per_u(unitaries.size());
    run_parallel(static_cast<int>(unitaries.size()), workers, [&](int k) {
        const PatternDistribution dist = exact_ideal_distribution(unitaries[k], modes);
        const auto sectors = click_sector_stats(dist, n, K);
        for (const auto& [sector, st] : sectors) {
            if (st.mass <= 0.0) continue;
            stats::CorrelatorSet set;
            set.modes = m;
            set.sector = sector;
            set.values.resize(comb::pair_count(m));
            const double inv = 1.0 / st.mass;
            std::size_t idx = 0;
            for (int i = 0; i < m; ++i) {
                const double pi = st.click[i] * inv;
                for (int j = i + 1; j < m; ++j, ++idx) {
                    set.values[idx] = st.pair[idx] * inv - pi * (st.click[j] * inv);
                }
            }
            per_u[k].sums[sector] = stats::summarize(set);
            per_u[k].bunch[sector] = st.bunched * inv;
            per_u[k].mass[sector] = st.mass;
        }
    });

    ReferenceData refs;
    for (int sector = 0; sector <= n; ++sector) {
        std::vector<stats::CorrelatorSummary> sums;
        std::vector<double> bunch;
        for (const PerU& pu : per_u) {
            auto it = pu.sums.find(sector);
            if (it != pu.sums.end()) sums.push_back(it->second);
            auto ib = pu.bunch.find(sector);
            if (ib != pu.bunch.end()) bunch.push_back(ib->second);
        }
        const int n_eff = n - sector;
        if (!sums.empty() && n_eff >= 2) {
            refs.moments[sector] = stats::moments_from_summaries(sums, n_eff, m);
            refs.moment_errors[sector] = stats::MomentTriple{0.0, 0.0, 0.0};
        }
        if (!bunch.empty() && n_eff >= 1) {
            refs.bunching[sector] = mean_of(bunch);
            refs.bunching_errors[sector] = 0.0;
        }
    }
    return refs;
}

ReferenceData sim_reference_data(const ExperimentPlan& plan, const std::vector<Unitary>& unitaries,
                                 int workers) {
    const int n = plan.n;
    const int m = plan.resolved_m();
    const std::vector<UAccum> accums =
        run_sampling(plan, unitaries, rng::kReference, 0, workers, /*ideal_override=*/true);

    ReferenceData refs;
    for (int sector = 0; sector <= n; ++sector) {
        std::vector<stats::CorrelatorSummary> sums;
        std::vector<double> bunch;
        for (const UAccum& acc : accums) {
            const SectorAccum& st = acc.sectors[sector];
            if (st.count == 0) continue;
            sums.push_back(stats::summarize(correlators_from_counts(st, m, sector)));
            bunch.push_back(static_cast<double>(st.bunched) / static_cast<double>(st.count));
        }
        const int n_eff = n - sector;
        const int resamples = default_config().stat.bootstrap_resamples;
        rng::Stream boot = rng::Stream::derived(plan.seed, {rng::kBootstrap, 9, (std::uint64_t)(sector + 1)});
        if (!sums.empty() && n_eff >= 2) {
            refs.moments[sector] = stats::moments_from_summaries(sums, n_eff, m);
            refs.moment_errors[sector] = bootstrap_se_moments(sums, n_eff, m, resamples, boot);
        }
        if (!bunch.empty() && n_eff >= 1) {
            refs.bunching[sector] = mean_of(bunch);
            refs.bunching_errors[sector] = bootstrap_se_scalar(bunch, resamples, boot);
        }
    }
    return refs;
}

double quad_sum(double a, double b) { return std::sqrt(a * a + b * b); }

ReferenceData resolve_references(RefMode mode, const ExperimentPlan& plan,
                                 const std::vector<Unitary>* unitaries, int workers) {
    switch (mode) {
        case RefMode::ClosedForm: return closed_form_references(plan, false);
        case RefMode::ClosedFormGamma: return closed_form_references(plan, true);
        case RefMode::Oracle:
            if (!unitaries) throw InsufficientData("oracle references need the unitaries");
            return oracle_reference_data(plan, *unitaries, workers);
        case RefMode::IdealSim:
            if (!unitaries) throw InsufficientData("simulation references need the unitaries");
            return sim_reference_data(plan, *unitaries, workers);
    }
    throw InvalidDimension("unhandled reference mode");
}

CampaignResult finish_campaign(const ExperimentPlan& plan, const std::vector<Unitary>* unitaries,
                               const std::vector<UAccum>& accums, bool simulated, int workers,
                               const ReferenceData* shared_moment_refs = nullptr,
                               const ReferenceData* shared_bunching_refs = nullptr) {
    const int n = plan.n;
    const int m = plan.resolved_m();
    const Config& cfg = default_config();

    CampaignResult result;
    result.plan = plan;

    // Loss estimate from click sectors.
    std::vector<std::vector<std::uint64_t>> hists;
    for (const UAccum& acc : accums) {
        std::vector<std::uint64_t> h(n + 1, 0);
        for (int s = 0; s <= n; ++s) h[s] = acc.sectors[s].count;
        hists.push_back(std::move(h));
    }
    stats::LossEstimate loss;
    if (plan.fit_window) {
        // The records only cover part of the sector range: recover the loss
        // rate by the window-restricted binomial fit, per unitary.
        for (const auto& h : hists) {
            loss.per_unitary.push_back(stats::estimate_loss_windowed(h, n, *plan.fit_window));
        }
        double pooled = 0.0;
        for (double v : loss.per_unitary) pooled += v;
        loss.pooled = pooled / static_cast<double>(loss.per_unitary.size());
    } else {
        loss = stats::estimate_loss_from_histograms(hists, n);
    }
    result.lambda = loss.pooled;
    result.lambda_per_unitary = loss.per_unitary;
    {
        rng::Stream boot = rng::Stream::derived(plan.seed, {rng::kBootstrap, 0, 0});
        result.lambda_stat_error =
            bootstrap_se_scalar(loss.per_unitary, cfg.stat.bootstrap_resamples, boot);
    }
    result.window = stats::loss_window(result.lambda, n, plan.confidence);

    result.sector_counts.assign(n + 1, 0);
    for (const UAccum& acc : accums) {
        for (int s = 0; s <= n; ++s) result.sector_counts[s] += acc.sectors[s].count;
    }

    if (simulated) {
        SimulationInfo info;
        std::uint64_t collisions = 0, records = 0;
        double lost_acc = 0.0;
        for (const UAccum& acc : accums) {
            collisions += acc.collisions;
            records += acc.records;
            for (int l = 0; l <= n; ++l) lost_acc += static_cast<double>(l) * acc.true_loss_hist[l];
        }
        info.collision_fraction = records ? static_cast<double>(collisions) / records : 0.0;
        info.true_loss_mean = records ? lost_acc / (static_cast<double>(records) * n) : 0.0;
        result.simulation = info;
    }

    // References (shared ones come precomputed from compare_species).
    ReferenceData mom_refs, bun_refs;
    if (shared_moment_refs) {
        mom_refs = *shared_moment_refs;
    } else {
        mom_refs = resolve_references(plan.refs.moments, plan, unitaries, workers);
    }
    if (shared_bunching_refs) {
        bun_refs = *shared_bunching_refs;
    } else if (plan.refs.bunching == plan.refs.moments) {
        bun_refs = mom_refs;
    } else {
        bun_refs = resolve_references(plan.refs.bunching, plan, unitaries, workers);
    }

    // t_loss verdict.
    result.verdicts.push_back(
        stats::test_loss(result.lambda, n, plan.thresholds, result.lambda_stat_error));

    // Sector loop.
    const int moment_hi = std::min(n - 2, result.window.hi);
    const int bunch_hi = std::min(n - 1, result.window.hi);
    for (int sector = std::max(0, result.window.lo); sector <= std::max(moment_hi, bunch_hi);
         ++sector) {
        const bool want_moments = sector <= moment_hi;
        const bool want_bunching = sector <= bunch_hi;
        if (!want_moments && !want_bunching) continue;
        const int n_eff = n - sector;

        SectorOutcome out;
        out.sector = sector;
        out.has_moments = want_moments;
        out.has_bunching = want_bunching;

        std::vector<stats::CorrelatorSummary> sums;
        std::vector<double> bunch;
        for (const UAccum& acc : accums) {
            const SectorAccum& st = acc.sectors[sector];
            if (st.count == 0) continue;
            out.records += st.count;
            ++out.unitaries_with_data;
            if (want_moments) sums.push_back(stats::summarize(correlators_from_counts(st, m, sector)));
            bunch.push_back(static_cast<double>(st.bunched) / static_cast<double>(st.count));
        }

        const bool missing = out.unitaries_with_data == 0;
        const std::string missing_note = "no records in sector " + std::to_string(sector);

        if (want_moments) {
            stats::MomentTriple measured, se;
            bool have = false;
            if (!missing) {
                measured = stats::moments_from_summaries(sums, n_eff, m);
                rng::Stream boot =
                    rng::Stream::derived(plan.seed, {rng::kBootstrap, 1, (std::uint64_t)(sector + 1)});
                se = bootstrap_se_moments(sums, n_eff, m, cfg.stat.bootstrap_resamples, boot);
                have = true;
            }
            auto ref_it = mom_refs.moments.find(sector);
            stats::MomentTriple reference =
                ref_it != mom_refs.moments.end() ? ref_it->second : stats::MomentTriple{};
            const bool have_ref = ref_it != mom_refs.moments.end();
            stats::MomentTriple ref_err = have_ref ? mom_refs.moment_errors[sector]
                                                   : stats::MomentTriple{0.0, 0.0, 0.0};
            stats::MomentTriple total_err;
            total_err.nm = quad_sum(se.nm, ref_err.nm);
            if (se.cv || ref_err.cv) total_err.cv = quad_sum(se.cv.value_or(0.0), ref_err.cv.value_or(0.0));
            if (se.s || ref_err.s) total_err.s = quad_sum(se.s.value_or(0.0), ref_err.s.value_or(0.0));

            std::vector<stats::TestVerdict> verdicts;
            if (have && have_ref) {
                verdicts = stats::test_moments(measured, reference, total_err, n, plan.thresholds,
                                               sector);
            } else {
                for (stats::TestId id : {stats::TestId::D1, stats::TestId::D2, stats::TestId::D3}) {
                    stats::TestVerdict v;
                    v.id = id;
                    v.sector = sector;
                    v.inconclusive = true;
                    v.note = missing ? missing_note : "no reference available";
                    verdicts.push_back(v);
                }
            }
            out.measured = measured;
            out.reference = reference;
            out.stat_error = total_err;
            for (auto& v : verdicts) result.verdicts.push_back(v);
        }

        if (want_bunching) {
            auto ref_it = bun_refs.bunching.find(sector);
            const bool have_ref = ref_it != bun_refs.bunching.end();
            if (!missing && have_ref) {
                out.bunching_measured = mean_of(bunch);
                rng::Stream boot =
                    rng::Stream::derived(plan.seed, {rng::kBootstrap, 2, (std::uint64_t)(sector + 1)});
                const double se = bootstrap_se_scalar(bunch, cfg.stat.bootstrap_resamples, boot);
                const double ref_err = bun_refs.bunching_errors.count(sector)
                                           ? bun_refs.bunching_errors[sector]
                                           : 0.0;
                out.bunching_reference = ref_it->second;
                out.bunching_stat_error = quad_sum(se, ref_err);
                result.verdicts.push_back(stats::test_bunching(out.bunching_measured,
                                                               out.bunching_reference,
                                                               out.bunching_stat_error, n,
                                                               plan.thresholds, sector));
            } else {
                stats::TestVerdict v;
                v.id = stats::TestId::D4;
                v.sector = sector;
                v.inconclusive = true;
                v.note = missing ? missing_note : "no reference available";
                result.verdicts.push_back(v);
            }
        }

        result.sectors.push_back(std::move(out));
    }
    return result;
}

}  // namespace

CampaignResult run_campaign(const ExperimentPlan& plan, int workers) {
    plan.validate();
    const std::vector<Unitary> unitaries = draw_unitaries(plan, workers);
    const std::vector<UAccum> accums =
        run_sampling(plan, unitaries, rng::kRecord,
                     static_cast<std::uint64_t>(plan.source.species), workers);
    return finish_campaign(plan, &unitaries, accums, /*simulated=*/true, workers);
}

void for_each_simulated_block(
    const ExperimentPlan& plan,
    const std::function<void(int, const Unitary&, const std::vector<ClickRecord>&)>& sink) {
    plan.validate();
    const int n = plan.n;
    const int m = plan.resolved_m();
    const std::vector<Unitary> unitaries = draw_unitaries(plan, 1);
    const std::uint64_t species_tag = static_cast<std::uint64_t>(plan.source.species);
    for (std::size_t k = 0; k < unitaries.size(); ++k) {
        const Unitary& u = unitaries[k];
        std::optional<IdealSampler> cache;
        if (plan.source.species == Species::Ideal) {
            std::vector<int> modes(n);
            for (int i = 0; i < n; ++i) modes[i] = i;
            cache.emplace(u, std::move(modes));
        }
        std::vector<ClickRecord> block;
        block.reserve(plan.kprime);
        DrawnRecord rec;
        for (std::uint64_t i = 0; i < plan.kprime; ++i) {
            rng::Stream rec_stream = rng::Stream::derived(
                plan.seed, {rng::kRecord, species_tag, (std::uint64_t)k, i});
            draw_click_record(plan, u, cache ? &*cache : nullptr, rec_stream, rec);
            ClickRecord out;
            out.unitary_index = static_cast<int>(k);
            out.pattern = FockPattern::from_modes(rec.clicked, m);
            out.lost = n - static_cast<int>(rec.clicked.size());
            block.push_back(std::move(out));
        }
        sink(static_cast<int>(k), u, block);
    }
}

CampaignResult run_campaign_on(const ExperimentPlan& plan,
                               const std::vector<std::vector<ClickRecord>>& records_by_unitary,
                               const std::vector<Unitary>* unitaries, int workers) {
    const int n = plan.n;
    const int m = plan.resolved_m();
    const int K = plan.resolved_bunching_modes();
    if (records_by_unitary.empty()) throw InsufficientData("no record batches");

    std::vector<UAccum> accums(records_by_unitary.size());
    for (std::size_t k = 0; k < records_by_unitary.size(); ++k) {
        UAccum& acc = accums[k];
        acc.sectors.resize(n + 1);
        acc.true_loss_hist.assign(n + 1, 0);
        for (const ClickRecord& rec : records_by_unitary[k]) {
            if (rec.pattern.modes() != m) throw ShapeError("record mode count does not match plan");
            if (rec.lost < 0 || rec.lost > n) throw ShapeError("record loss outside [0, n]");
            const std::vector<int> clicked = rec.pattern.support();
            ++acc.true_loss_hist[rec.lost];
            accumulate_clicks(acc, clicked, n, m, K);
        }
    }
    return finish_campaign(plan, unitaries, accums, /*simulated=*/false, workers);
}

bool CampaignResult::all_pass() const {
    // Inconclusive verdicts (insufficient or border-line statistics) do not
    // block a pass, but a campaign must have at least one conclusive pass.
    bool conclusive_pass = false;
    for (const auto& v : verdicts) {
        if (v.inconclusive) continue;
        if (!v.pass) return false;
        conclusive_pass = true;
    }
    return conclusive_pass;
}

const stats::TestVerdict* CampaignResult::find(stats::TestId id, int sector) const {
    for (const auto& v : verdicts) {
        if (v.id == id && v.sector == sector) return &v;
    }
    return nullptr;
}

PqfReport evaluate_pqf(const std::vector<CampaignResult>& results) {
    PqfReport report;
    if (!results.empty()) report.thresholds = results.front().plan.thresholds;
    for (const CampaignResult& r : results) {
        PqfEntry entry;
        entry.n = r.plan.n;
        entry.all_pass = r.all_pass();
        for (const auto& v : r.verdicts) {
            std::string label = stats::test_name(v.id);
            if (v.sector >= 0) label += "@l=" + std::to_string(v.sector);
            if (v.inconclusive) {
                entry.inconclusive.push_back(std::move(label));
            } else if (!v.pass) {
                entry.failures.push_back(std::move(label));
            }
        }
        report.entries.push_back(std::move(entry));
    }
    for (const PqfEntry& e : report.entries) {
        if (e.all_pass && (!report.pqf || e.n > *report.pqf)) report.pqf = e.n;
    }
    if (report.pqf) {
        for (const PqfEntry& e : report.entries) {
            if (!e.all_pass && e.n < *report.pqf) report.non_monotone = true;
        }
    }
    return report;
}

std::string cell_name(CellOutcome c) {
    switch (c) {
        case CellOutcome::Pass: return "pass";
        case CellOutcome::Fail: return "fail";
        case CellOutcome::Inconclusive: return "inconclusive";
    }
    return "?";
}

SpeciesMatrix compare_species(const ExperimentPlan& base, const std::vector<Species>& list,
                              int workers) {
    base.validate();
    SpeciesMatrix matrix;
    matrix.species = list;

    // The unitaries and the ideal reference values depend only on the plan
    // geometry and seed, so compute them once and share them across species.
    const std::vector<Unitary> unitaries = draw_unitaries(base, workers);
    const ReferenceData mom_refs =
        resolve_references(base.refs.moments, base, &unitaries, workers);
    const ReferenceData bun_refs =
        base.refs.bunching == base.refs.moments
            ? mom_refs
            : resolve_references(base.refs.bunching, base, &unitaries, workers);

    for (Species s : list) {
        ExperimentPlan plan = base;
        plan.source.species = s;
        const std::vector<UAccum> accums = run_sampling(
            plan, unitaries, rng::kRecord, static_cast<std::uint64_t>(s), workers);
        CampaignResult result =
            finish_campaign(plan, &unitaries, accums, /*simulated=*/true, workers, &mom_refs,
                            &bun_refs);
        std::vector<CellOutcome> row;
        for (stats::TestId id : {stats::TestId::Loss, stats::TestId::D1, stats::TestId::D2,
                                 stats::TestId::D3, stats::TestId::D4}) {
            // A conclusive failure in any sector fails the test; otherwise the
            // test passes when at least one sector supports it conclusively.
            bool any_fail = false, any_conclusive = false;
            for (const auto& v : result.verdicts) {
                if (v.id != id || v.inconclusive) continue;
                any_conclusive = true;
                if (!v.pass) any_fail = true;
            }
            if (any_fail) {
                row.push_back(CellOutcome::Fail);
            } else if (any_conclusive) {
                row.push_back(CellOutcome::Pass);
            } else {
                row.push_back(CellOutcome::Inconclusive);
            }
        }
        matrix.outcome.push_back(std::move(row));
        matrix.campaigns.push_back(std::move(result));
    }
    return matrix;
}

OracleReferences oracle_references(const ExperimentPlan& plan, int workers) {
    plan.validate();
    const std::vector<Unitary> unitaries = draw_unitaries(plan, workers);
    const ReferenceData data = oracle_reference_data(plan, unitaries, workers);
    OracleReferences refs;
    refs.moments = data.moments;
    refs.bunching = data.bunching;
    return refs;
}

}  // namespace pqf::engine
