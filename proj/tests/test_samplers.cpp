#include <doctest.h>

#include <map>

#include "pqf/errors.hpp"
#include "pqf/samplers.hpp"
#include "pqf/stats.hpp"
#include "test_support.hpp"

using namespace pqf;

TEST_CASE("apply_loss endpoints and binomial rate") {
    rng::Stream rng(1);
    CHECK(apply_loss(5, 0.0, rng).size() == 5);
    CHECK(apply_loss(5, 1.0, rng).empty());

    // P(no photon lost) for lambda = 0.1, n = 4 is 0.9^4 = 0.6561.
    int none_lost = 0;
    const int reps = 50000;
    for (int i = 0; i < reps; ++i) {
        if (apply_loss(4, 0.1, rng).size() == 4) ++none_lost;
    }
    CHECK(static_cast<double>(none_lost) / reps == doctest::Approx(0.6561).epsilon(0.02));
}

TEST_CASE("collapse_internal endpoints and independence") {
    rng::Stream rng(2);
    const std::vector<int> survivors{0, 1, 2};
    CHECK(collapse_internal(survivors, 1.0, rng).interfering.size() == 3);
    CHECK(collapse_internal(survivors, 0.0, rng).singletons.size() == 3);

    int both = 0;
    const int reps = 40000;
    for (int i = 0; i < reps; ++i) {
        if (collapse_internal({0, 1}, 0.5, rng).interfering.size() == 2) ++both;
    }
    CHECK(static_cast<double>(both) / reps == doctest::Approx(0.25).epsilon(0.03));
}

TEST_CASE("ideal sampling through the identity reproduces the input") {
    ComplexMatrix id = ComplexMatrix::Identity(5, 5);
    const Unitary u(std::move(id));
    rng::Stream rng(3);
    for (int rep = 0; rep < 20; ++rep) {
        const FockPattern out = sample_ideal_output(u, {1, 3}, rng);
        CHECK(out == FockPattern({0, 1, 0, 1, 0}));
    }
}

TEST_CASE("single-photon sampling follows the column marginal") {
    rng::Stream rng(4);
    const Unitary u = haar_random_unitary(6, rng);
    std::vector<int> counts(6, 0);
    const int reps = 60000;
    for (int i = 0; i < reps; ++i) {
        const FockPattern out = sample_ideal_output(u, {0}, rng);
        for (int j = 0; j < 6; ++j) {
            if (out.occupations[j] == 1) ++counts[j];
        }
    }
    for (int j = 0; j < 6; ++j) {
        CHECK(static_cast<double>(counts[j]) / reps ==
              doctest::Approx(std::norm(u(j, 0))).epsilon(0.08));
    }
}

TEST_CASE("two photons on a balanced beam splitter never anti-bunch") {
    const Unitary bs = testing::balanced_beam_splitter();
    rng::Stream rng(5);
    for (int i = 0; i < 5000; ++i) {
        const FockPattern out = sample_ideal_output(bs, {0, 1}, rng);
        CHECK(out.occupations[0] != 1); // (1,1) has zero amplitude
    }
}

TEST_CASE("noisy sampler endpoints") {
    rng::Stream rng(6);
    const Unitary u = haar_random_unitary(6, rng);
    const ClickRecord all_lost = sample_noisy_output(u, 3, NoiseParams(1.0, 1.0), rng);
    CHECK(all_lost.lost == 3);
    CHECK(all_lost.pattern.total() == 0);
    CHECK_THROWS_AS(sample_ideal_output(u, {0, 1, 2, 3, 4, 5, 0}, rng), InvalidDimension);
    CHECK_THROWS_AS(sample_noisy_output(u, 7, NoiseParams(0.0, 1.0), rng), InvalidDimension);
}

TEST_CASE("HOM dip frequency at partial distinguishability") {
    // P(1,1) = (1 - x^2) / 2 for two photons with overlap x; 0.095 at x = 0.9.
    const Unitary bs = testing::balanced_beam_splitter();
    rng::Stream rng(7);
    int antibunched = 0;
    const int reps = 10000;
    for (int i = 0; i < reps; ++i) {
        const ClickRecord rec = sample_noisy_output(bs, 2, NoiseParams(0.0, 0.9), rng);
        if (rec.pattern == FockPattern({1, 1})) ++antibunched;
    }
    CHECK(static_cast<double>(antibunched) / reps == doctest::Approx(0.095).epsilon(0.11));
}

TEST_CASE("distinguishable particles: identity input and coin statistics") {
    ComplexMatrix id = ComplexMatrix::Identity(4, 4);
    const Unitary u(std::move(id));
    rng::Stream rng(8);
    CHECK(sample_distinguishable(u, 3, rng) == FockPattern({1, 1, 1, 0}));

    const Unitary bs = testing::balanced_beam_splitter();
    int antibunched = 0;
    const int reps = 20000;
    for (int i = 0; i < reps; ++i) {
        if (sample_distinguishable(bs, 2, rng) == FockPattern({1, 1})) ++antibunched;
    }
    CHECK(static_cast<double>(antibunched) / reps == doctest::Approx(0.5).epsilon(0.03));
}

TEST_CASE("mean-field sampler marginals and bunching enhancement") {
    rng::Stream rng(9);
    const Unitary u = haar_random_unitary(7, rng);
    const int n = 3;
    const int reps = 60000;
    std::vector<double> freq(7, 0.0);
    for (int i = 0; i < reps; ++i) {
        const FockPattern out = sample_meanfield(u, n, rng);
        for (int j = 0; j < 7; ++j) freq[j] += out.occupations[j];
    }
    // Single-mode occupation matches the distinguishable marginal sum_k |U_jk|^2.
    for (int j = 0; j < 7; ++j) {
        double expect = 0.0;
        for (int k = 0; k < n; ++k) expect += std::norm(u(j, k));
        CHECK(freq[j] / reps == doctest::Approx(expect).epsilon(0.08));
    }

    // On a balanced beam splitter the mean-field law bunches more often than
    // independent classical particles (probability 1/2).
    const Unitary bs = testing::balanced_beam_splitter();
    int bunched = 0;
    for (int i = 0; i < reps; ++i) {
        const FockPattern out = sample_meanfield(bs, 2, rng);
        if (out.occupations[0] == 2 || out.occupations[1] == 2) ++bunched;
    }
    CHECK(static_cast<double>(bunched) / reps > 0.55);
}

TEST_CASE("uniform collision-free sampler") {
    rng::Stream rng(10);
    CHECK(sample_uniform_cf(3, 3, rng) == FockPattern({1, 1, 1}));

    std::map<std::uint64_t, int> counts;
    const int reps = 30000;
    for (int i = 0; i < reps; ++i) {
        const FockPattern out = sample_uniform_cf(6, 2, rng);
        counts[comb::multiset_rank(out.mode_list())] += 1;
    }
    CHECK(counts.size() == 15);
    for (const auto& [rank, count] : counts) {
        CHECK(static_cast<double>(count) / reps == doctest::Approx(1.0 / 15).epsilon(0.12));
    }
}

TEST_CASE("adversarial mixture sampler endpoints and weight") {
    rng::Stream rng(11);
    const int m = 6, n = 2, K = 5;
    for (int i = 0; i < 2000; ++i) {
        const FockPattern head = sample_dad(m, n, K, 1.0, rng);
        CHECK(head.occupations[5] == 0);
        const FockPattern tail = sample_dad(m, n, K, 0.0, rng);
        CHECK(tail.occupations[5] == 1);
    }
    int in_head = 0;
    const int reps = 20000;
    for (int i = 0; i < reps; ++i) {
        const FockPattern out = sample_dad(m, n, K, 0.8, rng);
        if (out.occupations[5] == 0) ++in_head;
    }
    CHECK(static_cast<double>(in_head) / reps == doctest::Approx(0.8).epsilon(0.02));
    CHECK_THROWS_AS(sample_dad(m, n, 1, 0.5, rng), InvalidDimension);
    CHECK_THROWS_AS(sample_dad(m, n, m, 0.5, rng), InvalidDimension);
}

TEST_CASE("exact ideal distribution matches per-pattern probabilities") {
    rng::Stream rng(12);
    const Unitary u = haar_random_unitary(5, rng);
    const std::vector<int> input{0, 1, 2};
    const PatternDistribution dist = exact_ideal_distribution(u, input);
    CHECK(dist.sum() == doctest::Approx(1.0).epsilon(1e-9));
    const FockPattern t = FockPattern::from_modes(input, 5);
    dist.for_each([&](std::span<const int> modes, double p) {
        const FockPattern s = FockPattern::from_modes(modes, 5);
        CHECK(p == doctest::Approx(ideal_probability(u, t, s)).epsilon(1e-10));
    });
}

TEST_CASE("exact noisy distribution: endpoints, normalization, HOM") {
    const Unitary bs = testing::balanced_beam_splitter();
    const PatternDistribution hom = exact_noisy_distribution(bs, 2, NoiseParams(0.0, 0.9), 0);
    CHECK(hom.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(hom.at(FockPattern({1, 1})) == doctest::Approx(0.095).epsilon(1e-12));

    rng::Stream rng(13);
    const Unitary u = haar_random_unitary(6, rng);
    for (double loss : {0.0, 0.2}) {
        for (double x : {1.0, 0.9, 0.0}) {
            for (int lost = 0; lost <= 3; ++lost) {
                const PatternDistribution d =
                    exact_noisy_distribution(u, 3, NoiseParams(loss, x), lost);
                CHECK(d.sum() == doctest::Approx(1.0).epsilon(1e-9));
            }
        }
    }

    // x = 1, no loss reduces to the ideal distribution.
    const PatternDistribution ideal = exact_ideal_distribution(u, {0, 1, 2});
    const PatternDistribution noisy = exact_noisy_distribution(u, 3, NoiseParams(0.0, 1.0), 0);
    CHECK(PatternDistribution::tvd(ideal, noisy) <= 1e-12);
}

TEST_CASE("exact noisy distribution refuses oversized instances") {
    rng::Stream rng(14);
    const Unitary u = haar_random_unitary(40, rng);
    Config cfg;
    cfg.budget.oracle_work = 1000;
    CHECK_THROWS_AS(exact_noisy_distribution(u, 6, NoiseParams(0.0, 0.9), 0, cfg), BudgetExceeded);
}

TEST_CASE("sampler matches the exact oracle in every loss sector") {
    rng::Stream rng(15);
    const int m = 8, n = 3;
    const Unitary u = haar_random_unitary(m, rng);
    for (const auto& [loss, x] : std::vector<std::pair<double, double>>{
             {0.0, 1.0}, {0.2, 0.9}, {0.0, 0.0}}) {
        const NoiseParams noise(loss, x);
        std::map<int, PatternDistribution> empirical;
        std::map<int, std::size_t> counts;
        const std::size_t reps = 100000;
        for (std::size_t i = 0; i < reps; ++i) {
            const ClickRecord rec = sample_noisy_output(u, n, noise, rng);
            auto [it, fresh] = empirical.try_emplace(rec.lost, m, n - rec.lost);
            it->second.at(rec.pattern) += 1.0;
            counts[rec.lost] += 1;
        }
        for (auto& [lost, dist] : empirical) {
            if (counts[lost] < 500) continue; // too few samples for a TVD check
            for (double& p : dist.p) p /= static_cast<double>(counts[lost]);
            const PatternDistribution exact = exact_noisy_distribution(u, n, noise, lost);
            CHECK(PatternDistribution::tvd(dist, exact) <= 0.02);
        }
    }
}

TEST_CASE("degeneration: noisy sampler reduces to ideal and distinguishable") {
    rng::Stream rng(16);
    const int m = 8, n = 3;
    const Unitary u = haar_random_unitary(m, rng);
    const std::size_t reps = 100000;

    const PatternDistribution ideal_emp = testing::empirical_distribution(
        m, n, reps, [&](std::size_t) { return sample_ideal_output(u, {0, 1, 2}, rng); });
    const PatternDistribution noisy_ideal_emp =
        testing::empirical_distribution(m, n, reps, [&](std::size_t) {
            return sample_noisy_output(u, n, NoiseParams(0.0, 1.0), rng).pattern;
        });
    CHECK(PatternDistribution::tvd(ideal_emp, noisy_ideal_emp) <= 0.02);

    const PatternDistribution dist_emp = testing::empirical_distribution(
        m, n, reps, [&](std::size_t) { return sample_distinguishable(u, n, rng); });
    const PatternDistribution noisy_dist_emp =
        testing::empirical_distribution(m, n, reps, [&](std::size_t) {
            return sample_noisy_output(u, n, NoiseParams(0.0, 0.0), rng).pattern;
        });
    CHECK(PatternDistribution::tvd(dist_emp, noisy_dist_emp) <= 0.02);
}

TEST_CASE("detected photon count is binomial") {
    rng::Stream rng(17);
    const int m = 10, n = 4;
    const double loss = 0.3;
    const Unitary u = haar_random_unitary(m, rng);
    std::vector<std::uint64_t> hist(n + 1, 0);
    const std::size_t reps = 100000;
    for (std::size_t i = 0; i < reps; ++i) {
        const ClickRecord rec = sample_noisy_output(u, n, NoiseParams(loss, 0.9), rng);
        ++hist[rec.lost];
        CHECK(rec.pattern.total() == n - rec.lost);
    }
    const auto gof = stats::binomial_gof(hist, n, loss);
    CHECK(gof.p_value > 0.01);
}

TEST_CASE("cached enumerated sampler agrees with chain-rule sampling") {
    rng::Stream rng(18);
    const int m = 6, n = 2;
    const Unitary u = haar_random_unitary(m, rng);
    const IdealSampler cached(u, {0, 1});
    CHECK(cached.enumerated());

    Config chain_cfg;
    chain_cfg.budget.enumeration_patterns = 0; // force the chain-rule path
    const IdealSampler chained(u, {0, 1}, chain_cfg);
    CHECK(!chained.enumerated());

    const std::size_t reps = 60000;
    const PatternDistribution a = testing::empirical_distribution(
        m, n, reps, [&](std::size_t) { return cached.draw(rng); });
    const PatternDistribution b = testing::empirical_distribution(
        m, n, reps, [&](std::size_t) { return chained.draw(rng); });
    const PatternDistribution exact = exact_ideal_distribution(u, {0, 1});
    CHECK(PatternDistribution::tvd(a, exact) <= 0.02);
    CHECK(PatternDistribution::tvd(b, exact) <= 0.02);
}

TEST_CASE("click sector statistics of a tiny distribution") {
    // Balanced beam splitter, two ideal photons: patterns (2,0) and (0,2) with
    // probability 1/2 each. Both flatten to single-click records in sector 1.
    const Unitary bs = testing::balanced_beam_splitter();
    const PatternDistribution d = exact_ideal_distribution(bs, {0, 1});
    const auto sectors = click_sector_stats(d, 2, 1);
    REQUIRE(sectors.count(1) == 1);
    const auto& st = sectors.at(1);
    CHECK(st.mass == doctest::Approx(1.0));
    CHECK(st.click[0] == doctest::Approx(0.5));
    CHECK(st.click[1] == doctest::Approx(0.5));
    CHECK(st.bunched == doctest::Approx(0.5)); // only (2,0) stays within K = 1
    CHECK(sectors.count(0) == 0);

    CHECK(occupancy_bunching(d, 1) == doctest::Approx(0.5));
    CHECK(occupancy_bunching(d, 2) == doctest::Approx(1.0));
}
