#include <doctest.h>

#include "pqf/combinatorics.hpp"
#include "pqf/errors.hpp"
#include "pqf/routing.hpp"
#include "pqf/samplers.hpp"
#include "test_support.hpp"

using namespace pqf;
using namespace pqf::routing;

namespace {

bool is_binary_permutation(const ComplexMatrix& u, double tol = 1e-12) {
    const int m = static_cast<int>(u.rows());
    for (int r = 0; r < m; ++r) {
        int ones = 0;
        for (int c = 0; c < m; ++c) {
            const double re = u(r, c).real();
            const double im = u(r, c).imag();
            if (std::abs(im) > tol) return false;
            if (std::abs(re - 1.0) <= tol) {
                ++ones;
            } else if (std::abs(re) > tol) {
                return false;
            }
        }
        if (ones != 1) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("swap gadget is an exact X block") {
    const Unitary x = gadget_unitary(2, 1);
    CHECK(std::abs(x(0, 1) - 1.0) <= 1e-12);
    CHECK(std::abs(x(1, 0) - 1.0) <= 1e-12);
    CHECK(std::abs(x(0, 0)) <= 1e-12);
    CHECK(std::abs(x(1, 1)) <= 1e-12);

    // Applying the gadget twice gives the identity.
    const ComplexMatrix twice = x.matrix() * x.matrix();
    CHECK((twice - ComplexMatrix::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-12);

    CHECK_THROWS_AS(gadget_unitary(4, 0), InvalidDimension);
    CHECK_THROWS_AS(gadget_unitary(4, 4), InvalidDimension);
}

TEST_CASE("mixer without phase shifters leaves the i factors") {
    const ComplexMatrix b = two_mode_mixer(M_PI / 2.0, 0.0);
    CHECK(std::abs(b(0, 1) - std::complex<double>(0.0, 1.0)) <= 1e-12);
    CHECK(std::abs(b(1, 0) - std::complex<double>(0.0, 1.0)) <= 1e-12);
    CHECK(std::abs(b(0, 0)) <= 1e-12);
}

TEST_CASE("routing plans: canonical, single swap, worked example") {
    CHECK(plan_routing(FockPattern({1, 1, 0})).gadgets.empty());

    const RoutingPlan single = plan_routing(FockPattern({0, 1}));
    REQUIRE(single.gadgets.size() == 1);
    CHECK(single.gadgets[0].mode == 1);
    CHECK(is_binary_permutation(routing_unitary(single).matrix()));

    // Three photons two slots away each: 2 + 2 + 2 gadgets.
    const RoutingPlan plan = plan_routing(FockPattern({0, 0, 1, 1, 1}));
    CHECK(plan.gadgets.size() == 6);
    CHECK(apply_plan(plan, FockPattern({0, 0, 1, 1, 1})) == FockPattern({1, 1, 1, 0, 0}));
    const Unitary r = routing_unitary(plan);
    CHECK(is_binary_permutation(r.matrix()));
    // Canonical slots map back to the source modes 2, 3, 4.
    CHECK(std::abs(r(2, 0) - 1.0) <= 1e-12);
    CHECK(std::abs(r(3, 1) - 1.0) <= 1e-12);
    CHECK(std::abs(r(4, 2) - 1.0) <= 1e-12);

    CHECK_THROWS_AS(plan_routing(FockPattern({2, 0})), ShapeError);
}

TEST_CASE("routing is exhaustive over collision-free patterns up to m = 6") {
    for (int m = 2; m <= 6; ++m) {
        for (int k = 0; k <= m; ++k) {
            comb::for_each_combination(m, k, [&](std::span<const int> modes) {
                FockPattern pattern = FockPattern::zeros(m);
                for (int mode : modes) pattern.occupations[mode] = 1;
                const RoutingPlan plan = plan_routing(pattern);
                CHECK(plan.gadgets.size() <= static_cast<std::size_t>(k * (m - 1)));

                FockPattern canonical = FockPattern::zeros(m);
                for (int i = 0; i < k; ++i) canonical.occupations[i] = 1;
                CHECK(apply_plan(plan, pattern) == canonical);

                const Unitary r = routing_unitary(plan);
                CHECK(is_binary_permutation(r.matrix()));
                for (int slot = 0; slot < k; ++slot) {
                    CHECK(std::abs(r(modes[slot], slot) - 1.0) <= 1e-12);
                }
            });
        }
    }
}

TEST_CASE("routing leaves the ideal distribution invariant") {
    rng::Stream rng(31);
    const int m = 5, n = 2;
    for (int rep = 0; rep < 2; ++rep) {
        const Unitary u = haar_random_unitary(m, rng);
        const FockPattern pattern({0, 1, 0, 0, 1});
        const RoutingPlan plan = plan_routing(pattern);
        const Unitary route = routing_unitary(plan);
        const Unitary composed(u.matrix() * route.matrix());

        const PatternDistribution direct = exact_ideal_distribution(u, pattern.support());
        std::vector<int> canonical(n);
        for (int i = 0; i < n; ++i) canonical[i] = i;
        const PatternDistribution routed = exact_ideal_distribution(composed, canonical);
        CHECK(PatternDistribution::tvd(direct, routed) <= 1e-9);
    }
}
