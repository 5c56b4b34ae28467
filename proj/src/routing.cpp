#include "pqf/routing.hpp"

#include <cmath>

#include "pqf/errors.hpp"

namespace pqf::routing {

ComplexMatrix two_mode_mixer(double theta, double phi) {
    const std::complex<double> i_unit(0.0, 1.0);
    ComplexMatrix b(2, 2);
    b(0, 0) = std::cos(theta);
    b(0, 1) = i_unit * std::exp(-i_unit * phi) * std::sin(theta);
    b(1, 0) = i_unit * std::exp(i_unit * phi) * std::sin(theta);
    b(1, 1) = std::cos(theta);
    return b;
}

Unitary gadget_unitary(int m, int i) {
    if (m < 2) throw InvalidDimension("need at least two modes");
    if (i < 1 || i >= m) throw InvalidDimension("gadget mode index out of range");
    const SwapGadget g{i};
    ComplexMatrix u = ComplexMatrix::Identity(m, m);
    const ComplexMatrix mixer = two_mode_mixer(g.theta, g.phi);
    const std::complex<double> shift = std::exp(std::complex<double>(0.0, g.phase));
    const int a = i - 1, b = i; // 0-based block position
    u(a, a) = shift * mixer(0, 0);
    u(a, b) = shift * mixer(0, 1);
    u(b, a) = shift * mixer(1, 0);
    u(b, b) = shift * mixer(1, 1);
    return Unitary(std::move(u));
}

RoutingPlan plan_routing(const FockPattern& pattern) {
    if (!pattern.collision_free()) throw ShapeError("routing requires a collision-free pattern");
    RoutingPlan plan;
    plan.modes = pattern.modes();
    std::vector<int> occ = pattern.occupations;
    const int photons = pattern.total();
    for (int target = 0; target < photons; ++target) {
        int source = target;
        while (occ[source] == 0) ++source;
        for (int j = source; j > target; --j) {
            plan.gadgets.push_back(SwapGadget{j}); // swaps modes (j, j+1) 1-based
            std::swap(occ[j - 1], occ[j]);
        }
    }
    return plan;
}

Unitary routing_unitary(const RoutingPlan& plan) {
    // Left-to-right product in emission order: the first gadget is applied
    // first to a mode basis vector, so the result maps canonical slot j to the
    // source mode it was routed from.
    ComplexMatrix u = ComplexMatrix::Identity(plan.modes, plan.modes);
    for (const SwapGadget& g : plan.gadgets) {
        u = u * gadget_unitary(plan.modes, g.mode).matrix();
    }
    return Unitary(std::move(u));
}

FockPattern apply_plan(const RoutingPlan& plan, FockPattern pattern) {
    for (const SwapGadget& g : plan.gadgets) {
        std::swap(pattern.occupations[g.mode - 1], pattern.occupations[g.mode]);
    }
    return pattern;
}

}  // namespace pqf::routing
