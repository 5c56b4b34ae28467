#pragma once

#include <vector>

#include "pqf/linalg.hpp"

namespace pqf::routing {

// Adjacent-mode swap built from a two-mode mixer at theta = pi/2, phi = 0
// followed by a -pi/2 phase shifter on each output. The composite acts as an
// exact X on the mode pair. `mode` is the 1-based lower mode index.
struct SwapGadget {
    int mode = 1;
    double theta = M_PI / 2.0;
    double phi = 0.0;
    double phase = -M_PI / 2.0;
};

// Ordered gadget list routing a collision-free pattern onto the canonical
// pattern (photons in the first k modes). Gadgets are listed in the order they
// act on the pattern; as matrices they compose left-to-right on mode basis
// vectors, i.e. routing_unitary(plan) * e_j = e_{source mode of target slot j}.
struct RoutingPlan {
    int modes = 0;
    std::vector<SwapGadget> gadgets;
};

// General two-mode transformation on creation operators:
// [[cos(theta), i e^{-i phi} sin(theta)], [i e^{i phi} sin(theta), cos(theta)]].
ComplexMatrix two_mode_mixer(double theta, double phi);

// The m x m swap gadget on modes (i, i+1), 1-based i in [1, m-1]: mixer plus
// output phase shifters, identity elsewhere.
Unitary gadget_unitary(int m, int i);

// Greedy routing: for each target slot, pull the nearest photon at or above it
// down through adjacent swaps.
RoutingPlan plan_routing(const FockPattern& pattern);

// Product of the plan's gadget unitaries (left-to-right composition).
Unitary routing_unitary(const RoutingPlan& plan);

// Applies the swaps to an occupation pattern, in plan order.
FockPattern apply_plan(const RoutingPlan& plan, FockPattern pattern);

}  // namespace pqf::routing
