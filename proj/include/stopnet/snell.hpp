#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "stopnet/reward.hpp"

namespace stopnet {

// Value process of the stopping problem along one trajectory. Transitions are
// deterministic given the input, so the conditional expectation in the
// backward recursion collapses and the envelope is the running maximum of the
// rewards from the right:
//
//   U_L = Y_L,   U_l = max(Y_l, U_{l+1}).
//
// The optimal rule stops at the first layer where the envelope is attained.
struct SnellPath {
    Vec envelope;       // U_0..U_L
    int stop_index = 0; // tau*, first l with U_l <= Y_l + tie_tol
    double value = 0.0; // U_0
};

// Monte Carlo summary of per-trajectory Snell solutions over a batch.
struct ValueEstimate {
    double mean_value = 0.0;  // sample mean of U_0
    double mean_stop = 0.0;   // sample mean of tau*
    double se_value = 0.0;
    double se_stop = 0.0;
    std::size_t count = 0;
};

// tie_tol absorbs floating-point ties when extracting tau*; ties stop early.
SnellPath snell_backward(const RewardPath& path, double tie_tol = 1e-9);

// Exhaustive scan oracle: (max_l Y_l, smallest argmax). For deterministic
// trajectories every stopping rule reduces to an index choice, so this is the
// exact optimum.
std::pair<double, int> brute_force_optimum(const RewardPath& path);

ValueEstimate estimate_value(const std::vector<Trajectory>& batch, const UtilitySpec& spec,
                             double cost, double tie_tol = 1e-9, int threads = 1);

}  // namespace stopnet
