#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "stopnet/reward.hpp"

namespace stopnet {

// Per-layer sample means of ||f_l|| and ||f_l||^2 over a batch.
struct ResidualNormProfile {
    Vec mean_norm;
    Vec mean_sq_norm;
};

// Per-layer mean one-step utility gain g(h_{l+1}) - g(h_l), with standard
// errors for the Monte Carlo slack used by the drift check.
struct UtilityDriftProfile {
    Vec mean_drift;
    Vec se_drift;
};

// Everything needed to evaluate the negative-drift condition and the
// finite-depth bound on a concrete batch:
//   condition: c > K_g_hat * delta, with delta the worst mean residual norm
//   beyond layer L_0;
//   bound: E[tau*] <= (g_max - mean g(h_{L0})) / c + L_0.
struct DriftReport {
    Vec mean_residual_norm;
    Vec mean_residual_sq_norm;
    Vec mean_drift;
    Vec se_drift;
    double k_g_hat = 0.0;    // empirical max-ratio estimate; lower bound
    double k_g_upper = 0.0;  // analytic head-norm bound; upper bound
    double delta = 0.0;
    int l0 = 0;
    double g_max = 0.0;
    double g_min = 0.0;
    double mean_g_l0 = 0.0;
    double cost = 0.0;
    bool condition_holds = false;
    // True when every mean drift at l >= L_0 stays below c + 3*SE. Only
    // meaningful when condition_holds.
    bool drift_below_cost = false;
    double tau_bound = 0.0;
};

ResidualNormProfile residual_norm_profile(const std::vector<Trajectory>& batch, int threads = 1);

UtilityDriftProfile utility_drift_profile(const std::vector<Trajectory>& batch,
                                          const UtilitySpec& spec, int threads = 1);

// Max over pairs of |g(a) - g(b)| / ||a - b||. A lower bound on the true
// Lipschitz constant over the visited region; pairs with a == b are skipped.
double estimate_lipschitz(const UtilitySpec& spec,
                          const std::vector<std::pair<StateVec, StateVec>>& pairs);

// All consecutive (h_l, h_{l+1}) pairs of a batch, the directions that matter
// for the one-step drift chain.
std::vector<std::pair<StateVec, StateVec>> trajectory_step_pairs(
    const std::vector<Trajectory>& batch);

// Analytic Lipschitz upper bound for g through the shared head: operator norm
// of the head weights times 1 (softmax-then-max is 1-Lipschitz), times sqrt(2)
// for the log-softmax route of neg-cross-entropy.
double head_lipschitz_upper(const UtilitySpec& spec);

// Smallest l whose mean residual norm falls below `fraction` of the layer-0
// value; L-1 if none does.
int select_l0(const Vec& mean_norms, double fraction = 0.25);

double tau_star_bound(double g_max, double mean_g_l0, double cost, int l0);

DriftReport check_drift_condition(const std::vector<Trajectory>& batch, const UtilitySpec& spec,
                                  double cost, std::optional<int> l0_override = {},
                                  int threads = 1);

}  // namespace stopnet
