#include "stopnet/drift.hpp"

#include <cmath>

#include "stopnet/errors.hpp"
#include "stopnet/parallel.hpp"

namespace stopnet {

namespace {

int uniform_depth(const std::vector<Trajectory>& batch, const char* who) {
    if (batch.empty()) throw usage_error(std::string(who) + ": empty batch");
    const int depth = batch.front().depth();
    for (const Trajectory& t : batch)
        if (t.depth() != depth) throw usage_error(std::string(who) + ": mixed trajectory depths");
    return depth;
}

}  // namespace

ResidualNormProfile residual_norm_profile(const std::vector<Trajectory>& batch, int threads) {
    const int depth = uniform_depth(batch, "residual_norm_profile");
    const std::size_t n = batch.size();
    const std::size_t L = static_cast<std::size_t>(depth);
    // Per-sample rows first, sequential reduce after: thread-count invariant.
    std::vector<Vec> norms(n);
    parallel_for(n, threads, [&](std::size_t i) { norms[i] = batch[i].residual_norms; });
    ResidualNormProfile prof;
    prof.mean_norm.assign(L, 0.0);
    prof.mean_sq_norm.assign(L, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t l = 0; l < L; ++l) {
            prof.mean_norm[l] += norms[i][l];
            prof.mean_sq_norm[l] += norms[i][l] * norms[i][l];
        }
    }
    for (std::size_t l = 0; l < L; ++l) {
        prof.mean_norm[l] /= static_cast<double>(n);
        prof.mean_sq_norm[l] /= static_cast<double>(n);
    }
    return prof;
}

UtilityDriftProfile utility_drift_profile(const std::vector<Trajectory>& batch,
                                          const UtilitySpec& spec, int threads) {
    const int depth = uniform_depth(batch, "utility_drift_profile");
    const std::size_t n = batch.size();
    const std::size_t L = static_cast<std::size_t>(depth);
    std::vector<Vec> drifts(n);
    parallel_for(n, threads, [&](std::size_t i) {
        const Trajectory& t = batch[i];
        Vec row(L);
        double prev = utility(spec, t.states[0], t.label);
        for (std::size_t l = 0; l < L; ++l) {
            const double next = utility(spec, t.states[l + 1], t.label);
            row[l] = next - prev;
            prev = next;
        }
        drifts[i] = std::move(row);
    });
    UtilityDriftProfile prof;
    prof.mean_drift.assign(L, 0.0);
    prof.se_drift.assign(L, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t l = 0; l < L; ++l) prof.mean_drift[l] += drifts[i][l];
    for (std::size_t l = 0; l < L; ++l) prof.mean_drift[l] /= static_cast<double>(n);
    if (n >= 2) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t l = 0; l < L; ++l) {
                const double d = drifts[i][l] - prof.mean_drift[l];
                prof.se_drift[l] += d * d;
            }
        for (std::size_t l = 0; l < L; ++l)
            prof.se_drift[l] =
                std::sqrt(prof.se_drift[l] / static_cast<double>(n - 1) / static_cast<double>(n));
    }
    return prof;
}

double estimate_lipschitz(const UtilitySpec& spec,
                          const std::vector<std::pair<StateVec, StateVec>>& pairs) {
    if (pairs.empty()) throw usage_error("estimate_lipschitz: no pairs");
    double best = -1.0;
    for (const auto& [a, b] : pairs) {
        const double d = dist2(a, b);
        if (d == 0.0) continue;
        const double gap = std::abs(utility(spec, a) - utility(spec, b));
        best = std::max(best, gap / d);
    }
    if (best < 0.0) throw usage_error("estimate_lipschitz: all states identical");
    return best;
}

std::vector<std::pair<StateVec, StateVec>> trajectory_step_pairs(
    const std::vector<Trajectory>& batch) {
    std::vector<std::pair<StateVec, StateVec>> pairs;
    for (const Trajectory& t : batch)
        for (std::size_t l = 0; l + 1 < t.states.size(); ++l)
            pairs.emplace_back(t.states[l], t.states[l + 1]);
    return pairs;
}

double head_lipschitz_upper(const UtilitySpec& spec) {
    if (spec.head == nullptr) throw usage_error("head_lipschitz_upper: spec has no head");
    const double head_norm = operator_norm(spec.head->w);
    if (spec.kind == UtilityKind::Confidence) return head_norm;
    // grad_h of log softmax(Wh+b)[y] is W^T (e_y - p): norm <= ||W|| * sqrt(2).
    return head_norm * std::sqrt(2.0);
}

int select_l0(const Vec& mean_norms, double fraction) {
    if (mean_norms.empty()) throw usage_error("select_l0: empty profile");
    const double threshold = fraction * mean_norms[0];
    for (std::size_t l = 0; l < mean_norms.size(); ++l)
        if (mean_norms[l] <= threshold) return static_cast<int>(l);
    return static_cast<int>(mean_norms.size()) - 1;
}

double tau_star_bound(double g_max, double mean_g_l0, double cost, int l0) {
    if (cost <= 0.0) throw usage_error("tau_star_bound: cost must be > 0");
    return (g_max - mean_g_l0) / cost + static_cast<double>(l0);
}

DriftReport check_drift_condition(const std::vector<Trajectory>& batch, const UtilitySpec& spec,
                                  double cost, std::optional<int> l0_override, int threads) {
    const int depth = uniform_depth(batch, "check_drift_condition");
    if (cost <= 0.0) throw config_error("check_drift_condition: cost must be > 0");

    DriftReport rep;
    rep.cost = cost;
    rep.g_max = spec.g_max();
    rep.g_min = spec.g_min();

    const ResidualNormProfile norms = residual_norm_profile(batch, threads);
    rep.mean_residual_norm = norms.mean_norm;
    rep.mean_residual_sq_norm = norms.mean_sq_norm;

    const UtilityDriftProfile drift = utility_drift_profile(batch, spec, threads);
    rep.mean_drift = drift.mean_drift;
    rep.se_drift = drift.se_drift;

    rep.l0 = l0_override ? *l0_override : select_l0(norms.mean_norm);
    if (rep.l0 < 0 || rep.l0 >= depth)
        throw usage_error("check_drift_condition: L_0 must lie in [0, depth)");

    rep.delta = 0.0;
    for (int l = rep.l0; l < depth; ++l)
        rep.delta = std::max(rep.delta, norms.mean_norm[static_cast<std::size_t>(l)]);

    // Step pairs cover the directions that matter for the drift chain; pairs
    // of initial states across samples keep the estimate defined even when a
    // net is the exact identity (all step pairs degenerate).
    auto pairs = trajectory_step_pairs(batch);
    for (std::size_t i = 0; i + 1 < batch.size(); ++i)
        pairs.emplace_back(batch[i].states[0], batch[i + 1].states[0]);
    rep.k_g_hat = estimate_lipschitz(spec, pairs);
    rep.k_g_upper = head_lipschitz_upper(spec);

    double g_l0_sum = 0.0;
    for (const Trajectory& t : batch)
        g_l0_sum += utility(spec, t.states[static_cast<std::size_t>(rep.l0)], t.label);
    rep.mean_g_l0 = g_l0_sum / static_cast<double>(batch.size());

    rep.condition_holds = cost > rep.k_g_hat * rep.delta;
    rep.drift_below_cost = true;
    for (int l = rep.l0; l < depth; ++l) {
        const auto li = static_cast<std::size_t>(l);
        if (!(drift.mean_drift[li] < cost + 3.0 * drift.se_drift[li])) {
            rep.drift_below_cost = false;
            break;
        }
    }
    rep.tau_bound = tau_star_bound(rep.g_max, rep.mean_g_l0, cost, rep.l0);
    return rep;
}

}  // namespace stopnet
