#include "stopnet/snell.hpp"

#include <cmath>

#include "stopnet/errors.hpp"
#include "stopnet/parallel.hpp"

namespace stopnet {

SnellPath snell_backward(const RewardPath& path, double tie_tol) {
    const std::size_t n = path.rewards.size();
    if (n == 0) throw usage_error("snell_backward: empty reward path");
    if (tie_tol < 0.0) throw usage_error("snell_backward: tie_tol must be >= 0");
    SnellPath out;
    out.envelope.resize(n);
    out.envelope[n - 1] = path.rewards[n - 1];
    for (std::size_t l = n - 1; l-- > 0;)
        out.envelope[l] = std::max(path.rewards[l], out.envelope[l + 1]);
    out.value = out.envelope[0];
    out.stop_index = static_cast<int>(n) - 1;
    for (std::size_t l = 0; l < n; ++l) {
        if (out.envelope[l] <= path.rewards[l] + tie_tol) {
            out.stop_index = static_cast<int>(l);
            break;
        }
    }
    return out;
}

std::pair<double, int> brute_force_optimum(const RewardPath& path) {
    const std::size_t n = path.rewards.size();
    if (n == 0) throw usage_error("brute_force_optimum: empty reward path");
    double best = path.rewards[0];
    int arg = 0;
    for (std::size_t l = 1; l < n; ++l) {
        if (path.rewards[l] > best) {
            best = path.rewards[l];
            arg = static_cast<int>(l);
        }
    }
    return {best, arg};
}

ValueEstimate estimate_value(const std::vector<Trajectory>& batch, const UtilitySpec& spec,
                             double cost, double tie_tol, int threads) {
    if (batch.empty()) throw usage_error("estimate_value: empty batch");
    const std::size_t n = batch.size();
    Vec values(n), stops(n);
    parallel_for(n, threads, [&](std::size_t i) {
        const SnellPath sp = snell_backward(reward_path(batch[i], spec, cost), tie_tol);
        values[i] = sp.value;
        stops[i] = static_cast<double>(sp.stop_index);
    });

    // Fixed left-to-right reduction keeps the estimate identical across
    // thread counts.
    auto mean_of = [n](const Vec& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(n);
    };
    auto se_of = [n](const Vec& v, double mean) {
        if (n < 2) return 0.0;
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        return std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
    };

    ValueEstimate est;
    est.count = n;
    est.mean_value = mean_of(values);
    est.mean_stop = mean_of(stops);
    est.se_value = se_of(values, est.mean_value);
    est.se_stop = se_of(stops, est.mean_stop);
    return est;
}

}  // namespace stopnet
