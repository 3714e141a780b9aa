#include <doctest.h>

#include <cmath>

#include "stopnet/drift.hpp"
#include "stopnet/errors.hpp"
#include "stopnet/rng.hpp"
#include "stopnet/snell.hpp"
#include "test_util.hpp"

using namespace stopnet;

namespace {

Dataset small_blobs(int n, int dim, int n_classes, std::uint64_t seed, double noise = 1.0) {
    DatasetSpec spec;
    spec.n_classes = n_classes;
    spec.dim = dim;
    spec.noise = noise;
    spec.count = n;
    spec.seed = seed;
    return generate_dataset(spec);
}

}  // namespace

TEST_CASE("residual norm profile: zero net, single trajectory, recomputation") {
    const ResidualNet zero = testutil::zero_block_net(4, 3, 6, 2, 3);
    const auto zero_batch = rollout_batch(zero, small_blobs(20, 3, 2, 1));
    const ResidualNormProfile zp = residual_norm_profile(zero_batch);
    for (double v : zp.mean_norm) CHECK(v == 0.0);
    for (double v : zp.mean_sq_norm) CHECK(v == 0.0);

    const ResidualNet net = init_residual_net(5, 4, 8, 2, 4, 3);
    const std::vector<Trajectory> single = {rollout(net, {0.1, -0.2, 0.3, 0.4})};
    const ResidualNormProfile sp = residual_norm_profile(single);
    CHECK(sp.mean_norm == single[0].residual_norms);

    const auto batch = rollout_batch(net, small_blobs(100, 4, 2, 5), 2);
    const ResidualNormProfile bp = residual_norm_profile(batch, 2);
    for (int l = 0; l < 5; ++l) {
        double mean = 0.0;
        for (const Trajectory& t : batch) {
            double sq = 0.0;
            for (std::size_t i = 0; i < t.states[l].size(); ++i) {
                const double d = t.states[l + 1][i] - t.states[l][i];
                sq += d * d;
            }
            mean += std::sqrt(sq);
        }
        mean /= static_cast<double>(batch.size());
        CHECK(bp.mean_norm[static_cast<std::size_t>(l)] == doctest::Approx(mean).epsilon(1e-10));
    }
}

TEST_CASE("profiles reject mixed depths and empty batches") {
    const ResidualNet a = init_residual_net(3, 2, 4, 2, 2, 1);
    const ResidualNet b = init_residual_net(4, 2, 4, 2, 2, 1);
    std::vector<Trajectory> mixed = {rollout(a, {0.0, 0.0}), rollout(b, {0.0, 0.0})};
    CHECK_THROWS_AS((void)residual_norm_profile(mixed), usage_error);
    CHECK_THROWS_AS((void)residual_norm_profile({}), usage_error);
    UtilitySpec spec;
    spec.head = &a.head;
    CHECK_THROWS_AS((void)utility_drift_profile(mixed, spec), usage_error);
}

TEST_CASE("utility drift: zero net is flat, drifts telescope, single input matches by hand") {
    const ResidualNet zero = testutil::zero_block_net(4, 3, 6, 2, 3);
    UtilitySpec zspec;
    zspec.head = &zero.head;
    const auto zero_batch = rollout_batch(zero, small_blobs(20, 3, 2, 1));
    for (double v : utility_drift_profile(zero_batch, zspec).mean_drift) CHECK(v == 0.0);

    const ResidualNet net = init_residual_net(6, 4, 8, 3, 4, 9);
    UtilitySpec spec;
    spec.head = &net.head;

    const std::vector<Trajectory> single = {rollout(net, {1.0, 0.5, -0.5, 0.0})};
    const UtilityDriftProfile one = utility_drift_profile(single, spec);
    for (int l = 0; l < 6; ++l) {
        const double expected = utility(spec, single[0].states[l + 1]) -
                                utility(spec, single[0].states[l]);
        CHECK(one.mean_drift[static_cast<std::size_t>(l)] ==
              doctest::Approx(expected).epsilon(1e-14));
    }

    const auto batch = rollout_batch(net, small_blobs(200, 4, 3, 11));
    const UtilityDriftProfile prof = utility_drift_profile(batch, spec);
    double total_drift = 0.0;
    for (double v : prof.mean_drift) total_drift += v;
    double g_first = 0.0, g_last = 0.0;
    for (const Trajectory& t : batch) {
        g_first += utility(spec, t.states.front());
        g_last += utility(spec, t.states.back());
    }
    g_first /= static_cast<double>(batch.size());
    g_last /= static_cast<double>(batch.size());
    CHECK(std::abs(total_drift - (g_last - g_first)) < 1e-9);
}

TEST_CASE("lipschitz estimate: constant region, duplicates, fd slope") {
    // Saturated confidence: a huge constant logit gap makes g flat.
    Linear flat_head;
    flat_head.w = Mat(2, 2);
    flat_head.b = {60.0, 0.0};
    UtilitySpec flat;
    flat.head = &flat_head;
    std::vector<std::pair<StateVec, StateVec>> pairs = {{{0.0, 0.0}, {0.1, 0.0}},
                                                        {{0.2, 0.1}, {0.0, 0.3}}};
    CHECK(estimate_lipschitz(flat, pairs) == doctest::Approx(0.0).epsilon(1e-12));

    // Smooth region: the pair ratio approximates the directional derivative.
    Linear head;
    head.w = Mat(2, 2);
    head.w(0, 0) = 1.0;  // logits = (h_0, 0)
    head.b = {0.0, 0.0};
    UtilitySpec spec;
    spec.head = &head;
    const double x = 0.7;
    const double delta = 1e-4;
    std::vector<std::pair<StateVec, StateVec>> local = {{{x, 0.0}, {x + delta, 0.0}}};
    const double ratio = estimate_lipschitz(spec, local);
    const double eps = 1e-6;
    const double fd = std::abs(utility(spec, {x + delta / 2 + eps, 0.0}) -
                               utility(spec, {x + delta / 2 - eps, 0.0})) /
                      (2 * eps);
    CHECK(ratio == doctest::Approx(fd).epsilon(1e-4));

    // Duplicated pairs do not move the max.
    auto doubled = local;
    doubled.insert(doubled.end(), local.begin(), local.end());
    CHECK(estimate_lipschitz(spec, doubled) == ratio);

    std::vector<std::pair<StateVec, StateVec>> degenerate = {{{1.0, 1.0}, {1.0, 1.0}}};
    CHECK_THROWS_AS((void)estimate_lipschitz(spec, degenerate), usage_error);
    CHECK_THROWS_AS((void)estimate_lipschitz(spec, {}), usage_error);
}

TEST_CASE("l0 selection and tau bound arithmetic") {
    CHECK(select_l0({1.0, 0.5, 0.2, 0.1}) == 2);
    CHECK(select_l0({1.0, 0.9, 0.8}) == 2);  // none below fraction: last layer
    CHECK(select_l0({0.0, 0.0}) == 0);
    CHECK(tau_star_bound(1.0, 1.0, 0.37, 3) == doctest::Approx(3.0));
    CHECK(tau_star_bound(1.0, 0.5, 0.1, 0) == doctest::Approx(5.0));
    CHECK_THROWS_AS((void)tau_star_bound(1.0, 0.5, 0.0, 0), usage_error);
}

TEST_CASE("drift report on a zero net: condition holds trivially") {
    const ResidualNet net = testutil::zero_block_net(5, 3, 6, 2, 3, 4);
    UtilitySpec spec;
    spec.head = &net.head;
    const auto batch = rollout_batch(net, small_blobs(50, 3, 2, 21));
    const DriftReport rep = check_drift_condition(batch, spec, 0.1, 0);
    CHECK(rep.delta == 0.0);
    CHECK(rep.condition_holds);
    CHECK(rep.drift_below_cost);
    for (double d : rep.mean_drift) {
        CHECK(d == 0.0);
        CHECK(d < rep.cost);
    }
}

TEST_CASE("drift report fields are consistent on a random net") {
    const ResidualNet net = init_residual_net(8, 5, 10, 3, 5, 30);
    UtilitySpec spec;
    spec.head = &net.head;
    const auto batch = rollout_batch(net, small_blobs(400, 5, 3, 31), 2);
    const DriftReport rep = check_drift_condition(batch, spec, 0.05, {}, 2);

    CHECK(rep.l0 >= 0);
    CHECK(rep.l0 < 8);
    double delta = 0.0;
    for (int l = rep.l0; l < 8; ++l)
        delta = std::max(delta, rep.mean_residual_norm[static_cast<std::size_t>(l)]);
    CHECK(rep.delta == delta);
    CHECK(rep.tau_bound ==
          doctest::Approx((rep.g_max - rep.mean_g_l0) / rep.cost + rep.l0).epsilon(1e-12));
    CHECK(rep.condition_holds == (rep.cost > rep.k_g_hat * rep.delta));
    CHECK(rep.k_g_hat <= rep.k_g_upper);

    // Aggregate chain inequality with the analytic upper bound.
    for (std::size_t l = 0; l < 8; ++l)
        CHECK(rep.mean_drift[l] <= rep.k_g_upper * rep.mean_residual_norm[l] + 1e-12);
}

TEST_CASE("measured stopping depth stays below the bound for every cost") {
    const ResidualNet net = init_residual_net(10, 5, 10, 3, 5, 44);
    UtilitySpec spec;
    spec.head = &net.head;
    const auto batch = rollout_batch(net, small_blobs(500, 5, 3, 45), 2);
    for (double c : {0.005, 0.01, 0.05, 0.1, 0.5}) {
        const DriftReport rep = check_drift_condition(batch, spec, c, {}, 2);
        const ValueEstimate est = estimate_value(batch, spec, c, 0.0, 2);
        CHECK(est.mean_stop <= rep.tau_bound + 1e-12);
    }
}
