#include <doctest.h>

#include <cmath>

#include "stopnet/errors.hpp"
#include "stopnet/rng.hpp"
#include "stopnet/snell.hpp"
#include "test_util.hpp"

using namespace stopnet;

namespace {

RewardPath path_from_rewards(Vec rewards, double cost = 1.0) {
    RewardPath p;
    p.cost = cost;
    p.utilities.resize(rewards.size());
    for (std::size_t l = 0; l < rewards.size(); ++l)
        p.utilities[l] = rewards[l] + cost * static_cast<double>(l);
    p.rewards = std::move(rewards);
    return p;
}

}  // namespace

TEST_CASE("decreasing rewards stop immediately") {
    const SnellPath sp = snell_backward(path_from_rewards({5, 3, 1}), 0.0);
    CHECK(sp.envelope == Vec{5, 3, 1});
    CHECK(sp.stop_index == 0);
    CHECK(sp.value == 5);
}

TEST_CASE("increasing rewards run to the horizon") {
    const SnellPath sp = snell_backward(path_from_rewards({0, 1, 2}), 0.0);
    CHECK(sp.envelope == Vec{2, 2, 2});
    CHECK(sp.stop_index == 2);
    CHECK(sp.value == 2);
}

TEST_CASE("first attainment of the maximum wins") {
    const SnellPath sp = snell_backward(path_from_rewards({1, 4, 2, 4, 0}), 0.0);
    CHECK(sp.envelope == Vec{4, 4, 4, 4, 0});
    CHECK(sp.stop_index == 1);
}

TEST_CASE("brute force oracle basics") {
    CHECK(brute_force_optimum(path_from_rewards({5, 3, 1})) == std::pair{5.0, 0});
    CHECK(brute_force_optimum(path_from_rewards({2, 2, 2, 2})) == std::pair{2.0, 0});
    CHECK_THROWS_AS((void)brute_force_optimum(RewardPath{}), usage_error);
    CHECK_THROWS_AS((void)snell_backward(RewardPath{}, 0.0), usage_error);
}

TEST_CASE("snell equals the exhaustive oracle on random paths") {
    SplitMix64 rng(2024);
    for (int it = 0; it < 2000; ++it) {
        const std::size_t len = 2 + rng.next_below(63);
        Vec rewards(len);
        for (double& r : rewards) r = rng.uniform(-1, 2);
        const RewardPath p = path_from_rewards(std::move(rewards));
        const SnellPath sp = snell_backward(p, 0.0);
        const auto [best, arg] = brute_force_optimum(p);
        CHECK(sp.value == best);
        CHECK(sp.stop_index == arg);
        // Envelope is the running max from the right and dominates rewards.
        for (std::size_t l = 0; l < p.rewards.size(); ++l) {
            CHECK(sp.envelope[l] >= p.rewards[l]);
            if (l + 1 < p.rewards.size())
                CHECK(sp.envelope[l] == std::max(p.rewards[l], sp.envelope[l + 1]));
        }
    }
}

TEST_CASE("stop index is weakly decreasing in the cost") {
    SplitMix64 rng(55);
    for (int it = 0; it < 500; ++it) {
        const std::size_t len = 2 + rng.next_below(30);
        Vec utilities(len);
        for (double& u : utilities) u = rng.uniform(0, 1);
        const double c1 = rng.uniform(1e-4, 0.2);
        const double c2 = c1 + rng.uniform(0, 0.3);
        auto tau_at = [&](double c) {
            RewardPath p;
            p.cost = c;
            p.utilities = utilities;
            p.rewards.resize(len);
            for (std::size_t l = 0; l < len; ++l)
                p.rewards[l] = utilities[l] - c * static_cast<double>(l);
            return snell_backward(p, 0.0).stop_index;
        };
        CHECK(tau_at(c2) <= tau_at(c1));
    }
}

TEST_CASE("with zero cost the value is the running max and grows with horizon") {
    SplitMix64 rng(91);
    for (int it = 0; it < 200; ++it) {
        const std::size_t len = 3 + rng.next_below(20);
        Vec utilities(len);
        for (double& u : utilities) u = rng.uniform(-1, 1);
        double running = -1e9;
        double prev_value = -1e9;
        for (std::size_t horizon = 1; horizon <= len; ++horizon) {
            RewardPath p;
            p.cost = 0.0;
            p.utilities.assign(utilities.begin(), utilities.begin() + horizon);
            p.rewards = p.utilities;
            const SnellPath sp = snell_backward(p, 0.0);
            running = std::max(running, utilities[horizon - 1]);
            CHECK(sp.value == running);
            CHECK(sp.value >= prev_value);
            prev_value = sp.value;
        }
    }
}

TEST_CASE("estimate_value of a single trajectory has zero standard error") {
    const ResidualNet net = init_residual_net(5, 3, 6, 2, 3, 8);
    UtilitySpec spec;
    spec.head = &net.head;
    const std::vector<Trajectory> batch = {rollout(net, {0.1, 0.2, 0.3})};
    const ValueEstimate est = estimate_value(batch, spec, 0.01);
    const SnellPath sp = snell_backward(reward_path(batch[0], spec, 0.01));
    CHECK(est.mean_value == sp.value);
    CHECK(est.mean_stop == static_cast<double>(sp.stop_index));
    CHECK(est.se_value == 0.0);
    CHECK(est.se_stop == 0.0);
    CHECK(est.count == 1);
}

TEST_CASE("zero-block net stops at layer zero with the constant utility") {
    const ResidualNet net = testutil::zero_block_net(6, 4, 8, 3, 4, 14);
    UtilitySpec spec;
    spec.head = &net.head;
    DatasetSpec dspec;
    dspec.n_classes = 3;
    dspec.dim = 4;
    dspec.count = 50;
    dspec.seed = 2;
    const auto batch = rollout_batch(net, generate_dataset(dspec));
    const ValueEstimate est = estimate_value(batch, spec, 0.02);
    CHECK(est.mean_stop == 0.0);
    double mean_u0 = 0.0;
    for (const Trajectory& t : batch) mean_u0 += utility(spec, t.states[0]);
    mean_u0 /= static_cast<double>(batch.size());
    CHECK(est.mean_value == doctest::Approx(mean_u0).epsilon(1e-12));
}

TEST_CASE("value estimate decomposes as mean utility minus cost times mean stop") {
    const ResidualNet net = init_residual_net(10, 6, 12, 3, 6, 123);
    UtilitySpec spec;
    spec.head = &net.head;
    DatasetSpec dspec;
    dspec.n_classes = 3;
    dspec.dim = 6;
    dspec.noise = 1.2;
    dspec.count = 2000;
    dspec.seed = 77;
    const auto batch = rollout_batch(net, generate_dataset(dspec), 2);
    const double c = 0.01;
    const ValueEstimate est = estimate_value(batch, spec, c, 1e-9, 2);

    double mean_g = 0.0, mean_tau = 0.0;
    for (const Trajectory& t : batch) {
        const SnellPath sp = snell_backward(reward_path(t, spec, c));
        mean_g += utility(spec, t.states[static_cast<std::size_t>(sp.stop_index)]);
        mean_tau += static_cast<double>(sp.stop_index);
    }
    mean_g /= static_cast<double>(batch.size());
    mean_tau /= static_cast<double>(batch.size());
    CHECK(std::abs(est.mean_value - (mean_g - c * mean_tau)) < 1e-9);

    CHECK_THROWS_AS((void)estimate_value({}, spec, c), usage_error);
}
