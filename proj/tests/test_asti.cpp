#include <doctest.h>

#include <cmath>

#include "stopnet/asti.hpp"
#include "stopnet/errors.hpp"
#include "test_util.hpp"

using namespace stopnet;

namespace {

Dataset blobs(int n, int dim, int n_classes, std::uint64_t seed, double noise = 1.0) {
    DatasetSpec spec;
    spec.n_classes = n_classes;
    spec.dim = dim;
    spec.noise = noise;
    spec.count = n;
    spec.seed = seed;
    return generate_dataset(spec);
}

UtilitySpec confidence_spec(const ResidualNet& net) {
    UtilitySpec spec;
    spec.head = &net.head;
    return spec;
}

// d = 1 net with two classes whose trunk adds the constant b2_l at layer l
// (w1 = w2 = 0) and whose head gives logits (h, 0). Confidence along the
// trajectory is then sigmoid(h_l) for h_l > 0, which the tests invert to
// produce hand-chosen utility gains.
ResidualNet staircase_net(const Vec& increments) {
    ResidualNet net = testutil::zero_block_net(static_cast<int>(increments.size()), 1, 1, 2, 1);
    for (std::size_t l = 0; l < increments.size(); ++l) net.layers[l].b2 = {increments[l]};
    net.head.w = Mat(2, 1);
    net.head.w(0, 0) = 1.0;
    net.head.b = {0.0, 0.0};
    return net;
}

double logit(double u) { return std::log(u / (1.0 - u)); }

}  // namespace

TEST_CASE("constant utility stops at depth one") {
    const ResidualNet net = testutil::zero_block_net(6, 3, 6, 3, 3, 7);
    const AstiResult r = asti_infer(net, confidence_spec(net), {0.4, -0.1, 0.2}, 0.05);
    CHECK(r.stop_depth == 1);
    CHECK(r.layers_computed == 1);
    CHECK(r.utilities.size() == 2);
    CHECK(r.utilities[0] == r.utilities[1]);
}

TEST_CASE("a cost above the utility range always stops at depth one") {
    const ResidualNet net = init_residual_net(8, 4, 8, 3, 4, 15);
    const Dataset data = blobs(50, 4, 3, 8);
    for (const Sample& s : data) {
        const AstiResult r = asti_infer(net, confidence_spec(net), s.x, 1.5);
        CHECK(r.stop_depth == 1);
    }
}

TEST_CASE("gains of exactly 2c until layer k produce tau = k+1") {
    const double c = 0.01;
    const int k = 3;
    // Utilities 0.6, 0.6 + 2c, ..., then flat after layer k.
    Vec h_targets;
    for (int l = 0; l <= 6; ++l) {
        const double u = 0.6 + 2 * c * std::min(l, k);
        h_targets.push_back(logit(u));
    }
    Vec increments;
    for (std::size_t l = 0; l + 1 < h_targets.size(); ++l)
        increments.push_back(h_targets[l + 1] - h_targets[l]);
    ResidualNet net = staircase_net(increments);

    const AstiResult r = asti_infer(net, confidence_spec(net), {h_targets[0]}, c);
    CHECK(r.stop_depth == k + 1);
    // Trace by hand: every earlier gain is 2c > c, the gain into k+1 is 0.
    for (int l = 0; l < k; ++l)
        CHECK(r.utilities[l + 1] - r.utilities[l] > c);
    CHECK(r.utilities[k + 1] - r.utilities[k] <= c);
}

TEST_CASE("asti rejects label-dependent utilities and bad costs") {
    const ResidualNet net = init_residual_net(3, 2, 4, 2, 2, 2);
    UtilitySpec nce;
    nce.kind = UtilityKind::NegCrossEntropy;
    nce.head = &net.head;
    CHECK_THROWS_AS((void)asti_infer(net, nce, {0.0, 0.0}, 0.1), usage_error);
    CHECK_THROWS_AS((void)asti_infer(net, confidence_spec(net), {0.0, 0.0}, 0.0), usage_error);
}

TEST_CASE("one-step lookahead consistency against the full rollout") {
    const ResidualNet net = init_residual_net(10, 5, 10, 3, 5, 90);
    const UtilitySpec spec = confidence_spec(net);
    const Dataset data = blobs(100, 5, 3, 17);
    for (double c : {1e-12, 0.004, 0.02, 0.2}) {
        for (const Sample& s : data) {
            const AstiResult r = asti_infer(net, spec, s.x, c);
            const Trajectory t = rollout(net, embed(net, s.x));
            int expected = net.depth;
            for (int l = 0; l + 1 < net.depth; ++l) {
                const double gain =
                    utility(spec, t.states[l + 1]) - utility(spec, t.states[l]);
                if (gain <= c) {
                    expected = l + 1;
                    break;
                }
            }
            CHECK(r.stop_depth == expected);
            CHECK(r.layers_computed == r.stop_depth);
            // Prediction comes from the head at the stop state.
            const Vec logits = affine(net.head, t.states[static_cast<std::size_t>(r.stop_depth)]);
            const int argmax = static_cast<int>(
                std::max_element(logits.begin(), logits.end()) - logits.begin());
            CHECK(r.prediction == argmax);
        }
    }
}

TEST_CASE("sweep: mean depth decreases in c, macs increase with depth, duplicates no-op") {
    const ResidualNet net = init_residual_net(8, 4, 8, 3, 4, 26);
    const UtilitySpec spec = confidence_spec(net);
    const Dataset data = blobs(300, 4, 3, 40);
    const std::vector<double> cs = {1e-4, 1e-3, 5e-3, 2e-2, 0.1, 0.5};
    const auto rows = sweep(net, spec, data, cs, 2);
    REQUIRE(rows.size() == cs.size());
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].mean_depth <= rows[i - 1].mean_depth + 1e-12);
        if (rows[i].mean_depth < rows[i - 1].mean_depth)
            CHECK(rows[i].mean_macs < rows[i - 1].mean_macs);
    }
    CHECK(rows.back().mean_depth == 1.0);  // c = 0.5 exceeds any confidence gain

    Dataset doubled = data;
    doubled.insert(doubled.end(), data.begin(), data.end());
    const auto rows2 = sweep(net, spec, doubled, {5e-3});
    const auto rows1 = sweep(net, spec, data, {5e-3});
    CHECK(rows1[0].mean_depth == rows2[0].mean_depth);
    CHECK(rows1[0].accuracy == rows2[0].accuracy);
    CHECK(rows1[0].mean_macs == rows2[0].mean_macs);
}

TEST_CASE("static exit baseline") {
    const ResidualNet net = init_residual_net(6, 4, 8, 4, 4, 33);
    const Dataset data = blobs(400, 4, 4, 50);
    const SweepRow full = static_exit_baseline(net, data, 6);
    CHECK(full.mean_depth == 6.0);
    CHECK(full.accuracy == doctest::Approx(accuracy(net, data)).epsilon(1e-12));

    // Labels effectively independent of the inputs: chance level at any exit.
    const Dataset chaos = blobs(2000, 4, 4, 51, 50.0);
    const SweepRow early = static_exit_baseline(net, chaos, 1, 2);
    CHECK(early.mean_depth == 1.0);
    CHECK(early.accuracy == doctest::Approx(0.25).epsilon(0.25));  // 1/K within noise

    CHECK_THROWS_AS((void)static_exit_baseline(net, data, 0), usage_error);
    CHECK_THROWS_AS((void)static_exit_baseline(net, data, 7), usage_error);
}

TEST_CASE("entropy exit baseline") {
    const ResidualNet net = init_residual_net(5, 4, 8, 3, 4, 62);
    const Dataset data = blobs(100, 4, 3, 52);
    // Any distribution has entropy <= ln K < threshold: exit at 1.
    const SweepRow loose = entropy_exit_baseline(net, data, std::log(3.0) + 0.1);
    CHECK(loose.mean_depth == 1.0);
    // Tiny threshold: never satisfied on an untrained net, exit at L.
    const SweepRow tight = entropy_exit_baseline(net, data, 1e-12);
    CHECK(tight.mean_depth == 5.0);
    CHECK_THROWS_AS((void)entropy_exit_baseline(net, data, 0.0), usage_error);

    // Hand-built staircase: entropy falls as h grows; pick a threshold that
    // admits exactly layer 3.
    ResidualNet stair = staircase_net({0.8, 0.8, 0.8, 0.8});
    auto entropy_at = [&](double h) {
        const double p = 1.0 / (1.0 + std::exp(-h));
        return -p * std::log(p) - (1 - p) * std::log(1 - p);
    };
    const double h0 = 0.5;
    const double e2 = entropy_at(h0 + 2 * 0.8);
    const double e3 = entropy_at(h0 + 3 * 0.8);
    const double threshold = 0.5 * (e2 + e3);  // e3 < threshold < e2
    const Dataset one = {{{h0}, 0}};
    const SweepRow row = entropy_exit_baseline(stair, one, threshold);
    CHECK(row.mean_depth == 3.0);
}

TEST_CASE("exit histogram sums to n and shifts earlier for higher cost") {
    const ResidualNet zero = testutil::zero_block_net(4, 3, 6, 2, 3, 3);
    const Dataset zdata = blobs(64, 3, 2, 60);
    const auto zh = exit_histogram(zero, confidence_spec(zero), zdata, 0.01);
    CHECK(zh[0] == 64);
    for (std::size_t i = 1; i < zh.size(); ++i) CHECK(zh[i] == 0);

    const ResidualNet net = init_residual_net(8, 4, 8, 3, 4, 71);
    const Dataset data = blobs(500, 4, 3, 61);
    const auto h1 = exit_histogram(net, confidence_spec(net), data, 0.002, 2);
    const auto h2 = exit_histogram(net, confidence_spec(net), data, 0.05, 2);
    std::size_t n1 = 0, n2 = 0;
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < h1.size(); ++i) {
        n1 += h1[i];
        n2 += h2[i];
        m1 += static_cast<double>(i + 1) * static_cast<double>(h1[i]);
        m2 += static_cast<double>(i + 1) * static_cast<double>(h2[i]);
    }
    CHECK(n1 == data.size());
    CHECK(n2 == data.size());
    CHECK(m2 / static_cast<double>(n2) <= m1 / static_cast<double>(n1));
}
