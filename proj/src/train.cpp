#include "stopnet/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stopnet/errors.hpp"
#include "stopnet/reward.hpp"
#include "stopnet/rng.hpp"

namespace stopnet {

double WeightSchedule::weight(int layer, int depth) const {
    switch (kind) {
        case ScheduleKind::PolyAlpha:
            return std::pow(static_cast<double>(layer + 1), alpha);
        case ScheduleKind::Quadratic: {
            const double r = static_cast<double>(layer) / static_cast<double>(depth);
            return r * r;
        }
    }
    return 0.0;
}

GradientSet zero_gradients(const ResidualNet& net) {
    GradientSet g;
    g.layers.resize(net.layers.size());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const Block& blk = net.layers[l];
        g.layers[l].w1 = Mat(blk.w1.rows, blk.w1.cols);
        g.layers[l].b1 = Vec(blk.b1.size(), 0.0);
        g.layers[l].w2 = Mat(blk.w2.rows, blk.w2.cols);
        g.layers[l].b2 = Vec(blk.b2.size(), 0.0);
    }
    g.head.w = Mat(net.head.w.rows, net.head.w.cols);
    g.head.b = Vec(net.head.b.size(), 0.0);
    g.stem.w = Mat(net.stem.w.rows, net.stem.w.cols);
    g.stem.b = Vec(net.stem.b.size(), 0.0);
    return g;
}

double depth_penalty(const std::vector<Trajectory>& batch, const WeightSchedule& schedule) {
    if (batch.empty()) throw usage_error("depth_penalty: empty batch");
    const int depth = batch.front().depth();
    for (const Trajectory& t : batch)
        if (t.depth() != depth) throw usage_error("depth_penalty: mixed trajectory depths");
    double penalty = 0.0;
    for (int l = 0; l < depth; ++l) {
        double mean_sq = 0.0;
        for (const Trajectory& t : batch) {
            const double r = t.residual_norms[static_cast<std::size_t>(l)];
            mean_sq += r * r;
        }
        mean_sq /= static_cast<double>(batch.size());
        penalty += schedule.weight(l, depth) * mean_sq;
    }
    return penalty;
}

namespace {

// Forward activations cached for one sample.
struct ForwardCache {
    std::vector<Vec> h;  // h_0..h_L
    std::vector<Vec> a;  // tanh activations per block
    std::vector<Vec> f;  // residual outputs per block
};

ForwardCache forward_cached(const ResidualNet& net, const Vec& x) {
    ForwardCache c;
    const auto L = static_cast<std::size_t>(net.depth);
    c.h.resize(L + 1);
    c.a.resize(L);
    c.f.resize(L);
    c.h[0] = embed(net, x);
    for (std::size_t l = 0; l < L; ++l) {
        const Block& blk = net.layers[l];
        Vec z = matvec(blk.w1, c.h[l]);
        for (std::size_t i = 0; i < z.size(); ++i) z[i] = std::tanh(z[i] + blk.b1[i]);
        Vec f = matvec(blk.w2, z);
        for (std::size_t i = 0; i < f.size(); ++i) f[i] += blk.b2[i];
        c.h[l + 1] = c.h[l];
        for (std::size_t i = 0; i < f.size(); ++i) c.h[l + 1][i] += f[i];
        c.a[l] = std::move(z);
        c.f[l] = std::move(f);
    }
    return c;
}

double cross_entropy(const Vec& logits, int label) {
    const double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double v : logits) z += std::exp(v - m);
    return std::log(z) + m - logits[static_cast<std::size_t>(label)];
}

std::vector<int> supervised_set(const TrainConfig& cfg, int depth) {
    std::vector<int> layers = cfg.supervised_layers;
    if (layers.empty())
        for (int l = 1; l < depth; ++l) layers.push_back(l);
    for (int l : layers)
        if (l < 1 || l >= depth)
            throw config_error("supervised layer " + std::to_string(l) + " out of [1, L)");
    return layers;
}

void check_labels(const Dataset& batch, int n_classes) {
    if (batch.empty()) throw usage_error("empty batch");
    for (const Sample& s : batch)
        if (s.label < 0 || s.label >= n_classes) throw usage_error("label out of range");
}

}  // namespace

LossBreakdown total_loss(const ResidualNet& net, const Dataset& batch, const TrainConfig& cfg) {
    check_labels(batch, net.n_classes);
    const std::vector<int> inter = supervised_set(cfg, net.depth);
    const double inv_n = 1.0 / static_cast<double>(batch.size());

    LossBreakdown out;
    Vec sq_norms(static_cast<std::size_t>(net.depth), 0.0);
    for (const Sample& s : batch) {
        const ForwardCache c = forward_cached(net, s.x);
        out.task += cross_entropy(affine(net.head, c.h.back()), s.label) * inv_n;
        for (int l : inter)
            out.intermediate +=
                cross_entropy(affine(net.head, c.h[static_cast<std::size_t>(l)]), s.label) * inv_n;
        for (int l = 0; l < net.depth; ++l) {
            const Vec& f = c.f[static_cast<std::size_t>(l)];
            sq_norms[static_cast<std::size_t>(l)] += dot(f, f) * inv_n;
        }
    }
    for (int l = 0; l < net.depth; ++l)
        out.depth_penalty += cfg.schedule.weight(l, net.depth) * sq_norms[static_cast<std::size_t>(l)];
    out.total = out.task + cfg.beta * out.intermediate + cfg.lambda * out.depth_penalty;
    return out;
}

GradientSet backward(const ResidualNet& net, const Dataset& batch, const TrainConfig& cfg) {
    check_labels(batch, net.n_classes);
    const std::vector<int> inter = supervised_set(cfg, net.depth);
    const auto L = static_cast<std::size_t>(net.depth);
    const double inv_n = 1.0 / static_cast<double>(batch.size());

    std::vector<double> head_coef(L + 1, 0.0);
    head_coef[L] = 1.0;
    for (int l : inter) head_coef[static_cast<std::size_t>(l)] = cfg.beta;

    GradientSet g = zero_gradients(net);
    for (const Sample& s : batch) {
        const ForwardCache c = forward_cached(net, s.x);

        // Head contributions: dlogits = coef/n * (softmax - onehot).
        std::vector<Vec> dh_head(L + 1);
        for (std::size_t l = 0; l <= L; ++l) {
            if (head_coef[l] == 0.0) continue;
            const Vec logits = affine(net.head, c.h[l]);
            Vec dlogits = softmax(logits);
            dlogits[static_cast<std::size_t>(s.label)] -= 1.0;
            for (double& e : dlogits) e *= head_coef[l] * inv_n;
            add_outer(g.head.w, dlogits, c.h[l]);
            axpy(1.0, dlogits, g.head.b);
            dh_head[l] = matvec_t(net.head.w, dlogits);
        }

        // Trunk sweep; identity shortcut carries dh[l+1] straight into dh[l].
        Vec dh = dh_head[L];
        for (std::size_t l = L; l-- > 0;) {
            const Block& blk = net.layers[l];
            Vec df = dh;
            const double pen = 2.0 * cfg.lambda * cfg.schedule.weight(static_cast<int>(l), net.depth) * inv_n;
            if (pen != 0.0) axpy(pen, c.f[l], df);
            add_outer(g.layers[l].w2, df, c.a[l]);
            axpy(1.0, df, g.layers[l].b2);
            Vec dz = matvec_t(blk.w2, df);
            for (std::size_t i = 0; i < dz.size(); ++i) dz[i] *= 1.0 - c.a[l][i] * c.a[l][i];
            add_outer(g.layers[l].w1, dz, c.h[l]);
            axpy(1.0, dz, g.layers[l].b1);
            axpy(1.0, matvec_t(blk.w1, dz), dh);
            if (!dh_head[l].empty()) axpy(1.0, dh_head[l], dh);
        }
        add_outer(g.stem.w, dh, s.x);
        axpy(1.0, dh, g.stem.b);
    }

    for (std::size_t l = 0; l < L; ++l) {
        if (!all_finite(g.layers[l].w1.a) || !all_finite(g.layers[l].b1) ||
            !all_finite(g.layers[l].w2.a) || !all_finite(g.layers[l].b2))
            throw numeric_error("backward: non-finite gradient in block " + std::to_string(l));
    }
    if (!all_finite(g.head.w.a) || !all_finite(g.head.b))
        throw numeric_error("backward: non-finite gradient in head");
    if (!all_finite(g.stem.w.a) || !all_finite(g.stem.b))
        throw numeric_error("backward: non-finite gradient in stem");
    return g;
}

double accuracy(const ResidualNet& net, const Dataset& data, int exit_layer) {
    if (data.empty()) throw usage_error("accuracy: empty dataset");
    const int exit = exit_layer < 0 ? net.depth : exit_layer;
    std::size_t hits = 0;
    for (const Sample& s : data) {
        StateVec h = embed(net, s.x);
        for (int l = 0; l < exit; ++l) h = forward_step(net, l, h).first;
        const Vec logits = affine(net.head, h);
        const auto pred = static_cast<int>(
            std::max_element(logits.begin(), logits.end()) - logits.begin());
        if (pred == s.label) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

namespace {

void sgd_step(ResidualNet& net, GradientSet& velocity, const GradientSet& grad, double lr,
              double momentum) {
    auto update_mat = [&](Mat& w, Mat& v, const Mat& g) {
        for (std::size_t i = 0; i < w.a.size(); ++i) {
            v.a[i] = momentum * v.a[i] - lr * g.a[i];
            w.a[i] += v.a[i];
        }
    };
    auto update_vec = [&](Vec& w, Vec& v, const Vec& g) {
        for (std::size_t i = 0; i < w.size(); ++i) {
            v[i] = momentum * v[i] - lr * g[i];
            w[i] += v[i];
        }
    };
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        update_mat(net.layers[l].w1, velocity.layers[l].w1, grad.layers[l].w1);
        update_vec(net.layers[l].b1, velocity.layers[l].b1, grad.layers[l].b1);
        update_mat(net.layers[l].w2, velocity.layers[l].w2, grad.layers[l].w2);
        update_vec(net.layers[l].b2, velocity.layers[l].b2, grad.layers[l].b2);
    }
    update_mat(net.head.w, velocity.head.w, grad.head.w);
    update_vec(net.head.b, velocity.head.b, grad.head.b);
    // stem intentionally not updated
}

}  // namespace

TrainResult train(const ResidualNet& initial, const Dataset& data, const TrainConfig& cfg) {
    validate(initial);
    if (cfg.epochs < 1) throw config_error("train: epochs must be >= 1");
    if (cfg.batch_size < 1) throw config_error("train: batch_size must be >= 1");
    if (cfg.beta < 0.0 || cfg.lambda < 0.0) throw config_error("train: beta, lambda must be >= 0");
    if (cfg.val_fraction < 0.0 || cfg.val_fraction >= 1.0)
        throw config_error("train: val_fraction must lie in [0, 1)");
    check_labels(data, initial.n_classes);

    // Deterministic split: seeded shuffle, tail becomes validation.
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    SplitMix64 split_rng(derive_stream(cfg.seed, "train-split"));
    split_rng.shuffle(order);
    const std::size_t n_val = static_cast<std::size_t>(cfg.val_fraction * static_cast<double>(data.size()));
    const std::size_t n_train = data.size() - n_val;
    if (n_train == 0) throw config_error("train: empty training split");
    Dataset train_set, val_set;
    train_set.reserve(n_train);
    val_set.reserve(n_val);
    for (std::size_t i = 0; i < n_train; ++i) train_set.push_back(data[order[i]]);
    for (std::size_t i = n_train; i < data.size(); ++i) val_set.push_back(data[order[i]]);
    const Dataset& eval_set = val_set.empty() ? train_set : val_set;

    TrainResult result;
    result.net = initial;
    TrainLog& log = result.log;
    GradientSet velocity = zero_gradients(initial);
    ResidualNet last_good = result.net;

    SplitMix64 shuffle_rng(derive_stream(cfg.seed, "epoch-shuffle"));
    std::vector<std::size_t> idx(train_set.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(idx);
        for (std::size_t start = 0; start < idx.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop = std::min(idx.size(), start + static_cast<std::size_t>(cfg.batch_size));
            Dataset minibatch;
            minibatch.reserve(stop - start);
            for (std::size_t i = start; i < stop; ++i) minibatch.push_back(train_set[idx[i]]);
            const GradientSet grad = backward(result.net, minibatch, cfg);
            sgd_step(result.net, velocity, grad, cfg.learning_rate, cfg.momentum);
            if (cfg.spectral_clip > 0.0) apply_spectral_clip(result.net, cfg.spectral_clip);
        }

        const LossBreakdown loss = total_loss(result.net, train_set, cfg);
        if (!std::isfinite(loss.total)) {
            result.net = last_good;
            result.diverged = true;
            return result;
        }
        last_good = result.net;

        EpochStats stats;
        stats.total = loss.total;
        stats.task = loss.task;
        stats.intermediate = loss.intermediate;
        stats.depth_penalty = loss.depth_penalty;
        stats.val_accuracy = accuracy(result.net, eval_set);
        stats.layer_norms.assign(static_cast<std::size_t>(result.net.depth), 0.0);
        for (const Sample& s : train_set) {
            const Trajectory t = rollout(result.net, embed(result.net, s.x), s.label);
            for (int l = 0; l < result.net.depth; ++l)
                stats.layer_norms[static_cast<std::size_t>(l)] +=
                    t.residual_norms[static_cast<std::size_t>(l)];
        }
        for (double& v : stats.layer_norms) v /= static_cast<double>(train_set.size());
        log.epochs.push_back(std::move(stats));
    }
    return result;
}

ScheduleKind parse_schedule_kind(const std::string& name) {
    if (name == "poly-alpha") return ScheduleKind::PolyAlpha;
    if (name == "quadratic") return ScheduleKind::Quadratic;
    throw config_error("unknown weight schedule: " + name);
}

std::string to_string(ScheduleKind kind) {
    switch (kind) {
        case ScheduleKind::PolyAlpha: return "poly-alpha";
        case ScheduleKind::Quadratic: return "quadratic";
    }
    return "?";
}

}  // namespace stopnet
