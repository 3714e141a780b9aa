#include "stopnet/dynamics.hpp"

#include <cmath>

#include "stopnet/errors.hpp"
#include "stopnet/parallel.hpp"
#include "stopnet/rng.hpp"

namespace stopnet {

namespace {

void check_finite_mat(const Mat& m, const std::string& what) {
    if (!all_finite(m.a)) throw config_error(what + ": non-finite entry");
}

void check_finite_vec(const Vec& v, const std::string& what) {
    if (!all_finite(v)) throw config_error(what + ": non-finite entry");
}

Mat random_mat(std::size_t rows, std::size_t cols, SplitMix64& rng) {
    Mat m(rows, cols);
    const double a = 1.0 / std::sqrt(static_cast<double>(cols));
    for (double& e : m.a) e = rng.uniform(-a, a);
    return m;
}

Vec random_vec(std::size_t n, double fan_in, SplitMix64& rng) {
    Vec v(n, 0.0);
    const double a = 1.0 / std::sqrt(fan_in);
    for (double& e : v) e = rng.uniform(-a, a);
    return v;
}

}  // namespace

void validate(const ResidualNet& net) {
    if (net.depth <= 0 || net.width <= 0 || net.d_hidden <= 0 || net.n_classes <= 0)
        throw config_error("ResidualNet: depth, width, d_hidden, n_classes must be positive");
    if (static_cast<int>(net.layers.size()) != net.depth)
        throw config_error("ResidualNet: layer count does not match depth");
    const std::size_t d = static_cast<std::size_t>(net.width);
    const std::size_t dh = static_cast<std::size_t>(net.d_hidden);
    for (int l = 0; l < net.depth; ++l) {
        const Block& blk = net.layers[static_cast<std::size_t>(l)];
        const std::string tag = "layer " + std::to_string(l);
        if (blk.w1.rows != dh || blk.w1.cols != d || blk.b1.size() != dh ||
            blk.w2.rows != d || blk.w2.cols != dh || blk.b2.size() != d)
            throw config_error("ResidualNet: inconsistent shapes at " + tag);
        check_finite_mat(blk.w1, tag + " w1");
        check_finite_vec(blk.b1, tag + " b1");
        check_finite_mat(blk.w2, tag + " w2");
        check_finite_vec(blk.b2, tag + " b2");
    }
    if (net.head.w.rows != static_cast<std::size_t>(net.n_classes) || net.head.w.cols != d ||
        net.head.b.size() != static_cast<std::size_t>(net.n_classes))
        throw config_error("ResidualNet: head shape mismatch");
    if (net.stem.w.rows != d || net.stem.b.size() != d)
        throw config_error("ResidualNet: stem shape mismatch");
    check_finite_mat(net.head.w, "head w");
    check_finite_vec(net.head.b, "head b");
    check_finite_mat(net.stem.w, "stem w");
    check_finite_vec(net.stem.b, "stem b");
}

ResidualNet init_residual_net(int depth, int width, int d_hidden, int n_classes, int input_dim,
                              std::uint64_t seed) {
    if (depth <= 0 || width <= 0 || d_hidden <= 0 || n_classes <= 0 || input_dim <= 0)
        throw config_error("init_residual_net: all dimensions must be positive");
    SplitMix64 rng(derive_stream(seed, "net-init"));
    ResidualNet net;
    net.depth = depth;
    net.width = width;
    net.d_hidden = d_hidden;
    net.n_classes = n_classes;
    net.layers.reserve(static_cast<std::size_t>(depth));
    const auto d = static_cast<std::size_t>(width);
    const auto dh = static_cast<std::size_t>(d_hidden);
    for (int l = 0; l < depth; ++l) {
        Block blk;
        blk.w1 = random_mat(dh, d, rng);
        blk.b1 = random_vec(dh, static_cast<double>(d), rng);
        blk.w2 = random_mat(d, dh, rng);
        blk.b2 = random_vec(d, static_cast<double>(dh), rng);
        // Small initial residuals keep early trajectories near the identity.
        for (double& e : blk.w2.a) e *= 0.1;
        for (double& e : blk.b2) e *= 0.1;
        net.layers.push_back(std::move(blk));
    }
    net.head.w = random_mat(static_cast<std::size_t>(n_classes), d, rng);
    net.head.b = random_vec(static_cast<std::size_t>(n_classes), static_cast<double>(d), rng);
    if (input_dim == width) {
        net.stem.w = Mat::identity(d);
        net.stem.b = Vec(d, 0.0);
    } else {
        net.stem.w = random_mat(d, static_cast<std::size_t>(input_dim), rng);
        net.stem.b = random_vec(d, static_cast<double>(input_dim), rng);
    }
    return net;
}

void apply_spectral_clip(ResidualNet& net, double bound, int power_iterations) {
    if (bound <= 0.0) throw config_error("spectral clip bound must be positive");
    auto clip = [&](Mat& w) {
        const double sigma = operator_norm(w, power_iterations);
        if (sigma > bound) {
            const double scale = bound / sigma;
            for (double& e : w.a) e *= scale;
        }
    };
    for (Block& blk : net.layers) {
        clip(blk.w1);
        clip(blk.w2);
    }
    clip(net.stem.w);
}

std::pair<StateVec, double> forward_step(const ResidualNet& net, int layer, const StateVec& h) {
    if (layer < 0 || layer >= net.depth)
        throw config_error("forward_step: layer " + std::to_string(layer) + " out of range");
    if (static_cast<int>(h.size()) != net.width)
        throw config_error("forward_step: state dimension mismatch");
    const Block& blk = net.layers[static_cast<std::size_t>(layer)];
    Vec z = matvec(blk.w1, h);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = std::tanh(z[i] + blk.b1[i]);
    Vec f = matvec(blk.w2, z);
    double sq = 0.0;
    StateVec out(h.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        f[i] += blk.b2[i];
        sq += f[i] * f[i];
        out[i] = h[i] + f[i];
    }
    if (!all_finite(out))
        throw numeric_error("forward_step: non-finite state at layer " + std::to_string(layer));
    return {std::move(out), std::sqrt(sq)};
}

Trajectory rollout(const ResidualNet& net, const StateVec& h0, std::optional<int> label,
                   long input_id) {
    if (static_cast<int>(h0.size()) != net.width)
        throw config_error("rollout: h0 dimension mismatch");
    if (!all_finite(h0)) throw config_error("rollout: h0 has non-finite entries");
    Trajectory traj;
    traj.input_id = input_id;
    traj.label = label;
    traj.states.reserve(static_cast<std::size_t>(net.depth) + 1);
    traj.residual_norms.reserve(static_cast<std::size_t>(net.depth));
    traj.states.push_back(h0);
    for (int l = 0; l < net.depth; ++l) {
        auto [next, norm] = forward_step(net, l, traj.states.back());
        traj.states.push_back(std::move(next));
        traj.residual_norms.push_back(norm);
    }
    return traj;
}

StateVec embed(const ResidualNet& net, const Vec& x) {
    if (x.size() != net.stem.w.cols) throw config_error("embed: input dimension mismatch");
    return affine(net.stem, x);
}

std::vector<Trajectory> rollout_batch(const ResidualNet& net, const Dataset& data, int threads) {
    std::vector<Trajectory> out(data.size());
    parallel_for(data.size(), threads, [&](std::size_t i) {
        out[i] = rollout(net, embed(net, data[i].x), data[i].label, static_cast<long>(i));
    });
    return out;
}

namespace {

// Class centroids: on a circle of radius 3 in the first two coordinates when
// dim >= 2, evenly spaced on a line otherwise.
Vec blob_centroid(int cls, int n_classes, int dim) {
    Vec c(static_cast<std::size_t>(dim), 0.0);
    constexpr double kRadius = 3.0;
    if (dim >= 2) {
        const double angle = 6.283185307179586476925286766559 * cls / n_classes;
        c[0] = kRadius * std::cos(angle);
        c[1] = kRadius * std::sin(angle);
    } else {
        c[0] = (n_classes > 1)
                   ? kRadius * (2.0 * cls / (n_classes - 1) - 1.0)
                   : 0.0;
    }
    return c;
}

}  // namespace

Dataset generate_dataset(const DatasetSpec& spec) {
    if (spec.count < 1) throw config_error("generate_dataset: sample count must be >= 1");
    if (spec.n_classes < 1) throw config_error("generate_dataset: n_classes must be >= 1");
    if (spec.dim < 1) throw config_error("generate_dataset: dim must be >= 1");
    if (spec.noise < 0.0) throw config_error("generate_dataset: noise must be >= 0");
    if (spec.kind == DataKind::TwoMoons) {
        if (spec.n_classes != 2) throw config_error("two-moons generator requires n_classes == 2");
        if (spec.dim < 2) throw config_error("two-moons generator requires dim >= 2");
    }

    SplitMix64 rng(derive_stream(spec.seed, "dataset"));
    Dataset data;
    data.reserve(static_cast<std::size_t>(spec.count));

    // Stratified: class k gets floor(n/K) samples plus one of the remainder.
    std::vector<int> counts(static_cast<std::size_t>(spec.n_classes), spec.count / spec.n_classes);
    for (int k = 0; k < spec.count % spec.n_classes; ++k) counts[static_cast<std::size_t>(k)]++;

    for (int cls = 0; cls < spec.n_classes; ++cls) {
        const Vec centroid = (spec.kind == DataKind::GaussianBlobs)
                                 ? blob_centroid(cls, spec.n_classes, spec.dim)
                                 : Vec{};
        for (int i = 0; i < counts[static_cast<std::size_t>(cls)]; ++i) {
            Sample s;
            s.label = cls;
            s.x.assign(static_cast<std::size_t>(spec.dim), 0.0);
            if (spec.kind == DataKind::GaussianBlobs) {
                for (int j = 0; j < spec.dim; ++j)
                    s.x[static_cast<std::size_t>(j)] =
                        centroid[static_cast<std::size_t>(j)] + spec.noise * rng.normal();
            } else {
                // Two interleaved half-moons; t ramps over [0, pi].
                const double t = rng.next_double() * 3.14159265358979323846;
                if (cls == 0) {
                    s.x[0] = std::cos(t);
                    s.x[1] = std::sin(t);
                } else {
                    s.x[0] = 1.0 - std::cos(t);
                    s.x[1] = 0.5 - std::sin(t);
                }
                s.x[0] += spec.noise * rng.normal();
                s.x[1] += spec.noise * rng.normal();
            }
            data.push_back(std::move(s));
        }
    }
    // Deterministic interleave so classes are not stored in blocks.
    rng.shuffle(data);
    return data;
}

DataKind parse_data_kind(const std::string& name) {
    if (name == "gaussian-blobs") return DataKind::GaussianBlobs;
    if (name == "two-moons") return DataKind::TwoMoons;
    throw config_error("unknown dataset kind: " + name);
}

std::string to_string(DataKind kind) {
    switch (kind) {
        case DataKind::GaussianBlobs: return "gaussian-blobs";
        case DataKind::TwoMoons: return "two-moons";
    }
    return "?";
}

}  // namespace stopnet
