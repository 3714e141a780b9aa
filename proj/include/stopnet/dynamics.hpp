#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stopnet/linalg.hpp"

namespace stopnet {

// Hidden representation at one layer; dimension equals the network width.
using StateVec = Vec;

// One residual block: f(h) = w2 * tanh(w1 * h + b1) + b2.
// The bounded activation keeps trajectories in a compact set, which is what
// the analysis modules rely on.
struct Block {
    Mat w1;
    Vec b1;
    Mat w2;
    Vec b2;
};

// Affine map (shared exit head, input stem).
struct Linear {
    Mat w;
    Vec b;
};

inline Vec affine(const Linear& lin, const Vec& x) {
    Vec y = matvec(lin.w, x);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += lin.b[i];
    return y;
}

// Stacked residual MLP with one shared linear exit head and a fixed linear
// stem mapping raw inputs to the trunk width.
struct ResidualNet {
    int depth = 0;      // number of residual blocks L
    int width = 0;      // trunk dimension d
    int d_hidden = 0;   // block inner dimension
    int n_classes = 0;  // head output dimension
    std::vector<Block> layers;
    Linear head;
    Linear stem;

    int input_dim() const { return static_cast<int>(stem.w.cols); }
};

// State sequence h_0..h_L for one input plus the per-layer residual norms
// ||f_l(h_l)||_2 recorded while rolling forward.
struct Trajectory {
    std::vector<StateVec> states;
    Vec residual_norms;
    long input_id = 0;
    std::optional<int> label;

    int depth() const { return static_cast<int>(residual_norms.size()); }
};

enum class DataKind {
    GaussianBlobs,
    TwoMoons,
};

struct DatasetSpec {
    DataKind kind = DataKind::GaussianBlobs;
    int n_classes = 2;
    int dim = 2;
    double noise = 0.5;
    int count = 0;
    std::uint64_t seed = 0;
};

struct Sample {
    Vec x;
    int label = 0;
};

using Dataset = std::vector<Sample>;

// Validates shape consistency and finiteness; throws config_error.
void validate(const ResidualNet& net);

// Seeded construction. Weights are uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)]
// with each block's outer layer scaled by 0.1 so initial residuals are small.
// The stem is the identity when input_dim == width, otherwise a seeded affine
// map; it stays fixed during training.
ResidualNet init_residual_net(int depth, int width, int d_hidden, int n_classes, int input_dim,
                              std::uint64_t seed);

// Rescales any trunk matrix (w1, w2, stem) whose operator-norm estimate
// exceeds `bound`. With tanh blocks this caps ||f_l|| and hence confines all
// trajectories to a compact set.
void apply_spectral_clip(ResidualNet& net, double bound, int power_iterations = 20);

// One residual update: returns (h + f_l(h), ||f_l(h)||_2).
std::pair<StateVec, double> forward_step(const ResidualNet& net, int layer, const StateVec& h);

// Full forward pass from h0. Deterministic in its arguments: the trajectory
// is a Markov chain whose only randomness is the choice of input.
Trajectory rollout(const ResidualNet& net, const StateVec& h0, std::optional<int> label = {},
                   long input_id = 0);

// h_0 from a raw input via the stem.
StateVec embed(const ResidualNet& net, const Vec& x);

// Rolls out every sample of a dataset; order-independent and identical to the
// sequential result for any thread count.
std::vector<Trajectory> rollout_batch(const ResidualNet& net, const Dataset& data,
                                      int threads = 1);

// Seeded synthetic classification data. Class counts are stratified: n is
// split as evenly as possible across classes. Same spec => identical bytes.
Dataset generate_dataset(const DatasetSpec& spec);

DataKind parse_data_kind(const std::string& name);
std::string to_string(DataKind kind);

}  // namespace stopnet
