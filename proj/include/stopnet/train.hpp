#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stopnet/dynamics.hpp"

namespace stopnet {

enum class ScheduleKind {
    PolyAlpha,  // w_l = (l+1)^alpha
    Quadratic,  // w_l = (l/L)^2
};

struct WeightSchedule {
    ScheduleKind kind = ScheduleKind::Quadratic;
    double alpha = 1.0;

    double weight(int layer, int depth) const;
};

struct TrainConfig {
    int epochs = 30;
    int batch_size = 64;
    double learning_rate = 0.05;
    double momentum = 0.9;
    std::uint64_t seed = 0;
    double beta = 0.5;            // intermediate-supervision weight
    double lambda = 1.0;          // depth-regularization weight
    WeightSchedule schedule;
    double val_fraction = 0.2;
    // Layers whose exit-head loss enters the objective; empty means all of
    // 1..L-1.
    std::vector<int> supervised_layers;
    double spectral_clip = 0.0;  // 0 disables projection after each step
};

// Mirror of the ResidualNet parameters.
struct GradientSet {
    std::vector<Block> layers;
    Linear head;
    Linear stem;
};

struct LossBreakdown {
    double total = 0.0;
    double task = 0.0;          // final-layer cross entropy (unweighted)
    double intermediate = 0.0;  // sum of early-exit cross entropies (unweighted)
    double depth_penalty = 0.0; // schedule-weighted mean squared residual norms
};

struct EpochStats {
    double total = 0.0;
    double task = 0.0;
    double intermediate = 0.0;
    double depth_penalty = 0.0;
    double val_accuracy = 0.0;
    Vec layer_norms;  // per-layer mean residual norm on the training split
};

struct TrainLog {
    std::vector<EpochStats> epochs;
};

struct TrainResult {
    ResidualNet net;
    TrainLog log;
    bool diverged = false;
};

GradientSet zero_gradients(const ResidualNet& net);

// Schedule-weighted sum over layers of the batch-mean squared residual norm.
double depth_penalty(const std::vector<Trajectory>& batch, const WeightSchedule& schedule);

LossBreakdown total_loss(const ResidualNet& net, const Dataset& batch, const TrainConfig& cfg);

// Exact reverse-mode gradient of total_loss with respect to every parameter,
// including the depth-penalty path through the trunk and the early-exit
// losses through the shared head. Throws numeric_error on non-finite output.
GradientSet backward(const ResidualNet& net, const Dataset& batch, const TrainConfig& cfg);

// SGD with momentum on blocks and head; the stem stays fixed. Deterministic
// given the seed. On divergence the last finite-loss weights are returned
// with diverged = true.
TrainResult train(const ResidualNet& initial, const Dataset& data, const TrainConfig& cfg);

double accuracy(const ResidualNet& net, const Dataset& data, int exit_layer = -1);

ScheduleKind parse_schedule_kind(const std::string& name);
std::string to_string(ScheduleKind kind);

}  // namespace stopnet
