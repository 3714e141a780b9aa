#pragma once

#include <optional>
#include <string>

#include "stopnet/dynamics.hpp"

namespace stopnet {

enum class UtilityKind {
    Confidence,       // max softmax(head(h)); label-free, in (0, 1]
    NegCrossEntropy,  // clamp(log softmax(head(h))[y], floor, 0); needs a label
};

// A bounded scalar measure of representation quality at a layer, evaluated
// through the shared exit head.
struct UtilitySpec {
    UtilityKind kind = UtilityKind::Confidence;
    const Linear* head = nullptr;
    double ce_clamp = -10.0;  // floor for neg-cross-entropy; must be <= 0

    bool requires_label() const { return kind == UtilityKind::NegCrossEntropy; }
    double g_min() const { return kind == UtilityKind::Confidence ? 0.0 : ce_clamp; }
    double g_max() const { return kind == UtilityKind::Confidence ? 1.0 : 0.0; }
};

// Reward sequence Y_0..Y_L for one trajectory: utility minus accumulated
// per-layer cost.
struct RewardPath {
    Vec rewards;    // Y_l = utilities[l] - c * l
    Vec utilities;  // g(h_0)..g(h_L)
    double cost = 0.0;
};

Vec softmax(const Vec& logits);
double entropy_nats(const Vec& probs);

double utility(const UtilitySpec& spec, const StateVec& h, std::optional<int> label = {});

RewardPath reward_path(const Trajectory& traj, const UtilitySpec& spec, double cost);

UtilityKind parse_utility_kind(const std::string& name);
std::string to_string(UtilityKind kind);

}  // namespace stopnet
