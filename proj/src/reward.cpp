#include "stopnet/reward.hpp"

#include <algorithm>
#include <cmath>

#include "stopnet/errors.hpp"

namespace stopnet {

Vec softmax(const Vec& logits) {
    const double m = *std::max_element(logits.begin(), logits.end());
    Vec p(logits.size());
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - m);
        z += p[i];
    }
    for (double& e : p) e /= z;
    return p;
}

double entropy_nats(const Vec& probs) {
    double h = 0.0;
    for (double p : probs)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

double utility(const UtilitySpec& spec, const StateVec& h, std::optional<int> label) {
    if (spec.head == nullptr) throw usage_error("utility: spec has no head");
    if (spec.requires_label() && !label)
        throw usage_error("utility: neg-cross-entropy requires a label");
    const Vec logits = affine(*spec.head, h);
    if (spec.kind == UtilityKind::Confidence) {
        const Vec p = softmax(logits);
        return *std::max_element(p.begin(), p.end());
    }
    // log softmax(logits)[y], clamped below so the utility stays bounded.
    const int y = *label;
    if (y < 0 || y >= static_cast<int>(logits.size()))
        throw usage_error("utility: label out of range");
    const double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double v : logits) z += std::exp(v - m);
    const double log_py = logits[static_cast<std::size_t>(y)] - m - std::log(z);
    return std::max(spec.ce_clamp, std::min(0.0, log_py));
}

RewardPath reward_path(const Trajectory& traj, const UtilitySpec& spec, double cost) {
    if (cost <= 0.0) throw config_error("reward_path: per-layer cost must be > 0");
    if (spec.requires_label() && !traj.label)
        throw usage_error("reward_path: utility kind requires a labeled trajectory");
    RewardPath path;
    path.cost = cost;
    const std::size_t n = traj.states.size();
    path.utilities.resize(n);
    path.rewards.resize(n);
    for (std::size_t l = 0; l < n; ++l) {
        path.utilities[l] = utility(spec, traj.states[l], traj.label);
        path.rewards[l] = path.utilities[l] - cost * static_cast<double>(l);
    }
    return path;
}

UtilityKind parse_utility_kind(const std::string& name) {
    if (name == "confidence") return UtilityKind::Confidence;
    if (name == "neg-cross-entropy") return UtilityKind::NegCrossEntropy;
    throw config_error("unknown utility kind: " + name);
}

std::string to_string(UtilityKind kind) {
    switch (kind) {
        case UtilityKind::Confidence: return "confidence";
        case UtilityKind::NegCrossEntropy: return "neg-cross-entropy";
    }
    return "?";
}

}  // namespace stopnet
