#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "stopnet/dynamics.hpp"
#include "stopnet/hjb.hpp"
#include "stopnet/reward.hpp"
#include "stopnet/train.hpp"

namespace stopnet {

struct ModelConfig {
    int depth = 12;
    int width = 8;
    int d_hidden = 16;  // defaults to 2 * width when absent
    int n_classes = 2;
    std::uint64_t seed = 0;
    double spectral_clip = 0.0;
};

struct RewardConfig {
    UtilityKind kind = UtilityKind::Confidence;
    double cost_c = 0.0;
    double ce_clamp = -10.0;
};

// Parsed run configuration. The schema is strict: unknown keys anywhere are
// rejected so a typo cannot silently fall back to a default.
struct RunConfig {
    std::optional<ModelConfig> model;
    std::optional<DatasetSpec> data;
    std::optional<RewardConfig> reward;
    std::optional<TrainConfig> train;
    std::optional<HjbProblem> hjb;
};

RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

// Replaces every per-section seed with a stream derived from one root seed.
void override_seeds(RunConfig& cfg, std::uint64_t root_seed);

// Fully materialized config (defaults applied), written next to each run's
// outputs. Path-free so reruns are byte-identical.
nlohmann::json resolved_config(const RunConfig& cfg);

const ModelConfig& require_model(const RunConfig& cfg);
const DatasetSpec& require_data(const RunConfig& cfg);
const RewardConfig& require_reward(const RunConfig& cfg);
const TrainConfig& require_train(const RunConfig& cfg);
const HjbProblem& require_hjb(const RunConfig& cfg);

}  // namespace stopnet
