#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "stopnet/config.hpp"

namespace stopnet {

// Shared options for all subcommand bodies. `threads` caps internal
// parallelism; results are identical for any value.
struct PipelineOptions {
    std::filesystem::path out_dir;
    int threads = 1;
};

struct AstiSweepOptions {
    std::vector<double> c_values;
    std::vector<int> static_layers;        // empty disables the baseline
    std::vector<double> entropy_thresholds;  // empty disables the baseline
    std::optional<double> histogram_c;     // default: middle of c_values
};

// Each body writes its data files plus resolved_config.json into out_dir and
// throws config_error / usage_error / numeric_error on failure; the CLI maps
// those to exit codes 2 and 3.
void run_gen_data(const RunConfig& cfg, const PipelineOptions& opt);
void run_train(const RunConfig& cfg, const PipelineOptions& opt);
void run_snell(const RunConfig& cfg, const std::filesystem::path& weights_path,
               const std::filesystem::path& data_path, double tie_tol,
               const PipelineOptions& opt);
void run_check_drift(const RunConfig& cfg, const std::filesystem::path& weights_path,
                     const std::filesystem::path& data_path, std::optional<int> l0_override,
                     const PipelineOptions& opt);
void run_asti_sweep(const RunConfig& cfg, const std::filesystem::path& weights_path,
                    const std::filesystem::path& data_path, const AstiSweepOptions& sweep_opt,
                    const PipelineOptions& opt);
void run_hjb(const RunConfig& cfg, const PipelineOptions& opt);
void run_report(const std::filesystem::path& run_dir, const PipelineOptions& opt);

UtilitySpec make_utility_spec(const RewardConfig& reward, const ResidualNet& net);

}  // namespace stopnet
