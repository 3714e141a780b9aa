// stopnet: residual-trunk optimal-stopping toolkit.
//
// Subcommands cover the full pipeline: synthesize data, train a residual
// stack under the depth-regularized objective, solve per-sample stopping
// problems exactly, verify the drift condition and depth bound, sweep the
// adaptive-inference cost knob against baselines, and solve the
// continuous-depth free-boundary problem on a grid.
//
// Exit codes: 0 success, 2 config/usage error, 3 numeric failure.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stopnet/errors.hpp"
#include "stopnet/pipeline.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    int threads = 1;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_config = true) {
    auto* config = cmd->add_option("--config", args.config_path, "run config JSON");
    if (needs_config) config->required();
    cmd->add_option("--out", args.out_dir, "output directory")->required();
    cmd->add_option("--threads", args.threads, "internal parallelism cap (results identical)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed", args.seed, "root seed overriding every per-section seed");
}

stopnet::RunConfig load_config(const CommonArgs& args) {
    stopnet::RunConfig cfg = stopnet::load_run_config(args.config_path);
    if (args.seed) stopnet::override_seeds(cfg, *args.seed);
    return cfg;
}

stopnet::PipelineOptions options(const CommonArgs& args) {
    return {std::filesystem::path(args.out_dir), args.threads};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stopnet: optimal stopping over residual network depth"};
    app.require_subcommand(1);

    CommonArgs gen_args;
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset CSV");
    add_common(gen, gen_args);

    CommonArgs train_args;
    auto* train = app.add_subcommand("train", "train a residual stack; emits weights + logs");
    add_common(train, train_args);

    CommonArgs snell_args;
    std::string snell_weights, snell_data;
    double tie_tol = 1e-9;
    auto* snell = app.add_subcommand("snell", "exact per-sample stopping solutions");
    add_common(snell, snell_args);
    snell->add_option("--weights", snell_weights, "weights JSON")->required();
    snell->add_option("--data", snell_data, "dataset CSV")->required();
    snell->add_option("--tie-tol", tie_tol, "tolerance for envelope/reward ties");

    CommonArgs drift_args;
    std::string drift_weights, drift_data;
    std::optional<int> l0_override;
    auto* drift = app.add_subcommand("check-drift", "drift condition and depth bound report");
    add_common(drift, drift_args);
    drift->add_option("--weights", drift_weights, "weights JSON")->required();
    drift->add_option("--data", drift_data, "dataset CSV")->required();
    drift->add_option("--l0", l0_override, "override the automatic L_0 selection");

    CommonArgs sweep_args;
    std::string sweep_weights, sweep_data;
    std::vector<double> c_list;
    std::vector<int> static_layers;
    std::vector<double> entropy_thresholds;
    std::optional<double> hist_c;
    auto* sweep = app.add_subcommand("asti-sweep", "adaptive inference sweep vs baselines");
    add_common(sweep, sweep_args);
    sweep->add_option("--weights", sweep_weights, "weights JSON")->required();
    sweep->add_option("--data", sweep_data, "dataset CSV")->required();
    sweep->add_option("--c-list", c_list, "comma-separated cost values")
        ->required()
        ->delimiter(',');
    sweep->add_option("--static-layers", static_layers, "static-exit baseline layers")
        ->delimiter(',');
    sweep->add_option("--entropy-thresholds", entropy_thresholds,
                      "entropy-exit baseline thresholds (nats)")
        ->delimiter(',');
    sweep->add_option("--hist-c", hist_c, "cost for the exit histogram (default: mid of c-list)");

    CommonArgs hjb_args;
    auto* hjb = app.add_subcommand("hjb", "solve the continuous-depth free-boundary problem");
    add_common(hjb, hjb_args);

    std::string report_dir, report_out;
    auto* report = app.add_subcommand("report", "merge stage outputs into one summary JSON");
    report->add_option("run_dir", report_dir, "directory with snell/check-drift/asti-sweep outputs")
        ->required();
    report->add_option("--out", report_out, "output directory (default: run_dir)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (gen->parsed()) stopnet::run_gen_data(load_config(gen_args), options(gen_args));
        if (train->parsed()) stopnet::run_train(load_config(train_args), options(train_args));
        if (snell->parsed())
            stopnet::run_snell(load_config(snell_args), snell_weights, snell_data, tie_tol,
                               options(snell_args));
        if (drift->parsed())
            stopnet::run_check_drift(load_config(drift_args), drift_weights, drift_data,
                                     l0_override, options(drift_args));
        if (sweep->parsed()) {
            stopnet::AstiSweepOptions so;
            so.c_values = c_list;
            so.static_layers = static_layers;
            so.entropy_thresholds = entropy_thresholds;
            so.histogram_c = hist_c;
            stopnet::run_asti_sweep(load_config(sweep_args), sweep_weights, sweep_data, so,
                                    options(sweep_args));
        }
        if (hjb->parsed()) stopnet::run_hjb(load_config(hjb_args), options(hjb_args));
        if (report->parsed()) {
            stopnet::PipelineOptions opt;
            opt.out_dir = report_out.empty() ? report_dir : report_out;
            stopnet::run_report(report_dir, opt);
        }
    } catch (const stopnet::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const stopnet::usage_error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const stopnet::numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
