#include "stopnet/pipeline.hpp"

#include <algorithm>
#include <sstream>

#include "stopnet/asti.hpp"
#include "stopnet/drift.hpp"
#include "stopnet/errors.hpp"
#include "stopnet/io.hpp"
#include "stopnet/snell.hpp"

namespace stopnet {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void prepare_out_dir(const RunConfig& cfg, const PipelineOptions& opt) {
    fs::create_directories(opt.out_dir);
    write_text_file(opt.out_dir / "resolved_config.json", resolved_config(cfg).dump(2) + "\n");
}

ResidualNet load_net(const RunConfig& cfg, const fs::path& weights_path) {
    ResidualNet net = load_weights(weights_path);
    if (cfg.model && cfg.model->spectral_clip > 0.0)
        apply_spectral_clip(net, cfg.model->spectral_clip);
    return net;
}

Dataset load_data_checked(const fs::path& data_path, const ResidualNet& net) {
    Dataset data = load_dataset(data_path);
    if (static_cast<int>(data.front().x.size()) != net.input_dim())
        throw config_error("dataset dimension does not match the network stem");
    for (const Sample& s : data)
        if (s.label < 0 || s.label >= net.n_classes)
            throw config_error("dataset label out of range for the network head");
    return data;
}

}  // namespace

UtilitySpec make_utility_spec(const RewardConfig& reward, const ResidualNet& net) {
    UtilitySpec spec;
    spec.kind = reward.kind;
    spec.head = &net.head;
    spec.ce_clamp = reward.ce_clamp;
    return spec;
}

void run_gen_data(const RunConfig& cfg, const PipelineOptions& opt) {
    const DatasetSpec& spec = require_data(cfg);
    prepare_out_dir(cfg, opt);
    save_dataset(generate_dataset(spec), opt.out_dir / "dataset.csv");
}

void run_train(const RunConfig& cfg, const PipelineOptions& opt) {
    const ModelConfig& model = require_model(cfg);
    const DatasetSpec& dspec = require_data(cfg);
    TrainConfig tcfg = require_train(cfg);
    if (model.n_classes != dspec.n_classes)
        throw config_error("model.n_classes must match data.n_classes");
    tcfg.spectral_clip = model.spectral_clip;

    prepare_out_dir(cfg, opt);
    const Dataset data = generate_dataset(dspec);
    ResidualNet net = init_residual_net(model.depth, model.width, model.d_hidden, model.n_classes,
                                        dspec.dim, model.seed);
    if (model.spectral_clip > 0.0) apply_spectral_clip(net, model.spectral_clip);

    const TrainResult result = train(net, data, tcfg);
    save_weights(result.net, opt.out_dir / "weights.json");

    std::ostringstream log;
    log << "epoch,total_loss,task_loss,intermediate_loss,depth_penalty,val_accuracy";
    for (int l = 0; l < result.net.depth; ++l) log << ",norm_" << l;
    log << "\n";
    for (std::size_t e = 0; e < result.log.epochs.size(); ++e) {
        const EpochStats& s = result.log.epochs[e];
        log << e << "," << format_double(s.total) << "," << format_double(s.task) << ","
            << format_double(s.intermediate) << "," << format_double(s.depth_penalty) << ","
            << format_double(s.val_accuracy);
        for (double v : s.layer_norms) log << "," << format_double(v);
        log << "\n";
    }
    write_text_file(opt.out_dir / "trainlog.csv", log.str());

    std::ostringstream prof;
    prof << "layer,mean_residual_norm\n";
    if (!result.log.epochs.empty()) {
        const Vec& norms = result.log.epochs.back().layer_norms;
        for (std::size_t l = 0; l < norms.size(); ++l)
            prof << l << "," << format_double(norms[l]) << "\n";
    }
    write_text_file(opt.out_dir / "norm_profile.csv", prof.str());

    if (result.diverged)
        throw numeric_error("training diverged; last finite-loss weights were saved");
}

void run_snell(const RunConfig& cfg, const fs::path& weights_path, const fs::path& data_path,
               double tie_tol, const PipelineOptions& opt) {
    const RewardConfig& reward = require_reward(cfg);
    prepare_out_dir(cfg, opt);
    const ResidualNet net = load_net(cfg, weights_path);
    const Dataset data = load_data_checked(data_path, net);
    const UtilitySpec spec = make_utility_spec(reward, net);

    const std::vector<Trajectory> batch = rollout_batch(net, data, opt.threads);
    std::ostringstream per_sample;
    per_sample << "input_id,tau_star,U0,g_at_tau\n";
    for (const Trajectory& traj : batch) {
        const SnellPath sp = snell_backward(reward_path(traj, spec, reward.cost_c), tie_tol);
        per_sample << traj.input_id << "," << sp.stop_index << "," << format_double(sp.value)
                   << ","
                   << format_double(utility(spec, traj.states[static_cast<std::size_t>(sp.stop_index)],
                                            traj.label))
                   << "\n";
    }
    write_text_file(opt.out_dir / "snell_per_sample.csv", per_sample.str());

    const ValueEstimate est = estimate_value(batch, spec, reward.cost_c, tie_tol, opt.threads);
    json summary = {{"value", est.mean_value},
                    {"mean_tau", est.mean_stop},
                    {"se_value", est.se_value},
                    {"se_tau", est.se_stop},
                    {"n", est.count},
                    {"cost_c", reward.cost_c}};
    write_text_file(opt.out_dir / "snell_summary.json", summary.dump(2) + "\n");
}

void run_check_drift(const RunConfig& cfg, const fs::path& weights_path, const fs::path& data_path,
                     std::optional<int> l0_override, const PipelineOptions& opt) {
    const RewardConfig& reward = require_reward(cfg);
    prepare_out_dir(cfg, opt);
    const ResidualNet net = load_net(cfg, weights_path);
    const Dataset data = load_data_checked(data_path, net);
    const UtilitySpec spec = make_utility_spec(reward, net);

    const std::vector<Trajectory> batch = rollout_batch(net, data, opt.threads);
    const DriftReport rep =
        check_drift_condition(batch, spec, reward.cost_c, l0_override, opt.threads);

    json j = {{"mean_residual_norm", rep.mean_residual_norm},
              {"mean_residual_sq_norm", rep.mean_residual_sq_norm},
              {"mean_drift", rep.mean_drift},
              {"se_drift", rep.se_drift},
              {"k_g_hat", rep.k_g_hat},
              {"k_g_upper", rep.k_g_upper},
              {"delta", rep.delta},
              {"l0", rep.l0},
              {"g_max", rep.g_max},
              {"g_min", rep.g_min},
              {"mean_g_l0", rep.mean_g_l0},
              {"cost_c", rep.cost},
              {"condition_holds", rep.condition_holds},
              {"drift_below_cost", rep.drift_below_cost},
              {"tau_bound", rep.tau_bound}};
    write_text_file(opt.out_dir / "drift_report.json", j.dump(2) + "\n");

    std::ostringstream prof;
    prof << "layer,mean_residual_norm,mean_drift\n";
    for (std::size_t l = 0; l < rep.mean_residual_norm.size(); ++l)
        prof << l << "," << format_double(rep.mean_residual_norm[l]) << ","
             << format_double(rep.mean_drift[l]) << "\n";
    write_text_file(opt.out_dir / "drift_profile.csv", prof.str());
}

void run_asti_sweep(const RunConfig& cfg, const fs::path& weights_path, const fs::path& data_path,
                    const AstiSweepOptions& sweep_opt, const PipelineOptions& opt) {
    const RewardConfig& reward = require_reward(cfg);
    if (reward.kind != UtilityKind::Confidence)
        throw config_error("asti-sweep requires the confidence utility (label-free inference)");
    if (sweep_opt.c_values.empty()) throw config_error("asti-sweep: empty cost list");
    prepare_out_dir(cfg, opt);
    const ResidualNet net = load_net(cfg, weights_path);
    const Dataset data = load_data_checked(data_path, net);
    const UtilitySpec spec = make_utility_spec(reward, net);

    std::vector<SweepRow> rows = sweep(net, spec, data, sweep_opt.c_values, opt.threads);
    for (int layer : sweep_opt.static_layers)
        rows.push_back(static_exit_baseline(net, data, layer, opt.threads));
    for (double threshold : sweep_opt.entropy_thresholds)
        rows.push_back(entropy_exit_baseline(net, data, threshold, opt.threads));

    std::ostringstream sweep_csv;
    sweep_csv << "c_or_threshold,method,mean_depth,mean_macs,accuracy\n";
    for (const SweepRow& row : rows)
        sweep_csv << format_double(row.c_or_threshold) << "," << row.method << ","
                  << format_double(row.mean_depth) << "," << format_double(row.mean_macs) << ","
                  << format_double(row.accuracy) << "\n";
    write_text_file(opt.out_dir / "sweep.csv", sweep_csv.str());

    const double hist_c = sweep_opt.histogram_c
                              ? *sweep_opt.histogram_c
                              : sweep_opt.c_values[sweep_opt.c_values.size() / 2];
    const std::vector<std::size_t> hist = exit_histogram(net, spec, data, hist_c, opt.threads);
    std::ostringstream hist_csv;
    hist_csv << "tau,count\n";
    for (std::size_t tau = 1; tau <= hist.size(); ++tau)
        hist_csv << tau << "," << hist[tau - 1] << "\n";
    write_text_file(opt.out_dir / "histogram.csv", hist_csv.str());
}

void run_hjb(const RunConfig& cfg, const PipelineOptions& opt) {
    const HjbProblem& problem = require_hjb(cfg);
    prepare_out_dir(cfg, opt);
    const HjbSolution sol = solve(problem);

    std::ostringstream grid;
    grid << "t,h,V,region\n";
    for (std::size_t i = 0; i < sol.t_grid.size(); ++i)
        for (std::size_t j = 0; j < sol.h_grid.size(); ++j)
            grid << format_double(sol.t_grid[i]) << "," << format_double(sol.h_grid[j]) << ","
                 << format_double(sol.value[i][j]) << "," << (sol.stop[i][j] ? "S" : "C") << "\n";
    write_text_file(opt.out_dir / "hjb_grid.csv", grid.str());

    const auto boundary = extract_boundary(sol);
    std::ostringstream bnd;
    bnd << "t,h_threshold\n";
    for (std::size_t i = 0; i < boundary.size(); ++i)
        for (double h : boundary[i])
            bnd << format_double(sol.t_grid[i]) << "," << format_double(h) << "\n";
    write_text_file(opt.out_dir / "hjb_boundary.csv", bnd.str());
}

namespace {

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
    std::istringstream in(read_text_file(path));
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

}  // namespace

void run_report(const fs::path& run_dir, const PipelineOptions& opt) {
    const fs::path snell_path = run_dir / "snell_summary.json";
    const fs::path drift_path = run_dir / "drift_report.json";
    const fs::path sweep_path = run_dir / "sweep.csv";
    const fs::path hist_path = run_dir / "histogram.csv";

    std::string missing;
    for (const fs::path& p : {snell_path, drift_path, sweep_path, hist_path})
        if (!fs::exists(p)) missing += (missing.empty() ? "" : ", ") + p.string();
    if (!missing.empty()) throw config_error("report: missing inputs: " + missing);

    const json snell_summary = json::parse(read_text_file(snell_path));
    const json drift_report = json::parse(read_text_file(drift_path));

    json report;
    report["value"] = snell_summary.at("value");
    report["mean_tau"] = snell_summary.at("mean_tau");
    report["tau_bound"] = drift_report.at("tau_bound");
    report["condition_holds"] = drift_report.at("condition_holds");

    json pareto = json::array();
    double asti_depth_at_snell_c = -1.0;
    const double snell_c = snell_summary.at("cost_c").get<double>();
    const auto sweep_rows = read_csv(sweep_path);
    for (std::size_t i = 1; i < sweep_rows.size(); ++i) {
        const auto& r = sweep_rows[i];
        if (r.size() != 5) throw config_error("report: malformed sweep.csv row");
        json row = {{"c_or_threshold", std::stod(r[0])}, {"method", r[1]},
                    {"mean_depth", std::stod(r[2])},     {"mean_macs", std::stod(r[3])},
                    {"accuracy", std::stod(r[4])}};
        if (r[1] == "asti" && std::stod(r[0]) == snell_c) asti_depth_at_snell_c = std::stod(r[2]);
        pareto.push_back(std::move(row));
    }
    report["pareto"] = std::move(pareto);

    json hist = json::array();
    const auto hist_rows = read_csv(hist_path);
    for (std::size_t i = 1; i < hist_rows.size(); ++i) {
        if (hist_rows[i].size() != 2) throw config_error("report: malformed histogram.csv row");
        hist.push_back({{"tau", std::stoi(hist_rows[i][0])},
                        {"count", std::stol(hist_rows[i][1])}});
    }
    report["histogram"] = std::move(hist);

    // ASTI's loop cannot return tau = 0 while the Snell rule can; surface the
    // gap instead of correcting it.
    if (asti_depth_at_snell_c >= 0.0)
        report["asti_minus_snell_mean_tau"] =
            asti_depth_at_snell_c - snell_summary.at("mean_tau").get<double>();
    report["asti_tau_floor_note"] =
        "asti stop depths start at 1 by construction; snell tau_star may be 0";

    fs::create_directories(opt.out_dir);
    write_text_file(opt.out_dir / "report.json", report.dump(2) + "\n");
}

}  // namespace stopnet
