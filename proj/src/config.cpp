#include "stopnet/config.hpp"

#include <set>

#include "stopnet/errors.hpp"
#include "stopnet/io.hpp"
#include "stopnet/rng.hpp"

namespace stopnet {

using nlohmann::json;

namespace {

// Wraps one JSON object and tracks which keys were consumed; anything left
// over is a config error.
class StrictObject {
public:
    StrictObject(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j.is_object()) throw config_error(where_ + ": expected a JSON object");
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    const json& at(const std::string& key) {
        seen_.insert(key);
        if (!j_.contains(key)) throw config_error(where_ + ": missing required key `" + key + "`");
        return j_.at(key);
    }

    template <typename T>
    T get(const std::string& key) {
        try {
            return at(key).get<T>();
        } catch (const json::exception&) {
            throw config_error(where_ + ": key `" + key + "` has the wrong type");
        }
    }

    template <typename T>
    T get_or(const std::string& key, T fallback) {
        if (!has(key)) return fallback;
        return get<T>(key);
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key()))
                throw config_error(where_ + ": unknown key `" + it.key() + "`");
    }

private:
    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

ModelConfig parse_model(const json& j) {
    StrictObject o(j, "model");
    ModelConfig m;
    m.depth = o.get_or<int>("depth", 12);
    m.width = o.get_or<int>("width", 8);
    m.d_hidden = o.get_or<int>("d_hidden", 2 * m.width);
    m.n_classes = o.get_or<int>("n_classes", 2);
    m.seed = o.get<std::uint64_t>("seed");
    m.spectral_clip = o.get_or<double>("spectral_clip", 0.0);
    o.finish();
    if (m.depth < 1 || m.width < 1 || m.d_hidden < 1 || m.n_classes < 2)
        throw config_error("model: depth, width, d_hidden must be >= 1 and n_classes >= 2");
    if (m.spectral_clip < 0.0) throw config_error("model: spectral_clip must be >= 0");
    return m;
}

DatasetSpec parse_data(const json& j) {
    StrictObject o(j, "data");
    DatasetSpec d;
    d.kind = parse_data_kind(o.get<std::string>("kind"));
    d.n_classes = o.get_or<int>("n_classes", 2);
    d.dim = o.get_or<int>("dim", 2);
    d.noise = o.get_or<double>("noise", 0.5);
    d.count = o.get<int>("n");
    d.seed = o.get<std::uint64_t>("seed");
    o.finish();
    if (d.count < 1) throw config_error("data: n must be >= 1");
    if (d.n_classes < 2) throw config_error("data: n_classes must be >= 2");
    if (d.dim < 1) throw config_error("data: dim must be >= 1");
    if (d.noise < 0.0) throw config_error("data: noise must be >= 0");
    return d;
}

RewardConfig parse_reward(const json& j) {
    StrictObject o(j, "reward");
    RewardConfig r;
    r.kind = parse_utility_kind(o.get<std::string>("kind"));
    r.cost_c = o.get<double>("cost_c");
    r.ce_clamp = o.get_or<double>("ce_clamp", -10.0);
    o.finish();
    if (r.cost_c <= 0.0) throw config_error("reward: cost_c must be > 0");
    if (r.ce_clamp > 0.0) throw config_error("reward: ce_clamp must be <= 0");
    return r;
}

TrainConfig parse_train(const json& j) {
    StrictObject o(j, "train");
    TrainConfig t;
    t.epochs = o.get_or<int>("epochs", 30);
    t.batch_size = o.get_or<int>("batch_size", 64);
    t.learning_rate = o.get_or<double>("learning_rate", 0.05);
    t.momentum = o.get_or<double>("momentum", 0.9);
    t.seed = o.get<std::uint64_t>("seed");
    t.beta = o.get_or<double>("beta", 0.5);
    t.lambda = o.get_or<double>("lambda", 1.0);
    t.schedule.kind = parse_schedule_kind(o.get_or<std::string>("schedule", "quadratic"));
    t.schedule.alpha = o.get_or<double>("alpha", 1.0);
    t.val_fraction = o.get_or<double>("val_fraction", 0.2);
    if (o.has("supervised_layers")) t.supervised_layers = o.get<std::vector<int>>("supervised_layers");
    o.finish();
    if (t.epochs < 1) throw config_error("train: epochs must be >= 1");
    if (t.batch_size < 1) throw config_error("train: batch_size must be >= 1");
    if (t.learning_rate < 0.0) throw config_error("train: learning_rate must be >= 0");
    if (t.momentum < 0.0 || t.momentum >= 1.0) throw config_error("train: momentum must be in [0, 1)");
    if (t.beta < 0.0 || t.lambda < 0.0) throw config_error("train: beta and lambda must be >= 0");
    if (t.schedule.alpha <= 0.0) throw config_error("train: alpha must be > 0");
    if (t.val_fraction < 0.0 || t.val_fraction >= 1.0)
        throw config_error("train: val_fraction must lie in [0, 1)");
    return t;
}

HjbProblem parse_hjb(const json& j) {
    StrictObject o(j, "hjb");
    HjbProblem p;
    p.h_lo = o.get_or<double>("h_lo", -2.0);
    p.h_hi = o.get_or<double>("h_hi", 2.0);
    p.n_h = o.get_or<int>("n_h", 201);
    p.n_t = o.get_or<int>("n_t", 100);
    p.horizon = o.get_or<double>("horizon", 1.0);
    p.cost = o.get<double>("cost_c");
    p.dynamics = parse_hjb_dynamics(o.get_or<std::string>("dynamics", "constant-a"));
    p.dynamics_a = o.get_or<double>("dynamics_a", 1.0);
    p.terminal = parse_hjb_terminal(o.get_or<std::string>("terminal", "clamp-ramp"));
    p.terminal_scale = o.get_or<double>("terminal_scale", 1.0);
    o.finish();
    if (p.n_h < 3 || p.n_t < 2) throw config_error("hjb: need n_h >= 3 and n_t >= 2");
    if (!(p.h_lo < p.h_hi)) throw config_error("hjb: h_lo must be < h_hi");
    if (p.horizon <= 0.0) throw config_error("hjb: horizon must be > 0");
    if (p.cost <= 0.0) throw config_error("hjb: cost_c must be > 0");
    return p;
}

}  // namespace

RunConfig parse_run_config(const json& j) {
    StrictObject o(j, "config");
    RunConfig cfg;
    if (o.has("model")) cfg.model = parse_model(o.at("model"));
    if (o.has("data")) cfg.data = parse_data(o.at("data"));
    if (o.has("reward")) cfg.reward = parse_reward(o.at("reward"));
    if (o.has("train")) cfg.train = parse_train(o.at("train"));
    if (o.has("hjb")) cfg.hjb = parse_hjb(o.at("hjb"));
    o.finish();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw config_error("config: " + path.string() + ": " + e.what());
    }
    return parse_run_config(j);
}

void override_seeds(RunConfig& cfg, std::uint64_t root_seed) {
    if (cfg.model) cfg.model->seed = derive_stream(root_seed, "model");
    if (cfg.data) cfg.data->seed = derive_stream(root_seed, "data");
    if (cfg.train) cfg.train->seed = derive_stream(root_seed, "train");
}

json resolved_config(const RunConfig& cfg) {
    json j = json::object();
    if (cfg.model) {
        const ModelConfig& m = *cfg.model;
        j["model"] = {{"depth", m.depth},         {"width", m.width},
                      {"d_hidden", m.d_hidden},   {"n_classes", m.n_classes},
                      {"seed", m.seed},           {"spectral_clip", m.spectral_clip}};
    }
    if (cfg.data) {
        const DatasetSpec& d = *cfg.data;
        j["data"] = {{"kind", to_string(d.kind)}, {"n_classes", d.n_classes}, {"dim", d.dim},
                     {"noise", d.noise},          {"n", d.count},             {"seed", d.seed}};
    }
    if (cfg.reward) {
        const RewardConfig& r = *cfg.reward;
        j["reward"] = {{"kind", to_string(r.kind)}, {"cost_c", r.cost_c}, {"ce_clamp", r.ce_clamp}};
    }
    if (cfg.train) {
        const TrainConfig& t = *cfg.train;
        j["train"] = {{"epochs", t.epochs},
                      {"batch_size", t.batch_size},
                      {"learning_rate", t.learning_rate},
                      {"momentum", t.momentum},
                      {"seed", t.seed},
                      {"beta", t.beta},
                      {"lambda", t.lambda},
                      {"schedule", to_string(t.schedule.kind)},
                      {"alpha", t.schedule.alpha},
                      {"val_fraction", t.val_fraction},
                      {"supervised_layers", t.supervised_layers}};
    }
    if (cfg.hjb) {
        const HjbProblem& p = *cfg.hjb;
        j["hjb"] = {{"h_lo", p.h_lo},
                    {"h_hi", p.h_hi},
                    {"n_h", p.n_h},
                    {"n_t", p.n_t},
                    {"horizon", p.horizon},
                    {"cost_c", p.cost},
                    {"dynamics", to_string(p.dynamics)},
                    {"dynamics_a", p.dynamics_a},
                    {"terminal", to_string(p.terminal)},
                    {"terminal_scale", p.terminal_scale}};
    }
    return j;
}

namespace {

[[noreturn]] void missing_section(const char* name) {
    throw config_error(std::string("config: missing required section `") + name + "`");
}

}  // namespace

const ModelConfig& require_model(const RunConfig& cfg) {
    if (!cfg.model) missing_section("model");
    return *cfg.model;
}
const DatasetSpec& require_data(const RunConfig& cfg) {
    if (!cfg.data) missing_section("data");
    return *cfg.data;
}
const RewardConfig& require_reward(const RunConfig& cfg) {
    if (!cfg.reward) missing_section("reward");
    return *cfg.reward;
}
const TrainConfig& require_train(const RunConfig& cfg) {
    if (!cfg.train) missing_section("train");
    return *cfg.train;
}
const HjbProblem& require_hjb(const RunConfig& cfg) {
    if (!cfg.hjb) missing_section("hjb");
    return *cfg.hjb;
}

}  // namespace stopnet
