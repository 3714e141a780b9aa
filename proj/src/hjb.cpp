#include "stopnet/hjb.hpp"

#include <algorithm>
#include <cmath>

#include "stopnet/errors.hpp"
#include "stopnet/reward.hpp"
#include "stopnet/snell.hpp"

namespace stopnet {

double HjbProblem::f(double h, double t) const {
    (void)t;
    switch (dynamics) {
        case HjbDynamics::Zero: return 0.0;
        case HjbDynamics::ConstantA: return dynamics_a;
        case HjbDynamics::SaturatingTanh: return dynamics_a * std::tanh(h);
    }
    return 0.0;
}

double HjbProblem::g(double h) const {
    switch (terminal) {
        case HjbTerminal::ClampRamp: return std::clamp(h, 0.0, 1.0);
        case HjbTerminal::Logistic: return 1.0 / (1.0 + std::exp(-terminal_scale * h));
    }
    return 0.0;
}

namespace {

void validate(const HjbProblem& p) {
    if (p.n_h < 3) throw config_error("hjb: n_h must be >= 3");
    if (p.n_t < 2) throw config_error("hjb: n_t must be >= 2");
    if (!(p.h_lo < p.h_hi)) throw config_error("hjb: h_lo must be < h_hi");
    if (p.horizon <= 0.0) throw config_error("hjb: horizon must be > 0");
    if (p.cost <= 0.0) throw config_error("hjb: cost rate must be > 0");
}

double interp(const Vec& values, double h_lo, double dh, double p) {
    const std::size_t n = values.size();
    double r = (p - h_lo) / dh;
    r = std::clamp(r, 0.0, static_cast<double>(n - 1));
    const auto j = std::min(static_cast<std::size_t>(r), n - 2);
    const double w = r - static_cast<double>(j);
    return values[j] * (1.0 - w) + values[j + 1] * w;
}

}  // namespace

HjbSolution solve(const HjbProblem& problem) {
    validate(problem);
    const auto nh = static_cast<std::size_t>(problem.n_h);
    const auto nt = static_cast<std::size_t>(problem.n_t);
    const double dh = problem.dh();
    const double dt = problem.dt();

    HjbSolution sol;
    sol.h_grid.resize(nh);
    for (std::size_t j = 0; j < nh; ++j)
        sol.h_grid[j] = problem.h_lo + dh * static_cast<double>(j);
    sol.t_grid.resize(nt + 1);
    for (std::size_t i = 0; i <= nt; ++i) sol.t_grid[i] = dt * static_cast<double>(i);

    sol.value.assign(nt + 1, Vec(nh, 0.0));
    sol.stop.assign(nt + 1, std::vector<std::uint8_t>(nh, 0));

    for (std::size_t j = 0; j < nh; ++j) {
        sol.value[nt][j] = problem.g(sol.h_grid[j]);
        sol.stop[nt][j] = 1;
    }

    for (std::size_t i = nt; i-- > 0;) {
        const double t = sol.t_grid[i];
        for (std::size_t j = 0; j < nh; ++j) {
            const double h = sol.h_grid[j];
            const double step = problem.f(h, t) * dt;
            if (std::abs(step) > dh * (1.0 + 1e-12))
                throw config_error(
                    "hjb: characteristic crosses more than one cell per step; "
                    "increase n_h resolution or use a smaller time step (larger n_t)");
            const double p = std::clamp(h + step, problem.h_lo, problem.h_hi);
            const double cont = interp(sol.value[i + 1], problem.h_lo, dh, p) - problem.cost * dt;
            const double stop_val = problem.g(h);
            if (stop_val >= cont) {
                sol.value[i][j] = stop_val;
                sol.stop[i][j] = 1;
            } else {
                sol.value[i][j] = cont;
                sol.stop[i][j] = 0;
            }
        }
    }
    return sol;
}

std::vector<std::vector<double>> extract_boundary(const HjbSolution& solution) {
    std::vector<std::vector<double>> boundary(solution.t_grid.size());
    for (std::size_t i = 0; i < solution.t_grid.size(); ++i) {
        for (std::size_t j = 0; j + 1 < solution.h_grid.size(); ++j) {
            if (solution.stop[i][j] != solution.stop[i][j + 1])
                boundary[i].push_back(0.5 * (solution.h_grid[j] + solution.h_grid[j + 1]));
        }
    }
    return boundary;
}

double snell_consistency(const HjbProblem& problem, int n_layers) {
    if (n_layers < 2) throw usage_error("snell_consistency: n_layers must be >= 2");
    const HjbSolution sol = solve(problem);
    const double layer_dt = problem.horizon / static_cast<double>(n_layers);
    const double layer_cost = problem.cost * layer_dt;

    double max_dev = 0.0;
    for (std::size_t j = 0; j < sol.h_grid.size(); ++j) {
        // Euler chain from this start node; g is closed-form so the chain
        // needs no grid and no clamping.
        RewardPath path;
        path.cost = layer_cost;
        double h = sol.h_grid[j];
        for (int l = 0; l <= n_layers; ++l) {
            path.utilities.push_back(problem.g(h));
            path.rewards.push_back(path.utilities.back() - layer_cost * static_cast<double>(l));
            if (l < n_layers) h += problem.f(h, layer_dt * static_cast<double>(l)) * layer_dt;
        }
        const SnellPath sp = snell_backward(path, 0.0);
        max_dev = std::max(max_dev, std::abs(sp.value - sol.value[0][j]));
    }
    return max_dev;
}

HjbDynamics parse_hjb_dynamics(const std::string& name) {
    if (name == "zero") return HjbDynamics::Zero;
    if (name == "constant-a") return HjbDynamics::ConstantA;
    if (name == "saturating-tanh") return HjbDynamics::SaturatingTanh;
    throw config_error("unknown hjb dynamics: " + name);
}

HjbTerminal parse_hjb_terminal(const std::string& name) {
    if (name == "clamp-ramp") return HjbTerminal::ClampRamp;
    if (name == "logistic") return HjbTerminal::Logistic;
    throw config_error("unknown hjb terminal utility: " + name);
}

std::string to_string(HjbDynamics kind) {
    switch (kind) {
        case HjbDynamics::Zero: return "zero";
        case HjbDynamics::ConstantA: return "constant-a";
        case HjbDynamics::SaturatingTanh: return "saturating-tanh";
    }
    return "?";
}

std::string to_string(HjbTerminal kind) {
    switch (kind) {
        case HjbTerminal::ClampRamp: return "clamp-ramp";
        case HjbTerminal::Logistic: return "logistic";
    }
    return "?";
}

}  // namespace stopnet
