#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stopnet/linalg.hpp"

namespace stopnet {

enum class HjbDynamics {
    Zero,            // f(h, t) = 0
    ConstantA,       // f(h, t) = a
    SaturatingTanh,  // f(h, t) = a * tanh(h)
};

enum class HjbTerminal {
    ClampRamp,  // g(h) = clamp(h, 0, 1)
    Logistic,   // g(h) = 1 / (1 + exp(-scale * h))
};

// Continuous-depth stopping problem on a 1-D state interval: evolve dh/dt =
// f(h, t), pay cost rate c per unit depth, harvest g on stopping, horizon T.
struct HjbProblem {
    double h_lo = -2.0;
    double h_hi = 2.0;
    int n_h = 201;   // grid nodes, endpoints included
    int n_t = 100;   // time steps; slices 0..n_t
    double horizon = 1.0;
    double cost = 0.1;
    HjbDynamics dynamics = HjbDynamics::ConstantA;
    double dynamics_a = 1.0;
    HjbTerminal terminal = HjbTerminal::ClampRamp;
    double terminal_scale = 1.0;

    double dh() const { return (h_hi - h_lo) / static_cast<double>(n_h - 1); }
    double dt() const { return horizon / static_cast<double>(n_t); }
    double f(double h, double t) const;
    double g(double h) const;
};

// Gridded value function with continuation/stopping labels. The backward
// sweep follows the characteristic one step and interpolates, which under
// deterministic dynamics is exactly the discrete Snell recursion:
//
//   V(h, t) = max(g(h), V~(h + f(h,t) dt, t + dt) - c dt).
//
// Ties label S, matching the discrete early-stopping convention.
struct HjbSolution {
    Vec h_grid;                                // n_h nodes
    Vec t_grid;                                // n_t + 1 slices
    std::vector<Vec> value;                    // [time][node]
    std::vector<std::vector<std::uint8_t>> stop;  // 1 = stopping region S
};

HjbSolution solve(const HjbProblem& problem);

// Per time slice, midpoints between adjacent nodes whose C/S label differs.
// Slices with a uniform label yield an empty list.
std::vector<std::vector<double>> extract_boundary(const HjbSolution& solution);

// Discrete-layer analogue: n_layers Euler steps of the same dynamics with
// per-layer cost c*T/L, solved per start node with the Snell recursion; the
// returned number is the max absolute deviation from V(., 0).
double snell_consistency(const HjbProblem& problem, int n_layers);

HjbDynamics parse_hjb_dynamics(const std::string& name);
HjbTerminal parse_hjb_terminal(const std::string& name);
std::string to_string(HjbDynamics kind);
std::string to_string(HjbTerminal kind);

}  // namespace stopnet
