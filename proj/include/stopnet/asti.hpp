#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "stopnet/reward.hpp"

namespace stopnet {

// Outcome of one adaptive-depth inference. The stop decision at depth l+1 is
// made after computing h_{l+1}, so only states h_0..h_tau are ever touched;
// layers_computed counts the residual blocks actually executed and always
// equals stop_depth.
struct AstiResult {
    int prediction = 0;
    int stop_depth = 0;      // tau in [1, L]
    Vec utilities;           // g(h_0)..g(h_tau)
    long layers_computed = 0;
    double macs = 0.0;       // exact multiply-add count for this sample
};

struct SweepRow {
    double c_or_threshold = 0.0;
    std::string method;  // "asti" | "static" | "entropy"
    double mean_depth = 0.0;
    double mean_macs = 0.0;
    double accuracy = 0.0;
    std::size_t count = 0;
};

// Multiply-add counts per architectural unit; the hardware-independent
// compute metric used by the sweep reports.
double stem_macs(const ResidualNet& net);
double block_macs(const ResidualNet& net);
double head_macs(const ResidualNet& net);

// One-step-lookahead rule: walk the trunk and stop at the first layer whose
// utility gain over the previous layer is at most c; fall through to the full
// depth otherwise. Label-free, so the utility must be the confidence kind.
AstiResult asti_infer(const ResidualNet& net, const UtilitySpec& spec, const Vec& x, double cost);

std::vector<SweepRow> sweep(const ResidualNet& net, const UtilitySpec& spec, const Dataset& data,
                            const std::vector<double>& c_values, int threads = 1);

SweepRow static_exit_baseline(const ResidualNet& net, const Dataset& data, int exit_layer,
                              int threads = 1);

SweepRow entropy_exit_baseline(const ResidualNet& net, const Dataset& data, double threshold,
                               int threads = 1);

// Stop-depth counts, index tau-1 for tau in [1, L]; counts sum to data size.
std::vector<std::size_t> exit_histogram(const ResidualNet& net, const UtilitySpec& spec,
                                        const Dataset& data, double cost, int threads = 1);

}  // namespace stopnet
