#include "stopnet/asti.hpp"

#include <algorithm>
#include <cmath>

#include "stopnet/errors.hpp"
#include "stopnet/parallel.hpp"

namespace stopnet {

double stem_macs(const ResidualNet& net) {
    return static_cast<double>(net.stem.w.rows) * static_cast<double>(net.stem.w.cols);
}

double block_macs(const ResidualNet& net) {
    return 2.0 * static_cast<double>(net.width) * static_cast<double>(net.d_hidden);
}

double head_macs(const ResidualNet& net) {
    return static_cast<double>(net.n_classes) * static_cast<double>(net.width);
}

namespace {

struct HeadEval {
    int argmax = 0;
    double confidence = 0.0;
};

HeadEval eval_head(const ResidualNet& net, const StateVec& h) {
    const Vec p = softmax(affine(net.head, h));
    HeadEval out;
    out.argmax = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
    out.confidence = p[static_cast<std::size_t>(out.argmax)];
    return out;
}

}  // namespace

AstiResult asti_infer(const ResidualNet& net, const UtilitySpec& spec, const Vec& x, double cost) {
    if (cost <= 0.0) throw usage_error("asti_infer: cost must be > 0");
    if (spec.kind != UtilityKind::Confidence)
        throw usage_error("asti_infer: inference is label-free; confidence utility required");

    AstiResult out;
    StateVec h = embed(net, x);
    HeadEval cur = eval_head(net, h);
    out.utilities.push_back(cur.confidence);

    for (int l = 0; l <= net.depth - 2; ++l) {
        h = forward_step(net, l, h).first;
        ++out.layers_computed;
        const HeadEval next = eval_head(net, h);
        out.utilities.push_back(next.confidence);
        if (next.confidence - cur.confidence <= cost) {
            out.prediction = next.argmax;
            out.stop_depth = l + 1;
            out.macs = stem_macs(net) + static_cast<double>(out.stop_depth) * block_macs(net) +
                       static_cast<double>(out.stop_depth + 1) * head_macs(net);
            return out;
        }
        cur = next;
    }

    // Default exit: the loop never checks the final block's gain.
    h = forward_step(net, net.depth - 1, h).first;
    ++out.layers_computed;
    const HeadEval last = eval_head(net, h);
    out.utilities.push_back(last.confidence);
    out.prediction = last.argmax;
    out.stop_depth = net.depth;
    out.macs = stem_macs(net) + static_cast<double>(net.depth) * block_macs(net) +
               static_cast<double>(net.depth + 1) * head_macs(net);
    return out;
}

namespace {

SweepRow reduce_rows(const std::string& method, double knob, const std::vector<int>& depths,
                     const std::vector<double>& macs, const std::vector<int>& correct) {
    SweepRow row;
    row.method = method;
    row.c_or_threshold = knob;
    row.count = depths.size();
    double sd = 0.0, sm = 0.0, sc = 0.0;
    for (std::size_t i = 0; i < depths.size(); ++i) {
        sd += depths[i];
        sm += macs[i];
        sc += correct[i];
    }
    row.mean_depth = sd / static_cast<double>(row.count);
    row.mean_macs = sm / static_cast<double>(row.count);
    row.accuracy = sc / static_cast<double>(row.count);
    return row;
}

}  // namespace

std::vector<SweepRow> sweep(const ResidualNet& net, const UtilitySpec& spec, const Dataset& data,
                            const std::vector<double>& c_values, int threads) {
    if (data.empty()) throw usage_error("sweep: empty dataset");
    if (c_values.empty()) throw usage_error("sweep: no cost values");
    for (double c : c_values)
        if (c <= 0.0) throw usage_error("sweep: cost values must be > 0");

    std::vector<SweepRow> rows;
    rows.reserve(c_values.size());
    for (double c : c_values) {
        std::vector<int> depths(data.size()), correct(data.size());
        std::vector<double> macs(data.size());
        parallel_for(data.size(), threads, [&](std::size_t i) {
            const AstiResult r = asti_infer(net, spec, data[i].x, c);
            depths[i] = r.stop_depth;
            macs[i] = r.macs;
            correct[i] = r.prediction == data[i].label ? 1 : 0;
        });
        rows.push_back(reduce_rows("asti", c, depths, macs, correct));
    }
    return rows;
}

SweepRow static_exit_baseline(const ResidualNet& net, const Dataset& data, int exit_layer,
                              int threads) {
    if (data.empty()) throw usage_error("static_exit_baseline: empty dataset");
    if (exit_layer < 1 || exit_layer > net.depth)
        throw usage_error("static_exit_baseline: exit layer out of [1, L]");
    std::vector<int> depths(data.size(), exit_layer), correct(data.size());
    const double m =
        stem_macs(net) + static_cast<double>(exit_layer) * block_macs(net) + head_macs(net);
    std::vector<double> macs(data.size(), m);
    parallel_for(data.size(), threads, [&](std::size_t i) {
        StateVec h = embed(net, data[i].x);
        for (int l = 0; l < exit_layer; ++l) h = forward_step(net, l, h).first;
        correct[i] = eval_head(net, h).argmax == data[i].label ? 1 : 0;
    });
    return reduce_rows("static", static_cast<double>(exit_layer), depths, macs, correct);
}

SweepRow entropy_exit_baseline(const ResidualNet& net, const Dataset& data, double threshold,
                               int threads) {
    if (data.empty()) throw usage_error("entropy_exit_baseline: empty dataset");
    if (threshold <= 0.0) throw usage_error("entropy_exit_baseline: threshold must be > 0");
    std::vector<int> depths(data.size()), correct(data.size());
    std::vector<double> macs(data.size());
    parallel_for(data.size(), threads, [&](std::size_t i) {
        StateVec h = embed(net, data[i].x);
        int tau = net.depth;
        int pred = 0;
        for (int l = 1; l <= net.depth; ++l) {
            h = forward_step(net, l - 1, h).first;
            const Vec p = softmax(affine(net.head, h));
            pred = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
            if (entropy_nats(p) < threshold) {
                tau = l;
                break;
            }
        }
        depths[i] = tau;
        macs[i] = stem_macs(net) + static_cast<double>(tau) * (block_macs(net) + head_macs(net));
        correct[i] = pred == data[i].label ? 1 : 0;
    });
    return reduce_rows("entropy", threshold, depths, macs, correct);
}

std::vector<std::size_t> exit_histogram(const ResidualNet& net, const UtilitySpec& spec,
                                        const Dataset& data, double cost, int threads) {
    if (data.empty()) throw usage_error("exit_histogram: empty dataset");
    std::vector<int> depths(data.size());
    parallel_for(data.size(), threads, [&](std::size_t i) {
        depths[i] = asti_infer(net, spec, data[i].x, cost).stop_depth;
    });
    std::vector<std::size_t> counts(static_cast<std::size_t>(net.depth), 0);
    for (int d : depths) counts[static_cast<std::size_t>(d - 1)]++;
    return counts;
}

}  // namespace stopnet
