#include "stopnet/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "stopnet/errors.hpp"

namespace stopnet {

using nlohmann::json;

namespace {

json mat_to_json(const Mat& m) { return json(m.a); }

Mat mat_from_json(const json& j, std::size_t rows, std::size_t cols, const std::string& what) {
    if (!j.is_array() || j.size() != rows * cols)
        throw config_error("weights: field " + what + " must be a flat array of " +
                           std::to_string(rows * cols) + " numbers");
    Mat m(rows, cols);
    for (std::size_t i = 0; i < m.a.size(); ++i) m.a[i] = j[i].get<double>();
    return m;
}

Vec vec_from_json(const json& j, std::size_t n, const std::string& what) {
    if (!j.is_array() || j.size() != n)
        throw config_error("weights: field " + what + " must be an array of " + std::to_string(n) +
                           " numbers");
    Vec v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = j[i].get<double>();
    return v;
}

}  // namespace

void save_weights(const ResidualNet& net, const std::filesystem::path& path) {
    validate(net);
    json j;
    j["depth"] = net.depth;
    j["width"] = net.width;
    j["d_hidden"] = net.d_hidden;
    j["n_classes"] = net.n_classes;
    json layers = json::array();
    for (const Block& blk : net.layers) {
        json l;
        l["w1"] = mat_to_json(blk.w1);
        l["b1"] = json(blk.b1);
        l["w2"] = mat_to_json(blk.w2);
        l["b2"] = json(blk.b2);
        layers.push_back(std::move(l));
    }
    j["layers"] = std::move(layers);
    j["head"] = {{"w", mat_to_json(net.head.w)}, {"b", json(net.head.b)}};
    j["stem"] = {{"w", mat_to_json(net.stem.w)}, {"b", json(net.stem.b)}};
    write_text_file(path, j.dump(2) + "\n");
}

ResidualNet load_weights(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw config_error("weights: " + path.string() + ": " + e.what());
    }
    ResidualNet net;
    try {
        net.depth = j.at("depth").get<int>();
        net.width = j.at("width").get<int>();
        net.d_hidden = j.at("d_hidden").get<int>();
        net.n_classes = j.at("n_classes").get<int>();
        if (net.depth <= 0 || net.width <= 0 || net.d_hidden <= 0 || net.n_classes <= 0)
            throw config_error("weights: dimensions must be positive");
        const auto d = static_cast<std::size_t>(net.width);
        const auto dh = static_cast<std::size_t>(net.d_hidden);
        const auto& layers = j.at("layers");
        if (!layers.is_array() || static_cast<int>(layers.size()) != net.depth)
            throw config_error("weights: layers array must have `depth` entries");
        for (int l = 0; l < net.depth; ++l) {
            const auto& lj = layers[static_cast<std::size_t>(l)];
            Block blk;
            blk.w1 = mat_from_json(lj.at("w1"), dh, d, "layers.w1");
            blk.b1 = vec_from_json(lj.at("b1"), dh, "layers.b1");
            blk.w2 = mat_from_json(lj.at("w2"), d, dh, "layers.w2");
            blk.b2 = vec_from_json(lj.at("b2"), d, "layers.b2");
            net.layers.push_back(std::move(blk));
        }
        const auto k = static_cast<std::size_t>(net.n_classes);
        net.head.w = mat_from_json(j.at("head").at("w"), k, d, "head.w");
        net.head.b = vec_from_json(j.at("head").at("b"), k, "head.b");
        const auto& stem_w = j.at("stem").at("w");
        if (!stem_w.is_array() || stem_w.size() % d != 0)
            throw config_error("weights: stem.w size must be a multiple of width");
        const std::size_t d_in = stem_w.size() / d;
        net.stem.w = mat_from_json(stem_w, d, d_in, "stem.w");
        net.stem.b = vec_from_json(j.at("stem").at("b"), d, "stem.b");
    } catch (const json::exception& e) {
        throw config_error("weights: " + path.string() + ": " + e.what());
    }
    validate(net);
    return net;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
    if (data.empty()) throw usage_error("save_dataset: empty dataset");
    std::ostringstream out;
    const std::size_t dim = data.front().x.size();
    for (std::size_t j = 0; j < dim; ++j) out << "x_" << j << ",";
    out << "label\n";
    for (const Sample& s : data) {
        if (s.x.size() != dim) throw usage_error("save_dataset: inconsistent dimensions");
        for (double v : s.x) out << format_double(v) << ",";
        out << s.label << "\n";
    }
    write_text_file(path, out.str());
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::istringstream in(read_text_file(path));
    std::string line;
    if (!std::getline(in, line)) throw config_error("dataset: " + path.string() + ": empty file");
    std::size_t dim = 0;
    {
        std::stringstream header(line);
        std::string col;
        std::vector<std::string> cols;
        while (std::getline(header, col, ',')) cols.push_back(col);
        if (cols.empty() || cols.back() != "label")
            throw config_error("dataset: last column must be `label`");
        dim = cols.size() - 1;
        for (std::size_t j = 0; j < dim; ++j)
            if (cols[j] != "x_" + std::to_string(j))
                throw config_error("dataset: expected column x_" + std::to_string(j));
    }
    Dataset data;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string cell;
        Sample s;
        s.x.reserve(dim);
        for (std::size_t j = 0; j <= dim; ++j) {
            if (!std::getline(row, cell, ','))
                throw config_error("dataset: line " + std::to_string(line_no) + ": too few fields");
            try {
                if (j < dim)
                    s.x.push_back(std::stod(cell));
                else
                    s.label = std::stoi(cell);
            } catch (const std::exception&) {
                throw config_error("dataset: line " + std::to_string(line_no) + ": bad number `" +
                                   cell + "`");
            }
        }
        data.push_back(std::move(s));
    }
    if (data.empty()) throw config_error("dataset: " + path.string() + ": no rows");
    return data;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot open for writing: " + path.string());
    out << content;
    if (!out) throw config_error("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace stopnet
