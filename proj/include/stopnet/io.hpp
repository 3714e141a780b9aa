#pragma once

#include <filesystem>
#include <string>

#include "stopnet/dynamics.hpp"

namespace stopnet {

// Weights travel as a single JSON document with row-major numeric arrays:
// {"depth","width","d_hidden","n_classes","layers":[{"w1","b1","w2","b2"}...],
//  "head":{"w","b"},"stem":{"w","b"}}. Doubles are written shortest-round-trip,
// so save/load is value-exact and reruns are byte-identical.
void save_weights(const ResidualNet& net, const std::filesystem::path& path);
ResidualNet load_weights(const std::filesystem::path& path);

// Datasets are CSV with header x_0..x_{d-1},label.
void save_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

// %.17g: round-trips doubles and keeps every emitted file reproducible.
std::string format_double(double v);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace stopnet
