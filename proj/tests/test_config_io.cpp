#include <doctest.h>

#include <filesystem>

#include "stopnet/config.hpp"
#include "stopnet/errors.hpp"
#include "stopnet/io.hpp"
#include "test_util.hpp"

using namespace stopnet;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("stopnet_io_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("weights survive a save/load round trip exactly") {
    const fs::path dir = temp_dir("weights");
    const ResidualNet net = init_residual_net(4, 3, 6, 3, 5, 97);
    save_weights(net, dir / "w.json");
    const ResidualNet back = load_weights(dir / "w.json");
    CHECK(back.depth == net.depth);
    CHECK(back.width == net.width);
    CHECK(back.d_hidden == net.d_hidden);
    CHECK(back.n_classes == net.n_classes);
    CHECK(back.input_dim() == 5);
    for (int l = 0; l < net.depth; ++l) {
        CHECK(back.layers[l].w1.a == net.layers[l].w1.a);
        CHECK(back.layers[l].b1 == net.layers[l].b1);
        CHECK(back.layers[l].w2.a == net.layers[l].w2.a);
        CHECK(back.layers[l].b2 == net.layers[l].b2);
    }
    CHECK(back.head.w.a == net.head.w.a);
    CHECK(back.stem.w.a == net.stem.w.a);

    // Saving the reloaded net reproduces identical bytes.
    save_weights(back, dir / "w2.json");
    CHECK(read_text_file(dir / "w.json") == read_text_file(dir / "w2.json"));
}

TEST_CASE("weights loader rejects malformed documents") {
    const fs::path dir = temp_dir("badweights");
    write_text_file(dir / "bad.json", "{ not json");
    CHECK_THROWS_AS((void)load_weights(dir / "bad.json"), config_error);
    write_text_file(dir / "missing.json", R"({"depth":1,"width":2})");
    CHECK_THROWS_AS((void)load_weights(dir / "missing.json"), config_error);
    CHECK_THROWS_AS((void)load_weights(dir / "absent.json"), config_error);
}

TEST_CASE("dataset csv round trip") {
    const fs::path dir = temp_dir("dataset");
    DatasetSpec spec;
    spec.n_classes = 3;
    spec.dim = 4;
    spec.noise = 1.3;
    spec.count = 57;
    spec.seed = 3;
    const Dataset data = generate_dataset(spec);
    save_dataset(data, dir / "d.csv");
    const Dataset back = load_dataset(dir / "d.csv");
    REQUIRE(back.size() == data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        CHECK(back[i].x == data[i].x);  // %.17g round-trips doubles
        CHECK(back[i].label == data[i].label);
    }
    write_text_file(dir / "bad.csv", "x_0,y\n1,2\n");
    CHECK_THROWS_AS((void)load_dataset(dir / "bad.csv"), config_error);
}

TEST_CASE("run config requires seeds and rejects unknown keys") {
    using nlohmann::json;
    const json good = {
        {"model", {{"depth", 4}, {"width", 3}, {"n_classes", 2}, {"seed", 1}}},
        {"data", {{"kind", "gaussian-blobs"}, {"n", 100}, {"seed", 7}, {"dim", 3}}},
        {"reward", {{"kind", "confidence"}, {"cost_c", 0.05}}},
        {"train", {{"seed", 3}}},
    };
    const RunConfig cfg = parse_run_config(good);
    CHECK(cfg.model->d_hidden == 6);  // defaults to 2 * width
    CHECK(cfg.train->beta == 0.5);
    CHECK(cfg.train->lambda == 1.0);
    CHECK(cfg.train->schedule.kind == ScheduleKind::Quadratic);

    json missing_seed = good;
    missing_seed["data"].erase("seed");
    CHECK_THROWS_AS((void)parse_run_config(missing_seed), config_error);

    json unknown_top = good;
    unknown_top["extra"] = 1;
    CHECK_THROWS_AS((void)parse_run_config(unknown_top), config_error);

    json unknown_nested = good;
    unknown_nested["train"]["learning"] = 0.1;
    CHECK_THROWS_AS((void)parse_run_config(unknown_nested), config_error);

    json bad_schedule = good;
    bad_schedule["train"]["schedule"] = "cubic";
    CHECK_THROWS_AS((void)parse_run_config(bad_schedule), config_error);

    json bad_cost = good;
    bad_cost["reward"]["cost_c"] = 0.0;
    CHECK_THROWS_AS((void)parse_run_config(bad_cost), config_error);
}

TEST_CASE("seed override rewires every section deterministically") {
    using nlohmann::json;
    const json doc = {
        {"model", {{"seed", 1}}},
        {"data", {{"kind", "gaussian-blobs"}, {"n", 10}, {"seed", 1}}},
        {"train", {{"seed", 1}}},
    };
    RunConfig a = parse_run_config(doc);
    RunConfig b = parse_run_config(doc);
    override_seeds(a, 99);
    override_seeds(b, 99);
    CHECK(a.model->seed == b.model->seed);
    CHECK(a.data->seed == b.data->seed);
    CHECK(a.train->seed == b.train->seed);
    CHECK(a.model->seed != a.data->seed);
    CHECK(a.model->seed != 99);  // derived, not copied

    const std::string ra = resolved_config(a).dump(2);
    const std::string rb = resolved_config(b).dump(2);
    CHECK(ra == rb);
}

TEST_CASE("format_double round trips") {
    for (double v : {0.1, -1.0 / 3.0, 1e-300, 12345.6789, 0.0}) {
        CHECK(std::stod(format_double(v)) == v);
    }
}
