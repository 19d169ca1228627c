#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "dbn/model_io.hpp"

using namespace dbn;

namespace {

namespace fs = std::filesystem;

Model sample_model(std::uint64_t seed) {
    Rng rng(seed);
    Model model;
    model.stack.layers = {RbmParams::gaussian_init(4, 3, rng, 1.0),
                          RbmParams::gaussian_init(3, 2, rng, 1.0)};
    model.stack.layers[0].a << 0.1, -0.2, 0.3, 1e-300;
    model.stack.head = SoftmaxHead::zeros(2, 12);
    for (int i = 0; i < 2; ++i)
        for (int c = 0; c < 12; ++c) model.stack.head->w_out(i, c) = rng.gaussian();
    Normalizer norm;
    norm.min = Vector::Zero(4);
    norm.max = Vector::Ones(4);
    norm.max(2) = 3.14159;
    model.normalizer = norm;
    return model;
}

std::string read_bytes(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_CASE("model save/load/save produces byte-identical files") {
    fs::path dir = fs::temp_directory_path() / ("dbn_io_test_" + std::to_string(::getpid()));
    fs::create_directories(dir);

    Model model = sample_model(30);
    fs::path first = dir / "a.dbn";
    fs::path second = dir / "b.dbn";
    save_model(model, first.string());
    Model loaded = load_model(first.string());
    save_model(loaded, second.string());
    CHECK(read_bytes(first) == read_bytes(second));

    CHECK(loaded.stack.layers.size() == 2);
    CHECK(loaded.stack.layers[0].w == model.stack.layers[0].w);
    CHECK(loaded.stack.layers[0].a == model.stack.layers[0].a);
    CHECK(loaded.stack.head->w_out == model.stack.head->w_out);
    CHECK(loaded.normalizer->max == model.normalizer->max);
    CHECK(loaded.class_names == model.class_names);
    fs::remove_all(dir);
}

TEST_CASE("model without normalizer or head round-trips") {
    fs::path dir = fs::temp_directory_path() / ("dbn_io_bare_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    Model model;
    Rng rng(31);
    model.stack.layers = {RbmParams::gaussian_init(3, 3, rng, 0.5)};
    fs::path p = dir / "bare.dbn";
    save_model(model, p.string());
    Model loaded = load_model(p.string());
    CHECK_FALSE(loaded.normalizer.has_value());
    CHECK_FALSE(loaded.stack.head.has_value());
    CHECK(loaded.stack.layers[0].w == model.stack.layers[0].w);
    fs::remove_all(dir);
}

TEST_CASE("load_model rejects wrong magic and truncated files") {
    fs::path dir = fs::temp_directory_path() / ("dbn_io_bad_" + std::to_string(::getpid()));
    fs::create_directories(dir);

    fs::path bad = dir / "bad.dbn";
    {
        std::ofstream f(bad, std::ios::binary);
        f << "NOPE and some trailing bytes";
    }
    CHECK_THROWS_AS(load_model(bad.string()), parse_error);

    Model model = sample_model(32);
    fs::path good = dir / "good.dbn";
    save_model(model, good.string());
    std::string bytes = read_bytes(good);
    fs::path trunc = dir / "trunc.dbn";
    {
        std::ofstream f(trunc, std::ios::binary);
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    }
    CHECK_THROWS_AS(load_model(trunc.string()), io_error);
    CHECK_THROWS_AS(load_model((dir / "missing.dbn").string()), io_error);
    fs::remove_all(dir);
}

TEST_CASE("text export mentions the architecture") {
    Model model = sample_model(33);
    std::ostringstream out;
    export_model_text(model, out);
    std::string text = out.str();
    CHECK(text.find("layer_sizes: 4 3 2") != std::string::npos);
    CHECK(text.find("head w_out") != std::string::npos);
}
