#include "lutpim/errors.hpp"
#include "lutpim/network.hpp"
#include "lutpim/weights.hpp"
#include "lutpim/zoo.hpp"

#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <string>

using namespace lutpim;

TEST_CASE("conv output extent") {
    CHECK(conv_output_extent(32, 3, 1, 0) == 30);
    CHECK(conv_output_extent(224, 11, 4, 2) == 55);
    CHECK(conv_output_extent(7, 3, 2, 1) == 4);
    CHECK_THROWS_AS(conv_output_extent(2, 3, 1, 0), ShapeError);
}

TEST_CASE("dims text") {
    CHECK(parse_dims("224x224x3") == Shape{3, 224, 224});
    CHECK(format_dims(Shape{1, 32, 32}) == "32x32x1");
    CHECK_THROWS(parse_dims("32x32"));
    CHECK_THROWS(parse_dims("0x32x1"));
}

TEST_CASE("tinymalnet shapes") {
    const NetworkSpec net = tinymalnet();
    CHECK(net.input == kMalwareInput);
    CHECK(net.layer("conv1").output_shape == Shape{8, 30, 30});
    CHECK(net.layer("pool1").output_shape == Shape{8, 15, 15});
    CHECK(net.layer("conv2").output_shape == Shape{16, 13, 13});
    CHECK(net.layer("pool2").output_shape == Shape{16, 6, 6});
    CHECK(net.num_classes() == 2);
    CHECK(net.layers.back().kind == LayerKind::Softmax);
}

TEST_CASE("every zoo network chains at benchmark and malware inputs") {
    for (std::string_view name : zoo_names()) {
        for (Shape in : {kBenchmarkInput, kMalwareInput}) {
            NetworkSpec net = zoo_network(name, in);
            CHECK_NOTHROW(net.validate());
            CHECK(net.num_classes() == 2);
            CHECK(net.layers.back().kind == LayerKind::Softmax);
        }
    }
    CHECK(zoo_names().size() == 6);
    CHECK_THROWS_AS(zoo_network("lenet", kBenchmarkInput), UnsupportedOperation);
    CHECK(is_known_network("tinymalnet"));
    CHECK(!is_known_network("lenet"));
}

TEST_CASE("residual networks reference earlier layers") {
    const NetworkSpec net = resnet18(kBenchmarkInput);
    int adds = 0;
    for (const auto& l : net.layers) {
        if (l.kind == LayerKind::ResidualAdd) {
            ++adds;
            CHECK(l.skip_index >= 0);
            CHECK(net.layers[static_cast<std::size_t>(l.skip_index)].output_shape == l.output_shape);
        }
    }
    CHECK(adds == 8);
}

TEST_CASE("config round trip") {
    for (std::string_view name : zoo_names()) {
        const NetworkSpec net = zoo_network(name, kBenchmarkInput);
        const NetworkSpec back = NetworkSpec::from_config(net.to_config());
        CHECK(back.to_config() == net.to_config());
        CHECK(back.layers.size() == net.layers.size());
    }
}

TEST_CASE("broken topologies are rejected") {
    NetworkSpec net = tinymalnet();
    net.layers[3].in_channels = 3;  // conv2 expects 8 input channels
    CHECK_THROWS_AS(net.infer_shapes(), ShapeError);

    NetworkSpec dangling = tinymalnet();
    dangling.layers[1].input = "nowhere";
    CHECK_THROWS_AS(dangling.infer_shapes(), ShapeError);

    NetworkSpec no_scores = tinymalnet();
    no_scores.layers.resize(3);
    CHECK_THROWS_AS(no_scores.infer_shapes(), ShapeError);
    CHECK_NOTHROW(no_scores.infer_shapes(false));

    CHECK_THROWS(NetworkSpec::from_config("name = x\ninput = 8x8x1\n[layer a]\nkind = bogus\n"));
}

namespace {

WeightSet sample_weights() {
    WeightSet w;
    w.add({"conv.weight", {2, 1, 3, 3}, DType::Real32, std::vector<float>(18, 0.25f), {}, std::nullopt});
    w.add({"conv.bias", {2}, DType::Real32, {-1.5f, 3.0e-7f}, {}, std::nullopt});
    w.add({"q4", {3}, DType::Q4, {}, {0, 7, 15}, QuantParams{0.5, 8, 4, true}});
    w.add({"q8", {2, 2}, DType::Q8, {}, {0, 1, 128, 255}, QuantParams{0.01, 3, 8, false}});
    w.add({"q16", {2}, DType::Q16, {}, {0, 65535}, QuantParams{1e-4, 32768, 16, true}});
    w.add({"input.act", {0}, DType::Q8, {}, {}, QuantParams{1.0 / 255.0, 0, 8, false}});
    return w;
}

} // namespace

TEST_CASE("weight container round trip is bit exact") {
    const WeightSet w = sample_weights();
    const std::string bytes = encode_weights(w);
    CHECK(bytes.substr(0, 5) == std::string("PIMW\x01", 5));
    const WeightSet back = decode_weights(bytes);
    CHECK(back == w);
    CHECK(encode_weights(back) == bytes);

    const auto path = std::filesystem::temp_directory_path() / "lutpim_weights_test.bin";
    save_weights(w, path);
    CHECK(load_weights(path) == w);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_weights(path), IoError);
}

TEST_CASE("weight container errors") {
    const std::string bytes = encode_weights(sample_weights());

    std::string bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(decode_weights(bad_magic), FormatError);

    std::string bad_version = bytes;
    bad_version[4] = 0x02;
    try {
        decode_weights(bad_version);
        FAIL("unknown version accepted");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("version") != std::string::npos);
    }

    // Cut inside the q8 tensor's data.
    const auto cut = bytes.find("q16") - 3;
    try {
        decode_weights(std::string_view(bytes).substr(0, cut));
        FAIL("truncated container accepted");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("q8") != std::string::npos);
    }

    WeightSet out_of_range;
    out_of_range.add({"x", {1}, DType::Q4, {}, {16}, QuantParams{1.0, 0, 4, false}});
    CHECK_THROWS(decode_weights(encode_weights(out_of_range)));
}

TEST_CASE("weights are validated against the network") {
    const NetworkSpec net = tinymalnet();
    CHECK(weight_dims(net.layer("conv1")) == std::vector<std::uint32_t>{8, 1, 3, 3});
    CHECK(weight_dims(net.layer("fc")) == std::vector<std::uint32_t>{2, 576});
    WeightSet w;
    try {
        validate_weights(net, w);
        FAIL("empty weight set accepted");
    } catch (const ShapeError& e) {
        CHECK(std::string(e.what()).find("conv1.weight") != std::string::npos);
    }
}
