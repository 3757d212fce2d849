#include "lutpim/binviz.hpp"
#include "lutpim/errors.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <vector>

using namespace lutpim;

namespace {

bool contains(const std::vector<std::uint8_t>& hay, std::span<const std::uint8_t> needle) {
    return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

// Scalar corner-aligned bilinear sample, independent of the library.
double bilinear(const GrayImage& img, double sx, double sy) {
    const auto x0 = static_cast<std::size_t>(std::floor(sx));
    const auto y0 = static_cast<std::size_t>(std::floor(sy));
    const std::size_t x1 = std::min(x0 + 1, img.width - 1);
    const std::size_t y1 = std::min(y0 + 1, img.height - 1);
    const double fx = sx - static_cast<double>(x0);
    const double fy = sy - static_cast<double>(y0);
    const double top = img.at(x0, y0) * (1 - fx) + img.at(x1, y0) * fx;
    const double bot = img.at(x0, y1) * (1 - fx) + img.at(x1, y1) * fx;
    return top * (1 - fy) + bot * fy;
}

} // namespace

TEST_CASE("five-byte payload fills one padded row of width 32") {
    const std::vector<std::uint8_t> payload{0x00, 0xFF, 0x10, 0x20, 0x30};
    const GrayImage img = bytes_to_image(payload);
    CHECK(img.width == 32);
    CHECK(img.height == 1);
    CHECK(img.pixels[0] == 0);
    CHECK(img.pixels[1] == 255);
    CHECK(img.pixels[4] == 48);
    for (std::size_t i = 5; i < 32; ++i) {
        CHECK(img.pixels[i] == 0);
    }
    CHECK(image_to_bytes(img, payload.size()) == payload);
}

TEST_CASE("1024 bytes of 0x7F give a uniform 32x32 image") {
    const std::vector<std::uint8_t> payload(1024, 0x7F);
    const GrayImage img = bytes_to_image(payload);
    CHECK(img.width == 32);
    CHECK(img.height == 32);
    CHECK(std::all_of(img.pixels.begin(), img.pixels.end(), [](std::uint8_t p) { return p == 127; }));
}

TEST_CASE("width table") {
    CHECK(image_width_for(1) == 32);
    CHECK(image_width_for(10 * 1024 - 1) == 32);
    CHECK(image_width_for(10 * 1024) == 64);
    CHECK(image_width_for(20000) == 64);
    CHECK(image_width_for(30 * 1024) == 128);
    CHECK(image_width_for(60 * 1024) == 256);
    CHECK(image_width_for(100 * 1024) == 384);
    CHECK(image_width_for(200 * 1024) == 512);
    CHECK(image_width_for(500 * 1024) == 768);
    CHECK(image_width_for(1000 * 1024) == 1024);

    const std::vector<std::uint8_t> payload(20000, 1);
    const GrayImage img = bytes_to_image(payload);
    CHECK(img.width == 64);
    CHECK(img.height == 313);
    CHECK(image_to_bytes(img, payload.size()) == payload);
    CHECK_THROWS_AS(bytes_to_image(std::vector<std::uint8_t>{}), DomainError);
}

TEST_CASE("resize identity and constant images") {
    GrayImage img{32, 32, std::vector<std::uint8_t>(1024)};
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        img.pixels[i] = static_cast<std::uint8_t>(i * 7);
    }
    CHECK(resize_to(img) == img);

    for (std::size_t w : {5U, 64U, 100U}) {
        const GrayImage flat{w, 17, std::vector<std::uint8_t>(w * 17, 200)};
        const GrayImage out = resize_to(flat);
        CHECK(out.width == 32);
        CHECK(out.height == 32);
        CHECK(std::all_of(out.pixels.begin(), out.pixels.end(), [](std::uint8_t p) { return p == 200; }));
    }
}

TEST_CASE("resized checkerboard interior lies strictly between black and white") {
    GrayImage board{64, 64, std::vector<std::uint8_t>(64 * 64)};
    for (std::size_t y = 0; y < 64; ++y) {
        for (std::size_t x = 0; x < 64; ++x) {
            board.pixels[y * 64 + x] = ((x + y) % 2) ? 255 : 0;
        }
    }
    const GrayImage out = resize_to(board);
    int outside = 0;
    int off_oracle = 0;
    for (std::size_t y = 1; y < 31; ++y) {
        for (std::size_t x = 1; x < 31; ++x) {
            const std::uint8_t p = out.at(x, y);
            outside += (p == 0 || p == 255);
            const double ref = bilinear(board, x * 63.0 / 31.0, y * 63.0 / 31.0);
            off_oracle += std::abs(static_cast<double>(p) - ref) > 0.5 + 1e-9;
        }
    }
    CHECK(outside == 0);
    CHECK(off_oracle == 0);
    CHECK(out.at(0, 0) == 0);
    CHECK(out.at(31, 31) == 0);
    CHECK(out.at(31, 0) == 255);
}

TEST_CASE("corpus generation") {
    CHECK(generate_corpus(0, 0, 5).empty());

    const auto a = generate_corpus(3, 5, 11);
    const auto b = generate_corpus(3, 5, 11);
    REQUIRE(a.size() == 8);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].bytes == b[i].bytes);
        CHECK(a[i].label == b[i].label);
        CHECK(a[i].family == b[i].family);
        CHECK(a[i].bytes.size() >= 2 * 1024);
        CHECK(a[i].bytes.size() <= 64 * 1024);
    }
    CHECK(generate_corpus(3, 5, 12)[0].bytes != a[0].bytes);
}

TEST_CASE("motif presence is a perfect label oracle") {
    const auto corpus = generate_corpus(100, 100, 1);
    int wrong = 0;
    for (const auto& s : corpus) {
        if (s.label == Label::Benign) {
            CHECK(s.family == Family::None);
            for (Family f : kMalwareFamilies) {
                wrong += contains(s.bytes, family_motif(f));
            }
        } else {
            wrong += !contains(s.bytes, family_motif(s.family));
        }
    }
    CHECK(wrong == 0);
}

TEST_CASE("samples regenerate from their own seed") {
    const auto corpus = generate_corpus(2, 2, 4);
    for (const auto& s : corpus) {
        CHECK(generate_sample(s.label, s.family, s.seed).bytes == s.bytes);
    }
}

TEST_CASE("PGM encoding is bit exact") {
    const GrayImage img{3, 2, {0, 1, 2, 253, 254, 255}};
    const std::string pgm = encode_pgm(img);
    CHECK(pgm.substr(0, 11) == "P5\n3 2\n255\n");
    CHECK(pgm.size() == 11 + 6);
    CHECK(decode_pgm(pgm) == img);
    CHECK_THROWS_AS(decode_pgm("P2\n3 2\n255\n"), FormatError);
    CHECK_THROWS_AS(decode_pgm(pgm.substr(0, pgm.size() - 1)), FormatError);

    const auto dir = std::filesystem::temp_directory_path() / "lutpim_binviz_test";
    std::filesystem::create_directories(dir);
    write_pgm(dir / "x.pgm", img);
    CHECK(read_pgm(dir / "x.pgm") == img);
    std::filesystem::remove_all(dir);
}

TEST_CASE("corpus manifest round trip on disk") {
    const auto corpus = generate_corpus(2, 3, 8);
    const auto dir = std::filesystem::temp_directory_path() / "lutpim_corpus_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    const auto entries = write_corpus(dir, corpus);
    CHECK(decode_manifest(encode_manifest(entries)).size() == entries.size());
    const auto back = read_corpus(dir / "manifest.csv");
    REQUIRE(back.size() == corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        CHECK(back[i].bytes == corpus[i].bytes);
        CHECK(back[i].family == corpus[i].family);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("model input pixels are scaled into [0, 1]") {
    const GrayImage img{2, 1, {0, 255}};
    const auto v = normalized_pixels(img);
    CHECK(v[0] == 0.0f);
    CHECK(v[1] == 1.0f);
    CHECK(binary_to_model_image(std::vector<std::uint8_t>(50000, 9)).width == 32);
}
