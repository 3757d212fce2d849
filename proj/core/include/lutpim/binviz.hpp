#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lutpim {

/// Row-major 8-bit grayscale image.
struct GrayImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;

    std::uint8_t at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
    /// Throws ShapeError if pixels.size() != width * height or a side is zero.
    void validate() const;

    friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

/// Image width for a binary of `byte_length` bytes (KB = 1024 bytes):
/// <10 KB: 32, <30: 64, <60: 128, <100: 256, <200: 384, <500: 512, <1000: 768, else 1024.
std::size_t image_width_for(std::size_t byte_length);

/// One pixel per byte, rows filled left to right, final row zero padded.
/// Throws DomainError for an empty payload.
GrayImage bytes_to_image(std::span<const std::uint8_t> payload);

/// Inverse of bytes_to_image given the original length.
std::vector<std::uint8_t> image_to_bytes(const GrayImage& img, std::size_t byte_length);

/// Corner-aligned bilinear resize to side x side, rounded half-even.
GrayImage resize_to(const GrayImage& img, std::size_t side = 32);

/// Binary PGM: "P5\n<w> <h>\n255\n" followed by the raw pixel bytes.
std::string encode_pgm(const GrayImage& img);
GrayImage decode_pgm(std::string_view data);
void write_pgm(const std::filesystem::path& path, const GrayImage& img);
GrayImage read_pgm(const std::filesystem::path& path);

/// Pixels divided by 255, row-major, as model input in [0, 1].
std::vector<float> normalized_pixels(const GrayImage& img);

enum class Label : std::uint8_t { Benign = 0, Malware = 1 };
enum class Family : std::uint8_t { None = 0, Backdoor, Rootkit, Trojan, Virus, Worm };

inline constexpr Family kMalwareFamilies[] = {Family::Backdoor, Family::Rootkit, Family::Trojan,
                                              Family::Virus, Family::Worm};

std::string_view to_string(Label l);
std::string_view to_string(Family f);
Label parse_label(std::string_view s);
Family parse_family(std::string_view s);

struct CorpusSample {
    std::vector<std::uint8_t> bytes;
    Label label = Label::Benign;
    Family family = Family::None;
    std::uint64_t seed = 0;
};

/// The fixed byte pattern a malware family plants in its samples.
std::span<const std::uint8_t> family_motif(Family f);

/// Synthetic stand-in for a real malware corpus. Sample i is generated from mix_seed(seed, i);
/// the first n_benign samples are benign, the rest cycle through the five malware families.
/// Sizes are drawn from [2 KB, 64 KB].
std::vector<CorpusSample> generate_corpus(std::size_t n_benign, std::size_t n_malware,
                                          std::uint64_t seed);

/// Single sample, reproducible from its own seed.
CorpusSample generate_sample(Label label, Family family, std::uint64_t sample_seed);

/// The 32x32 model input of a raw binary: bytes_to_image then resize_to.
GrayImage binary_to_model_image(std::span<const std::uint8_t> payload, std::size_t side = 32);

struct ManifestEntry {
    std::string path;
    Label label = Label::Benign;
    Family family = Family::None;
    std::size_t byte_length = 0;
    std::uint64_t seed = 0;
};

/// "path,label,family,byte_length,seed" lines, with that header.
std::string encode_manifest(std::span<const ManifestEntry> entries);
std::vector<ManifestEntry> decode_manifest(std::string_view text);

/// Writes sample_NNNNN.bin files and manifest.csv into `dir`; returns the manifest entries.
std::vector<ManifestEntry> write_corpus(const std::filesystem::path& dir,
                                        std::span<const CorpusSample> corpus);

/// Reads a manifest and the sample files it names (paths relative to the manifest's directory).
std::vector<CorpusSample> read_corpus(const std::filesystem::path& manifest_path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_text(const std::filesystem::path& path, std::string_view text);

} // namespace lutpim
