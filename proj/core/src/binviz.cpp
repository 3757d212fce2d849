#include "lutpim/binviz.hpp"

#include "lutpim/errors.hpp"
#include "lutpim/quantizer.hpp"
#include "lutpim/rng.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <sstream>

namespace lutpim {
namespace {

constexpr std::size_t kKiB = 1024;
constexpr std::size_t kMotifLength = 64;
constexpr std::size_t kMinSampleBytes = 2 * kKiB;
constexpr std::size_t kMaxSampleBytes = 64 * kKiB;

std::array<std::uint8_t, kMotifLength> make_motif(Family f) {
    // Alternating very bright / very dark bytes: a high-contrast texture that survives resizing.
    DeterministicRng rng(mix_seed(0x4D4F54494655ULL, static_cast<std::uint64_t>(f)));
    std::array<std::uint8_t, kMotifLength> m{};
    for (std::size_t i = 0; i < kMotifLength; ++i) {
        const bool bright = ((i + static_cast<std::size_t>(f)) % 3) != 0;
        m[i] = bright ? static_cast<std::uint8_t>(rng.uniform(0xE0, 0xFF))
                      : static_cast<std::uint8_t>(rng.uniform(0x00, 0x0F));
    }
    return m;
}

const std::array<std::array<std::uint8_t, kMotifLength>, 6>& motif_table() {
    static const auto table = [] {
        std::array<std::array<std::uint8_t, kMotifLength>, 6> t{};
        for (Family f : kMalwareFamilies) {
            t[static_cast<std::size_t>(f)] = make_motif(f);
        }
        return t;
    }();
    return table;
}

// Opcode-like byte alphabet for synthetic code sections.
constexpr std::array<std::uint8_t, 24> kCodeBytes{0x48, 0x89, 0x8B, 0x83, 0xC7, 0x45, 0x55, 0x5D,
                                                  0xC3, 0xE8, 0x0F, 0x85, 0x84, 0x74, 0x75, 0x31,
                                                  0xC0, 0x01, 0x24, 0x08, 0x10, 0x44, 0x4C, 0x66};

void fill_code(std::vector<std::uint8_t>& out, std::size_t n, DeterministicRng& rng) {
    for (std::size_t i = 0; i < n; ++i) {
        if (rng.uniform(0, 9) == 0) {
            out.push_back(static_cast<std::uint8_t>(rng.uniform(0x00, 0x7F)));
        } else {
            out.push_back(kCodeBytes[rng.uniform(0, kCodeBytes.size() - 1)]);
        }
    }
}

void fill_text(std::vector<std::uint8_t>& out, std::size_t n, DeterministicRng& rng) {
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = rng.uniform(0, 99);
        if (r < 15) {
            out.push_back(' ');
        } else if (r < 18) {
            out.push_back(0x00);
        } else {
            out.push_back(static_cast<std::uint8_t>(rng.uniform('a', 'z')));
        }
    }
}

void fill_data(std::vector<std::uint8_t>& out, std::size_t n, DeterministicRng& rng) {
    // Little-endian 32-bit small integers.
    while (n > 0) {
        const std::uint32_t v = static_cast<std::uint32_t>(rng.uniform(0, 0x3FF));
        for (int b = 0; b < 4 && n > 0; ++b, --n) {
            out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
        }
    }
}

std::vector<std::uint8_t> benign_stream(std::size_t size, DeterministicRng& rng) {
    std::vector<std::uint8_t> out;
    out.reserve(size);
    // Header: magic plus sparse small fields.
    out.push_back('M');
    out.push_back('Z');
    while (out.size() < std::min<std::size_t>(size, 256)) {
        out.push_back(rng.uniform(0, 5) == 0 ? static_cast<std::uint8_t>(rng.uniform(1, 0x40)) : 0);
    }
    while (out.size() < size) {
        const std::size_t remaining = size - out.size();
        const std::size_t len = std::min<std::size_t>(remaining, rng.uniform(512, 8 * kKiB));
        switch (rng.uniform(0, 5)) {
        case 0:
        case 1:
        case 2: fill_code(out, len, rng); break;
        case 3: fill_text(out, len, rng); break;
        case 4: fill_data(out, len, rng); break;
        default: out.insert(out.end(), len, 0x00); break;
        }
    }
    return out;
}

void plant_motif(std::vector<std::uint8_t>& bytes, std::size_t offset, Family f) {
    const auto& m = motif_table()[static_cast<std::size_t>(f)];
    std::copy(m.begin(), m.end(), bytes.begin() + static_cast<std::ptrdiff_t>(offset));
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\r' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '\t')) {
        s.remove_suffix(1);
    }
    return s;
}

template <typename T>
T parse_number(std::string_view s, std::string_view what) {
    T v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw FormatError(fmt::format("bad {} '{}'", what, s));
    }
    return v;
}

} // namespace

void GrayImage::validate() const {
    if (width == 0 || height == 0) {
        throw ShapeError("image sides must be positive");
    }
    if (pixels.size() != width * height) {
        throw ShapeError(fmt::format("image has {} pixels, expected {}x{}", pixels.size(), width, height));
    }
}

std::size_t image_width_for(std::size_t byte_length) {
    if (byte_length < 10 * kKiB) return 32;
    if (byte_length < 30 * kKiB) return 64;
    if (byte_length < 60 * kKiB) return 128;
    if (byte_length < 100 * kKiB) return 256;
    if (byte_length < 200 * kKiB) return 384;
    if (byte_length < 500 * kKiB) return 512;
    if (byte_length < 1000 * kKiB) return 768;
    return 1024;
}

GrayImage bytes_to_image(std::span<const std::uint8_t> payload) {
    if (payload.empty()) {
        throw DomainError("cannot convert an empty payload");
    }
    GrayImage img;
    img.width = image_width_for(payload.size());
    img.height = (payload.size() + img.width - 1) / img.width;
    img.pixels.assign(img.width * img.height, 0);
    std::copy(payload.begin(), payload.end(), img.pixels.begin());
    return img;
}

std::vector<std::uint8_t> image_to_bytes(const GrayImage& img, std::size_t byte_length) {
    img.validate();
    if (byte_length > img.pixels.size()) {
        throw DomainError("byte length exceeds the image");
    }
    return {img.pixels.begin(), img.pixels.begin() + static_cast<std::ptrdiff_t>(byte_length)};
}

GrayImage resize_to(const GrayImage& img, std::size_t side) {
    img.validate();
    if (side == 0) {
        throw DomainError("resize side must be positive");
    }
    GrayImage out;
    out.width = side;
    out.height = side;
    out.pixels.resize(side * side);

    auto coord = [side](std::size_t dst, std::size_t src_len) {
        if (side == 1) {
            return 0.0;
        }
        return static_cast<double>(dst * (src_len - 1)) / static_cast<double>(side - 1);
    };
    for (std::size_t y = 0; y < side; ++y) {
        const double sy = coord(y, img.height);
        const auto y0 = static_cast<std::size_t>(sy);
        const std::size_t y1 = std::min(y0 + 1, img.height - 1);
        const double fy = sy - static_cast<double>(y0);
        for (std::size_t x = 0; x < side; ++x) {
            const double sx = coord(x, img.width);
            const auto x0 = static_cast<std::size_t>(sx);
            const std::size_t x1 = std::min(x0 + 1, img.width - 1);
            const double fx = sx - static_cast<double>(x0);
            const double top = (1.0 - fx) * img.at(x0, y0) + fx * img.at(x1, y0);
            const double bottom = (1.0 - fx) * img.at(x0, y1) + fx * img.at(x1, y1);
            const double v = (1.0 - fy) * top + fy * bottom;
            out.pixels[y * side + x] = static_cast<std::uint8_t>(std::clamp(round_half_even(v), 0.0, 255.0));
        }
    }
    return out;
}

std::string encode_pgm(const GrayImage& img) {
    img.validate();
    std::string out = fmt::format("P5\n{} {}\n255\n", img.width, img.height);
    out.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
    return out;
}

GrayImage decode_pgm(std::string_view data) {
    // Header tokens separated by whitespace; comments are not produced by encode_pgm.
    std::size_t pos = 0;
    auto next_token = [&]() -> std::string_view {
        while (pos < data.size() && std::isspace(static_cast<unsigned char>(data[pos]))) {
            ++pos;
        }
        const std::size_t start = pos;
        while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) {
            ++pos;
        }
        return data.substr(start, pos - start);
    };
    if (next_token() != "P5") {
        throw FormatError("not a binary PGM (missing P5 magic)");
    }
    GrayImage img;
    img.width = parse_number<std::size_t>(next_token(), "PGM width");
    img.height = parse_number<std::size_t>(next_token(), "PGM height");
    if (parse_number<unsigned>(next_token(), "PGM maxval") != 255) {
        throw FormatError("only maxval 255 PGM files are supported");
    }
    ++pos; // single whitespace byte after maxval
    const std::size_t n = img.width * img.height;
    if (img.width == 0 || img.height == 0 || pos > data.size() || data.size() - pos != n) {
        throw FormatError("PGM pixel data truncated or oversized");
    }
    img.pixels.assign(reinterpret_cast<const std::uint8_t*>(data.data() + pos),
                      reinterpret_cast<const std::uint8_t*>(data.data() + pos + n));
    return img;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
    write_file_text(path, encode_pgm(img));
}

GrayImage read_pgm(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return decode_pgm({reinterpret_cast<const char*>(bytes.data()), bytes.size()});
}

std::vector<float> normalized_pixels(const GrayImage& img) {
    std::vector<float> out;
    out.reserve(img.pixels.size());
    for (std::uint8_t p : img.pixels) {
        out.push_back(static_cast<float>(p) / 255.0F);
    }
    return out;
}

std::string_view to_string(Label l) { return l == Label::Benign ? "benign" : "malware"; }

std::string_view to_string(Family f) {
    switch (f) {
    case Family::None: return "none";
    case Family::Backdoor: return "backdoor";
    case Family::Rootkit: return "rootkit";
    case Family::Trojan: return "trojan";
    case Family::Virus: return "virus";
    case Family::Worm: return "worm";
    }
    return "none";
}

Label parse_label(std::string_view s) {
    if (s == "benign") return Label::Benign;
    if (s == "malware") return Label::Malware;
    throw FormatError(fmt::format("unknown label '{}'", s));
}

Family parse_family(std::string_view s) {
    for (Family f : {Family::None, Family::Backdoor, Family::Rootkit, Family::Trojan, Family::Virus,
                     Family::Worm}) {
        if (to_string(f) == s) {
            return f;
        }
    }
    throw FormatError(fmt::format("unknown malware family '{}'", s));
}

std::span<const std::uint8_t> family_motif(Family f) {
    if (f == Family::None) {
        return {};
    }
    return motif_table()[static_cast<std::size_t>(f)];
}

CorpusSample generate_sample(Label label, Family family, std::uint64_t sample_seed) {
    if ((label == Label::Benign) != (family == Family::None)) {
        throw DomainError("benign samples have family 'none' and malware samples a real family");
    }
    DeterministicRng rng(sample_seed);
    const std::size_t size = rng.uniform(kMinSampleBytes, kMaxSampleBytes);
    CorpusSample s;
    s.label = label;
    s.family = family;
    s.seed = sample_seed;
    s.bytes = benign_stream(size, rng);
    if (label == Label::Malware) {
        // A packed payload section tiled with the motif, plus scattered single copies.
        const std::size_t payload = (size * rng.uniform(25, 40) / 100) / kMotifLength * kMotifLength;
        const std::size_t start = rng.uniform(256, size - payload) / kMotifLength * kMotifLength;
        for (std::size_t off = start; off + kMotifLength <= start + payload; off += kMotifLength) {
            plant_motif(s.bytes, off, family);
        }
        const std::size_t scattered = rng.uniform(2, 6);
        for (std::size_t i = 0; i < scattered; ++i) {
            plant_motif(s.bytes, rng.uniform(256, size - kMotifLength), family);
        }
    }
    return s;
}

std::vector<CorpusSample> generate_corpus(std::size_t n_benign, std::size_t n_malware, std::uint64_t seed) {
    std::vector<CorpusSample> corpus;
    corpus.reserve(n_benign + n_malware);
    for (std::size_t i = 0; i < n_benign + n_malware; ++i) {
        const std::uint64_t s = mix_seed(seed, i);
        if (i < n_benign) {
            corpus.push_back(generate_sample(Label::Benign, Family::None, s));
        } else {
            const Family f = kMalwareFamilies[(i - n_benign) % std::size(kMalwareFamilies)];
            corpus.push_back(generate_sample(Label::Malware, f, s));
        }
    }
    return corpus;
}

GrayImage binary_to_model_image(std::span<const std::uint8_t> payload, std::size_t side) {
    return resize_to(bytes_to_image(payload), side);
}

std::string encode_manifest(std::span<const ManifestEntry> entries) {
    std::string out = "path,label,family,byte_length,seed\n";
    for (const auto& e : entries) {
        out += fmt::format("{},{},{},{},{}\n", e.path, to_string(e.label), to_string(e.family),
                           e.byte_length, e.seed);
    }
    return out;
}

std::vector<ManifestEntry> decode_manifest(std::string_view text) {
    std::vector<ManifestEntry> entries;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto eol = text.find('\n');
        const std::string_view line = trim(text.substr(0, eol));
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
        ++line_no;
        if (line.empty()) {
            continue;
        }
        if (line_no == 1) {
            if (line != "path,label,family,byte_length,seed") {
                throw FormatError("manifest header must be 'path,label,family,byte_length,seed'");
            }
            continue;
        }
        std::vector<std::string_view> f;
        std::string_view rest = line;
        while (true) {
            const auto c = rest.find(',');
            f.push_back(trim(rest.substr(0, c)));
            if (c == std::string_view::npos) break;
            rest.remove_prefix(c + 1);
        }
        if (f.size() != 5) {
            throw FormatError(fmt::format("manifest line {} needs 5 fields", line_no));
        }
        ManifestEntry e;
        e.path = std::string(f[0]);
        e.label = parse_label(f[1]);
        e.family = parse_family(f[2]);
        e.byte_length = parse_number<std::size_t>(f[3], "byte length");
        e.seed = parse_number<std::uint64_t>(f[4], "seed");
        if ((e.label == Label::Benign) != (e.family == Family::None)) {
            throw FormatError(fmt::format("manifest line {}: label and family disagree", line_no));
        }
        entries.push_back(std::move(e));
    }
    if (line_no == 0) {
        throw FormatError("empty manifest");
    }
    return entries;
}

std::vector<ManifestEntry> write_corpus(const std::filesystem::path& dir, std::span<const CorpusSample> corpus) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError(fmt::format("cannot create directory {}: {}", dir.string(), ec.message()));
    }
    std::vector<ManifestEntry> entries;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        ManifestEntry e;
        e.path = fmt::format("sample_{:05}.bin", i);
        e.label = corpus[i].label;
        e.family = corpus[i].family;
        e.byte_length = corpus[i].bytes.size();
        e.seed = corpus[i].seed;
        write_file_bytes(dir / e.path, corpus[i].bytes);
        entries.push_back(std::move(e));
    }
    write_file_text(dir / "manifest.csv", encode_manifest(entries));
    return entries;
}

std::vector<CorpusSample> read_corpus(const std::filesystem::path& manifest_path) {
    const auto raw = read_file_bytes(manifest_path);
    const auto entries = decode_manifest({reinterpret_cast<const char*>(raw.data()), raw.size()});
    const auto base = manifest_path.parent_path();
    std::vector<CorpusSample> corpus;
    corpus.reserve(entries.size());
    for (const auto& e : entries) {
        CorpusSample s;
        s.bytes = read_file_bytes(base / e.path);
        if (s.bytes.size() != e.byte_length) {
            throw FormatError(fmt::format("{}: {} bytes on disk, manifest says {}", e.path, s.bytes.size(),
                                          e.byte_length));
        }
        s.label = e.label;
        s.family = e.family;
        s.seed = e.seed;
        corpus.push_back(std::move(s));
    }
    return corpus;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError(fmt::format("cannot open {}", path.string()));
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) {
        throw IoError(fmt::format("error reading {}", path.string()));
    }
    return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    write_file_text(path, {reinterpret_cast<const char*>(bytes.data()), bytes.size()});
}

void write_file_text(const std::filesystem::path& path, std::string_view text) {
    // Write-then-rename so a failed run never leaves a partial file behind.
    auto tmp = path;
    tmp += ".partial";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError(fmt::format("cannot open {} for writing", path.string()));
        }
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!out) {
            std::error_code ignored;
            std::filesystem::remove(tmp, ignored);
            throw IoError(fmt::format("error writing {}", path.string()));
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError(fmt::format("cannot move output into place at {}", path.string()));
    }
}

} // namespace lutpim
