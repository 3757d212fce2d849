#include "lutpim/weights.hpp"

#include "lutpim/binviz.hpp"
#include "lutpim/errors.hpp"

#include <bit>
#include <cstring>
#include <fmt/format.h>
#include <fmt/ranges.h>

namespace lutpim {
namespace {

constexpr std::string_view kMagic = "PIMW";
constexpr std::uint8_t kVersion = 0x01;

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

template <typename T>
void put(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

class Reader {
public:
    explicit Reader(std::string_view data) : data_(data) {}

    void set_context(std::string ctx) { context_ = std::move(ctx); }

    template <typename T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    std::string_view bytes(std::size_t n) {
        need(n);
        auto s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    bool at_end() const { return pos_ == data_.size(); }

private:
    void need(std::size_t n) const {
        if (data_.size() - pos_ < n) {
            throw FormatError(fmt::format("weight container truncated while reading {}", context_));
        }
    }

    std::string_view data_;
    std::size_t pos_ = 0;
    std::string context_ = "header";
};

} // namespace

DType dtype_for_bits(unsigned bits) {
    switch (bits) {
    case 4: return DType::Q4;
    case 8: return DType::Q8;
    case 16: return DType::Q16;
    default: throw UnsupportedOperation(fmt::format("no quantized dtype for {} bits", bits));
    }
}

unsigned bits_of(DType d) {
    switch (d) {
    case DType::Real32: return 32;
    case DType::Q4: return 4;
    case DType::Q8: return 8;
    case DType::Q16: return 16;
    }
    throw FormatError("unknown dtype");
}

std::size_t NamedTensor::element_count() const {
    std::size_t n = 1;
    for (auto d : dims) {
        n *= d;
    }
    return n;
}

void WeightSet::add(NamedTensor t) {
    for (auto& existing : tensors_) {
        if (existing.name == t.name) {
            existing = std::move(t);
            return;
        }
    }
    tensors_.push_back(std::move(t));
}

const NamedTensor* WeightSet::find(std::string_view name) const {
    for (const auto& t : tensors_) {
        if (t.name == name) {
            return &t;
        }
    }
    return nullptr;
}

const NamedTensor& WeightSet::get(std::string_view name) const {
    if (const auto* t = find(name)) {
        return *t;
    }
    throw ShapeError(fmt::format("missing tensor '{}'", name));
}

NamedTensor& WeightSet::get_mutable(std::string_view name) {
    for (auto& t : tensors_) {
        if (t.name == name) {
            return t;
        }
    }
    throw ShapeError(fmt::format("missing tensor '{}'", name));
}

std::vector<std::uint32_t> weight_dims(const LayerSpec& l) {
    auto u = [](std::size_t v) { return static_cast<std::uint32_t>(v); };
    switch (l.kind) {
    case LayerKind::Conv2d: return {u(l.out_channels), u(l.in_channels), u(l.kernel_h), u(l.kernel_w)};
    case LayerKind::DepthwiseConv2d: return {u(l.out_channels), 1, u(l.kernel_h), u(l.kernel_w)};
    case LayerKind::Dense: return {u(l.out_channels), u(l.in_channels)};
    default: return {};
    }
}

void validate_weights(const NetworkSpec& net, const WeightSet& w) {
    for (const auto& l : net.layers) {
        if (!has_weights(l.kind)) {
            continue;
        }
        const auto& weight = w.get(l.name + ".weight");
        const auto& bias = w.get(l.name + ".bias");
        const auto expect = weight_dims(l);
        auto fmt_dims = [](const std::vector<std::uint32_t>& d) { return fmt::format("[{}]", fmt::join(d, ", ")); };
        if (weight.dims != expect) {
            throw ShapeError(fmt::format("tensor '{}' has dims {}, layer expects {}", weight.name,
                                         fmt_dims(weight.dims), fmt_dims(expect)));
        }
        if (bias.dims != std::vector<std::uint32_t>{static_cast<std::uint32_t>(l.out_channels)}) {
            throw ShapeError(fmt::format("tensor '{}' has dims {}, layer expects [{}]", bias.name, fmt_dims(bias.dims),
                                         l.out_channels));
        }
        for (const NamedTensor* t : {&weight, &bias}) {
            const std::size_t stored = t->quantized() ? t->codes.size() : t->real.size();
            if (stored != t->element_count()) {
                throw ShapeError(fmt::format("tensor '{}' holds {} values for {} elements", t->name, stored,
                                             t->element_count()));
            }
        }
    }
}

std::string encode_weights(const WeightSet& w) {
    std::string out(kMagic);
    put<std::uint8_t>(out, kVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(w.tensors().size()));
    for (const auto& t : w.tensors()) {
        if (t.name.size() > 0xFFFF) {
            throw FormatError(fmt::format("tensor name too long: {}", t.name));
        }
        put<std::uint16_t>(out, static_cast<std::uint16_t>(t.name.size()));
        out += t.name;
        put<std::uint8_t>(out, static_cast<std::uint8_t>(t.dims.size()));
        for (auto d : t.dims) {
            put<std::uint32_t>(out, d);
        }
        put<std::uint8_t>(out, static_cast<std::uint8_t>(t.dtype));
        const std::size_t n = t.element_count();
        if (!t.quantized()) {
            if (t.real.size() != n) {
                throw ShapeError(fmt::format("tensor '{}' holds {} values for {} elements", t.name, t.real.size(), n));
            }
            for (float v : t.real) {
                put<float>(out, v);
            }
            continue;
        }
        if (!t.params || t.params->bits != bits_of(t.dtype)) {
            throw FormatError(fmt::format("tensor '{}' lacks matching quantization parameters", t.name));
        }
        if (t.codes.size() != n) {
            throw ShapeError(fmt::format("tensor '{}' holds {} codes for {} elements", t.name, t.codes.size(), n));
        }
        put<double>(out, t.params->scale);
        put<std::int32_t>(out, t.params->zero_point);
        put<std::uint8_t>(out, static_cast<std::uint8_t>(t.params->bits));
        for (auto q : t.codes) {
            if (q > t.params->max_code()) {
                throw DomainError(fmt::format("tensor '{}' code {} exceeds {} bits", t.name, q, t.params->bits));
            }
            if (t.dtype == DType::Q16) {
                put<std::uint16_t>(out, static_cast<std::uint16_t>(q));
            } else {
                put<std::uint8_t>(out, static_cast<std::uint8_t>(q));
            }
        }
    }
    return out;
}

WeightSet decode_weights(std::string_view bytes) {
    Reader r(bytes);
    if (bytes.size() < kMagic.size() || r.bytes(kMagic.size()) != kMagic) {
        throw FormatError("not a weight container (bad magic)");
    }
    const auto version = r.get<std::uint8_t>();
    if (version != kVersion) {
        throw FormatError(fmt::format("unsupported weight container version {}", version));
    }
    const auto count = r.get<std::uint32_t>();
    WeightSet w;
    for (std::uint32_t i = 0; i < count; ++i) {
        r.set_context(fmt::format("tensor #{} name", i));
        NamedTensor t;
        const auto len = r.get<std::uint16_t>();
        t.name = std::string(r.bytes(len));
        r.set_context(fmt::format("tensor '{}'", t.name));
        const auto rank = r.get<std::uint8_t>();
        for (std::uint8_t d = 0; d < rank; ++d) {
            t.dims.push_back(r.get<std::uint32_t>());
        }
        const auto dtype = r.get<std::uint8_t>();
        if (dtype > static_cast<std::uint8_t>(DType::Q16)) {
            throw FormatError(fmt::format("tensor '{}' has unknown dtype {}", t.name, dtype));
        }
        t.dtype = static_cast<DType>(dtype);
        const std::size_t n = t.element_count();
        if (!t.quantized()) {
            t.real.reserve(n);
            for (std::size_t k = 0; k < n; ++k) {
                t.real.push_back(r.get<float>());
            }
            w.add(std::move(t));
            continue;
        }
        QuantParams p;
        p.scale = r.get<double>();
        p.zero_point = r.get<std::int32_t>();
        p.bits = r.get<std::uint8_t>();
        p.symmetric = p.bits >= 4 && p.bits <= 16 && p.zero_point == static_cast<std::int32_t>(1U << (p.bits - 1));
        if (p.bits != bits_of(t.dtype)) {
            throw FormatError(fmt::format("tensor '{}': dtype says {} bits, parameters say {}", t.name,
                                          bits_of(t.dtype), p.bits));
        }
        try {
            p.validate();
        } catch (const DomainError& e) {
            throw FormatError(fmt::format("tensor '{}': {}", t.name, e.what()));
        }
        t.codes.reserve(n);
        for (std::size_t k = 0; k < n; ++k) {
            const std::uint32_t q = t.dtype == DType::Q16 ? r.get<std::uint16_t>() : r.get<std::uint8_t>();
            if (q > p.max_code()) {
                throw FormatError(fmt::format("tensor '{}': code {} exceeds {} bits", t.name, q, p.bits));
            }
            t.codes.push_back(q);
        }
        t.params = p;
        w.add(std::move(t));
    }
    if (!r.at_end()) {
        throw FormatError("trailing bytes after the last tensor");
    }
    return w;
}

void save_weights(const WeightSet& w, const std::filesystem::path& path) {
    write_file_text(path, encode_weights(w));
}

WeightSet load_weights(const std::filesystem::path& path) {
    const auto raw = read_file_bytes(path);
    return decode_weights({reinterpret_cast<const char*>(raw.data()), raw.size()});
}

} // namespace lutpim
