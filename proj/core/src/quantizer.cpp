#include "lutpim/quantizer.hpp"

#include "lutpim/errors.hpp"

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <fmt/format.h>
#include <functional>
#include <numeric>

namespace lutpim {
namespace {

template <typename T>
QuantParams calibrate_impl(std::span<const T> values, unsigned bits, bool symmetric) {
    if (!supported_bits(bits)) {
        throw DomainError(fmt::format("unsupported quantization width {}", bits));
    }
    if (values.empty()) {
        throw DomainError("cannot calibrate on an empty value set");
    }
    double lo = static_cast<double>(values[0]);
    double hi = lo;
    for (T v : values) {
        const double d = static_cast<double>(v);
        if (!std::isfinite(d)) {
            throw DomainError("cannot calibrate on non-finite values");
        }
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }

    QuantParams p;
    p.bits = bits;
    p.symmetric = symmetric;
    const double levels = static_cast<double>((1U << bits) - 1U);
    if (symmetric) {
        const double amax = std::max(std::abs(lo), std::abs(hi));
        p.zero_point = static_cast<std::int32_t>(1U << (bits - 1));
        p.scale = amax > 0.0 ? amax / static_cast<double>((1U << (bits - 1)) - 1U) : 1.0;
        return p;
    }
    if (lo == hi) {
        p.scale = 1.0;
    } else {
        lo = std::min(lo, 0.0);
        hi = std::max(hi, 0.0);
        p.scale = (hi - lo) / levels;
    }
    const double z = std::clamp(round_half_even(-lo / p.scale), 0.0, levels);
    p.zero_point = static_cast<std::int32_t>(z);
    return p;
}

} // namespace

bool supported_bits(unsigned bits) { return bits == 4 || bits == 8 || bits == 16; }

void QuantParams::validate() const {
    if (!supported_bits(bits)) {
        throw DomainError(fmt::format("unsupported quantization width {}", bits));
    }
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw DomainError(fmt::format("quantization scale must be positive and finite, got {}", scale));
    }
    if (zero_point < 0 || static_cast<std::uint32_t>(zero_point) > max_code()) {
        throw DomainError(fmt::format("zero point {} outside the {}-bit range", zero_point, bits));
    }
    if (symmetric && zero_point != static_cast<std::int32_t>(1U << (bits - 1))) {
        throw DomainError(fmt::format("symmetric scheme needs zero point {}", 1U << (bits - 1)));
    }
}

QuantParams calibrate(std::span<const double> values, unsigned bits, bool symmetric) {
    return calibrate_impl(values, bits, symmetric);
}

QuantParams calibrate(std::span<const float> values, unsigned bits, bool symmetric) {
    return calibrate_impl(values, bits, symmetric);
}

double round_half_even(double x) {
    // nearbyint honours the current rounding mode; pin it.
    const int saved = std::fegetround();
    if (saved != FE_TONEAREST) {
        std::fesetround(FE_TONEAREST);
    }
    const double r = std::nearbyint(x);
    if (saved != FE_TONEAREST) {
        std::fesetround(saved);
    }
    return r;
}

std::uint32_t quantize(double r, const QuantParams& p) {
    if (!std::isfinite(r)) {
        throw DomainError("cannot quantize a non-finite value");
    }
    const double q = round_half_even(r / p.scale) + static_cast<double>(p.zero_point);
    return static_cast<std::uint32_t>(std::clamp(q, 0.0, static_cast<double>(p.max_code())));
}

double dequantize(std::uint32_t q, const QuantParams& p) {
    if (q > p.max_code()) {
        throw DomainError(fmt::format("code {} is not a {}-bit value", q, p.bits));
    }
    return p.scale * static_cast<double>(static_cast<std::int64_t>(q) - p.zero_point);
}

void QuantTensor::validate() const {
    params.validate();
    const std::size_t n =
        std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
    if (n != data.size()) {
        throw ShapeError(fmt::format("tensor has {} elements but shape implies {}", data.size(), n));
    }
    for (std::uint32_t q : data) {
        if (q > params.max_code()) {
            throw DomainError(fmt::format("code {} is not a {}-bit value", q, params.bits));
        }
    }
}

QuantTensor quantize_tensor(std::span<const float> values, std::vector<std::size_t> shape,
                            const QuantParams& p) {
    QuantTensor t;
    t.params = p;
    t.shape = std::move(shape);
    t.data.reserve(values.size());
    for (float v : values) {
        t.data.push_back(quantize(v, p));
    }
    t.validate();
    return t;
}

std::vector<float> dequantize_tensor(const QuantTensor& t) {
    std::vector<float> out;
    out.reserve(t.data.size());
    for (std::uint32_t q : t.data) {
        out.push_back(static_cast<float>(dequantize(q, t.params)));
    }
    return out;
}

} // namespace lutpim
