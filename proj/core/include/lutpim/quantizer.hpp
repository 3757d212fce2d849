#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace lutpim {

/// Affine parameters of r = S * (q - Z) for N-bit unsigned codes.
struct QuantParams {
    double scale = 1.0;
    std::int32_t zero_point = 0;
    unsigned bits = 8;
    bool symmetric = false;

    std::uint32_t max_code() const { return (1U << bits) - 1U; }

    /// Throws DomainError unless S > 0, N in {4, 8, 16}, Z in [0, 2^N - 1]
    /// and, for the symmetric scheme, Z = 2^(N-1).
    void validate() const;

    friend bool operator==(const QuantParams&, const QuantParams&) = default;
};

bool supported_bits(unsigned bits);

/// Min-max calibration.
///
/// Asymmetric: the observed range is widened to include 0, then S = (max - min) / (2^N - 1)
/// and Z = clamp(round(-min / S), 0, 2^N - 1). A single-valued input keeps its own value as
/// the range and gets S = 1.
/// Symmetric: S = max|v| / (2^(N-1) - 1), Z = 2^(N-1); S = 1 when every value is 0.
///
/// Throws DomainError for empty or non-finite input or an unsupported width.
QuantParams calibrate(std::span<const double> values, unsigned bits, bool symmetric);
QuantParams calibrate(std::span<const float> values, unsigned bits, bool symmetric);

/// Round-half-even to the nearest integer.
double round_half_even(double x);

/// q = clamp(round_half_even(r / S) + Z, 0, 2^N - 1). Throws DomainError for non-finite r.
std::uint32_t quantize(double r, const QuantParams& p);

/// S * (q - Z). Throws DomainError if q is not an N-bit code.
double dequantize(std::uint32_t q, const QuantParams& p);

/// N-bit codes with their shape and parameters.
struct QuantTensor {
    std::vector<std::uint32_t> data;
    std::vector<std::size_t> shape;
    QuantParams params;

    /// Throws ShapeError / DomainError when an invariant is broken.
    void validate() const;
};

QuantTensor quantize_tensor(std::span<const float> values, std::vector<std::size_t> shape,
                            const QuantParams& p);
std::vector<float> dequantize_tensor(const QuantTensor& t);

} // namespace lutpim
