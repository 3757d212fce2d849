#pragma once

#include "lutpim/network.hpp"
#include "lutpim/quantizer.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lutpim {

enum class DType : std::uint8_t { Real32 = 0, Q4 = 1, Q8 = 2, Q16 = 3 };

DType dtype_for_bits(unsigned bits);
unsigned bits_of(DType d);

/// One stored tensor. Real tensors use `real`; quantized ones use `codes` plus `params`.
struct NamedTensor {
    std::string name;
    std::vector<std::uint32_t> dims;
    DType dtype = DType::Real32;
    std::vector<float> real;
    std::vector<std::uint32_t> codes;
    std::optional<QuantParams> params;

    std::size_t element_count() const;
    bool quantized() const { return dtype != DType::Real32; }

    friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

/// Per-layer tensors. Naming: "<layer>.weight", "<layer>.bias", and for quantized models the
/// activation parameters "<layer>.act" / "input.act" as zero-element quantized tensors.
///
/// Layouts: conv [out, in, kh, kw]; depthwise [C, 1, kh, kw]; dense [out, in]; bias [out].
class WeightSet {
public:
    void add(NamedTensor t);
    const NamedTensor* find(std::string_view name) const;
    /// Throws ShapeError naming the missing tensor.
    const NamedTensor& get(std::string_view name) const;
    NamedTensor& get_mutable(std::string_view name);

    const std::vector<NamedTensor>& tensors() const { return tensors_; }

    friend bool operator==(const WeightSet&, const WeightSet&) = default;

private:
    std::vector<NamedTensor> tensors_;
};

/// Expected weight dims for a layer with weights.
std::vector<std::uint32_t> weight_dims(const LayerSpec& layer);

/// Every conv/dense layer has correctly shaped weight and bias tensors.
/// Throws ShapeError naming the first offending tensor.
void validate_weights(const NetworkSpec& net, const WeightSet& w);

/// Little-endian container: "PIMW", version 0x01, u32 tensor count; per tensor u16 name
/// length + name, u8 rank, u32 dims, u8 dtype, then for quantized dtypes f64 S, i32 Z, u8 N,
/// then raw data (f32 per real element, one byte per q4 / q8 code, u16 per q16 code).
std::string encode_weights(const WeightSet& w);

/// Throws FormatError on bad magic, unknown version, truncation (naming the tensor) or
/// inconsistent quantization fields.
WeightSet decode_weights(std::string_view bytes);

void save_weights(const WeightSet& w, const std::filesystem::path& path);
WeightSet load_weights(const std::filesystem::path& path);

} // namespace lutpim
