#pragma once

#include "lutpim/binviz.hpp"
#include "lutpim/cluster.hpp"
#include "lutpim/network.hpp"
#include "lutpim/quantizer.hpp"
#include "lutpim/system.hpp"
#include "lutpim/weights.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lutpim {

/// Pixels / 255 in CHW order. Throws ShapeError unless the image is net.input (one channel).
std::vector<double> image_input(const NetworkSpec& net, const GrayImage& img);

/// Numerically stable softmax (max subtracted before exponentiation).
std::vector<double> softmax(std::span<const double> logits);

/// Real values of a tensor; quantized tensors are dequantized.
std::vector<double> real_values(const NamedTensor& t);

/// Every layer's output of one float forward pass, in layer order.
struct FloatTrace {
    std::vector<std::vector<double>> outputs;

    const std::vector<double>& result() const { return outputs.back(); }
};

/// Reference forward pass in double precision. Throws ShapeError for a wrongly sized input or
/// missing / misshapen weights.
FloatTrace forward_float(const NetworkSpec& net, const WeightSet& w, std::span<const double> input);

/// Output of the last layer (class probabilities for networks ending in softmax).
std::vector<double> infer_float(const NetworkSpec& net, const WeightSet& w, std::span<const double> input);
std::vector<double> infer_float(const NetworkSpec& net, const WeightSet& w, const GrayImage& img);

/// How the integer backend carries a layer's output.
///
/// Code: N-bit activation codes. Real: host-side reals (logits feeding softmax, softmax itself).
/// A weighted layer is Real when every consumer is a softmax (or it has none); relu, maxpool and
/// flatten inherit their input's domain; residual_add is Code.
enum class ValueDomain : std::uint8_t { Code, Real };
std::vector<ValueDomain> value_domains(const NetworkSpec& net);

/// Layer whose activation parameters describe the codes of layer `index` (-1 is the network
/// input). relu, maxpool and flatten pass codes through unchanged, so they defer to their input.
int code_params_owner(const NetworkSpec& net, int index);

/// "input.act" for -1, "<layer>.act" otherwise.
std::string activation_tensor_name(const NetworkSpec& net, int owner);

/// Parameters of the codes produced by layer `index`.
QuantParams activation_params(const NetworkSpec& net, const WeightSet& wq, int index);

/// Quantizes weights with the symmetric scheme and calibrates asymmetric activation parameters
/// over the float outputs seen on `calibration_inputs`. Biases stay real. A weighted layer read
/// only by relu layers is calibrated on its rectified values.
WeightSet quantize_model(const NetworkSpec& net, const WeightSet& real_weights,
                         std::span<const std::vector<double>> calibration_inputs, unsigned bits);

/// Bit width of a quantized model. Throws FormatError if tensors disagree or none is quantized.
unsigned model_bits(const WeightSet& wq);

/// Host-side requantization input: Sa * Sw * acc + bias, evaluated in that order.
inline double affine_output(const QuantParams& act, const QuantParams& weight, std::int64_t acc, double bias) {
    return act.scale * weight.scale * static_cast<double>(acc) + bias;
}

/// Unsigned dot products through one cluster's mac8 datapath.
///
/// Codes up to 8 bits go through one pass (4-bit codes zero-extended). 16-bit codes are split
/// into bytes and run as four passes with separate accumulators, recombined on the host.
class LutDotUnit {
public:
    LutDotUnit();

    /// sum(a[i] * w[i]). Throws AccumulatorOverflow when a pass leaves 32 bits.
    std::uint64_t dot(std::span<const std::uint32_t> a, std::span<const std::uint32_t> w, unsigned bits);

    const Cluster& cluster() const { return cluster_; }
    std::uint64_t mac8_calls() const { return cluster_.mac_count(); }

private:
    Cluster cluster_;
};

/// Element-wise comparisons on LUT cores: CMP4 for relu, a MAX4 nibble tree for maxpool.
class LutElementwiseUnit {
public:
    LutElementwiseUnit();

    /// a > b, compared nibble by nibble from the most significant end.
    bool greater(std::uint32_t a, std::uint32_t b, unsigned bits);

    /// max(q, zero_point) as a code: relu in the code domain.
    std::uint32_t relu(std::uint32_t q, std::uint32_t zero_point, unsigned bits);

    /// Maximum of a window. Per nibble, most significant first, a MAX4 reduction tree finds the
    /// top nibble among the remaining candidates and CMP4 drops the candidates below it.
    std::uint32_t max(std::span<const std::uint32_t> values, unsigned bits);

    std::uint64_t lookup_count() const { return cmp_.lookup_count() + max_.lookup_count(); }

private:
    LutCore cmp_;
    LutCore max_;
    std::vector<std::uint32_t> candidates_;
    std::vector<std::uint8_t> nibbles_;
};

struct LutResult {
    /// Last layer output: class probabilities for networks ending in softmax.
    std::vector<double> output;
    /// Reals fed to the final softmax (or the last real-domain weighted layer output).
    std::vector<double> logits;
    /// Zero-point-corrected integer sums of the last weighted layer.
    std::vector<std::int64_t> accumulators;
    /// Codes of every Code-domain layer; empty for Real-domain layers.
    std::vector<std::vector<std::uint32_t>> codes;
    EnergyLedger ledger;
    std::uint64_t mac8_calls = 0;
};

/// Integer inference with every conv / dense multiply executed by mac8.
///
/// Per output: acc = sum(qa*qw) - Zw*sum(qa) - Za*sum(qw) + K*Za*Zw over all K window
/// positions (zero padding enters as qa = Za). The cluster computes sum(qa*qw); the three
/// correction sums and the requantization run on the host. The ledger charges mac8 invocations
/// and the transfers of layer_transfers().
///
/// Throws UnsupportedOperation for a precision outside {4, 8, 16}, FormatError when the model's
/// width differs from cfg.precision_bits, AccumulatorOverflow when a window is too long.
LutResult infer_lut(const NetworkSpec& net, const WeightSet& wq, std::span<const double> input,
                    const SystemConfig& cfg);
LutResult infer_lut(const NetworkSpec& net, const WeightSet& wq, const GrayImage& img, const SystemConfig& cfg);

} // namespace lutpim
