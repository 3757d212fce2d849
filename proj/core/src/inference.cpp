#include "lutpim/inference.hpp"

#include "layer_terms.hpp"
#include "lutpim/errors.hpp"
#include "lutpim/perf_model.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>

namespace lutpim {
namespace {

std::vector<std::vector<int>> consumers_of(const NetworkSpec& net) {
    std::vector<std::vector<int>> out(net.layers.size());
    for (std::size_t j = 0; j < net.layers.size(); ++j) {
        const LayerSpec& l = net.layers[j];
        if (l.input_index >= 0) {
            out[static_cast<std::size_t>(l.input_index)].push_back(static_cast<int>(j));
        }
        if (l.kind == LayerKind::ResidualAdd && l.skip_index >= 0 && l.skip_index != l.input_index) {
            out[static_cast<std::size_t>(l.skip_index)].push_back(static_cast<int>(j));
        }
    }
    return out;
}

bool only_consumed_by(const NetworkSpec& net, const std::vector<int>& consumers, LayerKind kind) {
    return std::all_of(consumers.begin(), consumers.end(),
                       [&](int j) { return net.layers[static_cast<std::size_t>(j)].kind == kind; });
}

const LayerSpec& at(const NetworkSpec& net, int index) { return net.layers[static_cast<std::size_t>(index)]; }

void check_input(const NetworkSpec& net, std::span<const double> input) {
    if (input.size() != net.input.size()) {
        throw ShapeError(fmt::format("input has {} values, network '{}' expects {} ({})", input.size(), net.name,
                                     net.input.size(), format_dims(net.input)));
    }
}

void check_size(const NamedTensor& t, std::size_t expected) {
    const std::size_t held = t.quantized() ? t.codes.size() : t.real.size();
    if (held != expected || t.element_count() != expected) {
        throw ShapeError(fmt::format("tensor '{}' holds {} values, layer needs {}", t.name, held, expected));
    }
}

template <typename Fn>
void for_each_output(const Shape& o, Fn&& fn) {
    std::size_t k = 0;
    for (std::size_t c = 0; c < o.c; ++c) {
        for (std::size_t y = 0; y < o.h; ++y) {
            for (std::size_t x = 0; x < o.w; ++x) {
                fn(k++, c, y, x);
            }
        }
    }
}

std::uint32_t nibble(std::uint32_t v, unsigned k) { return (v >> (4 * k)) & 0xFU; }

} // namespace

std::vector<double> image_input(const NetworkSpec& net, const GrayImage& img) {
    img.validate();
    if (net.input.c != 1 || net.input.h != img.height || net.input.w != img.width) {
        throw ShapeError(fmt::format("image is {}x{}x1, network '{}' expects {}", img.height, img.width, net.name,
                                     format_dims(net.input)));
    }
    const auto px = normalized_pixels(img);
    return {px.begin(), px.end()};
}

std::vector<double> softmax(std::span<const double> logits) {
    if (logits.empty()) {
        return {};
    }
    const double m = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - m);
        sum += out[i];
    }
    for (double& v : out) {
        v /= sum;
    }
    return out;
}

std::vector<double> real_values(const NamedTensor& t) {
    if (!t.quantized()) {
        return {t.real.begin(), t.real.end()};
    }
    if (!t.params) {
        throw FormatError(fmt::format("tensor '{}' is quantized but has no parameters", t.name));
    }
    std::vector<double> out;
    out.reserve(t.codes.size());
    for (auto q : t.codes) {
        out.push_back(dequantize(q, *t.params));
    }
    return out;
}

FloatTrace forward_float(const NetworkSpec& net, const WeightSet& w, std::span<const double> input) {
    net.validate();
    check_input(net, input);
    const std::vector<double> in0(input.begin(), input.end());
    FloatTrace trace;
    trace.outputs.resize(net.layers.size());
    auto values_of = [&](int idx) -> const std::vector<double>& {
        return idx < 0 ? in0 : trace.outputs[static_cast<std::size_t>(idx)];
    };

    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const LayerSpec& l = net.layers[i];
        const auto& in = values_of(l.input_index);
        auto& out = trace.outputs[i];
        out.assign(l.output_shape.size(), 0.0);
        switch (l.kind) {
        case LayerKind::Conv2d:
        case LayerKind::DepthwiseConv2d:
        case LayerKind::Dense: {
            const auto& wt = w.get(l.name + ".weight");
            const auto& bt = w.get(l.name + ".bias");
            if (wt.dims != weight_dims(l)) {
                throw ShapeError(fmt::format("tensor '{}' does not match layer '{}'", wt.name, l.name));
            }
            check_size(wt, wt.element_count());
            check_size(bt, l.out_channels);
            const auto wv = real_values(wt);
            const auto bv = real_values(bt);
            for_each_output(l.output_shape, [&](std::size_t k, std::size_t c, std::size_t y, std::size_t x) {
                double acc = bv[c];
                detail::for_each_term(l, c, y, x, [&](std::ptrdiff_t idx, std::size_t widx) {
                    if (idx != detail::kPadded) {
                        acc += in[static_cast<std::size_t>(idx)] * wv[widx];
                    }
                });
                out[k] = acc;
            });
            break;
        }
        case LayerKind::MaxPool2d:
            for_each_output(l.output_shape, [&](std::size_t k, std::size_t c, std::size_t y, std::size_t x) {
                double m = -std::numeric_limits<double>::infinity();
                detail::for_each_pool_input(l, c, y, x, [&](std::size_t idx) { m = std::max(m, in[idx]); });
                out[k] = m;
            });
            break;
        case LayerKind::Relu:
            for (std::size_t k = 0; k < in.size(); ++k) {
                out[k] = std::max(0.0, in[k]);
            }
            break;
        case LayerKind::Flatten: out = in; break;
        case LayerKind::Softmax: out = softmax(in); break;
        case LayerKind::ResidualAdd: {
            const auto& rhs = values_of(l.skip_index);
            for (std::size_t k = 0; k < in.size(); ++k) {
                out[k] = in[k] + rhs[k];
            }
            break;
        }
        }
    }
    return trace;
}

std::vector<double> infer_float(const NetworkSpec& net, const WeightSet& w, std::span<const double> input) {
    return forward_float(net, w, input).result();
}

std::vector<double> infer_float(const NetworkSpec& net, const WeightSet& w, const GrayImage& img) {
    return infer_float(net, w, image_input(net, img));
}

std::vector<ValueDomain> value_domains(const NetworkSpec& net) {
    const auto consumers = consumers_of(net);
    std::vector<ValueDomain> dom(net.layers.size(), ValueDomain::Code);
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const LayerSpec& l = net.layers[i];
        switch (l.kind) {
        case LayerKind::Conv2d:
        case LayerKind::DepthwiseConv2d:
        case LayerKind::Dense:
            dom[i] = only_consumed_by(net, consumers[i], LayerKind::Softmax) ? ValueDomain::Real : ValueDomain::Code;
            break;
        case LayerKind::Relu:
        case LayerKind::MaxPool2d:
        case LayerKind::Flatten:
            dom[i] = l.input_index < 0 ? ValueDomain::Code : dom[static_cast<std::size_t>(l.input_index)];
            break;
        case LayerKind::ResidualAdd: dom[i] = ValueDomain::Code; break;
        case LayerKind::Softmax: dom[i] = ValueDomain::Real; break;
        }
    }
    return dom;
}

int code_params_owner(const NetworkSpec& net, int index) {
    while (index >= 0) {
        const LayerSpec& l = at(net, index);
        if (l.kind != LayerKind::Relu && l.kind != LayerKind::MaxPool2d && l.kind != LayerKind::Flatten) {
            break;
        }
        index = l.input_index;
    }
    if (index >= 0 && at(net, index).kind == LayerKind::Softmax) {
        throw UnsupportedOperation(fmt::format("layer '{}' carries reals, not codes", at(net, index).name));
    }
    return index;
}

std::string activation_tensor_name(const NetworkSpec& net, int owner) {
    return owner < 0 ? std::string("input.act") : at(net, owner).name + ".act";
}

QuantParams activation_params(const NetworkSpec& net, const WeightSet& wq, int index) {
    const auto name = activation_tensor_name(net, code_params_owner(net, index));
    const NamedTensor& t = wq.get(name);
    if (!t.params) {
        throw FormatError(fmt::format("tensor '{}' carries no quantization parameters", name));
    }
    return *t.params;
}

WeightSet quantize_model(const NetworkSpec& net, const WeightSet& real_weights,
                         std::span<const std::vector<double>> calibration_inputs, unsigned bits) {
    if (!supported_bits(bits)) {
        throw UnsupportedOperation(fmt::format("unsupported precision {} bits", bits));
    }
    if (calibration_inputs.empty()) {
        throw DomainError("activation calibration needs at least one input");
    }
    net.validate();
    validate_weights(net, real_weights);

    const auto dom = value_domains(net);
    const auto consumers = consumers_of(net);
    const DType dtype = dtype_for_bits(bits);
    WeightSet out;

    auto act_tensor = [&](std::string name, const QuantParams& p) {
        NamedTensor t;
        t.name = std::move(name);
        t.dims = {0};
        t.dtype = dtype;
        t.params = p;
        out.add(std::move(t));
    };

    std::vector<double> pooled;
    for (const auto& x : calibration_inputs) {
        check_input(net, x);
        pooled.insert(pooled.end(), x.begin(), x.end());
    }
    act_tensor("input.act", calibrate(std::span<const double>(pooled), bits, false));

    std::vector<FloatTrace> traces;
    traces.reserve(calibration_inputs.size());
    for (const auto& x : calibration_inputs) {
        traces.push_back(forward_float(net, real_weights, x));
    }

    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const LayerSpec& l = net.layers[i];
        if (has_weights(l.kind)) {
            const auto wv = real_values(real_weights.get(l.name + ".weight"));
            const QuantParams wp = calibrate(std::span<const double>(wv), bits, true);
            NamedTensor wt;
            wt.name = l.name + ".weight";
            wt.dims = weight_dims(l);
            wt.dtype = dtype;
            wt.params = wp;
            wt.codes.reserve(wv.size());
            for (double v : wv) {
                wt.codes.push_back(quantize(v, wp));
            }
            out.add(std::move(wt));

            NamedTensor bt;
            bt.name = l.name + ".bias";
            bt.dims = {static_cast<std::uint32_t>(l.out_channels)};
            for (double v : real_values(real_weights.get(l.name + ".bias"))) {
                bt.real.push_back(static_cast<float>(v));
            }
            out.add(std::move(bt));
        }
        const bool owns_codes = dom[i] == ValueDomain::Code && (has_weights(l.kind) || l.kind == LayerKind::ResidualAdd);
        if (!owns_codes) {
            continue;
        }
        const bool rectified = has_weights(l.kind) && !consumers[i].empty() &&
                               only_consumed_by(net, consumers[i], LayerKind::Relu);
        pooled.clear();
        for (const auto& t : traces) {
            for (double v : t.outputs[i]) {
                pooled.push_back(rectified ? std::max(0.0, v) : v);
            }
        }
        act_tensor(l.name + ".act", calibrate(std::span<const double>(pooled), bits, false));
    }
    return out;
}

unsigned model_bits(const WeightSet& wq) {
    unsigned bits = 0;
    for (const auto& t : wq.tensors()) {
        if (!t.quantized()) {
            continue;
        }
        const unsigned b = bits_of(t.dtype);
        if (bits != 0 && b != bits) {
            throw FormatError(fmt::format("tensor '{}' is {}-bit in a {}-bit model", t.name, b, bits));
        }
        bits = b;
    }
    if (bits == 0) {
        throw FormatError("weight set holds no quantized tensors");
    }
    return bits;
}

LutDotUnit::LutDotUnit() { cluster_.program_for_mac(); }

std::uint64_t LutDotUnit::dot(std::span<const std::uint32_t> a, std::span<const std::uint32_t> w, unsigned bits) {
    if (a.size() != w.size()) {
        throw ShapeError(fmt::format("dot operands differ in length: {} vs {}", a.size(), w.size()));
    }
    if (!supported_bits(bits)) {
        throw UnsupportedOperation(fmt::format("unsupported precision {} bits", bits));
    }
    const std::uint32_t limit = (1U << bits) - 1U;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] > limit || w[i] > limit) {
            throw DomainError(fmt::format("operand pair ({}, {}) exceeds {} bits", a[i], w[i], bits));
        }
    }
    if (bits <= 8) {
        cluster_.reset_accumulator();
        for (std::size_t i = 0; i < a.size(); ++i) {
            cluster_.mac8(static_cast<std::uint8_t>(a[i]), static_cast<std::uint8_t>(w[i]));
        }
        return cluster_.accumulator();
    }
    std::uint64_t total = 0;
    for (unsigned ba = 0; ba < 2; ++ba) {
        for (unsigned bw = 0; bw < 2; ++bw) {
            cluster_.reset_accumulator();
            for (std::size_t i = 0; i < a.size(); ++i) {
                cluster_.mac8(static_cast<std::uint8_t>(a[i] >> (8 * ba)), static_cast<std::uint8_t>(w[i] >> (8 * bw)));
            }
            total += static_cast<std::uint64_t>(cluster_.accumulator()) << (8 * (ba + bw));
        }
    }
    return total;
}

LutElementwiseUnit::LutElementwiseUnit() {
    cmp_.program(build_function_table(OpTag::CMP4));
    max_.program(build_function_table(OpTag::MAX4));
}

bool LutElementwiseUnit::greater(std::uint32_t a, std::uint32_t b, unsigned bits) {
    for (unsigned k = bits / 4; k-- > 0;) {
        const auto na = static_cast<std::uint8_t>(nibble(a, k));
        const auto nb = static_cast<std::uint8_t>(nibble(b, k));
        if (cmp_.lookup_nibbles(na, nb) != 0) {
            return true;
        }
        if (cmp_.lookup_nibbles(nb, na) != 0) {
            return false;
        }
    }
    return false;
}

std::uint32_t LutElementwiseUnit::relu(std::uint32_t q, std::uint32_t zero_point, unsigned bits) {
    return greater(q, zero_point, bits) ? q : zero_point;
}

std::uint32_t LutElementwiseUnit::max(std::span<const std::uint32_t> values, unsigned bits) {
    if (values.empty()) {
        throw DomainError("max of an empty window");
    }
    candidates_.assign(values.begin(), values.end());
    for (unsigned k = bits / 4; k-- > 0 && candidates_.size() > 1;) {
        nibbles_.clear();
        for (auto v : candidates_) {
            nibbles_.push_back(static_cast<std::uint8_t>(nibble(v, k)));
        }
        // Pairwise MAX4 tree, an odd element carried to the next level.
        std::size_t n = nibbles_.size();
        while (n > 1) {
            std::size_t next = 0;
            for (std::size_t j = 0; j + 1 < n; j += 2) {
                nibbles_[next++] = max_.lookup_nibbles(nibbles_[j], nibbles_[j + 1]);
            }
            if (n % 2 == 1) {
                nibbles_[next++] = nibbles_[n - 1];
            }
            n = next;
        }
        const std::uint8_t top = nibbles_[0];
        std::erase_if(candidates_, [&](std::uint32_t v) {
            return cmp_.lookup_nibbles(top, static_cast<std::uint8_t>(nibble(v, k))) != 0;
        });
    }
    return candidates_.front();
}

LutResult infer_lut(const NetworkSpec& net, const WeightSet& wq, std::span<const double> input,
                    const SystemConfig& cfg) {
    const unsigned bits = cfg.precision_bits;
    if (!supported_bits(bits)) {
        throw UnsupportedOperation(fmt::format("unsupported precision {} bits", bits));
    }
    cfg.validate();
    const unsigned stored = model_bits(wq);
    if (stored != bits) {
        throw FormatError(fmt::format("weights are quantized to {} bits but the system runs at {}", stored, bits));
    }
    net.validate();
    check_input(net, input);

    const auto dom = value_domains(net);
    LutResult result;
    result.codes.resize(net.layers.size());
    std::vector<std::vector<double>> reals(net.layers.size());

    const QuantParams in_params = activation_params(net, wq, -1);
    std::vector<std::uint32_t> in_codes;
    in_codes.reserve(input.size());
    for (double v : input) {
        in_codes.push_back(quantize(v, in_params));
    }
    auto codes_of = [&](int idx) -> const std::vector<std::uint32_t>& {
        return idx < 0 ? in_codes : result.codes[static_cast<std::size_t>(idx)];
    };
    auto is_code = [&](int idx) { return idx < 0 || dom[static_cast<std::size_t>(idx)] == ValueDomain::Code; };
    auto reals_of = [&](int idx) {
        if (!is_code(idx)) {
            return reals[static_cast<std::size_t>(idx)];
        }
        const QuantParams p = activation_params(net, wq, idx);
        std::vector<double> out;
        for (auto q : codes_of(idx)) {
            out.push_back(dequantize(q, p));
        }
        return out;
    };

    LutDotUnit dot;
    LutElementwiseUnit ew;
    std::vector<std::uint32_t> a_buf;
    std::vector<std::uint32_t> w_buf;

    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const LayerSpec& l = net.layers[i];
        const Shape& o = l.output_shape;
        const bool code_out = dom[i] == ValueDomain::Code;
        auto& out_codes = result.codes[i];
        std::uint64_t effective_macs = 0;

        switch (l.kind) {
        case LayerKind::Conv2d:
        case LayerKind::DepthwiseConv2d:
        case LayerKind::Dense: {
            if (!is_code(l.input_index)) {
                throw UnsupportedOperation(fmt::format("layer '{}' needs coded input", l.name));
            }
            const auto& in = codes_of(l.input_index);
            const QuantParams pa = activation_params(net, wq, l.input_index);
            const NamedTensor& wt = wq.get(l.name + ".weight");
            if (!wt.quantized() || !wt.params) {
                throw FormatError(fmt::format("tensor '{}' is not quantized", wt.name));
            }
            if (wt.dims != weight_dims(l)) {
                throw ShapeError(fmt::format("tensor '{}' does not match layer '{}'", wt.name, l.name));
            }
            check_size(wt, wt.element_count());
            const QuantParams pw = *wt.params;
            const auto bias = real_values(wq.get(l.name + ".bias"));
            if (bias.size() != l.out_channels) {
                throw ShapeError(fmt::format("tensor '{}.bias' does not match layer '{}'", l.name, l.name));
            }
            QuantParams pout;
            if (code_out) {
                pout = activation_params(net, wq, static_cast<int>(i));
                out_codes.resize(o.size());
            } else {
                reals[i].resize(o.size());
            }
            const auto za = static_cast<std::int64_t>(pa.zero_point);
            const auto zw = static_cast<std::int64_t>(pw.zero_point);
            std::vector<std::int64_t> accs(o.size());
            const std::uint64_t before = dot.mac8_calls();
            for_each_output(o, [&](std::size_t k, std::size_t c, std::size_t y, std::size_t x) {
                a_buf.clear();
                w_buf.clear();
                detail::for_each_term(l, c, y, x, [&](std::ptrdiff_t idx, std::size_t widx) {
                    a_buf.push_back(idx == detail::kPadded ? static_cast<std::uint32_t>(pa.zero_point)
                                                           : in[static_cast<std::size_t>(idx)]);
                    w_buf.push_back(wt.codes[widx]);
                });
                const auto raw = static_cast<std::int64_t>(dot.dot(a_buf, w_buf, bits));
                std::int64_t sum_a = 0;
                std::int64_t sum_w = 0;
                for (std::size_t t = 0; t < a_buf.size(); ++t) {
                    sum_a += a_buf[t];
                    sum_w += w_buf[t];
                }
                const auto n = static_cast<std::int64_t>(a_buf.size());
                const std::int64_t acc = raw - zw * sum_a - za * sum_w + n * za * zw;
                accs[k] = acc;
                const double real = affine_output(pa, pw, acc, bias[c]);
                if (code_out) {
                    out_codes[k] = quantize(real, pout);
                } else {
                    reals[i][k] = real;
                }
            });
            effective_macs = dot.mac8_calls() - before;
            result.accumulators = std::move(accs);
            break;
        }
        case LayerKind::Relu:
            if (code_out) {
                const auto& in = codes_of(l.input_index);
                const auto z = static_cast<std::uint32_t>(activation_params(net, wq, l.input_index).zero_point);
                out_codes.resize(in.size());
                for (std::size_t k = 0; k < in.size(); ++k) {
                    out_codes[k] = ew.relu(in[k], z, bits);
                }
            } else {
                reals[i] = reals_of(l.input_index);
                for (double& v : reals[i]) {
                    v = std::max(0.0, v);
                }
            }
            break;
        case LayerKind::MaxPool2d:
            if (code_out) {
                const auto& in = codes_of(l.input_index);
                out_codes.resize(o.size());
                for_each_output(o, [&](std::size_t k, std::size_t c, std::size_t y, std::size_t x) {
                    a_buf.clear();
                    detail::for_each_pool_input(l, c, y, x, [&](std::size_t idx) { a_buf.push_back(in[idx]); });
                    out_codes[k] = ew.max(a_buf, bits);
                });
            } else {
                const auto in = reals_of(l.input_index);
                reals[i].resize(o.size());
                for_each_output(o, [&](std::size_t k, std::size_t c, std::size_t y, std::size_t x) {
                    double m = -std::numeric_limits<double>::infinity();
                    detail::for_each_pool_input(l, c, y, x, [&](std::size_t idx) { m = std::max(m, in[idx]); });
                    reals[i][k] = m;
                });
            }
            break;
        case LayerKind::Flatten:
            if (code_out) {
                out_codes = codes_of(l.input_index);
            } else {
                reals[i] = reals_of(l.input_index);
            }
            break;
        case LayerKind::ResidualAdd: {
            if (!is_code(l.input_index) || !is_code(l.skip_index)) {
                throw UnsupportedOperation(fmt::format("layer '{}' needs coded operands", l.name));
            }
            const auto& lhs = codes_of(l.input_index);
            const auto& rhs = codes_of(l.skip_index);
            const QuantParams pl = activation_params(net, wq, l.input_index);
            const QuantParams pr = activation_params(net, wq, l.skip_index);
            const QuantParams pout = activation_params(net, wq, static_cast<int>(i));
            out_codes.resize(lhs.size());
            for (std::size_t k = 0; k < lhs.size(); ++k) {
                out_codes[k] = quantize(dequantize(lhs[k], pl) + dequantize(rhs[k], pr), pout);
            }
            break;
        }
        case LayerKind::Softmax:
            result.logits = reals_of(l.input_index);
            reals[i] = softmax(result.logits);
            break;
        }
        result.ledger.merge(layer_ledger(l, cfg, effective_macs));
    }

    const int last = static_cast<int>(net.layers.size()) - 1;
    result.output = reals_of(last);
    if (net.layers.back().kind != LayerKind::Softmax) {
        result.logits = result.output;
    }
    result.mac8_calls = dot.mac8_calls();
    return result;
}

LutResult infer_lut(const NetworkSpec& net, const WeightSet& wq, const GrayImage& img, const SystemConfig& cfg) {
    return infer_lut(net, wq, image_input(net, img), cfg);
}

} // namespace lutpim
