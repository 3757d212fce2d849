#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace lutpim {

/// Activation shape, channels-first. Flat vectors are (n, 1, 1).
struct Shape {
    std::size_t c = 0;
    std::size_t h = 0;
    std::size_t w = 0;

    std::size_t size() const { return c * h * w; }
    bool flat() const { return h == 1 && w == 1; }

    friend bool operator==(const Shape&, const Shape&) = default;
};

/// "HxWxC", e.g. "224x224x3".
Shape parse_dims(std::string_view text);
std::string format_dims(const Shape& s);

enum class LayerKind : std::uint8_t {
    Conv2d,
    DepthwiseConv2d,
    MaxPool2d,
    Relu,
    Flatten,
    Dense,
    Softmax,
    ResidualAdd,
};

std::string_view to_string(LayerKind k);
LayerKind parse_layer_kind(std::string_view s);

/// True for layers that carry weights and multiply (conv, depthwise, dense).
bool has_weights(LayerKind k);

struct LayerSpec {
    std::string name;
    LayerKind kind = LayerKind::Relu;
    std::size_t kernel_h = 1;
    std::size_t kernel_w = 1;
    std::size_t stride = 1;
    std::size_t padding = 0;
    std::size_t in_channels = 0;
    /// Output channels for convolutions, output features for dense layers.
    std::size_t out_channels = 0;
    /// Name of the producing layer; empty means the previous layer, "input" the network input.
    std::string input;
    /// Second operand of residual_add.
    std::string skip;

    // Filled in by NetworkSpec::infer_shapes().
    Shape input_shape;
    Shape output_shape;
    int input_index = -1;
    int skip_index = -1;
};

struct NetworkSpec {
    std::string name;
    Shape input;
    std::vector<LayerSpec> layers;

    /// Resolves layer references and computes every input/output shape.
    /// Throws ShapeError when shapes do not chain or a reference is unknown, or (when
    /// `require_class_scores`) when the last layer does not produce a flat score vector.
    void infer_shapes(bool require_class_scores = true);

    /// Checks the stored shapes without modifying them.
    void validate() const;

    Shape output_shape() const;
    std::size_t num_classes() const { return output_shape().size(); }
    const LayerSpec& layer(std::string_view name) const;

    /// Human-readable key/value form with one [layer NAME] block per layer.
    std::string to_config() const;
    static NetworkSpec from_config(std::string_view text);
    static NetworkSpec load(const std::filesystem::path& path);
};

/// out = floor((in + 2*pad - k) / stride) + 1; ShapeError when the window does not fit.
std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t pad);

} // namespace lutpim
