#include "lutpim/network.hpp"

#include "lutpim/binviz.hpp"
#include "lutpim/errors.hpp"

#include <charconv>
#include <fmt/format.h>

namespace lutpim {
namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::size_t parse_size(std::string_view s, std::string_view what) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw FormatError(fmt::format("bad {} '{}'", what, s));
    }
    return v;
}

} // namespace

Shape parse_dims(std::string_view text) {
    std::vector<std::size_t> parts;
    std::string_view rest = trim(text);
    while (true) {
        const auto x = rest.find('x');
        parts.push_back(parse_size(rest.substr(0, x), "dimension"));
        if (x == std::string_view::npos) {
            break;
        }
        rest.remove_prefix(x + 1);
    }
    if (parts.size() != 3 || parts[0] == 0 || parts[1] == 0 || parts[2] == 0) {
        throw FormatError(fmt::format("dimensions must be HxWxC with positive sides, got '{}'", text));
    }
    return {parts[2], parts[0], parts[1]};
}

std::string format_dims(const Shape& s) { return fmt::format("{}x{}x{}", s.h, s.w, s.c); }

std::string_view to_string(LayerKind k) {
    switch (k) {
    case LayerKind::Conv2d: return "conv2d";
    case LayerKind::DepthwiseConv2d: return "depthwise_conv2d";
    case LayerKind::MaxPool2d: return "maxpool2d";
    case LayerKind::Relu: return "relu";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Dense: return "dense";
    case LayerKind::Softmax: return "softmax";
    case LayerKind::ResidualAdd: return "residual_add";
    }
    throw UnsupportedOperation("unknown layer kind");
}

LayerKind parse_layer_kind(std::string_view s) {
    for (LayerKind k : {LayerKind::Conv2d, LayerKind::DepthwiseConv2d, LayerKind::MaxPool2d, LayerKind::Relu,
                        LayerKind::Flatten, LayerKind::Dense, LayerKind::Softmax, LayerKind::ResidualAdd}) {
        if (to_string(k) == s) {
            return k;
        }
    }
    throw UnsupportedOperation(fmt::format("unknown layer kind '{}'", s));
}

bool has_weights(LayerKind k) {
    return k == LayerKind::Conv2d || k == LayerKind::DepthwiseConv2d || k == LayerKind::Dense;
}

std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t pad) {
    if (kernel == 0 || stride == 0) {
        throw ShapeError("kernel and stride must be positive");
    }
    if (in + 2 * pad < kernel) {
        throw ShapeError(fmt::format("kernel {} does not fit input extent {} with padding {}", kernel, in, pad));
    }
    return (in + 2 * pad - kernel) / stride + 1;
}

void NetworkSpec::infer_shapes(bool require_class_scores) {
    if (input.size() == 0) {
        throw ShapeError(fmt::format("network '{}' has an empty input shape", name));
    }
    if (layers.empty()) {
        throw ShapeError(fmt::format("network '{}' has no layers", name));
    }
    auto resolve = [&](const std::string& ref, std::size_t i, bool default_previous) -> int {
        if (ref.empty()) {
            if (!default_previous) {
                throw ShapeError(fmt::format("layer '{}' needs a skip operand", layers[i].name));
            }
            return static_cast<int>(i) - 1;
        }
        if (ref == "input") {
            return -1;
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (layers[j].name == ref) {
                return static_cast<int>(j);
            }
        }
        throw ShapeError(fmt::format("layer '{}' references unknown or later layer '{}'", layers[i].name, ref));
    };
    auto shape_of = [&](int idx) { return idx < 0 ? input : layers[static_cast<std::size_t>(idx)].output_shape; };

    for (std::size_t i = 0; i < layers.size(); ++i) {
        LayerSpec& l = layers[i];
        for (std::size_t j = 0; j < i; ++j) {
            if (layers[j].name == l.name) {
                throw ShapeError(fmt::format("duplicate layer name '{}'", l.name));
            }
        }
        l.input_index = resolve(l.input, i, true);
        l.input_shape = shape_of(l.input_index);
        const Shape in = l.input_shape;
        auto fail = [&](std::string_view why) {
            throw ShapeError(fmt::format("layer '{}' ({}): {}", l.name, to_string(l.kind), why));
        };
        switch (l.kind) {
        case LayerKind::Conv2d:
            if (l.in_channels != 0 && l.in_channels != in.c) {
                fail(fmt::format("declares {} input channels but receives {}", l.in_channels, in.c));
            }
            if (l.out_channels == 0) {
                fail("out_channels must be positive");
            }
            l.in_channels = in.c;
            l.output_shape = {l.out_channels, conv_output_extent(in.h, l.kernel_h, l.stride, l.padding),
                              conv_output_extent(in.w, l.kernel_w, l.stride, l.padding)};
            break;
        case LayerKind::DepthwiseConv2d:
            if ((l.in_channels != 0 && l.in_channels != in.c) || (l.out_channels != 0 && l.out_channels != in.c)) {
                fail("depthwise convolution keeps the channel count");
            }
            l.in_channels = in.c;
            l.out_channels = in.c;
            l.output_shape = {in.c, conv_output_extent(in.h, l.kernel_h, l.stride, l.padding),
                              conv_output_extent(in.w, l.kernel_w, l.stride, l.padding)};
            break;
        case LayerKind::MaxPool2d:
            if (l.padding >= l.kernel_h || l.padding >= l.kernel_w) {
                fail("pool padding must be smaller than the window");
            }
            l.in_channels = in.c;
            l.out_channels = in.c;
            l.output_shape = {in.c, conv_output_extent(in.h, l.kernel_h, l.stride, l.padding),
                              conv_output_extent(in.w, l.kernel_w, l.stride, l.padding)};
            break;
        case LayerKind::Relu:
        case LayerKind::Softmax:
            l.in_channels = in.c;
            l.out_channels = in.c;
            l.output_shape = in;
            break;
        case LayerKind::Flatten:
            l.in_channels = in.c;
            l.out_channels = in.size();
            l.output_shape = {in.size(), 1, 1};
            break;
        case LayerKind::Dense:
            if (l.in_channels != 0 && l.in_channels != in.size()) {
                fail(fmt::format("declares {} inputs but receives {}", l.in_channels, in.size()));
            }
            if (l.out_channels == 0) {
                fail("out_channels must be positive");
            }
            l.in_channels = in.size();
            l.output_shape = {l.out_channels, 1, 1};
            break;
        case LayerKind::ResidualAdd: {
            l.skip_index = resolve(l.skip, i, false);
            if (shape_of(l.skip_index) != in) {
                fail(fmt::format("operands {} and {} differ", format_dims(in), format_dims(shape_of(l.skip_index))));
            }
            l.in_channels = in.c;
            l.out_channels = in.c;
            l.output_shape = in;
            break;
        }
        }
    }
    if (require_class_scores && !layers.back().output_shape.flat()) {
        throw ShapeError(fmt::format("network '{}' must end in class scores, ends in {}", name,
                                     format_dims(layers.back().output_shape)));
    }
}

void NetworkSpec::validate() const {
    NetworkSpec copy = *this;
    copy.infer_shapes();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (copy.layers[i].input_shape != layers[i].input_shape ||
            copy.layers[i].output_shape != layers[i].output_shape) {
            throw ShapeError(fmt::format("layer '{}' has stale shapes", layers[i].name));
        }
    }
}

Shape NetworkSpec::output_shape() const {
    if (layers.empty()) {
        return input;
    }
    return layers.back().output_shape;
}

const LayerSpec& NetworkSpec::layer(std::string_view layer_name) const {
    for (const auto& l : layers) {
        if (l.name == layer_name) {
            return l;
        }
    }
    throw ShapeError(fmt::format("network '{}' has no layer '{}'", name, layer_name));
}

std::string NetworkSpec::to_config() const {
    std::string out = fmt::format("name = {}\ninput = {}\n", name, format_dims(input));
    for (const auto& l : layers) {
        out += fmt::format("\n[layer {}]\nkind = {}\n", l.name, to_string(l.kind));
        if (!l.input.empty()) {
            out += fmt::format("input = {}\n", l.input);
        }
        switch (l.kind) {
        case LayerKind::Conv2d:
        case LayerKind::DepthwiseConv2d:
        case LayerKind::MaxPool2d:
            if (l.kind == LayerKind::Conv2d) {
                out += fmt::format("out_channels = {}\n", l.out_channels);
            }
            out += fmt::format("kernel = {}x{}\nstride = {}\npadding = {}\n", l.kernel_h, l.kernel_w, l.stride,
                               l.padding);
            break;
        case LayerKind::Dense: out += fmt::format("out_channels = {}\n", l.out_channels); break;
        case LayerKind::ResidualAdd: out += fmt::format("skip = {}\n", l.skip); break;
        default: break;
        }
    }
    return out;
}

NetworkSpec NetworkSpec::from_config(std::string_view text) {
    NetworkSpec net;
    LayerSpec* current = nullptr;
    bool have_kind = false;
    std::size_t line_no = 0;
    auto finish_layer = [&] {
        if (current != nullptr && !have_kind) {
            throw FormatError(fmt::format("layer '{}' has no kind", current->name));
        }
    };
    while (!text.empty()) {
        const auto eol = text.find('\n');
        std::string_view line = trim(text.substr(0, eol));
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
        ++line_no;
        if (line.empty() || line.front() == '#') {
            continue;
        }
        if (line.front() == '[') {
            if (!line.starts_with("[layer ") || line.back() != ']') {
                throw FormatError(fmt::format("line {}: expected '[layer NAME]'", line_no));
            }
            finish_layer();
            net.layers.emplace_back();
            current = &net.layers.back();
            current->name = std::string(trim(line.substr(7, line.size() - 8)));
            if (current->name.empty()) {
                throw FormatError(fmt::format("line {}: layer name is empty", line_no));
            }
            have_kind = false;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw FormatError(fmt::format("line {}: expected 'key = value'", line_no));
        }
        const std::string_view key = trim(line.substr(0, eq));
        const std::string_view value = trim(line.substr(eq + 1));
        if (current == nullptr) {
            if (key == "name") {
                net.name = std::string(value);
            } else if (key == "input") {
                net.input = parse_dims(value);
            } else {
                throw FormatError(fmt::format("line {}: unknown network key '{}'", line_no, key));
            }
            continue;
        }
        if (key == "kind") {
            try {
                current->kind = parse_layer_kind(value);
            } catch (const UnsupportedOperation& e) {
                throw FormatError(fmt::format("line {}: {}", line_no, e.what()));
            }
            have_kind = true;
        } else if (key == "kernel") {
            const auto x = value.find('x');
            current->kernel_h = parse_size(value.substr(0, x), "kernel");
            current->kernel_w = x == std::string_view::npos ? current->kernel_h : parse_size(value.substr(x + 1), "kernel");
        } else if (key == "stride") {
            current->stride = parse_size(value, "stride");
        } else if (key == "padding") {
            current->padding = parse_size(value, "padding");
        } else if (key == "in_channels") {
            current->in_channels = parse_size(value, "in_channels");
        } else if (key == "out_channels") {
            current->out_channels = parse_size(value, "out_channels");
        } else if (key == "input") {
            current->input = std::string(value);
        } else if (key == "skip") {
            current->skip = std::string(value);
        } else {
            throw FormatError(fmt::format("line {}: unknown layer key '{}'", line_no, key));
        }
    }
    finish_layer();
    if (net.name.empty()) {
        throw FormatError("network config has no name");
    }
    net.infer_shapes();
    return net;
}

NetworkSpec NetworkSpec::load(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return from_config({reinterpret_cast<const char*>(bytes.data()), bytes.size()});
}

} // namespace lutpim
