#include "lutpim/zoo.hpp"

#include "lutpim/errors.hpp"

#include <array>
#include <fmt/format.h>

namespace lutpim {

NetworkBuilder::NetworkBuilder(std::string name, Shape input) {
    net_.name = std::move(name);
    net_.input = input;
}

NetworkBuilder& NetworkBuilder::push(LayerSpec l) {
    net_.layers.push_back(std::move(l));
    net_.infer_shapes(false);
    return *this;
}

NetworkBuilder& NetworkBuilder::conv(std::string name, std::size_t out_channels, std::size_t kernel,
                                     std::size_t stride, std::size_t padding, std::string input) {
    LayerSpec l;
    l.name = std::move(name);
    l.kind = LayerKind::Conv2d;
    l.out_channels = out_channels;
    l.kernel_h = l.kernel_w = kernel;
    l.stride = stride;
    l.padding = padding;
    l.input = std::move(input);
    return push(std::move(l));
}

NetworkBuilder& NetworkBuilder::depthwise(std::string name, std::size_t kernel, std::size_t stride,
                                          std::size_t padding) {
    LayerSpec l;
    l.name = std::move(name);
    l.kind = LayerKind::DepthwiseConv2d;
    l.kernel_h = l.kernel_w = kernel;
    l.stride = stride;
    l.padding = padding;
    return push(std::move(l));
}

NetworkBuilder& NetworkBuilder::maxpool(std::string name, std::size_t kernel, std::size_t stride,
                                        std::size_t padding) {
    const Shape in = current_shape();
    LayerSpec l;
    l.name = std::move(name);
    l.kind = LayerKind::MaxPool2d;
    l.kernel_h = std::min(kernel, in.h + 2 * padding);
    l.kernel_w = std::min(kernel, in.w + 2 * padding);
    if (padding >= l.kernel_h || padding >= l.kernel_w) {
        padding = 0;
        l.kernel_h = std::min(kernel, in.h);
        l.kernel_w = std::min(kernel, in.w);
    }
    l.stride = stride;
    l.padding = padding;
    return push(std::move(l));
}

NetworkBuilder& NetworkBuilder::global_pool(std::string name) {
    const Shape in = current_shape();
    LayerSpec l;
    l.name = std::move(name);
    l.kind = LayerKind::MaxPool2d;
    l.kernel_h = in.h;
    l.kernel_w = in.w;
    l.stride = 1;
    return push(std::move(l));
}

NetworkBuilder& NetworkBuilder::relu(std::string name) {
    LayerSpec l;
    l.name = std::move(name);
    l.kind = LayerKind::Relu;
    return push(std::move(l));
}

NetworkBuilder& NetworkBuilder::flatten(std::string name) {
    LayerSpec l;
    l.name = std::move(name);
    l.kind = LayerKind::Flatten;
    return push(std::move(l));
}

NetworkBuilder& NetworkBuilder::dense(std::string name, std::size_t out_features) {
    LayerSpec l;
    l.name = std::move(name);
    l.kind = LayerKind::Dense;
    l.out_channels = out_features;
    return push(std::move(l));
}

NetworkBuilder& NetworkBuilder::softmax(std::string name) {
    LayerSpec l;
    l.name = std::move(name);
    l.kind = LayerKind::Softmax;
    return push(std::move(l));
}

NetworkBuilder& NetworkBuilder::residual_add(std::string name, std::string lhs, std::string rhs) {
    LayerSpec l;
    l.name = std::move(name);
    l.kind = LayerKind::ResidualAdd;
    l.input = std::move(lhs);
    l.skip = std::move(rhs);
    return push(std::move(l));
}

const std::string& NetworkBuilder::last() const {
    static const std::string kInput = "input";
    return net_.layers.empty() ? kInput : net_.layers.back().name;
}

Shape NetworkBuilder::shape_of(std::string_view layer) const {
    if (layer == "input") {
        return net_.input;
    }
    return net_.layer(layer).output_shape;
}

Shape NetworkBuilder::current_shape() const { return net_.layers.empty() ? net_.input : net_.output_shape(); }

NetworkSpec NetworkBuilder::build() {
    net_.infer_shapes(true);
    return net_;
}

NetworkSpec tinymalnet() {
    return NetworkBuilder("tinymalnet", kMalwareInput)
        .conv("conv1", 8, 3)
        .relu("relu1")
        .maxpool("pool1", 2, 2)
        .conv("conv2", 16, 3)
        .relu("relu2")
        .maxpool("pool2", 2, 2)
        .flatten("flatten")
        .dense("fc", 2)
        .softmax("softmax")
        .build();
}

NetworkSpec alexnet(Shape input, std::size_t classes) {
    return NetworkBuilder("alexnet", input)
        .conv("conv1", 64, 11, 4, 2)
        .relu("relu1")
        .maxpool("pool1", 3, 2)
        .conv("conv2", 192, 5, 1, 2)
        .relu("relu2")
        .maxpool("pool2", 3, 2)
        .conv("conv3", 384, 3, 1, 1)
        .relu("relu3")
        .conv("conv4", 256, 3, 1, 1)
        .relu("relu4")
        .conv("conv5", 256, 3, 1, 1)
        .relu("relu5")
        .maxpool("pool5", 3, 2)
        .flatten("flatten")
        .dense("fc6", 4096)
        .relu("relu6")
        .dense("fc7", 4096)
        .relu("relu7")
        .dense("fc8", classes)
        .softmax("softmax")
        .build();
}

NetworkSpec vgg16(Shape input, std::size_t classes) {
    NetworkBuilder b("vgg16", input);
    constexpr std::array<std::array<std::size_t, 2>, 5> stages{{{64, 2}, {128, 2}, {256, 3}, {512, 3}, {512, 3}}};
    for (std::size_t s = 0; s < stages.size(); ++s) {
        for (std::size_t i = 0; i < stages[s][1]; ++i) {
            const auto tag = fmt::format("{}_{}", s + 1, i + 1);
            b.conv("conv" + tag, stages[s][0], 3, 1, 1).relu("relu" + tag);
        }
        b.maxpool(fmt::format("pool{}", s + 1), 2, 2);
    }
    return b.flatten("flatten")
        .dense("fc6", 4096)
        .relu("relu6")
        .dense("fc7", 4096)
        .relu("relu7")
        .dense("fc8", classes)
        .softmax("softmax")
        .build();
}

namespace {

void resnet_stem(NetworkBuilder& b) {
    b.conv("conv1", 64, 7, 2, 3).relu("relu1").maxpool("pool1", 3, 2, 1);
}

void resnet_head(NetworkBuilder& b, std::size_t classes) {
    b.global_pool("gpool").flatten("flatten").dense("fc", classes).softmax("softmax");
}

void basic_block(NetworkBuilder& b, const std::string& tag, std::size_t channels, std::size_t stride) {
    const std::string in = b.last();
    const Shape in_shape = b.current_shape();
    b.conv(tag + "_conv1", channels, 3, stride, 1).relu(tag + "_relu1").conv(tag + "_conv2", channels, 3, 1, 1);
    const std::string main = b.last();
    std::string shortcut = in;
    if (stride != 1 || in_shape.c != channels) {
        b.conv(tag + "_proj", channels, 1, stride, 0, in);
        shortcut = b.last();
    }
    b.residual_add(tag + "_add", main, shortcut).relu(tag + "_relu2");
}

void bottleneck_block(NetworkBuilder& b, const std::string& tag, std::size_t width, std::size_t stride) {
    const std::string in = b.last();
    const Shape in_shape = b.current_shape();
    const std::size_t out = width * 4;
    b.conv(tag + "_conv1", width, 1)
        .relu(tag + "_relu1")
        .conv(tag + "_conv2", width, 3, stride, 1)
        .relu(tag + "_relu2")
        .conv(tag + "_conv3", out, 1);
    const std::string main = b.last();
    std::string shortcut = in;
    if (stride != 1 || in_shape.c != out) {
        b.conv(tag + "_proj", out, 1, stride, 0, in);
        shortcut = b.last();
    }
    b.residual_add(tag + "_add", main, shortcut).relu(tag + "_relu3");
}

NetworkSpec resnet(std::string name, Shape input, std::size_t classes, std::array<std::size_t, 4> blocks,
                   bool bottleneck) {
    NetworkBuilder b(std::move(name), input);
    resnet_stem(b);
    constexpr std::array<std::size_t, 4> widths{64, 128, 256, 512};
    for (std::size_t s = 0; s < 4; ++s) {
        for (std::size_t i = 0; i < blocks[s]; ++i) {
            const std::size_t stride = (s > 0 && i == 0) ? 2 : 1;
            const auto tag = fmt::format("layer{}_{}", s + 1, i);
            if (bottleneck) {
                bottleneck_block(b, tag, widths[s], stride);
            } else {
                basic_block(b, tag, widths[s], stride);
            }
        }
    }
    resnet_head(b, classes);
    return b.build();
}

} // namespace

NetworkSpec resnet18(Shape input, std::size_t classes) {
    return resnet("resnet18", input, classes, {2, 2, 2, 2}, false);
}

NetworkSpec resnet34(Shape input, std::size_t classes) {
    return resnet("resnet34", input, classes, {3, 4, 6, 3}, false);
}

NetworkSpec resnet50(Shape input, std::size_t classes) {
    return resnet("resnet50", input, classes, {3, 4, 6, 3}, true);
}

NetworkSpec mobilenet_v2(Shape input, std::size_t classes) {
    NetworkBuilder b("mobilenetv2", input);
    b.conv("conv_stem", 32, 3, 2, 1).relu("relu_stem");
    struct Stage {
        std::size_t expand, channels, repeats, stride;
    };
    constexpr std::array<Stage, 7> stages{{{1, 16, 1, 1},
                                           {6, 24, 2, 2},
                                           {6, 32, 3, 2},
                                           {6, 64, 4, 2},
                                           {6, 96, 3, 1},
                                           {6, 160, 3, 2},
                                           {6, 320, 1, 1}}};
    std::size_t block = 0;
    for (const Stage& st : stages) {
        for (std::size_t i = 0; i < st.repeats; ++i, ++block) {
            const std::size_t stride = i == 0 ? st.stride : 1;
            const std::string in = b.last();
            const Shape in_shape = b.current_shape();
            const auto tag = fmt::format("block{}", block);
            if (st.expand != 1) {
                b.conv(tag + "_expand", in_shape.c * st.expand, 1).relu(tag + "_relu1");
            }
            b.depthwise(tag + "_dw", 3, stride, 1).relu(tag + "_relu2").conv(tag + "_project", st.channels, 1);
            if (stride == 1 && in_shape.c == st.channels) {
                b.residual_add(tag + "_add", b.last(), in);
            }
        }
    }
    b.conv("conv_head", 1280, 1).relu("relu_head");
    b.global_pool("gpool").flatten("flatten").dense("fc", classes).softmax("softmax");
    return b.build();
}

std::span<const std::string_view> zoo_names() {
    static constexpr std::array<std::string_view, 6> kNames{"alexnet",  "resnet18", "resnet34",
                                                            "resnet50", "vgg16",    "mobilenetv2"};
    return kNames;
}

bool is_known_network(std::string_view name) {
    if (name == "tinymalnet") {
        return true;
    }
    for (auto n : zoo_names()) {
        if (n == name) {
            return true;
        }
    }
    return false;
}

NetworkSpec zoo_network(std::string_view name, Shape input) {
    if (name == "tinymalnet") {
        if (input != kMalwareInput) {
            throw ShapeError("tinymalnet is defined for 32x32x1 input only");
        }
        return tinymalnet();
    }
    if (name == "alexnet") return alexnet(input);
    if (name == "vgg16") return vgg16(input);
    if (name == "resnet18") return resnet18(input);
    if (name == "resnet34") return resnet34(input);
    if (name == "resnet50") return resnet50(input);
    if (name == "mobilenetv2") return mobilenet_v2(input);
    std::string valid = "tinymalnet";
    for (auto n : zoo_names()) {
        valid += fmt::format(", {}", n);
    }
    throw UnsupportedOperation(fmt::format("unknown network '{}' (valid: {})", name, valid));
}

} // namespace lutpim
