#pragma once

#include "lutpim/network.hpp"

#include <span>
#include <string>
#include <string_view>

namespace lutpim {

/// Appends layers while tracking the running shape, so pooling windows can be fitted to
/// small inputs.
class NetworkBuilder {
public:
    NetworkBuilder(std::string name, Shape input);

    NetworkBuilder& conv(std::string name, std::size_t out_channels, std::size_t kernel, std::size_t stride = 1,
                         std::size_t padding = 0, std::string input = {});
    NetworkBuilder& depthwise(std::string name, std::size_t kernel, std::size_t stride = 1, std::size_t padding = 0);
    /// Window is shrunk to the input extent when the input is smaller than the window.
    NetworkBuilder& maxpool(std::string name, std::size_t kernel, std::size_t stride, std::size_t padding = 0);
    /// Pools the whole spatial extent down to 1x1.
    NetworkBuilder& global_pool(std::string name);
    NetworkBuilder& relu(std::string name);
    NetworkBuilder& flatten(std::string name = "flatten");
    NetworkBuilder& dense(std::string name, std::size_t out_features);
    NetworkBuilder& softmax(std::string name = "softmax");
    NetworkBuilder& residual_add(std::string name, std::string lhs, std::string rhs);

    const std::string& last() const;
    Shape shape_of(std::string_view layer) const;
    Shape current_shape() const;

    NetworkSpec build();

private:
    NetworkBuilder& push(LayerSpec l);

    NetworkSpec net_;
};

/// 32x32x1 -> conv 8@3x3 / ReLU -> maxpool 2 -> conv 16@3x3 / ReLU -> maxpool 2 -> flatten
/// -> dense 2 -> softmax.
NetworkSpec tinymalnet();

NetworkSpec alexnet(Shape input, std::size_t classes = 2);
NetworkSpec vgg16(Shape input, std::size_t classes = 2);
NetworkSpec resnet18(Shape input, std::size_t classes = 2);
NetworkSpec resnet34(Shape input, std::size_t classes = 2);
NetworkSpec resnet50(Shape input, std::size_t classes = 2);
NetworkSpec mobilenet_v2(Shape input, std::size_t classes = 2);

/// The six benchmarked topologies, in report order.
std::span<const std::string_view> zoo_names();

/// Zoo topology or "tinymalnet". Throws UnsupportedOperation listing valid names.
NetworkSpec zoo_network(std::string_view name, Shape input);

bool is_known_network(std::string_view name);

inline constexpr Shape kBenchmarkInput{3, 224, 224};
inline constexpr Shape kMalwareInput{1, 32, 32};

} // namespace lutpim
