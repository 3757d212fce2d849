#include "lutpim/training.hpp"

#include "lutpim/errors.hpp"
#include "lutpim/inference.hpp"
#include "lutpim/rng.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <fmt/format.h>

namespace lutpim {

WeightSet random_weights(const NetworkSpec& net, std::uint64_t seed) {
    net.validate();
    WeightSet w;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const LayerSpec& l = net.layers[i];
        if (!has_weights(l.kind)) {
            continue;
        }
        NamedTensor wt;
        wt.name = l.name + ".weight";
        wt.dims = weight_dims(l);
        const std::size_t fan_in = wt.element_count() / l.out_channels;
        const auto c = static_cast<float>(1.0 / std::sqrt(static_cast<double>(fan_in)));
        DeterministicRng rng(mix_seed(seed, i));
        wt.real.resize(wt.element_count());
        for (float& v : wt.real) {
            v = static_cast<float>(static_cast<int>(rng.uniform(0, 2)) - 1) * c;
        }
        w.add(std::move(wt));

        NamedTensor bt;
        bt.name = l.name + ".bias";
        bt.dims = {static_cast<std::uint32_t>(l.out_channels)};
        bt.real.assign(l.out_channels, 0.0F);
        w.add(std::move(bt));
    }
    return w;
}

void fit_readout(const NetworkSpec& net, WeightSet& w, std::span<const std::vector<double>> inputs,
                 std::span<const std::size_t> labels, const ReadoutFit& opts) {
    if (inputs.size() != labels.size() || inputs.empty()) {
        throw ShapeError(fmt::format("readout fit needs one label per input ({} inputs, {} labels)", inputs.size(),
                                     labels.size()));
    }
    int readout = -1;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (has_weights(net.layers[i].kind)) {
            readout = static_cast<int>(i);
        }
    }
    if (readout < 0 || net.layers[static_cast<std::size_t>(readout)].kind != LayerKind::Dense) {
        throw ShapeError(fmt::format("network '{}' does not end in a dense layer", net.name));
    }
    const LayerSpec& l = net.layers[static_cast<std::size_t>(readout)];
    const auto d = static_cast<Eigen::Index>(l.in_channels);
    const auto classes = static_cast<Eigen::Index>(l.out_channels);
    const auto n = static_cast<Eigen::Index>(inputs.size());

    Eigen::MatrixXd features(n, d + 1);
    Eigen::MatrixXd targets = Eigen::MatrixXd::Constant(n, classes, -opts.logit_target);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto& x = inputs[static_cast<std::size_t>(r)];
        const FloatTrace trace = forward_float(net, w, x);
        const auto& f = l.input_index < 0 ? x : trace.outputs[static_cast<std::size_t>(l.input_index)];
        for (Eigen::Index j = 0; j < d; ++j) {
            features(r, j) = f[static_cast<std::size_t>(j)];
        }
        features(r, d) = 1.0;
        const auto label = static_cast<Eigen::Index>(labels[static_cast<std::size_t>(r)]);
        if (label >= classes) {
            throw ShapeError(fmt::format("label {} outside {} classes", label, classes));
        }
        targets(r, label) = opts.logit_target;
    }

    Eigen::MatrixXd gram = features.transpose() * features;
    const double scale = gram.diagonal().mean();
    gram.diagonal().array() += opts.ridge * (scale > 0.0 ? scale : 1.0);
    const Eigen::MatrixXd solution = gram.ldlt().solve(features.transpose() * targets);

    NamedTensor& wt = w.get_mutable(l.name + ".weight");
    NamedTensor& bt = w.get_mutable(l.name + ".bias");
    wt.dtype = DType::Real32;
    wt.params.reset();
    wt.codes.clear();
    wt.real.assign(static_cast<std::size_t>(classes * d), 0.0F);
    bt.dtype = DType::Real32;
    bt.params.reset();
    bt.codes.clear();
    bt.real.assign(static_cast<std::size_t>(classes), 0.0F);
    for (Eigen::Index c = 0; c < classes; ++c) {
        for (Eigen::Index j = 0; j < d; ++j) {
            wt.real[static_cast<std::size_t>(c * d + j)] = static_cast<float>(solution(j, c));
        }
        bt.real[static_cast<std::size_t>(c)] = static_cast<float>(solution(d, c));
    }
}

WeightSet fit_classifier(const NetworkSpec& net, std::span<const CorpusSample> corpus, std::uint64_t seed,
                         const ReadoutFit& opts) {
    WeightSet w = random_weights(net, seed);
    std::vector<std::vector<double>> inputs;
    std::vector<std::size_t> labels;
    inputs.reserve(corpus.size());
    for (const auto& s : corpus) {
        inputs.push_back(image_input(net, binary_to_model_image(s.bytes, net.input.h)));
        labels.push_back(static_cast<std::size_t>(s.label));
    }
    fit_readout(net, w, inputs, labels, opts);
    return w;
}

} // namespace lutpim
