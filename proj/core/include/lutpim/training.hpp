#pragma once

#include "lutpim/binviz.hpp"
#include "lutpim/network.hpp"
#include "lutpim/weights.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace lutpim {

/// Frozen random weights for every weighted layer. Each weight is -c, 0 or +c with
/// c = 1 / sqrt(fan_in), so the symmetric quantizer represents it exactly at any width.
/// Biases are zero.
WeightSet random_weights(const NetworkSpec& net, std::uint64_t seed);

struct ReadoutFit {
    /// Ridge strength relative to the mean diagonal of the feature Gram matrix.
    double ridge = 1e-2;
    /// Regression target for the true class; other classes get its negation.
    double logit_target = 4.0;
};

/// Replaces the last weighted layer (a dense layer) with the closed-form ridge solution that
/// maps its float input features to the class targets. Single pass, no iteration.
/// Throws ShapeError when the network does not end in a dense layer or labels mismatch inputs.
void fit_readout(const NetworkSpec& net, WeightSet& w, std::span<const std::vector<double>> inputs,
                 std::span<const std::size_t> labels, const ReadoutFit& opts = {});

/// random_weights + fit_readout on the corpus' model images.
WeightSet fit_classifier(const NetworkSpec& net, std::span<const CorpusSample> corpus, std::uint64_t seed,
                         const ReadoutFit& opts = {});

} // namespace lutpim
