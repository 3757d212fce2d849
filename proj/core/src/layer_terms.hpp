#pragma once

// Receptive-field traversal shared by the float and LUT backends.

#include "lutpim/network.hpp"

#include <cstddef>
#include <cstdint>

namespace lutpim::detail {

inline constexpr std::ptrdiff_t kPadded = -1;

/// Calls term(input_index, weight_index) for each multiply of output element (co, oy, ox).
/// input_index is kPadded for positions in the zero padding.
template <typename Term>
void for_each_term(const LayerSpec& l, std::size_t co, std::size_t oy, std::size_t ox, Term&& term) {
    const Shape& in = l.input_shape;
    if (l.kind == LayerKind::Dense) {
        const std::size_t n = l.in_channels;
        for (std::size_t i = 0; i < n; ++i) {
            term(static_cast<std::ptrdiff_t>(i), co * n + i);
        }
        return;
    }
    const bool depthwise = l.kind == LayerKind::DepthwiseConv2d;
    const std::size_t c_begin = depthwise ? co : 0;
    const std::size_t c_end = depthwise ? co + 1 : in.c;
    for (std::size_t ci = c_begin; ci < c_end; ++ci) {
        const std::size_t wc = depthwise ? co : co * in.c + ci;
        for (std::size_t ky = 0; ky < l.kernel_h; ++ky) {
            const auto iy = static_cast<std::ptrdiff_t>(oy * l.stride + ky) - static_cast<std::ptrdiff_t>(l.padding);
            for (std::size_t kx = 0; kx < l.kernel_w; ++kx) {
                const auto ix =
                    static_cast<std::ptrdiff_t>(ox * l.stride + kx) - static_cast<std::ptrdiff_t>(l.padding);
                const std::size_t widx = (wc * l.kernel_h + ky) * l.kernel_w + kx;
                if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(in.h) ||
                    ix >= static_cast<std::ptrdiff_t>(in.w)) {
                    term(kPadded, widx);
                } else {
                    term(static_cast<std::ptrdiff_t>((ci * in.h + static_cast<std::size_t>(iy)) * in.w +
                                                     static_cast<std::size_t>(ix)),
                         widx);
                }
            }
        }
    }
}

/// Calls visit(input_index) for each in-bounds element of a pooling window.
template <typename Visit>
void for_each_pool_input(const LayerSpec& l, std::size_t c, std::size_t oy, std::size_t ox, Visit&& visit) {
    const Shape& in = l.input_shape;
    for (std::size_t ky = 0; ky < l.kernel_h; ++ky) {
        const auto iy = static_cast<std::ptrdiff_t>(oy * l.stride + ky) - static_cast<std::ptrdiff_t>(l.padding);
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in.h)) {
            continue;
        }
        for (std::size_t kx = 0; kx < l.kernel_w; ++kx) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * l.stride + kx) - static_cast<std::ptrdiff_t>(l.padding);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(in.w)) {
                continue;
            }
            visit((c * in.h + static_cast<std::size_t>(iy)) * in.w + static_cast<std::size_t>(ix));
        }
    }
}

} // namespace lutpim::detail
