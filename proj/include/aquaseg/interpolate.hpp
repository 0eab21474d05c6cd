// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>

#include "aquaseg/array.hpp"

namespace aquaseg {

namespace detail {

struct Tap {
    std::size_t lo;
    std::size_t hi;
    double frac;
};

// Corner-aligned: output index 0 maps to input 0 and the last output index to
// the last input. A single output sample reads input 0.
inline Tap corner_aligned_tap(std::size_t out_index, std::size_t in_size, std::size_t out_size) noexcept
{
    if (out_size <= 1 || in_size <= 1)
        return {0, 0, 0.0};
    const double scale = static_cast<double>(in_size - 1) / static_cast<double>(out_size - 1);
    const double src = static_cast<double>(out_index) * scale;
    auto lo = static_cast<std::size_t>(std::floor(src));
    if (lo >= in_size - 1)
        return {in_size - 1, in_size - 1, 0.0};
    return {lo, lo + 1, src - static_cast<double>(lo)};
}

} // namespace detail

/// Channel-wise bilinear resampling of a feature grid to `out_height` x
/// `out_width`, corner-aligned. Same-size input is returned unchanged.
template <std::floating_point T>
FeatureGrid<T> interpolate_features(const FeatureGrid<T>& in, std::size_t out_height, std::size_t out_width)
{
    if (in.height() == 0 || in.width() == 0 || out_height == 0 || out_width == 0)
        throw Error(ErrorCode::ShapeMismatch, "interpolation needs non-empty grids");
    if (in.height() == out_height && in.width() == out_width)
        return in;

    const std::size_t c = in.channels();
    FeatureGrid<T> out(out_height, out_width, c);
    for (std::size_t y = 0; y < out_height; ++y) {
        const auto ty = detail::corner_aligned_tap(y, in.height(), out_height);
        const T wy = static_cast<T>(ty.frac);
        for (std::size_t x = 0; x < out_width; ++x) {
            const auto tx = detail::corner_aligned_tap(x, in.width(), out_width);
            const T wx = static_cast<T>(tx.frac);
            const auto v00 = in.at(ty.lo, tx.lo);
            const auto v01 = in.at(ty.lo, tx.hi);
            const auto v10 = in.at(ty.hi, tx.lo);
            const auto v11 = in.at(ty.hi, tx.hi);
            auto dst = out.at(y, x);
            for (std::size_t k = 0; k < c; ++k) {
                // lerp form keeps constant fields exact
                const T top = v00[k] + wx * (v01[k] - v00[k]);
                const T bottom = v10[k] + wx * (v11[k] - v10[k]);
                dst[k] = top + wy * (bottom - top);
            }
        }
    }
    return out;
}

} // namespace aquaseg
