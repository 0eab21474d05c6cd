// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "aquaseg/array.hpp"
#include "aquaseg/interpolate.hpp"

namespace aquaseg {

/// Per-position category scores over an H x W grid. Stored position-major
/// (the category axis is innermost) so it shares the feature-grid kernels.
template <std::floating_point T = real>
class LogitVolume {
public:
    LogitVolume() = default;
    explicit LogitVolume(FeatureGrid<T> grid) : grid_(std::move(grid)) {}

    std::size_t categories() const noexcept { return grid_.channels(); }
    std::size_t height() const noexcept { return grid_.height(); }
    std::size_t width() const noexcept { return grid_.width(); }

    T value(std::size_t category, std::size_t position) const noexcept { return grid_.position(position)[category]; }
    std::span<const T> scores(std::size_t position) const noexcept { return grid_.position(position); }

    const FeatureGrid<T>& grid() const noexcept { return grid_; }

    bool operator==(const LogitVolume&) const = default;

private:
    FeatureGrid<T> grid_;
};

/// M = E_fused * normalize(V_corr)^T: cosine logits per position.
/// Positions whose feature norm is below 1e-12 score 0 everywhere.
template <std::floating_point T>
LogitVolume<T> mask_logits(const EmbeddingMatrix<T>& text, const FeatureGrid<T>& features)
{
    if (text.channels() != features.channels())
        throw Error(ErrorCode::ShapeMismatch, "text embeddings have " + std::to_string(text.channels()) +
                                                  " channels, visual features " +
                                                  std::to_string(features.channels()));
    const std::size_t k = text.rows();
    FeatureGrid<T> out(features.height(), features.width(), k);
    for (std::size_t p = 0; p < features.positions(); ++p) {
        const auto v = features.position(p);
        const T norm = l2_norm(v);
        if (!(norm >= T{1e-12}))
            continue;
        auto dst = out.position(p);
        for (std::size_t t = 0; t < k; ++t)
            dst[t] = dot<T>(text.values.row(t), v) / norm;
    }
    return LogitVolume<T>(std::move(out));
}

/// Per-position softmax of M / temperature over the category axis.
template <std::floating_point T>
LogitVolume<T> softmax_over_categories(const LogitVolume<T>& logits, double temperature = 0.01)
{
    if (!(temperature > 0.0))
        throw Error(ErrorCode::ConfigError, "temperature must be > 0");
    FeatureGrid<T> out = logits.grid();
    const T inv_t = static_cast<T>(1.0 / temperature);
    for (std::size_t p = 0; p < out.positions(); ++p) {
        auto s = out.position(p);
        T max = -std::numeric_limits<T>::infinity();
        for (T v : s)
            max = std::max(max, v * inv_t);
        T sum{0};
        for (auto& v : s) {
            v = std::exp(v * inv_t - max);
            sum += v;
        }
        for (auto& v : s)
            v /= sum;
    }
    return LogitVolume<T>(std::move(out));
}

/// Lowest index wins ties.
template <std::floating_point T>
std::uint16_t argmax(std::span<const T> scores) noexcept
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best])
            best = i;
    return static_cast<std::uint16_t>(best);
}

/// Bilinearly resamples every category plane to `height` x `width`
/// (corner-aligned) and takes the per-pixel argmax.
template <std::floating_point T>
LabelMap upsample_argmax(const LogitVolume<T>& logits, std::size_t height, std::size_t width)
{
    if (logits.categories() == 0)
        throw Error(ErrorCode::ShapeMismatch, "logit volume has no categories");
    const auto resized = interpolate_features(logits.grid(), height, width);
    LabelMap out(height, width);
    for (std::size_t p = 0; p < resized.positions(); ++p)
        out.labels[p] = argmax<T>(resized.position(p));
    return out;
}

} // namespace aquaseg
