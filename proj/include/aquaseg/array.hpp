// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aquaseg/error.hpp"

namespace aquaseg {

using real = double;

/// Dense row-major matrix. Used for similarity/attention maps and embedding
/// banks.
template <std::floating_point T = real>
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, T fill = T{0})
        : rows_(rows), cols_(cols), data_(rows * cols, fill)
    {
    }
    Matrix(std::size_t rows, std::size_t cols, std::vector<T> data)
        : rows_(rows), cols_(cols), data_(std::move(data))
    {
        if (data_.size() != rows_ * cols_)
            throw Error(ErrorCode::ShapeMismatch, "matrix data length " + std::to_string(data_.size()) +
                                                      " != " + std::to_string(rows_) + "x" + std::to_string(cols_));
    }

    static Matrix identity(std::size_t n)
    {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i)
            m(i, i) = T{1};
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    T& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<T> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const T> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

/// H x W x C grid of per-position embedding vectors, stored row-major with
/// the channel axis innermost. Position p = y * W + x.
template <std::floating_point T = real>
class FeatureGrid {
public:
    FeatureGrid() = default;
    FeatureGrid(std::size_t height, std::size_t width, std::size_t channels, T fill = T{0})
        : height_(height), width_(width), channels_(channels), data_(height * width * channels, fill)
    {
    }
    FeatureGrid(std::size_t height, std::size_t width, std::size_t channels, std::vector<T> data)
        : height_(height), width_(width), channels_(channels), data_(std::move(data))
    {
        if (data_.size() != height_ * width_ * channels_)
            throw Error(ErrorCode::ShapeMismatch, "feature grid data length " + std::to_string(data_.size()) +
                                                      " != " + std::to_string(height_) + "x" +
                                                      std::to_string(width_) + "x" + std::to_string(channels_));
    }

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t channels() const noexcept { return channels_; }
    std::size_t positions() const noexcept { return height_ * width_; }

    std::span<T> at(std::size_t y, std::size_t x) noexcept { return position(y * width_ + x); }
    std::span<const T> at(std::size_t y, std::size_t x) const noexcept { return position(y * width_ + x); }

    std::span<T> position(std::size_t p) noexcept { return {data_.data() + p * channels_, channels_}; }
    std::span<const T> position(std::size_t p) const noexcept { return {data_.data() + p * channels_, channels_}; }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }

    bool operator==(const FeatureGrid&) const = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::size_t channels_ = 0;
    std::vector<T> data_;
};

/// Per-category template embeddings, T_cat x T_tmpl x C.
template <std::floating_point T = real>
class TemplateStack {
public:
    TemplateStack() = default;
    TemplateStack(std::size_t categories, std::size_t templates, std::size_t channels, std::vector<T> data)
        : categories_(categories), templates_(templates), channels_(channels), data_(std::move(data))
    {
        if (data_.size() != categories_ * templates_ * channels_)
            throw Error(ErrorCode::ShapeMismatch, "template stack data length mismatch");
    }

    std::size_t categories() const noexcept { return categories_; }
    std::size_t templates() const noexcept { return templates_; }
    std::size_t channels() const noexcept { return channels_; }

    std::span<const T> embedding(std::size_t category, std::size_t tmpl) const noexcept
    {
        return {data_.data() + (category * templates_ + tmpl) * channels_, channels_};
    }

    std::span<const T> data() const noexcept { return data_; }

private:
    std::size_t categories_ = 0;
    std::size_t templates_ = 0;
    std::size_t channels_ = 0;
    std::vector<T> data_;
};

/// Rows of text embeddings. `normalized` records that every row has unit L2
/// norm.
template <std::floating_point T = real>
struct EmbeddingMatrix {
    Matrix<T> values;
    bool normalized = false;

    std::size_t rows() const noexcept { return values.rows(); }
    std::size_t channels() const noexcept { return values.cols(); }

    bool operator==(const EmbeddingMatrix&) const = default;
};

/// Per-pixel category indices; IGNORE pixels never participate in metrics.
struct LabelMap {
    static constexpr std::uint16_t ignore = 255;

    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint16_t> labels;

    LabelMap() = default;
    LabelMap(std::size_t h, std::size_t w, std::uint16_t fill = 0) : height(h), width(w), labels(h * w, fill) {}
    LabelMap(std::size_t h, std::size_t w, std::vector<std::uint16_t> values)
        : height(h), width(w), labels(std::move(values))
    {
        if (labels.size() != height * width)
            throw Error(ErrorCode::ShapeMismatch, "label map data length mismatch");
    }

    std::size_t size() const noexcept { return labels.size(); }
    std::uint16_t& operator()(std::size_t y, std::size_t x) noexcept { return labels[y * width + x]; }
    std::uint16_t operator()(std::size_t y, std::size_t x) const noexcept { return labels[y * width + x]; }

    bool operator==(const LabelMap&) const = default;
};

template <std::floating_point T>
T dot(std::span<const T> a, std::span<const T> b) noexcept
{
    T acc{0};
    for (std::size_t i = 0; i < a.size(); ++i)
        acc += a[i] * b[i];
    return acc;
}

template <std::floating_point T>
T l2_norm(std::span<const T> v) noexcept
{
    return std::sqrt(dot(v, v));
}

template <std::floating_point T>
bool all_finite(std::span<const T> v) noexcept
{
    return std::all_of(v.begin(), v.end(), [](T x) { return std::isfinite(x); });
}

} // namespace aquaseg
