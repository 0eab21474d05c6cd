// SPDX-License-Identifier: Apache-2.0
//
// Geometric-guided visual correction: a self-similarity attention prior
// built from geometric encoder features re-mixes the (interpolated) CLIP
// patch features.
//
//   S     = G^T G                      (positions x positions)
//   S~    = gamma * (S - beta * mean(S))
//   S~_ij = -inf where S~_ij < 0
//   A     = row_softmax(S~)            (all -inf row -> e_i)
//   V_corr = A * interpolate(V, grid(G))
#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "aquaseg/array.hpp"
#include "aquaseg/interpolate.hpp"

namespace aquaseg {

struct GmgConfig {
    double beta = 1.2;
    double gamma = 3.0;
    /// Geometric encoder stage whose features are consumed (0..3).
    int geo_stage = 3;

    void validate() const
    {
        if (!(gamma > 0.0) || !std::isfinite(gamma))
            throw Error(ErrorCode::ConfigError, "gamma must be > 0, got " + std::to_string(gamma));
        if (!std::isfinite(beta))
            throw Error(ErrorCode::ConfigError, "beta must be finite");
        if (geo_stage < 0 || geo_stage > 3)
            throw Error(ErrorCode::ConfigError, "geo_stage must be in {0,1,2,3}, got " + std::to_string(geo_stage));
    }
};

template <std::floating_point T = real>
struct SimilarityMatrix {
    Matrix<T> values;
    /// Arithmetic mean over all n^2 entries, diagonal included.
    T mean = T{0};

    std::size_t n() const noexcept { return values.rows(); }
};

template <std::floating_point T = real>
struct AttentionMap {
    Matrix<T> weights;
    /// Rows where every logit was masked and the identity row was used.
    std::vector<std::size_t> fallback_rows;

    std::size_t n() const noexcept { return weights.rows(); }
};

/// Gram matrix of the flattened geometric features; no channel normalization.
template <std::floating_point T>
SimilarityMatrix<T> self_similarity(const FeatureGrid<T>& geo)
{
    const std::size_t n = geo.positions();
    if (n == 0)
        throw Error(ErrorCode::ShapeMismatch, "geometric grid has no positions");
    SimilarityMatrix<T> s{Matrix<T>(n, n), T{0}};
    for (std::size_t i = 0; i < n; ++i) {
        const auto gi = geo.position(i);
        for (std::size_t j = i; j < n; ++j) {
            const T v = dot<T>(gi, geo.position(j));
            s.values(i, j) = v;
            s.values(j, i) = v;
        }
    }
    T total{0};
    for (T v : s.values.data())
        total += v;
    s.mean = total / static_cast<T>(n * n);
    return s;
}

/// Mean-centres, scales and thresholds the similarity logits. Negative
/// entries become -inf; zeros are kept.
template <std::floating_point T>
Matrix<T> sharpen_and_mask(const SimilarityMatrix<T>& s, const GmgConfig& cfg)
{
    cfg.validate();
    const T beta = static_cast<T>(cfg.beta);
    const T gamma = static_cast<T>(cfg.gamma);
    const T shift = beta * s.mean;
    Matrix<T> out(s.n(), s.n());
    auto src = s.values.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i) {
        const T v = gamma * (src[i] - shift);
        dst[i] = v < T{0} ? -std::numeric_limits<T>::infinity() : v;
    }
    return out;
}

/// Row-wise softmax over the finite entries with max subtraction.
template <std::floating_point T>
AttentionMap<T> attention_from_logits(const Matrix<T>& logits)
{
    if (logits.rows() != logits.cols())
        throw Error(ErrorCode::ShapeMismatch, "attention logits must be square");
    const std::size_t n = logits.rows();
    AttentionMap<T> a{Matrix<T>(n, n), {}};
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = logits.row(i);
        auto out = a.weights.row(i);
        T max = -std::numeric_limits<T>::infinity();
        for (T v : row)
            if (v > max)
                max = v;
        if (!std::isfinite(max)) {
            out[i] = T{1};
            a.fallback_rows.push_back(i);
            continue;
        }
        T sum{0};
        for (std::size_t j = 0; j < n; ++j) {
            out[j] = std::isfinite(row[j]) ? std::exp(row[j] - max) : T{0};
            sum += out[j];
        }
        for (auto& v : out)
            v /= sum;
    }
    return a;
}

/// V_corr = A * V, each output position a convex combination of inputs.
template <std::floating_point T>
FeatureGrid<T> correct_features(const AttentionMap<T>& a, const FeatureGrid<T>& v)
{
    const std::size_t n = v.positions();
    if (a.n() != n)
        throw Error(ErrorCode::ShapeMismatch, "attention is " + std::to_string(a.n()) + "x" + std::to_string(a.n()) +
                                                  " but features have " + std::to_string(n) + " positions");
    const std::size_t c = v.channels();
    FeatureGrid<T> out(v.height(), v.width(), c);
    for (std::size_t i = 0; i < n; ++i) {
        auto dst = out.position(i);
        const auto weights = a.weights.row(i);
        for (std::size_t j = 0; j < n; ++j) {
            const T w = weights[j];
            if (w == T{0})
                continue;
            const auto src = v.position(j);
            for (std::size_t k = 0; k < c; ++k)
                dst[k] += w * src[k];
        }
    }
    return out;
}

template <std::floating_point T>
AttentionMap<T> geometric_attention(const FeatureGrid<T>& geo, const GmgConfig& cfg)
{
    return attention_from_logits(sharpen_and_mask(self_similarity(geo), cfg));
}

/// Full correction: interpolate V onto G's grid, then apply the geometric
/// attention prior.
template <std::floating_point T>
FeatureGrid<T> gmg_forward(const FeatureGrid<T>& clip, const FeatureGrid<T>& geo, const GmgConfig& cfg)
{
    const auto attention = geometric_attention(geo, cfg);
    return correct_features(attention, interpolate_features(clip, geo.height(), geo.width()));
}

} // namespace aquaseg
