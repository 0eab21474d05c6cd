// SPDX-License-Identifier: Apache-2.0
//
// Category-visual semantic alignment: per-category template averaging and
// similarity-gated fusion with a per-image reasoning embedding.
#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aquaseg/array.hpp"
#include "aquaseg/reasoning.hpp"

namespace aquaseg {

inline constexpr std::string_view class_slot = "{class}";
inline constexpr double zero_norm_eps = 1e-12;

/// Prompt templates grouped under "#" headers. Each template holds at least
/// one "{class}" slot; every occurrence is substituted.
class TemplateBank {
public:
    struct Group {
        std::string name;
        std::vector<std::string> templates;
    };

    TemplateBank() = default;
    explicit TemplateBank(std::vector<Group> groups) : groups_(std::move(groups))
    {
        for (const auto& g : groups_)
            for (const auto& t : g.templates)
                if (t.find(class_slot) == std::string::npos)
                    throw Error(ErrorCode::SchemaError, "template \"" + t + "\" has no {class} slot");
    }

    /// Parses templates.txt: one template per line, "# name" starts a group,
    /// blank lines are skipped.
    static TemplateBank parse(std::istream& in, const std::string& source = "<templates>")
    {
        std::vector<Group> groups;
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r')
                line.pop_back();
            const auto first = line.find_first_not_of(" \t");
            if (first == std::string::npos)
                continue;
            if (line[first] == '#') {
                const auto name_start = line.find_first_not_of(" \t", first + 1);
                groups.push_back({name_start == std::string::npos ? std::string{} : line.substr(name_start), {}});
                continue;
            }
            if (groups.empty())
                groups.push_back({"default", {}});
            groups.back().templates.push_back(line.substr(first));
        }
        try {
            return TemplateBank(std::move(groups));
        } catch (const Error& e) {
            throw Error(e.code(), source + ": " + e.what());
        }
    }

    static TemplateBank load(const std::filesystem::path& path)
    {
        std::ifstream in(path);
        if (!in)
            throw Error(ErrorCode::MissingFile, path.string() + ": cannot open");
        return parse(in, path.string());
    }

    const std::vector<Group>& groups() const noexcept { return groups_; }

    std::vector<std::string> templates() const
    {
        std::vector<std::string> out;
        for (const auto& g : groups_)
            out.insert(out.end(), g.templates.begin(), g.templates.end());
        return out;
    }

    std::size_t size() const noexcept
    {
        std::size_t n = 0;
        for (const auto& g : groups_)
            n += g.templates.size();
        return n;
    }

    static std::string fill(std::string_view tmpl, std::string_view category)
    {
        std::string out;
        std::size_t pos = 0;
        while (true) {
            const auto hit = tmpl.find(class_slot, pos);
            if (hit == std::string_view::npos) {
                out.append(tmpl.substr(pos));
                return out;
            }
            out.append(tmpl.substr(pos, hit - pos));
            out.append(category);
            pos = hit + class_slot.size();
        }
    }

    /// Prompts for one category, in bank order.
    std::vector<std::string> instantiate(std::string_view category) const
    {
        std::vector<std::string> out;
        for (const auto& g : groups_)
            for (const auto& t : g.templates)
                out.push_back(fill(t, category));
        return out;
    }

private:
    std::vector<Group> groups_;
};

struct FusionConfig {
    double w_max = 0.5;
    double tau = 0.5;

    void validate() const
    {
        if (!(tau >= 0.0 && tau <= 1.0))
            throw Error(ErrorCode::ConfigError, "tau must lie in [0, 1], got " + std::to_string(tau));
        if (!(w_max >= 0.0) || !std::isfinite(w_max))
            throw Error(ErrorCode::ConfigError, "w_max must be >= 0, got " + std::to_string(w_max));
    }
};

/// Mean over the template axis followed by per-row L2 normalization.
template <std::floating_point T>
EmbeddingMatrix<T> average_templates(const TemplateStack<T>& stack)
{
    if (stack.templates() == 0)
        throw Error(ErrorCode::ShapeMismatch, "template stack has no templates");
    const std::size_t c = stack.channels();
    Matrix<T> out(stack.categories(), c);
    for (std::size_t cat = 0; cat < stack.categories(); ++cat) {
        auto row = out.row(cat);
        for (std::size_t t = 0; t < stack.templates(); ++t) {
            const auto e = stack.embedding(cat, t);
            for (std::size_t k = 0; k < c; ++k)
                row[k] += e[k];
        }
        for (auto& v : row)
            v /= static_cast<T>(stack.templates());
        const T norm = l2_norm<T>(row);
        if (!(norm >= static_cast<T>(zero_norm_eps)))
            throw Error(ErrorCode::ZeroVector, "template mean of category " + std::to_string(cat) + " has zero norm");
        for (auto& v : row)
            v /= norm;
    }
    return {std::move(out), true};
}

namespace detail {

inline void join_into(std::string& out, const std::vector<std::string>& items, std::string_view sep)
{
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i)
            out.append(sep);
        out.append(items[i]);
    }
}

} // namespace detail

/// "A photo of {Objects} that have attributes {Attributes} underwater."
/// Objects are joined with ", "; attributes follow object order, each
/// object's list joined with ", ".
inline std::string build_reasoning_sentence(const ReasoningRecord& record)
{
    std::vector<std::string> attrs;
    for (const auto& object : record.objects)
        if (const auto* list = record.attributes_of(object))
            attrs.insert(attrs.end(), list->begin(), list->end());

    std::string out = "A photo of ";
    detail::join_into(out, record.objects, ", ");
    out += " that have attributes ";
    detail::join_into(out, attrs, ", ");
    out += " underwater.";
    return out;
}

/// Similarity-gated fusion of normalized category embeddings with one
/// reasoning embedding:
///   s_i = <E_t,i, r>,  r = E_r / |E_r|
///   w_i = min(s_i, w_max) * [s_i >= tau]
///   row_i = normalize(E_t,i + w_i r)
/// Rows with w_i == 0 are copied unchanged.
template <std::floating_point T>
EmbeddingMatrix<T> fuse(const EmbeddingMatrix<T>& templates, std::span<const T> reasoning, const FusionConfig& cfg)
{
    cfg.validate();
    if (!templates.normalized)
        throw Error(ErrorCode::SchemaError, "fuse expects L2-normalized category embeddings");
    if (reasoning.size() != templates.channels())
        throw Error(ErrorCode::ShapeMismatch, "reasoning embedding has " + std::to_string(reasoning.size()) +
                                                  " channels, categories have " +
                                                  std::to_string(templates.channels()));
    const T r_norm = l2_norm(reasoning);
    if (!(r_norm >= static_cast<T>(zero_norm_eps)))
        throw Error(ErrorCode::ZeroVector, "reasoning embedding has zero norm");
    std::vector<T> r(reasoning.begin(), reasoning.end());
    for (auto& v : r)
        v /= r_norm;

    const T tau = static_cast<T>(cfg.tau);
    const T w_max = static_cast<T>(cfg.w_max);
    EmbeddingMatrix<T> out = templates;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        const T s = dot<T>(templates.values.row(i), r);
        const T w = s >= tau ? std::min(s, w_max) : T{0};
        if (w == T{0})
            continue;
        auto row = out.values.row(i);
        for (std::size_t k = 0; k < row.size(); ++k)
            row[k] += w * r[k];
        const T norm = l2_norm<T>(row);
        if (!(norm >= static_cast<T>(zero_norm_eps)))
            throw Error(ErrorCode::ZeroVector, "fused row " + std::to_string(i) + " has zero norm");
        for (auto& v : row)
            v /= norm;
    }
    return out;
}

template <std::floating_point T>
EmbeddingMatrix<T> fuse(const EmbeddingMatrix<T>& templates, const Matrix<T>& reasoning, const FusionConfig& cfg)
{
    if (reasoning.rows() != 1)
        throw Error(ErrorCode::ShapeMismatch, "reasoning embedding must be 1xC");
    return fuse(templates, reasoning.row(0), cfg);
}

/// Template averaging, then fusion when a reasoning embedding is available.
template <std::floating_point T>
EmbeddingMatrix<T> csa_forward(const TemplateStack<T>& stack, const std::optional<Matrix<T>>& reasoning,
                               const FusionConfig& cfg)
{
    auto averaged = average_templates(stack);
    if (!reasoning)
        return averaged;
    return fuse(averaged, *reasoning, cfg);
}

} // namespace aquaseg
