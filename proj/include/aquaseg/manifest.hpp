// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "aquaseg/npy.hpp"
#include "aquaseg/registry.hpp"

namespace aquaseg {

struct SampleManifest {
    std::string sample_id;
    std::size_t image_height = 0;
    std::size_t image_width = 0;
    std::filesystem::path clip_features_path;
    /// One exported geometric feature tensor per encoder stage.
    std::vector<std::filesystem::path> geo_features_paths;
    std::filesystem::path gt_path;
    std::optional<std::filesystem::path> reasoning_path;
    std::optional<std::filesystem::path> reasoning_embedding_path;
};

/// A benchmark description: the category registry, the run-level text
/// embedding banks and the per-sample feature files. All paths are absolute
/// (resolved against the manifest's directory on load).
struct Manifest {
    CategoryRegistry registry;
    std::filesystem::path text_embeddings_path;
    std::optional<std::filesystem::path> plain_text_embeddings_path;
    std::vector<SampleManifest> samples;
};

namespace detail {

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p)
{
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : (base / path).lexically_normal();
}

inline void require_file(const std::filesystem::path& p, const std::string& what)
{
    if (!std::filesystem::is_regular_file(p))
        throw Error(ErrorCode::MissingFile, what + ": " + p.string() + " does not exist");
}

inline npy::Header require_float_tensor(const std::filesystem::path& p, std::size_t rank, const std::string& what)
{
    require_file(p, what);
    auto h = npy::read_header(p);
    if (!npy::is_floating(h.dtype))
        throw Error(ErrorCode::SchemaError, what + ": " + p.string() + " is not a floating-point tensor");
    if (h.shape.size() != rank)
        throw Error(ErrorCode::RankMismatch, what + ": " + p.string() + " has rank " + std::to_string(h.shape.size()) +
                                                 ", expected " + std::to_string(rank));
    return h;
}

inline std::string string_field(const json& obj, const char* key, const std::string& source)
{
    if (!obj.contains(key) || !obj[key].is_string())
        throw Error(ErrorCode::SchemaError, source + ": missing string field \"" + key + "\"");
    return obj[key].get<std::string>();
}

inline std::size_t size_field(const json& obj, const char* key, const std::string& source)
{
    if (!obj.contains(key) || !obj[key].is_number_unsigned() || obj[key].get<std::size_t>() == 0)
        throw Error(ErrorCode::SchemaError, source + ": field \"" + key + "\" must be a positive integer");
    return obj[key].get<std::size_t>();
}

} // namespace detail

/// Loads and validates a manifest. Feature tensors are header-checked, ground
/// truth is fully loaded to check dimensions and label range. Reasoning files
/// are optional and only checked at run time.
inline Manifest load_manifest(const std::filesystem::path& path)
{
    const json doc = read_json_file(path);
    const std::string src = path.string();
    check_version(doc, src);
    const auto base = std::filesystem::absolute(path).parent_path();

    Manifest m;
    m.registry = CategoryRegistry::from_json(doc, src);
    const std::size_t k = m.registry.size();

    std::optional<std::size_t> channels;
    auto check_bank = [&](const std::filesystem::path& p, const std::string& what, bool single_template) {
        const auto h = detail::require_float_tensor(p, 3, what);
        if (h.shape[0] != k)
            throw Error(ErrorCode::SchemaError, what + ": " + std::to_string(h.shape[0]) +
                                                    " category rows, registry has " + std::to_string(k));
        if (h.shape[1] == 0 || (single_template && h.shape[1] != 1))
            throw Error(ErrorCode::SchemaError, what + ": unexpected template count " + std::to_string(h.shape[1]));
        if (channels && *channels != h.shape[2])
            throw Error(ErrorCode::SchemaError, what + ": channel count differs from other text embeddings");
        channels = h.shape[2];
    };

    const bool has_samples = doc.contains("samples") && !doc["samples"].empty();
    if (doc.contains("text_embeddings")) {
        m.text_embeddings_path = detail::resolve(base, detail::string_field(doc, "text_embeddings", src));
        check_bank(m.text_embeddings_path, src + " text_embeddings", false);
    } else if (has_samples) {
        throw Error(ErrorCode::SchemaError, src + ": missing string field \"text_embeddings\"");
    }
    if (doc.contains("plain_text_embeddings")) {
        m.plain_text_embeddings_path = detail::resolve(base, detail::string_field(doc, "plain_text_embeddings", src));
        check_bank(*m.plain_text_embeddings_path, src + " plain_text_embeddings", true);
    }

    if (!doc.contains("samples"))
        return m;
    if (!doc["samples"].is_array())
        throw Error(ErrorCode::SchemaError, src + ": \"samples\" must be an array");

    std::unordered_set<std::string> ids;
    for (const auto& entry : doc["samples"]) {
        if (!entry.is_object())
            throw Error(ErrorCode::SchemaError, src + ": sample entries must be objects");
        SampleManifest s;
        s.sample_id = detail::string_field(entry, "sample_id", src);
        const std::string where = src + " sample '" + s.sample_id + "'";
        if (!ids.insert(s.sample_id).second)
            throw Error(ErrorCode::SchemaError, where + ": duplicate sample_id");
        s.image_height = detail::size_field(entry, "image_height", where);
        s.image_width = detail::size_field(entry, "image_width", where);
        s.clip_features_path = detail::resolve(base, detail::string_field(entry, "clip_features", where));
        s.gt_path = detail::resolve(base, detail::string_field(entry, "gt", where));
        if (!entry.contains("geo_features") || !entry["geo_features"].is_array() || entry["geo_features"].empty())
            throw Error(ErrorCode::SchemaError, where + ": \"geo_features\" must be a non-empty array of paths");
        for (const auto& g : entry["geo_features"]) {
            if (!g.is_string())
                throw Error(ErrorCode::SchemaError, where + ": \"geo_features\" entries must be strings");
            s.geo_features_paths.push_back(detail::resolve(base, g.get<std::string>()));
        }
        if (entry.contains("reasoning"))
            s.reasoning_path = detail::resolve(base, detail::string_field(entry, "reasoning", where));
        if (entry.contains("reasoning_embedding"))
            s.reasoning_embedding_path =
                detail::resolve(base, detail::string_field(entry, "reasoning_embedding", where));

        const auto clip = detail::require_float_tensor(s.clip_features_path, 3, where + " clip_features");
        if (channels && clip.shape[2] != *channels)
            throw Error(ErrorCode::SchemaError, where + ": clip feature channels " + std::to_string(clip.shape[2]) +
                                                    " != text embedding channels " + std::to_string(*channels));
        for (const auto& g : s.geo_features_paths)
            detail::require_float_tensor(g, 3, where + " geo_features");

        detail::require_file(s.gt_path, where + " gt");
        const LabelMap gt = npy::load_label_map(s.gt_path);
        if (gt.height != s.image_height || gt.width != s.image_width)
            throw Error(ErrorCode::SchemaError, where + ": gt is " + std::to_string(gt.height) + "x" +
                                                    std::to_string(gt.width) + ", manifest declares " +
                                                    std::to_string(s.image_height) + "x" +
                                                    std::to_string(s.image_width));
        m.registry.validate_labels(gt, where + " gt");
        m.samples.push_back(std::move(s));
    }
    return m;
}

} // namespace aquaseg
