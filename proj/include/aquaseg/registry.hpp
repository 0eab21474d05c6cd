// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "aquaseg/array.hpp"
#include "aquaseg/error.hpp"

namespace aquaseg {

using json = nlohmann::ordered_json;

inline constexpr int schema_version = 1;

struct CategoryGroup {
    std::string name;
    std::vector<std::size_t> members;
};

/// One way of partitioning categories into named groups (e.g. taxonomy,
/// commonness). Groups within a split are disjoint.
struct SplitScheme {
    std::string name;
    std::vector<CategoryGroup> groups;
};

class CategoryRegistry {
public:
    CategoryRegistry() = default;
    CategoryRegistry(std::vector<std::string> names, std::vector<SplitScheme> splits)
        : names_(std::move(names)), splits_(std::move(splits))
    {
        validate();
    }

    std::size_t size() const noexcept { return names_.size(); }
    const std::vector<std::string>& names() const noexcept { return names_; }
    const std::vector<SplitScheme>& splits() const noexcept { return splits_; }

    const SplitScheme* split(std::string_view name) const noexcept
    {
        for (const auto& s : splits_)
            if (s.name == name)
                return &s;
        return nullptr;
    }

    const CategoryGroup* group(std::string_view split_name, std::string_view group_name) const noexcept
    {
        if (const auto* s = split(split_name))
            for (const auto& g : s->groups)
                if (g.name == group_name)
                    return &g;
        return nullptr;
    }

    std::optional<std::size_t> index_of(std::string_view name) const noexcept
    {
        for (std::size_t i = 0; i < names_.size(); ++i)
            if (names_[i] == name)
                return i;
        return std::nullopt;
    }

    /// Throws LabelOutOfRange if any non-IGNORE label is >= K.
    void validate_labels(const LabelMap& m, const std::string& source) const
    {
        for (std::size_t i = 0; i < m.size(); ++i) {
            const auto v = m.labels[i];
            if (v != LabelMap::ignore && v >= names_.size())
                throw Error(ErrorCode::LabelOutOfRange, source + ": label " + std::to_string(v) + " at pixel " +
                                                            std::to_string(i) + " >= K=" +
                                                            std::to_string(names_.size()));
        }
    }

    /// Parses the "categories" and "splits" members of a registry or manifest
    /// document.
    static CategoryRegistry from_json(const json& doc, const std::string& source)
    {
        auto schema = [&](const std::string& why) { return Error(ErrorCode::SchemaError, source + ": " + why); };
        if (!doc.contains("categories") || !doc["categories"].is_array())
            throw schema("missing \"categories\" array");
        std::vector<std::string> names;
        for (const auto& n : doc["categories"]) {
            if (!n.is_string())
                throw schema("category names must be strings");
            names.push_back(n.get<std::string>());
        }
        std::vector<SplitScheme> splits;
        if (doc.contains("splits")) {
            if (!doc["splits"].is_object())
                throw schema("\"splits\" must be an object");
            for (const auto& [split_name, groups] : doc["splits"].items()) {
                if (!groups.is_object())
                    throw schema("split \"" + split_name + "\" must map group names to index lists");
                SplitScheme scheme{split_name, {}};
                for (const auto& [group_name, members] : groups.items()) {
                    if (!members.is_array())
                        throw schema("group \"" + group_name + "\" must be an index list");
                    CategoryGroup g{group_name, {}};
                    for (const auto& m : members) {
                        if (!m.is_number_integer() || m.get<std::int64_t>() < 0)
                            throw schema("group \"" + group_name + "\" holds a non-index entry");
                        g.members.push_back(static_cast<std::size_t>(m.get<std::int64_t>()));
                    }
                    scheme.groups.push_back(std::move(g));
                }
                splits.push_back(std::move(scheme));
            }
        }
        try {
            return CategoryRegistry(std::move(names), std::move(splits));
        } catch (const Error& e) {
            throw Error(e.code(), source + ": " + e.what());
        }
    }

private:
    void validate() const
    {
        if (names_.empty())
            throw Error(ErrorCode::SchemaError, "registry has no categories");
        // Index 255 is the IGNORE sentinel.
        if (names_.size() > LabelMap::ignore)
            throw Error(ErrorCode::SchemaError, "registry holds " + std::to_string(names_.size()) +
                                                    " categories; at most 255 are representable");
        std::unordered_set<std::string> seen;
        for (const auto& n : names_)
            if (!seen.insert(n).second)
                throw Error(ErrorCode::SchemaError, "duplicate category name \"" + n + "\"");

        std::unordered_set<std::string> group_names;
        for (const auto& s : splits_) {
            std::set<std::size_t> used;
            for (const auto& g : s.groups) {
                if (!group_names.insert(g.name).second)
                    throw Error(ErrorCode::SchemaError, "group name \"" + g.name + "\" used twice");
                for (auto idx : g.members) {
                    if (idx >= names_.size())
                        throw Error(ErrorCode::SchemaError, "group \"" + g.name + "\" references index " +
                                                                std::to_string(idx) + " >= K=" +
                                                                std::to_string(names_.size()));
                    if (!used.insert(idx).second)
                        throw Error(ErrorCode::GroupOverlap, "split \"" + s.name + "\": index " +
                                                                 std::to_string(idx) + " appears in more than one group");
                }
            }
        }
    }

    std::vector<std::string> names_;
    std::vector<SplitScheme> splits_;
};

inline json read_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::MissingFile, path.string() + ": cannot open");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaError, path.string() + ": " + e.what());
    }
}

inline void check_version(const json& doc, const std::string& source)
{
    if (!doc.is_object() || !doc.contains("version") || !doc["version"].is_number_integer() ||
        doc["version"].get<int>() != schema_version)
        throw Error(ErrorCode::SchemaError, source + ": expected \"version\": " + std::to_string(schema_version));
}

/// Loads a standalone registry document (a manifest without samples is also
/// accepted).
inline CategoryRegistry load_registry(const std::filesystem::path& path)
{
    const json doc = read_json_file(path);
    check_version(doc, path.string());
    return CategoryRegistry::from_json(doc, path.string());
}

} // namespace aquaseg
