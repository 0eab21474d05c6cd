// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "aquaseg/registry.hpp"

namespace aquaseg {

/// Per-image MLLM output: caption, detected objects and per-object
/// attributes. Object names are free text and need not exist in the
/// registry.
struct ReasoningRecord {
    std::string caption;
    std::vector<std::string> objects;
    std::vector<std::pair<std::string, std::vector<std::string>>> attributes;

    const std::vector<std::string>* attributes_of(std::string_view object) const noexcept
    {
        for (const auto& [name, attrs] : attributes)
            if (name == object)
                return &attrs;
        return nullptr;
    }

    bool operator==(const ReasoningRecord&) const = default;
};

inline ReasoningRecord parse_reasoning(const json& doc, const std::string& source)
{
    auto schema = [&](const std::string& why) { return Error(ErrorCode::SchemaError, source + ": " + why); };
    if (!doc.is_object())
        throw schema("reasoning record must be a JSON object");
    for (const char* key : {"Caption", "Objects", "Attributes"})
        if (!doc.contains(key))
            throw schema(std::string("missing key \"") + key + "\"");

    ReasoningRecord r;
    if (!doc["Caption"].is_string())
        throw schema("\"Caption\" must be a string");
    r.caption = doc["Caption"].get<std::string>();

    if (!doc["Objects"].is_array())
        throw schema("\"Objects\" must be an array");
    for (const auto& o : doc["Objects"]) {
        if (!o.is_string())
            throw schema("\"Objects\" entries must be strings");
        r.objects.push_back(o.get<std::string>());
    }

    if (!doc["Attributes"].is_object())
        throw schema("\"Attributes\" must be an object");
    for (const auto& [name, attrs] : doc["Attributes"].items()) {
        if (std::find(r.objects.begin(), r.objects.end(), name) == r.objects.end())
            throw schema("attribute key \"" + name + "\" is not listed in \"Objects\"");
        if (!attrs.is_array())
            throw schema("attributes of \"" + name + "\" must be an array");
        std::vector<std::string> list;
        for (const auto& a : attrs) {
            if (!a.is_string())
                throw schema("attributes of \"" + name + "\" must be strings");
            list.push_back(a.get<std::string>());
        }
        r.attributes.emplace_back(name, std::move(list));
    }
    return r;
}

inline ReasoningRecord parse_reasoning(std::string_view text, const std::string& source = "<reasoning>")
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaError, source + ": " + e.what());
    }
    return parse_reasoning(doc, source);
}

inline ReasoningRecord load_reasoning(const std::filesystem::path& path)
{
    return parse_reasoning(read_json_file(path), path.string());
}

} // namespace aquaseg
