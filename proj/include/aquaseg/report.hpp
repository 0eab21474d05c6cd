// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <string>

#include "aquaseg/metrics.hpp"
#include "aquaseg/registry.hpp"

namespace aquaseg {

namespace detail {

// Shortest representation that round-trips; identical across runs.
inline std::string format_real(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string format_optional(const std::optional<double>& v) { return v ? format_real(*v) : std::string{}; }

inline json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(ErrorCode::IoError, path.string() + ": cannot open for writing");
    out << text;
    if (!out)
        throw Error(ErrorCode::IoError, path.string() + ": write failed");
}

} // namespace detail

inline json report_to_json(const MetricsReport& r, const CategoryRegistry& registry)
{
    json doc;
    doc["aAcc"] = r.aacc;
    doc["mIoU"] = r.miou;
    doc["mAcc"] = r.macc;
    doc["sample_count"] = r.sample_count;
    json grouped = json::object();
    for (const auto& g : r.grouped)
        grouped[g.split][g.group] = detail::optional_json(g.miou);
    doc["grouped"] = std::move(grouped);
    json per_class = json::array();
    for (const auto& c : r.per_class) {
        json entry;
        entry["index"] = c.index;
        entry["name"] = c.index < registry.size() ? registry.names()[c.index] : std::string{};
        entry["iou"] = detail::optional_json(c.iou);
        entry["acc"] = detail::optional_json(c.acc);
        per_class.push_back(std::move(entry));
    }
    doc["per_class"] = std::move(per_class);
    return doc;
}

/// Reads back a metrics.json document. Category names are not needed.
inline MetricsReport report_from_json(const json& doc, const std::string& source = "<metrics>")
{
    try {
        MetricsReport r;
        r.aacc = doc.at("aAcc").get<double>();
        r.miou = doc.at("mIoU").get<double>();
        r.macc = doc.at("mAcc").get<double>();
        r.sample_count = doc.at("sample_count").get<std::size_t>();
        for (const auto& [split, groups] : doc.at("grouped").items())
            for (const auto& [group, v] : groups.items())
                r.grouped.push_back({split, group, v.is_null() ? std::nullopt : std::optional<double>(v.get<double>())});
        for (const auto& c : doc.at("per_class")) {
            ClassScore s;
            s.index = c.at("index").get<std::size_t>();
            if (!c.at("iou").is_null())
                s.iou = c.at("iou").get<double>();
            if (!c.at("acc").is_null())
                s.acc = c.at("acc").get<double>();
            r.per_class.push_back(s);
        }
        return r;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaError, source + ": " + e.what());
    }
}

inline std::string report_csv(const MetricsReport& r)
{
    std::string header = "aAcc,mIoU,mAcc";
    std::string row =
        detail::format_real(r.aacc) + "," + detail::format_real(r.miou) + "," + detail::format_real(r.macc);
    for (const auto& g : r.grouped) {
        header += "," + detail::csv_field(g.group);
        row += "," + detail::format_optional(g.miou);
    }
    return header + "\n" + row + "\n";
}

inline std::string per_class_csv(const MetricsReport& r, const CategoryRegistry& registry)
{
    std::string out = "index,name,iou,acc\n";
    for (const auto& c : r.per_class) {
        const std::string name = c.index < registry.size() ? registry.names()[c.index] : std::string{};
        out += std::to_string(c.index) + "," + detail::csv_field(name) + "," + detail::format_optional(c.iou) + "," +
               detail::format_optional(c.acc) + "\n";
    }
    return out;
}

/// Writes metrics.json, metrics.csv and per-class-iou.csv into `output_dir`.
inline void emit_report(const MetricsReport& r, const CategoryRegistry& registry,
                        const std::filesystem::path& output_dir)
{
    std::error_code ec;
    std::filesystem::create_directories(output_dir, ec);
    if (ec)
        throw Error(ErrorCode::IoError, output_dir.string() + ": " + ec.message());
    detail::write_text(output_dir / "metrics.json", report_to_json(r, registry).dump(2) + "\n");
    detail::write_text(output_dir / "metrics.csv", report_csv(r));
    detail::write_text(output_dir / "per-class-iou.csv", per_class_csv(r, registry));
}

} // namespace aquaseg
