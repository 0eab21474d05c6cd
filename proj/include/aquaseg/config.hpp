// SPDX-License-Identifier: Apache-2.0
//
// TOML run configuration:
//
//   manifest = "fixture/manifest.json"
//   out = "results"
//   workers = 4
//   temperature = 0.01
//   dump_predictions = false
//
//   [gmg]
//   enabled = true
//   beta = 1.2
//   gamma = 3.0
//   geo_stage = 3
//
//   [csa]
//   enabled = true
//   w_max = 0.5
//   tau = 0.5
//
//   [templates]
//   enabled = true
#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#define TOML_EXCEPTIONS 1
#include <toml++/toml.hpp>

#include "aquaseg/bench.hpp"

namespace aquaseg {

namespace detail {

template <class View, class T>
void read_value(const View& node, T& out, const std::string& key)
{
    if (!node)
        return;
    if constexpr (std::is_same_v<T, double>) {
        if (auto v = node.template value<double>()) {
            out = *v;
            return;
        }
    } else if constexpr (std::is_same_v<T, bool>) {
        if (auto v = node.template value_exact<bool>()) {
            out = *v;
            return;
        }
    } else if constexpr (std::is_integral_v<T>) {
        if (auto v = node.template value_exact<std::int64_t>()) {
            if (*v < 0)
                throw Error(ErrorCode::ConfigError, "config key '" + key + "' must be non-negative");
            out = static_cast<T>(*v);
            return;
        }
    } else {
        if (auto v = node.template value_exact<std::string>()) {
            out = *v;
            return;
        }
    }
    throw Error(ErrorCode::ConfigError, "config key '" + key + "' has the wrong type");
}

} // namespace detail

/// Parses a TOML document into a RunConfig, starting from the defaults.
/// Relative paths are resolved against `base_dir`.
inline RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir = {},
                                  const std::string& source = "<config>")
{
    toml::table tbl;
    try {
        tbl = toml::parse(text, source);
    } catch (const toml::parse_error& e) {
        throw Error(ErrorCode::ConfigError, source + ": " + std::string(e.description()));
    }
    const toml::table& root = tbl;

    RunConfig cfg;
    std::string manifest, out;
    int geo_stage = cfg.gmg.geo_stage;
    detail::read_value(root["manifest"], manifest, "manifest");
    detail::read_value(root["out"], out, "out");
    detail::read_value(root["workers"], cfg.workers, "workers");
    detail::read_value(root["temperature"], cfg.temperature, "temperature");
    detail::read_value(root["dump_predictions"], cfg.dump_predictions, "dump_predictions");
    detail::read_value(root["gmg"]["enabled"], cfg.enable_gmg, "gmg.enabled");
    detail::read_value(root["gmg"]["beta"], cfg.gmg.beta, "gmg.beta");
    detail::read_value(root["gmg"]["gamma"], cfg.gmg.gamma, "gmg.gamma");
    detail::read_value(root["gmg"]["geo_stage"], geo_stage, "gmg.geo_stage");
    detail::read_value(root["csa"]["enabled"], cfg.enable_csa, "csa.enabled");
    detail::read_value(root["csa"]["w_max"], cfg.fusion.w_max, "csa.w_max");
    detail::read_value(root["csa"]["tau"], cfg.fusion.tau, "csa.tau");
    detail::read_value(root["templates"]["enabled"], cfg.enable_templates, "templates.enabled");
    cfg.gmg.geo_stage = geo_stage;

    auto resolve = [&](const std::string& p) {
        const std::filesystem::path path(p);
        return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
    };
    if (!manifest.empty())
        cfg.manifest_path = resolve(manifest);
    if (!out.empty())
        cfg.output_dir = resolve(out);
    return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::ConfigError, path.string() + ": cannot open");
    const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return parse_run_config(text, path.parent_path(), path.string());
}

} // namespace aquaseg
