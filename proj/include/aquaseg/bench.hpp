// SPDX-License-Identifier: Apache-2.0
//
// Benchmark orchestration: load a manifest, push every sample through the
// enabled stages, accumulate per-sample confusion matrices on a worker pool
// and reduce them in manifest order.
#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <spdlog/spdlog.h>

#include "aquaseg/classifier.hpp"
#include "aquaseg/csa.hpp"
#include "aquaseg/gmg.hpp"
#include "aquaseg/manifest.hpp"
#include "aquaseg/metrics.hpp"
#include "aquaseg/npy.hpp"
#include "aquaseg/reasoning.hpp"
#include "aquaseg/report.hpp"

namespace aquaseg {

struct RunConfig {
    std::filesystem::path manifest_path;
    GmgConfig gmg;
    FusionConfig fusion;
    bool enable_gmg = true;
    bool enable_csa = true;
    /// When off, the manifest's single-template "plain_text_embeddings" bank
    /// replaces the underwater template bank.
    bool enable_templates = true;
    double temperature = 0.01;
    std::size_t workers = 1;
    std::filesystem::path output_dir = "aquaseg-out";
    bool dump_predictions = false;

    void validate() const
    {
        gmg.validate();
        fusion.validate();
        if (!enable_gmg && !enable_csa && !enable_templates)
            throw Error(ErrorCode::ConfigError, "at least one of GMG, CSA or the template bank must be enabled");
        if (!(temperature > 0.0))
            throw Error(ErrorCode::ConfigError, "temperature must be > 0");
        if (workers < 1)
            throw Error(ErrorCode::ConfigError, "workers must be >= 1");
    }
};

/// Everything a sample needs besides its own files; built once per run.
struct RunContext {
    const Manifest* manifest = nullptr;
    EmbeddingMatrix<real> text;
    RunConfig config;
};

struct SampleResult {
    ConfusionMatrix confusion;
    LabelMap prediction;
    /// False when the sample had no usable reasoning inputs or CSA is off.
    bool fused = false;
};

inline RunContext prepare_run(const Manifest& manifest, const RunConfig& config)
{
    config.validate();
    RunContext ctx{&manifest, {}, config};
    if (config.enable_templates) {
        ctx.text = average_templates(npy::load_template_stack(manifest.text_embeddings_path));
    } else {
        if (!manifest.plain_text_embeddings_path)
            throw Error(ErrorCode::ConfigError,
                        "templates disabled but the manifest has no \"plain_text_embeddings\" bank");
        ctx.text = average_templates(npy::load_template_stack(*manifest.plain_text_embeddings_path));
    }
    if (ctx.text.rows() != manifest.registry.size())
        throw Error(ErrorCode::SchemaError, "text embeddings have " + std::to_string(ctx.text.rows()) +
                                                " rows, registry has " + std::to_string(manifest.registry.size()));
    return ctx;
}

namespace detail {

// Missing or unparseable reasoning records fall back to the template-only
// path. A record without a declared embedding also falls back.
inline std::optional<Matrix<real>> load_reasoning_embedding(const SampleManifest& s)
{
    if (!s.reasoning_path)
        return std::nullopt;
    try {
        load_reasoning(*s.reasoning_path);
    } catch (const Error& e) {
        spdlog::warn("sample '{}': reasoning record unusable ({}); using template embeddings only", s.sample_id,
                     e.what());
        return std::nullopt;
    }
    if (!s.reasoning_embedding_path) {
        spdlog::warn("sample '{}': reasoning record has no reasoning_embedding; using template embeddings only",
                     s.sample_id);
        return std::nullopt;
    }
    return npy::load_matrix(*s.reasoning_embedding_path);
}

} // namespace detail

inline SampleResult run_sample(const RunContext& ctx, const SampleManifest& s)
{
    const auto& cfg = ctx.config;
    const auto stage = static_cast<std::size_t>(cfg.gmg.geo_stage);
    if (stage >= s.geo_features_paths.size())
        throw Error(ErrorCode::SchemaError, "geo_stage " + std::to_string(stage) + " requested but only " +
                                                std::to_string(s.geo_features_paths.size()) + " stages exported");

    const auto clip = npy::load_feature_grid(s.clip_features_path);
    const auto geo = npy::load_feature_grid(s.geo_features_paths[stage]);
    const auto visual = cfg.enable_gmg ? gmg_forward(clip, geo, cfg.gmg)
                                       : interpolate_features(clip, geo.height(), geo.width());

    SampleResult result;
    std::optional<EmbeddingMatrix<real>> fused;
    if (cfg.enable_csa) {
        if (auto reasoning = detail::load_reasoning_embedding(s)) {
            fused = fuse(ctx.text, *reasoning, cfg.fusion);
            result.fused = true;
        }
    }
    const auto& text = fused ? *fused : ctx.text;

    const auto logits = mask_logits(text, visual);
    result.prediction = upsample_argmax(logits, s.image_height, s.image_width);

    const auto gt = npy::load_label_map(s.gt_path);
    ctx.manifest->registry.validate_labels(gt, s.gt_path.string());
    result.confusion = ConfusionMatrix(ctx.manifest->registry.size());
    result.confusion.accumulate(result.prediction, gt);
    return result;
}

/// Runs every sample of `manifest`. Per-sample matrices are merged in
/// manifest order; the first failing sample (by manifest order) aborts the
/// run with its sample_id in the message.
inline MetricsReport evaluate(const Manifest& manifest, const RunConfig& config)
{
    const RunContext ctx = prepare_run(manifest, config);
    const std::size_t n = manifest.samples.size();
    std::vector<std::optional<ConfusionMatrix>> partials(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};

    const auto pred_dir = config.output_dir / "predictions";
    if (config.dump_predictions)
        std::filesystem::create_directories(pred_dir);

    auto worker = [&] {
        for (std::size_t i = next++; i < n && !failed; i = next++) {
            const auto& s = manifest.samples[i];
            try {
                auto r = run_sample(ctx, s);
                if (config.dump_predictions)
                    npy::write_label_map(pred_dir / (s.sample_id + ".npy"), r.prediction);
                spdlog::debug("sample '{}' done (fused={})", s.sample_id, r.fused);
                partials[i] = std::move(r.confusion);
            } catch (...) {
                errors[i] = std::current_exception();
                failed = true;
            }
        }
    };

    const std::size_t threads = std::min(config.workers, std::max<std::size_t>(n, 1));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t)
            pool.emplace_back(worker);
    }

    for (std::size_t i = 0; i < n; ++i) {
        if (!errors[i])
            continue;
        const std::string id = manifest.samples[i].sample_id;
        try {
            std::rethrow_exception(errors[i]);
        } catch (const Error& e) {
            throw Error(e.code(), "sample '" + id + "': " + e.what());
        } catch (const std::exception& e) {
            throw Error(ErrorCode::IoError, "sample '" + id + "': " + e.what());
        }
    }

    ConfusionMatrix total(manifest.registry.size());
    for (const auto& p : partials)
        if (p)
            total += *p;
    return compute(total, manifest.registry, n);
}

/// Loads the manifest, evaluates it and writes the report files.
inline MetricsReport run(const RunConfig& config)
{
    config.validate();
    const Manifest manifest = load_manifest(config.manifest_path);
    spdlog::info("{} samples, {} categories", manifest.samples.size(), manifest.registry.size());
    auto report = evaluate(manifest, config);
    emit_report(report, manifest.registry, config.output_dir);
    spdlog::info("aAcc {:.4f}  mIoU {:.4f}  mAcc {:.4f}", report.aacc, report.miou, report.macc);
    return report;
}

} // namespace aquaseg
