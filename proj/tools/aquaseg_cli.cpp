// SPDX-License-Identifier: Apache-2.0
//
// aquaseg: command-line front end.
//
//   aquaseg run --manifest m.json [--config run.toml] [overrides...]
//   aquaseg validate --manifest m.json
//   aquaseg sentences --manifest m.json [--out sentences.json]
//   aquaseg prompts --registry r.json --templates data/templates.txt [--out prompts.json]
//
// Exit codes: 0 success, 1 data error, 2 configuration error.

#include <cstdlib>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "aquaseg/aquaseg.hpp"

namespace {

constexpr int exit_data_error = 1;
constexpr int exit_config_error = 2;

void setup_logging()
{
    auto logger = spdlog::stderr_color_mt("aquaseg");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    if (const char* level = std::getenv("AQUASEG_LOG"))
        spdlog::set_level(spdlog::level::from_str(level));
    else
        spdlog::set_level(spdlog::level::info);
}

void write_output(const std::string& text, const std::string& out)
{
    if (out.empty() || out == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(out, std::ios::binary | std::ios::trunc);
    if (!f)
        throw aquaseg::Error(aquaseg::ErrorCode::IoError, out + ": cannot open for writing");
    f << text;
}

struct RunOptions {
    std::string config;
    std::string manifest;
    std::optional<double> beta, gamma, w_max, tau, temperature;
    std::optional<int> geo_stage;
    std::optional<std::size_t> workers;
    std::string out;
    bool no_gmg = false, no_csa = false, no_templates = false, dump_predictions = false;
};

aquaseg::RunConfig build_run_config(const RunOptions& o)
{
    aquaseg::RunConfig cfg = o.config.empty() ? aquaseg::RunConfig{} : aquaseg::load_run_config(o.config);
    if (!o.manifest.empty())
        cfg.manifest_path = o.manifest;
    if (o.beta)
        cfg.gmg.beta = *o.beta;
    if (o.gamma)
        cfg.gmg.gamma = *o.gamma;
    if (o.geo_stage)
        cfg.gmg.geo_stage = *o.geo_stage;
    if (o.w_max)
        cfg.fusion.w_max = *o.w_max;
    if (o.tau)
        cfg.fusion.tau = *o.tau;
    if (o.temperature)
        cfg.temperature = *o.temperature;
    if (o.workers)
        cfg.workers = *o.workers;
    if (!o.out.empty())
        cfg.output_dir = o.out;
    if (o.no_gmg)
        cfg.enable_gmg = false;
    if (o.no_csa)
        cfg.enable_csa = false;
    if (o.no_templates)
        cfg.enable_templates = false;
    if (o.dump_predictions)
        cfg.dump_predictions = true;
    if (cfg.manifest_path.empty())
        throw aquaseg::Error(aquaseg::ErrorCode::ConfigError, "no manifest given (--manifest or config 'manifest')");
    cfg.validate();
    return cfg;
}

int cmd_validate(const std::string& manifest_path)
{
    const auto m = aquaseg::load_manifest(manifest_path);
    std::cout << manifest_path << ": " << m.registry.size() << " categories, " << m.samples.size() << " samples\n";
    for (const auto& split : m.registry.splits()) {
        std::size_t covered = 0;
        std::cout << "  split " << split.name << ":";
        for (const auto& g : split.groups) {
            std::cout << " " << g.name << "=" << g.members.size();
            covered += g.members.size();
        }
        std::cout << " (covers " << covered << ")\n";
    }
    return 0;
}

int cmd_sentences(const std::string& manifest_path, const std::string& out)
{
    const auto m = aquaseg::load_manifest(manifest_path);
    aquaseg::json doc;
    doc["version"] = aquaseg::schema_version;
    doc["sentences"] = aquaseg::json::array();
    for (const auto& s : m.samples) {
        if (!s.reasoning_path)
            continue;
        try {
            const auto record = aquaseg::load_reasoning(*s.reasoning_path);
            doc["sentences"].push_back({{"sample_id", s.sample_id},
                                        {"sentence", aquaseg::build_reasoning_sentence(record)}});
        } catch (const aquaseg::Error& e) {
            spdlog::warn("sample '{}': skipping reasoning record ({})", s.sample_id, e.what());
        }
    }
    write_output(doc.dump(2) + "\n", out);
    return 0;
}

int cmd_prompts(const std::string& registry_path, const std::string& templates_path, const std::string& out)
{
    const auto registry = aquaseg::load_registry(registry_path);
    const auto bank = aquaseg::TemplateBank::load(templates_path);
    aquaseg::json doc;
    doc["version"] = aquaseg::schema_version;
    doc["templates"] = bank.size();
    doc["categories"] = aquaseg::json::array();
    for (std::size_t i = 0; i < registry.size(); ++i)
        doc["categories"].push_back(
            {{"index", i}, {"name", registry.names()[i]}, {"prompts", bank.instantiate(registry.names()[i])}});
    write_output(doc.dump(2) + "\n", out);
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    setup_logging();

    CLI::App app{"Training-free open-vocabulary underwater segmentation: evaluation core"};
    app.require_subcommand(1);

    RunOptions run_opts;
    auto* run = app.add_subcommand("run", "Evaluate a manifest and write metrics.json / metrics.csv / per-class-iou.csv");
    run->add_option("--config", run_opts.config, "TOML run configuration")->check(CLI::ExistingFile);
    run->add_option("--manifest", run_opts.manifest, "Benchmark manifest (JSON)");
    run->add_option("--beta", run_opts.beta, "GMG centering coefficient (default 1.2)");
    run->add_option("--gamma", run_opts.gamma, "GMG scaling coefficient (default 3.0)");
    run->add_option("--geo-stage", run_opts.geo_stage, "Geometric encoder stage 0-3 (default 3)");
    run->add_option("--w-max", run_opts.w_max, "Fusion weight clamp (default 0.5)");
    run->add_option("--tau", run_opts.tau, "Fusion similarity gate (default 0.5)");
    run->add_option("--temperature", run_opts.temperature, "Softmax temperature (default 0.01)");
    run->add_option("--workers", run_opts.workers, "Worker threads (default 1)");
    run->add_option("--out", run_opts.out, "Output directory");
    run->add_flag("--no-gmg", run_opts.no_gmg, "Disable geometric correction");
    run->add_flag("--no-csa", run_opts.no_csa, "Disable reasoning fusion");
    run->add_flag("--no-templates", run_opts.no_templates, "Use the single-template text bank");
    run->add_flag("--dump-predictions", run_opts.dump_predictions, "Write predicted label maps as .npy");

    std::string manifest_path, out, registry_path, templates_path;
    auto* validate = app.add_subcommand("validate", "Load and validate a manifest");
    validate->add_option("--manifest", manifest_path, "Manifest (JSON)")->required();

    auto* sentences = app.add_subcommand("sentences", "Emit one reasoning sentence per sample for text encoding");
    sentences->add_option("--manifest", manifest_path, "Manifest (JSON)")->required();
    sentences->add_option("--out", out, "Output file (default stdout)");

    auto* prompts = app.add_subcommand("prompts", "Instantiate the template bank for every category");
    prompts->add_option("--registry", registry_path, "Registry or manifest (JSON)")->required();
    prompts->add_option("--templates", templates_path, "Template bank (templates.txt)")->required();
    prompts->add_option("--out", out, "Output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_config_error;
    }

    try {
        if (*run) {
            aquaseg::run(build_run_config(run_opts));
            return 0;
        }
        if (*validate)
            return cmd_validate(manifest_path);
        if (*sentences)
            return cmd_sentences(manifest_path, out);
        if (*prompts)
            return cmd_prompts(registry_path, templates_path, out);
    } catch (const aquaseg::Error& e) {
        spdlog::error("{}", e.what());
        return e.code() == aquaseg::ErrorCode::ConfigError ? exit_config_error : exit_data_error;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return exit_data_error;
    }
    return 0;
}
