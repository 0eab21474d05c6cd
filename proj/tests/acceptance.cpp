// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any selected criterion fails.
//
//   acceptance                 run everything
//   acceptance --only NAME     run one criterion
//   acceptance --list          list criterion names

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "aquaseg/aquaseg.hpp"
#include "oracle/gmg_oracle.hpp"
#include "test_support.hpp"

using namespace aquaseg;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void fail(const std::string& why)
    {
        if (pass)
            detail = why;
        pass = false;
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int precision = 3)
{
    std::ostringstream s;
    s.precision(precision);
    s << v;
    return s.str();
}

// Random instances shared by the GMG criteria: grids up to 4x4, C <= 8,
// C_g <= 4, beta in {0.8, 1.0, 1.2}, gamma in {1, 3, 6}.
struct GmgInstance {
    FeatureGrid<> clip;
    FeatureGrid<> geo;
    double beta;
    double gamma;
};

std::vector<GmgInstance> gmg_suite(std::size_t count)
{
    std::mt19937_64 rng(20251016);
    std::uniform_int_distribution<std::size_t> side(1, 4), channels(1, 8), geo_channels(1, 4), pick(0, 2);
    constexpr double betas[] = {0.8, 1.0, 1.2};
    constexpr double gammas[] = {1.0, 3.0, 6.0};
    std::vector<GmgInstance> out;
    for (std::size_t i = 0; i < count; ++i) {
        GmgInstance inst;
        const std::size_t ch = channels(rng);
        inst.clip = support::random_grid(rng, side(rng), side(rng), ch);
        inst.geo = support::random_grid(rng, side(rng), side(rng), geo_channels(rng));
        inst.beta = betas[pick(rng)];
        inst.gamma = gammas[pick(rng)];
        out.push_back(std::move(inst));
    }
    return out;
}

Outcome gmg_oracle_equivalence()
{
    Outcome o;
    const auto suite = gmg_suite(200);
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (std::size_t i = 0; i < suite.size(); ++i) {
        const auto& s = suite[i];
        const auto got = gmg_forward(s.clip, s.geo, GmgConfig{s.beta, s.gamma, 3});
        const auto want = oracle::gmg(s.clip, s.geo, s.beta, s.gamma);
        for (std::size_t p = 0; p < want.size(); ++p)
            for (std::size_t k = 0; k < got.channels(); ++k)
                worst = std::max(worst, std::fabs(got.position(p)[k] - static_cast<double>(want[p][k])));
    }
    const double elapsed = seconds_since(t0);
    o.detail = "200 instances, max |diff| " + fmt(worst) + " (tol 1e-5), " + fmt(elapsed) + " s (limit 10 s)";
    if (!(worst <= 1e-5))
        o.fail("max |diff| " + fmt(worst) + " exceeds 1e-5");
    if (elapsed >= 10.0)
        o.fail("runtime " + fmt(elapsed) + " s exceeds 10 s");
    return o;
}

Outcome attention_invariants()
{
    Outcome o;
    std::size_t rows = 0, fallbacks = 0;
    for (const auto& s : gmg_suite(200)) {
        const auto sim = self_similarity(s.geo);
        std::vector<Matrix<>> masks;
        std::vector<AttentionMap<>> maps;
        for (double gamma : {1.0, 3.0, 6.0}) {
            masks.push_back(sharpen_and_mask(sim, GmgConfig{s.beta, gamma, 3}));
            maps.push_back(attention_from_logits(masks.back()));
        }
        for (const auto& a : maps) {
            for (std::size_t i = 0; i < a.n(); ++i) {
                ++rows;
                const auto row = a.weights.row(i);
                const bool fallback = std::ranges::find(a.fallback_rows, i) != a.fallback_rows.end();
                if (fallback) {
                    ++fallbacks;
                    for (std::size_t j = 0; j < row.size(); ++j)
                        if (row[j] != (i == j ? 1.0 : 0.0))
                            o.fail("fallback row " + std::to_string(i) + " is not an exact identity row");
                    continue;
                }
                double sum = 0.0;
                for (double v : row)
                    sum += v;
                if (!(std::fabs(sum - 1.0) <= 1e-6))
                    o.fail("row sum " + fmt(sum, 17) + " outside 1 +/- 1e-6");
            }
        }
        for (std::size_t g = 1; g < masks.size(); ++g) {
            for (std::size_t e = 0; e < masks[0].data().size(); ++e)
                if (std::isinf(masks[0].data()[e]) != std::isinf(masks[g].data()[e]))
                    o.fail("gamma changed the mask");
            for (std::size_t i = 0; i < maps[0].n(); ++i)
                if (argmax<double>(maps[0].weights.row(i)) != argmax<double>(maps[g].weights.row(i)))
                    o.fail("gamma changed a row argmax");
        }
    }
    if (o.pass)
        o.detail = std::to_string(rows) + " rows checked (" + std::to_string(fallbacks) +
                   " identity fallbacks), mask and argmax stable across gamma in {1,3,6}";
    return o;
}

Outcome csa_gate_algebra()
{
    Outcome o;
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const auto e = support::random_unit_rows(rng, 1 + trial % 12, 2 + trial % 9);
        const auto r = support::random_matrix(rng, 1, e.channels());
        if (!(fuse(e, r, FusionConfig{0.5, 1.0}) == e))
            o.fail("tau=1.0 changed E_t (trial " + std::to_string(trial) + ")");
        if (!(fuse(e, r, FusionConfig{0.0, 0.5}) == e))
            o.fail("w_max=0 changed E_t (trial " + std::to_string(trial) + ")");
    }
    const EmbeddingMatrix<> e{Matrix<>(1, 2, std::vector<double>{0.8, 0.6}), true};
    const auto out = fuse(e, Matrix<>(1, 2, std::vector<double>{1.0, 0.0}), FusionConfig{0.5, 0.5});
    const double d0 = std::fabs(out.values(0, 0) - 0.9079), d1 = std::fabs(out.values(0, 1) - 0.4190);
    if (!(d0 <= 1e-4 && d1 <= 1e-4))
        o.fail("worked example gave [" + fmt(out.values(0, 0), 6) + ", " + fmt(out.values(0, 1), 6) + "]");
    if (o.pass)
        o.detail = "tau=1.0 and w_max=0 bit-exact on 200 random inputs; [0.8,0.6]+[1,0] -> [" +
                   fmt(out.values(0, 0), 6) + ", " + fmt(out.values(0, 1), 6) + "]";
    return o;
}

const Manifest& fixture()
{
    static const Manifest m = load_manifest(support::fixture_dir() / "manifest.json");
    return m;
}

Outcome ablation_identity()
{
    Outcome o;
    RunConfig off;
    off.enable_csa = false;
    RunConfig tau;
    tau.fusion.tau = 1.0;
    const auto a = evaluate(fixture(), off);
    const auto b = evaluate(fixture(), tau);
    const auto ja = report_to_json(a, fixture().registry).dump();
    const auto jb = report_to_json(b, fixture().registry).dump();
    if (!(a == b) || ja != jb)
        o.fail("CSA-off and tau=1.0 reports differ: mIoU " + fmt(a.miou, 17) + " vs " + fmt(b.miou, 17));
    else
        o.detail = "CSA off == tau=1.0 (mIoU " + fmt(a.miou, 6) + ")";
    return o;
}

Outcome metrics_correctness()
{
    Outcome o;
    const CategoryRegistry reg({"Background", "Fish"}, {{"all", {{"everything", {0, 1}}}}});
    ConfusionMatrix cm(2);
    cm(0, 0) = 3;
    cm(0, 1) = 1;
    cm(1, 0) = 1;
    cm(1, 1) = 5;
    const auto r = compute(cm, reg);
    if (!(r.per_class[0].iou && std::fabs(*r.per_class[0].iou - 0.6) <= 1e-12))
        o.fail("IoU_0 != 0.6");
    if (!(r.per_class[1].iou && std::fabs(*r.per_class[1].iou - 5.0 / 7.0) <= 1e-12))
        o.fail("IoU_1 != 5/7");
    if (!(std::fabs(r.miou - 0.6571) <= 1e-4))
        o.fail("mIoU " + fmt(r.miou, 8));
    if (!(std::fabs(r.macc - 0.7917) <= 1e-4))
        o.fail("mAcc " + fmt(r.macc, 8));
    if (r.aacc != 0.8)
        o.fail("aAcc " + fmt(r.aacc, 17) + " is not exactly 0.8");
    if (r.grouped[0].miou != r.miou)
        o.fail("single-group mIoU differs from mIoU");

    ConfusionMatrix perfect(2);
    perfect.accumulate(LabelMap(3, 3, std::vector<std::uint16_t>{0, 1, 1, 0, 0, 1, 255, 1, 0}),
                       LabelMap(3, 3, std::vector<std::uint16_t>{0, 1, 1, 0, 0, 1, 255, 1, 0}));
    const auto p = compute(perfect, reg);
    if (p.aacc != 1.0 || p.miou != 1.0 || p.macc != 1.0 || p.grouped[0].miou != 1.0)
        o.fail("perfect prediction is not all 1.0");

    // merge of per-thread partials vs serial accumulation
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> label(0, 5);
    std::vector<std::pair<LabelMap, LabelMap>> samples;
    for (int i = 0; i < 32; ++i) {
        LabelMap pred(11, 13), gt(11, 13);
        for (auto& v : pred.labels)
            v = static_cast<std::uint16_t>(label(rng) % 5);
        for (auto& v : gt.labels) {
            const int x = label(rng);
            v = x == 5 ? LabelMap::ignore : static_cast<std::uint16_t>(x);
        }
        samples.emplace_back(std::move(pred), std::move(gt));
    }
    ConfusionMatrix serial(5);
    for (const auto& [pred, gt] : samples)
        serial.accumulate(pred, gt);
    for (std::size_t threads : {2u, 3u, 8u}) {
        std::vector<ConfusionMatrix> partial(threads, ConfusionMatrix(5));
        {
            std::vector<std::jthread> pool;
            for (std::size_t t = 0; t < threads; ++t)
                pool.emplace_back([&, t] {
                    for (std::size_t i = t; i < samples.size(); i += threads)
                        partial[t].accumulate(samples[i].first, samples[i].second);
                });
        }
        ConfusionMatrix merged(5);
        for (const auto& m : partial)
            merged += m;
        if (!(merged == serial))
            o.fail("merged partials differ from serial accumulation (" + std::to_string(threads) + " threads)");
    }
    if (o.pass)
        o.detail = "IoU (0.6, 5/7), mIoU " + fmt(r.miou, 6) + ", mAcc " + fmt(r.macc, 6) +
                   ", aAcc 0.8; perfect -> 1.0; merge == serial; single group == mIoU";
    return o;
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome end_to_end_regression()
{
    Outcome o;
    const auto t0 = Clock::now();
    const auto pinned_path = support::fixture_dir() / "expected" / "default.json";
    const auto pinned = report_from_json(read_json_file(pinned_path), pinned_path.string());

    const auto scratch = support::scratch_dir("acceptance_e2e");
    std::string reference_json;
    MetricsReport reference;
    for (std::size_t workers : {1u, 2u, 4u, 8u}) {
        RunConfig cfg;
        cfg.manifest_path = support::fixture_dir() / "manifest.json";
        cfg.workers = workers;
        cfg.output_dir = scratch / ("w" + std::to_string(workers));
        const auto r = run(cfg);
        const auto json_bytes = slurp(cfg.output_dir / "metrics.json");
        if (workers == 1) {
            reference = r;
            reference_json = json_bytes;
            if (const auto diff = support::report_diff(r, pinned, 1e-9); !diff.empty())
                o.fail("differs from pinned oracle report: " + diff);
        } else if (!(r == reference) || json_bytes != reference_json) {
            o.fail("report with " + std::to_string(workers) + " workers is not bit-identical");
        }
    }
    const double elapsed = seconds_since(t0);
    if (elapsed >= 30.0)
        o.fail("runtime " + fmt(elapsed) + " s exceeds 30 s");
    if (o.pass)
        o.detail = "mIoU " + fmt(reference.miou, 9) + " matches pinned report within 1e-9; workers 1/2/4/8 identical; " +
                   fmt(elapsed) + " s";
    return o;
}

Outcome registry_fidelity()
{
    Outcome o;
    const auto reg = load_registry(support::data_dir() / "aquaov255_registry.json");
    const std::tuple<const char*, const char*, std::size_t> counts[] = {
        {"taxonomy", "Fish", 154},      {"taxonomy", "ArtificialObjects", 32}, {"commonness", "Common", 47},
        {"commonness", "General", 68}, {"commonness", "Special", 139},
    };
    std::string summary;
    for (const auto& [split, group, want] : counts) {
        const auto* g = reg.group(split, group);
        const std::size_t got = g ? g->members.size() : 0;
        summary += std::string(summary.empty() ? "" : ", ") + group + " " + std::to_string(got);
        if (got != want)
            o.fail(std::string(group) + " has " + std::to_string(got) + " categories, expected " +
                   std::to_string(want));
    }
    if (reg.size() != 255 || reg.names()[0] != "Background")
        o.fail("expected 254 foreground categories plus Background at index 0");
    for (const auto& split : reg.splits()) {
        std::size_t covered = 0;
        for (const auto& g : split.groups)
            covered += g.members.size();
        if (covered != 254)
            o.fail("split " + split.name + " covers " + std::to_string(covered) + " categories, expected 254");
    }
    if (o.pass)
        o.detail = summary + "; 254 foreground + background";
    else
        o.detail += " (" + summary + ")";
    return o;
}

const std::vector<std::pair<std::string, std::function<Outcome()>>>& criteria()
{
    static const std::vector<std::pair<std::string, std::function<Outcome()>>> all = {
        {"gmg_oracle_equivalence", gmg_oracle_equivalence},
        {"attention_invariants", attention_invariants},
        {"csa_gate_algebra", csa_gate_algebra},
        {"ablation_identity", ablation_identity},
        {"metrics_correctness", metrics_correctness},
        {"end_to_end_regression", end_to_end_regression},
        {"registry_fidelity", registry_fidelity},
    };
    return all;
}

} // namespace

int main(int argc, char** argv)
{
    spdlog::set_level(spdlog::level::err);
    std::string only;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--list") == 0) {
            for (const auto& [name, fn] : criteria())
                std::cout << name << "\n";
            return 0;
        }
        if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
            only = argv[++i];
            continue;
        }
        std::cerr << "usage: acceptance [--list] [--only NAME]\n";
        return 2;
    }

    int failures = 0, ran = 0;
    for (const auto& [name, fn] : criteria()) {
        if (!only.empty() && name != only)
            continue;
        ++ran;
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.fail(std::string("threw: ") + e.what());
        }
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
        failures += !o.pass;
    }
    if (ran == 0) {
        std::cerr << "unknown criterion '" << only << "'\n";
        return 2;
    }
    return failures ? 1 : 0;
}
