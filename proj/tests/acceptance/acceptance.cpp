// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "cli.hpp"

#include "lutpim/binviz.hpp"
#include "lutpim/cluster.hpp"
#include "lutpim/inference.hpp"
#include "lutpim/lut_core.hpp"
#include "lutpim/metrics.hpp"
#include "lutpim/perf_model.hpp"
#include "lutpim/quantizer.hpp"
#include "lutpim/rng.hpp"
#include "lutpim/system.hpp"
#include "lutpim/training.hpp"
#include "lutpim/zoo.hpp"

#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace lutpim;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

bool rel_close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b)); }

Outcome lut_exactness() {
    const auto t0 = std::chrono::steady_clock::now();
    std::size_t mismatches = 0;
    for (OpTag op : kAllOpTags) {
        LutCore core;
        core.program(build_function_table(op));
        for (unsigned a = 0; a < 16; ++a) {
            for (unsigned b = 0; b < 16; ++b) {
                unsigned want = 0;
                switch (op) {
                case OpTag::MUL4: want = a * b; break;
                case OpTag::ADD4: want = a + b; break;
                case OpTag::ADD4C: want = a + b + 1; break;
                case OpTag::MAX4: want = std::max(a, b); break;
                case OpTag::CMP4: want = a > b ? 1 : 0; break;
                case OpTag::PASS: want = a; break;
                }
                mismatches += core.lookup(a, b) != want;
            }
        }
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {mismatches == 0 && s < 1.0,
            fmt::format("{} tables x 256 pairs, {} mismatches, {:.4f} s", std::size(kAllOpTags), mismatches, s)};
}

Outcome cluster_exactness() {
    Cluster cl;
    cl.program_for_mac();
    std::size_t bad = 0;
    for (unsigned a = 0; a < 256; ++a) {
        for (unsigned b = 0; b < 256; ++b) {
            cl.reset_accumulator();
            bad += cl.mac8(static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b)) != a * b;
        }
    }
    DeterministicRng rng(2);
    for (int i = 0; i < 10000; ++i) {
        const auto a = static_cast<std::uint8_t>(rng.uniform(0, 255));
        const auto b = static_cast<std::uint8_t>(rng.uniform(0, 255));
        const auto acc = static_cast<std::uint32_t>(rng.uniform(0, 0xFFFFFFFFULL - 65025));
        cl.reset_accumulator(acc);
        bad += cl.mac8(a, b) != acc + std::uint32_t{a} * b;
    }
    Cluster one;
    one.program_for_mac();
    one.mac8(255, 255);
    const bool timing = one.step_count() == 8 && std::abs(one.busy_ns() - 6.4) < 1e-12 &&
                        ClusterTimingProfile::mac_delay_ns == 6.4;
    return {bad == 0 && timing, fmt::format("75536 MACs, {} mismatches; one MAC = {} steps / {} ns", bad,
                                            one.step_count(), one.busy_ns())};
}

Outcome energy_constants() {
    const MacEnergy e = mac_energy_pj();
    // 9.6 mW, 8.2 mW, 11 mW over 6.4 ns
    const bool mac = rel_close(e.nominal_pj, 61.44, 1e-12) && rel_close(e.min_pj, 52.48, 1e-12) &&
                     rel_close(e.max_pj, 70.4, 1e-12);
    EnergyLedger l;
    l.account_transfer(TransferKind::Intra);
    const bool intra = l.comm_ns() == 63.0 && l.comm_pj() / 1e6 == 0.028;
    return {mac && intra, fmt::format("MAC {} pJ in [{}, {}]; intra {} ns / {} uJ", e.nominal_pj, e.min_pj, e.max_pj,
                                      l.comm_ns(), l.comm_pj() / 1e6)};
}

Outcome quantizer_properties() {
    DeterministicRng rng(4);
    bool ok = true;
    std::string detail;
    for (unsigned bits : {4U, 8U, 16U}) {
        const std::vector<double> range{-2.5, 6.0};
        const QuantParams p = calibrate(range, bits, false);
        double worst = 0.0;
        std::vector<double> xs(10000);
        for (double& x : xs) {
            x = rng.uniform_real(-2.5, 6.0);
            worst = std::max(worst, std::abs(dequantize(quantize(x, p), p) - x));
        }
        std::sort(xs.begin(), xs.end());
        bool monotone = true;
        for (std::size_t i = 1; i < xs.size(); ++i) {
            monotone = monotone && quantize(xs[i - 1], p) <= quantize(xs[i], p);
        }
        const QuantParams sym = calibrate(range, bits, true);
        const bool zero = dequantize(quantize(0.0, sym), sym) == 0.0;
        const bool bound = worst <= p.scale / 2.0 * (1.0 + 1e-12);
        ok = ok && bound && monotone && zero;
        detail += fmt::format("{}b max err {:.3g} <= S/2 {:.3g}{}{}; ", bits, worst, p.scale / 2.0,
                              monotone ? "" : " NOT MONOTONE", zero ? "" : " ZERO MOVED");
    }
    return {ok, detail};
}

Outcome backend_equivalence() {
    DeterministicRng rng(5005);
    std::size_t runs = 0;
    std::size_t mismatches = 0;
    for (std::size_t n = 0; n < 50; ++n) {
        const NetworkSpec net = oracle::random_network(rng, n);
        const WeightSet w = oracle::random_real_weights(net, rng);
        std::vector<std::vector<double>> xs;
        for (int i = 0; i < 10; ++i) {
            xs.push_back(oracle::random_input(net, rng));
        }
        for (unsigned bits : {4U, 8U, 16U}) {
            const WeightSet wq = quantize_model(net, w, xs, bits);
            SystemConfig cfg;
            cfg.precision_bits = bits;
            for (const auto& x : xs) {
                const LutResult got = infer_lut(net, wq, x, cfg);
                const oracle::IntegerResult ref = oracle::integer_forward(net, wq, x);
                bool same = got.accumulators == ref.accumulators && got.logits == ref.logits;
                for (std::size_t l = 0; l < net.layers.size(); ++l) {
                    if (ref.layers[l].coded) {
                        same = same && got.codes[l] == ref.layers[l].codes;
                    }
                }
                ++runs;
                mismatches += !same;
            }
        }
    }
    return {mismatches == 0 && runs == 1500, fmt::format("{} inferences, {} mismatches", runs, mismatches)};
}

Outcome desk_detection() {
    const NetworkSpec net = tinymalnet();
    const auto train = generate_corpus(1000, 1000, 101);
    const auto test = generate_corpus(500, 500, 7);
    const WeightSet w = fit_classifier(net, train, 0);

    std::vector<std::vector<double>> calib;
    const std::size_t step = train.size() / 64;
    for (std::size_t i = 0; i < train.size() && calib.size() < 64; i += step) {
        calib.push_back(image_input(net, binary_to_model_image(train[i].bytes)));
    }

    const auto fp = predict_corpus(float_classifier(net, w), test);
    const MetricsReport fm = compute_metrics(fp);
    double agree[3] = {};
    const unsigned widths[3] = {16, 8, 4};
    for (int i = 0; i < 3; ++i) {
        SystemConfig cfg;
        cfg.precision_bits = widths[i];
        const WeightSet wq = quantize_model(net, w, calib, widths[i]);
        agree[i] = top1_agreement(predict_corpus(lut_classifier(net, wq, cfg), test), fp);
    }
    const bool ok = test.size() == 1000 && fm.accuracy >= 0.95 && agree[1] >= 0.95 && agree[2] >= 0.85 &&
                    agree[0] >= agree[1] && agree[1] >= agree[2];
    return {ok, fmt::format("float accuracy {:.3f} (F1 {:.3f}); agreement 16b {:.3f}, 8b {:.3f}, 4b {:.3f}; "
                            "reference detector 0.987 / 0.987 / 0.982 [{}]",
                            fm.accuracy, fm.f1, agree[0], agree[1], agree[2], kPublishedMarker)};
}

Outcome perf_hand_check() {
    // 8x8x1 -> conv 4@3x3 -> maxpool 2 -> dense 2 (flatten and softmax carry no cost)
    NetworkBuilder b("hand3", Shape{1, 8, 8});
    b.conv("conv", 4, 3).maxpool("pool", 2, 2).flatten().dense("fc", 2).softmax();
    const PerfReport r = estimate(b.build(), SystemConfig{}, 8);

    // conv: 3*3*1*6*6*4 = 1296 MACs, 6 rounds, 16 hop-1 copies
    // pool: 36 outputs, 1 intra copy
    // fc:   36*2 = 72 MACs, 1 round, ceil(72/16) = 5 hop-1 copies
    const std::uint64_t macs = 1368;
    const double latency_ns = 38.4 + 2376.0 + 63.0 + 6.4 + 742.5;  // 3226.3
    const double energy_pj = 79'626.24 + 1'440'000.0 + 28'000.0 + 4'423.68 + 450'000.0;  // 2002049.92
    const double fps = 1e9 / latency_ns;
    const double fpj = 1e12 / energy_pj;

    const bool ok = r.total_macs == macs && rel_close(r.latency_ns, latency_ns, 1e-12) &&
                    rel_close(r.energy_j * 1e12, energy_pj, 1e-12) && rel_close(r.throughput_fps, fps, 1e-9) &&
                    rel_close(r.frames_per_joule, fpj, 1e-9);
    return {ok, fmt::format("MACs {} vs {}; latency {} vs {} ns; {:.6g} fps, {:.6g} frames/J", r.total_macs, macs,
                            r.latency_ns, latency_ns, r.throughput_fps, r.frames_per_joule)};
}

Outcome ordering() {
    bool ok = true;
    std::string detail;
    for (unsigned bits : {4U, 8U, 16U}) {
        const double a = estimate(alexnet(kBenchmarkInput), SystemConfig{}, bits).throughput_fps;
        const double v = estimate(vgg16(kBenchmarkInput), SystemConfig{}, bits).throughput_fps;
        ok = ok && a > v;
    }
    SystemConfig doubled;
    doubled.cluster_count = 512;
    for (std::string_view name : zoo_names()) {
        const NetworkSpec net = zoo_network(name, kBenchmarkInput);
        const PerfReport r8 = estimate(net, SystemConfig{}, 8);
        const PerfReport r16 = estimate(net, SystemConfig{}, 16);
        const PerfReport r512 = estimate(net, doubled, 8);
        // Per layer: ceil(4m/c) vs 4*ceil(m/c), and ceil(m/2c) vs ceil(m/c)/2, differ by under one round.
        const double slack = 6.4 * static_cast<double>(r8.layers.size());
        const bool quad = r16.effective_macs == 4 * r8.total_macs && r16.compute_ns <= 4 * r8.compute_ns + 1e-6 &&
                          r16.compute_ns >= 4 * r8.compute_ns - 4 * slack;
        double exact16 = 0.0;
        for (const auto& l : r8.layers) {
            exact16 += std::ceil(4.0 * static_cast<double>(l.macs) / 256.0) * 6.4;
        }
        const bool halves = std::abs(r512.compute_ns - r8.compute_ns / 2.0) <= slack;
        ok = ok && quad && rel_close(r16.compute_ns, exact16, 1e-12) && halves;
        detail += fmt::format("{} 16b/8b {:.4f}, 512/256 {:.4f}; ", name, r16.compute_ns / r8.compute_ns,
                              r512.compute_ns / r8.compute_ns);
    }
    return {ok, "AlexNet fps > VGG16 fps at 4/8/16 bits; " + detail};
}

Outcome resnet50_discrepancy() {
    const std::vector<PerfReport> r{estimate(resnet50(kBenchmarkInput), SystemConfig{}, 8)};
    std::string found;
    for (const auto& a : r[0].annotations) {
        if (a.text.find("10 ms") != std::string::npos && a.text.find(kPublishedMarker) != std::string::npos) {
            found = a.text;
        }
    }
    const std::string table = compare_report(r);
    return {!found.empty() && table.find(found) != std::string::npos,
            found.empty() ? std::string("annotation missing") : found};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism() {
    const fs::path dir = fs::temp_directory_path() / "lutpim_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ostringstream sink;
    auto tool = [&](std::vector<std::string> args) {
        args.insert(args.begin(), "lutpim");
        return cli::run(args, sink, sink);
    };
    const auto sample = generate_corpus(0, 1, 3).front().bytes;
    write_file_bytes(dir / "sample.bin", sample);
    int codes = 0;
    codes |= tool({"bench", "--out", (dir / "a.csv").string()});
    codes |= tool({"bench", "--out", (dir / "b.csv").string()});
    codes |= tool({"convert", "--input", (dir / "sample.bin").string(), "--out", (dir / "a.pgm").string()});
    codes |= tool({"convert", "--input", (dir / "sample.bin").string(), "--out", (dir / "b.pgm").string()});
    const std::string csv = slurp(dir / "a.csv");
    const std::string pgm = slurp(dir / "a.pgm");
    const bool ok = codes == 0 && !csv.empty() && csv == slurp(dir / "b.csv") && !pgm.empty() &&
                    pgm == slurp(dir / "b.pgm");
    fs::remove_all(dir);
    return {ok, fmt::format("bench CSV {} bytes, convert PGM {} bytes, reruns identical: {}", csv.size(), pgm.size(),
                            ok ? "yes" : "no")};
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"LUT exactness", lut_exactness},
        {"cluster MAC exactness", cluster_exactness},
        {"energy constants", energy_constants},
        {"quantizer properties", quantizer_properties},
        {"backend equivalence", backend_equivalence},
        {"desk-scale detection", desk_detection},
        {"perf-model hand check", perf_hand_check},
        {"ordering properties", ordering},
        {"ResNet-50 discrepancy annotated", resnet50_discrepancy},
        {"determinism", determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, fmt::format("threw: {}", e.what())};
        }
        failures += !o.pass;
        fmt::print("{} {:>2} {}: {}\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
