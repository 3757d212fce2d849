#include "cli.hpp"

#include "lutpim/binviz.hpp"
#include "lutpim/errors.hpp"
#include "lutpim/inference.hpp"
#include "lutpim/metrics.hpp"
#include "lutpim/perf_model.hpp"
#include "lutpim/training.hpp"
#include "lutpim/weights.hpp"
#include "lutpim/zoo.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <ostream>

namespace lutpim::cli {
namespace {

namespace fs = std::filesystem;

constexpr std::size_t kCalibrationSamples = 64;

class UsageError : public Error {
public:
    using Error::Error;
};

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    while (!s.empty()) {
        const auto comma = s.find(',');
        const auto item = trim(s.substr(0, comma));
        if (!item.empty()) {
            out.emplace_back(item);
        }
        if (comma == std::string_view::npos) {
            break;
        }
        s.remove_prefix(comma + 1);
    }
    return out;
}

template <typename T>
T parse_number(std::string_view key, std::string_view v) {
    T out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
        throw UsageError(fmt::format("config key '{}': '{}' is not a valid number", key, v));
    }
    return out;
}

bool single_precision_command(std::string_view c) {
    return c == "quantize" || c == "simulate";
}

bool known_command(std::string_view c) {
    return c == "convert" || c == "corpus" || c == "fit" || c == "quantize" || c == "simulate" || c == "bench" ||
           c == "report";
}

std::string class_name(std::size_t k, std::size_t classes) {
    if (classes == 2) {
        return std::string(to_string(static_cast<Label>(k)));
    }
    return fmt::format("class {}", k);
}

/// Evenly strided model inputs from a corpus.
std::vector<std::vector<double>> calibration_inputs(const NetworkSpec& net, std::span<const CorpusSample> corpus) {
    std::vector<std::vector<double>> out;
    const std::size_t step = std::max<std::size_t>(1, corpus.size() / kCalibrationSamples);
    for (std::size_t i = 0; i < corpus.size() && out.size() < kCalibrationSamples; i += step) {
        out.push_back(image_input(net, binary_to_model_image(corpus[i].bytes, net.input.h)));
    }
    return out;
}

GrayImage load_model_image(const NetworkSpec& net, const fs::path& path) {
    if (net.input.c != 1 || net.input.h != net.input.w) {
        throw ShapeError(fmt::format("network '{}' takes {} input, not a grayscale image", net.name,
                                     format_dims(net.input)));
    }
    if (path.extension() == ".pgm") {
        GrayImage img = read_pgm(path);
        if (img.width != net.input.w || img.height != net.input.h) {
            img = resize_to(img, net.input.h);
        }
        return img;
    }
    const auto bytes = read_file_bytes(path);
    return binary_to_model_image(bytes, net.input.h);
}

SystemConfig system_for(const RunConfig& cfg, unsigned precision) {
    SystemConfig s;
    s.cluster_count = cfg.clusters;
    s.precision_bits = precision;
    s.validate();
    return s;
}

void emit(const RunConfig& cfg, std::ostream& out, const std::string& text) {
    out << text;
    if (!cfg.out.empty()) {
        write_file_text(cfg.out, text);
    }
}

int cmd_convert(const RunConfig& cfg, std::ostream& out) {
    const auto bytes = read_file_bytes(cfg.input);
    GrayImage img = bytes_to_image(bytes);
    if (cfg.resize > 0) {
        img = resize_to(img, cfg.resize);
    }
    write_pgm(cfg.out, img);
    out << fmt::format("{} -> {} ({}x{})\n", cfg.input, cfg.out, img.width, img.height);
    return kExitOk;
}

int cmd_corpus(const RunConfig& cfg, std::ostream& out) {
    const auto corpus = generate_corpus(cfg.benign, cfg.malware, cfg.seed);
    const auto entries = write_corpus(cfg.out, corpus);
    out << fmt::format("wrote {} samples and manifest.csv to {}\n", entries.size(), cfg.out);
    return kExitOk;
}

int cmd_fit(const RunConfig& cfg, std::ostream& out) {
    const NetworkSpec net = resolve_network(cfg.network(), cfg.input_dims);
    const auto corpus = read_corpus(cfg.input);
    const WeightSet w = fit_classifier(net, corpus, cfg.seed);
    const MetricsReport m = compute_metrics(predict_corpus(float_classifier(net, w), corpus, net.input.h));
    save_weights(w, cfg.out);
    out << fmt::format("fitted {} on {} samples: training accuracy {}\n", net.name, corpus.size(), m.accuracy);
    return kExitOk;
}

int cmd_quantize(const RunConfig& cfg, std::ostream& out) {
    const NetworkSpec net = resolve_network(cfg.network(), cfg.input_dims);
    const WeightSet w = load_weights(cfg.weights);
    validate_weights(net, w);
    const auto corpus = cfg.input.empty() ? generate_corpus(kCalibrationSamples / 2, kCalibrationSamples / 2, cfg.seed)
                                          : read_corpus(cfg.input);
    const WeightSet wq = quantize_model(net, w, calibration_inputs(net, corpus), cfg.precision());
    save_weights(wq, cfg.out);
    out << fmt::format("quantized {} to {} bits -> {}\n", net.name, cfg.precision(), cfg.out);
    return kExitOk;
}

std::string perf_text(const PerfReport& r) {
    const std::span<const PerfReport> one(&r, 1);
    std::string text = report_csv(one);
    for (const auto& a : r.annotations) {
        text += fmt::format("# {}: {}\n", a.subject, a.text);
    }
    return text;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
    const NetworkSpec net = resolve_network(cfg.network(), cfg.input_dims);
    const SystemConfig sys = system_for(cfg, cfg.precision());
    if (cfg.mode == "perf") {
        emit(cfg, out, perf_text(estimate(net, sys, cfg.precision())));
        return kExitOk;
    }
    const WeightSet wq = load_weights(cfg.weights);
    validate_weights(net, wq);
    if (fs::path(cfg.input).extension() == ".csv") {
        const auto corpus = read_corpus(cfg.input);
        const auto preds = predict_corpus(lut_classifier(net, wq, sys), corpus, net.input.h);
        const std::vector<std::pair<std::string, MetricsReport>> rows{
            {fmt::format("{}-bit", cfg.precision()), compute_metrics(preds)}};
        emit(cfg, out, metrics_table(rows));
        return kExitOk;
    }
    const GrayImage img = load_model_image(net, cfg.input);
    const LutResult r = infer_lut(net, wq, img, sys);
    const LedgerSummary s = ledger_summary(r.ledger);
    const std::size_t k = argmax(r.output);
    std::string text;
    text += fmt::format("network: {}\n", net.name);
    text += fmt::format("precision_bits: {}\n", cfg.precision());
    text += fmt::format("clusters: {}\n", cfg.clusters);
    text += fmt::format("predicted: {} (class {})\n", class_name(k, r.output.size()), k);
    text += fmt::format("probabilities: {}\n", fmt::join(r.output, ","));
    text += fmt::format("logits: {}\n", fmt::join(r.logits, ","));
    text += fmt::format("accumulators: {}\n", fmt::join(r.accumulators, ","));
    text += fmt::format("mac_count: {}\n", r.ledger.mac_count());
    text += fmt::format("mac8_calls: {}\n", r.mac8_calls);
    text += fmt::format("latency_ns: {}\n", s.total_ns);
    text += fmt::format("energy_pj: {}\n", s.total_pj);
    emit(cfg, out, text);
    return kExitOk;
}

std::vector<PerfReport> sweep(const RunConfig& cfg) {
    std::vector<NetworkSpec> nets;
    if (cfg.networks.empty()) {
        for (auto name : zoo_names()) {
            nets.push_back(resolve_network(name, cfg.input_dims));
        }
    } else {
        for (const auto& name : cfg.networks) {
            nets.push_back(resolve_network(name, cfg.input_dims));
        }
    }
    std::vector<PerfReport> reports;
    for (const auto& net : nets) {
        for (unsigned p : cfg.precisions) {
            reports.push_back(estimate(net, system_for(cfg, p), p));
        }
    }
    return reports;
}

int cmd_bench(const RunConfig& cfg, std::ostream& out) {
    const auto reports = sweep(cfg);
    const std::string csv = report_csv(reports);
    if (!cfg.detail_out.empty()) {
        write_file_text(cfg.detail_out, layer_csv(reports));
    }
    write_file_text(cfg.out, csv);
    out << fmt::format("wrote {} rows to {}\n", reports.size(), cfg.out);
    return kExitOk;
}

int cmd_report(const RunConfig& cfg, std::ostream& out) {
    emit(cfg, out, compare_report(sweep(cfg)));
    return kExitOk;
}

int dispatch(const RunConfig& cfg, std::ostream& out) {
    if (cfg.command == "convert") return cmd_convert(cfg, out);
    if (cfg.command == "corpus") return cmd_corpus(cfg, out);
    if (cfg.command == "fit") return cmd_fit(cfg, out);
    if (cfg.command == "quantize") return cmd_quantize(cfg, out);
    if (cfg.command == "simulate") return cmd_simulate(cfg, out);
    if (cfg.command == "bench") return cmd_bench(cfg, out);
    return cmd_report(cfg, out);
}

} // namespace

std::vector<std::string> RunConfig::problems() const {
    std::vector<std::string> p;
    auto need = [&](const std::string& v, std::string_view flag) {
        if (v.empty()) {
            p.push_back(fmt::format("{} requires --{}", command, flag));
        }
    };
    if (!known_command(command)) {
        p.push_back(fmt::format("unknown command '{}'", command));
        return p;
    }
    if (precisions.empty()) {
        p.emplace_back("at least one --precision is required");
    }
    for (unsigned b : precisions) {
        if (!supported_bits(b)) {
            p.push_back(fmt::format("--precision must be 4, 8 or 16, got {}", b));
        }
    }
    if (single_precision_command(command) && precisions.size() > 1) {
        p.push_back(fmt::format("{} takes a single --precision", command));
    }
    if (clusters == 0 || clusters % 16 != 0) {
        p.push_back(fmt::format("--clusters must be a positive multiple of 16, got {}", clusters));
    }
    if (mode != "functional" && mode != "perf") {
        p.push_back(fmt::format("--mode must be functional or perf, got '{}'", mode));
    }
    if (!input_dims.empty()) {
        try {
            parse_dims(input_dims);
        } catch (const Error& e) {
            p.push_back(fmt::format("--input-dims: {}", e.what()));
        }
    }
    if (command != "bench" && command != "report" && networks.size() > 1) {
        p.push_back(fmt::format("{} takes a single --network", command));
    }
    if (command == "convert") {
        need(input, "input");
        need(out, "out");
    } else if (command == "corpus") {
        need(out, "out");
        if (benign + malware == 0) {
            p.emplace_back("corpus needs at least one sample");
        }
    } else if (command == "fit") {
        need(input, "input");
        need(out, "out");
    } else if (command == "quantize") {
        need(weights, "weights");
        need(out, "out");
    } else if (command == "simulate") {
        if (mode == "functional") {
            need(weights, "weights");
            need(input, "input");
        } else if (networks.empty()) {
            p.emplace_back("simulate --mode perf requires --network");
        }
    } else if (command == "bench") {
        need(out, "out");
    }
    return p;
}

void apply_config_file(RunConfig& cfg, std::string_view text) {
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto eol = text.find('\n');
        const std::string_view line = trim(text.substr(0, eol));
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
        ++line_no;
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw UsageError(fmt::format("config line {}: expected 'key = value'", line_no));
        }
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (key == "input") cfg.input = value;
        else if (key == "out") cfg.out = value;
        else if (key == "weights") cfg.weights = value;
        else if (key == "detail-out") cfg.detail_out = value;
        else if (key == "network") cfg.networks = split_list(value);
        else if (key == "precision") {
            cfg.precisions.clear();
            for (const auto& v : split_list(value)) {
                cfg.precisions.push_back(parse_number<unsigned>(key, v));
            }
        } else if (key == "mode") cfg.mode = value;
        else if (key == "input-dims") cfg.input_dims = value;
        else if (key == "clusters") cfg.clusters = parse_number<std::uint32_t>(key, value);
        else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
        else if (key == "resize") cfg.resize = parse_number<std::size_t>(key, value);
        else if (key == "benign") cfg.benign = parse_number<std::size_t>(key, value);
        else if (key == "malware") cfg.malware = parse_number<std::size_t>(key, value);
        else throw UsageError(fmt::format("config line {}: unknown key '{}'", line_no, key));
    }
}

NetworkSpec resolve_network(std::string_view name_or_path, std::string_view input_dims) {
    if (is_known_network(name_or_path)) {
        Shape dims = name_or_path == "tinymalnet" ? kMalwareInput : kBenchmarkInput;
        if (!input_dims.empty()) {
            dims = parse_dims(input_dims);
        }
        return zoo_network(name_or_path, dims);
    }
    const fs::path path(name_or_path);
    if (!name_or_path.empty() && fs::is_regular_file(path)) {
        return NetworkSpec::load(path);
    }
    return zoo_network(name_or_path, kBenchmarkInput);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    CLI::App app{"LUT-based processing-in-memory CNN simulator"};
    app.require_subcommand(1);
    std::string precision_text;
    std::string network_text;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", cfg.config, "key = value file; its entries override flags");
        sub->add_option("--seed", cfg.seed, "Seed for every random draw (default 0)");
        sub->add_option("--out", cfg.out, "Output path");
    };
    auto add_model = [&](CLI::App* sub) {
        sub->add_option("--network", network_text, "Zoo name or network config path (lists: comma separated)");
        sub->add_option("--input-dims", cfg.input_dims, "Network input as HxWxC, e.g. 224x224x3");
        sub->add_option("--precision", precision_text, "Bits per operand: 4, 8 or 16 (lists: comma separated)");
        sub->add_option("--clusters", cfg.clusters, "PIM clusters in the bank (default 256)");
    };

    auto* convert = app.add_subcommand("convert", "Binary file to grayscale PGM");
    add_common(convert);
    convert->add_option("--input", cfg.input, "Binary file");
    convert->add_option("--resize", cfg.resize, "Resize to N x N (0 keeps the width-table image)");

    auto* corpus = app.add_subcommand("corpus", "Write a synthetic labelled corpus and manifest.csv");
    add_common(corpus);
    corpus->add_option("--benign", cfg.benign, "Benign samples (default 500)");
    corpus->add_option("--malware", cfg.malware, "Malware samples (default 500)");

    auto* fit = app.add_subcommand("fit", "Random conv features + closed-form readout fit on a corpus");
    add_common(fit);
    add_model(fit);
    fit->add_option("--input", cfg.input, "Training manifest.csv");

    auto* quantize = app.add_subcommand("quantize", "Quantize real weights and calibrate activations");
    add_common(quantize);
    add_model(quantize);
    quantize->add_option("--weights", cfg.weights, "Real-valued weight container");
    quantize->add_option("--input", cfg.input, "Calibration manifest.csv (default: synthetic)");

    auto* simulate = app.add_subcommand("simulate", "Run one input (or a manifest) on the LUT backend");
    add_common(simulate);
    add_model(simulate);
    simulate->add_option("--weights", cfg.weights, "Quantized weight container");
    simulate->add_option("--input", cfg.input, "Binary, .pgm image, or manifest.csv");
    simulate->add_option("--mode", cfg.mode, "functional or perf");

    auto* bench = app.add_subcommand("bench", "Analytic sweep over networks x precisions to CSV");
    add_common(bench);
    add_model(bench);
    bench->add_option("--detail-out", cfg.detail_out, "Per-layer CSV path");

    auto* report = app.add_subcommand("report", "Comparison table with reference annotations");
    add_common(report);
    add_model(report);

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        cfg.command = app.get_subcommands().front()->get_name();
        cfg.networks = split_list(network_text);
        if (!precision_text.empty()) {
            cfg.precisions.clear();
            for (const auto& v : split_list(precision_text)) {
                cfg.precisions.push_back(parse_number<unsigned>("precision", v));
            }
        } else if (cfg.command == "bench" || cfg.command == "report") {
            cfg.precisions = {4, 8, 16};
        }
        if (!cfg.config.empty()) {
            const auto raw = read_file_bytes(cfg.config);
            apply_config_file(cfg, {reinterpret_cast<const char*>(raw.data()), raw.size()});
        }
        if (cfg.networks.empty() && cfg.command != "bench" && cfg.command != "report" &&
            !(cfg.command == "simulate" && cfg.mode == "perf")) {
            cfg.networks = {"tinymalnet"};
        }
        if (const auto problems = cfg.problems(); !problems.empty()) {
            for (const auto& p : problems) {
                err << "error: " << p << "\n";
            }
            return kExitUsage;
        }
        return dispatch(cfg, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const UnsupportedOperation& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const AccumulatorOverflow& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    } catch (const UseBeforeProgram& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}

} // namespace lutpim::cli
