#include "lutpim/perf_model.hpp"

#include "lutpim/errors.hpp"

#include <algorithm>
#include <fmt/format.h>

namespace lutpim {
namespace {

constexpr std::uint64_t kTileElements = 256;
constexpr std::uint64_t kClustersPerWeightCopy = 16;
constexpr double kResnet50ClaimNs = 10e6;

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

std::vector<const PerfReport*> sorted(std::span<const PerfReport> reports) {
    std::vector<const PerfReport*> out;
    out.reserve(reports.size());
    for (const auto& r : reports) {
        out.push_back(&r);
    }
    std::stable_sort(out.begin(), out.end(), [](const PerfReport* a, const PerfReport* b) {
        if (a->network != b->network) {
            return a->network < b->network;
        }
        if (a->precision_bits != b->precision_bits) {
            return a->precision_bits < b->precision_bits;
        }
        return a->clusters < b->clusters;
    });
    return out;
}

} // namespace

std::uint64_t mac_count(const LayerSpec& l) {
    const Shape& o = l.output_shape;
    switch (l.kind) {
    case LayerKind::Conv2d: return l.kernel_h * l.kernel_w * l.in_channels * o.h * o.w * o.c;
    case LayerKind::DepthwiseConv2d: return l.kernel_h * l.kernel_w * o.c * o.h * o.w;
    case LayerKind::Dense: return l.in_channels * l.out_channels;
    case LayerKind::MaxPool2d:
    case LayerKind::Relu:
    case LayerKind::Flatten:
    case LayerKind::Softmax:
    case LayerKind::ResidualAdd: return 0;
    }
    throw UnsupportedOperation(fmt::format("unknown layer kind {}", static_cast<int>(l.kind)));
}

std::uint64_t mac_count(const NetworkSpec& net) {
    std::uint64_t total = 0;
    for (const auto& l : net.layers) {
        total += mac_count(l);
    }
    return total;
}

unsigned pass_factor(unsigned precision_bits) {
    switch (precision_bits) {
    case 4:
    case 8: return 1;
    case 16: return 4;
    default: throw UnsupportedOperation(fmt::format("unsupported precision {} bits", precision_bits));
    }
}

TransferCounts layer_transfers(const LayerSpec& l, const SystemConfig& cfg, std::uint64_t effective_macs) {
    TransferCounts t;
    switch (l.kind) {
    case LayerKind::MaxPool2d:
    case LayerKind::Relu:
    case LayerKind::ResidualAdd: t.intra = ceil_div(l.output_shape.size(), kTileElements); break;
    case LayerKind::Conv2d:
    case LayerKind::DepthwiseConv2d:
    case LayerKind::Dense: {
        const std::uint64_t used = std::min<std::uint64_t>(cfg.cluster_count, effective_macs);
        t.inter_hop1 = ceil_div(used, kClustersPerWeightCopy);
        break;
    }
    case LayerKind::Flatten:
    case LayerKind::Softmax: break;
    }
    return t;
}

EnergyLedger layer_ledger(const LayerSpec& l, const SystemConfig& cfg, std::uint64_t effective_macs) {
    EnergyLedger ledger;
    const TransferCounts t = layer_transfers(l, cfg, effective_macs);
    ledger.account_macs(cfg, effective_macs);
    ledger.account_transfers(TransferKind::Intra, 1, t.intra);
    ledger.account_transfers(TransferKind::Inter, 1, t.inter_hop1);
    return ledger;
}

PerfReport estimate(const NetworkSpec& net, const SystemConfig& cfg, unsigned precision_bits) {
    SystemConfig c = cfg;
    c.precision_bits = precision_bits;
    c.validate();
    net.validate();
    const unsigned pass = pass_factor(precision_bits);

    PerfReport r;
    r.network = net.name;
    r.input = net.input;
    r.precision_bits = precision_bits;
    r.clusters = c.cluster_count;
    double energy_pj = 0.0;
    for (const auto& l : net.layers) {
        LayerCost lc;
        lc.name = l.name;
        lc.kind = l.kind;
        lc.macs = mac_count(l);
        lc.effective_macs = lc.macs * pass;
        lc.transfers = layer_transfers(l, c, lc.effective_macs);
        const EnergyLedger ledger = layer_ledger(l, c, lc.effective_macs);
        lc.compute_ns = ledger.compute_ns();
        lc.comm_ns = ledger.comm_ns();
        lc.latency_ns = lc.compute_ns + lc.comm_ns;
        lc.compute_pj = ledger.compute_pj();
        lc.comm_pj = ledger.comm_pj();
        lc.energy_pj = lc.compute_pj + lc.comm_pj;

        r.total_macs += lc.macs;
        r.effective_macs += lc.effective_macs;
        r.compute_ns += lc.compute_ns;
        r.comm_ns += lc.comm_ns;
        r.latency_ns += lc.latency_ns;
        r.compute_pj += lc.compute_pj;
        r.comm_pj += lc.comm_pj;
        energy_pj += lc.energy_pj;
        r.layers.push_back(std::move(lc));
    }
    r.energy_j = energy_pj * 1e-12;
    r.throughput_fps = r.latency_ns > 0.0 ? 1e9 / r.latency_ns : 0.0;
    r.frames_per_joule = r.energy_j > 0.0 ? 1.0 / r.energy_j : 0.0;
    if (net.name == "resnet50") {
        r.annotations.push_back(resnet50_latency_annotation(r.latency_ns));
    }
    return r;
}

std::vector<Annotation> reference_annotations() {
    const std::string tag = fmt::format("[{}]", kPublishedMarker);
    return {
        {"GPU, CPU", fmt::format("4.02×, 45× higher throughput; 74.62×, 64.13× higher energy efficiency {}", tag)},
        {"DRISA, LAcc", fmt::format("0.065×, 1.09× throughput; 29.25×, 1.5× power efficiency {}", tag)},
        {"detector (VirusTotal corpus)", fmt::format("accuracy 0.987, F1 0.987, recall 0.982 {}", tag)},
    };
}

Annotation resnet50_latency_annotation(double latency_ns) {
    const double ms = latency_ns / 1e6;
    return {"resnet50 latency",
            fmt::format("claim: processed within 10 ms [{}]; simulated {:.3f} ms, {:.2f}× the claim. "
                        "A flat 256-cluster compute-bound model cannot reach the claim; the gap is reported, "
                        "not tuned away",
                        kPublishedMarker, ms, latency_ns / kResnet50ClaimNs)};
}

std::string report_csv(std::span<const PerfReport> reports) {
    std::string out(kReportCsvHeader);
    out += '\n';
    for (const PerfReport* r : sorted(reports)) {
        out += fmt::format("{},{},{},{},{},{},{},{}\n", r->network, r->precision_bits, r->clusters, r->total_macs,
                           r->latency_ns, r->throughput_fps, r->energy_j, r->frames_per_joule);
    }
    return out;
}

std::string layer_csv(std::span<const PerfReport> reports) {
    std::string out(kLayerCsvHeader);
    out += '\n';
    for (const PerfReport* r : sorted(reports)) {
        for (const LayerCost& l : r->layers) {
            out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r->network, r->precision_bits,
                               r->clusters, l.name, to_string(l.kind), l.macs, l.effective_macs, l.transfers.intra,
                               l.transfers.inter_hop1, l.compute_ns, l.comm_ns, l.latency_ns, l.energy_pj);
        }
    }
    return out;
}

std::string compare_report(std::span<const PerfReport> reports, std::span<const Annotation> baselines) {
    std::string out = "network,input,precision_bits,clusters,throughput_fps,frames_per_joule,latency_ns,energy_j\n";
    const auto order = sorted(reports);
    for (const PerfReport* r : order) {
        out += fmt::format("{},{},{},{},{},{},{},{}\n", r->network, format_dims(r->input), r->precision_bits,
                           r->clusters, r->throughput_fps, r->frames_per_joule, r->latency_ns, r->energy_j);
    }
    for (const PerfReport* r : order) {
        for (const Annotation& a : r->annotations) {
            out += fmt::format("# {}: {}\n", a.subject, a.text);
        }
    }
    for (const Annotation& a : baselines) {
        out += fmt::format("# {}: {}\n", a.subject, a.text);
    }
    return out;
}

} // namespace lutpim
