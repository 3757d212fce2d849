#pragma once

#include "lutpim/network.hpp"
#include "lutpim/system.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lutpim {

/// conv: kh*kw*Cin*Hout*Wout*Cout; depthwise: kh*kw*C*Hout*Wout; dense: in*out; others 0.
std::uint64_t mac_count(const LayerSpec& layer);
std::uint64_t mac_count(const NetworkSpec& net);

/// mac8 passes per multiply: 1 for 4- and 8-bit operands, 4 for 16-bit.
/// Throws UnsupportedOperation for other widths.
unsigned pass_factor(unsigned precision_bits);

struct TransferCounts {
    std::uint64_t intra = 0;
    std::uint64_t inter_hop1 = 0;

    friend bool operator==(const TransferCounts&, const TransferCounts&) = default;
};

/// Data-movement convention shared by the analytic model and the functional backend.
///
/// maxpool / relu / residual_add: one intra-subarray copy per started tile of 256 output elements.
/// conv / depthwise / dense: one hop-1 inter-subarray copy per 16 clusters that receive weights,
/// i.e. ceil(min(clusters, effective_macs) / 16).
/// flatten / softmax: nothing (reshape, host).
TransferCounts layer_transfers(const LayerSpec& layer, const SystemConfig& cfg, std::uint64_t effective_macs);

/// MACs and transfers of one layer charged to a fresh ledger.
EnergyLedger layer_ledger(const LayerSpec& layer, const SystemConfig& cfg, std::uint64_t effective_macs);

struct LayerCost {
    std::string name;
    LayerKind kind = LayerKind::Relu;
    std::uint64_t macs = 0;
    std::uint64_t effective_macs = 0;
    TransferCounts transfers;
    double compute_ns = 0.0;
    double comm_ns = 0.0;
    double latency_ns = 0.0;
    double compute_pj = 0.0;
    double comm_pj = 0.0;
    double energy_pj = 0.0;
};

struct Annotation {
    std::string subject;
    std::string text;
};

struct PerfReport {
    std::string network;
    Shape input;
    unsigned precision_bits = 8;
    std::uint32_t clusters = 0;
    std::uint64_t total_macs = 0;
    std::uint64_t effective_macs = 0;
    double compute_ns = 0.0;
    double comm_ns = 0.0;
    double latency_ns = 0.0;
    double throughput_fps = 0.0;
    double compute_pj = 0.0;
    double comm_pj = 0.0;
    double energy_j = 0.0;
    double frames_per_joule = 0.0;
    std::vector<LayerCost> layers;
    std::vector<Annotation> annotations;
};

/// Sequential (unpipelined) single-frame estimate. cfg.precision_bits is ignored in favour of
/// `precision_bits`. ResNet-50 reports carry the 10 ms latency claim and the simulated gap.
PerfReport estimate(const NetworkSpec& net, const SystemConfig& cfg, unsigned precision_bits);

/// Label attached to every externally published figure.
inline constexpr std::string_view kPublishedMarker = "published, not simulated";

/// Cross-device ratios and the reference detector row, rendered as static text.
std::vector<Annotation> reference_annotations();

/// Annotation for a ResNet-50 report comparing its latency with the 10 ms claim.
Annotation resnet50_latency_annotation(double latency_ns);

inline constexpr std::string_view kReportCsvHeader =
    "network,precision_bits,clusters,total_macs,latency_ns,throughput_fps,energy_j,frames_per_joule";

/// Header plus one row per report, sorted by (network, precision_bits, clusters).
std::string report_csv(std::span<const PerfReport> reports);

inline constexpr std::string_view kLayerCsvHeader =
    "network,precision_bits,clusters,layer,kind,macs,effective_macs,intra_transfers,inter_transfers,"
    "compute_ns,comm_ns,latency_ns,energy_pj";

/// Per-layer detail rows for the same ordering as report_csv.
std::string layer_csv(std::span<const PerfReport> reports);

/// Side-by-side fps and frames/J with each report's annotations and the shared reference table.
std::string compare_report(std::span<const PerfReport> reports,
                           std::span<const Annotation> baselines = reference_annotations());

} // namespace lutpim
