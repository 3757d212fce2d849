#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace lutpim {

/// A DRAM bank populated with PIM clusters.
struct SystemConfig {
    std::uint32_t cluster_count = 256;
    std::uint32_t clusters_per_subarray = 16;
    unsigned precision_bits = 8;

    /// Throws DomainError when a field is out of range.
    void validate() const;
    std::uint32_t subarray_count() const { return cluster_count / clusters_per_subarray; }
};

/// Published inter-subarray distance classes.
enum class HopClass : std::uint8_t { One = 1, Seven = 7, Fifteen = 15 };

/// Exact class for 1, 7 or 15 hops; DomainError otherwise.
HopClass hop_class(unsigned hops);

/// Rounds a hop distance in [1, 15] up to the next published class.
HopClass hop_class_for_distance(unsigned hops);

/// RowClone / LISA style copy costs, scaled to 28 nm.
struct CommProfile {
    static constexpr double intra_delay_ns = 63.0;
    static constexpr double intra_energy_pj = 28'000.0;
    static constexpr double intra_energy_uj = intra_energy_pj / 1e6;

    static double inter_delay_ns(HopClass h);
    static double inter_energy_pj(HopClass h);
    static double inter_energy_uj(HopClass h) { return inter_energy_pj(h) / 1e6; }
};

enum class TransferKind : std::uint8_t { Intra, Inter };

enum class LedgerCategory : std::uint8_t { Mac = 0, Intra = 1, Inter1 = 2, Inter7 = 3, Inter15 = 4 };
inline constexpr std::size_t kLedgerCategoryCount = 5;

std::string_view to_string(LedgerCategory c);

struct LedgerEvent {
    LedgerCategory category;
    std::uint64_t count;
    double ns;
    double pj;
};

struct CategoryTotals {
    std::uint64_t count = 0;
    double ns = 0.0;
    double pj = 0.0;

    friend bool operator==(const CategoryTotals&, const CategoryTotals&) = default;
};

struct LedgerSummary {
    double total_ns = 0.0;
    double total_pj = 0.0;
    double compute_ns = 0.0;
    double compute_pj = 0.0;
    double comm_ns = 0.0;
    double comm_pj = 0.0;
    std::array<CategoryTotals, kLedgerCategoryCount> by_category{};

    friend bool operator==(const LedgerSummary&, const LedgerSummary&) = default;
};

/// Global timing / energy ledger of one simulation run.
class EnergyLedger {
public:
    /// Spreads mac_count MACs evenly over all clusters: ceil(macs / clusters) rounds of 6.4 ns,
    /// nominal 61.44 pJ per MAC.
    EnergyLedger& account_macs(const SystemConfig& cfg, std::uint64_t mac_count);

    /// Adds one copy event. `hops` must be 1, 7 or 15 for inter transfers and is ignored for intra.
    EnergyLedger& account_transfer(TransferKind kind, unsigned hops = 1);
    /// `count` identical copies as one event; no-op for zero.
    EnergyLedger& account_transfers(TransferKind kind, unsigned hops, std::uint64_t count);

    /// Pure fold of another ledger's events into this one.
    EnergyLedger& merge(const EnergyLedger& other);

    const std::vector<LedgerEvent>& events() const { return events_; }
    std::uint64_t mac_count() const;

    double compute_ns() const;
    double comm_ns() const;
    double compute_pj() const;
    double comm_pj() const;

    /// "category,count,ns,pJ" header plus one line per event.
    std::string to_csv() const;

private:
    void push(const LedgerEvent& e);

    std::vector<LedgerEvent> events_;
};

/// Totals recomputed from the event log.
LedgerSummary ledger_summary(const EnergyLedger& ledger);

} // namespace lutpim
