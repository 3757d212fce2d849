#include "lutpim/system.hpp"

#include "lutpim/cluster.hpp"
#include "lutpim/errors.hpp"

#include <fmt/format.h>

namespace lutpim {

void SystemConfig::validate() const {
    if (cluster_count < 1) {
        throw DomainError("cluster_count must be at least 1");
    }
    if (clusters_per_subarray < 1 || cluster_count % clusters_per_subarray != 0) {
        throw DomainError(fmt::format("clusters_per_subarray ({}) must divide cluster_count ({})",
                                      clusters_per_subarray, cluster_count));
    }
    if (precision_bits != 4 && precision_bits != 8 && precision_bits != 16) {
        throw DomainError(fmt::format("precision must be 4, 8 or 16 bits, got {}", precision_bits));
    }
}

HopClass hop_class(unsigned hops) {
    switch (hops) {
    case 1: return HopClass::One;
    case 7: return HopClass::Seven;
    case 15: return HopClass::Fifteen;
    default:
        throw DomainError(fmt::format("no published inter-subarray cost for {} hops (use 1, 7 or 15)", hops));
    }
}

HopClass hop_class_for_distance(unsigned hops) {
    if (hops == 0 || hops > 15) {
        throw DomainError(fmt::format("hop distance {} outside [1, 15]", hops));
    }
    if (hops == 1) {
        return HopClass::One;
    }
    return hops <= 7 ? HopClass::Seven : HopClass::Fifteen;
}

double CommProfile::inter_delay_ns(HopClass h) {
    switch (h) {
    case HopClass::One: return 148.5;
    case HopClass::Seven: return 196.5;
    case HopClass::Fifteen: return 260.5;
    }
    throw DomainError("unknown hop class");
}

double CommProfile::inter_energy_pj(HopClass h) {
    switch (h) {
    case HopClass::One: return 90'000.0;
    case HopClass::Seven: return 120'000.0;
    case HopClass::Fifteen: return 170'000.0;
    }
    throw DomainError("unknown hop class");
}

std::string_view to_string(LedgerCategory c) {
    switch (c) {
    case LedgerCategory::Mac: return "mac";
    case LedgerCategory::Intra: return "intra";
    case LedgerCategory::Inter1: return "inter1";
    case LedgerCategory::Inter7: return "inter7";
    case LedgerCategory::Inter15: return "inter15";
    }
    return "unknown";
}

void EnergyLedger::push(const LedgerEvent& e) {
    events_.push_back(e);
}

EnergyLedger& EnergyLedger::account_macs(const SystemConfig& cfg, std::uint64_t mac_count) {
    if (mac_count == 0) {
        return *this;
    }
    if (cfg.cluster_count == 0) {
        throw DomainError("cluster_count must be at least 1");
    }
    const std::uint64_t rounds = (mac_count + cfg.cluster_count - 1) / cfg.cluster_count;
    push({LedgerCategory::Mac, mac_count, static_cast<double>(rounds) * ClusterTimingProfile::mac_delay_ns,
          static_cast<double>(mac_count) * mac_energy_pj().nominal_pj});
    return *this;
}

EnergyLedger& EnergyLedger::account_transfer(TransferKind kind, unsigned hops) {
    return account_transfers(kind, hops, 1);
}

EnergyLedger& EnergyLedger::account_transfers(TransferKind kind, unsigned hops, std::uint64_t count) {
    if (kind == TransferKind::Intra) {
        if (count != 0) {
            const auto n = static_cast<double>(count);
            push({LedgerCategory::Intra, count, n * CommProfile::intra_delay_ns, n * CommProfile::intra_energy_pj});
        }
        return *this;
    }
    const HopClass h = hop_class(hops);
    if (count == 0) {
        return *this;
    }
    const LedgerCategory cat = h == HopClass::One     ? LedgerCategory::Inter1
                               : h == HopClass::Seven ? LedgerCategory::Inter7
                                                      : LedgerCategory::Inter15;
    const auto n = static_cast<double>(count);
    push({cat, count, n * CommProfile::inter_delay_ns(h), n * CommProfile::inter_energy_pj(h)});
    return *this;
}

EnergyLedger& EnergyLedger::merge(const EnergyLedger& other) {
    for (const auto& e : other.events_) {
        push(e);
    }
    return *this;
}

std::uint64_t EnergyLedger::mac_count() const {
    std::uint64_t n = 0;
    for (const auto& e : events_) {
        if (e.category == LedgerCategory::Mac) {
            n += e.count;
        }
    }
    return n;
}

double EnergyLedger::compute_ns() const { return ledger_summary(*this).compute_ns; }
double EnergyLedger::comm_ns() const { return ledger_summary(*this).comm_ns; }
double EnergyLedger::compute_pj() const { return ledger_summary(*this).compute_pj; }
double EnergyLedger::comm_pj() const { return ledger_summary(*this).comm_pj; }

std::string EnergyLedger::to_csv() const {
    std::string out = "category,count,ns,pJ\n";
    for (const auto& e : events_) {
        out += fmt::format("{},{},{},{}\n", to_string(e.category), e.count, e.ns, e.pj);
    }
    return out;
}

LedgerSummary ledger_summary(const EnergyLedger& ledger) {
    LedgerSummary s;
    for (const auto& e : ledger.events()) {
        auto& cat = s.by_category[static_cast<std::size_t>(e.category)];
        cat.count += e.count;
        cat.ns += e.ns;
        cat.pj += e.pj;
        if (e.category == LedgerCategory::Mac) {
            s.compute_ns += e.ns;
            s.compute_pj += e.pj;
        } else {
            s.comm_ns += e.ns;
            s.comm_pj += e.pj;
        }
    }
    s.total_ns = s.compute_ns + s.comm_ns;
    s.total_pj = s.compute_pj + s.comm_pj;
    return s;
}

} // namespace lutpim
