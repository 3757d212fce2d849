#include "lutpim/errors.hpp"
#include "lutpim/system.hpp"

#include <doctest.h>

using namespace lutpim;

TEST_CASE("MAC accounting spreads work over every cluster") {
    const SystemConfig cfg;
    EnergyLedger ledger;
    ledger.account_macs(cfg, 1'000'000);
    // ceil(1e6 / 256) = 3907 rounds of 6.4 ns.
    CHECK(ledger.compute_ns() == doctest::Approx(25004.8).epsilon(1e-12));
    CHECK(ledger.compute_pj() / 1e6 == doctest::Approx(61.44).epsilon(1e-12));
    CHECK(ledger.mac_count() == 1'000'000);

    EnergyLedger empty;
    empty.account_macs(cfg, 0);
    CHECK(empty.events().empty());

    EnergyLedger one_round;
    one_round.account_macs(cfg, 256);
    CHECK(one_round.compute_ns() == 6.4);
    one_round.account_macs(cfg, 257);
    CHECK(one_round.compute_ns() == doctest::Approx(6.4 + 12.8).epsilon(1e-15));
}

TEST_CASE("transfer costs per copy") {
    CHECK(CommProfile::intra_delay_ns == 63.0);
    CHECK(CommProfile::intra_energy_uj == 0.028);
    CHECK(CommProfile::inter_delay_ns(HopClass::One) == 148.5);
    CHECK(CommProfile::inter_delay_ns(HopClass::Seven) == 196.5);
    CHECK(CommProfile::inter_delay_ns(HopClass::Fifteen) == 260.5);
    CHECK(CommProfile::inter_energy_uj(HopClass::One) == 0.09);
    CHECK(CommProfile::inter_energy_uj(HopClass::Seven) == 0.12);
    CHECK(CommProfile::inter_energy_uj(HopClass::Fifteen) == 0.17);

    EnergyLedger l;
    l.account_transfer(TransferKind::Inter, 15);
    CHECK(l.comm_ns() == 260.5);
    CHECK(l.comm_pj() / 1e6 == 0.17);
    CHECK_THROWS_AS(l.account_transfer(TransferKind::Inter, 4), DomainError);

    EnergyLedger batch;
    batch.account_transfers(TransferKind::Intra, 1, 3);
    CHECK(batch.comm_ns() == 189.0);
    CHECK(batch.events().size() == 1);
}

TEST_CASE("hop distances round up to a published class") {
    CHECK(hop_class_for_distance(1) == HopClass::One);
    CHECK(hop_class_for_distance(2) == HopClass::Seven);
    CHECK(hop_class_for_distance(7) == HopClass::Seven);
    CHECK(hop_class_for_distance(8) == HopClass::Fifteen);
    CHECK(hop_class_for_distance(15) == HopClass::Fifteen);
    CHECK_THROWS_AS(hop_class_for_distance(0), DomainError);
    CHECK_THROWS_AS(hop_class_for_distance(16), DomainError);
}

TEST_CASE("summary totals come from the event log") {
    const LedgerSummary zero = ledger_summary(EnergyLedger{});
    CHECK(zero == LedgerSummary{});

    EnergyLedger l;
    l.account_transfer(TransferKind::Intra);
    l.account_macs(SystemConfig{}, 256);
    const LedgerSummary s = ledger_summary(l);
    CHECK(s.total_ns == doctest::Approx(69.4).epsilon(1e-12));
    // 0.028 uJ + 256 * 61.44 pJ = 0.028 uJ + 15.72864 nJ
    CHECK(s.total_pj == doctest::Approx(28000.0 + 15728.64).epsilon(1e-12));
    CHECK(s.by_category[static_cast<std::size_t>(LedgerCategory::Mac)].count == 256);
    CHECK(s.by_category[static_cast<std::size_t>(LedgerCategory::Intra)].count == 1);
    CHECK(ledger_summary(l) == s);
}

TEST_CASE("merge folds events without touching the source") {
    EnergyLedger a;
    a.account_macs(SystemConfig{}, 512);
    EnergyLedger b;
    b.account_transfer(TransferKind::Inter, 7);
    a.merge(b);
    CHECK(a.events().size() == 2);
    CHECK(b.events().size() == 1);
    CHECK(a.comm_ns() == 196.5);
    CHECK(a.to_csv().rfind("category,count,ns,pJ\n", 0) == 0);
}

TEST_CASE("system configuration limits") {
    SystemConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    CHECK(cfg.subarray_count() == 16);
    cfg.precision_bits = 12;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
    cfg.precision_bits = 8;
    cfg.cluster_count = 0;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
    cfg.cluster_count = 40;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
}
