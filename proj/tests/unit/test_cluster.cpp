#include "lutpim/cluster.hpp"
#include "lutpim/errors.hpp"
#include "lutpim/rng.hpp"

#include <doctest.h>

#include <cstdint>

using namespace lutpim;

TEST_CASE("multiply program: 8 steps, 13 lookups, cores 0-3 MUL4 and 4-8 ADD4") {
    const auto& prog = mac_microprogram();
    CHECK(prog.steps.size() == 8);
    CHECK(prog.op_count() == 13);
    CHECK(prog.steps[0].ops.size() == 4);
    for (const auto& step : prog.steps) {
        for (const auto& op : step.ops) {
            CHECK(op.table == (op.core < 4 ? OpTag::MUL4 : OpTag::ADD4));
        }
    }
    CHECK(prog.outputs.size() == 2);
    CHECK_NOTHROW(prog.validate());
}

TEST_CASE("mac8 equals a*b for all 65536 operand pairs from a zero accumulator") {
    Cluster cl;
    cl.program_for_mac();
    int mismatches = 0;
    for (unsigned a = 0; a < 256; ++a) {
        for (unsigned b = 0; b < 256; ++b) {
            cl.reset_accumulator();
            mismatches += cl.mac8(static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b)) != a * b;
        }
    }
    CHECK(mismatches == 0);
    CHECK(cl.mac_count() == 65536);
    CHECK(cl.step_count() == 65536ULL * 8);
}

TEST_CASE("mac8 accumulates from random starting values") {
    Cluster cl;
    cl.program_for_mac();
    DeterministicRng rng(42);
    int mismatches = 0;
    for (int i = 0; i < 10000; ++i) {
        const auto a = static_cast<std::uint8_t>(rng.uniform(0, 255));
        const auto b = static_cast<std::uint8_t>(rng.uniform(0, 255));
        const auto acc = static_cast<std::uint32_t>(rng.uniform(0, 0xFFFFFFFFULL - 65025));
        cl.reset_accumulator(acc);
        mismatches += cl.mac8(a, b) != acc + static_cast<std::uint32_t>(a) * b;
    }
    CHECK(mismatches == 0);
}

TEST_CASE("each MAC costs 8 core steps = 6.4 ns") {
    Cluster cl;
    cl.program_for_mac();
    cl.mac8(200, 100);
    CHECK(cl.step_count() == 8);
    CHECK(cl.busy_ns() == doctest::Approx(6.4).epsilon(1e-15));
    CHECK(ClusterTimingProfile::mac_delay_ns == 6.4);
    std::uint64_t lookups = 0;
    for (std::size_t c = 0; c < Cluster::kCoreCount; ++c) {
        lookups += cl.core(c).lookup_count();
    }
    CHECK(lookups == 13);
}

TEST_CASE("overflow leaves the accumulator unchanged") {
    Cluster cl;
    cl.program_for_mac();
    cl.reset_accumulator(0xFFFFFFFFU - 100);
    CHECK_THROWS_AS(cl.mac8(11, 10), AccumulatorOverflow);
    CHECK(cl.accumulator() == 0xFFFFFFFFU - 100);
    CHECK(cl.mac8(10, 10) == 0xFFFFFFFFU);
}

TEST_CASE("router counts every operand delivery; tracing keeps the log") {
    Cluster cl;
    cl.program_for_mac();
    cl.router().set_tracing(true);
    cl.multiply8(0x12, 0x34);
    // 13 ops x 2 operands + 2 output bytes x 2 nibbles.
    CHECK(cl.router().transfer_count() == 30);
    REQUIRE(cl.router().transfer_log().size() == 30);
    CHECK(cl.router().transfer_log().front() == Transfer{kInputPort, 0, 0x12});
    CHECK(cl.router().transfer_log().back().destination == kOutputPort);
    cl.router().clear();
    cl.router().set_tracing(false);
    cl.multiply8(1, 1);
    CHECK(cl.router().transfer_count() == 30);
    CHECK(cl.router().transfer_log().empty());
}

TEST_CASE("microprogram text round trip") {
    const auto& prog = mac_microprogram();
    const std::string text = prog.to_text();
    CHECK(text.find("1;0;MUL4;in0.lo;in1.lo") != std::string::npos);
    CHECK(text.find("out;1;c4.lo;c8.lo") != std::string::npos);
    CHECK(ClusterMicroprogram::parse(text) == prog);
    CHECK(ClusterMicroprogram::parse("# only a comment\n\n1;0;PASS;#3;#0\nout;0;c0.lo;#0\n").op_count() == 1);
}

TEST_CASE("structural errors in microprograms") {
    CHECK_THROWS_AS(ClusterMicroprogram::parse("1;9;ADD4;in0.lo;in1.lo\n"), StructuralError);
    CHECK_THROWS_AS(ClusterMicroprogram::parse("1;0;ADD4;in0.lo;in1.lo\n1;0;ADD4;in0.hi;in1.hi\n"), StructuralError);
    CHECK_THROWS_AS(ClusterMicroprogram::parse("1;0;ADD4;c1.lo;in1.lo\n"), StructuralError);
    CHECK_THROWS_AS(ClusterMicroprogram::parse("1;0;ADD4;#16;in1.lo\n"), StructuralError);
    CHECK_THROWS_AS(ClusterMicroprogram::parse("2;0;ADD4;in0.lo;in1.lo\n"), StructuralError);
    CHECK_THROWS_AS(ClusterMicroprogram::parse("1;0;FOO4;in0.lo;in1.lo\n"), StructuralError);
    CHECK_THROWS_AS(parse_operand_source("x3.lo"), StructuralError);
    CHECK_THROWS_AS(parse_operand_source("c3.mid"), StructuralError);
}

TEST_CASE("custom programs run on a cluster") {
    // Two-step nibble add with carry: (in0.lo + in1.lo), then hi nibbles plus carry.
    const auto prog = ClusterMicroprogram::parse("1;0;ADD4;in0.lo;in1.lo\n"
                                                 "2;1;ADD4;c0.hi;#5\n"
                                                 "out;0;c0.lo;c1.lo\n");
    Cluster cl;
    cl.program_for(prog);
    const std::uint8_t in[2] = {0x0F, 0x03};
    const auto out = cl.run_microprogram(prog, in);
    REQUIRE(out.size() == 1);
    CHECK(out[0] == 0x62);  // 15 + 3 = 0x12 -> lo 2, hi 1 + 5 = 6

    Cluster unprogrammed;
    CHECK_THROWS_AS(unprogrammed.run_microprogram(prog, in), UseBeforeProgram);

    const auto mixed = ClusterMicroprogram::parse("1;0;ADD4;in0.lo;in1.lo\n2;0;MUL4;c0.lo;c0.lo\n");
    CHECK_THROWS_AS(cl.program_for(mixed), StructuralError);
}

TEST_CASE("per-MAC energy from the cluster power range") {
    const MacEnergy e = mac_energy_pj();
    CHECK(e.nominal_pj == doctest::Approx(61.44).epsilon(1e-12));
    CHECK(e.min_pj == doctest::Approx(52.48).epsilon(1e-12));
    CHECK(e.max_pj == doctest::Approx(70.4).epsilon(1e-12));
    CHECK(ClusterTimingProfile::area_um2 == 37769.81);
}
