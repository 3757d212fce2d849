#include "lutpim/errors.hpp"
#include "lutpim/lut_core.hpp"

#include <doctest.h>

#include <string>
#include <vector>

using namespace lutpim;

namespace {

// Reference semantics, written independently of the library.
unsigned expected(OpTag op, unsigned a, unsigned b) {
    switch (op) {
    case OpTag::MUL4: return a * b;
    case OpTag::ADD4: return a + b;
    case OpTag::ADD4C: return a + b + 1;
    case OpTag::MAX4: return a < b ? b : a;
    case OpTag::CMP4: return a > b ? 1U : 0U;
    case OpTag::PASS: return a;
    }
    return 0xFFFF;
}

} // namespace

TEST_CASE("every table matches its defining function on all 256 operand pairs") {
    for (OpTag op : kAllOpTags) {
        LutCore core;
        core.program(build_function_table(op));
        int mismatches = 0;
        for (unsigned a = 0; a < 16; ++a) {
            for (unsigned b = 0; b < 16; ++b) {
                mismatches += core.lookup(a, b) != expected(op, a, b);
            }
        }
        CHECK_MESSAGE(mismatches == 0, to_string(op));
        CHECK(core.lookup_count() == 256);
    }
}

TEST_CASE("function word w holds output bit w at select index (a << 4) | b") {
    const FunctionTable t = build_function_table(OpTag::MUL4);
    // 3 * 5 = 15 = 0b00001111
    const unsigned idx = (3U << 4) | 5U;
    for (std::size_t w = 0; w < 8; ++w) {
        CHECK(t.words()[w].test(idx) == (w < 4));
    }
    // 15 * 15 = 225 = 0b11100001
    const unsigned top = 0xFF;
    const bool bits[8] = {true, false, false, false, false, true, true, true};
    for (std::size_t w = 0; w < 8; ++w) {
        CHECK(t.words()[w].test(top) == bits[w]);
    }
    CHECK(t.assembled(top) == 225);
}

TEST_CASE("text dump lists each select index with its assembled byte") {
    const FunctionTable t = build_function_table(OpTag::MUL4);
    const std::string dump = t.dump();
    CHECK(dump.find("35,0x06\n") != std::string::npos);  // a=2, b=3
    CHECK(dump.find("255,0xe1\n") != std::string::npos);
    CHECK(FunctionTable::from_dump(dump, OpTag::MUL4) == t);
}

TEST_CASE("malformed tables are rejected") {
    std::vector<FunctionTable::Word> seven(7);
    CHECK_THROWS_AS(FunctionTable::from_words(seven, OpTag::PASS), StructuralError);
    std::vector<FunctionTable::Word> nine(9);
    CHECK_THROWS_AS(FunctionTable::from_words(nine, OpTag::PASS), StructuralError);
    std::vector<FunctionTable::Word> eight(8);
    CHECK_NOTHROW(FunctionTable::from_words(eight, OpTag::PASS));

    std::string dump = build_function_table(OpTag::ADD4).dump();
    CHECK_THROWS_AS(FunctionTable::from_dump(dump.substr(0, dump.size() / 2), OpTag::ADD4), StructuralError);
    CHECK_THROWS_AS(FunctionTable::from_dump("0,0xZZ\n", OpTag::ADD4), StructuralError);
}

TEST_CASE("lookup errors") {
    LutCore core;
    CHECK_THROWS_AS(core.lookup(1, 1), UseBeforeProgram);
    core.program(build_function_table(OpTag::ADD4));
    CHECK_THROWS_AS(core.lookup(16, 0), DomainError);
    CHECK_THROWS_AS(core.lookup(0, 16), DomainError);
    CHECK_THROWS_AS(parse_op_tag("DIV4"), UnsupportedOperation);
    CHECK(parse_op_tag("ADD4C") == OpTag::ADD4C);
}

TEST_CASE("reprogramming discards the resident table") {
    LutCore core;
    core.program(build_function_table(OpTag::MUL4));
    CHECK(core.lookup(7, 9) == 63);
    core.program(build_function_table(OpTag::ADD4));
    CHECK(core.lookup(7, 9) == 16);
    CHECK(core.op() == OpTag::ADD4);
    CHECK(core.program_count() == 2);
}

TEST_CASE("each lookup is one 0.8 ns core step") {
    LutCore core;
    core.program(build_function_table(OpTag::PASS));
    for (unsigned i = 0; i < 10; ++i) {
        core.lookup(i, 0);
    }
    CHECK(core.busy_ns() == doctest::Approx(8.0).epsilon(1e-15));
    CHECK(CoreTimingProfile::core_power_mw == 2.7);
    CHECK(CoreTimingProfile::core_area_um2 == 4196.64);
}
