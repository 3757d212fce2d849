#pragma once

#include <array>
#include <bitset>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace lutpim {

/// Operation identity of a two-operand 4-bit function table.
enum class OpTag : std::uint8_t {
    MUL4 = 0,
    ADD4 = 1,
    ADD4C = 2,
    MAX4 = 3,
    CMP4 = 4,
    PASS = 5,
};

inline constexpr std::array<OpTag, 6> kAllOpTags{OpTag::MUL4, OpTag::ADD4, OpTag::ADD4C,
                                                 OpTag::MAX4, OpTag::CMP4, OpTag::PASS};

std::string_view to_string(OpTag op);

/// Parses "MUL4", "ADD4", ... Throws UnsupportedOperation for unknown names.
OpTag parse_op_tag(std::string_view name);

/// The defining scalar function of each table, evaluated on 4-bit operands.
/// Throws UnsupportedOperation for an out-of-enum tag.
std::uint8_t scalar_function(OpTag op, unsigned a, unsigned b);

/// Select index driven by the A (high nibble) and B (low nibble) registers.
constexpr unsigned select_index(unsigned a, unsigned b) { return (a << 4) | b; }

/// Timing and area of one core, from the synthesized 28 nm design.
struct CoreTimingProfile {
    static constexpr double core_delay_ns = 0.8;
    static constexpr double core_power_mw = 2.7;
    static constexpr double core_area_um2 = 4196.64;
};

/// Eight 256-bit function words. Word w holds output bit w for every select index.
class FunctionTable {
public:
    static constexpr std::size_t kWordCount = 8;
    static constexpr std::size_t kWordBits = 256;
    using Word = std::bitset<kWordBits>;

    FunctionTable() = default;

    /// Builds a table from raw words. Throws StructuralError unless exactly eight words are given.
    static FunctionTable from_words(std::span<const Word> words, OpTag op);

    /// Parses the 256-line text dump produced by dump(). Throws StructuralError on any deviation.
    static FunctionTable from_dump(std::string_view text, OpTag op);

    const std::array<Word, kWordCount>& words() const { return words_; }
    OpTag op() const { return op_; }

    /// Byte assembled from bit `index` of words 0..7 (word w is output bit w).
    std::uint8_t assembled(unsigned index) const;

    /// 256 lines "index,0xHH", one per select index.
    std::string dump() const;

    friend bool operator==(const FunctionTable&, const FunctionTable&) = default;

private:
    std::array<Word, kWordCount> words_{};
    OpTag op_ = OpTag::PASS;
};

FunctionTable build_function_table(OpTag op);

/// One programmable LUT core: a 256:1 byte multiplexer over eight latch arrays,
/// selected by two 4-bit operand registers.
class LutCore {
public:
    /// Loads new function words. Any previously resident table is discarded.
    void program(const FunctionTable& table);

    /// Looks up the byte selected by (a, b). Throws UseBeforeProgram or DomainError.
    std::uint8_t lookup(unsigned a, unsigned b);

    /// Unchecked lookup for the cluster datapath; operands are already nibbles.
    std::uint8_t lookup_nibbles(std::uint8_t a, std::uint8_t b) {
        reg_a_ = a;
        reg_b_ = b;
        ++lookups_;
        return mux_[select_index(a, b)];
    }

    bool programmed() const { return programmed_; }
    std::optional<OpTag> op() const;
    const FunctionTable& table() const { return table_; }
    unsigned reg_a() const { return reg_a_; }
    unsigned reg_b() const { return reg_b_; }

    std::uint64_t lookup_count() const { return lookups_; }
    std::uint64_t program_count() const { return programs_; }
    double busy_ns() const { return static_cast<double>(lookups_) * CoreTimingProfile::core_delay_ns; }

private:
    FunctionTable table_{};
    // Mux outputs decoded from the latch words at program time.
    std::array<std::uint8_t, 256> mux_{};
    std::uint8_t reg_a_ = 0;
    std::uint8_t reg_b_ = 0;
    bool programmed_ = false;
    std::uint64_t lookups_ = 0;
    std::uint64_t programs_ = 0;
};

} // namespace lutpim
