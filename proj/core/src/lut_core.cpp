#include "lutpim/lut_core.hpp"

#include "lutpim/errors.hpp"

#include <charconv>
#include <fmt/format.h>

namespace lutpim {

std::string_view to_string(OpTag op) {
    switch (op) {
    case OpTag::MUL4: return "MUL4";
    case OpTag::ADD4: return "ADD4";
    case OpTag::ADD4C: return "ADD4C";
    case OpTag::MAX4: return "MAX4";
    case OpTag::CMP4: return "CMP4";
    case OpTag::PASS: return "PASS";
    }
    throw UnsupportedOperation(fmt::format("unsupported operation tag {}", static_cast<int>(op)));
}

OpTag parse_op_tag(std::string_view name) {
    for (OpTag op : kAllOpTags) {
        if (to_string(op) == name) {
            return op;
        }
    }
    throw UnsupportedOperation(fmt::format("unsupported operation '{}'", name));
}

std::uint8_t scalar_function(OpTag op, unsigned a, unsigned b) {
    switch (op) {
    case OpTag::MUL4: return static_cast<std::uint8_t>(a * b);
    case OpTag::ADD4: return static_cast<std::uint8_t>(a + b);
    case OpTag::ADD4C: return static_cast<std::uint8_t>(a + b + 1);
    case OpTag::MAX4: return static_cast<std::uint8_t>((a > b ? a : b) & 0xF);
    case OpTag::CMP4: return a > b ? 1 : 0;
    case OpTag::PASS: return static_cast<std::uint8_t>(a & 0xF);
    }
    throw UnsupportedOperation(fmt::format("unsupported operation tag {}", static_cast<int>(op)));
}

FunctionTable FunctionTable::from_words(std::span<const Word> words, OpTag op) {
    if (words.size() != kWordCount) {
        throw StructuralError(
            fmt::format("function table needs {} words, got {}", kWordCount, words.size()));
    }
    FunctionTable table;
    for (std::size_t w = 0; w < kWordCount; ++w) {
        table.words_[w] = words[w];
    }
    table.op_ = op;
    return table;
}

FunctionTable FunctionTable::from_dump(std::string_view text, OpTag op) {
    std::array<Word, kWordCount> words{};
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto eol = text.find('\n');
        std::string_view line = text.substr(0, eol);
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
        if (line.empty()) {
            continue;
        }
        if (line_no >= kWordBits) {
            throw StructuralError("function table dump has more than 256 entries");
        }
        const auto comma = line.find(",0x");
        unsigned index = 0;
        unsigned value = 0;
        if (comma == std::string_view::npos ||
            std::from_chars(line.data(), line.data() + comma, index).ec != std::errc{} ||
            std::from_chars(line.data() + comma + 3, line.data() + line.size(), value, 16).ec !=
                std::errc{} ||
            index != line_no || value > 0xFF) {
            throw StructuralError(fmt::format("malformed function table dump at entry {}", line_no));
        }
        for (std::size_t w = 0; w < kWordCount; ++w) {
            words[w][index] = ((value >> w) & 1U) != 0;
        }
        ++line_no;
    }
    if (line_no != kWordBits) {
        throw StructuralError(fmt::format("function table dump has {} entries, expected 256", line_no));
    }
    return from_words(words, op);
}

std::uint8_t FunctionTable::assembled(unsigned index) const {
    std::uint8_t out = 0;
    for (std::size_t w = 0; w < kWordCount; ++w) {
        if (words_[w][index]) {
            out |= static_cast<std::uint8_t>(1U << w);
        }
    }
    return out;
}

std::string FunctionTable::dump() const {
    std::string out;
    out.reserve(kWordBits * 9);
    for (unsigned i = 0; i < kWordBits; ++i) {
        out += fmt::format("{},0x{:02x}\n", i, assembled(i));
    }
    return out;
}

FunctionTable build_function_table(OpTag op) {
    std::array<FunctionTable::Word, FunctionTable::kWordCount> words{};
    for (unsigned i = 0; i < FunctionTable::kWordBits; ++i) {
        const std::uint8_t value = scalar_function(op, i >> 4, i & 0xF);
        for (std::size_t w = 0; w < FunctionTable::kWordCount; ++w) {
            words[w][i] = ((value >> w) & 1U) != 0;
        }
    }
    return FunctionTable::from_words(words, op);
}

void LutCore::program(const FunctionTable& table) {
    table_ = table;
    for (unsigned i = 0; i < FunctionTable::kWordBits; ++i) {
        mux_[i] = table_.assembled(i);
    }
    programmed_ = true;
    ++programs_;
}

std::uint8_t LutCore::lookup(unsigned a, unsigned b) {
    if (!programmed_) {
        throw UseBeforeProgram("lookup on an unprogrammed LUT core");
    }
    if (a > 0xF || b > 0xF) {
        throw DomainError(fmt::format("LUT operands must be 4-bit, got ({}, {})", a, b));
    }
    return lookup_nibbles(static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b));
}

std::optional<OpTag> LutCore::op() const {
    if (!programmed_) {
        return std::nullopt;
    }
    return table_.op();
}

} // namespace lutpim
