#include "lutpim/cluster.hpp"

#include "lutpim/errors.hpp"

#include <charconv>
#include <fmt/format.h>
#include <limits>

namespace lutpim {
namespace {

// Column sums of the nibble partial products LL = AL*BL, LH = AL*BH, HL = AH*BL, HH = AH*BH:
//   weight 16:   A = LL.hi + LH.lo, C = A.lo + HL.lo          -> P1 = C.lo
//   weight 256:  F = A.hi + C.hi, B = LH.hi + HL.hi,
//                D = B.lo + HH.lo, H = D.lo + F.lo             -> P2 = H.lo
//   weight 4096: G = B.hi + D.hi, K = G.lo + H.hi, J = HH.hi + K.lo  -> P3 = J.lo
// Cores are reused only after their last reader.
constexpr std::string_view kMacProgramText = R"(# radix-16 8x8 multiply
1;0;MUL4;in0.lo;in1.lo
1;1;MUL4;in0.lo;in1.hi
1;2;MUL4;in0.hi;in1.lo
1;3;MUL4;in0.hi;in1.hi
2;4;ADD4;c0.hi;c1.lo
3;5;ADD4;c4.lo;c2.lo
4;6;ADD4;c4.hi;c5.hi
4;7;ADD4;c1.hi;c2.hi
5;8;ADD4;c7.lo;c3.lo
6;4;ADD4;c8.lo;c6.lo
6;6;ADD4;c7.hi;c8.hi
7;7;ADD4;c6.lo;c4.hi
8;8;ADD4;c3.hi;c7.lo
out;0;c0.lo;c5.lo
out;1;c4.lo;c8.lo
)";

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    while (true) {
        const auto pos = s.find(sep);
        parts.push_back(trim(s.substr(0, pos)));
        if (pos == std::string_view::npos) {
            break;
        }
        s.remove_prefix(pos + 1);
    }
    return parts;
}

unsigned parse_unsigned(std::string_view token, std::string_view what) {
    unsigned value = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw StructuralError(fmt::format("bad {} '{}'", what, token));
    }
    return value;
}

} // namespace

OperandSource parse_operand_source(std::string_view token) {
    token = trim(token);
    if (!token.empty() && token.front() == '#') {
        const unsigned v = parse_unsigned(token.substr(1), "constant");
        if (v > 0xF) {
            throw StructuralError(fmt::format("constant operand '{}' exceeds 4 bits", token));
        }
        return OperandSource::constant(static_cast<std::uint8_t>(v));
    }
    const auto dot = token.find('.');
    if (dot == std::string_view::npos) {
        throw StructuralError(fmt::format("bad operand source '{}'", token));
    }
    const std::string_view half_text = token.substr(dot + 1);
    OperandSource::Half half{};
    if (half_text == "lo") {
        half = OperandSource::Half::Lo;
    } else if (half_text == "hi") {
        half = OperandSource::Half::Hi;
    } else {
        throw StructuralError(fmt::format("bad nibble selector in '{}'", token));
    }
    std::string_view head = token.substr(0, dot);
    if (head.starts_with("in")) {
        const unsigned i = parse_unsigned(head.substr(2), "input index");
        if (i > 255) {
            throw StructuralError(fmt::format("input index too large in '{}'", token));
        }
        return OperandSource::input(static_cast<std::uint8_t>(i), half);
    }
    if (head.starts_with("c")) {
        const unsigned i = parse_unsigned(head.substr(1), "core index");
        if (i >= Cluster::kCoreCount) {
            throw StructuralError(fmt::format("core index out of range in '{}'", token));
        }
        return OperandSource::core(static_cast<std::uint8_t>(i), half);
    }
    throw StructuralError(fmt::format("bad operand source '{}'", token));
}

std::string to_string(const OperandSource& src) {
    const char* half = src.half == OperandSource::Half::Lo ? "lo" : "hi";
    switch (src.kind) {
    case OperandSource::Kind::Input: return fmt::format("in{}.{}", src.index, half);
    case OperandSource::Kind::Core: return fmt::format("c{}.{}", src.index, half);
    case OperandSource::Kind::Constant: return fmt::format("#{}", src.index);
    }
    return {};
}

void ClusterMicroprogram::validate() const {
    std::array<bool, Cluster::kCoreCount> produced{};
    auto check_source = [&](const OperandSource& src, std::size_t step) {
        switch (src.kind) {
        case OperandSource::Kind::Constant:
            if (src.index > 0xF) {
                throw StructuralError(fmt::format("step {}: constant {} exceeds 4 bits", step, src.index));
            }
            break;
        case OperandSource::Kind::Core:
            if (src.index >= Cluster::kCoreCount) {
                throw StructuralError(fmt::format("step {}: core index {} out of range", step, src.index));
            }
            if (!produced[src.index]) {
                throw StructuralError(
                    fmt::format("step {}: core {} result read before it is produced", step, src.index));
            }
            break;
        case OperandSource::Kind::Input: break;
        }
    };
    for (std::size_t s = 0; s < steps.size(); ++s) {
        std::array<bool, Cluster::kCoreCount> busy{};
        for (const CoreOp& op : steps[s].ops) {
            if (op.core >= Cluster::kCoreCount) {
                throw StructuralError(fmt::format("step {}: core index {} out of range", s + 1, op.core));
            }
            if (busy[op.core]) {
                throw StructuralError(fmt::format("step {}: core {} scheduled twice", s + 1, op.core));
            }
            busy[op.core] = true;
            check_source(op.a, s + 1);
            check_source(op.b, s + 1);
        }
        for (std::size_t c = 0; c < busy.size(); ++c) {
            produced[c] = produced[c] || busy[c];
        }
    }
    for (const OutputByte& out : outputs) {
        check_source(out.lo, steps.size() + 1);
        check_source(out.hi, steps.size() + 1);
    }
}

std::size_t ClusterMicroprogram::op_count() const {
    std::size_t n = 0;
    for (const auto& s : steps) {
        n += s.ops.size();
    }
    return n;
}

ClusterMicroprogram ClusterMicroprogram::parse(std::string_view text) {
    ClusterMicroprogram prog;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto eol = text.find('\n');
        std::string_view line = text.substr(0, eol);
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
        ++line_no;
        line = trim(line);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto fields = split(line, ';');
        if (fields[0] == "out") {
            if (fields.size() != 4) {
                throw StructuralError(fmt::format("line {}: output record needs 4 fields", line_no));
            }
            const unsigned byte = parse_unsigned(fields[1], "output index");
            if (byte != prog.outputs.size()) {
                throw StructuralError(fmt::format("line {}: output bytes must be numbered in order", line_no));
            }
            prog.outputs.push_back({parse_operand_source(fields[2]), parse_operand_source(fields[3])});
            continue;
        }
        if (fields.size() != 5) {
            throw StructuralError(fmt::format("line {}: step record needs 5 fields", line_no));
        }
        const unsigned step = parse_unsigned(fields[0], "step index");
        if (step == 0 || step > prog.steps.size() + 1 || step < prog.steps.size()) {
            throw StructuralError(fmt::format("line {}: step {} out of sequence", line_no, step));
        }
        if (step == prog.steps.size() + 1) {
            prog.steps.emplace_back();
        }
        const unsigned core = parse_unsigned(fields[1], "core index");
        if (core >= Cluster::kCoreCount) {
            throw StructuralError(fmt::format("line {}: core index {} out of range", line_no, core));
        }
        OpTag table{};
        try {
            table = parse_op_tag(fields[2]);
        } catch (const UnsupportedOperation& e) {
            throw StructuralError(fmt::format("line {}: {}", line_no, e.what()));
        }
        prog.steps.back().ops.push_back({static_cast<std::uint8_t>(core), table,
                                         parse_operand_source(fields[3]),
                                         parse_operand_source(fields[4])});
    }
    prog.validate();
    return prog;
}

std::string ClusterMicroprogram::to_text() const {
    std::string out;
    for (std::size_t s = 0; s < steps.size(); ++s) {
        for (const CoreOp& op : steps[s].ops) {
            out += fmt::format("{};{};{};{};{}\n", s + 1, op.core, to_string(op.table), to_string(op.a),
                               to_string(op.b));
        }
    }
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        out += fmt::format("out;{};{};{}\n", i, to_string(outputs[i].lo), to_string(outputs[i].hi));
    }
    return out;
}

const ClusterMicroprogram& mac_microprogram() {
    static const ClusterMicroprogram prog = ClusterMicroprogram::parse(kMacProgramText);
    return prog;
}

MacEnergy mac_energy_pj(const ClusterTimingProfile& profile) {
    return {profile.power_mw_nominal * profile.mac_delay_ns, profile.power_mw_min * profile.mac_delay_ns,
            profile.power_mw_max * profile.mac_delay_ns};
}

void Cluster::program_for(const ClusterMicroprogram& prog) {
    std::array<std::optional<OpTag>, kCoreCount> needed{};
    for (const auto& step : prog.steps) {
        for (const CoreOp& op : step.ops) {
            if (op.core >= kCoreCount) {
                throw StructuralError(fmt::format("core index {} out of range", op.core));
            }
            if (needed[op.core] && *needed[op.core] != op.table) {
                throw StructuralError(
                    fmt::format("core {} needs both {} and {}", op.core, to_string(*needed[op.core]),
                                to_string(op.table)));
            }
            needed[op.core] = op.table;
        }
    }
    for (std::size_t c = 0; c < kCoreCount; ++c) {
        if (needed[c] && cores_[c].op() != needed[c]) {
            cores_[c].program(build_function_table(*needed[c]));
        }
    }
}

void Cluster::program_core(std::size_t index, const FunctionTable& table) {
    core(index).program(table);
}

LutCore& Cluster::core(std::size_t index) {
    if (index >= kCoreCount) {
        throw DomainError(fmt::format("core index {} out of range", index));
    }
    return cores_[index];
}

const LutCore& Cluster::core(std::size_t index) const {
    if (index >= kCoreCount) {
        throw DomainError(fmt::format("core index {} out of range", index));
    }
    return cores_[index];
}

template <typename Sink>
void Cluster::execute(const ClusterMicroprogram& prog, std::span<const std::uint8_t> operands,
                      Sink&& sink) {
    std::array<std::uint8_t, kCoreCount> result{};
    std::array<bool, kCoreCount> valid{};

    auto fetch = [&](const OperandSource& src, std::uint8_t dest) -> std::uint8_t {
        std::uint8_t byte = 0;
        std::uint8_t from = 0;
        switch (src.kind) {
        case OperandSource::Kind::Constant: return src.index;
        case OperandSource::Kind::Input:
            if (src.index >= operands.size()) {
                throw StructuralError(fmt::format("input byte {} not supplied", src.index));
            }
            byte = operands[src.index];
            from = kInputPort;
            break;
        case OperandSource::Kind::Core:
            if (!valid[src.index]) {
                throw StructuralError(fmt::format("core {} result undefined at time of use", src.index));
            }
            byte = result[src.index];
            from = src.index;
            break;
        }
        router_.route(from, dest, byte);
        return src.half == OperandSource::Half::Lo ? (byte & 0xF) : (byte >> 4);
    };

    for (const MicroStep& step : prog.steps) {
        std::array<std::uint8_t, kCoreCount> staged{};
        for (const CoreOp& op : step.ops) {
            LutCore& core = cores_[op.core];
            if (!core.programmed()) {
                throw UseBeforeProgram(fmt::format("core {} is not programmed", op.core));
            }
            if (core.table().op() != op.table) {
                throw StructuralError(fmt::format("core {} holds {} but the step needs {}", op.core,
                                                  to_string(core.table().op()), to_string(op.table)));
            }
            const std::uint8_t a = fetch(op.a, op.core);
            const std::uint8_t b = fetch(op.b, op.core);
            staged[op.core] = core.lookup_nibbles(a, b);
        }
        for (const CoreOp& op : step.ops) {
            result[op.core] = staged[op.core];
            valid[op.core] = true;
        }
        ++steps_;
    }
    for (std::size_t i = 0; i < prog.outputs.size(); ++i) {
        const std::uint8_t lo = fetch(prog.outputs[i].lo, kOutputPort);
        const std::uint8_t hi = fetch(prog.outputs[i].hi, kOutputPort);
        sink(i, static_cast<std::uint8_t>((hi << 4) | lo));
    }
}

std::vector<std::uint8_t> Cluster::run_microprogram(const ClusterMicroprogram& prog,
                                                    std::span<const std::uint8_t> operands) {
    prog.validate();
    std::vector<std::uint8_t> out(prog.outputs.size());
    execute(prog, operands, [&](std::size_t i, std::uint8_t v) { out[i] = v; });
    return out;
}

std::uint16_t Cluster::multiply8(std::uint8_t a, std::uint8_t b) {
    const std::array<std::uint8_t, 2> operands{a, b};
    std::uint16_t product = 0;
    execute(mac_microprogram(), operands, [&](std::size_t i, std::uint8_t v) {
        product = static_cast<std::uint16_t>(product | (static_cast<unsigned>(v) << (8 * i)));
    });
    ++macs_;
    return product;
}

std::uint32_t Cluster::mac8(std::uint8_t a, std::uint8_t b) {
    const std::uint16_t product = multiply8(a, b);
    if (accumulator_ > std::numeric_limits<std::uint32_t>::max() - product) {
        throw AccumulatorOverflow(
            fmt::format("32-bit accumulator overflow: {} + {}", accumulator_, product));
    }
    accumulator_ += product;
    return accumulator_;
}

} // namespace lutpim
