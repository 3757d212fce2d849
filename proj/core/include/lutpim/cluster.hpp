#pragma once

#include "lutpim/lut_core.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lutpim {

/// Where a 4-bit operand comes from when a core step executes.
struct OperandSource {
    enum class Kind : std::uint8_t { Input, Core, Constant };
    enum class Half : std::uint8_t { Lo, Hi };

    Kind kind = Kind::Constant;
    // Input byte index, core index, or the constant nibble value.
    std::uint8_t index = 0;
    Half half = Half::Lo;

    static OperandSource input(std::uint8_t byte, Half h) { return {Kind::Input, byte, h}; }
    static OperandSource core(std::uint8_t core_index, Half h) { return {Kind::Core, core_index, h}; }
    static OperandSource constant(std::uint8_t nibble) { return {Kind::Constant, nibble, Half::Lo}; }

    friend bool operator==(const OperandSource&, const OperandSource&) = default;
};

/// Parses "in3.lo", "c5.hi", "#7".
OperandSource parse_operand_source(std::string_view token);
std::string to_string(const OperandSource& src);

struct CoreOp {
    std::uint8_t core = 0;
    OpTag table = OpTag::PASS;
    OperandSource a;
    OperandSource b;

    friend bool operator==(const CoreOp&, const CoreOp&) = default;
};

/// Ops in one step read the register state from before the step (parallel semantics).
struct MicroStep {
    std::vector<CoreOp> ops;

    friend bool operator==(const MicroStep&, const MicroStep&) = default;
};

/// An output byte assembled by the router from two nibbles.
struct OutputByte {
    OperandSource lo;
    OperandSource hi;

    friend bool operator==(const OutputByte&, const OutputByte&) = default;
};

/// An ordered core-step schedule.
///
/// Text form, one record per line (`#` starts a comment):
///
///     step;core;table;srcA;srcB      e.g.  1;0;MUL4;in0.lo;in1.lo
///     out;byte;srcLo;srcHi           e.g.  out;0;c0.lo;c5.lo
///
/// Step numbers start at 1 and are contiguous; output bytes are numbered from 0.
struct ClusterMicroprogram {
    std::vector<MicroStep> steps;
    std::vector<OutputByte> outputs;

    /// Throws StructuralError for a core index outside 0..8, a core used twice in one step,
    /// a constant wider than 4 bits, or a core reading a result that no earlier step produced.
    void validate() const;

    std::size_t op_count() const;

    static ClusterMicroprogram parse(std::string_view text);
    std::string to_text() const;

    friend bool operator==(const ClusterMicroprogram&, const ClusterMicroprogram&) = default;
};

/// The 8-step radix-16 multiply program: step 1 forms the four nibble partial products on
/// cores 0..3 (MUL4), steps 2..8 ripple the nibble columns with carries on cores 4..8 (ADD4).
/// Inputs: byte 0 = a, byte 1 = b. Outputs: the 16-bit product, low byte first.
const ClusterMicroprogram& mac_microprogram();

struct ClusterTimingProfile {
    static constexpr double mac_delay_ns = 6.4;
    static constexpr double power_mw_min = 8.2;
    static constexpr double power_mw_max = 11.0;
    static constexpr double power_mw_nominal = (power_mw_min + power_mw_max) / 2.0;
    static constexpr double area_um2 = 37769.81;
    static constexpr std::uint32_t steps_per_mac = 8;
};

struct MacEnergy {
    double nominal_pj;
    double min_pj;
    double max_pj;
};

/// mW x ns = pJ for the nominal power and both ends of the published range.
MacEnergy mac_energy_pj(const ClusterTimingProfile& profile = {});

/// Router endpoints: cores 0..8 plus the cluster's input and output ports.
inline constexpr std::uint8_t kInputPort = 9;
inline constexpr std::uint8_t kOutputPort = 10;

struct Transfer {
    std::uint8_t source;
    std::uint8_t destination;
    std::uint8_t value;

    friend bool operator==(const Transfer&, const Transfer&) = default;
};

/// Crossbar joining the nine cores. Every delivered operand is counted; the per-transfer
/// log is only kept while tracing is on, since an inference routes millions of bytes.
class Router {
public:
    void set_tracing(bool on) { tracing_ = on; }
    bool tracing() const { return tracing_; }

    void route(std::uint8_t source, std::uint8_t destination, std::uint8_t value) {
        ++count_;
        if (tracing_) {
            log_.push_back({source, destination, value});
        }
    }

    std::uint64_t transfer_count() const { return count_; }
    const std::vector<Transfer>& transfer_log() const { return log_; }
    void clear() {
        count_ = 0;
        log_.clear();
    }

private:
    std::vector<Transfer> log_;
    std::uint64_t count_ = 0;
    bool tracing_ = false;
};

/// Nine LUT cores, a router and a 32-bit accumulator register.
class Cluster {
public:
    static constexpr std::size_t kCoreCount = 9;

    /// Loads each core with the table the program uses on it.
    /// Throws StructuralError if the program needs two different tables on one core.
    void program_for(const ClusterMicroprogram& prog);

    /// Loads the multiply program's tables (cores 0..3 MUL4, cores 4..8 ADD4).
    void program_for_mac() { program_for(mac_microprogram()); }

    void program_core(std::size_t index, const FunctionTable& table);

    /// Executes the program on the given input bytes and returns its output bytes.
    std::vector<std::uint8_t> run_microprogram(const ClusterMicroprogram& prog,
                                               std::span<const std::uint8_t> operands);

    /// accumulator += a * b through the LUT datapath. Throws AccumulatorOverflow when the
    /// sum leaves 32 bits; the accumulator is left unchanged in that case.
    std::uint32_t mac8(std::uint8_t a, std::uint8_t b);

    /// Product only, through the same datapath, without touching the accumulator.
    std::uint16_t multiply8(std::uint8_t a, std::uint8_t b);

    std::uint32_t accumulator() const { return accumulator_; }
    void reset_accumulator(std::uint32_t value = 0) { accumulator_ = value; }

    std::uint64_t step_count() const { return steps_; }
    std::uint64_t mac_count() const { return macs_; }
    double busy_ns() const { return static_cast<double>(steps_) * CoreTimingProfile::core_delay_ns; }

    LutCore& core(std::size_t index);
    const LutCore& core(std::size_t index) const;
    Router& router() { return router_; }
    const Router& router() const { return router_; }

private:
    template <typename Sink>
    void execute(const ClusterMicroprogram& prog, std::span<const std::uint8_t> operands,
                 Sink&& sink);

    std::array<LutCore, kCoreCount> cores_{};
    Router router_;
    std::uint32_t accumulator_ = 0;
    std::uint64_t steps_ = 0;
    std::uint64_t macs_ = 0;
};

} // namespace lutpim
