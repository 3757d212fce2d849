#pragma once

#include "lutpim/network.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace lutpim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitInternal = 4;

/// Everything a subcommand reads. Filled from flags, then overridden by --config.
struct RunConfig {
    std::string command;
    std::string input;
    std::string out;
    std::string weights;
    std::string config;
    std::string detail_out;
    std::vector<std::string> networks;
    std::vector<unsigned> precisions{8};
    std::string mode = "functional";
    std::string input_dims;
    std::uint32_t clusters = 256;
    std::uint64_t seed = 0;
    std::size_t resize = 0;
    std::size_t benign = 500;
    std::size_t malware = 500;

    unsigned precision() const { return precisions.front(); }
    const std::string& network() const { return networks.front(); }

    /// Every problem with the configuration for its command, in a fixed order.
    std::vector<std::string> problems() const;
};

/// "key = value" lines using the long flag names; '#' starts a comment. Lists are comma separated.
void apply_config_file(RunConfig& cfg, std::string_view text);

/// A zoo name (with optional input dims) or the path of a network config file.
/// Throws UnsupportedOperation listing the valid names when neither applies.
NetworkSpec resolve_network(std::string_view name_or_path, std::string_view input_dims = {});

/// Runs the tool with argv-style arguments (args[0] is the program name). Returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace lutpim::cli
