#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace amerput {

enum class Command { Check, Arbitrage, Build, Verify, Roundtrip, Demo };
enum class Format { Json, Text };

struct RunConfig {
    Command command = Command::Check;
    std::string input;
    std::string output;
    std::string market;  ///< verify: market whose quotes the model should reprice
    std::optional<double> tolerance;
    std::uint64_t seed = 7;
    int depth = 3;
    int branching = 3;
    Format format = Format::Json;
};

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int violations = 1;
inline constexpr int input_error = 2;
inline constexpr int internal_error = 3;
} // namespace exit_code

/// Runs one command; reports go to `out`, diagnostics to `err`.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Parses argv and runs. Returns the process exit status.
int cli_main(int argc, char** argv);

} // namespace amerput
