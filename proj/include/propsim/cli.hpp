#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "propsim/model.hpp"
#include "propsim/regime.hpp"

namespace propsim::cli {

enum class Verb { Simulate, Classify, Sweep, Critical, Serve };

struct Command {
    Verb verb = Verb::Simulate;
    Scenario scenario;              ///< file first, flags override
    std::string input;              ///< classify: trajectory CSV
    std::string out;                ///< simulate: CSV; sweep: cells CSV
    std::string plot;               ///< simulate: optional SVG
    std::vector<AxisSpec> axes;     ///< sweep
    std::optional<double> gap_threshold;    ///< classify overrides
    std::optional<double> peak_prominence;
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string static_dir;
    std::size_t threads = 0;        ///< sweep parallelism, 0 = auto
};

struct ParseResult {
    std::optional<Command> command;  ///< empty when the process should exit
    int exit_code = 0;               ///< 0 for --help, 1 runtime, 2 usage
};

/// Parses argv. Usage errors print to `err` and yield exit code 2; --help
/// prints usage to `out` and yields 0.
ParseResult parse_args(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Runs a command. Returns 0 on success and 1 on runtime failure.
int execute(const Command& cmd, std::ostream& out, std::ostream& err);

/// "name=lo:hi:count" or "name=v1,v2,...". Throws Error(InvalidAxis) for an
/// unknown name and Error(SchemaError) for malformed text.
AxisSpec parse_axis(const std::string& text);

}  // namespace propsim::cli
