#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace csbp {

enum ExitCode { kExitOk = 0, kExitConfig = 2, kExitInconclusive = 3, kExitRuntime = 4 };

struct RunOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<long> trials;
    std::optional<std::string> out;
    std::optional<int> threads;
    bool strict = false;
    bool timing = false;
};

// Runs the configured experiment, writing CSV artifacts and report.txt into the output directory.
int run(const RunOptions& opt, std::ostream& out, std::ostream& err);

}  // namespace csbp
