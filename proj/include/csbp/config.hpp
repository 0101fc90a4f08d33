#pragma once

#include "csbp/kernels.hpp"
#include "csbp/levymeasure.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace csbp {

// Validation or parse error naming the offending key and its line (0 when unknown).
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string key, int line, const std::string& message);
    const std::string& key() const { return key_; }
    int line() const { return line_; }

private:
    std::string key_;
    int line_;
};

enum class Experiment { CheckDetstar, CheckJumps, CheckIntegrability, Simulate, Tube, ConditionalTube, Hitting, ConvdetDump };
std::string to_string(Experiment e);

enum class TargetKind { Zero, Linear, Reachable };

struct Params {
    double h = 1e-3;
    double history = 10.0;    // M
    double horizon = 1.0;     // T
    double t0 = 0.0;
    double epsilon = 1.0;
    double delta = 1e-3;
    long trials = 10000;      // N
    std::uint64_t seed = 1;
    int threads = 1;
    bool gaussian_small_jumps = false;
    bool bridge = true;
    // frozen pasts for conditional-tube and hitting
    int pasts = 1;
    // hitting
    Eigen::VectorXd center;
    double radius = 1.0;
    double window = 1.0;
    // simulate
    int paths = 1;
    bool long_format = true;
    // check-jumps
    std::vector<double> jump_epsilons{0.1, 1.0};
    int net_size = 0;
    int jump_samples = 2000;
    // check-integrability
    std::vector<double> times{1.0};
    // check-detstar and convdet-dump
    double detstar_horizon = 1.0;
};

struct TargetSpec {
    TargetKind kind = TargetKind::Zero;
    Eigen::VectorXd vector;   // slope for Linear, constant control for Reachable
};

struct ExperimentConfig {
    Experiment experiment = Experiment::Tube;
    std::string output = "out";
    Params params;
    std::optional<Kernel> kernel;
    std::optional<LevyModel> levy;
    std::optional<PowerMatrix> power;   // set for power-law kernels (symbolic det*)
    TargetSpec target;
    std::string hash;                   // FNV-1a of the config text, 16 hex digits
    std::map<std::string, int> key_lines;   // source line of each [params] key
};

std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t x);

// Parses TOML text; relative file names (tabulated kernels) resolve against base_dir.
ExperimentConfig parse_config(const std::string& text, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);

// Re-validates numeric parameters after command-line overrides.
void validate_params(const ExperimentConfig& cfg);

}  // namespace csbp
