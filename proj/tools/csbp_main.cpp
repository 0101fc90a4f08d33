#include "csbp/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv)
{
    CLI::App app{"Convolution determinants, jump conditions and small-ball Monte Carlo for Levy-driven moving averages"};
    csbp::RunOptions opt;
    app.add_option("config", opt.config_path, "TOML experiment file")->required()->check(CLI::ExistingFile);
    std::uint64_t seed = 0;
    long n = 0;
    std::string out;
    int threads = 0;
    auto* seed_opt = app.add_option("--seed", seed, "override params.seed");
    auto* n_opt = app.add_option("--n", n, "override params.N (Monte Carlo trials)")->check(CLI::PositiveNumber);
    auto* out_opt = app.add_option("--out", out, "override the output directory");
    auto* threads_opt = app.add_option("--threads", threads, "cap on worker threads (0 uses all cores)")
                            ->check(CLI::NonNegativeNumber);
    app.add_flag("--strict", opt.strict, "exit with code 3 on an inconclusive verdict");
    app.add_flag("--timing", opt.timing, "record wall-clock runtimes in the outputs");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : csbp::kExitConfig;
    }
    if (*seed_opt)
        opt.seed = seed;
    if (*n_opt)
        opt.trials = n;
    if (*out_opt)
        opt.out = out;
    if (*threads_opt)
        opt.threads = threads;
    return csbp::run(opt, std::cout, std::cerr);
}
