#include "csbp/cli.hpp"

#include "csbp/config.hpp"
#include "csbp/mcverify.hpp"
#include "csbp/simulate.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace csbp {

namespace {

namespace fs = std::filesystem;

std::string num(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string vec(const Eigen::VectorXd& v)
{
    std::string s;
    for (Eigen::Index i = 0; i < v.size(); ++i)
        s += (i ? " " : "") + num(v[i]);
    return s;
}

void write_file(const fs::path& p, const std::string& text)
{
    std::ofstream f(p, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot write " + p.string());
    f << text;
}

struct Outcome {
    std::ostringstream report;
    bool inconclusive = false;
};

SimConfig sim_config(const Params& p)
{
    SimConfig s;
    s.h = p.h;
    s.history = p.history;
    s.horizon = p.horizon;
    s.delta = p.delta;
    s.gaussian_small_jumps = p.gaussian_small_jumps;
    s.seed = p.seed;
    return s;
}

McConfig mc_config(const Params& p)
{
    return McConfig{p.trials, p.seed, p.threads, p.bridge};
}

Eigen::MatrixXd build_target(const ExperimentConfig& cfg)
{
    const Params& p = cfg.params;
    const int d = cfg.kernel->dim();
    const auto n = static_cast<Eigen::Index>(std::llround((p.horizon - p.t0) / p.h));
    Eigen::MatrixXd f = Eigen::MatrixXd::Zero(d, n + 1);
    switch (cfg.target.kind) {
    case TargetKind::Zero:
        break;
    case TargetKind::Linear:
        for (Eigen::Index m = 0; m <= n; ++m)
            f.col(m) = cfg.target.vector * (p.h * static_cast<double>(m));
        break;
    case TargetKind::Reachable: {
        Eigen::MatrixXd control(d, n + 1);
        control.colwise() = cfg.target.vector;
        f = reachable_target(*cfg.kernel, p.h, control);
        break;
    }
    }
    return f;
}

void run_detstar(const ExperimentConfig& cfg, const fs::path& dir, Outcome& o)
{
    DetStarConfig dc;
    dc.h = cfg.params.h;
    dc.horizon = cfg.params.detstar_horizon;
    const DetStarVerdict v = check_detstar(*cfg.kernel, dc);
    std::ostringstream csv;
    csv << "tau,sup_detstar,noise\n";
    for (const auto& w : v.probe_windows)
        csv << num(w.tau) << "," << num(w.sup_detstar) << "," << num(w.noise) << "\n";
    write_file(dir / "detstar.csv", csv.str());
    o.report << "kernel: " << cfg.kernel->family() << "\n";
    o.report << "verdict: " << to_string(v.status) << "\n";
    o.report << "evidence: " << v.evidence << "\n";
    o.inconclusive = v.status == DetStarStatus::Inconclusive;
}

void run_jumps(const ExperimentConfig& cfg, const fs::path& dir, Outcome& o)
{
    JumpsConfig jc;
    jc.epsilons = cfg.params.jump_epsilons;
    jc.net_size = cfg.params.net_size;
    jc.samples = cfg.params.jump_samples;
    jc.seed = cfg.params.seed;
    const JumpsVerdict v = check_jumps(*cfg.levy, jc);
    std::ostringstream csv;
    csv << "epsilon,status,min_margin,support_points,witness\n";
    for (const auto& e : v.per_epsilon)
        csv << num(e.epsilon) << "," << to_string(e.status) << "," << num(e.min_margin) << "," << e.support_points
            << "," << vec(e.witness) << "\n";
    write_file(dir / "jumps.csv", csv.str());
    o.report << "levy: " << cfg.levy->kind() << "\n";
    o.report << "verdict: " << to_string(v.overall()) << "\n";
    for (const auto& e : v.per_epsilon) {
        o.report << "epsilon " << num(e.epsilon) << ": " << to_string(e.status);
        if (e.witness.size() > 0)
            o.report << " witness [" << vec(e.witness) << "]";
        if (!e.note.empty())
            o.report << " (" << e.note << ")";
        o.report << "\n";
    }
    o.inconclusive = v.overall() == JumpsStatus::Inconclusive;
}

void run_integrability(const ExperimentConfig& cfg, const fs::path& dir, Outcome& o)
{
    const IntegrabilityReport r = check_integrability(*cfg.kernel, *cfg.levy, cfg.params.times);
    std::ostringstream csv;
    csv << "t,l1,l2,status,offending\n";
    for (const auto& row : r.rows)
        csv << num(row.t) << "," << num(row.l1) << "," << num(row.l2) << "," << to_string(row.status) << ","
            << row.offending << "\n";
    write_file(dir / "integrability.csv", csv.str());
    o.report << "verdict: " << to_string(r.status) << "\n";
    o.report << "message: " << r.message << "\n";
    o.inconclusive = r.status == IntegrabilityStatus::Unsupported;
}

void run_simulate(const ExperimentConfig& cfg, const fs::path& dir, Outcome& o)
{
    const Params& p = cfg.params;
    std::vector<ProcessPath> paths;
    for (int i = 0; i < p.paths; ++i) {
        SimConfig s = sim_config(p);
        if (p.paths > 1)
            s.seed = make_stream(p.seed, {static_cast<std::uint64_t>(i)}).key();
        const DriverPath drv = sample_driver(*cfg.levy, s);
        paths.push_back(ma_path(*cfg.kernel, drv, p.t0));
    }
    if (p.long_format || p.paths == 1) {
        std::ostringstream csv;
        if (p.paths == 1)
            write_csv(csv, paths.front());
        else
            write_ensemble_csv(csv, paths);
        write_file(dir / "paths.csv", csv.str());
    } else {
        for (size_t i = 0; i < paths.size(); ++i) {
            std::ostringstream csv;
            write_csv(csv, paths[i]);
            write_file(dir / ("path_" + std::to_string(i) + ".csv"), csv.str());
        }
    }
    o.report << "kernel: " << cfg.kernel->family() << "\n";
    o.report << "levy: " << cfg.levy->kind() << "\n";
    o.report << "paths: " << p.paths << "\n";
    o.report << "history_M: " << num(paths.front().history) << "\n";
    o.report << "history_tail_bound: " << num(paths.front().tail_bound) << "\n";
}

void write_results(const fs::path& dir, const std::vector<TubeEstimate>& rows, bool timing, Outcome& o)
{
    std::ostringstream csv;
    write_results_header(csv);
    for (const auto& r : rows) {
        write_results_row(csv, r, timing);
        o.report << r.experiment << ": hits " << r.hits << "/" << r.trials << ", p_hat " << num(r.p_hat)
                 << ", wilson95 [" << num(r.ci_lo) << ", " << num(r.ci_hi) << "]";
        if (timing)
            o.report << ", runtime_s " << num(r.runtime_s);
        o.report << "\n";
    }
    write_file(dir / "results.csv", csv.str());
}

void run_mc(const ExperimentConfig& cfg, const fs::path& dir, bool timing, Outcome& o)
{
    const Params& p = cfg.params;
    const SimConfig sim = sim_config(p);
    const McConfig mc = mc_config(p);
    std::vector<TubeEstimate> rows;
    if (cfg.experiment == Experiment::Tube) {
        const TubeSpec spec{p.t0, p.horizon, p.epsilon, build_target(cfg)};
        rows.push_back(tube_probability(*cfg.kernel, *cfg.levy, spec, sim, mc));
    } else {
        for (int j = 0; j < p.pasts; ++j) {
            const std::uint64_t past_seed = make_stream(p.seed, {kPastTag, static_cast<std::uint64_t>(j)}).key();
            TubeEstimate e;
            if (cfg.experiment == Experiment::ConditionalTube) {
                const TubeSpec spec{p.t0, p.horizon, p.epsilon, build_target(cfg)};
                e = conditional_tube(*cfg.kernel, *cfg.levy, past_seed, spec, sim, mc);
            } else {
                const HitSpec spec{p.center, p.radius, p.t0, p.window};
                e = hitting_probability(*cfg.kernel, *cfg.levy, past_seed, spec, sim, mc);
            }
            e.experiment += "/past_" + std::to_string(j);
            rows.push_back(e);
        }
    }
    for (auto& r : rows)
        r.config_hash = cfg.hash;
    o.report << "kernel: " << cfg.kernel->family() << "\n";
    o.report << "levy: " << cfg.levy->kind() << "\n";
    write_results(dir, rows, timing, o);
}

void run_convdet(const ExperimentConfig& cfg, const fs::path& dir, Outcome& o)
{
    const Params& p = cfg.params;
    const auto n = static_cast<Eigen::Index>(std::llround(p.detstar_horizon / p.h)) + 1;
    const GridFunctiond det = conv_determinant(cfg.kernel->sample_phi(p.h, n));
    std::ostringstream csv;
    csv << "t,detstar\n";
    for (Eigen::Index i = 0; i < det.size(); ++i)
        csv << num(det.time(i)) << "," << num(det.values[i]) << "\n";
    write_file(dir / "convdet.csv", csv.str());
    o.report << "kernel: " << cfg.kernel->family() << "\n";
    o.report << "grid: h " << num(p.h) << ", horizon " << num(p.detstar_horizon) << "\n";
    if (cfg.power) {
        const PowerSum s = power_conv_determinant(*cfg.power);
        std::ostringstream side;
        side << "coefficient,exponent\n";
        if (s.empty())
            side << "0,none\n";
        for (const auto& t : s.terms())
            side << num(t.coeff) << "," << num(t.exponent) << "\n";
        write_file(dir / "convdet_symbolic.csv", side.str());
        o.report << "symbolic: " << (s.empty() ? std::string("0 (exact cancellation)") : s.to_string()) << "\n";
    }
}

}  // namespace

int run(const RunOptions& opt, std::ostream& out, std::ostream& err)
{
    ExperimentConfig cfg;
    try {
        cfg = load_config(opt.config_path);
        if (opt.seed)
            cfg.params.seed = *opt.seed;
        if (opt.trials)
            cfg.params.trials = *opt.trials;
        if (opt.threads)
            cfg.params.threads = *opt.threads;
        if (opt.out)
            cfg.output = *opt.out;
        validate_params(cfg);
    } catch (const std::exception& e) {
        err << e.what() << "\n";
        return kExitConfig;
    }

    Outcome o;
    const fs::path dir = cfg.output;
    try {
        fs::create_directories(dir);
        o.report << "experiment: " << to_string(cfg.experiment) << "\n";
        o.report << "config_hash: " << cfg.hash << "\n";
        o.report << "seed: " << cfg.params.seed << "\n";
        if (opt.seed || opt.trials)
            o.report << "overrides:" << (opt.seed ? " seed" : "") << (opt.trials ? " n" : "") << "\n";
        switch (cfg.experiment) {
        case Experiment::CheckDetstar: run_detstar(cfg, dir, o); break;
        case Experiment::CheckJumps: run_jumps(cfg, dir, o); break;
        case Experiment::CheckIntegrability: run_integrability(cfg, dir, o); break;
        case Experiment::Simulate: run_simulate(cfg, dir, o); break;
        case Experiment::Tube:
        case Experiment::ConditionalTube:
        case Experiment::Hitting: run_mc(cfg, dir, opt.timing, o); break;
        case Experiment::ConvdetDump: run_convdet(cfg, dir, o); break;
        }
        write_file(dir / "report.txt", o.report.str());
    } catch (const std::exception& e) {
        err << "runtime failure: " << e.what() << "\n";
        return kExitRuntime;
    }
    out << o.report.str();
    if (opt.strict && o.inconclusive)
        return kExitInconclusive;
    return kExitOk;
}

}  // namespace csbp
