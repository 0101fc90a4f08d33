#include "csbp/config.hpp"

#include "csbp/copula.hpp"

#include <toml.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

namespace csbp {

namespace {

int line_of(const toml::node* n)
{
    return n ? static_cast<int>(n->source().begin.line) : 0;
}

[[noreturn]] void fail(const std::string& key, const toml::node* n, const std::string& msg)
{
    throw ConfigError(key, line_of(n), msg);
}

std::string join(const std::string& prefix, const std::string& key)
{
    return prefix.empty() ? key : prefix + "." + key;
}

// Typed accessors over one table; every error names the dotted key.
class Section {
public:
    Section(const toml::table* t, std::string prefix, const toml::node* self = nullptr)
        : t_(t), prefix_(std::move(prefix)), self_(self)
    {
    }

    bool has(const std::string& key) const { return t_ && t_->contains(key); }
    const toml::node* node(const std::string& key) const { return t_ ? t_->get(key) : nullptr; }
    std::string name(const std::string& key) const { return join(prefix_, key); }
    const std::string& prefix() const { return prefix_; }

    const toml::node& require(const std::string& key) const
    {
        const toml::node* n = node(key);
        if (!n)
            fail(name(key), self_, "missing required key");
        return *n;
    }

    double number(const std::string& key, std::optional<double> def = std::nullopt) const
    {
        const toml::node* n = node(key);
        if (!n) {
            if (def)
                return *def;
            fail(name(key), self_, "missing required key");
        }
        return as_number(*n, name(key));
    }

    long integer(const std::string& key, long def) const
    {
        const toml::node* n = node(key);
        if (!n)
            return def;
        if (const auto* v = n->as_integer())
            return static_cast<long>(v->get());
        fail(name(key), n, "expected an integer");
    }

    bool boolean(const std::string& key, bool def) const
    {
        const toml::node* n = node(key);
        if (!n)
            return def;
        if (const auto* v = n->as_boolean())
            return v->get();
        fail(name(key), n, "expected true or false");
    }

    std::string string(const std::string& key, std::optional<std::string> def = std::nullopt) const
    {
        const toml::node* n = node(key);
        if (!n) {
            if (def)
                return *def;
            fail(name(key), self_, "missing required key");
        }
        if (const auto* v = n->as_string())
            return v->get();
        fail(name(key), n, "expected a string");
    }

    Eigen::VectorXd vector(const std::string& key) const
    {
        const toml::node& n = require(key);
        return as_vector(n, name(key));
    }

    std::vector<double> numbers(const std::string& key, std::vector<double> def) const
    {
        if (!has(key))
            return def;
        const Eigen::VectorXd v = vector(key);
        return std::vector<double>(v.data(), v.data() + v.size());
    }

    Eigen::MatrixXd matrix(const std::string& key) const
    {
        const toml::node& n = require(key);
        return as_matrix(n, name(key));
    }

    Section table(const std::string& key) const
    {
        const toml::node& n = require(key);
        const auto* t = n.as_table();
        if (!t)
            fail(name(key), &n, "expected a table");
        return Section(t, name(key), &n);
    }

    std::vector<Section> tables(const std::string& key) const
    {
        const toml::node& n = require(key);
        const auto* a = n.as_array();
        if (!a)
            fail(name(key), &n, "expected an array of tables");
        std::vector<Section> out;
        for (size_t i = 0; i < a->size(); ++i) {
            const toml::node* e = a->get(i);
            const auto* t = e->as_table();
            if (!t)
                fail(name(key), e, "expected an array of tables");
            out.emplace_back(t, name(key) + "[" + std::to_string(i) + "]", e);
        }
        return out;
    }

    const toml::node* self() const { return self_; }

    static double as_number(const toml::node& n, const std::string& key)
    {
        if (const auto* v = n.as_floating_point())
            return v->get();
        if (const auto* v = n.as_integer())
            return static_cast<double>(v->get());
        fail(key, &n, "expected a number");
    }

    static Eigen::VectorXd as_vector(const toml::node& n, const std::string& key)
    {
        if (n.is_number())
            return Eigen::VectorXd::Constant(1, as_number(n, key));
        const auto* a = n.as_array();
        if (!a)
            fail(key, &n, "expected an array of numbers");
        Eigen::VectorXd v(static_cast<Eigen::Index>(a->size()));
        for (size_t i = 0; i < a->size(); ++i)
            v[static_cast<Eigen::Index>(i)] = as_number(*a->get(i), key);
        return v;
    }

    static Eigen::MatrixXd as_matrix(const toml::node& n, const std::string& key)
    {
        if (n.is_number())
            return Eigen::MatrixXd::Constant(1, 1, as_number(n, key));
        const auto* a = n.as_array();
        if (!a || a->empty())
            fail(key, &n, "expected a matrix given as an array of rows");
        const auto rows = static_cast<Eigen::Index>(a->size());
        Eigen::MatrixXd m;
        for (Eigen::Index i = 0; i < rows; ++i) {
            const Eigen::VectorXd r = as_vector(*a->get(static_cast<size_t>(i)), key);
            if (i == 0)
                m.resize(rows, r.size());
            if (r.size() != m.cols())
                fail(key, a->get(static_cast<size_t>(i)), "matrix rows have different lengths");
            m.row(i) = r.transpose();
        }
        return m;
    }

private:
    const toml::table* t_;
    std::string prefix_;
    const toml::node* self_;
};

template <typename F>
auto guarded(const Section& s, const std::string& key, F&& f)
{
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(s.name(key), line_of(s.node(key) ? s.node(key) : s.self()), e.what());
    } catch (const std::domain_error& e) {
        throw ConfigError(s.name(key), line_of(s.node(key) ? s.node(key) : s.self()), e.what());
    }
}

Experiment parse_experiment(const std::string& s, const toml::node* n)
{
    static const std::pair<const char*, Experiment> names[] = {
        {"check-detstar", Experiment::CheckDetstar},
        {"check-jumps", Experiment::CheckJumps},
        {"check-integrability", Experiment::CheckIntegrability},
        {"simulate", Experiment::Simulate},
        {"tube", Experiment::Tube},
        {"conditional-tube", Experiment::ConditionalTube},
        {"hitting", Experiment::Hitting},
        {"convdet-dump", Experiment::ConvdetDump},
    };
    for (const auto& [name, e] : names)
        if (s == name)
            return e;
    fail("experiment", n, "unknown experiment '" + s + "'");
}

// Power-law entries: d x d nested arrays of [coefficient, exponent] pairs.
PowerMatrix parse_power(const Section& s, const std::string& key)
{
    const toml::node& n = s.require(key);
    const auto* rows = n.as_array();
    if (!rows || rows->empty())
        fail(s.name(key), &n, "expected a square array of term lists");
    const int d = static_cast<int>(rows->size());
    PowerMatrix m(d);
    for (int i = 0; i < d; ++i) {
        const auto* row = rows->get(static_cast<size_t>(i))->as_array();
        if (!row || static_cast<int>(row->size()) != d)
            fail(s.name(key), rows->get(static_cast<size_t>(i)), "expected a square array of term lists");
        for (int j = 0; j < d; ++j) {
            const auto* terms = row->get(static_cast<size_t>(j))->as_array();
            if (!terms)
                fail(s.name(key), row->get(static_cast<size_t>(j)), "expected a list of [coefficient, exponent]");
            std::vector<PowerSum::Term> ts;
            for (size_t t = 0; t < terms->size(); ++t) {
                const Eigen::VectorXd ce = Section::as_vector(*terms->get(t), s.name(key));
                if (ce.size() != 2)
                    fail(s.name(key), terms->get(t), "expected [coefficient, exponent]");
                if (!(ce[1] > -1.0))
                    fail(s.name(key), terms->get(t), "exponents must exceed -1");
                ts.push_back({ce[0], ce[1]});
            }
            m(i, j) = PowerSum(std::move(ts));
        }
    }
    return m;
}

PsiSpec parse_psi(const Section& s, const std::string& def, const std::string& base_dir)
{
    const std::string psi = s.string("psi", def);
    if (psi == "zero")
        return PsiZero{};
    if (psi == "mirror")
        return PsiMirror{};
    if (psi == "tabulated") {
        const std::string file = s.string("psi_file");
        return guarded(s, "psi_file", [&] {
            return TabulatedPhi{read_matrix_grid_csv_file((std::filesystem::path(base_dir) / file).string())};
        });
    }
    fail(s.name("psi"), s.node("psi"), "expected zero, mirror or tabulated");
}

Kernel parse_kernel(const Section& s, const std::string& base_dir, std::optional<PowerMatrix>& power)
{
    const std::string family = s.string("family");
    if (family == "mvn") {
        const double H = s.number("H");
        if (!(H > 0.0 && H < 1.0))
            fail(s.name("H"), s.node("H"), "must lie in (0, 1)");
        return guarded(s, "H", [&] { return mvn_kernel(H); });
    }
    if (family == "exponential") {
        const Eigen::MatrixXd A = s.matrix("A");
        const Eigen::MatrixXd Sigma = s.has("Sigma") ? s.matrix("Sigma") : Eigen::MatrixXd::Identity(A.rows(), A.cols());
        return guarded(s, "A", [&] { return exp_kernel(A, Sigma); });
    }
    if (family == "constant") {
        const Eigen::MatrixXd C = s.matrix("C");
        if (C.rows() != C.cols())
            fail(s.name("C"), s.node("C"), "must be square");
        PowerMatrix m(static_cast<int>(C.rows()));
        for (int i = 0; i < C.rows(); ++i)
            for (int j = 0; j < C.cols(); ++j)
                if (C(i, j) != 0.0)
                    m(i, j) = PowerSum::monomial(C(i, j), 0.0);
        power = m;
        return guarded(s, "C", [&] { return power_kernel(m, parse_psi(s, "mirror", base_dir)); });
    }
    if (family == "power") {
        const PowerMatrix m = parse_power(s, "terms");
        power = m;
        return guarded(s, "terms", [&] { return power_kernel(m, parse_psi(s, "zero", base_dir)); });
    }
    if (family == "triangular") {
        const PowerMatrix m = parse_power(s, "terms");
        const std::string shape = s.string("shape", "lower");
        if (shape != "lower" && shape != "upper")
            fail(s.name("shape"), s.node("shape"), "expected lower or upper");
        return guarded(s, "terms", [&] {
            return triangular_kernel(m, shape == "lower" ? Triangle::Lower : Triangle::Upper,
                                     parse_psi(s, "zero", base_dir));
        });
    }
    if (family == "tabulated") {
        const std::string file = s.string("file");
        return guarded(s, "file", [&] {
            return tabulated_kernel(read_matrix_grid_csv_file((std::filesystem::path(base_dir) / file).string()),
                                    parse_psi(s, "zero", base_dir));
        });
    }
    fail(s.name("family"), s.node("family"), "unknown kernel family '" + family + "'");
}

Jump1D parse_jump1d(const Section& s)
{
    const std::string type = s.string("type");
    return guarded(s, "type", [&]() -> Jump1D {
        if (type == "atoms") {
            const Eigen::VectorXd p = s.vector("points");
            const Eigen::VectorXd r = s.vector("rates");
            return atoms_1d(std::vector<double>(p.data(), p.data() + p.size()),
                            std::vector<double>(r.data(), r.data() + r.size()));
        }
        if (type == "tempered")
            return tempered_stable_1d(s.number("c_pos", 0.0), s.number("c_neg", 0.0), s.number("alpha"),
                                      s.number("lambda_pos", 0.0), s.number("lambda_neg", 0.0));
        if (type == "exponential")
            return exponential_1d(s.number("c_pos", 0.0), s.number("lambda_pos", 1.0), s.number("c_neg", 0.0),
                                  s.number("lambda_neg", 1.0));
        fail(s.name("type"), s.node("type"), "expected atoms, tempered or exponential");
    });
}

std::vector<Jump1D> parse_marginals(const Section& s, const std::string& key)
{
    std::vector<Jump1D> out;
    for (const Section& m : s.tables(key))
        out.push_back(parse_jump1d(m));
    return out;
}

std::vector<Eigen::VectorXd> rows_of(const Eigen::MatrixXd& m)
{
    std::vector<Eigen::VectorXd> out;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        out.push_back(m.row(i).transpose());
    return out;
}

std::vector<double> std_vec(const Eigen::VectorXd& v)
{
    return std::vector<double>(v.data(), v.data() + v.size());
}

LevyModel parse_levy(const Section& s, const toml::table& root)
{
    const std::string family = s.string("family");
    std::optional<LevyModel> m;
    if (family == "brownian") {
        const Eigen::MatrixXd S = s.matrix("gaussian");
        const Eigen::VectorXd b = s.has("drift") ? s.vector("drift") : Eigen::VectorXd::Zero(S.rows());
        return guarded(s, "gaussian", [&] { return brownian_model(S, b); });
    }
    if (family == "atoms") {
        const Eigen::MatrixXd p = s.matrix("points");
        const Eigen::VectorXd r = s.vector("rates");
        m = guarded(s, "points", [&] { return atoms_model(rows_of(p), std_vec(r)); });
    } else if (family == "independent") {
        m = guarded(s, "marginal", [&] { return independent_components(parse_marginals(s, "marginal")); });
    } else if (family == "polar") {
        const Eigen::MatrixXd dirs = s.matrix("directions");
        const Eigen::VectorXd w = s.vector("weights");
        m = guarded(s, "radial", [&] { return polar_measure(rows_of(dirs), std_vec(w), parse_marginals(s, "radial")); });
    } else if (family == "polar_uniform") {
        const long dim = s.integer("dim", 2);
        const double mass = s.number("mass");
        m = guarded(s, "radial", [&] { return polar_uniform(static_cast<int>(dim), mass, parse_jump1d(s.table("radial"))); });
    } else if (family == "subordinated") {
        std::vector<Triplet1D> marg;
        for (const Section& t : s.tables("marginal"))
            marg.push_back({t.number("drift", 0.0), parse_jump1d(t)});
        const Eigen::VectorXd c = s.vector("c");
        const Eigen::MatrixXd rp = s.matrix("rho_points");
        const Eigen::VectorXd rw = s.vector("rho_weights");
        m = guarded(s, "rho_points", [&] { return subordinate(std::move(marg), c, rows_of(rp), std_vec(rw)); });
    } else if (family == "upsilon") {
        auto base = std::make_shared<const LevyModel>(parse_levy(s.table("base"), root));
        const Eigen::VectorXd w = s.vector("weights");
        const toml::node& mn = s.require("matrices");
        const auto* arr = mn.as_array();
        if (!arr)
            fail(s.name("matrices"), &mn, "expected an array of matrices");
        std::vector<Eigen::MatrixXd> mats;
        for (size_t i = 0; i < arr->size(); ++i)
            mats.push_back(Section::as_matrix(*arr->get(i), s.name("matrices")));
        m = guarded(s, "matrices", [&] { return upsilon(base, std_vec(w), std::move(mats)); });
    } else if (family == "copula") {
        const auto* ct = root.get_as<toml::table>("copula");
        if (!ct)
            fail("copula", nullptr, "levy family copula needs a [copula] section");
        const Section cs(ct, "copula", root.get("copula"));
        const std::vector<Jump1D> marg = parse_marginals(s, "marginal");
        const int d = static_cast<int>(marg.size());
        const std::string gen = cs.string("generator", "ratio");
        m = guarded(cs, "generator", [&] {
            if (gen == "ratio")
                return copula_measure(archimedean_copula(d, ratio_generator()), marg);
            if (gen == "independence")
                return copula_measure(independence_copula(d), marg);
            if (gen == "complete")
                return copula_measure(complete_dependence_copula(d), marg);
            throw std::invalid_argument("expected ratio, independence or complete");
        });
    } else {
        fail(s.name("family"), s.node("family"), "unknown Levy family '" + family + "'");
    }
    if (s.has("drift") || s.has("gaussian") || s.has("convention")) {
        const int d = m->dim();
        const Eigen::VectorXd b = s.has("drift") ? s.vector("drift") : Eigen::VectorXd::Zero(d);
        const Eigen::MatrixXd S = s.has("gaussian") ? s.matrix("gaussian") : Eigen::MatrixXd::Zero(d, d);
        const std::string conv = s.string("convention", family == "atoms" ? "raw" : "truncated");
        if (conv != "raw" && conv != "truncated")
            fail(s.name("convention"), s.node("convention"), "expected raw or truncated");
        m = guarded(s, s.has("drift") ? "drift" : "gaussian", [&] {
            return with_triplet(*m, b, S, conv == "raw" ? DriftConvention::Raw : DriftConvention::Truncated);
        });
    }
    return *m;
}

void check(bool ok, const Section& s, const std::string& key, const std::string& msg)
{
    if (!ok)
        fail(s.name(key), s.node(key) ? s.node(key) : s.self(), msg);
}

bool multiple_of(double x, double h)
{
    const double r = std::round(x / h);
    return std::abs(x / h - r) <= 1e-6 * std::max(1.0, r);
}

}  // namespace

ConfigError::ConfigError(std::string key, int line, const std::string& message)
    : std::invalid_argument("config error: key '" + key + "'" + (line > 0 ? " (line " + std::to_string(line) + ")" : "") +
                            ": " + message),
      key_(std::move(key)), line_(line)
{
}

std::string to_string(Experiment e)
{
    switch (e) {
    case Experiment::CheckDetstar: return "check-detstar";
    case Experiment::CheckJumps: return "check-jumps";
    case Experiment::CheckIntegrability: return "check-integrability";
    case Experiment::Simulate: return "simulate";
    case Experiment::Tube: return "tube";
    case Experiment::ConditionalTube: return "conditional-tube";
    case Experiment::Hitting: return "hitting";
    case Experiment::ConvdetDump: return "convdet-dump";
    }
    return "unknown";
}

std::uint64_t fnv1a64(const std::string& bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t x)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

ExperimentConfig parse_config(const std::string& text, const std::string& base_dir)
{
    toml::table root;
    try {
        root = toml::parse(text);
    } catch (const toml::parse_error& e) {
        throw ConfigError("<syntax>", static_cast<int>(e.source().begin.line), std::string(e.description()));
    }
    ExperimentConfig cfg;
    cfg.hash = hex64(fnv1a64(text));
    const Section top(&root, "");
    cfg.experiment = parse_experiment(top.string("experiment"), top.node("experiment"));
    cfg.output = top.string("output", "out");

    Params& p = cfg.params;
    if (top.has("params")) {
        const Section s = top.table("params");
        for (const auto& [k, v] : *root.get_as<toml::table>("params"))
            cfg.key_lines[std::string(k.str())] = line_of(&v);
        p.h = s.number("h", p.h);
        p.history = s.number("M", p.history);
        p.horizon = s.number("T", p.horizon);
        p.t0 = s.number("t0", p.t0);
        p.epsilon = s.number("epsilon", p.epsilon);
        p.delta = s.number("delta", p.delta);
        p.trials = s.integer("N", p.trials);
        const long seed = s.integer("seed", static_cast<long>(p.seed));
        check(seed >= 0, s, "seed", "must be nonnegative");
        p.seed = static_cast<std::uint64_t>(seed);
        p.threads = static_cast<int>(s.integer("threads", p.threads));
        p.gaussian_small_jumps = s.boolean("gaussian_small_jumps", p.gaussian_small_jumps);
        p.bridge = s.boolean("bridge", p.bridge);
        p.pasts = static_cast<int>(s.integer("pasts", p.pasts));
        if (s.has("center"))
            p.center = s.vector("center");
        p.radius = s.number("radius", p.radius);
        p.window = s.number("window", p.window);
        p.paths = static_cast<int>(s.integer("paths", p.paths));
        p.long_format = s.boolean("long_format", p.long_format);
        p.jump_epsilons = s.numbers("jump_epsilons", p.jump_epsilons);
        p.net_size = static_cast<int>(s.integer("net_size", p.net_size));
        p.jump_samples = static_cast<int>(s.integer("jump_samples", p.jump_samples));
        p.times = s.numbers("times", p.times);
        p.detstar_horizon = s.number("detstar_horizon", p.detstar_horizon);
    }
    if (top.has("kernel"))
        cfg.kernel = parse_kernel(top.table("kernel"), base_dir, cfg.power);
    if (top.has("levy"))
        cfg.levy = parse_levy(top.table("levy"), root);
    if (top.has("target")) {
        const Section s = top.table("target");
        const std::string kind = s.string("kind", "zero");
        if (kind == "zero") {
            cfg.target.kind = TargetKind::Zero;
        } else if (kind == "linear") {
            cfg.target.kind = TargetKind::Linear;
            cfg.target.vector = s.vector("slope");
        } else if (kind == "reachable") {
            cfg.target.kind = TargetKind::Reachable;
            cfg.target.vector = s.vector("control");
        } else {
            fail(s.name("kind"), s.node("kind"), "expected zero, linear or reachable");
        }
    }

    const Experiment e = cfg.experiment;
    const bool needs_kernel = e != Experiment::CheckJumps;
    const bool needs_levy = e != Experiment::CheckDetstar && e != Experiment::ConvdetDump;
    if (needs_kernel && !cfg.kernel)
        fail("kernel", nullptr, "experiment " + to_string(e) + " needs a [kernel] section");
    if (needs_levy && !cfg.levy)
        fail("levy", nullptr, "experiment " + to_string(e) + " needs a [levy] section");
    if (cfg.kernel && cfg.levy && cfg.kernel->dim() != cfg.levy->dim())
        fail("levy", top.node("levy"), "dimension differs from the kernel dimension");
    const int d = cfg.kernel ? cfg.kernel->dim() : (cfg.levy ? cfg.levy->dim() : 1);
    if (cfg.target.kind != TargetKind::Zero && cfg.target.vector.size() != d)
        fail("target", top.node("target"), "target vector must have the process dimension");
    if (e == Experiment::Hitting && p.center.size() == 0)
        p.center = Eigen::VectorXd::Zero(d);
    if (e == Experiment::Hitting && p.center.size() != d)
        fail("params.center", nullptr, "must have the process dimension");
    validate_params(cfg);
    return cfg;
}

void validate_params(const ExperimentConfig& cfg)
{
    const Params& p = cfg.params;
    auto bad = [&](const std::string& key, const std::string& msg) {
        const auto it = cfg.key_lines.find(key);
        throw ConfigError("params." + key, it == cfg.key_lines.end() ? 0 : it->second, msg);
    };
    if (!(p.h > 0.0) || !std::isfinite(p.h))
        bad("h", "must be positive");
    if (!(p.history >= 0.0) || !multiple_of(p.history, p.h))
        bad("M", "must be a nonnegative multiple of h");
    if (!(p.horizon > 0.0) || !multiple_of(p.horizon, p.h))
        bad("T", "must be a positive multiple of h");
    if (!(p.t0 >= 0.0) || !(p.t0 < p.horizon) || !multiple_of(p.t0, p.h))
        bad("t0", "must be a grid point in [0, T)");
    if (!(p.epsilon > 0.0) || !std::isfinite(p.epsilon))
        bad("epsilon", "must be positive");
    if (!(p.delta >= 0.0))
        bad("delta", "must be nonnegative");
    if (p.trials < 1)
        bad("N", "must be at least 1");
    if (p.threads < 0)
        bad("threads", "must be nonnegative (0 uses all cores)");
    if (p.pasts < 1)
        bad("pasts", "must be at least 1");
    if (!(p.radius > 0.0))
        bad("radius", "must be positive");
    if (!(p.window > 0.0) || !multiple_of(p.window, p.h))
        bad("window", "must be a positive multiple of h");
    if (cfg.experiment == Experiment::Hitting && p.t0 + p.window > p.horizon * (1.0 + 1e-12))
        bad("window", "t0 + window must not exceed T");
    if (p.paths < 1)
        bad("paths", "must be at least 1");
    for (double x : p.jump_epsilons)
        if (!(x > 0.0))
            bad("jump_epsilons", "must be positive");
    if (p.net_size < 0)
        bad("net_size", "must be nonnegative");
    if (p.jump_samples < 1)
        bad("jump_samples", "must be at least 1");
    for (double t : p.times)
        if (!(t >= 0.0))
            bad("times", "must be nonnegative");
    if (!(p.detstar_horizon > 0.0) || !multiple_of(p.detstar_horizon, p.h))
        bad("detstar_horizon", "must be a positive multiple of h");
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("<file>", 0, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    return parse_config(ss.str(), base.empty() ? "." : base.string());
}

}  // namespace csbp
