#include "csbp/cli.hpp"

#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string kConfigs = std::string(CSBP_TEST_DATA_DIR) + "/configs/";

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / "csbp_cli_test" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

struct Result {
    int code;
    std::string output;
};

// Runs the command-line binary named by CSBP_CLI, capturing stdout and stderr.
Result cli(const std::string& args)
{
    const char* exe = std::getenv("CSBP_CLI");
    REQUIRE_MESSAGE(exe != nullptr, "CSBP_CLI must point at the csbp binary");
    const std::string cmd = std::string(exe) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    char buf[4096];
    while (size_t n = std::fread(buf, 1, sizeof buf, pipe))
        out.append(buf, n);
    const int status = pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

void write(const fs::path& p, const std::string& text)
{
    std::ofstream f(p, std::ios::binary);
    f << text;
}

}  // namespace

TEST_CASE("tube runs are byte-identical across reruns and thread counts")
{
    const fs::path a = scratch("tube_a"), b = scratch("tube_b"), c = scratch("tube_c");
    const std::string cfg = kConfigs + "brownian_tube.toml --n 3000";
    REQUIRE(cli(cfg + " --out " + a.string()).code == 0);
    REQUIRE(cli(cfg + " --out " + b.string()).code == 0);
    REQUIRE(cli(cfg + " --threads 4 --out " + c.string()).code == 0);
    const std::string ra = slurp(a / "results.csv");
    CHECK(ra.rfind("experiment,epsilon,t0,T,N,hits,p_hat,ci_lo,ci_hi,seed,runtime_s\ntube,1,0,1,3000,", 0) == 0);
    CHECK(ra == slurp(b / "results.csv"));
    CHECK(ra == slurp(c / "results.csv"));
    CHECK(slurp(a / "report.txt") == slurp(b / "report.txt"));
    CHECK(slurp(a / "report.txt").find("overrides: n") != std::string::npos);
}

TEST_CASE("seed override changes the estimate")
{
    const fs::path a = scratch("seed_a"), b = scratch("seed_b");
    const std::string cfg = kConfigs + "brownian_tube.toml --n 3000";
    REQUIRE(cli(cfg + " --out " + a.string()).code == 0);
    REQUIRE(cli(cfg + " --seed 99 --out " + b.string()).code == 0);
    CHECK(slurp(a / "results.csv") != slurp(b / "results.csv"));
    CHECK(slurp(b / "results.csv").find(",99,NA\n") != std::string::npos);
}

TEST_CASE("invalid epsilon exits with the configuration code")
{
    const fs::path d = scratch("bad_eps");
    write(d / "bad.toml", "experiment = \"tube\"\n[params]\nepsilon = -0.5\n[kernel]\nfamily = \"mvn\"\nH = "
                          "0.5\n[levy]\nfamily = \"brownian\"\ngaussian = [[1.0]]\n");
    const Result r = cli((d / "bad.toml").string() + " --out " + (d / "out").string());
    CHECK(r.code == 2);
    CHECK(r.output.find("params.epsilon") != std::string::npos);
    CHECK(r.output.find("line 3") != std::string::npos);
    CHECK_FALSE(fs::exists(d / "out"));
}

TEST_CASE("usage errors exit with the configuration code")
{
    CHECK(cli("/nonexistent/config.toml").code == 2);
    CHECK(cli(kConfigs + "brownian_tube.toml --n 0").code == 2);
    CHECK(cli("--help").code == 0);
}

TEST_CASE("cancellation kernel dumps an exact zero")
{
    const fs::path d = scratch("convdet");
    const Result r = cli(kConfigs + "cancellation_convdet.toml --out " + d.string());
    REQUIRE(r.code == 0);
    CHECK(slurp(d / "convdet_symbolic.csv") == "coefficient,exponent\n0,none\n");
    const std::string grid = slurp(d / "convdet.csv");
    CHECK(grid.rfind("t,detstar\n0,0\n", 0) == 0);
    CHECK(r.output.find("symbolic: 0 (exact cancellation)") != std::string::npos);
}

TEST_CASE("MVN det* verdict")
{
    const fs::path d = scratch("detstar");
    const Result r = cli(kConfigs + "mvn_detstar.toml --out " + d.string());
    REQUIRE(r.code == 0);
    CHECK(slurp(d / "report.txt").find("verdict: Holds") != std::string::npos);
    CHECK(fs::exists(d / "detstar.csv"));
}

TEST_CASE("JUMPS verdicts through the command line")
{
    const fs::path a = scratch("jumps_two"), b = scratch("jumps_one");
    REQUIRE(cli(kConfigs + "jumps_two_sided.toml --out " + a.string()).code == 0);
    CHECK(slurp(a / "report.txt").find("verdict: Holds") != std::string::npos);
    REQUIRE(cli(kConfigs + "jumps_one_sided.toml --out " + b.string()).code == 0);
    CHECK(slurp(b / "report.txt").find("verdict: Fails") != std::string::npos);
    CHECK(slurp(b / "jumps.csv").rfind("epsilon,status,min_margin,support_points,witness\n0.5,Fails,", 0) == 0);
}

TEST_CASE("strict mode turns an inconclusive verdict into exit 3")
{
    const fs::path d = scratch("strict");
    write(d / "stable.toml", "experiment = \"check-integrability\"\n[kernel]\nfamily = \"mvn\"\nH = 0.75\n[levy]\n"
                             "family = \"independent\"\n[[levy.marginal]]\ntype = \"tempered\"\nc_pos = 1.0\nc_neg = "
                             "1.0\nalpha = 1.5\n");
    CHECK(cli((d / "stable.toml").string() + " --out " + (d / "a").string()).code == 0);
    CHECK(cli((d / "stable.toml").string() + " --strict --out " + (d / "b").string()).code == 3);
    CHECK(slurp(d / "b" / "report.txt").find("verdict: Unsupported") != std::string::npos);
}

TEST_CASE("unwritable output exits with the runtime code")
{
    const fs::path d = scratch("runtime");
    write(d / "blocker", "");
    const Result r = cli(kConfigs + "mvn_detstar.toml --out " + (d / "blocker" / "sub").string());
    CHECK(r.code == 4);
    CHECK(r.output.find("runtime failure") != std::string::npos);
}

TEST_CASE("simulate and hitting artifacts")
{
    const fs::path s = scratch("sim");
    REQUIRE(cli(kConfigs + "fractional_levy_simulate.toml --out " + s.string()).code == 0);
    const std::string paths = slurp(s / "paths.csv");
    CHECK(paths.rfind("path_id,t,x_1\n0,0,", 0) == 0);
    CHECK(paths.find("\n2,1,") != std::string::npos);

    const fs::path h = scratch("hit");
    REQUIRE(cli(kConfigs + "ou_hitting.toml --n 200 --timing --out " + h.string()).code == 0);
    const std::string res = slurp(h / "results.csv");
    CHECK(res.find("hitting/past_0,") != std::string::npos);
    CHECK(res.find("hitting/past_9,") != std::string::npos);
    CHECK(res.find(",NA\n") == std::string::npos);
}

TEST_CASE("in-process runner matches the binary")
{
    const fs::path a = scratch("inproc_a"), b = scratch("inproc_b");
    csbp::RunOptions opt;
    opt.config_path = kConfigs + "ou_integrability.toml";
    opt.out = a.string();
    std::ostringstream out, err;
    CHECK(csbp::run(opt, out, err) == csbp::kExitOk);
    REQUIRE(cli(kConfigs + "ou_integrability.toml --out " + b.string()).code == 0);
    CHECK(slurp(a / "integrability.csv") == slurp(b / "integrability.csv"));
    CHECK(slurp(a / "integrability.csv").find("\n1,1,0.5,Finite,\n") != std::string::npos);
}
