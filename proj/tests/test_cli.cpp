#include "cli.hpp"
#include "config.hpp"
#include "plot.hpp"

#include "xxdeph/errors.hpp"

#include <doctest.h>
#include <json.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace xxdeph;
using namespace xxdeph::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// Scratch directory removed on scope exit.
struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("xxdeph_cli_" + std::to_string(::getpid()) + "_" +
                                            std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    static int& counter() {
        static int n = 0;
        return n;
    }
};

struct Run {
    int code = -1;
    std::string out, err;
};

// Runs the command-line binary inside dir; stdout/stderr are captured.
Run run_bin(const TempDir& dir, const std::string& args) {
    const char* bin = std::getenv("XXDEPH_BIN");
    REQUIRE_MESSAGE(bin != nullptr, "XXDEPH_BIN must point at the xxdeph binary");
    const std::string cmd = "cd '" + dir.path.string() + "' && '" + bin + "' " + args +
                            " > stdout.txt 2> stderr.txt";
    const int st = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    r.out = slurp(dir.path / "stdout.txt");
    r.err = slurp(dir.path / "stderr.txt");
    return r;
}

nlohmann::json manifest(const TempDir& d, const std::string& prefix) {
    return nlohmann::json::parse(slurp(d.path / (prefix + "_manifest.json")));
}

} // namespace

TEST_CASE("compare reports agreement below 1e-6 and exits 0") {
    TempDir d;
    auto r = run_bin(d, "compare --L 64 --gamma 0.5 --t 1 --output c");
    CHECK(r.code == 0);
    CHECK(r.out.find("max |ED - transfer|") != std::string::npos);
    auto m = manifest(d, "c");
    CHECK(m["details"]["max_abs_diff"].get<double>() <= 1e-6);
    CHECK(m["status"] == 0);
    CHECK(fs::exists(d.path / "c_compare.csv"));
}

TEST_CASE("configuration errors exit 2 before any output") {
    TempDir d;
    for (const std::string args :
         {"density --L 1 --output a", "density --gamma -1 --output a",
          "density --method ed --L 5000 --output a", "density --times lin:0:1 --output a",
          "density --initial custom-csv --output a", "density --method transfer-talbot --threads -2 --output a",
          "beta --L 64 --initial delta --times 1,2 --output a", "resolvent-dump --s 1,2,3 --output a",
          "density --preset nosuch --output a", "density --talbot-M 1 --output a", "nosuchcommand"}) {
        auto r = run_bin(d, args);
        INFO(args);
        CHECK(r.code == 2);
        CHECK_FALSE(fs::exists(d.path / "a_manifest.json"));
    }
    auto r = run_bin(d, "density --L 0");
    CHECK(r.err.find("L must be >= 2") != std::string::npos);
}

TEST_CASE("numerical failures exit 3") {
    // the untwisted closure is inexact for L = 16, so the 1e-6 comparison threshold fails
    TempDir d;
    auto r = run_bin(d, "compare --L 16 --gamma 0.5 --t 1 --boundary untwisted --output c");
    CHECK(r.code == 3);
    auto m = manifest(d, "c");
    CHECK(m["status"] == 3);
    CHECK(m["details"]["max_abs_diff"].get<double>() > 1e-6);
}

TEST_CASE("outputs are byte-identical across runs and thread counts") {
    TempDir a, b, c;
    const std::string args = " --L 300 --gamma 0.05 --initial domain-wall --times 1,4,9 --output run";
    REQUIRE(run_bin(a, "density --threads 1" + args).code == 0);
    REQUIRE(run_bin(b, "density --threads 1" + args).code == 0);
    REQUIRE(run_bin(c, "density --threads 4" + args).code == 0);
    const auto ca = slurp(a.path / "run_density.csv");
    CHECK(ca.rfind("t,x,value_re,value_im,method\n", 0) == 0);
    CHECK(ca == slurp(b.path / "run_density.csv"));
    CHECK(ca == slurp(c.path / "run_density.csv"));
    CHECK(manifest(a, "run")["content_hash"] == manifest(b, "run")["content_hash"]);

    REQUIRE(run_bin(a, "beta --threads 1 --L 120 --gamma 0.05 --initial domain-wall --times logd:0.1:10:8 --output bt").code == 0);
    REQUIRE(run_bin(c, "beta --threads 3 --L 120 --gamma 0.05 --initial domain-wall --times logd:0.1:10:8 --output bt").code == 0);
    CHECK(slurp(a.path / "bt_beta.csv") == slurp(c.path / "bt_beta.csv"));
}

TEST_CASE("manifest records config, artifacts and hashes") {
    TempDir d;
    REQUIRE(run_bin(d, "offdiag --L 40 --gamma 0.5 --x0 20 --method ed --times lin:0.5:4:8 --output o").code == 0);
    auto m = manifest(d, "o");
    CHECK(m["schema"] == "xxdeph-run-manifest");
    CHECK(m["schema_version"] == 1);
    CHECK(m["config"]["L"] == 40);
    CHECK(m["config"]["method"] == "ed");
    CHECK(m["wall_time_s"].get<double>() >= 0.0);
    REQUIRE(m["outputs"].size() == 1);
    const std::string path = m["outputs"][0]["path"];
    CHECK(m["outputs"][0]["blob"] == git_blob_hash(slurp(d.path / path)));
    CHECK(m["content_hash"].get<std::string>().size() == 40);
    // well-known git blob hash of the empty file
    CHECK(git_blob_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
    CHECK(git_blob_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_CASE("resolvent dump schema") {
    TempDir d;
    auto r = run_bin(d, "resolvent-dump --L 8 --gamma 0.3 --q 0.7,3.14159,6.283185307179586 --s \"0.5,1;2\" --output r");
    REQUIRE(r.code == 0);
    std::istringstream csv(slurp(d.path / "r_resolvent.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "s_re,s_im,q,g00_re,g00_im");
    int rows = 0;
    while (std::getline(csv, line)) ++rows;
    CHECK(rows == 6);
    std::istringstream col(slurp(d.path / "r_resolvent_column.csv"));
    std::getline(col, line);
    CHECK(line == "s_re,s_im,q,l,re,im,dense_re,dense_im");
    // closed form and dense solve agree in every row
    while (std::getline(col, line)) {
        std::vector<double> v;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
        REQUIRE(v.size() == 8);
        CHECK(std::abs(v[4] - v[6]) + std::abs(v[5] - v[7]) < 1e-12);
    }
}

TEST_CASE("plot scripts") {
    TempDir d;
    REQUIRE(run_bin(d, "beta --L 80 --gamma 0.05 --initial domain-wall --times logd:0.1:10:6 --plot fig3b --output b").code == 0);
    const auto gp = slurp(d.path / "b_fig3b.gp");
    CHECK(gp.find("set logscale x") != std::string::npos);
    CHECK(gp.find("1 dt 2") != std::string::npos);
    CHECK(gp.find("0.5 dt 3") != std::string::npos);

    // schema mismatch: error naming expected and found columns, and no script left behind
    auto r = run_bin(d, "beta --L 80 --gamma 0.05 --initial domain-wall --times 1,2 --plot fig4 --output e");
    CHECK(r.code == 2);
    CHECK(r.err.find("expected columns t,l,max_abs") != std::string::npos);
    CHECK(r.err.find("found t,M,beta") != std::string::npos);
    CHECK_FALSE(fs::exists(d.path / "e_fig4.gp"));
    CHECK_FALSE(fs::exists(d.path / "e_fig4.gp.tmp"));

    // fig4 from an ED off-diagonal run carries both slope guides
    REQUIRE(run_bin(d, "offdiag --L 40 --gamma 0.5 --x0 20 --method ed --times lin:0.5:4:8 --plot fig4 --output o").code == 0);
    const auto g4 = slurp(d.path / "o_fig4.gp");
    CHECK(g4.find("x**-1.5") != std::string::npos);
    CHECK(g4.find("x**-2.5") != std::string::npos);
    CHECK_THROWS_AS(parse_figure("fig9"), ConfigError);
}

TEST_CASE("presets and key-value files") {
    auto f2 = build_config("density", preset_values("fig2"));
    CHECK(f2.params.L == 100000);
    CHECK(f2.params.gamma == 0.01);
    CHECK(f2.initial == InitialPreset::domain_wall);
    const auto t2 = f2.times.values(f2.params.gamma);
    REQUIRE(t2.size() == 4);
    const double gt[] = {0.05, 0.2, 1, 5};
    for (int i = 0; i < 4; ++i) CHECK(t2[i] * 0.01 == doctest::Approx(gt[i]));
    auto f3 = build_config("beta", preset_values("fig3"));
    const auto t3 = f3.times.values(f3.params.gamma);
    CHECK(t3.front() * 0.01 == doctest::Approx(1e-3));
    CHECK(t3.back() * 0.01 == doctest::Approx(30));
    auto f4 = build_config("offdiag", preset_values("fig4"));
    CHECK(f4.method == Method::ed);
    CHECK(f4.params.L == 200);
    CHECK(f4.fit_window == "3:20");
    CHECK_THROWS_AS(preset_values("fig1"), ConfigError);

    std::istringstream in("# comment\nL = 32\n gamma=0.25  # trailing\n\ninitial = domain-wall\n");
    auto kv = parse_key_values(in);
    CHECK(kv.at("L") == "32");
    CHECK(kv.at("gamma") == "0.25");
    auto c = build_config("density", kv);
    CHECK(c.params.L == 32);
    std::istringstream bad("L 32\n");
    CHECK_THROWS_AS(parse_key_values(bad), ConfigError);
    CHECK_THROWS_AS(build_config("density", {{"nosuchkey", "1"}}), ConfigError);

    // a config file on the command line, with an override
    TempDir d;
    {
        std::ofstream f(d.path / "run.cfg");
        f << "L = 48\ngamma = 0.2\ninitial = domain-wall\ntimes = 1\noutput = k\n";
    }
    REQUIRE(run_bin(d, "density --config run.cfg --L 50").code == 0);
    CHECK(manifest(d, "k")["config"]["L"] == 50);
}

TEST_CASE("help documents schemas and exit codes") {
    TempDir d;
    auto r = run_bin(d, "--help");
    CHECK(r.code == 0);
    CHECK(r.out.find("t,x,value_re,value_im,method") != std::string::npos);
    CHECK(r.out.find("s_re,s_im,q,g00_re,g00_im") != std::string::npos);
    CHECK(r.out.find("Exit codes: 0 success, 2 configuration error, 3 numerical failure") != std::string::npos);
}
