#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "vaelab/replica.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run run(const std::string& args) {
    const std::string cmd = std::string(VAELAB_CLI) + " " + args + " 2>/dev/null";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("vaelab_cli_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("solve prints JSON and reports convergence in the exit code") {
    const Run r = run("solve --alpha 1e6 --beta 1 --lambda 1 --rho 1 --eta 1");
    CHECK(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j.at("stats").at("m").get<double>() == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(j.at("converged") == true);

    const Run c = run("solve --alpha 100 --beta 3 --lambda 1");
    CHECK(c.code == 0);
    CHECK(json::parse(c.out).at("branch") == "Collapsed");

    CHECK(run("solve --alpha 4 --beta 1 --max-iter 3 --max-restarts 0").code == 2);
}

TEST_CASE("usage errors exit with 1 and help with 0") {
    CHECK(run("solve --beta 1").code == 1);
    CHECK(run("solve --alpha abc --beta 1").code == 1);
    CHECK(run("solve --alpha 1 --beta 1 --init sideways").code == 1);
    CHECK(run("nonsense").code == 1);
    CHECK(run("").code == 1);
    CHECK(run("--help").code == 0);
    CHECK(run("solve --config /nonexistent/cfg.json --alpha 1 --beta 1").code == 1);
    CHECK(run("rd --alpha inf --out /proc/vaelab_forbidden").code == 1);
}

TEST_CASE("config file values are overridden by flags") {
    const fs::path dir = scratch("cfg");
    fs::create_directories(dir);
    std::ofstream(dir / "in.json") << R"({"alpha": 4, "beta": 3, "lambda": 1})";
    const Run a = run("solve --config " + (dir / "in.json").string());
    CHECK(a.code == 0);
    CHECK(json::parse(a.out).at("branch") == "Collapsed");
    const Run b = run("solve --config " + (dir / "in.json").string() + " --beta 1");
    CHECK(json::parse(b.out).at("branch") == "Learning");
    fs::remove_all(dir);
}

TEST_CASE("analytic rd output equals the Gaussian source function") {
    const fs::path dir = scratch("rd");
    REQUIRE(run("rd --alpha inf --rho 1 --eta 1 --out " + dir.string()).code == 0);
    std::ifstream is(dir / "rd.csv");
    std::string line;
    std::getline(is, line);
    int rows = 0;
    while (std::getline(is, line)) {
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        REQUIRE(cells.size() == 13);
        CHECK(cells[0] == "inf");
        const double rate = std::stod(cells[9]), dist = std::stod(cells[10]);
        CHECK(std::abs(rate - vaelab::gaussian_source_rd(dist, 1.0, 1.0)) < 1e-12);
        ++rows;
    }
    CHECK(rows == 150);
    CHECK(fs::exists(dir / "rd.svg"));
    CHECK(json::parse(slurp(dir / "config.json")).at("command") == "rd");
    fs::remove_all(dir);
}

TEST_CASE("rerunning from the echoed config reproduces the CSV byte for byte") {
    const fs::path a = scratch("rt_a"), b = scratch("rt_b");
    REQUIRE(run("phase --alphas logspace:0.2:20:5 --betas linspace:0:3:4 --threads 1 --out " + a.string()).code == 0);
    REQUIRE(run("phase --config " + (a / "config.json").string() + " --threads 3 --out " + b.string()).code == 0);
    const std::string csv = slurp(a / "phase.csv");
    CHECK(csv.size() > 100);
    CHECK(csv == slurp(b / "phase.csv"));
    CHECK(csv.find(",,") == std::string::npos);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("strict mode turns non-convergence into exit 2") {
    const fs::path dir = scratch("strict");
    const std::string args = "sweep --alphas 2,4 --beta 1 --max-iter 2 --max-restarts 0 --out " + dir.string();
    CHECK(run(args).code == 0);
    CHECK(run(args + " --strict").code == 2);
    fs::remove_all(dir);
}

TEST_CASE("optbeta, spectrum, simulate and compare write their artifacts") {
    const fs::path dir = scratch("misc");
    const Run o = run("optbeta --alpha inf --out " + (dir / "o").string());
    CHECK(o.code == 0);
    CHECK(json::parse(o.out).at("beta_star").get<double>() == doctest::Approx(1.0).epsilon(1e-4));

    const Run s = run("spectrum --rho 5 --eta 1 --alpha 4 --d 300 --seed 2 --out " + (dir / "s").string());
    CHECK(s.code == 0);
    CHECK(json::parse(s.out).at("eigenvalues_above_1.05_edge") == 1);
    CHECK(fs::exists(dir / "s" / "spectrum.csv"));

    const Run m = run("simulate --alpha 4 --beta 1 --d 100 --seed 3 --trace --dump-dataset --out " + (dir / "m").string());
    CHECK(m.code == 0);
    CHECK(json::parse(m.out).at("converged") == true);
    CHECK(fs::file_size(dir / "m" / "dataset.bin") == 16 + 8 * 400 * 100);
    CHECK(fs::exists(dir / "m" / "trace.csv"));

    const Run c = run("compare --alpha 4 --beta 1 --d 150 --seeds 2 --out " + (dir / "c").string());
    CHECK(c.code == 0);
    const json cj = json::parse(slurp(dir / "c" / "compare.json"));
    REQUIRE(cj.size() == 1);
    CHECK(cj[0].at("runs").size() == 2);
    CHECK(fs::exists(dir / "c" / "compare.csv"));
    fs::remove_all(dir);
}
