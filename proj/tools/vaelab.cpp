#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "params.hpp"
#include "vaelab/analysis.hpp"
#include "vaelab/error.hpp"
#include "vaelab/output.hpp"
#include "vaelab/rng.hpp"
#include "vaelab/scm.hpp"
#include "vaelab/serialize.hpp"
#include "vaelab/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using vaelab::cli::ParamSet;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kNotConverged = 2;

/// Shared model and solver parameters.
struct Common {
    double alpha = std::numeric_limits<double>::quiet_NaN();
    double beta = std::numeric_limits<double>::quiet_NaN();
    double lambda = 1.0;
    double rho = 1.0;
    double eta = 1.0;
    vaelab::SolverOptions solver;
    std::string init = "Informed";
    std::string out;
    bool strict = false;
    int threads = 0;
};

void add_solver(ParamSet& ps, Common& c) {
    ps.real("damping", c.solver.damping, "initial damping of the fixed-point iteration");
    ps.real("tol", c.solver.tol, "max-norm residual tolerance");
    ps.integer("max_iter", c.solver.max_iter, "iterations per attempt");
    ps.integer("max_restarts", c.solver.max_restarts, "restarts with halved damping");
    ps.real("ridge_eps", c.solver.ridge_eps, "ridge added to a singular conjugate matrix");
    ps.text("init", c.init, "Collapsed | Informed | Random");
    ps.u64("solver_seed", c.solver.seed, "seed for Random init");
}

void add_model(ParamSet& ps, Common& c, bool alpha_required, bool beta_required) {
    ps.real("alpha", c.alpha, "sample complexity n/d", alpha_required);
    ps.real("beta", c.beta, "KL weight", beta_required);
    ps.real("lambda", c.lambda, "ridge strength");
    ps.real("rho", c.rho, "signal strength");
    ps.real("eta", c.eta, "noise strength");
}

void add_output(CLI::App* app, Common& c) {
    app->add_option("--out", c.out, "output directory");
    app->add_flag("--strict", c.strict, "exit 2 when any point fails to converge");
    app->add_option("--threads", c.threads, "worker threads (default $VAE_REPLICA_THREADS or all cores)");
}

void finish_solver(Common& c) { c.solver.init = vaelab::init_kind_from_string(c.init); }

fs::path prepare_out(const Common& c, const std::string& command, const ParamSet& ps) {
    if (c.out.empty()) throw std::invalid_argument("--out is required for this command");
    const fs::path dir(c.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw vaelab::Error("cannot create output directory " + c.out);
    json cfg = ps.echo();
    cfg["command"] = command;
    vaelab::write_text_file((dir / "config.json").string(), cfg.dump(2) + "\n");
    return dir;
}

int warn_or_fail(const Common& c, int failures, const std::string& what) {
    if (failures == 0) return kOk;
    std::cerr << "warning: " << failures << ' ' << what << " did not converge\n";
    return c.strict ? kNotConverged : kOk;
}

int run_solve(Common& c, const ParamSet&) {
    finish_solver(c);
    const auto r = vaelab::saddle_point_solve(c.alpha, c.beta, c.lambda, c.rho, c.eta, c.solver);
    json j = vaelab::to_json(r);
    try {
        j["metrics"] = vaelab::to_json(vaelab::asymptotic_metrics(r.stats, c.beta, c.rho, c.eta));
    } catch (const vaelab::DomainError&) {
    }
    std::cout << j.dump(2) << '\n';
    return r.converged ? kOk : kNotConverged;
}

int run_sweep(Common& c, const ParamSet& ps, const std::vector<double>& alphas) {
    finish_solver(c);
    const fs::path dir = prepare_out(c, "sweep", ps);
    const auto rows = vaelab::sweep_alpha(alphas, c.beta, c.lambda, c.rho, c.eta, c.solver);
    std::vector<vaelab::CsvRow> csv;
    int failures = 0;
    for (const auto& r : rows) {
        csv.push_back(vaelab::csv_row(r));
        failures += !r.result.converged;
    }
    vaelab::write_text_file((dir / "sweep.csv").string(), vaelab::sweep_csv(csv));
    return warn_or_fail(c, failures, "sweep points");
}

int run_phase(Common& c, const ParamSet& ps, const std::vector<double>& alphas, const std::vector<double>& betas,
              double m_tol, double q_tol) {
    finish_solver(c);
    const fs::path dir = prepare_out(c, "phase", ps);
    const auto cells = vaelab::phase_diagram(alphas, betas, c.lambda, c.rho, c.eta, c.solver, m_tol, q_tol,
                                             vaelab::resolve_threads(c.threads));
    std::vector<vaelab::CsvRow> csv;
    int failures = 0, boundary = 0;
    for (const auto& cell : cells) {
        csv.push_back(vaelab::csv_row(cell));
        failures += !cell.converged;
        boundary += cell.boundary;
    }
    vaelab::write_text_file((dir / "phase.csv").string(), vaelab::sweep_csv(csv));
    if (boundary > 0) std::cerr << "note: " << boundary << " cells have two branches with near-equal free energy\n";
    return warn_or_fail(c, failures, "cells");
}

int run_rd(Common& c, const ParamSet& ps, const std::vector<double>& betas) {
    finish_solver(c);
    const fs::path dir = prepare_out(c, "rd", ps);
    const auto curve = vaelab::rd_curve(betas, c.alpha, c.lambda, c.rho, c.eta, c.solver,
                                        vaelab::resolve_threads(c.threads));
    std::vector<vaelab::CsvRow> csv;
    int failures = 0;
    if (std::isinf(c.alpha)) {
        for (double b : betas) csv.push_back(vaelab::csv_row_large_alpha(b, c.lambda, c.rho, c.eta));
    } else {
        for (const auto& r : curve.rows) {
            csv.push_back(vaelab::csv_row(r));
            failures += !r.result.converged;
        }
    }
    vaelab::write_text_file((dir / "rd.csv").string(), vaelab::sweep_csv(csv));
    std::vector<vaelab::SvgSeries> series;
    if (!std::isinf(c.alpha)) series.push_back({"alpha = " + vaelab::format_number(c.alpha), curve.points});
    series.push_back({"alpha = inf", curve.reference});
    vaelab::write_text_file((dir / "rd.svg").string(), vaelab::rd_svg(series, "rate-distortion"));
    return warn_or_fail(c, failures, "RD points");
}

int run_optbeta(Common& c, const ParamSet& ps, double lo, double hi, int grid) {
    finish_solver(c);
    const fs::path dir = prepare_out(c, "optbeta", ps);
    const auto r = vaelab::optimal_beta(c.alpha, c.lambda, c.rho, c.eta, lo, hi, c.solver, grid);
    json j = {{"alpha", vaelab::json_number(c.alpha)},   {"lambda", vaelab::json_number(c.lambda)},
              {"rho", vaelab::json_number(c.rho)},       {"eta", vaelab::json_number(c.eta)},
              {"beta_star", vaelab::json_number(r.beta_star)}, {"eps_g_star", vaelab::json_number(r.eps_g_star)},
              {"flat", r.flat},                          {"converged", r.converged}};
    vaelab::write_text_file((dir / "optbeta.json").string(), j.dump(2) + "\n");
    std::cout << j.dump(2) << '\n';
    if (r.flat) std::cerr << "warning: eps_g is flat over the beta range\n";
    return warn_or_fail(c, r.converged ? 0 : 1, "solver calls");
}

struct SimArgs {
    int d = 1000;
    int k = 1;
    int k_star = 1;
    std::uint64_t seed = 1;
    std::string optimizer = "linesearch";
    bool dump_dataset = false;
    bool trace = false;
};

vaelab::Optimizer optimizer_from(const std::string& s) {
    if (s == "linesearch" || s == "gd") return vaelab::Optimizer::LineSearch;
    if (s == "adam") return vaelab::Optimizer::Adam;
    throw std::invalid_argument("unknown optimizer: " + s);
}

int run_simulate(Common& c, const ParamSet& ps, SimArgs& s, vaelab::TrainConfig& tc) {
    const fs::path dir = prepare_out(c, "simulate", ps);
    vaelab::GenerativeConfig g{c.rho, c.eta, s.d, s.k_star, c.alpha};
    const auto data = vaelab::generate_dataset(g, s.seed);
    vaelab::VAEConfig vc;
    vc.k = s.k;
    vc.beta = c.beta;
    vc.lambda = c.lambda;
    tc.optimizer = optimizer_from(s.optimizer);
    tc.seed = s.seed;
    if (s.trace) tc.trace_path = (dir / "trace.csv").string();
    if (s.dump_dataset) vaelab::write_dataset_binary(data, (dir / "dataset.bin").string());
    const auto res = vaelab::train(data, vc, tc);
    const auto heldout = vaelab::generate_samples(g, data.W_star, vaelab::heldout_seed(s.seed));
    json j = {{"train", vaelab::to_json(vaelab::evaluate_metrics(res.params, data, vc))},
              {"heldout", vaelab::to_json(vaelab::evaluate_metrics(res.params, heldout, vc))},
              {"objective", vaelab::json_number(res.objective)},
              {"grad_norm", vaelab::json_number(res.grad_norm)},
              {"steps", res.steps},
              {"converged", res.converged}};
    vaelab::write_text_file((dir / "metrics.json").string(), j.dump(2) + "\n");
    std::cout << j.dump(2) << '\n';
    return warn_or_fail(c, res.converged ? 0 : 1, "training runs");
}

int run_compare(Common& c, const ParamSet& ps, vaelab::CompareOptions& co, const std::vector<double>& betas,
                int nseeds, vaelab::TrainConfig& tc, const std::string& optimizer) {
    finish_solver(c);
    const fs::path dir = prepare_out(c, "compare", ps);
    if (co.seeds.empty())
        for (int i = 1; i <= nseeds; ++i) co.seeds.push_back(static_cast<std::uint64_t>(i));
    tc.optimizer = optimizer_from(optimizer);
    co.train = tc;
    co.solver = c.solver;
    const std::vector<double> bs = betas.empty() ? std::vector<double>{c.beta} : betas;
    const auto reports = vaelab::compare_replica_vs_mc(c.alpha, bs, c.lambda, c.rho, c.eta, co);
    json all = json::array();
    std::ostringstream csv;
    csv << "alpha,beta,metric,mean,se,predicted,z\n";
    int failures = 0;
    for (const auto& r : reports) {
        all.push_back(vaelab::to_json(r));
        const std::pair<const char*, const vaelab::MetricSummary*> rows[] = {
            {"eps_g", &r.eps_g}, {"m", &r.m},       {"Q", &r.Q},       {"E", &r.E},
            {"R", &r.R},         {"b", &r.b},       {"rate", &r.rate}, {"distortion", &r.distortion}};
        for (const auto& [name, ms] : rows)
            csv << vaelab::format_number(r.point.alpha) << ',' << vaelab::format_number(r.point.beta) << ',' << name
                << ',' << vaelab::format_number(ms->mean) << ',' << vaelab::format_number(ms->se) << ','
                << vaelab::format_number(ms->predicted) << ',' << vaelab::format_number(ms->z) << '\n';
        failures += !r.replica.converged;
        for (const auto& run : r.runs) failures += !(run.ok && run.training.converged);
        std::cout << "alpha=" << r.point.alpha << " beta=" << r.point.beta << " z(eps_g)=" << r.eps_g.z
                  << " z(m)=" << r.m.z << " z(Q)=" << r.Q.z << " z(rate)=" << r.rate.z << '\n';
    }
    vaelab::write_text_file((dir / "compare.json").string(), all.dump(2) + "\n");
    vaelab::write_text_file((dir / "compare.csv").string(), csv.str());
    return warn_or_fail(c, failures, "solver/training runs");
}

int run_spectrum(Common& c, const ParamSet& ps, SimArgs& s, double rate) {
    const fs::path dir = prepare_out(c, "spectrum", ps);
    vaelab::GenerativeConfig g{c.rho, c.eta, s.d, s.k_star, c.alpha};
    const auto data = vaelab::generate_dataset(g, s.seed);
    const auto ev = vaelab::covariance_spectrum(data);
    vaelab::write_spectrum_csv(ev, (dir / "spectrum.csv").string());
    const double edge = vaelab::marchenko_pastur_upper_edge(c.eta, c.alpha);
    int above = 0;
    for (double v : ev) above += v > 1.05 * edge;
    const auto est = vaelab::estimate_noise(data, rate);
    json j = {{"bulk_edge", edge},
              {"eigenvalues_above_1.05_edge", above},
              {"largest_eigenvalue", ev.front()},
              {"eta_hat", est.eta_hat},
              {"bulk_entry_variance", est.bulk_entry_variance},
              {"leading_components", est.leading_components}};
    if (s.dump_dataset) vaelab::write_dataset_binary(data, (dir / "dataset.bin").string());
    vaelab::write_text_file((dir / "spectrum.json").string(), j.dump(2) + "\n");
    std::cout << j.dump(2) << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Replica predictions and finite-size simulations for linear beta-VAEs on spiked-covariance data"};
    app.require_subcommand(1);

    Common c;
    vaelab::TrainConfig tc;
    SimArgs sim;
    std::vector<double> alphas, betas;
    double m_tol = 1e-6, q_tol = 1e-6, beta_lo = 0.01, beta_hi = 3.0, cum_rate = 0.8;
    int grid = 41, nseeds = 5;
    vaelab::CompareOptions co;
    co.seeds.clear();

    auto* solve = app.add_subcommand("solve", "solve the saddle-point equations at one point; JSON to stdout");
    ParamSet ps_solve(solve);
    add_model(ps_solve, c, true, true);
    add_solver(ps_solve, c);

    auto* sweep = app.add_subcommand("sweep", "learning curve over an alpha grid");
    ParamSet ps_sweep(sweep);
    add_model(ps_sweep, c, false, true);
    ps_sweep.grid("alphas", alphas, "alpha grid", true);
    add_solver(ps_sweep, c);
    add_output(sweep, c);

    auto* phase = app.add_subcommand("phase", "phase diagram over (alpha, beta)");
    ParamSet ps_phase(phase);
    alphas = vaelab::cli::parse_grid("logspace:0.1:100:60");
    betas = vaelab::cli::parse_grid("linspace:0:3:60");
    add_model(ps_phase, c, false, false);
    ps_phase.grid("alphas", alphas, "alpha grid");
    ps_phase.grid("betas", betas, "beta grid");
    ps_phase.real("m_tol", m_tol, "|m| threshold of the Learning phase");
    ps_phase.real("q_tol", q_tol, "Q threshold of the Overfitting phase");
    add_solver(ps_phase, c);
    add_output(phase, c);

    auto* rd = app.add_subcommand("rd", "rate-distortion curve over beta (alpha may be inf)");
    ParamSet ps_rd(rd);
    add_model(ps_rd, c, false, false);
    ps_rd.grid("rd_betas", betas, "beta grid (> 0)");
    add_solver(ps_rd, c);
    add_output(rd, c);

    auto* optbeta = app.add_subcommand("optbeta", "beta minimising eps_g at fixed alpha (alpha may be inf)");
    ParamSet ps_opt(optbeta);
    add_model(ps_opt, c, true, false);
    ps_opt.real("beta_min", beta_lo, "lower end of the beta range");
    ps_opt.real("beta_max", beta_hi, "upper end of the beta range");
    ps_opt.integer("grid", grid, "scan points before refinement");
    add_solver(ps_opt, c);
    add_output(optbeta, c);

    auto* simulate = app.add_subcommand("simulate", "train one finite-d linear VAE and report its metrics");
    ParamSet ps_sim(simulate);
    add_model(ps_sim, c, true, true);
    ps_sim.integer("d", sim.d, "dimension");
    ps_sim.integer("k", sim.k, "latent dimension");
    ps_sim.integer("k_star", sim.k_star, "signal rank");
    ps_sim.u64("seed", sim.seed, "data and init seed");
    ps_sim.text("optimizer", sim.optimizer, "linesearch | adam");
    ps_sim.integer("max_steps", tc.max_steps, "step budget");
    ps_sim.real("grad_tol_per_dim", tc.grad_tol_per_dim, "stop at ||grad|| <= this * d");
    ps_sim.real("adam_lr", tc.adam_lr, "Adam learning rate");
    ps_sim.flag("dump_dataset", sim.dump_dataset, "write dataset.bin");
    ps_sim.flag("trace", sim.trace, "write trace.csv");
    add_output(simulate, c);

    auto* compare = app.add_subcommand("compare", "replica prediction against trained VAEs over several seeds");
    ParamSet ps_cmp(compare);
    std::vector<double> cmp_betas;
    add_model(ps_cmp, c, true, false);
    ps_cmp.grid("betas", cmp_betas, "several betas sharing the datasets (overrides --beta)");
    ps_cmp.integer("d", co.d, "dimension");
    ps_cmp.integer("seeds", nseeds, "number of seeds 1..N");
    ps_cmp.u64_list("seed_list", co.seeds, "explicit seeds (overrides --seeds)");
    ps_cmp.text("optimizer", sim.optimizer, "linesearch | adam");
    ps_cmp.integer("max_steps", tc.max_steps, "step budget");
    ps_cmp.real("grad_tol_per_dim", tc.grad_tol_per_dim, "stop at ||grad|| <= this * d");
    add_solver(ps_cmp, c);
    add_output(compare, c);

    auto* spectrum = app.add_subcommand("spectrum", "covariance spectrum and bulk noise estimate of SCM data");
    ParamSet ps_spec(spectrum);
    add_model(ps_spec, c, false, false);
    ps_spec.integer("d", sim.d, "dimension");
    ps_spec.integer("k_star", sim.k_star, "signal rank");
    ps_spec.u64("seed", sim.seed, "seed");
    ps_spec.real("cumulative_rate", cum_rate, "explained-variance split of the noise estimator");
    ps_spec.flag("dump_dataset", sim.dump_dataset, "write dataset.bin");
    add_output(spectrum, c);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (solve->parsed()) {
            ps_solve.resolve();
            return run_solve(c, ps_solve);
        }
        if (sweep->parsed()) {
            ps_sweep.resolve();
            return run_sweep(c, ps_sweep, alphas);
        }
        if (phase->parsed()) {
            if (std::isnan(c.beta)) c.beta = 0.0;  // unused by the grid
            ps_phase.resolve();
            return run_phase(c, ps_phase, alphas, betas, m_tol, q_tol);
        }
        if (rd->parsed()) {
            c.alpha = std::numeric_limits<double>::infinity();
            betas = vaelab::cli::parse_grid("linspace:0.02:3:150");
            ps_rd.resolve();
            return run_rd(c, ps_rd, betas);
        }
        if (optbeta->parsed()) {
            ps_opt.resolve();
            return run_optbeta(c, ps_opt, beta_lo, beta_hi, grid);
        }
        if (simulate->parsed()) {
            ps_sim.resolve();
            return run_simulate(c, ps_sim, sim, tc);
        }
        if (compare->parsed()) {
            ps_cmp.resolve();
            if (cmp_betas.empty() && std::isnan(c.beta)) throw std::invalid_argument("compare needs --beta or --betas");
            return run_compare(c, ps_cmp, co, cmp_betas, nseeds, tc, sim.optimizer);
        }
        if (spectrum->parsed()) {
            c.alpha = 4.0;
            ps_spec.resolve();
            return run_spectrum(c, ps_spec, sim, cum_rate);
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n" << app.help();
        return kUsage;
    } catch (const vaelab::InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const vaelab::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}
