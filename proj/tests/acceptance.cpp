// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: acceptance [--only N]...   (no flag runs all nine)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "vaelab/analysis.hpp"
#include "vaelab/linear_vae.hpp"
#include "vaelab/replica.hpp"
#include "vaelab/scm.hpp"

using namespace vaelab;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Worst stationarity over every converged saddle point met in this process.
double g_worst_stationarity = 0.0;
int g_saddle_points = 0;

void note(const FixedPointResult& r) {
    if (!r.converged) return;
    ++g_saddle_points;
    g_worst_stationarity = std::max(g_worst_stationarity, std::isnan(r.stationarity) ? kInf : r.stationarity);
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
    return v;
}

std::vector<double> logspace(double a, double b, int n) {
    std::vector<double> v = linspace(std::log10(a), std::log10(b), n);
    for (double& x : v) x = std::pow(10.0, x);
    return v;
}

// 1: large-alpha closed forms
bool criterion_1() {
    constexpr double tol = 1e-3, max_seconds = 1.0;
    bool ok = true;
    double worst = 0.0, slowest = 0.0;
    for (double lambda : {0.0, 1.0})
        for (double beta : {0.5, 1.0, 1.5, 1.99}) {
            const auto t0 = Clock::now();
            const FixedPointResult r = saddle_point_solve(1e6, beta, lambda, 1.0, 1.0, SolverOptions{});
            const double secs = seconds_since(t0);
            note(r);
            const AsymptoticMetrics a = asymptotic_metrics(r.stats, beta, 1.0, 1.0);
            const double sq = std::sqrt(2.0 - beta);
            const double err = std::max({std::abs(r.stats.m - sq), std::abs(r.stats.Q - (2.0 - beta)),
                                         std::abs(a.eps_g - (1.0 - sq * (2.0 - sq))),
                                         std::abs(a.rate - 0.5 * std::log(2.0 / beta))});
            worst = std::max(worst, err);
            slowest = std::max(slowest, secs);
            if (!r.converged || !(err < tol) || !(secs < max_seconds)) {
                std::printf("  lambda=%g beta=%g converged=%d err=%.3g time=%.3fs\n", lambda, beta, r.converged,
                            err, secs);
                ok = false;
            }
        }
    std::printf("[%s] 1 large-alpha closed forms: worst error %.3g (tol %g), slowest point %.3fs (limit %gs)\n",
                ok ? "PASS" : "FAIL", worst, tol, slowest, max_seconds);
    return ok;
}

// 2: collapse for beta >= rho + eta at every alpha (lambda = 1)
bool criterion_2() {
    constexpr double m_tol = 1e-6, rate_tol = 1e-8, max_seconds = 10.0;
    const auto t0 = Clock::now();
    bool ok = true;
    int converged = 0, attempts = 0;
    double worst_m = 0.0, worst_rate = 0.0;
    for (double beta : {2.0, 2.5, 3.0})
        for (double alpha : {1.0, 10.0, 100.0, 1e4}) {
            const ModelPoint p{alpha, beta, 1.0, 1.0, 1.0};
            std::vector<SolverOptions> starts;
            for (InitKind k : {InitKind::Informed, InitKind::Collapsed}) {
                SolverOptions o;
                o.init = k;
                starts.push_back(o);
            }
            for (std::uint64_t seed : {1, 2, 3}) {
                SolverOptions o;
                o.init = InitKind::Random;
                o.seed = seed;
                starts.push_back(o);
            }
            SolverOptions sub;
            SummaryStatistics s0 = initial_statistics(p, InitKind::Informed, 0);
            s0.m = s0.b = 0.0;
            sub.start = s0;
            starts.push_back(sub);
            int here = 0;
            for (const auto& o : starts) {
                ++attempts;
                const FixedPointResult r = saddle_point_solve(p, o);
                if (!r.converged) continue;
                note(r);
                ++converged;
                ++here;
                const double rate = asymptotic_metrics(r.stats, beta, 1.0, 1.0).rate;
                worst_m = std::max(worst_m, std::abs(r.stats.m));
                worst_rate = std::max(worst_rate, rate);
                if (!(std::abs(r.stats.m) < m_tol) || !(rate < rate_tol)) {
                    std::printf("  alpha=%g beta=%g start=%s: m=%.3g rate=%.3g\n", alpha, beta,
                                o.start ? "m=0" : to_string(o.init), r.stats.m, rate);
                    ok = false;
                }
            }
            if (here == 0) {
                std::printf("  alpha=%g beta=%g: no start converged\n", alpha, beta);
                ok = false;
            }
        }
    const double secs = seconds_since(t0);
    ok = ok && secs < max_seconds;
    std::printf("[%s] 2 collapse for beta >= rho+eta: %d/%d starts converged, max |m| %.3g, max rate %.3g, %.2fs "
                "(limit %gs)\n",
                ok ? "PASS" : "FAIL", converged, attempts, worst_m, worst_rate, secs, max_seconds);
    return ok;
}

// 3: rate-distortion curves
bool criterion_3() {
    constexpr double exact_tol = 1e-12, floor_tol = 1e-6, mono_tol = 1e-6;
    bool ok = true;
    const std::vector<double> betas = linspace(0.02, 2.5, 125);
    const RDCurve exact = rd_curve(betas, kInf, 1.0, 1.0, 1.0, SolverOptions{});
    double worst_exact = 0.0;
    for (const auto& p : exact.points) {
        const double ref = p.distortion < 1.0 ? 0.5 * std::log(2.0 / (2.0 * p.distortion)) : 0.0;
        worst_exact = std::max(worst_exact, std::abs(p.rate - ref));
    }
    ok = ok && worst_exact < exact_tol;

    const std::vector<double> alphas{2.0, 4.0, 8.0};
    const std::vector<double> matched = linspace(0.45, 0.95, 10);
    std::vector<std::vector<double>> gap(alphas.size());
    double worst_below = 0.0;
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        const RDCurve c = rd_curve(betas, alphas[i], 1.0, 1.0, 1.0, SolverOptions{});
        for (const auto& row : c.rows) note(row.result);
        for (const auto& p : c.points) {
            if (!p.converged) {
                std::printf("  alpha=%g beta=%g did not converge\n", alphas[i], p.beta);
                ok = false;
                continue;
            }
            worst_below = std::max(worst_below, gaussian_source_rd(p.distortion, 1.0, 1.0) - p.rate);
        }
        for (double D : matched) {
            const double r = interpolate_rate(c.points, D);
            if (std::isnan(r)) {
                std::printf("  alpha=%g does not reach D=%g\n", alphas[i], D);
                ok = false;
            }
            gap[i].push_back(r - gaussian_source_rd(D, 1.0, 1.0));
        }
    }
    ok = ok && worst_below <= floor_tol;
    double worst_increase = -kInf;
    for (std::size_t j = 0; j < matched.size(); ++j)
        for (std::size_t i = 0; i + 1 < alphas.size(); ++i) {
            const double inc = gap[i + 1][j] - gap[i][j];
            worst_increase = std::max(worst_increase, inc);
            if (!(inc <= mono_tol)) {
                std::printf("  D=%g: gap %.6g at alpha=%g -> %.6g at alpha=%g\n", matched[j], gap[i][j], alphas[i],
                            gap[i + 1][j], alphas[i + 1]);
                ok = false;
            }
        }
    std::printf("[%s] 3 rate-distortion: analytic error %.3g (tol %g), max shortfall below R(D) %.3g (tol %g), "
                "max gap increase with alpha %.3g (tol %g)\n",
                ok ? "PASS" : "FAIL", worst_exact, exact_tol, worst_below, floor_tol, worst_increase, mono_tol);
    return ok;
}

// 4: replica against Monte Carlo training at d = 2000, 5 seeds
bool criterion_4() {
    constexpr double z_max = 3.0;
    bool ok = true;
    int cells = 0, passed = 0;
    const auto t0 = Clock::now();
    CompareOptions co;
    co.d = 2000;
    co.seeds = {1, 2, 3, 4, 5};
    for (double alpha : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        const auto reports = compare_replica_vs_mc(alpha, {0.5, 1.0, 1.5}, 1.0, 1.0, 1.0, co);
        for (const auto& r : reports) {
            note(r.replica);
            ++cells;
            bool runs_ok = r.replica.converged;
            for (const auto& run : r.runs) runs_ok = runs_ok && run.ok;
            const bool cell_ok = runs_ok && r.max_abs_z < z_max;
            passed += cell_ok;
            ok = ok && cell_ok;
            std::printf("  alpha=%g beta=%g: z(eps_g)=%+.2f z(m)=%+.2f z(Q)=%+.2f z(rate)=%+.2f "
                        "[m %.4f vs %.4f, Q %.4f vs %.4f]%s\n",
                        alpha, r.point.beta, r.eps_g.z, r.m.z, r.Q.z, r.rate.z, r.m.mean, r.m.predicted, r.Q.mean,
                        r.Q.predicted, cell_ok ? "" : "  <- outside");
            std::fflush(stdout);
        }
    }
    std::printf("[%s] 4 replica vs simulation (d=2000, 5 seeds): %d/%d cells with all |z| < %g, %.0fs\n",
                ok ? "PASS" : "FAIL", passed, cells, z_max, seconds_since(t0));
    return ok;
}

// 5: interpolation peak at alpha = 1
bool criterion_5() {
    constexpr double shrink = 0.5;
    const std::vector<double> alphas{0.5, 0.75, 1.0, 1.5, 2.0};
    auto eps_curve = [&](double beta, double lambda, bool& conv) {
        std::vector<double> e;
        for (const auto& row : sweep_alpha(alphas, beta, lambda, 1.0, 1.0, SolverOptions{})) {
            note(row.result);
            conv = conv && row.result.converged;
            e.push_back(row.metrics.eps_g);
        }
        return e;
    };
    bool conv = true;
    const auto weak = eps_curve(0.1, 0.1, conv);
    const auto strong = eps_curve(1.5, 1.0, conv);
    // excess of the alpha = 1 value over the mean of its two grid neighbours
    auto excess = [](const std::vector<double>& e) { return e[2] - 0.5 * (e[1] + e[3]); };
    const bool peak = weak[2] > weak[1] && weak[2] > weak[3];
    const double x_weak = excess(weak), x_strong = excess(strong);
    const bool ok = conv && peak && x_strong <= (1.0 - shrink) * x_weak;
    std::printf("  eps_g(beta=0.1, lambda=0.1): %.4f %.4f %.4f %.4f %.4f\n", weak[0], weak[1], weak[2], weak[3],
                weak[4]);
    std::printf("  eps_g(beta=1.5, lambda=1):   %.4f %.4f %.4f %.4f %.4f\n", strong[0], strong[1], strong[2],
                strong[3], strong[4]);
    std::printf("  excess over the larger neighbour: %.4f -> %.4f\n", weak[2] - std::max(weak[1], weak[3]),
                strong[2] - std::max(strong[1], strong[3]));
    std::printf("[%s] 5 interpolation peak: peak at alpha=1 %s, excess over neighbour mean %.4f -> %.4f "
                "(must shrink by >= %g%%)\n",
                ok ? "PASS" : "FAIL", peak ? "yes" : "no", x_weak, x_strong, shrink * 100);
    return ok;
}

// 6: optimal beta
bool criterion_6() {
    const OptimalBeta big = optimal_beta(1e5, 1.0, 1.0, 1.0, 0.05, 2.5, SolverOptions{});
    const OptimalBeta two = optimal_beta(2.0, 1.0, 1.0, 1.0, 0.05, 2.5, SolverOptions{});
    const bool ok = big.converged && two.converged && !big.flat && !two.flat && big.beta_star >= 0.99 &&
                    big.beta_star <= 1.01 && two.beta_star > 1.0;
    std::printf("[%s] 6 optimal beta: beta*(alpha=1e5) = %.6f (in [0.99, 1.01]), beta*(alpha=2) = %.6f (> 1)\n",
                ok ? "PASS" : "FAIL", big.beta_star, two.beta_star);
    return ok;
}

// 7: oracle and consistency checks
bool criterion_7() {
    constexpr double grad_tol = 1e-5, stat_tol = 1e-6, dvar_tol = 1e-10, se_max = 3.0;

    const double grad_err = oracle::worst_gradient_error(20, 7);
    const bool a = grad_err < grad_tol;

    for (double alpha : {0.5, 1.0, 2.0, 4.0, 8.0, 100.0, 1e4, 1e6})
        for (double beta : {0.1, 0.5, 1.0, 1.5, 1.99, 2.5, 3.0})
            for (double lambda : {0.0, 0.1, 1.0}) {
                if (lambda == 0.0 && alpha <= 1.0) continue;  // unregularised fit is unbounded
                note(solve_physical({alpha, beta, lambda, 1.0, 1.0}, SolverOptions{}).result);
            }
    const bool b = g_saddle_points > 0 && g_worst_stationarity < stat_tol;

    std::mt19937_64 eng(77);
    std::normal_distribution<double> nd;
    double worst_z = 0.0;
    for (int inst = 0; inst < 5; ++inst) {
        const int d = 5 + 2 * inst, k = 1 + inst % 3;
        const VAEConfig cfg{k, 0.6 + 0.2 * inst, 0.3 + 0.5 * inst, 0.0};
        const VAEParameters p = oracle::random_params(d, k, eng);
        Eigen::VectorXd x(d);
        for (int i = 0; i < d; ++i) x[i] = nd(eng);
        const auto mc = oracle::elbo_monte_carlo(p, x, cfg, 500000, eng);
        worst_z = std::max(worst_z, std::abs(mc.mean - elbo_loss(p, x, cfg)) / mc.se);
    }
    const bool c = worst_z < se_max;

    double worst_dvar = 0.0;
    for (int inst = 0; inst < 5; ++inst) {
        const int d = 8 + inst, k = 1 + inst % 3;
        const Dataset ds = generate_dataset({1.0 + 0.2 * inst, 1.0, d, 1, 3.0}, 100 + inst);
        const VAEConfig cfg{k, 0.5 + 0.3 * inst, 0.4 + 0.4 * inst, 0.2 * inst};
        VAEParameters p = oracle::random_params(d, k, eng);
        p.Dvar = optimal_variational_variance((p.W.transpose() * p.W / d).diagonal(), cfg);
        worst_dvar = std::max(worst_dvar, gradients(p, ds, cfg).Dvar.cwiseAbs().maxCoeff());
    }
    const bool dd = worst_dvar < dvar_tol;

    const bool ok = a && b && c && dd;
    std::printf("[%s] 7 oracle suite: (a) gradient rel. error %.3g (tol %g) (b) stationarity %.3g over %d saddle "
                "points (tol %g) (c) Monte Carlo max %.2f SE (limit %g) (d) Dvar gradient %.3g (tol %g)\n",
                ok ? "PASS" : "FAIL", grad_err, grad_tol, g_worst_stationarity, g_saddle_points, stat_tol, worst_z,
                se_max, worst_dvar, dvar_tol);
    return ok;
}

// 8: phase diagram at lambda = 1
bool criterion_8() {
    const std::vector<double> alphas = logspace(0.1, 100.0, 60), betas = linspace(0.0, 3.0, 60);
    const auto t0 = Clock::now();
    const auto cells = phase_diagram(alphas, betas, 1.0, 1.0, 1.0, SolverOptions{}, 1e-6, 1e-6, resolve_threads(0));
    int count[3] = {0, 0, 0}, unconverged = 0, learning_above_2 = 0;
    for (const auto& c : cells) {
        note(c.row.result);
        ++count[static_cast<int>(c.phase)];
        unconverged += !c.converged;
        learning_above_2 += c.phase == Phase::Learning && c.beta > 2.0;
    }
    // lowest alpha with a Learning cell in each beta row; rows without one count as +inf
    bool monotone = true;
    double prev = 0.0;
    for (std::size_t ib = 0; ib < betas.size(); ++ib) {
        double lo = kInf;
        for (std::size_t ia = 0; ia < alphas.size(); ++ia)
            if (cells[ib * alphas.size() + ia].phase == Phase::Learning) {
                lo = alphas[ia];
                break;
            }
        if (lo < prev) {
            std::printf("  boundary decreases at beta=%g: %g < %g\n", betas[ib], lo, prev);
            monotone = false;
        }
        prev = lo;
    }
    const bool ok = count[0] > 0 && count[1] > 0 && count[2] > 0 && learning_above_2 == 0 && monotone &&
                    unconverged == 0;
    std::printf("[%s] 8 phase diagram 60x60: Learning %d, Overfitting %d, Regularized %d, unconverged %d, "
                "Learning cells at beta>2: %d, boundary non-decreasing: %s, %.1fs\n",
                ok ? "PASS" : "FAIL", count[0], count[1], count[2], unconverged, learning_above_2,
                monotone ? "yes" : "no", seconds_since(t0));
    return ok;
}

// 9: spectrum and noise estimation
bool criterion_9() {
    constexpr double rel_tol = 0.15, edge_factor = 1.05;
    const double edge = marchenko_pastur_upper_edge(1.0, 4.0);
    int single_spike = 0;
    std::string counts;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto ev = covariance_spectrum(generate_dataset({5.0, 1.0, 1000, 1, 4.0}, seed));
        const auto above = std::count_if(ev.begin(), ev.end(), [&](double v) { return v > edge_factor * edge; });
        single_spike += above == 1;
        counts += std::to_string(above) + (seed < 5 ? "," : "");
    }
    double worst_rel = 0.0;
    for (double eta : {0.5, 1.0, 2.0})
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const double est = estimate_noise_strength(generate_dataset({0.0, eta, 1000, 1, 4.0}, seed), 0.8);
            worst_rel = std::max(worst_rel, std::abs(est - eta) / eta);
        }
    const bool ok = single_spike >= 4 && worst_rel < rel_tol;
    std::printf("[%s] 9 spectrum: single outlier above %.2fx edge in %d/5 seeds (counts %s, need >= 4), noise "
                "estimate worst rel. error %.3f (tol %g)\n",
                ok ? "PASS" : "FAIL", edge_factor, single_spike, counts.c_str(), worst_rel, rel_tol);
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--only" && i + 1 < argc) {
            only.insert(std::atoi(argv[++i]));
        } else {
            std::fprintf(stderr, "usage: %s [--only N]...\n", argv[0]);
            return 1;
        }
    }
    const std::vector<std::function<bool()>> criteria{criterion_1, criterion_2, criterion_3,
                                                      criterion_4, criterion_5, criterion_6,
                                                      criterion_7, criterion_8, criterion_9};
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (!only.empty() && !only.count(static_cast<int>(i + 1))) continue;
        try {
            failed += !criteria[i]();
        } catch (const std::exception& e) {
            std::printf("[FAIL] %zu threw: %s\n", i + 1, e.what());
            ++failed;
        }
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
