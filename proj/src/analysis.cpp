#include "vaelab/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "vaelab/error.hpp"

namespace vaelab {

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("VAE_REPLICA_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min<std::size_t>(std::max(1, threads), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

PhysicalSolution solve_physical(const ModelPoint& p, const SolverOptions& opts, const SummaryStatistics* warm) {
    SolverOptions base = opts;
    base.check_stationarity = false;
    std::vector<FixedPointResult> cands;
    if (warm) {
        SolverOptions o = base;
        o.start = *warm;
        cands.push_back(saddle_point_solve(p, o));
    }
    for (InitKind kind : {InitKind::Informed, InitKind::Collapsed}) {
        SolverOptions o = base;
        o.start.reset();
        o.init = kind;
        cands.push_back(saddle_point_solve(p, o));
    }
    {
        // m = b = 0 is invariant under the map; this start reaches the m = 0, Q > 0
        // solution directly where the Learning branch approaches it only sublinearly
        SolverOptions o = base;
        SummaryStatistics s = initial_statistics(p, InitKind::Informed, 0);
        s.m = s.b = 0.0;
        o.start = s;
        cands.push_back(saddle_point_solve(p, o));
    }

    PhysicalSolution out;
    const FixedPointResult* best = nullptr;
    for (const auto& c : cands) {
        if (!c.converged || !std::isfinite(c.free_energy)) continue;
        ++out.converged_candidates;
        if (!best || c.free_energy < best->free_energy) best = &c;
    }
    if (best) {
        for (const auto& c : cands) {
            if (!c.converged || c.branch == best->branch) continue;
            if (std::abs(c.free_energy - best->free_energy) <= 1e-7 * (1.0 + std::abs(best->free_energy)))
                out.ambiguous = true;
        }
    } else {
        for (const auto& c : cands)
            if (!best || c.residual < best->residual) best = &c;
    }
    out.result = *best;
    if (opts.check_stationarity && out.result.converged) {
        double g = 0.0;
        for (double x : free_energy_numerical_gradient(out.result.stats, out.result.conj, p)) g = std::max(g, std::abs(x));
        out.result.stationarity = g;
    }
    return out;
}

namespace {

SweepRow make_row(const ModelPoint& p, const PhysicalSolution& sol) {
    SweepRow row;
    row.point = p;
    row.result = sol.result;
    row.ambiguous = sol.ambiguous;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    try {
        row.metrics = asymptotic_metrics(sol.result.stats, p.beta, p.rho, p.eta);
    } catch (const DomainError&) {
        row.metrics = {nan, nan, nan};
    }
    return row;
}

}  // namespace

std::vector<SweepRow> sweep_alpha(const std::vector<double>& alpha_grid, double beta, double lambda, double rho,
                                  double eta, const SolverOptions& opts) {
    if (alpha_grid.empty()) throw InvalidArgument("alpha grid is empty");
    for (std::size_t i = 1; i < alpha_grid.size(); ++i)
        if (!(alpha_grid[i] > alpha_grid[i - 1])) throw InvalidArgument("alpha grid must be increasing");
    std::vector<SweepRow> rows;
    rows.reserve(alpha_grid.size());
    const SummaryStatistics* warm = nullptr;
    for (double a : alpha_grid) {
        const ModelPoint p{a, beta, lambda, rho, eta};
        rows.push_back(make_row(p, solve_physical(p, opts, warm)));
        warm = rows.back().result.converged ? &rows.back().result.stats : nullptr;
    }
    return rows;
}

const char* to_string(Phase phase) {
    switch (phase) {
        case Phase::Learning: return "Learning";
        case Phase::Overfitting: return "Overfitting";
        case Phase::Regularized: return "Regularized";
    }
    return "?";
}

Phase classify_phase(const SummaryStatistics& s, double m_tol, double q_tol) {
    if (std::abs(s.m) > m_tol) return Phase::Learning;
    return s.Q > q_tol ? Phase::Overfitting : Phase::Regularized;
}

std::vector<PhasePoint> phase_diagram(const std::vector<double>& alpha_grid, const std::vector<double>& beta_grid,
                                      double lambda, double rho, double eta, const SolverOptions& opts, double m_tol,
                                      double q_tol, int threads) {
    if (alpha_grid.empty() || beta_grid.empty()) throw InvalidArgument("phase diagram grids must be nonempty");
    const std::size_t na = alpha_grid.size();
    std::vector<PhasePoint> cells(na * beta_grid.size());
    parallel_for(beta_grid.size(), threads, [&](std::size_t ib) {
        const auto rows = sweep_alpha(alpha_grid, beta_grid[ib], lambda, rho, eta, opts);
        for (std::size_t ia = 0; ia < na; ++ia) {
            PhasePoint& c = cells[ib * na + ia];
            c.row = rows[ia];
            c.alpha = alpha_grid[ia];
            c.beta = beta_grid[ib];
            c.phase = classify_phase(rows[ia].result.stats, m_tol, q_tol);
            c.m = rows[ia].result.stats.m;
            c.Q = rows[ia].result.stats.Q;
            c.rate = rows[ia].metrics.rate;
            c.eps_g = rows[ia].metrics.eps_g;
            c.converged = rows[ia].result.converged;
            c.boundary = rows[ia].ambiguous;
        }
    });
    return cells;
}

RDCurve rd_curve(const std::vector<double>& beta_grid, double alpha, double lambda, double rho, double eta,
                 const SolverOptions& opts, int threads) {
    for (double b : beta_grid)
        if (!(b > 0.0)) throw InvalidArgument("rd_curve needs beta > 0");
    const double inf = std::numeric_limits<double>::infinity();
    RDCurve curve;
    for (double b : beta_grid) {
        const LargeAlphaLimit lim = large_alpha_limit(b, rho, eta);
        curve.reference.push_back({b, lim.rate, lim.distortion, inf, true});
    }
    if (std::isinf(alpha)) {
        curve.points = curve.reference;
        return curve;
    }
    curve.rows.resize(beta_grid.size());
    parallel_for(beta_grid.size(), threads, [&](std::size_t i) {
        const ModelPoint p{alpha, beta_grid[i], lambda, rho, eta};
        curve.rows[i] = make_row(p, solve_physical(p, opts));
    });
    for (const auto& row : curve.rows)
        curve.points.push_back({row.point.beta, row.metrics.rate, row.metrics.distortion, alpha, row.result.converged});
    return curve;
}

double interpolate_rate(const std::vector<RDPoint>& curve, double distortion) {
    std::vector<RDPoint> pts;
    for (const auto& p : curve)
        if (std::isfinite(p.distortion) && std::isfinite(p.rate)) pts.push_back(p);
    std::sort(pts.begin(), pts.end(), [](const RDPoint& a, const RDPoint& b) { return a.distortion < b.distortion; });
    if (pts.empty() || distortion < pts.front().distortion || distortion > pts.back().distortion)
        return std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (distortion <= pts[i].distortion) {
            const double span = pts[i].distortion - pts[i - 1].distortion;
            if (span <= 0.0) return std::min(pts[i].rate, pts[i - 1].rate);
            const double w = (distortion - pts[i - 1].distortion) / span;
            return (1.0 - w) * pts[i - 1].rate + w * pts[i].rate;
        }
    }
    return pts.back().rate;
}

OptimalBeta optimal_beta(double alpha, double lambda, double rho, double eta, double beta_lo, double beta_hi,
                         const SolverOptions& opts, int grid_points, double xtol) {
    if (!(beta_lo >= 0.0 && beta_hi > beta_lo)) throw InvalidArgument("beta range must satisfy 0 <= lo < hi");
    if (grid_points < 3) throw InvalidArgument("grid_points must be >= 3");
    OptimalBeta out;
    SolverOptions quiet = opts;
    quiet.check_stationarity = false;
    auto eval = [&](double beta) {
        if (std::isinf(alpha)) return large_alpha_limit(beta, rho, eta).eps_g;
        const ModelPoint p{alpha, beta, lambda, rho, eta};
        const PhysicalSolution sol = solve_physical(p, quiet);
        if (!sol.result.converged) out.converged = false;
        return rho - 2.0 * std::sqrt(rho) * sol.result.stats.m + sol.result.stats.Q;
    };

    std::vector<double> bs(grid_points), vals(grid_points);
    for (int i = 0; i < grid_points; ++i) {
        bs[i] = beta_lo + (beta_hi - beta_lo) * i / (grid_points - 1);
        vals[i] = eval(bs[i]);
    }
    const auto [mn, mx] = std::minmax_element(vals.begin(), vals.end());
    if (*mx - *mn <= 1e-10 * (1.0 + std::abs(*mn))) {
        out.flat = true;
        out.beta_star = 0.5 * (beta_lo + beta_hi);
        out.eps_g_star = eval(out.beta_star);
        return out;
    }
    const int i = static_cast<int>(mn - vals.begin());
    double lo = bs[std::max(0, i - 1)], hi = bs[std::min(grid_points - 1, i + 1)];
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - invphi * (hi - lo), x2 = lo + invphi * (hi - lo);
    double f1 = eval(x1), f2 = eval(x2);
    while (hi - lo > xtol) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - invphi * (hi - lo);
            f1 = eval(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + invphi * (hi - lo);
            f2 = eval(x2);
        }
    }
    out.beta_star = 0.5 * (lo + hi);
    out.eps_g_star = eval(out.beta_star);
    if (*mn < out.eps_g_star) {
        out.beta_star = bs[i];
        out.eps_g_star = *mn;
    }
    return out;
}

}  // namespace vaelab
