#include "vaelab/replica.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <random>

#include "vaelab/error.hpp"
#include "vaelab/rng.hpp"

namespace vaelab {

void ModelPoint::validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidArgument("alpha must be finite and > 0");
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw InvalidArgument("beta must be finite and >= 0");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be finite and >= 0");
    if (!(rho >= 0.0) || !std::isfinite(rho)) throw InvalidArgument("rho must be finite and >= 0");
    if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidArgument("eta must be finite and > 0");
}

void SolverOptions::validate() const {
    if (!(damping > 0.0 && damping <= 1.0)) throw InvalidArgument("damping must lie in (0,1]");
    if (!(tol > 0.0)) throw InvalidArgument("tol must be > 0");
    if (max_iter < 1) throw InvalidArgument("max_iter must be >= 1");
    if (!(ridge_eps >= 0.0)) throw InvalidArgument("ridge_eps must be >= 0");
    if (max_restarts < 0) throw InvalidArgument("max_restarts must be >= 0");
    if (stall_window < 1) throw InvalidArgument("stall_window must be >= 1");
}

const char* to_string(InitKind kind) {
    switch (kind) {
        case InitKind::Collapsed: return "Collapsed";
        case InitKind::Informed: return "Informed";
        case InitKind::Random: return "Random";
    }
    return "?";
}

const char* to_string(Branch branch) {
    switch (branch) {
        case Branch::Collapsed: return "Collapsed";
        case Branch::Learning: return "Learning";
        case Branch::Unknown: return "Unknown";
    }
    return "?";
}

InitKind init_kind_from_string(const std::string& s) {
    std::string t;
    for (char ch : s) t += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (t == "collapsed") return InitKind::Collapsed;
    if (t == "informed") return InitKind::Informed;
    if (t == "random") return InitKind::Random;
    throw InvalidArgument("unknown init kind: " + s);
}

SummaryStatistics initial_statistics(const ModelPoint& p, InitKind kind, std::uint64_t seed) {
    SummaryStatistics s;
    const double power = p.rho + p.eta;
    const double resp = std::min(1.0, 1.0 / p.alpha);
    switch (kind) {
        case InitKind::Collapsed:
            break;
        case InitKind::Informed: {
            // large-alpha learning point; probe a small Q when that point is collapsed
            const double Q = std::max(power - p.beta, 0.05 * power);
            s.Q = Q;
            s.m = std::sqrt(Q);
            s.b = s.m / power;
            s.E = Q / (power * power);
            s.R = Q / power;
            s.chi = s.zeta = resp;
            break;
        }
        case InitKind::Random: {
            auto engine = make_engine(seed, Stream::Solver);
            std::uniform_real_distribution<double> u(0.0, 1.0);
            s.Q = (0.1 + 1.9 * u(engine)) * power;
            s.m = u(engine) * std::sqrt(s.Q);
            s.E = (0.1 + u(engine)) * s.Q / (power * power);
            s.R = u(engine) * std::sqrt(s.Q * s.E);
            s.b = u(engine) * std::sqrt(s.E);
            s.chi = u(engine) * resp;
            s.zeta = u(engine) * resp;
            break;
        }
    }
    return s;
}

namespace {

using Vec8 = std::array<double, 8>;

Vec8 pack(const SummaryStatistics& s) { return {s.Q, s.E, s.R, s.chi, s.zeta, s.omega, s.m, s.b}; }

SummaryStatistics unpack(const Vec8& v) {
    SummaryStatistics s;
    s.Q = v[0];
    s.E = v[1];
    s.R = v[2];
    s.chi = v[3];
    s.zeta = v[4];
    s.omega = v[5];
    s.m = v[6];
    s.b = v[7];
    return s;
}

void project(SummaryStatistics& s) {
    s.Q = std::max(s.Q, 0.0);
    s.E = std::max(s.E, 0.0);
    s.chi = std::max(s.chi, 0.0);
    s.zeta = std::max(s.zeta, 0.0);
}

struct Attempt {
    SummaryStatistics stats;
    double residual = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
    bool regularized = false;
};

Attempt iterate(const ModelPoint& p, const SummaryStatistics& start, double damping, const SolverOptions& opts) {
    Attempt a;
    Vec8 v = pack(start);
    double best = std::numeric_limits<double>::infinity();
    int best_iter = 0;
    for (int it = 0; it < opts.max_iter; ++it) {
        a.iterations = it + 1;
        SummaryStatistics next;
        try {
            next = update_map(unpack(v), p, opts.ridge_eps, &a.regularized);
        } catch (const DomainError&) {
            break;
        }
        // residual of the raw map: a point held in place only by the projection is not a solution
        const Vec8 raw = pack(next);
        double r = 0.0;
        for (int i = 0; i < 8; ++i) r = std::max(r, std::abs(raw[i] - v[i]));
        project(next);
        const Vec8 f = pack(next);
        if (!std::isfinite(r)) break;
        a.stats = unpack(v);
        a.residual = r;
        if (r <= opts.tol) {
            a.converged = true;
            break;
        }
        if (r < best) {
            best = r;
            best_iter = it;
        } else if (it - best_iter > opts.stall_window || r > 1e12 * (1.0 + best)) {
            break;
        }
        for (int i = 0; i < 8; ++i) v[i] = (1.0 - damping) * v[i] + damping * f[i];
    }
    return a;
}

}  // namespace

FixedPointResult saddle_point_solve(const ModelPoint& p, const SolverOptions& opts) {
    p.validate();
    opts.validate();
    const SummaryStatistics start = opts.start ? *opts.start : initial_statistics(p, opts.init, opts.seed);

    FixedPointResult res;
    res.point = p;
    double damping = opts.damping;
    Attempt best;
    int total = 0;
    for (int attempt = 0; attempt <= opts.max_restarts; ++attempt) {
        Attempt a = iterate(p, start, damping, opts);
        total += a.iterations;
        res.restarts = attempt;
        res.damping_used = damping;
        if (a.converged || a.residual < best.residual || attempt == 0) best = a;
        if (a.converged) break;
        damping *= 0.5;
    }

    SummaryStatistics s = best.stats;
    if (s.m < 0.0) {
        s.m = -s.m;
        s.b = -s.b;
    }
    res.stats = s;
    res.residual = best.residual;
    res.iterations = total;
    res.converged = best.converged;
    res.regularized = best.regularized;
    res.branch = !res.converged ? Branch::Unknown : (std::abs(s.m) < 1e-6 ? Branch::Collapsed : Branch::Learning);
    res.stationarity = std::numeric_limits<double>::quiet_NaN();
    res.free_energy = std::numeric_limits<double>::quiet_NaN();
    try {
        res.conj = conjugates_from(s, p);
        res.free_energy = free_energy_k1(s, res.conj, p.alpha, p.beta, p.lambda, p.rho, p.eta);
        if (opts.check_stationarity && res.converged) {
            double g = 0.0;
            for (double x : free_energy_numerical_gradient(s, res.conj, p)) g = std::max(g, std::abs(x));
            res.stationarity = g;
        }
    } catch (const DomainError&) {
        res.converged = false;
        res.branch = Branch::Unknown;
    }
    return res;
}

FixedPointResult saddle_point_solve(double alpha, double beta, double lambda, double rho, double eta,
                                    const SolverOptions& opts) {
    return saddle_point_solve(ModelPoint{alpha, beta, lambda, rho, eta}, opts);
}

}  // namespace vaelab
