#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "vaelab/error.hpp"
#include "vaelab/replica.hpp"

using namespace vaelab;

namespace {

double max_stat_diff(const SummaryStatistics& a, const SummaryStatistics& b) {
    const double da[] = {a.Q, a.E, a.R, a.chi, a.zeta, a.omega, a.m, a.b};
    const double db[] = {b.Q, b.E, b.R, b.chi, b.zeta, b.omega, b.m, b.b};
    double out = 0.0;
    for (int i = 0; i < 8; ++i) out = std::max(out, std::abs(da[i] - db[i]));
    return out;
}

double& stat_at(SummaryStatistics& s, int i) {
    double* f[] = {&s.Q, &s.E, &s.R, &s.chi, &s.zeta, &s.omega, &s.m, &s.b};
    return *f[i];
}

}  // namespace

TEST_CASE("energy term gradient matches finite differences") {
    std::mt19937_64 eng(11);
    std::uniform_real_distribution<double> pos(0.1, 1.5), sgn(-0.5, 0.5);
    for (int inst = 0; inst < 20; ++inst) {
        SummaryStatistics s{pos(eng), pos(eng), sgn(eng), pos(eng), pos(eng), sgn(eng) * 0.2, sgn(eng), sgn(eng)};
        const double beta = pos(eng), rho = pos(eng) + 0.5, eta = pos(eng);
        const EnergyTerm e = energy_term(s, beta, rho, eta);
        for (int i = 0; i < 8; ++i) {
            SummaryStatistics sp = s, sm = s;
            const double h = 1e-6;
            stat_at(sp, i) += h;
            stat_at(sm, i) -= h;
            const double fd = (energy_term(sp, beta, rho, eta).value - energy_term(sm, beta, rho, eta).value) / (2 * h);
            CAPTURE(inst);
            CAPTURE(i);
            CHECK(e.grad[i] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
        }
    }
}

TEST_CASE("unregularized saddle point agrees with the spiked-covariance eigenpair") {
    // At lambda = 0 the trained decoder is the top sample eigenvector scaled to
    // Q = s - beta, where s = (rho+eta)(1 + eta/(alpha rho)) is the outlying
    // eigenvalue and the squared overlap with the spike is
    // (1 - eta^2/(alpha rho^2))/(1 + eta/(alpha rho)).
    struct Case {
        double alpha, beta, rho, eta;
    };
    for (const Case c : {Case{2, 0.5, 1, 1}, Case{4, 1, 1, 1}, Case{8, 0.5, 1, 1}, Case{3, 1.5, 2, 0.5},
                         Case{20, 2.0, 1.5, 1}}) {
        const double s = (c.rho + c.eta) * (1 + c.eta / (c.alpha * c.rho));
        const double ov2 = (1 - c.eta * c.eta / (c.alpha * c.rho * c.rho)) / (1 + c.eta / (c.alpha * c.rho));
        const double Q = s - c.beta;
        SolverOptions opts;
        opts.max_iter = 200000;
        const FixedPointResult r = saddle_point_solve(c.alpha, c.beta, 0.0, c.rho, c.eta, opts);
        CAPTURE(c.alpha);
        CAPTURE(c.beta);
        REQUIRE(r.converged);
        CHECK(r.stats.Q == doctest::Approx(Q).epsilon(1e-6));
        CHECK(r.stats.m == doctest::Approx(std::sqrt(Q * ov2)).epsilon(1e-6));
        CHECK(r.stats.R == doctest::Approx(Q / s).epsilon(1e-6));
        CHECK(r.stats.E == doctest::Approx(Q / (s * s)).epsilon(1e-6));
        CHECK(r.stats.b == doctest::Approx(std::sqrt(Q * ov2) / s).epsilon(1e-6));
    }
}

TEST_CASE("converged solutions are fixed points of the map and stationary points of f") {
    int converged = 0;
    for (double alpha : {0.5, 1.5, 4.0, 100.0})
        for (double beta : {0.3, 1.0, 2.5})
            for (double lambda : {0.1, 1.0}) {
                const ModelPoint p{alpha, beta, lambda, 1.0, 1.0};
                SolverOptions opts;
                const FixedPointResult r = saddle_point_solve(p, opts);
                if (!r.converged) continue;
                ++converged;
                CAPTURE(alpha);
                CAPTURE(beta);
                CAPTURE(lambda);
                CHECK(max_stat_diff(update_map(r.stats, p), r.stats) <= 1.01 * opts.tol);
                CHECK(r.stationarity < 1e-6);
                CHECK(r.stats.Q >= 0.0);
                CHECK(r.stats.chi >= 0.0);
                CHECK(r.stats.m >= 0.0);
                CHECK(r.free_energy == doctest::Approx(free_energy_k1(r.stats, r.conj, alpha, beta, lambda, 1, 1)));
            }
    CHECK(converged == 24);
}

TEST_CASE("learning solution at a regular point") {
    const FixedPointResult r = saddle_point_solve(4.0, 1.0, 1.0, 1.0, 1.0, SolverOptions{});
    REQUIRE(r.converged);
    CHECK(r.branch == Branch::Learning);
    CHECK(r.stats.m > 0.5);
    // the Random start finds the same branch here
    SolverOptions ro;
    ro.init = InitKind::Random;
    ro.seed = 4;
    const FixedPointResult rr = saddle_point_solve(4.0, 1.0, 1.0, 1.0, 1.0, ro);
    REQUIRE(rr.converged);
    CHECK(rr.stats.m == doctest::Approx(r.stats.m).epsilon(1e-6));
}

TEST_CASE("sign of the overlaps is normalised") {
    SolverOptions opts;
    SummaryStatistics start = initial_statistics({4, 1, 1, 1, 1}, InitKind::Informed, 0);
    start.m = -start.m;
    start.b = -start.b;
    opts.start = start;
    const FixedPointResult r = saddle_point_solve(4.0, 1.0, 1.0, 1.0, 1.0, opts);
    REQUIRE(r.converged);
    CHECK(r.stats.m > 0.0);
    CHECK(r.stats.b > 0.0);
}

TEST_CASE("collapsed start stays collapsed and is a solution above the threshold") {
    SolverOptions opts;
    opts.init = InitKind::Collapsed;
    const FixedPointResult r = saddle_point_solve(10.0, 2.5, 1.0, 1.0, 1.0, opts);
    REQUIRE(r.converged);
    CHECK(r.branch == Branch::Collapsed);
    CHECK(std::abs(r.stats.m) < 1e-12);
    const AsymptoticMetrics am = asymptotic_metrics(r.stats, 2.5, 1.0, 1.0);
    CHECK(am.rate < 1e-12);
    CHECK(am.eps_g == doctest::Approx(1.0 + r.stats.Q));
}

TEST_CASE("iteration budget exhaustion is reported") {
    SolverOptions opts;
    opts.max_iter = 3;
    opts.max_restarts = 0;
    const FixedPointResult r = saddle_point_solve(4.0, 1.0, 1.0, 1.0, 1.0, opts);
    CHECK_FALSE(r.converged);
    CHECK(r.branch == Branch::Unknown);
    CHECK(r.residual > opts.tol);
}

TEST_CASE("large-alpha solution approaches the closed form") {
    for (double beta : {0.5, 1.0, 1.5}) {
        const FixedPointResult r = saddle_point_solve(1e6, beta, 1.0, 1.0, 1.0, SolverOptions{});
        const LargeAlphaLimit lim = large_alpha_limit(beta, 1.0, 1.0);
        REQUIRE(r.converged);
        CHECK(r.stats.m == doctest::Approx(lim.stats.m).epsilon(1e-4));
        CHECK(r.stats.Q == doctest::Approx(lim.stats.Q).epsilon(1e-4));
        CHECK(lim.stats.m == doctest::Approx(std::sqrt(2 - beta)));
        CHECK(lim.rate == doctest::Approx(0.5 * std::log(2 / beta)));
        CHECK(lim.distortion == doctest::Approx(beta / 2));
    }
    const LargeAlphaLimit collapsed = large_alpha_limit(2.5, 1.0, 1.0);
    CHECK(collapsed.stats.m == 0.0);
    CHECK(collapsed.rate == 0.0);
    CHECK(collapsed.eps_g == 1.0);
    CHECK(collapsed.distortion == 1.0);
    CHECK(std::isinf(large_alpha_limit(0.0, 1.0, 1.0).rate));
}

TEST_CASE("closed forms") {
    CHECK(collapse_threshold(1.0, 1.0) == 2.0);
    CHECK(collapse_stability_eigenvalue(3.0, 1.0, 1.0) == doctest::Approx(0.5));
    CHECK_THROWS_AS(collapse_stability_eigenvalue(1.0, 1.0, 1.0), DomainError);
    CHECK(gaussian_source_rd(0.25, 1.0, 1.0) == doctest::Approx(0.5 * std::log(4.0)));
    CHECK(gaussian_source_rd(1.5, 1.0, 1.0) == 0.0);
    CHECK_THROWS_AS(gaussian_source_rd(0.0, 1.0, 1.0), DomainError);
    // on the large-alpha branch the rate equals the Gaussian source R(D)
    for (double beta : {0.2, 0.9, 1.7}) {
        const LargeAlphaLimit lim = large_alpha_limit(beta, 1.0, 1.0);
        CHECK(lim.rate == doctest::Approx(gaussian_source_rd(lim.distortion, 1.0, 1.0)).epsilon(1e-12));
    }
    SummaryStatistics s{};
    s.Q = 0.3;
    CHECK(std::isinf(asymptotic_metrics(s, 0.0, 1.0, 1.0).rate));
}

TEST_CASE("invalid model points and options are rejected") {
    CHECK_THROWS_AS(saddle_point_solve(0.0, 1.0, 1.0, 1.0, 1.0, SolverOptions{}), InvalidArgument);
    CHECK_THROWS_AS(saddle_point_solve(1.0, -1.0, 1.0, 1.0, 1.0, SolverOptions{}), InvalidArgument);
    CHECK_THROWS_AS(saddle_point_solve(1.0, 1.0, 1.0, 1.0, 0.0, SolverOptions{}), InvalidArgument);
    SolverOptions bad;
    bad.damping = 0.0;
    CHECK_THROWS_AS(saddle_point_solve(1.0, 1.0, 1.0, 1.0, 1.0, bad), InvalidArgument);
    CHECK(init_kind_from_string("collapsed") == InitKind::Collapsed);
    CHECK_THROWS_AS(init_kind_from_string("warm"), InvalidArgument);
}
