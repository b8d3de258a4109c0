#include <cmath>
#include <limits>

#include "vaelab/analysis.hpp"
#include "vaelab/error.hpp"
#include "vaelab/rng.hpp"

namespace vaelab {

MetricSummary summarize(const std::vector<double>& values, double predicted) {
    MetricSummary s;
    s.predicted = predicted;
    const double n = static_cast<double>(values.size());
    if (values.empty()) {
        s.mean = s.se = s.z = std::numeric_limits<double>::quiet_NaN();
        return s;
    }
    for (double v : values) s.mean += v;
    s.mean /= n;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.se = std::sqrt(ss / (n - 1.0) / n);
    }
    const double diff = s.mean - predicted;
    if (s.se > 0.0)
        s.z = diff / s.se;
    else
        s.z = std::abs(diff) <= 1e-12 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
    return s;
}

std::vector<ComparisonReport> compare_replica_vs_mc(double alpha, const std::vector<double>& betas, double lambda,
                                                    double rho, double eta, const CompareOptions& copts) {
    if (copts.d < 100) throw InvalidArgument("comparison needs d >= 100");
    if (copts.seeds.size() < 2) throw InvalidArgument("comparison needs at least 2 seeds");
    if (betas.empty()) throw InvalidArgument("no beta values given");

    std::vector<ComparisonReport> reports(betas.size());
    for (std::size_t ib = 0; ib < betas.size(); ++ib) {
        ComparisonReport& r = reports[ib];
        r.point = {alpha, betas[ib], lambda, rho, eta};
        r.d = copts.d;
        r.replica = solve_physical(r.point, copts.solver).result;
        r.replica_metrics = asymptotic_metrics(r.replica.stats, r.point.beta, rho, eta);
    }

    GenerativeConfig g;
    g.rho = rho;
    g.eta = eta;
    g.d = copts.d;
    g.k_star = 1;
    g.alpha = alpha;
    for (std::uint64_t seed : copts.seeds) {
        const Dataset train_set = generate_dataset(g, seed);
        const DataMoments moments = DataMoments::from(train_set.X);
        const Dataset heldout = generate_samples(g, train_set.W_star, heldout_seed(seed));
        for (std::size_t ib = 0; ib < betas.size(); ++ib) {
            SeedRun run;
            run.seed = seed;
            VAEConfig vc;
            vc.k = 1;
            vc.beta = betas[ib];
            vc.lambda = lambda;
            TrainConfig tc = copts.train;
            tc.seed = seed;
            try {
                run.training = train(train_set, moments, vc, tc);
                run.train_metrics = evaluate_metrics(run.training.params, train_set, vc);
                run.heldout_metrics = evaluate_metrics(run.training.params, heldout, vc);
                run.ok = true;
            } catch (const Error& e) {
                run.error = e.what();
            }
            if (!copts.keep_params) run.training.params = VAEParameters{};
            reports[ib].runs.push_back(std::move(run));
        }
    }

    for (ComparisonReport& r : reports) {
        std::vector<double> eps, m, Q, E, R, b, rate, dist;
        for (const SeedRun& run : r.runs) {
            if (!run.ok) continue;
            const MetricsReport& t = run.train_metrics;
            eps.push_back(t.eps_g);
            m.push_back(t.summary.m);
            Q.push_back(t.summary.Q);
            E.push_back(t.summary.E);
            R.push_back(t.summary.R);
            b.push_back(t.summary.b);
            rate.push_back(run.heldout_metrics.rate);
            dist.push_back(run.heldout_metrics.distortion);
        }
        const SummaryStatistics& s = r.replica.stats;
        r.eps_g = summarize(eps, r.replica_metrics.eps_g);
        r.m = summarize(m, s.m);
        r.Q = summarize(Q, s.Q);
        r.E = summarize(E, s.E);
        r.R = summarize(R, s.R);
        r.b = summarize(b, s.b);
        r.rate = summarize(rate, r.replica_metrics.rate);
        r.distortion = summarize(dist, r.replica_metrics.distortion);
        r.max_abs_z = 0.0;
        for (const MetricSummary* ms : {&r.eps_g, &r.m, &r.Q, &r.rate}) r.max_abs_z = std::max(r.max_abs_z, std::abs(ms->z));
    }
    return reports;
}

ComparisonReport compare_replica_vs_mc(double alpha, double beta, double lambda, double rho, double eta,
                                       const CompareOptions& copts) {
    return compare_replica_vs_mc(alpha, std::vector<double>{beta}, lambda, rho, eta, copts).front();
}

}  // namespace vaelab
