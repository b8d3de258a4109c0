#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vaelab/linear_vae.hpp"
#include "vaelab/replica.hpp"
#include "vaelab/train.hpp"

namespace vaelab {

/// Worker count: `requested` if > 0, else $VAE_REPLICA_THREADS, else hardware concurrency.
int resolve_threads(int requested);

/// Runs fn(0..count-1) on `threads` workers. Each index is handled exactly once;
/// results must be written to per-index slots by the caller.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

/// Solves from the Informed start, the Collapsed start, the Informed start with
/// m = b = 0 and `warm` when given, and keeps the converged solution with the
/// lowest free energy.
struct PhysicalSolution {
    FixedPointResult result;
    bool ambiguous = false;  // two branches converged with near-equal free energy
    int converged_candidates = 0;
};

PhysicalSolution solve_physical(const ModelPoint& p, const SolverOptions& opts,
                                const SummaryStatistics* warm = nullptr);

struct SweepRow {
    ModelPoint point;
    FixedPointResult result;
    AsymptoticMetrics metrics;
    bool ambiguous = false;
};

std::vector<SweepRow> sweep_alpha(const std::vector<double>& alpha_grid, double beta, double lambda, double rho,
                                  double eta, const SolverOptions& opts);

enum class Phase { Learning, Overfitting, Regularized };
const char* to_string(Phase phase);
Phase classify_phase(const SummaryStatistics& s, double m_tol, double q_tol);

struct PhasePoint {
    double alpha = 0.0;
    double beta = 0.0;
    Phase phase = Phase::Regularized;
    double m = 0.0;
    double Q = 0.0;
    double rate = 0.0;
    double eps_g = 0.0;
    bool converged = false;
    bool boundary = false;
    SweepRow row;
};

/// Cells ordered beta-major: cell (ia, ib) at index ib * alpha_grid.size() + ia.
std::vector<PhasePoint> phase_diagram(const std::vector<double>& alpha_grid, const std::vector<double>& beta_grid,
                                      double lambda, double rho, double eta, const SolverOptions& opts,
                                      double m_tol = 1e-6, double q_tol = 1e-6, int threads = 1);

struct RDPoint {
    double beta = 0.0;
    double rate = 0.0;
    double distortion = 0.0;
    double alpha = 0.0;  // +inf for the analytic curve
    bool converged = true;
};

struct RDCurve {
    std::vector<RDPoint> points;
    std::vector<RDPoint> reference;  // alpha = infinity at the same betas
    std::vector<SweepRow> rows;      // solver rows behind `points` (empty when alpha = inf)
};

/// alpha = +infinity selects the closed-form path.
RDCurve rd_curve(const std::vector<double>& beta_grid, double alpha, double lambda, double rho, double eta,
                 const SolverOptions& opts, int threads = 1);

/// Linear interpolation of rate at distortion D along a curve ordered by distortion;
/// NaN outside the covered range.
double interpolate_rate(const std::vector<RDPoint>& curve, double distortion);

struct OptimalBeta {
    double beta_star = 0.0;
    double eps_g_star = 0.0;
    bool flat = false;
    bool converged = true;
};

/// Grid scan over [beta_lo, beta_hi] followed by golden-section refinement of
/// eps_g(beta). alpha = +infinity uses the closed form.
OptimalBeta optimal_beta(double alpha, double lambda, double rho, double eta, double beta_lo, double beta_hi,
                         const SolverOptions& opts, int grid_points = 41, double xtol = 1e-6);

struct MetricSummary {
    double mean = 0.0;
    double se = 0.0;
    double predicted = 0.0;
    double z = 0.0;
};

struct SeedRun {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    TrainResult training;  // params kept only when requested
    MetricsReport train_metrics;
    MetricsReport heldout_metrics;
};

struct ComparisonReport {
    ModelPoint point;
    int d = 0;
    FixedPointResult replica;
    AsymptoticMetrics replica_metrics;
    std::vector<SeedRun> runs;
    MetricSummary eps_g, m, Q, E, R, b, rate, distortion;
    double max_abs_z = 0.0;  // over eps_g, m, Q, rate
};

struct CompareOptions {
    int d = 2000;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    TrainConfig train;
    SolverOptions solver;
    bool keep_params = false;
};

/// One dataset per seed is shared by all betas. Overlaps (m, Q, E, R, b) and eps_g
/// come from the trained weights; rate and distortion are evaluated on a fresh
/// sample from the same model.
std::vector<ComparisonReport> compare_replica_vs_mc(double alpha, const std::vector<double>& betas, double lambda,
                                                    double rho, double eta, const CompareOptions& copts);
ComparisonReport compare_replica_vs_mc(double alpha, double beta, double lambda, double rho, double eta,
                                       const CompareOptions& copts);

/// z = (mean - predicted)/se; a zero standard error gives 0 when mean == predicted
/// to 1e-12 and +-inf otherwise.
MetricSummary summarize(const std::vector<double>& values, double predicted);

}  // namespace vaelab
