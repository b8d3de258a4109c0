#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "vaelab/order_params.hpp"

namespace vaelab {

/// Model point of the rank-one saddle-point problem (sigma2 = 1).
struct ModelPoint {
    double alpha = 1.0;
    double beta = 1.0;
    double lambda = 1.0;
    double rho = 1.0;
    double eta = 1.0;

    void validate() const;
};

enum class InitKind { Collapsed, Informed, Random };
enum class Branch { Collapsed, Learning, Unknown };

const char* to_string(InitKind kind);
const char* to_string(Branch branch);
InitKind init_kind_from_string(const std::string& s);

struct SolverOptions {
    double damping = 0.5;
    double tol = 1e-10;
    int max_iter = 50000;
    InitKind init = InitKind::Informed;
    std::uint64_t seed = 0;  // Random init only
    double ridge_eps = 1e-12;
    /// Restarts from the initial point with halved damping after a failed attempt.
    int max_restarts = 4;
    /// Abort an attempt whose best residual has not improved for this many iterations.
    int stall_window = 4000;
    /// Explicit starting point; overrides `init` when set.
    std::optional<SummaryStatistics> start;
    /// Also evaluate the numerical gradient of the free energy at the solution.
    bool check_stationarity = true;

    void validate() const;
};

struct FixedPointResult {
    SummaryStatistics stats;
    ConjugateStatistics conj;
    double residual = 0.0;
    double free_energy = 0.0;
    int iterations = 0;
    bool converged = false;
    Branch branch = Branch::Unknown;
    /// max-norm of the numerical gradient of free_energy_k1 (NaN if not evaluated)
    double stationarity = 0.0;
    double damping_used = 0.0;
    int restarts = 0;
    bool regularized = false;
    ModelPoint point;
};

/// Energy term Phi(Q,E,R,chi,zeta,omega,m,b) of the rank-one free energy and
/// its gradient in that variable order.
struct EnergyTerm {
    double value = 0.0;
    std::array<double, 8> grad{};
};

EnergyTerm energy_term(const SummaryStatistics& s, double beta, double rho, double eta);

/// Conjugates from the stationarity in the statistics: hat = alpha * dPhi (with signs).
ConjugateStatistics conjugates_from(const SummaryStatistics& s, const ModelPoint& p);

/// Statistics from the stationarity in the conjugates. Sets `regularized`
/// if the conjugate matrix needed the ridge.
SummaryStatistics statistics_from(const ConjugateStatistics& c, double lambda, double ridge_eps,
                                  bool* regularized = nullptr);

/// One undamped application of the self-consistent map.
SummaryStatistics update_map(const SummaryStatistics& s, const ModelPoint& p, double ridge_eps = 1e-12,
                             bool* regularized = nullptr);

double free_energy_k1(const SummaryStatistics& stats, const ConjugateStatistics& conj, double alpha, double beta,
                      double lambda, double rho, double eta);

/// Central-difference (Richardson) gradient of free_energy_k1 in all 16 variables,
/// order (Q,E,R,chi,zeta,omega,m,b, hatQ,hatE,hatR,hatchi,hatzeta,hatomega,hatm,hatb).
std::array<double, 16> free_energy_numerical_gradient(const SummaryStatistics& stats,
                                                      const ConjugateStatistics& conj, const ModelPoint& p);

SummaryStatistics initial_statistics(const ModelPoint& p, InitKind kind, std::uint64_t seed);

FixedPointResult saddle_point_solve(const ModelPoint& p, const SolverOptions& opts);
FixedPointResult saddle_point_solve(double alpha, double beta, double lambda, double rho, double eta,
                                    const SolverOptions& opts);

struct AsymptoticMetrics {
    double eps_g = 0.0;
    double rate = 0.0;
    double distortion = 0.0;
};

/// eps_g = rho - 2 sqrt(rho) m + Q and the population rate/distortion of the
/// stationary-D model (distortion measured against the signal-direction power).
AsymptoticMetrics asymptotic_metrics(const SummaryStatistics& stats, double beta, double rho, double eta);

struct LargeAlphaLimit {
    SummaryStatistics stats;
    double eps_g = 0.0;
    double rate = 0.0;
    double distortion = 0.0;
};

LargeAlphaLimit large_alpha_limit(double beta, double rho, double eta);
double collapse_threshold(double rho, double eta);
double collapse_stability_eigenvalue(double beta, double rho, double eta);
double gaussian_source_rd(double distortion, double rho, double eta);

}  // namespace vaelab
