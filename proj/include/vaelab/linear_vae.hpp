#pragma once

#include <Eigen/Dense>

#include "vaelab/order_params.hpp"
#include "vaelab/scm.hpp"

namespace vaelab {

struct VAEConfig {
    int k = 1;
    double sigma2 = 1.0;
    double beta = 1.0;
    double lambda = 1.0;

    void validate() const;
};

/// Decoder W and encoder V are d x k; q(z|x) = N(V^T x/sqrt(d), diag(Dvar)),
/// p(x|z) = N(W z/sqrt(d), sigma2 I).
struct VAEParameters {
    Eigen::MatrixXd W;
    Eigen::MatrixXd V;
    Eigen::VectorXd Dvar;

    static VAEParameters zeros(int d, int k);
    int d() const { return static_cast<int>(W.rows()); }
    int k() const { return static_cast<int>(W.cols()); }
};

struct ParameterGradients {
    Eigen::MatrixXd W;
    Eigen::MatrixXd V;
    Eigen::VectorXd Dvar;
};

/// Sufficient statistics of a dataset for the objective: C = X^T X/d and tr(X^T X).
struct DataMoments {
    Eigen::MatrixXd C;
    double trace = 0.0;
    int n = 0;
    int d = 0;

    static DataMoments from(const Eigen::MatrixXd& X);
};

/// Per-sample pieces of the loss (the (d/2) log 2 pi sigma2 constant is dropped).
struct SampleLoss {
    double reconstruction = 0.0;  // E_q[-log p(x|z)]
    double kl = 0.0;              // KL[q(z|x) || N(0, I)]
    double distortion = 0.0;      // reconstruction - ||P_perp x||^2/(2 sigma2), P_perp orthogonal to span(W*)
};

SampleLoss sample_loss(const VAEParameters& params, const Eigen::VectorXd& x, const Eigen::MatrixXd& W_star,
                       const VAEConfig& config);
double elbo_loss(const VAEParameters& params, const Eigen::VectorXd& x, const VAEConfig& config);

double objective(const VAEParameters& params, const DataMoments& data, const VAEConfig& config);
double objective(const VAEParameters& params, const Dataset& dataset, const VAEConfig& config);

ParameterGradients gradients(const VAEParameters& params, const DataMoments& data, const VAEConfig& config);
ParameterGradients gradients(const VAEParameters& params, const Dataset& dataset, const VAEConfig& config);

/// D_l = beta sigma2/(Q_ll + beta sigma2); beta = 0 is rejected.
Eigen::VectorXd optimal_variational_variance(const Eigen::VectorXd& Q_diag, const VAEConfig& config);

/// (Q, E, R, m, b) from the first latent direction and the first signal
/// column; chi, zeta, omega are set to SummaryStatistics::not_applicable.
SummaryStatistics empirical_summary_stats(const VAEParameters& params, const Eigen::MatrixXd& W_star);

/// Squared distance (1/d)||sqrt(rho) W* - W||^2 written in overlaps:
/// k* rho - 2 sqrt(rho) sum_l m_ll + sum_l Q_ll (rank-one form below).
double signal_recovery_error(const SummaryStatistics& summary, double rho, int k = 1, int k_star = 1);
double signal_recovery_error(const VAEParameters& params, const Eigen::MatrixXd& W_star, double rho);

double empirical_rate(const VAEParameters& params, const Dataset& dataset);
double empirical_distortion(const VAEParameters& params, const Dataset& dataset, const VAEConfig& config);
double collapse_fraction(const VAEParameters& params, const Dataset& dataset, double epsilon);
double posterior_kl_true_vs_variational(const VAEParameters& params, const Dataset& dataset,
                                        const VAEConfig& config);

struct MetricsReport {
    SummaryStatistics summary;
    double eps_g = 0.0;
    double rate = 0.0;
    double distortion = 0.0;
    double kl_true_vs_var = 0.0;
    double collapse_fraction = 0.0;
};

MetricsReport evaluate_metrics(const VAEParameters& params, const Dataset& dataset, const VAEConfig& config,
                               double collapse_epsilon = 1e-8);

}  // namespace vaelab
