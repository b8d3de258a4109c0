#include "vaelab/linear_vae.hpp"

#include <cmath>
#include <string>

#include "vaelab/error.hpp"

namespace vaelab {

namespace {

void check_shapes(const VAEParameters& p, int d) {
    if (p.W.rows() != d || p.V.rows() != d) throw InvalidArgument("parameter rows do not match data dimension");
    if (p.W.cols() != p.V.cols() || p.Dvar.size() != p.W.cols())
        throw InvalidArgument("W, V, Dvar disagree on the latent dimension");
}

void check_dvar(const Eigen::VectorXd& D) {
    for (Eigen::Index l = 0; l < D.size(); ++l)
        if (!(D[l] > 0.0)) throw DomainError("variational variance must be > 0 (entry " + std::to_string(l) + ")");
}

double kl_constant_part(const Eigen::VectorXd& D) {
    return D.sum() - D.array().log().sum() - static_cast<double>(D.size());
}

}  // namespace

void VAEConfig::validate() const {
    if (k < 1) throw InvalidArgument("k must be >= 1");
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw InvalidArgument("sigma2 must be finite and > 0");
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw InvalidArgument("beta must be finite and >= 0");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be finite and >= 0");
}

VAEParameters VAEParameters::zeros(int d, int k) {
    return {Eigen::MatrixXd::Zero(d, k), Eigen::MatrixXd::Zero(d, k), Eigen::VectorXd::Ones(k)};
}

DataMoments DataMoments::from(const Eigen::MatrixXd& X) {
    DataMoments m;
    m.C = gram_over_d(X);
    m.trace = X.squaredNorm();
    m.n = static_cast<int>(X.rows());
    m.d = static_cast<int>(X.cols());
    return m;
}

SampleLoss sample_loss(const VAEParameters& params, const Eigen::VectorXd& x, const Eigen::MatrixXd& W_star,
                       const VAEConfig& config) {
    const int d = static_cast<int>(x.size());
    check_shapes(params, d);
    check_dvar(params.Dvar);
    const double sd = std::sqrt(static_cast<double>(d));
    const Eigen::VectorXd uW = params.W.transpose() * x / sd;
    const Eigen::VectorXd uV = params.V.transpose() * x / sd;
    const Eigen::MatrixXd Q = params.W.transpose() * params.W / d;
    const double xx = x.squaredNorm();

    SampleLoss out;
    const double quad = (Q * params.Dvar.asDiagonal()).trace() + uV.dot(Q * uV);
    out.reconstruction = (xx - 2.0 * uW.dot(uV) + quad) / (2.0 * config.sigma2);
    out.kl = 0.5 * (uV.squaredNorm() + kl_constant_part(params.Dvar));
    if (W_star.size() > 0) {
        const double parallel = (W_star.transpose() * x).squaredNorm() / d;
        out.distortion = out.reconstruction - (xx - parallel) / (2.0 * config.sigma2);
    }
    return out;
}

double elbo_loss(const VAEParameters& params, const Eigen::VectorXd& x, const VAEConfig& config) {
    const SampleLoss s = sample_loss(params, x, Eigen::MatrixXd(), config);
    return s.reconstruction + config.beta * s.kl;
}

double objective(const VAEParameters& params, const DataMoments& data, const VAEConfig& config) {
    check_shapes(params, data.d);
    check_dvar(params.Dvar);
    const double d = data.d;
    const Eigen::MatrixXd CV = data.C * params.V;
    const Eigen::MatrixXd S = params.V.transpose() * CV;  // sum_mu uV uV^T
    const Eigen::MatrixXd Q = params.W.transpose() * params.W / d;
    const double cross = (params.W.transpose() * CV).trace();
    const double recon = data.trace - 2.0 * cross + data.n * (Q * params.Dvar.asDiagonal()).trace() + (Q * S).trace();
    const double kl = S.trace() + data.n * kl_constant_part(params.Dvar);
    const double ridge = params.W.squaredNorm() + params.V.squaredNorm();
    return recon / (2.0 * config.sigma2) + 0.5 * config.beta * kl + 0.5 * config.lambda * ridge;
}

double objective(const VAEParameters& params, const Dataset& dataset, const VAEConfig& config) {
    return objective(params, DataMoments::from(dataset.X), config);
}

ParameterGradients gradients(const VAEParameters& params, const DataMoments& data, const VAEConfig& config) {
    check_shapes(params, data.d);
    check_dvar(params.Dvar);
    const double d = data.d;
    const double s2 = config.sigma2;
    const Eigen::MatrixXd CV = data.C * params.V;
    const Eigen::MatrixXd CW = data.C * params.W;
    const Eigen::MatrixXd S = params.V.transpose() * CV;
    const Eigen::MatrixXd Q = params.W.transpose() * params.W / d;

    ParameterGradients g;
    g.W = -CV / s2 + params.W * (data.n * Eigen::MatrixXd(params.Dvar.asDiagonal()) + S) / (d * s2) +
          config.lambda * params.W;
    g.V = -CW / s2 + CV * Q / s2 + config.beta * CV + config.lambda * params.V;
    g.Dvar = (0.5 * data.n) * (Q.diagonal() / s2 +
                               config.beta * (Eigen::VectorXd::Ones(params.Dvar.size()) - params.Dvar.cwiseInverse()));
    return g;
}

ParameterGradients gradients(const VAEParameters& params, const Dataset& dataset, const VAEConfig& config) {
    return gradients(params, DataMoments::from(dataset.X), config);
}

Eigen::VectorXd optimal_variational_variance(const Eigen::VectorXd& Q_diag, const VAEConfig& config) {
    if (!(config.beta > 0.0)) throw DomainError("optimal variational variance is degenerate at beta = 0");
    const double bs = config.beta * config.sigma2;
    Eigen::VectorXd D(Q_diag.size());
    for (Eigen::Index l = 0; l < Q_diag.size(); ++l) {
        if (!(Q_diag[l] >= 0.0)) throw InvalidArgument("Q_ll must be >= 0");
        D[l] = bs / (Q_diag[l] + bs);
    }
    return D;
}

SummaryStatistics empirical_summary_stats(const VAEParameters& params, const Eigen::MatrixXd& W_star) {
    if (params.W.cols() < 1 || W_star.cols() < 1) throw InvalidArgument("empty latent or signal dimension");
    if (W_star.rows() != params.W.rows()) throw InvalidArgument("W_star rows do not match d");
    const double d = params.W.rows();
    const auto w = params.W.col(0);
    const auto v = params.V.col(0);
    const auto ws = W_star.col(0);
    SummaryStatistics s;
    s.Q = w.squaredNorm() / d;
    s.E = v.squaredNorm() / d;
    s.R = w.dot(v) / d;
    s.m = w.dot(ws) / d;
    s.b = v.dot(ws) / d;
    s.chi = s.zeta = s.omega = SummaryStatistics::not_applicable;
    return s;
}

double signal_recovery_error(const SummaryStatistics& summary, double rho, int k, int k_star) {
    if (k != 1 || k_star != 1) throw InvalidArgument("scalar summary statistics describe k = k* = 1 only");
    if (!(rho >= 0.0)) throw InvalidArgument("rho must be >= 0");
    return rho - 2.0 * std::sqrt(rho) * summary.m + summary.Q;
}

double signal_recovery_error(const VAEParameters& params, const Eigen::MatrixXd& W_star, double rho) {
    if (params.W.cols() != W_star.cols()) throw InvalidArgument("signal recovery error needs k = k*");
    const double d = params.W.rows();
    return (std::sqrt(rho) * W_star - params.W).squaredNorm() / d;
}

double empirical_rate(const VAEParameters& params, const Dataset& dataset) {
    check_shapes(params, dataset.d());
    check_dvar(params.Dvar);
    const Eigen::MatrixXd U = dataset.X * params.V / std::sqrt(static_cast<double>(dataset.d()));
    return 0.5 * (U.squaredNorm() / dataset.n() + kl_constant_part(params.Dvar));
}

double empirical_distortion(const VAEParameters& params, const Dataset& dataset, const VAEConfig& config) {
    check_shapes(params, dataset.d());
    check_dvar(params.Dvar);
    const double d = dataset.d();
    const double n = dataset.n();
    const double sd = std::sqrt(d);
    const Eigen::MatrixXd UW = dataset.X * params.W / sd;
    const Eigen::MatrixXd UV = dataset.X * params.V / sd;
    const Eigen::MatrixXd Q = params.W.transpose() * params.W / d;
    const double parallel = (dataset.X * dataset.W_star).squaredNorm() / d;
    const double cross = (UW.array() * UV.array()).sum();
    const double quad = n * (Q * params.Dvar.asDiagonal()).trace() + (Q * (UV.transpose() * UV)).trace();
    return (parallel - 2.0 * cross + quad) / (2.0 * config.sigma2 * n);
}

double collapse_fraction(const VAEParameters& params, const Dataset& dataset, double epsilon) {
    if (!(epsilon >= 0.0)) throw InvalidArgument("epsilon must be >= 0");
    check_shapes(params, dataset.d());
    check_dvar(params.Dvar);
    const Eigen::MatrixXd U = dataset.X * params.V / std::sqrt(static_cast<double>(dataset.d()));
    long count = 0;
    for (Eigen::Index l = 0; l < U.cols(); ++l) {
        const double Dl = params.Dvar[l];
        const double base = Dl - std::log(Dl) - 1.0;
        for (Eigen::Index mu = 0; mu < U.rows(); ++mu)
            if (0.5 * (U(mu, l) * U(mu, l) + base) < epsilon) ++count;
    }
    return static_cast<double>(count) / static_cast<double>(U.size());
}

double posterior_kl_true_vs_variational(const VAEParameters& params, const Dataset& dataset,
                                        const VAEConfig& config) {
    check_shapes(params, dataset.d());
    check_dvar(params.Dvar);
    const double d = dataset.d();
    const int k = params.k();
    const double s2 = config.sigma2;
    // true posterior: precision P = I + Q/sigma2, mean P^{-1} W^T x/(sqrt(d) sigma2)
    const Eigen::MatrixXd P = Eigen::MatrixXd::Identity(k, k) + params.W.transpose() * params.W / (d * s2);
    const Eigen::LLT<Eigen::MatrixXd> llt(P);
    const Eigen::MatrixXd Pinv = llt.solve(Eigen::MatrixXd::Identity(k, k));
    // per-sample mean difference u_V - mu_p = M^T x/sqrt(d)
    const Eigen::MatrixXd M = params.V - params.W * Pinv / s2;
    const Eigen::MatrixXd Delta = dataset.X * M / std::sqrt(d);
    const Eigen::VectorXd Dinv = params.Dvar.cwiseInverse();
    const double mean_quad = (Delta.array().square().rowwise() * Dinv.transpose().array()).sum() / dataset.n();
    double logdetP = 0.0;
    for (int l = 0; l < k; ++l) logdetP += 2.0 * std::log(llt.matrixL()(l, l));
    const double trace_term = (Dinv.asDiagonal() * Pinv).trace();
    return 0.5 * (trace_term + mean_quad - k + params.Dvar.array().log().sum() + logdetP);
}

MetricsReport evaluate_metrics(const VAEParameters& params, const Dataset& dataset, const VAEConfig& config,
                               double collapse_epsilon) {
    MetricsReport r;
    r.summary = empirical_summary_stats(params, dataset.W_star);
    r.eps_g = signal_recovery_error(params, dataset.W_star, dataset.config.rho);
    r.rate = empirical_rate(params, dataset);
    r.distortion = empirical_distortion(params, dataset, config);
    r.kl_true_vs_var = posterior_kl_true_vs_variational(params, dataset, config);
    r.collapse_fraction = collapse_fraction(params, dataset, collapse_epsilon);
    return r;
}

}  // namespace vaelab
