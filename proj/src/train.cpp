#include "vaelab/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "vaelab/rng.hpp"

namespace vaelab {

void TrainConfig::validate() const {
    if (max_steps < 0) throw InvalidArgument("max_steps must be >= 0");
    if (!(grad_tol_per_dim >= 0.0)) throw InvalidArgument("grad_tol_per_dim must be >= 0");
    if (!(dvar_floor > 0.0)) throw InvalidArgument("dvar_floor must be > 0");
    if (!(init_scale >= 0.0)) throw InvalidArgument("init_scale must be >= 0");
    if (!(adam_lr > 0.0)) throw InvalidArgument("adam_lr must be > 0");
    if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw InvalidArgument("armijo_c must lie in (0,1)");
}

VAEParameters initial_parameters(int d, const VAEConfig& config, const TrainConfig& tc) {
    auto engine = make_engine(tc.seed, Stream::Init);
    VAEParameters p;
    p.W = tc.init_scale * standard_normal(d, config.k, engine);
    p.V = tc.init_scale * standard_normal(d, config.k, engine);
    p.Dvar = Eigen::VectorXd::Ones(config.k);
    return p;
}

namespace {

enum class DvarMode { Stationary, Fixed, Free };

/// Iterate with the products C W and C V carried along, so a trial point
/// x - t g costs O(dk^2) once C g is known.
struct State {
    Eigen::MatrixXd W, V, CW, CV;
    Eigen::VectorXd logD;
};

class Problem {
public:
    Problem(const DataMoments& data, const VAEConfig& cfg, const TrainConfig& tc)
        : data_(data), cfg_(cfg), tc_(tc) {
        if (cfg.beta == 0.0)
            mode_ = DvarMode::Fixed;
        else
            mode_ = tc.closed_form_dvar ? DvarMode::Stationary : DvarMode::Free;
    }

    DvarMode mode() const { return mode_; }

    void refresh_products(State& s) const {
        s.CW.noalias() = data_.C * s.W;
        s.CV.noalias() = data_.C * s.V;
    }

    void settle_dvar(State& s) const {
        if (mode_ == DvarMode::Fixed) {
            s.logD.setConstant(cfg_.k, std::log(tc_.dvar_floor));
        } else if (mode_ == DvarMode::Stationary) {
            const Eigen::VectorXd q = s.W.colwise().squaredNorm().transpose() / data_.d;
            s.logD = optimal_variational_variance(q, cfg_).array().log();
        }
    }

    /// Objective without the constant tr(X^T X)/(2 sigma2).
    double value(const State& s) const {
        const double d = data_.d;
        const Eigen::VectorXd D = s.logD.array().exp();
        const Eigen::MatrixXd S = s.V.transpose() * s.CV;
        const Eigen::MatrixXd Q = s.W.transpose() * s.W / d;
        const double cross = (s.W.transpose() * s.CV).trace();
        const double recon = -2.0 * cross + data_.n * (Q.diagonal().dot(D)) + (Q * S).trace();
        const double klc = D.sum() - s.logD.sum() - static_cast<double>(D.size());
        const double kl = S.trace() + data_.n * klc;
        return recon / (2.0 * cfg_.sigma2) + 0.5 * cfg_.beta * kl +
               0.5 * cfg_.lambda * (s.W.squaredNorm() + s.V.squaredNorm());
    }

    void gradient(const State& s, Eigen::MatrixXd& gW, Eigen::MatrixXd& gV, Eigen::VectorXd& gLogD) const {
        const double d = data_.d;
        const double s2 = cfg_.sigma2;
        const Eigen::VectorXd D = s.logD.array().exp();
        const Eigen::MatrixXd S = s.V.transpose() * s.CV;
        const Eigen::MatrixXd Q = s.W.transpose() * s.W / d;
        Eigen::MatrixXd M = S;
        M.diagonal() += data_.n * D;
        gW = -s.CV / s2 + s.W * M / (d * s2) + cfg_.lambda * s.W;
        gV = -s.CW / s2 + s.CV * Q / s2 + cfg_.beta * s.CV + cfg_.lambda * s.V;
        if (mode_ == DvarMode::Free) {
            const Eigen::VectorXd gD =
                (0.5 * data_.n) * (Q.diagonal() / s2 + cfg_.beta * (Eigen::VectorXd::Ones(D.size()) - D.cwiseInverse()));
            gLogD = gD.cwiseProduct(D);
        } else {
            gLogD.setZero(cfg_.k);
        }
    }

    const DataMoments& data() const { return data_; }

private:
    const DataMoments& data_;
    const VAEConfig& cfg_;
    const TrainConfig& tc_;
    DvarMode mode_;
};

VAEParameters to_params(const State& s) { return {s.W, s.V, s.logD.array().exp()}; }

double grad_norm(const Eigen::MatrixXd& gW, const Eigen::MatrixXd& gV, const Eigen::VectorXd& gL) {
    return std::sqrt(gW.squaredNorm() + gV.squaredNorm() + gL.squaredNorm());
}

class Trace {
public:
    explicit Trace(const std::string& path) {
        if (path.empty()) return;
        os_.open(path);
        if (!os_) throw Error("cannot open trace file " + path);
        os_.precision(17);
        os_ << "step,objective,grad_norm\n";
    }
    void add(int step, double obj, double g) {
        if (os_.is_open()) os_ << step << ',' << obj << ',' << g << '\n';
    }

private:
    std::ofstream os_;
};

TrainResult run_line_search(const Problem& prob, State s, const TrainConfig& tc, double constant, double tol) {
    Trace trace(tc.trace_path);
    const DataMoments& data = prob.data();
    Eigen::MatrixXd gW, gV, gW_prev, gV_prev, CgW, CgV;
    Eigen::VectorXd gL, gL_prev;
    State prev;
    double f = prob.value(s);
    if (!std::isfinite(f)) throw TrainingDiverged("objective is not finite at the initial point", to_params(s));
    // curvature scale of the W block: ~ n/d + largest diagonal of C + lambda
    double t = 1.0 / (data.C.diagonal().maxCoeff() + static_cast<double>(data.n) / data.d + 1.0);

    TrainResult res;
    int step = 0;
    for (;; ++step) {
        prob.gradient(s, gW, gV, gL);
        const double gn = grad_norm(gW, gV, gL);
        trace.add(step, f + constant, gn);
        res.grad_norm = gn;
        if (gn <= tol) {
            res.converged = true;
            break;
        }
        if (step >= tc.max_steps) break;

        if (step > 0) {
            const double sy = (s.W - prev.W).cwiseProduct(gW - gW_prev).sum() +
                              (s.V - prev.V).cwiseProduct(gV - gV_prev).sum() +
                              (s.logD - prev.logD).dot(gL - gL_prev);
            const double ss = (s.W - prev.W).squaredNorm() + (s.V - prev.V).squaredNorm() +
                              (s.logD - prev.logD).squaredNorm();
            t = sy > 0.0 ? ss / sy : 2.0 * t;
        }
        CgW.noalias() = data.C * gW;
        CgV.noalias() = data.C * gV;

        State trial;
        double ft = std::numeric_limits<double>::infinity();
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            trial.W = s.W - t * gW;
            trial.V = s.V - t * gV;
            trial.CW = s.CW - t * CgW;
            trial.CV = s.CV - t * CgV;
            trial.logD = s.logD - t * gL;
            prob.settle_dvar(trial);
            ft = prob.value(trial);
            if (std::isfinite(ft) && ft <= f - tc.armijo_c * t * gn * gn) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;  // no representable decrease left
        prev = std::move(s);
        gW_prev = gW;
        gV_prev = gV;
        gL_prev = gL;
        s = std::move(trial);
        if ((step + 1) % 25 == 0) {
            prob.refresh_products(s);
            ft = prob.value(s);
        }
        f = ft;
    }
    res.steps = step;
    res.objective = f + constant;
    res.params = to_params(s);
    return res;
}

TrainResult run_adam(const Problem& prob, State s, const TrainConfig& tc, double constant, double tol) {
    Trace trace(tc.trace_path);
    Eigen::MatrixXd gW, gV;
    Eigen::VectorXd gL;
    Eigen::MatrixXd mW = Eigen::MatrixXd::Zero(s.W.rows(), s.W.cols()), vW = mW, mV = mW, vV = mW;
    Eigen::VectorXd mL = Eigen::VectorXd::Zero(s.logD.size()), vL = mL;
    const double b1 = tc.adam_beta1, b2 = tc.adam_beta2, eps = 1e-12;
    VAEParameters last_finite = to_params(s);

    TrainResult res;
    int step = 0;
    double f = 0.0;
    for (;; ++step) {
        prob.refresh_products(s);
        f = prob.value(s);
        if (!std::isfinite(f)) throw TrainingDiverged("objective became non-finite", last_finite);
        last_finite = to_params(s);
        prob.gradient(s, gW, gV, gL);
        const double gn = grad_norm(gW, gV, gL);
        trace.add(step, f + constant, gn);
        res.grad_norm = gn;
        if (gn <= tol) {
            res.converged = true;
            break;
        }
        if (step >= tc.max_steps) break;
        const double c1 = 1.0 - std::pow(b1, step + 1);
        const double c2 = 1.0 - std::pow(b2, step + 1);
        auto update = [&](auto& x, const auto& g, auto& m, auto& v) {
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
            x.array() -= tc.adam_lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
        };
        update(s.W, gW, mW, vW);
        update(s.V, gV, mV, vV);
        if (prob.mode() == DvarMode::Free) update(s.logD, gL, mL, vL);
        prob.settle_dvar(s);
    }
    res.steps = step;
    res.objective = f + constant;
    res.params = to_params(s);
    return res;
}

}  // namespace

TrainResult train(const Dataset& dataset, const DataMoments& moments, const VAEConfig& config,
                  const TrainConfig& tc) {
    config.validate();
    tc.validate();
    if (moments.d != dataset.d() || moments.n != dataset.n()) throw InvalidArgument("moments do not match dataset");
    const Problem prob(moments, config, tc);
    const VAEParameters init = initial_parameters(dataset.d(), config, tc);
    State s;
    s.W = init.W;
    s.V = init.V;
    s.logD = init.Dvar.array().log();
    prob.settle_dvar(s);
    prob.refresh_products(s);

    const double constant = moments.trace / (2.0 * config.sigma2);
    const double tol = tc.grad_tol_per_dim * dataset.d();
    TrainResult res = tc.optimizer == Optimizer::LineSearch ? run_line_search(prob, std::move(s), tc, constant, tol)
                                                            : run_adam(prob, std::move(s), tc, constant, tol);
    if (!std::isfinite(res.objective)) throw TrainingDiverged("objective is not finite", res.params);

    if (tc.normalize_sign && dataset.W_star.cols() > 0) {
        const double m = res.params.W.col(0).dot(dataset.W_star.col(0));
        if (m < 0.0) {
            res.params.W = -res.params.W;
            res.params.V = -res.params.V;
        }
    }
    return res;
}

TrainResult train(const Dataset& dataset, const VAEConfig& config, const TrainConfig& tc) {
    return train(dataset, DataMoments::from(dataset.X), config, tc);
}

}  // namespace vaelab
