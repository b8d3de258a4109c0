#include "vaelab/serialize.hpp"

#include <cmath>
#include <limits>

#include "vaelab/error.hpp"

namespace vaelab {

using nlohmann::json;

json json_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

double number_from_json(const json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
        try {
            std::size_t pos = 0;
            const double v = std::stod(s, &pos);
            if (pos == s.size()) return v;
        } catch (const std::exception&) {
        }
    }
    throw InvalidArgument("expected a number, got " + j.dump());
}

namespace {

json optional_number(double v) { return std::isnan(v) ? json(nullptr) : json_number(v); }

}  // namespace

json to_json(const SummaryStatistics& s) {
    return {{"Q", json_number(s.Q)},           {"E", json_number(s.E)},
            {"R", json_number(s.R)},           {"m", json_number(s.m)},
            {"b", json_number(s.b)},           {"chi", optional_number(s.chi)},
            {"zeta", optional_number(s.zeta)}, {"omega", optional_number(s.omega)}};
}

json to_json(const ConjugateStatistics& c) {
    return {{"hatQ", json_number(c.hatQ)},       {"hatE", json_number(c.hatE)},
            {"hatR", json_number(c.hatR)},       {"hatm", json_number(c.hatm)},
            {"hatb", json_number(c.hatb)},       {"hatchi", json_number(c.hatchi)},
            {"hatzeta", json_number(c.hatzeta)}, {"hatomega", json_number(c.hatomega)}};
}

json to_json(const FixedPointResult& r) {
    return {{"alpha", json_number(r.point.alpha)},
            {"beta", json_number(r.point.beta)},
            {"lambda", json_number(r.point.lambda)},
            {"rho", json_number(r.point.rho)},
            {"eta", json_number(r.point.eta)},
            {"stats", to_json(r.stats)},
            {"conj", to_json(r.conj)},
            {"residual", json_number(r.residual)},
            {"free_energy", json_number(r.free_energy)},
            {"iterations", r.iterations},
            {"converged", r.converged},
            {"branch", to_string(r.branch)},
            {"stationarity", json_number(r.stationarity)},
            {"damping_used", json_number(r.damping_used)},
            {"restarts", r.restarts},
            {"regularized", r.regularized}};
}

json to_json(const AsymptoticMetrics& m) {
    return {{"eps_g", json_number(m.eps_g)}, {"rate", json_number(m.rate)}, {"distortion", json_number(m.distortion)}};
}

json to_json(const MetricsReport& m) {
    return {{"summary", to_json(m.summary)},
            {"eps_g", json_number(m.eps_g)},
            {"rate", json_number(m.rate)},
            {"distortion", json_number(m.distortion)},
            {"kl_true_vs_var", json_number(m.kl_true_vs_var)},
            {"collapse_fraction", json_number(m.collapse_fraction)}};
}

json to_json(const MetricSummary& s) {
    return {{"mean", json_number(s.mean)},
            {"se", json_number(s.se)},
            {"predicted", json_number(s.predicted)},
            {"z", json_number(s.z)}};
}

json to_json(const ComparisonReport& r) {
    json runs = json::array();
    for (const SeedRun& run : r.runs) {
        json j = {{"seed", run.seed}, {"ok", run.ok}};
        if (run.ok) {
            j["train"] = to_json(run.train_metrics);
            j["heldout"] = to_json(run.heldout_metrics);
            j["steps"] = run.training.steps;
            j["grad_norm"] = json_number(run.training.grad_norm);
            j["converged"] = run.training.converged;
        } else {
            j["error"] = run.error;
        }
        runs.push_back(std::move(j));
    }
    return {{"alpha", json_number(r.point.alpha)},
            {"beta", json_number(r.point.beta)},
            {"lambda", json_number(r.point.lambda)},
            {"rho", json_number(r.point.rho)},
            {"eta", json_number(r.point.eta)},
            {"d", r.d},
            {"replica", to_json(r.replica)},
            {"replica_metrics", to_json(r.replica_metrics)},
            {"eps_g", to_json(r.eps_g)},
            {"m", to_json(r.m)},
            {"Q", to_json(r.Q)},
            {"E", to_json(r.E)},
            {"R", to_json(r.R)},
            {"b", to_json(r.b)},
            {"rate", to_json(r.rate)},
            {"distortion", to_json(r.distortion)},
            {"max_abs_z", json_number(r.max_abs_z)},
            {"runs", runs}};
}

json to_json(const SolverOptions& o) {
    json j = {{"damping", o.damping},     {"tol", o.tol},
              {"max_iter", o.max_iter},   {"init", to_string(o.init)},
              {"seed", o.seed},           {"ridge_eps", o.ridge_eps},
              {"max_restarts", o.max_restarts}, {"stall_window", o.stall_window}};
    return j;
}

json to_json(const TrainConfig& t) {
    return {{"optimizer", t.optimizer == Optimizer::LineSearch ? "linesearch" : "adam"},
            {"max_steps", t.max_steps},
            {"grad_tol_per_dim", t.grad_tol_per_dim},
            {"closed_form_dvar", t.closed_form_dvar},
            {"dvar_floor", t.dvar_floor},
            {"init_scale", t.init_scale},
            {"adam_lr", t.adam_lr},
            {"seed", t.seed}};
}

}  // namespace vaelab
