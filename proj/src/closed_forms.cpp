#include <cmath>
#include <limits>

#include "vaelab/error.hpp"
#include "vaelab/replica.hpp"

namespace vaelab {

AsymptoticMetrics asymptotic_metrics(const SummaryStatistics& s, double beta, double rho, double eta) {
    const double qb = s.Q + beta;
    if (!(qb > 0.0)) throw DomainError("asymptotic metrics need Q + beta > 0");
    const double Dvar = beta / qb;
    const double code_power = rho * s.b * s.b + eta * s.E;  // E_x[(V^T x)^2]/d
    AsymptoticMetrics out;
    out.eps_g = rho - 2.0 * std::sqrt(rho) * s.m + s.Q;
    out.rate = beta > 0.0 ? 0.5 * (code_power + Dvar - 1.0 - std::log(Dvar))
                          : (s.Q > 0.0 ? std::numeric_limits<double>::infinity() : 0.5 * code_power);
    out.distortion = 0.5 * (rho + eta - 2.0 * (rho * s.m * s.b + eta * s.R) + s.Q * (code_power + Dvar));
    return out;
}

LargeAlphaLimit large_alpha_limit(double beta, double rho, double eta) {
    if (!(beta >= 0.0)) throw InvalidArgument("beta must be >= 0");
    if (!(eta > 0.0)) throw InvalidArgument("eta must be > 0");
    if (!(rho >= 0.0)) throw InvalidArgument("rho must be >= 0");
    const double power = rho + eta;
    LargeAlphaLimit out;
    if (beta < power) {
        const double Q = power - beta;
        out.stats.Q = Q;
        out.stats.m = std::sqrt(Q);
        out.stats.b = out.stats.m / power;
        out.stats.E = Q / (power * power);
        out.stats.R = Q / power;
        out.eps_g = rho - out.stats.m * (2.0 * std::sqrt(rho) - out.stats.m);
        out.rate = beta > 0.0 ? 0.5 * std::log(power / beta) : std::numeric_limits<double>::infinity();
        out.distortion = 0.5 * beta;
    } else {
        out.eps_g = rho;
        out.rate = 0.0;
        out.distortion = 0.5 * power;
    }
    return out;
}

double collapse_threshold(double rho, double eta) { return rho + eta; }

double collapse_stability_eigenvalue(double beta, double rho, double eta) {
    if (beta == eta) throw DomainError("linearisation around collapse is singular at beta = eta");
    return rho / (beta - eta);
}

double gaussian_source_rd(double distortion, double rho, double eta) {
    if (!(distortion > 0.0)) throw DomainError("distortion must be > 0");
    const double half_power = 0.5 * (rho + eta);
    return distortion < half_power ? 0.5 * std::log(half_power / distortion) : 0.0;
}

}  // namespace vaelab
