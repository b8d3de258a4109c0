#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "vaelab/error.hpp"
#include "vaelab/replica.hpp"

namespace vaelab {

namespace {

using Eigen::Matrix2d;
using Eigen::Vector2d;

constexpr double kLogFloor = 1e-14;

Matrix2d sym(double a, double off, double c) {
    Matrix2d M;
    M << a, off, off, c;
    return M;
}

double log_term(double Q, double beta) {
    if (beta <= 0.0) return 0.0;
    return 0.5 * beta * std::log(std::max(Q + beta, kLogFloor) / beta);
}

// Free energy in scalar type T; the numerical stationarity check runs in
// long double because the coupling terms grow like alpha and cancel.
template <typename T>
T free_energy_value(const std::array<T, 16>& x, const ModelPoint& p) {
    using M2 = Eigen::Matrix<T, 2, 2>;
    using V2 = Eigen::Matrix<T, 2, 1>;
    const T Q = x[0], E = x[1], R = x[2], chi = x[3], zeta = x[4], omega = x[5], m = x[6], b = x[7];
    const T beta = p.beta, rho = p.rho, eta = p.eta, alpha = p.alpha, lambda = p.lambda;
    M2 Gh, gh, G, g, A;
    Gh << x[8], x[10], x[10], x[9];
    gh << x[11], x[13], x[13], x[12];
    G << Q, R, R, E;
    g << chi, omega, omega, zeta;
    const V2 ph(x[14], x[15]);
    const V2 psi(m, b);
    const M2 Mh = Gh + lambda * M2::Identity();
    const T det = Mh.determinant();
    if (!(std::abs(det) > T(1e-300)) || !std::isfinite(static_cast<double>(det)))
        throw DomainError("conjugate matrix is singular");
    const M2 Mi = Mh.inverse();

    const T qb = Q + beta;
    const T c = std::sqrt(rho * eta);
    A << T(0), eta, eta, -eta * qb;
    const V2 B(-c * b, c * (qb * b - m));
    const M2 IAg = M2::Identity() - A * g;
    const T detK = IAg.determinant();
    if (!(std::abs(detK) > T(1e-300))) throw DomainError("I - A g is singular");
    const M2 K = IAg.inverse();
    const T Tr = (K * (A * G * A + B * B.transpose()) * g).trace();
    const T S1 = rho * (T(2) * m * b - qb * b * b);
    const T trAG = eta * (T(2) * R - qb * E);
    T logt = T(0);
    if (beta > T(0)) logt = T(0.5) * beta * std::log(std::max(qb, T(kLogFloor)) / beta);
    const T phi = T(-0.5) * (S1 + trAG + Tr) + logt;

    const T coupling = T(-0.5) * (Gh * G).trace() + T(0.5) * (gh * g).trace() + ph.dot(psi);
    const T prior = T(-0.5) * ((Mi * gh).trace() + ph.dot(Mi * ph));
    return coupling + prior + alpha * phi;
}

template <typename T>
std::array<T, 16> pack16(const SummaryStatistics& s, const ConjugateStatistics& c) {
    return {s.Q, s.E, s.R, s.chi, s.zeta, s.omega, s.m, s.b,
            c.hatQ, c.hatE, c.hatR, c.hatchi, c.hatzeta, c.hatomega, c.hatm, c.hatb};
}

}  // namespace

EnergyTerm energy_term(const SummaryStatistics& s, double beta, double rho, double eta) {
    const double qb = s.Q + beta;
    const double c = std::sqrt(rho * eta);
    const Matrix2d G = sym(s.Q, s.R, s.E);
    const Matrix2d g = sym(s.chi, s.omega, s.zeta);
    Matrix2d A;
    A << 0.0, eta, eta, -eta * qb;
    const Vector2d B(-c * s.b, c * (qb * s.b - s.m));

    const Matrix2d IAg = Matrix2d::Identity() - A * g;
    const double det = IAg.determinant();
    if (!(std::abs(det) > 1e-300) || !std::isfinite(det)) throw DomainError("I - A g is singular");
    const Matrix2d K = IAg.inverse();
    const Matrix2d M = A * G * A + B * B.transpose();
    const Matrix2d KM = K * M;
    const double T = (KM * g).trace();
    const double S1 = rho * (2.0 * s.m * s.b - qb * s.b * s.b);
    const double trAG = eta * (2.0 * s.R - qb * s.E);

    EnergyTerm out;
    out.value = -0.5 * (S1 + trAG + T) + log_term(s.Q, beta);

    // dT with respect to the blocks, treated as unconstrained 2x2 matrices
    const Matrix2d gK = g * K;
    const Matrix2d Gam_g = (KM * gK * A + KM).transpose();
    const Matrix2d Gam_G = (A * gK * A).transpose();
    const Matrix2d Gam_A = (g * KM * gK + G * A * gK + gK * A * G).transpose();
    const Vector2d dTdB = K.transpose() * g * B + gK * B;

    const double dT_Q = Gam_G(0, 0) - eta * Gam_A(1, 1) + c * s.b * dTdB(1);
    const double dT_E = Gam_G(1, 1);
    const double dT_R = Gam_G(0, 1) + Gam_G(1, 0);
    const double dT_chi = Gam_g(0, 0);
    const double dT_zeta = Gam_g(1, 1);
    const double dT_omega = Gam_g(0, 1) + Gam_g(1, 0);
    const double dT_m = -c * dTdB(1);
    const double dT_b = -c * dTdB(0) + c * qb * dTdB(1);

    const double dlog_Q = (beta > 0.0 && qb > kLogFloor) ? 0.5 * beta / qb : 0.0;
    out.grad[0] = -0.5 * (-rho * s.b * s.b - eta * s.E + dT_Q) + dlog_Q;
    out.grad[1] = -0.5 * (-eta * qb + dT_E);
    out.grad[2] = -0.5 * (2.0 * eta + dT_R);
    out.grad[3] = -0.5 * dT_chi;
    out.grad[4] = -0.5 * dT_zeta;
    out.grad[5] = -0.5 * dT_omega;
    out.grad[6] = -0.5 * (2.0 * rho * s.b + dT_m);
    out.grad[7] = -0.5 * (rho * (2.0 * s.m - 2.0 * qb * s.b) + dT_b);
    return out;
}

ConjugateStatistics conjugates_from(const SummaryStatistics& s, const ModelPoint& p) {
    const EnergyTerm e = energy_term(s, p.beta, p.rho, p.eta);
    const double a = p.alpha;
    ConjugateStatistics c;
    c.hatQ = 2.0 * a * e.grad[0];
    c.hatE = 2.0 * a * e.grad[1];
    c.hatR = a * e.grad[2];
    c.hatchi = -2.0 * a * e.grad[3];
    c.hatzeta = -2.0 * a * e.grad[4];
    c.hatomega = -a * e.grad[5];
    c.hatm = -a * e.grad[6];
    c.hatb = -a * e.grad[7];
    return c;
}

SummaryStatistics statistics_from(const ConjugateStatistics& c, double lambda, double ridge_eps, bool* regularized) {
    Matrix2d Mh = sym(c.hatQ + lambda, c.hatR, c.hatE + lambda);
    if (std::abs(Mh.determinant()) < ridge_eps) {
        Mh += ridge_eps * Matrix2d::Identity();
        if (regularized) *regularized = true;
    }
    const double det = Mh.determinant();
    if (!(std::abs(det) > 0.0) || !std::isfinite(det)) throw DomainError("conjugate matrix is singular");
    const Matrix2d Mi = Mh.inverse();
    const Matrix2d gh = sym(c.hatchi, c.hatomega, c.hatzeta);
    const Vector2d ph(c.hatm, c.hatb);
    const Vector2d psi = Mi * ph;
    const Matrix2d G = Mi * (gh + ph * ph.transpose()) * Mi;

    SummaryStatistics s;
    s.Q = G(0, 0);
    s.E = G(1, 1);
    s.R = 0.5 * (G(0, 1) + G(1, 0));
    s.chi = Mi(0, 0);
    s.zeta = Mi(1, 1);
    s.omega = 0.5 * (Mi(0, 1) + Mi(1, 0));
    s.m = psi(0);
    s.b = psi(1);
    return s;
}

SummaryStatistics update_map(const SummaryStatistics& s, const ModelPoint& p, double ridge_eps, bool* regularized) {
    return statistics_from(conjugates_from(s, p), p.lambda, ridge_eps, regularized);
}

double free_energy_k1(const SummaryStatistics& s, const ConjugateStatistics& c, double alpha, double beta,
                      double lambda, double rho, double eta) {
    const ModelPoint p{alpha, beta, lambda, rho, eta};
    return static_cast<double>(free_energy_value<long double>(pack16<long double>(s, c), p));
}

std::array<double, 16> free_energy_numerical_gradient(const SummaryStatistics& stats, const ConjugateStatistics& conj,
                                                      const ModelPoint& p) {
    using LD = long double;
    const std::array<LD, 16> x = pack16<LD>(stats, conj);
    auto central = [&](int i, LD h) {
        auto up = x, dn = x;
        up[i] += h;
        dn[i] -= h;
        return (free_energy_value(up, p) - free_energy_value(dn, p)) / (LD(2) * h);
    };
    std::array<double, 16> grad{};
    for (int i = 0; i < 16; ++i) {
        const LD h = LD(1e-4) * std::max(LD(1), std::abs(x[i]));
        grad[i] = static_cast<double>((LD(4) * central(i, h / 2) - central(i, h)) / LD(3));
    }
    return grad;
}

}  // namespace vaelab
