#pragma once

#include <limits>

namespace vaelab {

/// Order parameters of a rank-one model. Q = W^T W/d, E = V^T V/d,
/// R = W^T V/d, m = W^T W*/d, b = V^T W*/d; chi, zeta, omega are the
/// response functions paired with Q, E, R.
struct SummaryStatistics {
    double Q = 0.0;
    double E = 0.0;
    double R = 0.0;
    double m = 0.0;
    double b = 0.0;
    double chi = 0.0;
    double zeta = 0.0;
    double omega = 0.0;

    /// Marker for chi/zeta/omega when the statistics come from one finite-d
    /// minimiser rather than from the saddle point.
    static constexpr double not_applicable = std::numeric_limits<double>::quiet_NaN();
};

struct ConjugateStatistics {
    double hatQ = 0.0;
    double hatE = 0.0;
    double hatR = 0.0;
    double hatm = 0.0;
    double hatb = 0.0;
    double hatchi = 0.0;
    double hatzeta = 0.0;
    double hatomega = 0.0;
};

}  // namespace vaelab
