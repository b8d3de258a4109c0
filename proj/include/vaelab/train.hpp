#pragma once

#include <cstdint>
#include <string>

#include "vaelab/error.hpp"
#include "vaelab/linear_vae.hpp"

namespace vaelab {

enum class Optimizer { LineSearch, Adam };

struct TrainConfig {
    Optimizer optimizer = Optimizer::LineSearch;
    int max_steps = 200000;
    /// Stop once ||grad||_F <= grad_tol_per_dim * d.
    double grad_tol_per_dim = 1e-7;
    /// Replace Dvar by its stationary value after every step (beta > 0 only).
    bool closed_form_dvar = true;
    /// Fixed Dvar used at beta = 0.
    double dvar_floor = 1e-8;
    double init_scale = 1.0;  // W, V entries ~ N(0, init_scale^2)
    double adam_lr = 1e-2;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double armijo_c = 1e-4;
    /// Flip (W, V) jointly so that the first overlap with W* is >= 0.
    bool normalize_sign = true;
    std::uint64_t seed = 0;
    std::string trace_path;  // optional CSV: step,objective,grad_norm

    void validate() const;
};

struct TrainResult {
    VAEParameters params;
    double objective = 0.0;
    double grad_norm = 0.0;
    int steps = 0;
    bool converged = false;
};

/// Objective turned non-finite; `last_finite` holds the last iterate with a finite objective.
class TrainingDiverged : public Error {
public:
    TrainingDiverged(const std::string& what, VAEParameters last_finite)
        : Error(what), last_finite(std::move(last_finite)) {}
    VAEParameters last_finite;
};

VAEParameters initial_parameters(int d, const VAEConfig& config, const TrainConfig& tc);

TrainResult train(const Dataset& dataset, const VAEConfig& config, const TrainConfig& tc);
/// Same as above with precomputed moments of dataset.X.
TrainResult train(const Dataset& dataset, const DataMoments& moments, const VAEConfig& config,
                  const TrainConfig& tc);

}  // namespace vaelab
