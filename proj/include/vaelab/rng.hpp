#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace vaelab {

/// Named sub-streams derived from one user seed. Each stream gets its own
/// engine, so e.g. the noise realisation does not shift when the signal
/// rank changes.
enum class Stream : std::uint64_t {
    Signal = 1,
    Latent = 2,
    Noise = 3,
    Init = 4,
    Solver = 5,
};

/// SplitMix64 finaliser; used to decorrelate (seed, stream, index) keys.
std::uint64_t mix64(std::uint64_t x);

/// Seed of the held-out sample paired with the training set of `seed`.
std::uint64_t heldout_seed(std::uint64_t seed);

/// Engine for a (seed, stream, index) triple. `index` lets callers split a
/// stream further (one engine per seed in a sweep, per chunk, ...).
std::mt19937_64 make_engine(std::uint64_t seed, Stream stream, std::uint64_t index = 0);

/// rows x cols matrix of i.i.d. standard normals, filled column-major.
Eigen::MatrixXd standard_normal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& engine);

}  // namespace vaelab
