#include "vaelab/rng.hpp"

namespace vaelab {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t heldout_seed(std::uint64_t seed) { return mix64(seed ^ 0x68656c646f7574ULL); }

std::mt19937_64 make_engine(std::uint64_t seed, Stream stream, std::uint64_t index) {
    const std::uint64_t key = mix64(mix64(mix64(seed) ^ static_cast<std::uint64_t>(stream)) ^ index);
    std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(stream)};
    return std::mt19937_64(seq);
}

Eigen::MatrixXd standard_normal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& engine) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd out(rows, cols);
    double* data = out.data();
    for (Eigen::Index i = 0; i < out.size(); ++i) data[i] = normal(engine);
    return out;
}

}  // namespace vaelab
