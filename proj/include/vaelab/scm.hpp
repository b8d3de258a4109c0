#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace vaelab {

struct GenerativeConfig {
    double rho = 1.0;
    double eta = 1.0;
    int d = 1000;
    int k_star = 1;
    double alpha = 4.0;

    /// round(alpha*d), at least 1.
    int n() const;
    void validate() const;
};

struct Dataset {
    GenerativeConfig config;
    Eigen::MatrixXd X;       // n x d, samples as rows
    Eigen::MatrixXd W_star;  // d x k_star, W*^T W* = d I
    Eigen::MatrixXd C;       // n x k_star latent codes
    std::uint64_t seed = 0;

    int n() const { return static_cast<int>(X.rows()); }
    int d() const { return static_cast<int>(X.cols()); }
};

Eigen::MatrixXd generate_signal_matrix(int d, int k_star, std::uint64_t seed);

/// Fresh samples from the model with a given feature matrix. The codes and the
/// noise are drawn from the Latent/Noise streams of `seed`.
Dataset generate_samples(const GenerativeConfig& config, const Eigen::MatrixXd& W_star, std::uint64_t seed);

/// W* from the Signal stream of `seed`, then generate_samples with the same seed.
Dataset generate_dataset(const GenerativeConfig& config, std::uint64_t seed);

/// The n x d standard-normal noise matrix N used by generate_samples(config, ., seed).
Eigen::MatrixXd noise_realization(const GenerativeConfig& config, std::uint64_t seed);

/// Gram matrix X^T X / d (d x d). The VAE objective depends on the data only
/// through this matrix and tr(X^T X).
Eigen::MatrixXd gram_over_d(const Eigen::MatrixXd& X);

/// Eigenvalues of X^T X / n, descending.
std::vector<double> covariance_spectrum(const Dataset& dataset);
std::vector<double> covariance_spectrum(const Eigen::MatrixXd& X);

/// Upper edge eta (1 + 1/sqrt(alpha))^2 of the Marchenko-Pastur bulk.
double marchenko_pastur_upper_edge(double eta, double alpha);

/// Mean of the lowest `fraction` of the probability mass of the unit-scale
/// Marchenko-Pastur law with aspect ratio gamma = d/n (point mass at zero
/// included when gamma > 1).
double marchenko_pastur_lower_mean(double gamma, double fraction);

struct NoiseEstimate {
    double eta_hat = 0.0;
    double bulk_entry_variance = 0.0;  // ||X P_bulk||_F^2 / (n d)
    int leading_components = 0;
    int bulk_components = 0;
};

/// PCA split at the cumulative explained-variance ratio; the bulk part is
/// rescaled by the Marchenko-Pastur mean of the retained quantile range.
NoiseEstimate estimate_noise(const Dataset& dataset, double cumulative_rate);
double estimate_noise_strength(const Dataset& dataset, double cumulative_rate);

/// 16-byte header ("SCMD", u32 n, u32 d, u32 0) then X row-major, little-endian f64.
void write_dataset_binary(const Dataset& dataset, const std::string& path);
Eigen::MatrixXd read_dataset_binary(const std::string& path);

void write_spectrum_csv(const std::vector<double>& eigenvalues, const std::string& path);

}  // namespace vaelab
