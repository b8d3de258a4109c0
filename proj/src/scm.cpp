#include "vaelab/scm.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "vaelab/error.hpp"
#include "vaelab/rng.hpp"

namespace vaelab {

int GenerativeConfig::n() const {
    return std::max(1, static_cast<int>(std::lround(alpha * d)));
}

void GenerativeConfig::validate() const {
    if (!(rho >= 0.0) || !std::isfinite(rho)) throw InvalidArgument("rho must be finite and >= 0");
    if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidArgument("eta must be finite and > 0");
    if (d < 1) throw InvalidArgument("d must be >= 1");
    if (k_star < 1) throw InvalidArgument("k_star must be >= 1");
    if (k_star > d) throw InvalidArgument("invalid rank: k_star > d");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidArgument("alpha must be finite and > 0");
}

Eigen::MatrixXd generate_signal_matrix(int d, int k_star, std::uint64_t seed) {
    if (d < 1 || k_star < 1) throw InvalidArgument("d and k_star must be positive");
    if (k_star > d) throw InvalidArgument("invalid rank: k_star > d");
    auto engine = make_engine(seed, Stream::Signal);
    const Eigen::MatrixXd G = standard_normal(d, k_star, engine);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
    Eigen::MatrixXd W = qr.householderQ() * Eigen::MatrixXd::Identity(d, k_star);
    const double scale = std::sqrt(static_cast<double>(d));
    for (int j = 0; j < k_star; ++j) W.col(j) *= scale / W.col(j).norm();
    return W;
}

Eigen::MatrixXd noise_realization(const GenerativeConfig& config, std::uint64_t seed) {
    auto engine = make_engine(seed, Stream::Noise);
    return standard_normal(config.n(), config.d, engine);
}

Dataset generate_samples(const GenerativeConfig& config, const Eigen::MatrixXd& W_star, std::uint64_t seed) {
    config.validate();
    if (W_star.rows() != config.d || W_star.cols() != config.k_star)
        throw InvalidArgument("W_star shape does not match the generative config");
    Dataset ds;
    ds.config = config;
    ds.seed = seed;
    ds.W_star = W_star;
    auto latent = make_engine(seed, Stream::Latent);
    ds.C = standard_normal(config.n(), config.k_star, latent);
    ds.X = noise_realization(config, seed);
    ds.X *= std::sqrt(config.eta);
    ds.X.noalias() += std::sqrt(config.rho / config.d) * (ds.C * W_star.transpose());
    return ds;
}

Dataset generate_dataset(const GenerativeConfig& config, std::uint64_t seed) {
    config.validate();
    return generate_samples(config, generate_signal_matrix(config.d, config.k_star, seed), seed);
}

Eigen::MatrixXd gram_over_d(const Eigen::MatrixXd& X) {
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(X.cols(), X.cols());
    C.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose(), 1.0 / static_cast<double>(X.cols()));
    return C.selfadjointView<Eigen::Lower>();
}

std::vector<double> covariance_spectrum(const Eigen::MatrixXd& X) {
    if (X.rows() < 2) throw InvalidArgument("covariance spectrum needs n >= 2");
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(X.cols(), X.cols());
    S.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose(), 1.0 / static_cast<double>(X.rows()));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw Error("eigen decomposition failed");
    const Eigen::VectorXd& ev = eig.eigenvalues();
    std::vector<double> out(ev.size());
    // eigenvalues come ascending; PSD, so round-off negatives are clipped
    for (Eigen::Index i = 0; i < ev.size(); ++i) out[i] = std::max(0.0, ev[ev.size() - 1 - i]);
    return out;
}

std::vector<double> covariance_spectrum(const Dataset& dataset) { return covariance_spectrum(dataset.X); }

double marchenko_pastur_upper_edge(double eta, double alpha) {
    if (!(alpha > 0.0)) throw InvalidArgument("alpha must be > 0");
    const double s = 1.0 + 1.0 / std::sqrt(alpha);
    return eta * s * s;
}

double marchenko_pastur_lower_mean(double gamma, double fraction) {
    if (!(gamma > 0.0)) throw InvalidArgument("gamma must be > 0");
    if (!(fraction > 0.0 && fraction <= 1.0)) throw InvalidArgument("fraction must lie in (0,1]");
    const double atom = gamma > 1.0 ? 1.0 - 1.0 / gamma : 0.0;
    if (fraction <= atom) return 0.0;
    const double a = (1.0 - std::sqrt(gamma)) * (1.0 - std::sqrt(gamma));
    const double b = (1.0 + std::sqrt(gamma)) * (1.0 + std::sqrt(gamma));
    const double half = 0.5 * (b - a);
    // x = a + half (1 - cos t) removes the square-root endpoints; midpoint rule in t
    constexpr int steps = 20000;
    const double dt = std::numbers::pi / steps;
    const double need = fraction - atom;
    double mass = 0.0, moment = 0.0;
    for (int i = 0; i < steps; ++i) {
        const double t = (i + 0.5) * dt;
        const double x = a + half * (1.0 - std::cos(t));
        const double s = std::sin(t);
        const double dm = half * half * s * s / (2.0 * std::numbers::pi * gamma * x) * dt;
        if (mass + dm >= need) {
            moment += x * (need - mass);
            mass = need;
            break;
        }
        mass += dm;
        moment += x * dm;
    }
    return moment / fraction;
}

NoiseEstimate estimate_noise(const Dataset& dataset, double cumulative_rate) {
    if (!(cumulative_rate > 0.0 && cumulative_rate < 1.0))
        throw InvalidArgument("cumulative_rate must lie in (0,1)");
    const std::vector<double> ev = covariance_spectrum(dataset);
    const int d = static_cast<int>(ev.size());
    double total = 0.0;
    for (double v : ev) total += v;
    if (!(total > 0.0)) throw DomainError("dataset has zero variance");

    int k = 0;
    double cum = 0.0;
    while (k < d && cum < cumulative_rate * total) cum += ev[k++];
    if (k >= d) throw DomainError("no bulk components left after the leading split");

    // projecting X on the bulk eigenvectors leaves exactly the bulk eigenvalues
    double bulk = 0.0;
    for (int i = k; i < d; ++i) bulk += ev[i];

    NoiseEstimate est;
    est.leading_components = k;
    est.bulk_components = d - k;
    est.bulk_entry_variance = bulk / d;
    const double fraction = static_cast<double>(d - k) / d;
    const double gamma = static_cast<double>(d) / dataset.n();
    const double mp_mean = marchenko_pastur_lower_mean(gamma, fraction);
    if (!(mp_mean > 0.0)) throw DomainError("bulk lies entirely in the zero eigenvalue mass");
    est.eta_hat = (bulk / (d - k)) / mp_mean;
    return est;
}

double estimate_noise_strength(const Dataset& dataset, double cumulative_rate) {
    return estimate_noise(dataset, cumulative_rate).eta_hat;
}

namespace {

template <typename T>
T to_little(T v) {
    if constexpr (std::endian::native == std::endian::little) return v;
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    std::reverse(b, b + sizeof(T));
    std::memcpy(&v, b, sizeof(T));
    return v;
}

template <typename T>
void put(std::ostream& os, T v) {
    v = to_little(v);
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    return to_little(v);
}

}  // namespace

void write_dataset_binary(const Dataset& dataset, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open " + path + " for writing");
    os.write("SCMD", 4);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(dataset.X.rows()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(dataset.X.cols()));
    put<std::uint32_t>(os, 0u);
    for (Eigen::Index i = 0; i < dataset.X.rows(); ++i)
        for (Eigen::Index j = 0; j < dataset.X.cols(); ++j) put<double>(os, dataset.X(i, j));
    if (!os) throw Error("write failed: " + path);
}

Eigen::MatrixXd read_dataset_binary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "SCMD", 4) != 0) throw Error("bad magic in " + path);
    const auto n = get<std::uint32_t>(is);
    const auto d = get<std::uint32_t>(is);
    (void)get<std::uint32_t>(is);
    Eigen::MatrixXd X(n, d);
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = 0; j < d; ++j) X(i, j) = get<double>(is);
    if (!is) throw Error("truncated dataset file: " + path);
    return X;
}

void write_spectrum_csv(const std::vector<double>& eigenvalues, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open " + path + " for writing");
    os.precision(17);
    os << "index,eigenvalue\n";
    for (std::size_t i = 0; i < eigenvalues.size(); ++i) os << i << ',' << eigenvalues[i] << '\n';
    if (!os) throw Error("write failed: " + path);
}

}  // namespace vaelab
