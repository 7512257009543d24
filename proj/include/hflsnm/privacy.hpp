#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "hflsnm/errors.hpp"
#include "hflsnm/rng.hpp"

namespace hflsnm::dp {

struct DpConfig {
    double epsilon = 80.0;
    double delta = 0.01;
    double clip_threshold = 10.0; // W, L2 bound on the flattened parameter vector
    double client_exposures = 1.0; // C^n, model exposures per accounting window
    double server_exposures = 1.0; // C^k

    void validate() const {
        if (epsilon <= 0.0) throw ConfigError("privacy budget epsilon must be positive");
        if (delta <= 0.0 || delta >= 1.0) throw ConfigError("delta must lie in (0, 1)");
        if (clip_threshold <= 0.0) throw ConfigError("clipping threshold must be positive");
        if (client_exposures < 0.0 || server_exposures < 0.0)
            throw ConfigError("exposure counts must be nonnegative");
    }

    // Gaussian-mechanism scaling coefficient, fixed by the failure probability.
    double scaling_coeff() const { return std::sqrt(2.0 * std::log(1.25 / delta)); }
};

// Client-side noise scale for one upload: sensitivity of the weighted edge
// average with respect to one client's record is 2W/D_n.
inline double uplink_sigma(const DpConfig& cfg, long long data_size) {
    cfg.validate();
    if (data_size < 1) throw ArgumentError("data size must be >= 1");
    return cfg.scaling_coeff() * cfg.client_exposures * (2.0 * cfg.clip_threshold / static_cast<double>(data_size)) /
           cfg.epsilon;
}

struct ClusterClient {
    long long data_size = 0;
    double exposures = 1.0; // C^n
};

// Server-side noise for one broadcast. The clients' uplink noise already
// contributes (1/m^2) * sum(sigma_up^2) of variance to the aggregate; the
// server only tops up the difference, which is positive iff Q > 0.
inline std::pair<double, double> downlink_sigma(const DpConfig& cfg,
                                                const std::vector<ClusterClient>& cluster,
                                                long long cluster_data_size,
                                                double server_exposures) {
    cfg.validate();
    if (cluster.empty()) throw ArgumentError("cluster must be non-empty");
    long long total = 0;
    for (const auto& c : cluster) {
        if (c.data_size < 1) throw ArgumentError("data size must be >= 1");
        total += c.data_size;
    }
    if (total != cluster_data_size)
        throw ArgumentError("cluster data size does not match the member sizes");

    const double m = static_cast<double>(cluster.size());
    const double agg = server_exposures / static_cast<double>(cluster_data_size);
    double member_term = 0.0;
    for (const auto& c : cluster) {
        const double r = c.exposures / static_cast<double>(c.data_size);
        member_term += r * r;
    }
    const double q = agg * agg - member_term / (m * m);
    const double sigma = q > 0.0 ? 2.0 * cfg.scaling_coeff() * cfg.clip_threshold * std::sqrt(q) / cfg.epsilon : 0.0;
    return {q, sigma};
}

// L2-clip the parameter vector to threshold w, then add iid zero-mean
// Gaussian noise of scale sigma per coordinate. sigma = 0 clips only.
inline std::vector<double> clip_and_noise(const std::vector<double>& model, double sigma, double w,
                                          Rng& rng) {
    if (sigma < 0.0) throw ArgumentError("noise scale must be nonnegative");
    if (w <= 0.0) throw ArgumentError("clipping threshold must be positive");
    double norm_sq = 0.0;
    for (double v : model) norm_sq += v * v;
    const double norm = std::sqrt(norm_sq);
    const double scale = norm > w ? w / norm : 1.0;
    std::vector<double> out(model.size());
    for (std::size_t i = 0; i < model.size(); ++i) {
        out[i] = model[i] * scale + (sigma > 0.0 ? rng.normal(0.0, sigma) : 0.0);
    }
    return out;
}

// Additive Gaussian perturbation without clipping (server-side broadcast noise).
inline std::vector<double> add_noise(const std::vector<double>& model, double sigma, Rng& rng) {
    if (sigma < 0.0) throw ArgumentError("noise scale must be nonnegative");
    std::vector<double> out(model.size());
    for (std::size_t i = 0; i < model.size(); ++i) {
        out[i] = model[i] + (sigma > 0.0 ? rng.normal(0.0, sigma) : 0.0);
    }
    return out;
}

} // namespace hflsnm::dp
