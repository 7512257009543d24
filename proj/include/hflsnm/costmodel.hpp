#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "hflsnm/errors.hpp"

namespace hflsnm::cost {

// Radio and compute parameters of one client.
struct ClientRadioCompute {
    double tx_power_w = 0.5;          // p_n
    double carrier_freq_ghz = 2.0;    // f_n
    double cycles_per_sample = 90822; // C
    int local_iters = 5;              // lambda_n
    double capacitance = 2e-28;       // alpha
    double nu_min_hz = 1e9;
    double nu_max_hz = 10e9;
    double model_bits = 0.0;          // z
};

struct CostBreakdown {
    double t_cmp = 0.0;
    double t_com = 0.0;
    double e_cmp = 0.0;
    double e_com = 0.0;
};

// Local-training latency and energy at CPU frequency nu.
inline std::pair<double, double> compute_cost(long long data_size, double nu_hz,
                                              const ClientRadioCompute& p) {
    if (data_size < 1) throw ArgumentError("data size must be >= 1");
    if (nu_hz < p.nu_min_hz || nu_hz > p.nu_max_hz)
        throw ArgumentError("cpu frequency outside [nu_min, nu_max]");
    const double cycles = static_cast<double>(p.local_iters) * p.cycles_per_sample *
                          static_cast<double>(data_size);
    const double t = cycles / nu_hz;
    const double e = 0.5 * p.capacitance * cycles * nu_hz * nu_hz;
    return {t, e};
}

// Shannon uplink rate in bits/s.
inline double comm_rate(double bandwidth_hz, double gain, double tx_power_w, double n0_w_per_hz) {
    if (bandwidth_hz <= 0.0) throw ArgumentError("bandwidth must be positive");
    if (gain <= 0.0) throw ArgumentError("channel gain must be positive");
    if (n0_w_per_hz <= 0.0) throw ArgumentError("noise density must be positive");
    if (tx_power_w < 0.0) throw ArgumentError("tx power must be nonnegative");
    return bandwidth_hz * std::log2(1.0 + gain * tx_power_w / (bandwidth_hz * n0_w_per_hz));
}

// Upload latency and energy for z bits.
inline std::pair<double, double> comm_cost(double z_bits, double bandwidth_hz, double gain,
                                           double tx_power_w, double n0_w_per_hz) {
    if (z_bits < 0.0) throw ArgumentError("model size must be nonnegative");
    if (z_bits == 0.0) return {0.0, 0.0};
    const double r = comm_rate(bandwidth_hz, gain, tx_power_w, n0_w_per_hz);
    if (r <= 0.0) throw InfeasibleError("link rate is zero, upload impossible", -1);
    const double t = z_bits / r;
    return {t, tx_power_w * t};
}

// Per-round totals over a set of clients running tau edge iterations each.
inline std::pair<double, double> round_totals(const std::vector<CostBreakdown>& per_client, int tau) {
    if (tau < 1) throw ArgumentError("tau must be >= 1");
    double t_total = 0.0;
    double e_total = 0.0;
    for (const auto& c : per_client) {
        t_total = std::max(t_total, tau * (c.t_cmp + c.t_com));
        e_total += tau * (c.e_cmp + c.e_com);
    }
    return {t_total, e_total};
}

// Inputs for the selection-level energy bound: one entry per selected client.
struct BoundClient {
    long long data_size = 0;
    int local_iters = 1;
    double tx_power_w = 0.5;
};

struct EnergyBound {
    double value = 0.0;
    // Clients whose compute term alone exceeds the deadline at nu_max; the
    // bound is vacuous for them.
    std::vector<int> infeasible_clients;
};

// Closed-form upper bound on the optimal per-round energy of a selection:
// every client pinned at nu_max and granted the full remaining latency budget
// for its upload.
inline EnergyBound energy_upper_bound(const std::vector<BoundClient>& clients, int tau,
                                      double deadline_s, double nu_max_hz,
                                      double cycles_per_sample, double capacitance) {
    if (tau < 1) throw ArgumentError("tau must be >= 1");
    EnergyBound out;
    double sum = 0.0;
    for (std::size_t i = 0; i < clients.size(); ++i) {
        const auto& c = clients[i];
        const double cycles = static_cast<double>(c.local_iters) * cycles_per_sample *
                              static_cast<double>(c.data_size);
        const double t_cmp_max = cycles / nu_max_hz;
        if (deadline_s < t_cmp_max) out.infeasible_clients.push_back(static_cast<int>(i));
        sum += 0.5 * capacitance * cycles * nu_max_hz * nu_max_hz +
               c.tx_power_w * (deadline_s - t_cmp_max);
    }
    out.value = tau * sum;
    return out;
}

} // namespace hflsnm::cost
