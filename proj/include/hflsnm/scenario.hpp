#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "hflsnm/costmodel.hpp"
#include "hflsnm/errors.hpp"
#include "hflsnm/mobility.hpp"
#include "hflsnm/resource_alloc.hpp"

namespace hflsnm {

// One client's state for a global round: position, radio parameters, data.
struct ClientState {
    int id = 0;
    mob::MobilityState mobility;
    double tx_power_w = 0.5;
    double carrier_freq_ghz = 2.0;
    long long data_size = 0;
    int local_iters = 1;
};

// System-wide radio/compute constants shared by all servers and clients.
struct SharedParams {
    double bandwidth_hz = 10e6;        // B_0 per edge server
    double n0_w_per_hz = 4e-21;        // N0
    double deadline_s = 0.2;           // t0
    int tau = 1;                       // edge iterations per global round
    double nu_min_hz = 1e9;
    double nu_max_hz = 10e9;
    double cycles_per_sample = 90822;  // C
    double capacitance = 2e-28;        // alpha
    double model_bits = 0.0;           // z
};

// Geometry, channel state and parameters of one global round.
struct Scenario {
    std::vector<ClientState> clients;
    std::vector<mob::EdgeServerSite> servers;
    SharedParams params;
    mob::Arena arena;
    double step_seconds = 10.0;

    const ClientState& client(int id) const {
        if (id < 0 || id >= static_cast<int>(clients.size()))
            throw ArgumentError("unknown client id " + std::to_string(id));
        return clients[static_cast<std::size_t>(id)];
    }

    double distance_to(int client_id, int es_id) const {
        return mob::distance(client(client_id).mobility.position,
                             servers.at(static_cast<std::size_t>(es_id)).position);
    }

    double gain(int client_id, int es_id) const {
        return mob::channel_gain(client(client_id).mobility.position,
                                 servers.at(static_cast<std::size_t>(es_id)),
                                 client(client_id).carrier_freq_ghz);
    }

    bool in_coverage(int client_id, int es_id) const {
        return distance_to(client_id, es_id) <=
               servers.at(static_cast<std::size_t>(es_id)).coverage_radius_m;
    }

    std::vector<int> coverable_servers(int client_id) const {
        std::vector<int> out;
        for (const auto& es : servers) {
            if (in_coverage(client_id, es.id)) out.push_back(es.id);
        }
        return out;
    }

    // Nearest in-coverage server, ties by id; -1 when none covers the client.
    int nearest_server(int client_id) const {
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (const auto& es : servers) {
            const double d = distance_to(client_id, es.id);
            if (d <= es.coverage_radius_m && d < best_d) {
                best_d = d;
                best = es.id;
            }
        }
        return best;
    }

    // X_n = lambda_n * C * D_n
    double cycles(int client_id) const {
        const auto& c = client(client_id);
        return static_cast<double>(c.local_iters) * params.cycles_per_sample *
               static_cast<double>(c.data_size);
    }
};

// Single-server allocation instance for a client subset.
inline alloc::P1Instance make_p1_instance(const Scenario& scen, std::span<const int> client_ids,
                                          int es_id) {
    alloc::P1Instance inst;
    inst.bandwidth_hz = scen.servers.at(static_cast<std::size_t>(es_id)).bandwidth_hz;
    inst.n0_w_per_hz = scen.params.n0_w_per_hz;
    inst.deadline_s = scen.params.deadline_s;
    inst.tau = scen.params.tau;
    inst.nu_min_hz = scen.params.nu_min_hz;
    inst.nu_max_hz = scen.params.nu_max_hz;
    inst.model_bits = scen.params.model_bits;
    inst.capacitance = scen.params.capacitance;
    for (int id : client_ids) {
        inst.clients.push_back({scen.cycles(id), scen.gain(id, es_id), scen.client(id).tx_power_w});
    }
    return inst;
}

} // namespace hflsnm
