#pragma once

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "hflsnm/errors.hpp"
#include "hflsnm/rng.hpp"

namespace hflsnm::mob {

inline constexpr double kMaxSpeedMps = 100.0 / 3.6; // 100 km/h
inline constexpr double kMinPathDistM = 1.0;        // pathloss distance clamp

struct Position {
    double x = 0.0;
    double y = 0.0;
};

inline double distance(const Position& a, const Position& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

struct Arena {
    double width = 1000.0;
    double height = 1000.0;
};

struct MobilityState {
    Position position;
    double speed_mps = 0.0;     // fixed per client
    double direction_rad = 0.0; // redrawn every round, in [0, 2*pi)
};

struct EdgeServerSite {
    int id = 0;
    Position position;
    double bandwidth_hz = 10e6;       // B_0
    double coverage_radius_m = 2000.0;
};

namespace detail {
// Fold a coordinate back into [0, limit] by reflection.
inline double reflect(double v, double limit) {
    if (limit <= 0.0) return 0.0;
    const double period = 2.0 * limit;
    v = std::fmod(v, period);
    if (v < 0.0) v += period;
    return v > limit ? period - v : v;
}
} // namespace detail

// Advance one client by dt seconds along its current heading, reflect at the
// arena boundary, and draw the heading for the next round.
inline MobilityState step_mobility(const MobilityState& s, double dt, const Arena& arena, Rng& rng) {
    if (dt <= 0.0) throw ArgumentError("mobility step requires dt > 0");
    MobilityState next = s;
    next.position.x = detail::reflect(s.position.x + s.speed_mps * std::cos(s.direction_rad) * dt, arena.width);
    next.position.y = detail::reflect(s.position.y + s.speed_mps * std::sin(s.direction_rad) * dt, arena.height);
    next.direction_rad = rng.uniform(0.0, 2.0 * std::numbers::pi);
    return next;
}

// Urban-macro pathloss in dB; f in GHz, distance in meters.
inline double pathloss_db(double dist_m, double carrier_freq_ghz) {
    if (carrier_freq_ghz <= 0.0) throw ArgumentError("carrier frequency must be positive");
    const double d = std::max(dist_m, kMinPathDistM);
    return 32.4 + 20.0 * std::log10(carrier_freq_ghz) + 30.0 * std::log10(d);
}

// Channel fading coefficient h between a client position and an edge server.
inline double channel_gain(const Position& client, const EdgeServerSite& es, double carrier_freq_ghz) {
    return std::pow(10.0, -pathloss_db(distance(client, es.position), carrier_freq_ghz) / 10.0);
}

// Static edge-server grid plus randomly placed mobile clients. Servers sit at
// the centers of a ceil(sqrt(K)) x ceil(K/cols) grid; clients are uniform over
// the arena restricted to the union of the coverage disks.
inline std::pair<std::vector<EdgeServerSite>, std::vector<MobilityState>>
place_scenario(int n_es, const Arena& arena, int n_clients, Rng& rng,
               double coverage_radius_m = 2000.0, double bandwidth_hz = 10e6) {
    if (n_es < 1 || n_clients < 1) throw ConfigError("need at least one edge server and one client");
    if (arena.width <= 0.0 || arena.height <= 0.0) throw ConfigError("arena too small for the server grid");

    const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_es))));
    const int rows = (n_es + cols - 1) / cols;
    std::vector<EdgeServerSite> servers;
    servers.reserve(static_cast<std::size_t>(n_es));
    for (int k = 0; k < n_es; ++k) {
        const int row = k / cols;
        const int col = k % cols;
        EdgeServerSite es;
        es.id = k;
        es.position = {(col + 0.5) * arena.width / cols, (row + 0.5) * arena.height / rows};
        es.coverage_radius_m = coverage_radius_m;
        es.bandwidth_hz = bandwidth_hz;
        servers.push_back(es);
    }

    auto covered = [&](const Position& p) {
        for (const auto& es : servers) {
            if (distance(p, es.position) <= es.coverage_radius_m) return true;
        }
        return false;
    };

    std::vector<MobilityState> clients;
    clients.reserve(static_cast<std::size_t>(n_clients));
    for (int n = 0; n < n_clients; ++n) {
        Position p;
        int attempts = 0;
        do {
            if (++attempts > 100000)
                throw ConfigError("no arena point lies inside any server's coverage");
            p = {rng.uniform(0.0, arena.width), rng.uniform(0.0, arena.height)};
        } while (!covered(p));
        MobilityState s;
        s.position = p;
        s.speed_mps = rng.uniform(0.0, kMaxSpeedMps);
        s.direction_rad = rng.uniform(0.0, 2.0 * std::numbers::pi);
        clients.push_back(s);
    }
    return {std::move(servers), std::move(clients)};
}

} // namespace hflsnm::mob
