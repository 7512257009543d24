#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "hflsnm/costmodel.hpp"
#include "hflsnm/edge_assoc.hpp"
#include "hflsnm/errors.hpp"
#include "hflsnm/rng.hpp"
#include "hflsnm/scenario.hpp"
#include "hflsnm/socialnet.hpp"

namespace hflsnm::select {

struct SelectionBounds {
    double h_bar = 0.0;  // per-server client cap
    int h = 0;           // community-wide upper bound
    int l = 0;           // greedy lower bound
    double r_ef_max = 0.0;
};

// Mean-value inputs of the capacity equation.
struct CapacityParams {
    double mean_data = 0.0;          // D-bar, samples
    double mean_nu_hz = 0.0;         // nu-bar
    double mean_power_w = 0.0;       // p-bar
    double mean_gain = 0.0;          // h-bar
    double bandwidth_hz = 10e6;      // B_0
    double n0_w_per_hz = 4e-21;
    double model_bits = 0.0;         // z
    double deadline_s = 0.2;         // t0
    int mean_local_iters = 1;        // lambda at the mean client
    double cycles_per_sample = 90822;
    int n_servers = 1;               // K
    int community_size = 1;          // |U|
};

// Left-hand side of the capacity equation minus the deadline: mean compute
// latency plus mean upload latency when the band is split H-bar ways.
// Strictly increasing in h_bar.
inline double capacity_gap(const CapacityParams& p, double h_bar) {
    const double t_cmp = static_cast<double>(p.mean_local_iters) * p.cycles_per_sample *
                         p.mean_data / p.mean_nu_hz;
    double t_com = 0.0;
    if (p.model_bits > 0.0) {
        const double b = p.bandwidth_hz / h_bar;
        t_com = p.model_bits / (b * std::log2(1.0 + p.mean_gain * p.mean_power_w / (b * p.n0_w_per_hz)));
    }
    return t_cmp + t_com - p.deadline_s;
}

// Average-client estimate of the largest schedulable client count: per-server
// cap h_bar solving the capacity equation, total bound H = floor(K * h_bar),
// both capped by the community size.
inline std::pair<double, int> client_cap(const CapacityParams& p) {
    if (p.mean_data <= 0.0 || p.mean_nu_hz <= 0.0 || p.n_servers < 1 || p.community_size < 1)
        throw ArgumentError("capacity estimate requires positive mean parameters");
    const double cap = static_cast<double>(p.community_size) / p.n_servers;
    if (capacity_gap(p, std::min(1.0, cap)) > 0.0)
        throw CapacityError("not even one client per server fits the deadline on average");
    double h_bar;
    if (capacity_gap(p, cap) <= 0.0) {
        h_bar = cap; // unconstrained by the deadline (e.g. tiny models)
    } else {
        double lo = 1.0;
        double hi = cap;
        for (int i = 0; i < 200 && (hi - lo) > 1e-12 * hi; ++i) {
            const double mid = 0.5 * (lo + hi);
            (capacity_gap(p, mid) <= 0.0 ? lo : hi) = mid;
        }
        h_bar = lo;
    }
    const int h = std::clamp(static_cast<int>(std::floor(p.n_servers * h_bar)), 1, p.community_size);
    return {h_bar, h};
}

// Greedy max-coverage order over the whole community: repeatedly take the
// client with the largest marginal effective-data gain, ties by id. Returns
// the pick order with cumulative effective sizes.
inline std::vector<std::pair<int, long long>> greedy_coverage_order(const net::SocialGraph& g) {
    const int n = g.client_count();
    std::vector<char> covered(g.blocks().size(), 0);
    std::vector<char> picked(static_cast<std::size_t>(n), 0);
    std::vector<std::pair<int, long long>> order;
    long long covered_size = 0;
    for (int step = 0; step < n; ++step) {
        int best = -1;
        long long best_gain = -1;
        for (int u = 0; u < n; ++u) {
            if (picked[static_cast<std::size_t>(u)]) continue;
            long long gain = 0;
            for (int b : g.blocks_of(u)) {
                if (!covered[static_cast<std::size_t>(b)]) gain += g.blocks()[static_cast<std::size_t>(b)].size;
            }
            if (gain > best_gain) {
                best_gain = gain;
                best = u;
            }
        }
        picked[static_cast<std::size_t>(best)] = 1;
        for (int b : g.blocks_of(best)) covered[static_cast<std::size_t>(b)] = 1;
        covered_size += best_gain;
        order.push_back({best, covered_size});
    }
    return order;
}

// Coverage rate attainable with at most `h` greedily chosen clients.
inline double r_ef_max(const net::SocialGraph& g, int h) {
    if (h < 1) throw ArgumentError("client budget must be >= 1");
    const auto order = greedy_coverage_order(g);
    const std::size_t idx = std::min<std::size_t>(order.size(), static_cast<std::size_t>(h)) - 1;
    return static_cast<double>(order[idx].second) / static_cast<double>(g.unique_size());
}

// Smallest greedy prefix reaching the coverage requirement.
inline int lower_bound_L(const net::SocialGraph& g, double r_ef0) {
    if (r_ef0 <= 0.0 || r_ef0 > 1.0) throw ArgumentError("coverage requirement must lie in (0, 1]");
    const auto order = greedy_coverage_order(g);
    const double target = r_ef0 * static_cast<double>(g.unique_size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (static_cast<double>(order[i].second) >= target) return static_cast<int>(i) + 1;
    }
    throw ConstraintError("coverage requirement r_ef0 exceeds the attainable maximum; lower r_ef0");
}

inline SelectionBounds selection_bounds(const net::SocialGraph& g, const CapacityParams& cap,
                                        double r_ef0) {
    SelectionBounds b;
    const auto [h_bar, h] = client_cap(cap);
    b.h_bar = h_bar;
    b.h = h;
    b.r_ef_max = r_ef_max(g, h);
    if (r_ef0 > b.r_ef_max) {
        throw ConstraintError("coverage requirement r_ef0=" + std::to_string(r_ef0) +
                              " exceeds the attainable maximum " + std::to_string(b.r_ef_max) +
                              " under the client budget; lower r_ef0");
    }
    b.l = lower_bound_L(g, r_ef0);
    if (b.l > b.h) b.l = b.h;
    return b;
}

struct SelectionPlan {
    std::vector<int> selection; // sorted client ids
    int size = 0;
    double r_ef = 0.0;
    double epsilon_s = 0.0; // effective/redundant ratio; +inf when redundancy is zero
    double b_s = 0.0;       // energy upper bound, J
    double g_s = 0.0;       // normalized quality factor
};

// B_S of a selection under the scenario's shared parameters.
inline cost::EnergyBound selection_energy_bound(const Scenario& scen, std::span<const int> sel) {
    std::vector<cost::BoundClient> clients;
    clients.reserve(sel.size());
    for (int id : sel) {
        const auto& c = scen.client(id);
        clients.push_back({c.data_size, c.local_iters, c.tx_power_w});
    }
    return cost::energy_upper_bound(clients, scen.params.tau, scen.params.deadline_s,
                                    scen.params.nu_max_hz, scen.params.cycles_per_sample,
                                    scen.params.capacitance);
}

namespace detail {

// One threshold-rule candidate of size m: a client qualifies for the random
// pick when its marginal effective gain meets the per-remaining-slot quota.
inline std::vector<int> threshold_candidate(const net::SocialGraph& g, int m, double r_ef0,
                                            Rng& rng) {
    const int n = g.client_count();
    std::vector<char> covered(g.blocks().size(), 0);
    std::vector<char> in_r(static_cast<std::size_t>(n), 1);
    std::vector<int> owners_in_r(g.blocks().size(), 0);
    for (std::size_t i = 0; i < g.blocks().size(); ++i) {
        owners_in_r[i] = g.blocks()[i].shared() ? 2 : 1;
    }
    long long remaining_union = g.unique_size();

    std::vector<int> sel;
    std::vector<int> qualified;
    for (int slots = m; slots > 0; --slots) {
        const double quota = static_cast<double>(remaining_union) * r_ef0 / slots;
        qualified.clear();
        int best = -1;
        long long best_gain = -1;
        for (int u = 0; u < n; ++u) {
            if (!in_r[static_cast<std::size_t>(u)]) continue;
            long long gain = 0;
            for (int b : g.blocks_of(u)) {
                if (!covered[static_cast<std::size_t>(b)]) gain += g.blocks()[static_cast<std::size_t>(b)].size;
            }
            if (static_cast<double>(gain) >= quota) qualified.push_back(u);
            if (gain > best_gain) {
                best_gain = gain;
                best = u;
            }
        }
        const int pick = qualified.empty() ? best : qualified[rng.index(qualified.size())];
        sel.push_back(pick);
        in_r[static_cast<std::size_t>(pick)] = 0;
        for (int b : g.blocks_of(pick)) {
            covered[static_cast<std::size_t>(b)] = 1;
            --owners_in_r[static_cast<std::size_t>(b)];
        }
        remaining_union = 0;
        for (std::size_t i = 0; i < g.blocks().size(); ++i) {
            if (owners_in_r[i] > 0) remaining_union += g.blocks()[i].size;
        }
    }
    std::sort(sel.begin(), sel.end());
    return sel;
}

} // namespace detail

// Candidate-pool selection: for every admissible size, draw threshold-rule
// candidates, keep those meeting the coverage requirement, and return the one
// minimizing the normalized performance/energy factor
// g = (eps_max / eps) * (b / b_max). Ties go to the smaller energy bound, then
// the smaller size.
inline SelectionPlan pemo(const net::SocialGraph& g, const SelectionBounds& bounds, double r_ef0,
                          int xi, const Scenario& scen, Rng& rng) {
    if (xi < 1) throw ArgumentError("candidate count must be >= 1");
    if (bounds.l < 1 || bounds.l > bounds.h) throw ArgumentError("invalid selection bounds");

    struct Candidate {
        std::vector<int> selection;
        double r_ef;
        double eps;
        double b_s;
        int size;
    };
    std::vector<Candidate> pool;

    for (int m = bounds.l; m <= bounds.h; ++m) {
        for (int x = 0; x < xi; ++x) {
            for (int attempt = 0; attempt < 10; ++attempt) {
                auto sel = detail::threshold_candidate(g, m, r_ef0, rng);
                const auto cov = net::coverage(g, sel);
                if (cov.r_ef < r_ef0) continue;
                Candidate c;
                c.selection = std::move(sel);
                c.r_ef = cov.r_ef;
                c.eps = cov.redundant_size > 0
                            ? static_cast<double>(cov.effective_size) / static_cast<double>(cov.redundant_size)
                            : std::numeric_limits<double>::infinity();
                c.b_s = selection_energy_bound(scen, c.selection).value;
                c.size = m;
                pool.push_back(std::move(c));
                break;
            }
        }
    }
    if (pool.empty())
        throw SelectionError("no candidate selection met the coverage requirement");

    double eps_max = 0.0;
    double b_max = 0.0;
    for (const auto& c : pool) {
        if (std::isfinite(c.eps)) eps_max = std::max(eps_max, c.eps);
        b_max = std::max(b_max, c.b_s);
    }

    auto g_of = [&](const Candidate& c) {
        if (!std::isfinite(c.eps)) return 0.0; // zero-redundancy bucket ranks first
        if (b_max <= 0.0) return 0.0;
        return eps_max * c.b_s / (c.eps * b_max);
    };

    const Candidate* best = &pool.front();
    double best_g = g_of(*best);
    for (const auto& c : pool) {
        const double gc = g_of(c);
        const bool better = gc < best_g || (gc == best_g && c.b_s < best->b_s) ||
                            (gc == best_g && c.b_s == best->b_s && c.size < best->size);
        if (better) {
            best = &c;
            best_g = gc;
        }
    }

    SelectionPlan plan;
    plan.selection = best->selection;
    plan.size = best->size;
    plan.r_ef = best->r_ef;
    plan.epsilon_s = best->eps;
    plan.b_s = best->b_s;
    plan.g_s = best_g;
    return plan;
}

enum class Strategy {
    RandomAllocation,    // random clients, random server, even band, random frequency
    LocationGreedy,      // random clients, nearest server, optimal resources
    RedundancyDriven,    // min-redundancy greedy until the coverage requirement
    EffectivenessDriven, // max-coverage greedy over the whole community
};

enum class ResourcePolicy {
    Optimized,       // per-server optimal frequency/bandwidth
    RandomEqualSplit // even bandwidth split, uniform random frequency
};

struct BaselinePlan {
    std::vector<int> selection;
    assoc::AssociationMap map;
    ResourcePolicy resources = ResourcePolicy::Optimized;
    // Per-server allocations when the strategy already ran the solver.
    std::vector<alloc::AllocationSolution> solutions;
};

namespace detail {

inline std::vector<int> sample_clients(int n, int m, Rng& rng) {
    std::vector<int> ids(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = i;
    rng.shuffle(ids);
    ids.resize(static_cast<std::size_t>(std::min(m, n)));
    std::sort(ids.begin(), ids.end());
    return ids;
}

inline std::vector<int> redundancy_driven_selection(const net::SocialGraph& g, double r_ef0) {
    const int n = g.client_count();
    std::vector<char> in_sel(static_cast<std::size_t>(n), 0);
    std::vector<int> sel;
    while (true) {
        const auto cov = net::coverage(g, sel);
        if (cov.r_ef >= r_ef0) break;
        int best = -1;
        long long best_red = std::numeric_limits<long long>::max();
        for (int u = 0; u < n; ++u) {
            if (in_sel[static_cast<std::size_t>(u)]) continue;
            long long red = 0;
            for (int b : g.blocks_of(u)) {
                const auto& blk = g.blocks()[static_cast<std::size_t>(b)];
                if (!blk.shared()) continue;
                const int other = blk.owner_a == u ? blk.owner_b : blk.owner_a;
                if (in_sel[static_cast<std::size_t>(other)]) red += blk.size;
            }
            if (red < best_red) {
                best_red = red;
                best = u;
            }
        }
        if (best < 0) break;
        in_sel[static_cast<std::size_t>(best)] = 1;
        sel.push_back(best);
    }
    std::sort(sel.begin(), sel.end());
    return sel;
}

inline std::vector<int> effectiveness_driven_selection(const net::SocialGraph& g) {
    std::vector<int> sel;
    std::vector<char> covered(g.blocks().size(), 0);
    const auto order = greedy_coverage_order(g);
    long long prev = 0;
    for (const auto& [u, cum] : order) {
        if (cum == prev) break; // no marginal gain left
        sel.push_back(u);
        prev = cum;
    }
    std::sort(sel.begin(), sel.end());
    return sel;
}

} // namespace detail

// Baseline strategies. RandomAllocation/LocationGreedy take a target size;
// RedundancyDriven takes the coverage requirement; EffectivenessDriven covers
// everything reachable.
inline BaselinePlan baseline_select(Strategy strategy, const net::SocialGraph& g,
                                    const Scenario& scen, int target_m, double r_ef0, Rng& rng) {
    BaselinePlan plan;
    const std::size_t n_es = scen.servers.size();
    switch (strategy) {
    case Strategy::RandomAllocation: {
        plan.selection = detail::sample_clients(g.client_count(), target_m, rng);
        plan.resources = ResourcePolicy::RandomEqualSplit;
        plan.map.members.assign(n_es, {});
        for (int id : plan.selection) {
            const auto candidates = scen.coverable_servers(id);
            if (candidates.empty())
                throw AssocError("no edge server covers client " + std::to_string(id), id);
            const int k = candidates[rng.index(candidates.size())];
            plan.map.server_of[id] = k;
            plan.map.members[static_cast<std::size_t>(k)].push_back(id);
        }
        return plan;
    }
    case Strategy::LocationGreedy: {
        plan.selection = detail::sample_clients(g.client_count(), target_m, rng);
        plan.resources = ResourcePolicy::Optimized;
        plan.map.members.assign(n_es, {});
        for (int id : plan.selection) {
            const int k = scen.nearest_server(id);
            if (k < 0)
                throw AssocError("no edge server covers client " + std::to_string(id), id);
            plan.map.server_of[id] = k;
            plan.map.members[static_cast<std::size_t>(k)].push_back(id);
        }
        return plan;
    }
    case Strategy::RedundancyDriven: {
        plan.selection = detail::redundancy_driven_selection(g, r_ef0);
        break;
    }
    case Strategy::EffectivenessDriven: {
        plan.selection = detail::effectiveness_driven_selection(g);
        break;
    }
    }
    auto assoc_res = assoc::fast_greedy(plan.selection, scen);
    plan.map = std::move(assoc_res.map);
    plan.solutions = std::move(assoc_res.solutions);
    plan.resources = ResourcePolicy::Optimized;
    return plan;
}

} // namespace hflsnm::select
