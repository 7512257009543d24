#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "hflsnm/client_select.hpp"
#include "hflsnm/costmodel.hpp"
#include "hflsnm/edge_assoc.hpp"
#include "hflsnm/errors.hpp"
#include "hflsnm/learner.hpp"
#include "hflsnm/mobility.hpp"
#include "hflsnm/privacy.hpp"
#include "hflsnm/resource_alloc.hpp"
#include "hflsnm/rng.hpp"
#include "hflsnm/scenario.hpp"
#include "hflsnm/socialnet.hpp"

namespace hflsnm::sim {

enum class Algorithm {
    DoSnm,
    RandomAllocation,
    LocationGreedy,
    RedundancyDriven,
    EffectivenessDriven,
    FullParticipation, // every client trains; used for controlled data studies
};

inline std::string algorithm_name(Algorithm a) {
    switch (a) {
    case Algorithm::DoSnm: return "do-snm";
    case Algorithm::RandomAllocation: return "ra";
    case Algorithm::LocationGreedy: return "lg";
    case Algorithm::RedundancyDriven: return "rd";
    case Algorithm::EffectivenessDriven: return "ed";
    case Algorithm::FullParticipation: return "full";
    }
    return "?";
}

struct ClientNoise {
    int client = 0;
    double sigma_up = 0.0;
};

struct ServerNoise {
    int server = 0;
    double q = 0.0;
    double sigma_down = 0.0;
};

struct NoiseRecord {
    std::vector<ClientNoise> uplink;
    std::vector<ServerNoise> downlink;
};

struct RoundReport {
    int round = 0;
    std::string algorithm;
    std::vector<int> selection;
    std::vector<std::pair<int, int>> association; // (client, server), sorted by client
    long long effective_size = 0;
    long long redundant_size = 0;
    long long trained_size = 0;
    double r_ef = 0.0;
    double r_re = 0.0;
    double energy_j = 0.0;
    double latency_s = 0.0;
    double energy_bound_j = 0.0; // B_S of the round's selection
    double accuracy = 0.0;
    NoiseRecord noise;
    int solver_iters_max = 0;
    double kkt_residual_max = 0.0;
};

// Weighted edge aggregation. When noisy, each client model is clipped and
// perturbed at its calibrated uplink scale before averaging, and the server
// tops the aggregate up to its broadcast scale afterwards.
inline Model edge_aggregate(const std::vector<std::pair<Model, long long>>& models, bool noisy,
                            const dp::DpConfig& cfg, Rng& rng) {
    if (models.empty()) throw ArgumentError("edge aggregation needs at least one model");
    long long total = 0;
    for (const auto& [m, d] : models) {
        if (d < 1) throw ArgumentError("aggregation weights must be positive");
        total += d;
    }
    Model agg(models.front().first.size(), 0.0);
    for (const auto& [m, d] : models) {
        if (m.size() != agg.size()) throw ArgumentError("aggregation requires models of equal size");
        const double w = static_cast<double>(d) / static_cast<double>(total);
        if (noisy) {
            const Model noisy_m = dp::clip_and_noise(m, dp::uplink_sigma(cfg, d), cfg.clip_threshold, rng);
            for (std::size_t i = 0; i < agg.size(); ++i) agg[i] += w * noisy_m[i];
        } else {
            for (std::size_t i = 0; i < agg.size(); ++i) agg[i] += w * m[i];
        }
    }
    if (noisy) {
        std::vector<dp::ClusterClient> cluster;
        cluster.reserve(models.size());
        for (const auto& [m, d] : models) cluster.push_back({d, cfg.client_exposures});
        const auto [q, sigma] = dp::downlink_sigma(cfg, cluster, total, cfg.server_exposures);
        agg = dp::add_noise(agg, sigma, rng);
    }
    return agg;
}

// Weighted global aggregation of edge models (weights: per-server data sums).
inline Model global_aggregate(const std::vector<std::pair<Model, long long>>& models) {
    if (models.empty()) throw ArgumentError("global aggregation needs at least one model");
    long long total = 0;
    for (const auto& [m, d] : models) {
        if (d < 1) throw ArgumentError("aggregation weights must be positive");
        total += d;
    }
    Model agg(models.front().first.size(), 0.0);
    for (const auto& [m, d] : models) {
        if (m.size() != agg.size()) throw ArgumentError("aggregation requires models of equal size");
        const double w = static_cast<double>(d) / static_cast<double>(total);
        for (std::size_t i = 0; i < agg.size(); ++i) agg[i] += w * m[i];
    }
    return agg;
}

// Parameter ranges the scenario was drawn from; the capacity estimate uses
// their midpoints.
struct ParameterRanges {
    double power_min_w = 0.1, power_max_w = 1.0;
    double freq_min_ghz = 1.0, freq_max_ghz = 4.0;
};

struct Simulation {
    net::SocialGraph graph;
    SyntheticTask task;
    Scenario scenario;
    LearnerSpec learner;
    ParameterRanges ranges;
    Model global_model;
    Algorithm algorithm = Algorithm::DoSnm;
    double r_ef0 = 0.6;
    int pemo_candidates = 8;
    int mean_local_iters = 5; // lambda at the mean client, for the capacity estimate
    bool dp_enabled = false;
    dp::DpConfig dp; // exposure counts for one accounting window (one round)
    bool dp_cumulative = false; // accumulate exposure counts across rounds
    std::uint64_t master_seed = 1;
    int round_index = 0;
};

namespace detail {

inline select::CapacityParams capacity_params(const Simulation& sim) {
    select::CapacityParams cp;
    double d_sum = 0.0;
    double dist_sum = 0.0;
    int covered = 0;
    for (const auto& c : sim.scenario.clients) {
        d_sum += static_cast<double>(c.data_size);
        const int k = sim.scenario.nearest_server(c.id);
        if (k >= 0) {
            dist_sum += sim.scenario.distance_to(c.id, k);
            ++covered;
        }
    }
    const double mean_dist = covered > 0 ? dist_sum / covered : 1.0;
    const double mean_freq = 0.5 * (sim.ranges.freq_min_ghz + sim.ranges.freq_max_ghz);
    cp.mean_data = d_sum / static_cast<double>(sim.scenario.clients.size());
    cp.mean_nu_hz = 0.5 * (sim.scenario.params.nu_min_hz + sim.scenario.params.nu_max_hz);
    cp.mean_power_w = 0.5 * (sim.ranges.power_min_w + sim.ranges.power_max_w);
    cp.mean_gain = std::pow(10.0, -mob::pathloss_db(mean_dist, mean_freq) / 10.0);
    cp.bandwidth_hz = sim.scenario.servers.front().bandwidth_hz;
    cp.n0_w_per_hz = sim.scenario.params.n0_w_per_hz;
    cp.model_bits = sim.scenario.params.model_bits;
    cp.deadline_s = sim.scenario.params.deadline_s;
    cp.mean_local_iters = sim.mean_local_iters;
    cp.cycles_per_sample = sim.scenario.params.cycles_per_sample;
    cp.n_servers = static_cast<int>(sim.scenario.servers.size());
    cp.community_size = sim.graph.client_count();
    return cp;
}

struct PlannedRound {
    std::vector<int> selection;
    assoc::AssociationMap map;
    select::ResourcePolicy resources = select::ResourcePolicy::Optimized;
    std::vector<alloc::AllocationSolution> solutions; // per server when available
};

inline PlannedRound plan_round(Simulation& sim) {
    PlannedRound out;
    const std::uint64_t seed = derive_seed(sim.master_seed,
                                           {0x5E1EC7ULL, static_cast<std::uint64_t>(sim.round_index)});
    Rng rng(seed);
    switch (sim.algorithm) {
    case Algorithm::DoSnm: {
        const auto bounds = select::selection_bounds(sim.graph, capacity_params(sim), sim.r_ef0);
        const auto plan = select::pemo(sim.graph, bounds, sim.r_ef0, sim.pemo_candidates,
                                       sim.scenario, rng);
        out.selection = plan.selection;
        auto assoc_res = assoc::fast_greedy(out.selection, sim.scenario);
        out.map = std::move(assoc_res.map);
        out.solutions = std::move(assoc_res.solutions);
        return out;
    }
    case Algorithm::RandomAllocation:
    case Algorithm::LocationGreedy: {
        const auto [h_bar, h] = select::client_cap(capacity_params(sim));
        (void)h_bar;
        const auto strategy = sim.algorithm == Algorithm::RandomAllocation
                                  ? select::Strategy::RandomAllocation
                                  : select::Strategy::LocationGreedy;
        auto plan = select::baseline_select(strategy, sim.graph, sim.scenario, h, sim.r_ef0, rng);
        out.selection = std::move(plan.selection);
        out.map = std::move(plan.map);
        out.resources = plan.resources;
        out.solutions = std::move(plan.solutions);
        return out;
    }
    case Algorithm::RedundancyDriven:
    case Algorithm::EffectivenessDriven: {
        const auto strategy = sim.algorithm == Algorithm::RedundancyDriven
                                  ? select::Strategy::RedundancyDriven
                                  : select::Strategy::EffectivenessDriven;
        auto plan = select::baseline_select(strategy, sim.graph, sim.scenario, 0, sim.r_ef0, rng);
        out.selection = std::move(plan.selection);
        out.map = std::move(plan.map);
        out.resources = plan.resources;
        out.solutions = std::move(plan.solutions);
        return out;
    }
    case Algorithm::FullParticipation: {
        out.selection.resize(static_cast<std::size_t>(sim.graph.client_count()));
        for (int n = 0; n < sim.graph.client_count(); ++n) out.selection[static_cast<std::size_t>(n)] = n;
        auto assoc_res = assoc::fast_greedy(out.selection, sim.scenario);
        out.map = std::move(assoc_res.map);
        out.solutions = std::move(assoc_res.solutions);
        return out;
    }
    }
    throw ArgumentError("unknown algorithm");
}

} // namespace detail

// One global round: select, associate, allocate, train tau edge-iteration
// cycles with one noisy edge aggregation each, aggregate globally, move
// clients, and report energy/latency/accuracy.
inline RoundReport run_global_round(Simulation& sim) {
    RoundReport rep;
    rep.round = sim.round_index;
    rep.algorithm = algorithm_name(sim.algorithm);

    detail::PlannedRound plan;
    try {
        plan = detail::plan_round(sim);
    } catch (const InfeasibleError& e) {
        throw InfeasibleError("round " + std::to_string(sim.round_index) + ": " + e.what(), e.client_id);
    } catch (const AssocError& e) {
        throw AssocError("round " + std::to_string(sim.round_index) + ": " + e.what(), e.client_id);
    }

    rep.selection = plan.selection;
    for (const auto& [client, server] : plan.map.server_of) rep.association.push_back({client, server});

    const auto cov = net::coverage(sim.graph, plan.selection);
    rep.effective_size = cov.effective_size;
    rep.redundant_size = cov.redundant_size;
    rep.trained_size = cov.trained_size;
    rep.r_ef = cov.r_ef;
    rep.r_re = cov.r_re;
    rep.energy_bound_j = select::selection_energy_bound(sim.scenario, plan.selection).value;

    const auto& params = sim.scenario.params;
    const std::size_t n_es = sim.scenario.servers.size();

    // Resource allocation and per-client costs.
    std::vector<cost::CostBreakdown> costs;
    std::vector<std::vector<int>>& members = plan.map.members;
    Rng ra_rng(derive_seed(sim.master_seed, {0xA110CULL, static_cast<std::uint64_t>(sim.round_index)}));
    for (std::size_t k = 0; k < n_es; ++k) {
        if (members[k].empty()) continue;
        if (plan.resources == select::ResourcePolicy::Optimized) {
            if (plan.solutions.size() != n_es || plan.solutions[k].cpu_freq_hz.size() != members[k].size()) {
                if (plan.solutions.size() != n_es) plan.solutions.assign(n_es, {});
                try {
                    plan.solutions[k] = alloc::solve_p1(make_p1_instance(sim.scenario, members[k],
                                                                         static_cast<int>(k)));
                } catch (const InfeasibleError& e) {
                    throw InfeasibleError("round " + std::to_string(sim.round_index) + ": " + e.what(),
                                          e.client_id);
                }
            }
            const auto& sol = plan.solutions[k];
            rep.solver_iters_max = std::max(rep.solver_iters_max, sol.outer_iterations);
            rep.kkt_residual_max = std::max(rep.kkt_residual_max, sol.kkt_residual);
            for (std::size_t i = 0; i < members[k].size(); ++i) {
                const int id = members[k][i];
                const auto& c = sim.scenario.client(id);
                cost::ClientRadioCompute rc{c.tx_power_w, c.carrier_freq_ghz, params.cycles_per_sample,
                                            c.local_iters, params.capacitance, params.nu_min_hz,
                                            params.nu_max_hz, params.model_bits};
                cost::CostBreakdown cb;
                std::tie(cb.t_cmp, cb.e_cmp) = cost::compute_cost(c.data_size, sol.cpu_freq_hz[i], rc);
                std::tie(cb.t_com, cb.e_com) =
                    cost::comm_cost(params.model_bits, sol.bandwidth_hz[i],
                                    sim.scenario.gain(id, static_cast<int>(k)), c.tx_power_w,
                                    params.n0_w_per_hz);
                costs.push_back(cb);
            }
        } else {
            const double share = sim.scenario.servers[k].bandwidth_hz /
                                 static_cast<double>(members[k].size());
            for (int id : members[k]) {
                const auto& c = sim.scenario.client(id);
                const double nu = ra_rng.uniform(params.nu_min_hz, params.nu_max_hz);
                cost::ClientRadioCompute rc{c.tx_power_w, c.carrier_freq_ghz, params.cycles_per_sample,
                                            c.local_iters, params.capacitance, params.nu_min_hz,
                                            params.nu_max_hz, params.model_bits};
                cost::CostBreakdown cb;
                std::tie(cb.t_cmp, cb.e_cmp) = cost::compute_cost(c.data_size, nu, rc);
                std::tie(cb.t_com, cb.e_com) = cost::comm_cost(params.model_bits, share,
                                                               sim.scenario.gain(id, static_cast<int>(k)),
                                                               c.tx_power_w, params.n0_w_per_hz);
                costs.push_back(cb);
            }
        }
    }
    std::tie(rep.latency_s, rep.energy_j) = cost::round_totals(costs, params.tau);

    // Noise record for the round.
    if (sim.dp_enabled) {
        for (int id : plan.selection) {
            rep.noise.uplink.push_back({id, dp::uplink_sigma(sim.dp, sim.scenario.client(id).data_size)});
        }
        for (std::size_t k = 0; k < n_es; ++k) {
            if (members[k].empty()) continue;
            std::vector<dp::ClusterClient> cluster;
            long long total = 0;
            for (int id : members[k]) {
                cluster.push_back({sim.scenario.client(id).data_size, sim.dp.client_exposures});
                total += sim.scenario.client(id).data_size;
            }
            const auto [q, sigma] = dp::downlink_sigma(sim.dp, cluster, total, sim.dp.server_exposures);
            rep.noise.downlink.push_back({static_cast<int>(k), q, sigma});
        }
    }

    // Hierarchical training: tau edge-iteration cycles, then one global step.
    std::vector<Model> edge_model(n_es, sim.global_model);
    for (int l = 0; l < params.tau; ++l) {
        for (std::size_t k = 0; k < n_es; ++k) {
            if (members[k].empty()) continue;
            std::vector<std::pair<Model, long long>> uploads;
            uploads.reserve(members[k].size());
            for (int id : members[k]) {
                Model local = local_train(sim.learner, edge_model[k],
                                          sim.task.client_data[static_cast<std::size_t>(id)],
                                          sim.scenario.client(id).local_iters,
                                          sim.learner.learning_rate);
                uploads.push_back({std::move(local), sim.scenario.client(id).data_size});
            }
            Rng noise_rng(derive_seed(sim.master_seed,
                                      {0x4015EULL, static_cast<std::uint64_t>(sim.round_index),
                                       static_cast<std::uint64_t>(l), static_cast<std::uint64_t>(k)}));
            edge_model[k] = edge_aggregate(uploads, sim.dp_enabled, sim.dp, noise_rng);
        }
    }
    std::vector<std::pair<Model, long long>> edge_uploads;
    for (std::size_t k = 0; k < n_es; ++k) {
        if (members[k].empty()) continue;
        long long total = 0;
        for (int id : members[k]) total += sim.scenario.client(id).data_size;
        edge_uploads.push_back({edge_model[k], total});
    }
    if (!edge_uploads.empty()) {
        sim.global_model = global_aggregate(edge_uploads);
    }
    rep.accuracy = evaluate(sim.learner, sim.global_model, sim.task.test_set);

    // Mobility update for the next round.
    for (auto& c : sim.scenario.clients) {
        Rng mrng(derive_seed(sim.master_seed, {0x30B1ULL, static_cast<std::uint64_t>(sim.round_index),
                                               static_cast<std::uint64_t>(c.id)}));
        c.mobility = mob::step_mobility(c.mobility, sim.scenario.step_seconds, sim.scenario.arena, mrng);
    }

    ++sim.round_index;
    return rep;
}

inline std::vector<RoundReport> run_experiment(Simulation& sim, int rounds) {
    if (rounds < 0) throw ArgumentError("round count must be nonnegative");
    std::vector<RoundReport> out;
    out.reserve(static_cast<std::size_t>(rounds));
    for (int t = 0; t < rounds; ++t) out.push_back(run_global_round(sim));
    return out;
}

} // namespace hflsnm::sim
