#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hflsnm/errors.hpp"
#include "hflsnm/resource_alloc.hpp"
#include "hflsnm/scenario.hpp"

namespace hflsnm::assoc {

struct AssociationMap {
    std::map<int, int> server_of;          // client id -> server id
    std::vector<std::vector<int>> members; // per-server client lists, in association order

    bool is_partition_of(std::span<const int> selection) const {
        if (server_of.size() != selection.size()) return false;
        std::size_t listed = 0;
        for (const auto& m : members) listed += m.size();
        if (listed != selection.size()) return false;
        for (int id : selection) {
            const auto it = server_of.find(id);
            if (it == server_of.end()) return false;
            const auto& cell = members[static_cast<std::size_t>(it->second)];
            if (std::find(cell.begin(), cell.end(), id) == cell.end()) return false;
        }
        return true;
    }
};

struct AssocResult {
    AssociationMap map;
    double total_energy_j = 0.0;
    // Per-server optimal allocations, aligned with map.members order. Servers
    // with no members carry an empty solution.
    std::vector<alloc::AllocationSolution> solutions;
};

// Greedy association: clients in descending data-size order, each placed on
// the in-coverage server that minimizes the updated total optimal energy.
// Calls solve_p1 at most |selection| * K times.
inline AssocResult fast_greedy(std::span<const int> selection, const Scenario& scen) {
    const std::size_t n_es = scen.servers.size();
    AssocResult res;
    res.map.members.assign(n_es, {});
    res.solutions.assign(n_es, {});
    std::vector<double> energy(n_es, 0.0);

    std::vector<int> order(selection.begin(), selection.end());
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const auto da = scen.client(a).data_size;
        const auto db = scen.client(b).data_size;
        return da != db ? da > db : a < b;
    });

    for (int id : order) {
        const auto candidates = scen.coverable_servers(id);
        if (candidates.empty())
            throw AssocError("no edge server covers client " + std::to_string(id), id);

        int best_es = -1;
        double best_total = std::numeric_limits<double>::infinity();
        alloc::AllocationSolution best_sol;
        for (int k : candidates) {
            auto tentative = res.map.members[static_cast<std::size_t>(k)];
            tentative.push_back(id);
            alloc::AllocationSolution sol;
            try {
                sol = alloc::solve_p1(make_p1_instance(scen, tentative, k));
            } catch (const InfeasibleError&) {
                continue;
            }
            double total = sol.objective_j;
            for (std::size_t j = 0; j < n_es; ++j) {
                if (static_cast<int>(j) != k) total += energy[j];
            }
            if (total < best_total) {
                best_total = total;
                best_es = k;
                best_sol = std::move(sol);
            }
        }
        if (best_es < 0)
            throw InfeasibleError("client " + std::to_string(id) +
                                      " cannot be added to any edge server",
                                  id);
        res.map.members[static_cast<std::size_t>(best_es)].push_back(id);
        res.map.server_of[id] = best_es;
        res.solutions[static_cast<std::size_t>(best_es)] = std::move(best_sol);
        energy[static_cast<std::size_t>(best_es)] =
            res.solutions[static_cast<std::size_t>(best_es)].objective_j;
    }

    res.total_energy_j = 0.0;
    for (double e : energy) res.total_energy_j += e;
    return res;
}

// True optimum over every coverage-respecting assignment. Test oracle for
// small instances only.
inline AssocResult exhaustive_assoc(std::span<const int> selection, const Scenario& scen) {
    const std::size_t m = selection.size();
    const std::size_t n_es = scen.servers.size();
    if (m == 0) {
        AssocResult empty;
        empty.map.members.assign(n_es, {});
        empty.solutions.assign(n_es, {});
        return empty;
    }
    double combos = std::pow(static_cast<double>(n_es), static_cast<double>(m));
    if (combos > 1e5) throw SizeError("exhaustive association limited to K^M <= 1e5");

    std::vector<int> assign(m, 0);
    AssocResult best;
    double best_energy = std::numeric_limits<double>::infinity();

    for (;;) {
        bool coverage_ok = true;
        for (std::size_t i = 0; i < m && coverage_ok; ++i) {
            coverage_ok = scen.in_coverage(selection[i], assign[i]);
        }
        if (coverage_ok) {
            std::vector<std::vector<int>> members(n_es);
            for (std::size_t i = 0; i < m; ++i)
                members[static_cast<std::size_t>(assign[i])].push_back(selection[i]);
            double total = 0.0;
            std::vector<alloc::AllocationSolution> sols(n_es);
            bool feasible = true;
            for (std::size_t k = 0; k < n_es && feasible; ++k) {
                if (members[k].empty()) continue;
                try {
                    sols[k] = alloc::solve_p1(make_p1_instance(scen, members[k], static_cast<int>(k)));
                    total += sols[k].objective_j;
                } catch (const InfeasibleError&) {
                    feasible = false;
                }
            }
            if (feasible && total < best_energy) {
                best_energy = total;
                best.map.members = std::move(members);
                best.solutions = std::move(sols);
            }
        }
        // next assignment (mixed-radix increment)
        std::size_t pos = 0;
        while (pos < m) {
            if (++assign[pos] < static_cast<int>(n_es)) break;
            assign[pos] = 0;
            ++pos;
        }
        if (pos == m) break;
    }

    if (!std::isfinite(best_energy))
        throw InfeasibleError("no feasible assignment exists for the selection", -1);

    best.total_energy_j = best_energy;
    best.map.server_of.clear();
    for (std::size_t k = 0; k < best.map.members.size(); ++k) {
        for (int id : best.map.members[k]) best.map.server_of[id] = static_cast<int>(k);
    }
    return best;
}

} // namespace hflsnm::assoc
