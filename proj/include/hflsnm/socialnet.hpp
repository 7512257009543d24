#pragma once

#include <algorithm>
#include <fstream>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hflsnm/errors.hpp"
#include "hflsnm/rng.hpp"

namespace hflsnm::net {

// A contiguous group of samples held by one client or shared by exactly two.
struct SampleBlock {
    int id = 0;
    long long size = 0;
    int owner_a = -1;
    int owner_b = -1; // -1 when the block is private to owner_a

    bool shared() const { return owner_b >= 0; }
};

// Data-sharing graph of a client community: clients are nodes, shared sample
// blocks are undirected edges weighted by the shared sample count.
class SocialGraph {
public:
    SocialGraph() = default;

    SocialGraph(int n_clients, std::vector<SampleBlock> blocks, double degree_cap = 4.0)
        : n_clients_(n_clients), blocks_(std::move(blocks)), degree_cap_(degree_cap) {
        rebuild_index();
        validate();
    }

    int client_count() const { return n_clients_; }
    const std::vector<SampleBlock>& blocks() const { return blocks_; }
    const std::vector<int>& blocks_of(int client) const { return by_client_.at(static_cast<std::size_t>(client)); }
    double degree_cap() const { return degree_cap_; }

    // D_n: total samples held by one client.
    long long data_size(int client) const {
        check_client(client);
        long long d = 0;
        for (int b : by_client_[static_cast<std::size_t>(client)]) d += blocks_[static_cast<std::size_t>(b)].size;
        return d;
    }

    // Sum of D_n over all clients (shared blocks counted once per owner).
    long long total_trained_size() const {
        long long t = 0;
        for (const auto& b : blocks_) t += b.shared() ? 2 * b.size : b.size;
        return t;
    }

    // Samples in the union of all clients' data.
    long long unique_size() const {
        long long u = 0;
        for (const auto& b : blocks_) u += b.size;
        return u;
    }

    // Samples appearing on two clients (the community-wide redundancy pool).
    long long shared_size() const {
        long long s = 0;
        for (const auto& b : blocks_) {
            if (b.shared()) s += b.size;
        }
        return s;
    }

    double average_degree() const {
        if (n_clients_ == 0) return 0.0;
        std::set<std::pair<int, int>> pairs;
        for (const auto& b : blocks_) {
            if (b.shared()) pairs.insert({std::min(b.owner_a, b.owner_b), std::max(b.owner_a, b.owner_b)});
        }
        return 2.0 * static_cast<double>(pairs.size()) / static_cast<double>(n_clients_);
    }

    void validate() const {
        if (n_clients_ < 1) throw ConfigError("social graph needs at least one client");
        for (const auto& b : blocks_) {
            if (b.size < 1) throw ConfigError("sample block " + std::to_string(b.id) + " has size < 1");
            if (b.owner_a < 0 || b.owner_a >= n_clients_)
                throw ConfigError("sample block " + std::to_string(b.id) + " has invalid owner");
            if (b.owner_b >= 0) {
                if (b.owner_b >= n_clients_)
                    throw ConfigError("sample block " + std::to_string(b.id) + " has invalid owner");
                if (b.owner_b == b.owner_a)
                    throw ConfigError("sample block " + std::to_string(b.id) + " lists the same owner twice");
            }
        }
        for (int n = 0; n < n_clients_; ++n) {
            if (by_client_[static_cast<std::size_t>(n)].empty())
                throw ConfigError("client " + std::to_string(n) + " holds no data");
        }
        if (average_degree() > degree_cap_ + 1e-9)
            throw ConfigError("graph average degree exceeds the sparsity cap");
    }

private:
    void rebuild_index() {
        by_client_.assign(static_cast<std::size_t>(std::max(n_clients_, 0)), {});
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
            const auto& b = blocks_[i];
            if (b.owner_a >= 0 && b.owner_a < n_clients_) by_client_[static_cast<std::size_t>(b.owner_a)].push_back(static_cast<int>(i));
            if (b.owner_b >= 0 && b.owner_b < n_clients_) by_client_[static_cast<std::size_t>(b.owner_b)].push_back(static_cast<int>(i));
        }
    }

    void check_client(int client) const {
        if (client < 0 || client >= n_clients_)
            throw ArgumentError("unknown client id " + std::to_string(client));
    }

    int n_clients_ = 0;
    std::vector<SampleBlock> blocks_;
    std::vector<std::vector<int>> by_client_;
    double degree_cap_ = 4.0;
};

struct CoverageReport {
    long long effective_size = 0; // samples in the union of the selection's data
    long long redundant_size = 0; // samples held twice within the selection
    long long trained_size = 0;   // sum of D_n over the selection
    double r_ef = 0.0;
    double r_re = 0.0;
};

namespace detail {
inline std::vector<char> selection_mask(const SocialGraph& g, std::span<const int> selection) {
    std::vector<char> mask(static_cast<std::size_t>(g.client_count()), 0);
    for (int id : selection) {
        if (id < 0 || id >= g.client_count())
            throw ArgumentError("unknown client id " + std::to_string(id) + " in selection");
        mask[static_cast<std::size_t>(id)] = 1;
    }
    return mask;
}
} // namespace detail

// Effective/redundant data sizes and coverage rates of a client selection.
inline CoverageReport coverage(const SocialGraph& g, std::span<const int> selection) {
    const auto mask = detail::selection_mask(g, selection);
    CoverageReport r;
    for (const auto& b : g.blocks()) {
        const bool a_in = mask[static_cast<std::size_t>(b.owner_a)];
        const bool b_in = b.shared() && mask[static_cast<std::size_t>(b.owner_b)];
        if (a_in || b_in) r.effective_size += b.size;
        if (a_in && b_in) r.redundant_size += b.size;
        if (a_in) r.trained_size += b.size;
        if (b_in) r.trained_size += b.size;
    }
    const long long eff_all = g.unique_size();
    const long long red_all = g.shared_size();
    r.r_ef = eff_all > 0 ? static_cast<double>(r.effective_size) / static_cast<double>(eff_all) : 0.0;
    r.r_re = red_all > 0 ? static_cast<double>(r.redundant_size) / static_cast<double>(red_all) : 0.0;
    return r;
}

// Reference implementation of coverage() that materializes explicit sample-id
// sets and takes literal unions/intersections. Test and diagnostic use only.
inline CoverageReport coverage_oracle(const SocialGraph& g, std::span<const int> selection) {
    const auto mask = detail::selection_mask(g, selection);
    std::vector<long long> offsets(g.blocks().size() + 1, 0);
    for (std::size_t i = 0; i < g.blocks().size(); ++i) offsets[i + 1] = offsets[i] + g.blocks()[i].size;

    auto samples_of = [&](int client) {
        std::vector<long long> ids;
        for (int bi : g.blocks_of(client)) {
            for (long long s = offsets[static_cast<std::size_t>(bi)]; s < offsets[static_cast<std::size_t>(bi) + 1]; ++s)
                ids.push_back(s);
        }
        std::sort(ids.begin(), ids.end());
        return ids;
    };

    std::vector<int> chosen;
    for (int n = 0; n < g.client_count(); ++n) {
        if (mask[static_cast<std::size_t>(n)]) chosen.push_back(n);
    }

    std::vector<std::vector<long long>> sets;
    sets.reserve(chosen.size());
    for (int n : chosen) sets.push_back(samples_of(n));

    std::set<long long> uni;
    for (const auto& s : sets) uni.insert(s.begin(), s.end());

    std::set<long long> redundant;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        for (std::size_t j = i + 1; j < sets.size(); ++j) {
            std::vector<long long> inter;
            std::set_intersection(sets[i].begin(), sets[i].end(), sets[j].begin(), sets[j].end(),
                                  std::back_inserter(inter));
            redundant.insert(inter.begin(), inter.end());
        }
    }

    CoverageReport r;
    r.effective_size = static_cast<long long>(uni.size());
    r.redundant_size = static_cast<long long>(redundant.size());
    for (const auto& s : sets) r.trained_size += static_cast<long long>(s.size());
    const long long eff_all = g.unique_size();
    const long long red_all = g.shared_size();
    r.r_ef = eff_all > 0 ? static_cast<double>(r.effective_size) / static_cast<double>(eff_all) : 0.0;
    r.r_re = red_all > 0 ? static_cast<double>(r.redundant_size) / static_cast<double>(red_all) : 0.0;
    return r;
}

struct GraphGenParams {
    int n_clients = 60;
    double avg_degree = 4.0;
    long long private_min = 50;
    long long private_max = 500;
    long long shared_min = 20;
    long long shared_max = 300;
};

// Random sparse community: one private block per client plus one shared block
// per sampled edge. Edge count is fixed at round(avg_degree * n / 2), drawn as
// distinct uniform pairs.
inline SocialGraph generate_graph(const GraphGenParams& p, std::uint64_t seed) {
    if (p.n_clients < 1) throw ConfigError("n_clients must be >= 1");
    if (p.avg_degree < 0.0) throw ConfigError("avg_degree must be >= 0");
    if (p.private_min < 1 || p.private_min > p.private_max)
        throw ConfigError("invalid private block size range");
    if (p.shared_min < 1 || p.shared_min > p.shared_max)
        throw ConfigError("invalid shared block size range");
    if (p.avg_degree > static_cast<double>(p.n_clients - 1))
        throw ConfigError("avg_degree exceeds n_clients - 1");

    Rng rng(seed);
    std::vector<SampleBlock> blocks;
    int next_id = 0;
    for (int n = 0; n < p.n_clients; ++n) {
        blocks.push_back({next_id++, rng.uniform_int(p.private_min, p.private_max), n, -1});
    }

    const long long max_edges = static_cast<long long>(p.n_clients) * (p.n_clients - 1) / 2;
    long long target = std::llround(p.avg_degree * p.n_clients / 2.0);
    target = std::min(target, max_edges);

    std::set<std::pair<int, int>> edges;
    while (static_cast<long long>(edges.size()) < target) {
        int a = static_cast<int>(rng.index(static_cast<std::size_t>(p.n_clients)));
        int b = static_cast<int>(rng.index(static_cast<std::size_t>(p.n_clients)));
        if (a == b) continue;
        edges.insert({std::min(a, b), std::max(a, b)});
    }
    for (const auto& [a, b] : edges) {
        blocks.push_back({next_id++, rng.uniform_int(p.shared_min, p.shared_max), a, b});
    }

    return SocialGraph(p.n_clients, std::move(blocks), std::max(4.0, p.avg_degree));
}

// Community with exact effective and redundant totals under full selection.
// The shared mass sits on a single client pair so that the duplicated portion
// is distributionally distinct from the rest; the remainder is private and
// spread evenly. Used for controlled data-composition sweeps.
inline SocialGraph controlled_graph(int n_clients, long long effective_size, long long redundant_size) {
    if (n_clients < 2) throw ConfigError("controlled graph needs at least two clients");
    if (redundant_size < 0 || effective_size <= redundant_size)
        throw ConfigError("effective size must exceed redundant size");
    const long long private_total = effective_size - redundant_size;

    std::vector<SampleBlock> blocks;
    int next_id = 0;
    if (redundant_size > 0) blocks.push_back({next_id++, redundant_size, 0, 1});
    for (int n = 0; n < n_clients; ++n) {
        long long priv = private_total / n_clients + (n < private_total % n_clients ? 1 : 0);
        if (priv > 0) blocks.push_back({next_id++, priv, n, -1});
    }

    // Every client must hold data.
    std::vector<long long> held(static_cast<std::size_t>(n_clients), 0);
    for (const auto& b : blocks) {
        held[static_cast<std::size_t>(b.owner_a)] += b.size;
        if (b.owner_b >= 0) held[static_cast<std::size_t>(b.owner_b)] += b.size;
    }
    for (long long h : held) {
        if (h < 1) throw ConfigError("controlled graph leaves a client without data; increase effective size");
    }
    return SocialGraph(n_clients, std::move(blocks), 4.0);
}

inline nlohmann::json graph_to_json(const SocialGraph& g) {
    nlohmann::json j;
    j["clients"] = g.client_count();
    j["degree_cap"] = g.degree_cap();
    j["blocks"] = nlohmann::json::array();
    for (const auto& b : g.blocks()) {
        nlohmann::json jb;
        jb["id"] = b.id;
        jb["size"] = b.size;
        jb["owners"] = b.shared() ? nlohmann::json::array({b.owner_a, b.owner_b})
                                  : nlohmann::json::array({b.owner_a});
        j["blocks"].push_back(std::move(jb));
    }
    return j;
}

inline SocialGraph graph_from_json(const nlohmann::json& j) {
    if (!j.contains("clients") || !j.contains("blocks"))
        throw ConfigError("graph file must contain 'clients' and 'blocks'");
    std::vector<SampleBlock> blocks;
    for (const auto& jb : j.at("blocks")) {
        SampleBlock b;
        b.id = jb.at("id").get<int>();
        b.size = jb.at("size").get<long long>();
        const auto& owners = jb.at("owners");
        if (owners.empty() || owners.size() > 2)
            throw ConfigError("block " + std::to_string(b.id) + " must list 1 or 2 owners");
        b.owner_a = owners.at(0).get<int>();
        if (owners.size() == 2) b.owner_b = owners.at(1).get<int>();
        blocks.push_back(b);
    }
    return SocialGraph(j.at("clients").get<int>(), std::move(blocks),
                       j.value("degree_cap", 4.0));
}

inline void save_graph(const SocialGraph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open " + path + " for writing");
    out << graph_to_json(g).dump(2) << "\n";
}

inline SocialGraph load_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open graph file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("failed to parse graph file " + path + ": " + e.what());
    }
    return graph_from_json(j);
}

} // namespace hflsnm::net
