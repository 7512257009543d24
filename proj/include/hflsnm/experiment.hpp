#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "hflsnm/errors.hpp"
#include "hflsnm/fedsim.hpp"

namespace hflsnm::cli {

// Full description of one experiment run. Serialized as the scenario
// snapshot, so loading the emitted file reproduces the run exactly.
struct ExperimentConfig {
    std::uint64_t seed = 1;
    int rounds = 50;
    std::string algorithm = "do-snm"; // do-snm | ra | lg | rd | ed | full

    // radio
    double bandwidth_hz = 10e6;
    double n0_w_per_hz = 4e-21;
    double power_min_w = 0.1, power_max_w = 1.0;
    double freq_min_ghz = 1.0, freq_max_ghz = 4.0;

    // compute
    double capacitance = 2e-28;
    double cycles_per_sample = 90822;
    double nu_min_hz = 1e9, nu_max_hz = 10e9;
    int local_iters_base = 5;                      // lambda_0
    std::string local_iters_mode = "proportional"; // proportional | fixed

    double deadline_s = 0.2; // t0
    int tau = 1;

    // scenario
    double arena_w_m = 1000, arena_h_m = 1000;
    int n_edge_servers = 4;
    int n_clients = 60;
    double coverage_radius_m = 2000;
    double step_seconds = 10;

    // social graph
    std::string graph_mode = "generated"; // generated | file | controlled
    double avg_degree = 4.0;
    long long private_min = 50, private_max = 500;
    long long shared_min = 20, shared_max = 300;
    std::string graph_file;
    long long controlled_effective = 8000;
    long long controlled_redundant = 3000;

    // selection
    double r_ef0 = 0.6;
    int pemo_candidates = 8;

    // privacy
    bool dp_enabled = false;
    double dp_epsilon = 80.0;
    double dp_delta = 0.01;
    double dp_clip = 10.0;
    std::string dp_exposure_mode = "per-round"; // per-round | cumulative

    // learner / task
    int feature_dim = 20;
    int classes = 5;
    double learning_rate = 0.05;
    double dirichlet_rho = 0.6;
    double class_separation = 2.0;
    double feature_noise = 1.0;
    int test_per_class = 200;

    void validate() const {
        if (rounds < 0) throw ConfigError("rounds must be nonnegative");
        if (algorithm != "do-snm" && algorithm != "ra" && algorithm != "lg" && algorithm != "rd" &&
            algorithm != "ed" && algorithm != "full")
            throw ConfigError("unknown algorithm '" + algorithm + "'");
        if (bandwidth_hz <= 0 || n0_w_per_hz <= 0) throw ConfigError("invalid radio parameters");
        if (power_min_w <= 0 || power_min_w > power_max_w) throw ConfigError("invalid power range");
        if (freq_min_ghz <= 0 || freq_min_ghz > freq_max_ghz) throw ConfigError("invalid carrier range");
        if (nu_min_hz <= 0 || nu_min_hz > nu_max_hz) throw ConfigError("invalid cpu frequency range");
        if (capacitance <= 0 || cycles_per_sample <= 0) throw ConfigError("invalid compute parameters");
        if (local_iters_base < 0) throw ConfigError("local_iters_base must be nonnegative");
        if (local_iters_mode != "proportional" && local_iters_mode != "fixed")
            throw ConfigError("local_iters_mode must be 'proportional' or 'fixed'");
        if (deadline_s <= 0 || tau < 1) throw ConfigError("invalid round timing parameters");
        if (arena_w_m <= 0 || arena_h_m <= 0 || n_edge_servers < 1 || n_clients < 1 ||
            coverage_radius_m <= 0 || step_seconds <= 0)
            throw ConfigError("invalid scenario parameters");
        if (graph_mode != "generated" && graph_mode != "file" && graph_mode != "controlled")
            throw ConfigError("graph_mode must be 'generated', 'file' or 'controlled'");
        if (graph_mode == "file" && graph_file.empty())
            throw ConfigError("graph_mode 'file' requires graph_file");
        if (r_ef0 <= 0.0 || r_ef0 > 1.0) throw ConfigError("r_ef0 must lie in (0, 1]");
        if (pemo_candidates < 1) throw ConfigError("pemo_candidates must be >= 1");
        if (dp_enabled) {
            dp::DpConfig cfg{dp_epsilon, dp_delta, dp_clip, 1.0, 1.0};
            cfg.validate();
        }
        if (dp_exposure_mode != "per-round" && dp_exposure_mode != "cumulative")
            throw ConfigError("dp_exposure_mode must be 'per-round' or 'cumulative'");
        if (feature_dim < 1 || classes < 2 || learning_rate <= 0 || dirichlet_rho <= 0 ||
            test_per_class < 1)
            throw ConfigError("invalid learner parameters");
    }
};

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["seed"] = c.seed;
    j["rounds"] = c.rounds;
    j["algorithm"] = c.algorithm;
    j["radio"] = {{"bandwidth_hz", c.bandwidth_hz},
                  {"n0_w_per_hz", c.n0_w_per_hz},
                  {"power_w_range", {c.power_min_w, c.power_max_w}},
                  {"carrier_freq_ghz_range", {c.freq_min_ghz, c.freq_max_ghz}}};
    j["compute"] = {{"capacitance", c.capacitance},
                    {"cycles_per_sample", c.cycles_per_sample},
                    {"cpu_freq_hz_range", {c.nu_min_hz, c.nu_max_hz}},
                    {"local_iters_base", c.local_iters_base},
                    {"local_iters_mode", c.local_iters_mode}};
    j["deadline_s"] = c.deadline_s;
    j["edge_iterations"] = c.tau;
    j["scenario"] = {{"arena_m", {c.arena_w_m, c.arena_h_m}},
                     {"n_edge_servers", c.n_edge_servers},
                     {"n_clients", c.n_clients},
                     {"coverage_radius_m", c.coverage_radius_m},
                     {"step_seconds", c.step_seconds}};
    j["graph"] = {{"mode", c.graph_mode},
                  {"avg_degree", c.avg_degree},
                  {"private_size_range", {c.private_min, c.private_max}},
                  {"shared_size_range", {c.shared_min, c.shared_max}},
                  {"file", c.graph_file},
                  {"controlled_effective", c.controlled_effective},
                  {"controlled_redundant", c.controlled_redundant}};
    j["selection"] = {{"r_ef0", c.r_ef0}, {"pemo_candidates", c.pemo_candidates}};
    j["privacy"] = {{"enabled", c.dp_enabled},
                    {"epsilon", c.dp_epsilon},
                    {"delta", c.dp_delta},
                    {"clip_threshold", c.dp_clip},
                    {"exposure_mode", c.dp_exposure_mode}};
    j["learner"] = {{"feature_dim", c.feature_dim},
                    {"classes", c.classes},
                    {"learning_rate", c.learning_rate},
                    {"dirichlet_rho", c.dirichlet_rho},
                    {"class_separation", c.class_separation},
                    {"feature_noise", c.feature_noise},
                    {"test_per_class", c.test_per_class}};
    return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    c.seed = j.value("seed", c.seed);
    c.rounds = j.value("rounds", c.rounds);
    c.algorithm = j.value("algorithm", c.algorithm);
    if (j.contains("radio")) {
        const auto& r = j.at("radio");
        c.bandwidth_hz = r.value("bandwidth_hz", c.bandwidth_hz);
        c.n0_w_per_hz = r.value("n0_w_per_hz", c.n0_w_per_hz);
        if (r.contains("power_w_range")) {
            c.power_min_w = r.at("power_w_range").at(0).get<double>();
            c.power_max_w = r.at("power_w_range").at(1).get<double>();
        }
        if (r.contains("carrier_freq_ghz_range")) {
            c.freq_min_ghz = r.at("carrier_freq_ghz_range").at(0).get<double>();
            c.freq_max_ghz = r.at("carrier_freq_ghz_range").at(1).get<double>();
        }
    }
    if (j.contains("compute")) {
        const auto& r = j.at("compute");
        c.capacitance = r.value("capacitance", c.capacitance);
        c.cycles_per_sample = r.value("cycles_per_sample", c.cycles_per_sample);
        if (r.contains("cpu_freq_hz_range")) {
            c.nu_min_hz = r.at("cpu_freq_hz_range").at(0).get<double>();
            c.nu_max_hz = r.at("cpu_freq_hz_range").at(1).get<double>();
        }
        c.local_iters_base = r.value("local_iters_base", c.local_iters_base);
        c.local_iters_mode = r.value("local_iters_mode", c.local_iters_mode);
    }
    c.deadline_s = j.value("deadline_s", c.deadline_s);
    c.tau = j.value("edge_iterations", c.tau);
    if (j.contains("scenario")) {
        const auto& r = j.at("scenario");
        if (r.contains("arena_m")) {
            c.arena_w_m = r.at("arena_m").at(0).get<double>();
            c.arena_h_m = r.at("arena_m").at(1).get<double>();
        }
        c.n_edge_servers = r.value("n_edge_servers", c.n_edge_servers);
        c.n_clients = r.value("n_clients", c.n_clients);
        c.coverage_radius_m = r.value("coverage_radius_m", c.coverage_radius_m);
        c.step_seconds = r.value("step_seconds", c.step_seconds);
    }
    if (j.contains("graph")) {
        const auto& r = j.at("graph");
        c.graph_mode = r.value("mode", c.graph_mode);
        c.avg_degree = r.value("avg_degree", c.avg_degree);
        if (r.contains("private_size_range")) {
            c.private_min = r.at("private_size_range").at(0).get<long long>();
            c.private_max = r.at("private_size_range").at(1).get<long long>();
        }
        if (r.contains("shared_size_range")) {
            c.shared_min = r.at("shared_size_range").at(0).get<long long>();
            c.shared_max = r.at("shared_size_range").at(1).get<long long>();
        }
        c.graph_file = r.value("file", c.graph_file);
        c.controlled_effective = r.value("controlled_effective", c.controlled_effective);
        c.controlled_redundant = r.value("controlled_redundant", c.controlled_redundant);
    }
    if (j.contains("selection")) {
        const auto& r = j.at("selection");
        c.r_ef0 = r.value("r_ef0", c.r_ef0);
        c.pemo_candidates = r.value("pemo_candidates", c.pemo_candidates);
    }
    if (j.contains("privacy")) {
        const auto& r = j.at("privacy");
        c.dp_enabled = r.value("enabled", c.dp_enabled);
        c.dp_epsilon = r.value("epsilon", c.dp_epsilon);
        c.dp_delta = r.value("delta", c.dp_delta);
        c.dp_clip = r.value("clip_threshold", c.dp_clip);
        c.dp_exposure_mode = r.value("exposure_mode", c.dp_exposure_mode);
    }
    if (j.contains("learner")) {
        const auto& r = j.at("learner");
        c.feature_dim = r.value("feature_dim", c.feature_dim);
        c.classes = r.value("classes", c.classes);
        c.learning_rate = r.value("learning_rate", c.learning_rate);
        c.dirichlet_rho = r.value("dirichlet_rho", c.dirichlet_rho);
        c.class_separation = r.value("class_separation", c.class_separation);
        c.feature_noise = r.value("feature_noise", c.feature_noise);
        c.test_per_class = r.value("test_per_class", c.test_per_class);
    }
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("failed to parse config " + path + ": " + e.what());
    }
    return config_from_json(j);
}

inline sim::Algorithm parse_algorithm(const std::string& name) {
    if (name == "do-snm") return sim::Algorithm::DoSnm;
    if (name == "ra") return sim::Algorithm::RandomAllocation;
    if (name == "lg") return sim::Algorithm::LocationGreedy;
    if (name == "rd") return sim::Algorithm::RedundancyDriven;
    if (name == "ed") return sim::Algorithm::EffectivenessDriven;
    if (name == "full") return sim::Algorithm::FullParticipation;
    throw ConfigError("unknown algorithm '" + name + "'");
}

inline net::SocialGraph build_graph(const ExperimentConfig& c) {
    if (c.graph_mode == "file") return net::load_graph(c.graph_file);
    if (c.graph_mode == "controlled")
        return net::controlled_graph(c.n_clients, c.controlled_effective, c.controlled_redundant);
    net::GraphGenParams gp;
    gp.n_clients = c.n_clients;
    gp.avg_degree = c.avg_degree;
    gp.private_min = c.private_min;
    gp.private_max = c.private_max;
    gp.shared_min = c.shared_min;
    gp.shared_max = c.shared_max;
    return net::generate_graph(gp, derive_seed(c.seed, {0x6EA9ULL}));
}

inline sim::Simulation build_simulation(const ExperimentConfig& c) {
    c.validate();
    sim::Simulation s;
    s.master_seed = c.seed;
    s.algorithm = parse_algorithm(c.algorithm);
    s.graph = build_graph(c);
    const int n = s.graph.client_count();

    s.learner = {c.feature_dim, c.classes, c.learning_rate};
    sim::TaskParams tp;
    tp.feature_dim = c.feature_dim;
    tp.classes = c.classes;
    tp.dirichlet_rho = c.dirichlet_rho;
    tp.class_separation = c.class_separation;
    tp.feature_noise = c.feature_noise;
    tp.test_per_class = c.test_per_class;
    s.task = sim::make_task(s.graph, tp, derive_seed(c.seed, {0x7A5CULL}));

    s.scenario.arena = {c.arena_w_m, c.arena_h_m};
    s.scenario.step_seconds = c.step_seconds;
    Rng place_rng(derive_seed(c.seed, {0x97ACEULL}));
    auto [servers, states] =
        mob::place_scenario(c.n_edge_servers, s.scenario.arena, n, place_rng,
                            c.coverage_radius_m, c.bandwidth_hz);
    s.scenario.servers = std::move(servers);

    s.scenario.params.bandwidth_hz = c.bandwidth_hz;
    s.scenario.params.n0_w_per_hz = c.n0_w_per_hz;
    s.scenario.params.deadline_s = c.deadline_s;
    s.scenario.params.tau = c.tau;
    s.scenario.params.nu_min_hz = c.nu_min_hz;
    s.scenario.params.nu_max_hz = c.nu_max_hz;
    s.scenario.params.cycles_per_sample = c.cycles_per_sample;
    s.scenario.params.capacitance = c.capacitance;
    s.scenario.params.model_bits = s.learner.model_bits();

    double d_sum = 0.0;
    for (int i = 0; i < n; ++i) d_sum += static_cast<double>(s.graph.data_size(i));
    const double d_mean = d_sum / n;

    Rng radio_rng(derive_seed(c.seed, {0x2AD10ULL}));
    for (int i = 0; i < n; ++i) {
        ClientState cs;
        cs.id = i;
        cs.mobility = states[static_cast<std::size_t>(i)];
        cs.tx_power_w = radio_rng.uniform(c.power_min_w, c.power_max_w);
        cs.carrier_freq_ghz = radio_rng.uniform(c.freq_min_ghz, c.freq_max_ghz);
        cs.data_size = s.graph.data_size(i);
        cs.local_iters = c.local_iters_mode == "fixed"
                             ? c.local_iters_base
                             : std::max(1LL, std::llround(c.local_iters_base * cs.data_size / d_mean));
        s.scenario.clients.push_back(cs);
    }

    s.ranges = {c.power_min_w, c.power_max_w, c.freq_min_ghz, c.freq_max_ghz};
    s.mean_local_iters = std::max(1, c.local_iters_base);
    s.r_ef0 = c.r_ef0;
    s.pemo_candidates = c.pemo_candidates;
    s.dp_enabled = c.dp_enabled;
    s.dp.epsilon = c.dp_epsilon;
    s.dp.delta = c.dp_delta;
    s.dp.clip_threshold = c.dp_clip;
    s.dp.client_exposures = c.tau;
    s.dp.server_exposures = c.tau;
    s.dp_cumulative = c.dp_exposure_mode == "cumulative";
    s.global_model = sim::init_model(s.learner);
    return s;
}

// ---- artifact emission ----------------------------------------------------

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string join_ids(const std::vector<int>& ids, char sep = ';') {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) out.push_back(sep);
        out += std::to_string(ids[i]);
    }
    return out;
}

inline const char* kRoundsCsvHeader =
    "round,algorithm,selected,selection,r_ef,r_re,effective_size,redundant_size,trained_size,"
    "energy_j,latency_s,energy_bound_j,accuracy,sigma_up_mean,sigma_down_max,solver_iters_max,"
    "kkt_residual_max";

inline void write_rounds_csv(const std::string& path, const std::vector<sim::RoundReport>& reports) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open " + path + " for writing");
    out << kRoundsCsvHeader << "\n";
    for (const auto& r : reports) {
        double sig_up = 0.0;
        for (const auto& u : r.noise.uplink) sig_up += u.sigma_up;
        if (!r.noise.uplink.empty()) sig_up /= static_cast<double>(r.noise.uplink.size());
        double sig_down = 0.0;
        for (const auto& d : r.noise.downlink) sig_down = std::max(sig_down, d.sigma_down);
        out << r.round << ',' << r.algorithm << ',' << r.selection.size() << ','
            << join_ids(r.selection) << ',' << format_double(r.r_ef) << ',' << format_double(r.r_re)
            << ',' << r.effective_size << ',' << r.redundant_size << ',' << r.trained_size << ','
            << format_double(r.energy_j) << ',' << format_double(r.latency_s) << ','
            << format_double(r.energy_bound_j) << ',' << format_double(r.accuracy) << ','
            << format_double(sig_up) << ',' << format_double(sig_down) << ',' << r.solver_iters_max
            << ',' << format_double(r.kkt_residual_max) << "\n";
    }
}

inline nlohmann::json summary_json(const ExperimentConfig& c,
                                   const std::vector<sim::RoundReport>& reports) {
    nlohmann::json j;
    j["algorithm"] = c.algorithm;
    j["rounds"] = static_cast<int>(reports.size());
    j["seed"] = c.seed;
    double total_e = 0.0, max_latency = 0.0;
    for (const auto& r : reports) {
        total_e += r.energy_j;
        max_latency = std::max(max_latency, r.latency_s);
    }
    j["total_energy_j"] = total_e;
    j["max_round_latency_s"] = max_latency;
    j["final_accuracy"] = reports.empty() ? 0.0 : reports.back().accuracy;
    double best = 0.0;
    for (const auto& r : reports) best = std::max(best, r.accuracy);
    j["best_accuracy"] = best;
    j["final_r_ef"] = reports.empty() ? 0.0 : reports.back().r_ef;
    return j;
}

struct RunResult {
    std::vector<sim::RoundReport> reports;
    nlohmann::json summary;
};

// Execute one configuration and write rounds.csv, summary.json and
// scenario.json under out_dir.
inline RunResult run_and_write(const ExperimentConfig& cfg, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    auto simulation = build_simulation(cfg);
    RunResult res;
    res.reports = sim::run_experiment(simulation, cfg.rounds);
    res.summary = summary_json(cfg, res.reports);
    write_rounds_csv(out_dir + "/rounds.csv", res.reports);
    {
        std::ofstream out(out_dir + "/summary.json", std::ios::binary);
        out << res.summary.dump(2) << "\n";
    }
    {
        std::ofstream out(out_dir + "/scenario.json", std::ios::binary);
        out << config_to_json(cfg).dump(2) << "\n";
    }
    return res;
}

inline int worker_threads() {
    if (const char* env = std::getenv("HFLSNM_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    return 1;
}

struct SweepOutcome {
    std::vector<double> values;
    std::vector<bool> ok;
    std::vector<std::string> errors;
};

// Run one configuration per sweep value (r-ef0 or epsilon), isolating
// failures, and emit a combined per-round table plus a sweep summary.
// epsilon <= 0 means privacy disabled for that entry.
inline SweepOutcome run_sweep(const ExperimentConfig& base, const std::string& param,
                              const std::vector<double>& values, const std::string& out_dir) {
    if (values.empty()) throw ConfigError("sweep needs at least one value");
    if (param != "r-ef0" && param != "epsilon")
        throw ConfigError("sweep parameter must be 'r-ef0' or 'epsilon'");
    std::filesystem::create_directories(out_dir);

    SweepOutcome outcome;
    outcome.values = values;
    outcome.ok.assign(values.size(), false);
    outcome.errors.assign(values.size(), "");
    std::vector<std::vector<sim::RoundReport>> all_reports(values.size());

    const int threads = std::min<int>(worker_threads(), static_cast<int>(values.size()));
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= values.size()) return;
            ExperimentConfig cfg = base;
            if (param == "r-ef0") {
                cfg.r_ef0 = values[i];
            } else {
                if (values[i] > 0.0) {
                    cfg.dp_enabled = true;
                    cfg.dp_epsilon = values[i];
                } else {
                    cfg.dp_enabled = false;
                }
            }
            std::ostringstream dir;
            dir << out_dir << "/" << param << "-" << format_double(values[i]);
            try {
                auto res = run_and_write(cfg, dir.str());
                all_reports[i] = std::move(res.reports);
                outcome.ok[i] = true;
            } catch (const std::exception& e) {
                outcome.errors[i] = e.what();
            }
        }
    };
    if (threads <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    std::ofstream combined(out_dir + "/sweep.csv", std::ios::binary);
    combined << "param,value,round,accuracy,cumulative_energy_j\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!outcome.ok[i]) continue;
        double cum = 0.0;
        for (const auto& r : all_reports[i]) {
            cum += r.energy_j;
            combined << param << ',' << format_double(values[i]) << ',' << r.round << ','
                     << format_double(r.accuracy) << ',' << format_double(cum) << "\n";
        }
    }

    nlohmann::json js;
    js["param"] = param;
    js["values"] = values;
    js["failures"] = nlohmann::json::array();
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!outcome.ok[i])
            js["failures"].push_back({{"value", values[i]}, {"error", outcome.errors[i]}});
    }
    std::ofstream out(out_dir + "/sweep_summary.json", std::ios::binary);
    out << js.dump(2) << "\n";
    return outcome;
}

} // namespace hflsnm::cli
