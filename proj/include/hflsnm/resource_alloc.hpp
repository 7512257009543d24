#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "hflsnm/errors.hpp"

namespace hflsnm::alloc {

// One client of a single-server allocation instance.
struct P1Client {
    double cycles = 0.0;     // X_n = lambda_n * C * D_n
    double gain = 0.0;       // h_{n,k}
    double tx_power_w = 0.0; // p_n
};

struct P1Instance {
    std::vector<P1Client> clients;
    double bandwidth_hz = 10e6;   // B_0
    double n0_w_per_hz = 4e-21;
    double deadline_s = 0.2;      // t0
    int tau = 1;
    double nu_min_hz = 1e9;
    double nu_max_hz = 10e9;
    double model_bits = 0.0;      // z
    double capacitance = 2e-28;   // alpha
};

struct AllocationSolution {
    std::vector<double> cpu_freq_hz;  // nu*
    std::vector<double> bandwidth_hz; // B*
    std::vector<bool> binding;        // latency constraint active
    std::vector<double> theta;        // latency multipliers
    std::vector<double> gamma;        // nu >= nu_min multipliers
    std::vector<double> sigma;        // nu <= nu_max multipliers
    double mu = 0.0;                  // bandwidth-budget multiplier
    double objective_j = 0.0;         // E_k*
    double kkt_residual = 0.0;
    int outer_iterations = 0;         // alternating-optimization passes
};

namespace detail {

inline constexpr double kRelTol = 1e-10;
inline constexpr int kMaxBisect = 200;
inline constexpr double kMuBracketLo = 1e-24;
inline constexpr double kMuBracketHi = 1e6;

// Per-client closed forms. Every 1-D map used by the solver is strictly
// monotone in its argument, so plain bisection is globally convergent.
class ClientCalc {
public:
    ClientCalc(const P1Client& c, const P1Instance& inst)
        : X_(c.cycles), p_(c.tx_power_w), snr_coeff_(c.gain * c.tx_power_w / inst.n0_w_per_hz),
          z_(inst.model_bits), t0_(inst.deadline_s), tau_(inst.tau), alpha_(inst.capacitance),
          nu_min_(inst.nu_min_hz), nu_max_(inst.nu_max_hz), b0_(inst.bandwidth_hz) {}

    double cycles() const { return X_; }

    // Upload latency; strictly decreasing in B with limit t_com_inf() as B grows.
    double t_com(double b) const {
        if (z_ <= 0.0) return 0.0;
        const double rate = b * std::log1p(snr_coeff_ / b) / std::numbers::ln2;
        return z_ / rate;
    }

    double t_com_inf() const {
        return z_ <= 0.0 ? 0.0 : z_ * std::numbers::ln2 / snr_coeff_;
    }

    // Latency slack/violation at (nu, B).
    double latency_gap(double nu, double b) const { return X_ / nu + t_com(b) - t0_; }

    // Bandwidth-budget price implied by the bandwidth stationarity condition at
    // (B, theta). Strictly decreasing in B, strictly increasing in theta.
    double implied_mu(double b, double theta) const {
        if (z_ <= 0.0) return 0.0;
        const double x = b / snr_coeff_; // B*N0/(h*p)
        const double phi = std::log1p(1.0 / x) - 1.0 / (1.0 + x);
        const double tc = t_com(b);
        return (tau_ * p_ + theta) * tc * tc * phi / (z_ * std::numbers::ln2);
    }

    double theta_interior(double nu) const { return tau_ * alpha_ * nu * nu * nu; }

    // Smallest bandwidth meeting an upload-latency target, or nullopt when the
    // target is unreachable below the cap.
    std::optional<double> bandwidth_for_latency(double target, double b_cap) const {
        if (z_ <= 0.0) return 0.0;
        if (target <= t_com_inf()) return std::nullopt;
        if (t_com(b_cap) > target) return std::nullopt;
        double lo = b_cap;
        while (t_com(lo) < target) {
            lo *= 0.5;
            if (lo < 1e-300) return std::nullopt;
        }
        double hi = std::min(lo * 2.0, b_cap);
        for (int i = 0; i < kMaxBisect && (hi - lo) > kRelTol * hi; ++i) {
            const double mid = 0.5 * (lo + hi);
            (t_com(mid) > target ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }

    // Bandwidth demanded by a latency-slack client at price mu (theta = 0),
    // capped at the full band.
    double slack_bandwidth(double mu) const {
        if (z_ <= 0.0) return 0.0;
        if (implied_mu(b0_, 0.0) <= mu) {
            double lo = b0_;
            while (implied_mu(lo, 0.0) < mu) {
                lo *= 0.5;
                if (lo < 1e-300) return lo;
            }
            double hi = std::min(lo * 2.0, b0_);
            for (int i = 0; i < kMaxBisect && (hi - lo) > kRelTol * hi; ++i) {
                const double mid = 0.5 * (lo + hi);
                (implied_mu(mid, 0.0) < mu ? hi : lo) = mid;
            }
            return 0.5 * (lo + hi);
        }
        return b0_;
    }

    // Frequency making the latency constraint exactly tight at bandwidth b.
    double binding_nu(double b) const { return X_ / (t0_ - t_com(b)); }

    // Price implied by a binding client holding bandwidth b, with the
    // frequency pinned by the tight latency constraint.
    double binding_psi(double b) const {
        const double nu = std::min(binding_nu(b), nu_max_);
        return implied_mu(b, theta_interior(nu));
    }

    // Bandwidth interval available to a binding client: at b_floor the client
    // runs at nu_max; at b_ceil it runs at the frequency floor (nu_min or the
    // lowest frequency admissible under the full band).
    struct BindingRange {
        double b_floor = 0.0;
        double b_ceil = 0.0;
        double psi_floor = 0.0; // implied price at b_ceil (low end)
        double psi_ceil = 0.0;  // implied price at b_floor (high end)
    };

    BindingRange binding_range() const {
        BindingRange r;
        const auto bf = bandwidth_for_latency(t0_ - X_ / nu_max_, b0_);
        r.b_floor = bf ? *bf : b0_;
        const double budget0 = t0_ - t_com(b0_);
        const double nu_lo = budget0 > 0.0 ? std::clamp(X_ / budget0, nu_min_, nu_max_) : nu_max_;
        const auto bc = bandwidth_for_latency(t0_ - X_ / nu_lo, b0_);
        r.b_ceil = bc ? *bc : b0_;
        r.psi_ceil = binding_psi(r.b_floor);
        r.psi_floor = binding_psi(r.b_ceil);
        return r;
    }

    // (nu, B) of a binding client at price mu. binding_psi is strictly
    // decreasing in B, so one bisection suffices.
    std::pair<double, double> binding_point(double mu, const BindingRange& r) const {
        if (mu >= r.psi_ceil) return {std::min(binding_nu(r.b_floor), nu_max_), r.b_floor};
        if (mu <= r.psi_floor) return {std::min(binding_nu(r.b_ceil), nu_max_), r.b_ceil};
        double lo = r.b_floor;
        double hi = r.b_ceil;
        for (int i = 0; i < kMaxBisect && (hi - lo) > kRelTol * hi; ++i) {
            const double mid = 0.5 * (lo + hi);
            (binding_psi(mid) > mu ? lo : hi) = mid;
        }
        const double b = 0.5 * (lo + hi);
        return {std::min(binding_nu(b), nu_max_), b};
    }

    double tx_power() const { return p_; }

private:
    double X_;
    double p_;
    double snr_coeff_;
    double z_;
    double t0_;
    double tau_;
    double alpha_;
    double nu_min_;
    double nu_max_;
    double b0_;
};

} // namespace detail

inline void validate_instance(const P1Instance& inst) {
    if (inst.clients.empty()) throw ArgumentError("allocation instance needs at least one client");
    if (inst.bandwidth_hz <= 0.0 || inst.n0_w_per_hz <= 0.0 || inst.deadline_s <= 0.0 ||
        inst.tau < 1 || inst.nu_min_hz <= 0.0 || inst.nu_max_hz < inst.nu_min_hz ||
        inst.model_bits < 0.0 || inst.capacitance <= 0.0)
        throw ArgumentError("allocation instance has invalid shared parameters");
    for (const auto& c : inst.clients) {
        if (c.cycles <= 0.0 || c.gain <= 0.0 || c.tx_power_w <= 0.0)
            throw ArgumentError("allocation instance has invalid client parameters");
    }
}

struct FeasibilityReport {
    bool feasible = true;
    int violating_client = -1;
    std::vector<double> min_bandwidth_hz; // per-client bandwidth floor at nu_max
};

// Exact feasibility test: each client must meet the deadline at nu_max under
// the full band, and the per-client bandwidth floors must fit into B_0.
inline FeasibilityReport check_feasibility(const P1Instance& inst) {
    validate_instance(inst);
    FeasibilityReport rep;
    double sum = 0.0;
    double worst = -1.0;
    int worst_client = -1;
    for (std::size_t n = 0; n < inst.clients.size(); ++n) {
        detail::ClientCalc cc(inst.clients[n], inst);
        if (!(cc.latency_gap(inst.nu_max_hz, inst.bandwidth_hz) < 0.0)) {
            rep.feasible = false;
            rep.violating_client = static_cast<int>(n);
            return rep;
        }
        const auto bmin = cc.bandwidth_for_latency(inst.deadline_s - cc.cycles() / inst.nu_max_hz,
                                                   inst.bandwidth_hz);
        const double b = bmin ? *bmin : inst.bandwidth_hz;
        rep.min_bandwidth_hz.push_back(b);
        sum += b;
        if (b > worst) {
            worst = b;
            worst_client = static_cast<int>(n);
        }
    }
    if (sum > inst.bandwidth_hz * (1.0 + 1e-12)) {
        rep.feasible = false;
        rep.violating_client = worst_client;
    }
    return rep;
}

// Objective of the single-server allocation problem at a given point.
inline double p1_objective(const P1Instance& inst, const std::vector<double>& nu,
                           const std::vector<double>& bw) {
    double e = 0.0;
    for (std::size_t n = 0; n < inst.clients.size(); ++n) {
        detail::ClientCalc cc(inst.clients[n], inst);
        e += 0.5 * inst.capacitance * inst.clients[n].cycles * nu[n] * nu[n] +
             inst.clients[n].tx_power_w * cc.t_com(bw[n]);
    }
    return inst.tau * e;
}

// Residual of the stationarity, feasibility and complementary-slackness
// system at a candidate solution. Zero (to tolerance) certifies optimality of
// the convex program.
inline double kkt_residual(const P1Instance& inst, const AllocationSolution& sol) {
    const std::size_t m = inst.clients.size();
    double res = 0.0;
    double mu_lo = std::numeric_limits<double>::infinity();
    double mu_hi = -std::numeric_limits<double>::infinity();
    double bw_sum = 0.0;
    for (std::size_t n = 0; n < m; ++n) {
        detail::ClientCalc cc(inst.clients[n], inst);
        const double nu = sol.cpu_freq_hz[n];
        const double bw = sol.bandwidth_hz[n];
        const double theta = sol.theta[n];
        const double gamma = sol.gamma[n];
        const double sigma = sol.sigma[n];
        bw_sum += bw;

        // stationarity in nu, normalized by the constituent term magnitudes
        const double term_a = cc.theta_interior(nu);
        const double term_g = gamma * nu * nu / inst.clients[n].cycles;
        const double term_s = sigma * nu * nu / inst.clients[n].cycles;
        res = std::max(res, std::abs(term_a + term_s - term_g - theta) /
                                std::max({term_a, term_g, term_s, std::abs(theta), 1e-30}));

        // stationarity in B: every client implies the same budget price
        const double mu_n = cc.implied_mu(bw, theta);
        mu_lo = std::min(mu_lo, mu_n);
        mu_hi = std::max(mu_hi, mu_n);

        // primal feasibility
        const double gap = cc.latency_gap(nu, bw);
        res = std::max(res, std::max(0.0, gap) / inst.deadline_s);
        res = std::max(res, std::max(0.0, inst.nu_min_hz - nu) / inst.nu_min_hz);
        res = std::max(res, std::max(0.0, nu - inst.nu_max_hz) / inst.nu_max_hz);
        res = std::max(res, std::max(0.0, -bw) / inst.bandwidth_hz);
        res = std::max(res, std::max(0.0, bw - inst.bandwidth_hz) / inst.bandwidth_hz);

        // dual feasibility
        res = std::max(res, std::max(0.0, -theta) / std::max(1.0, std::abs(theta)));
        res = std::max(res, std::max(0.0, -gamma) / std::max(1.0, std::abs(gamma)));
        res = std::max(res, std::max(0.0, -sigma) / std::max(1.0, std::abs(sigma)));

        // complementary slackness
        res = std::max(res, std::abs(theta * gap) / (inst.deadline_s * std::max(1.0, std::abs(theta))));
        res = std::max(res, std::abs(gamma * (nu - inst.nu_min_hz)) / (inst.nu_min_hz * std::max(1.0, std::abs(gamma))));
        res = std::max(res, std::abs(sigma * (inst.nu_max_hz - nu)) / (inst.nu_max_hz * std::max(1.0, std::abs(sigma))));
    }
    if (m > 0 && mu_hi > 0.0) {
        res = std::max(res, (mu_hi - mu_lo) / std::max(mu_hi, 1e-300));
    }
    res = std::max(res, std::abs(bw_sum - inst.bandwidth_hz) / inst.bandwidth_hz);
    return res;
}

// Optimal per-client CPU frequency and bandwidth for one edge server.
//
// Alternating optimization over the latency-constraint classification: start
// with every client slack at nu_min, split the band by equalizing the implied
// budget price, then promote every client whose latency constraint is violated
// to the binding set and re-solve. Promotions are permanent, so the outer loop
// runs at most m+1 times.
inline AllocationSolution solve_p1(const P1Instance& inst, double tol = detail::kRelTol) {
    if (tol <= 0.0) throw ArgumentError("tolerance must be positive");
    const auto feas = check_feasibility(inst);
    if (!feas.feasible) {
        throw InfeasibleError("allocation instance infeasible at client " +
                                  std::to_string(feas.violating_client),
                              feas.violating_client);
    }

    const std::size_t m = inst.clients.size();
    std::vector<detail::ClientCalc> calc;
    calc.reserve(m);
    for (const auto& c : inst.clients) calc.emplace_back(c, inst);

    std::vector<bool> binding(m, false);
    std::vector<detail::ClientCalc::BindingRange> range(m);
    std::vector<double> nu(m, inst.nu_min_hz);
    std::vector<double> bw(m, 0.0);
    double mu_star = 0.0;
    bool degenerate = false;

    auto fill_point = [&](double mu) {
        double sum = 0.0;
        for (std::size_t n = 0; n < m; ++n) {
            if (binding[n]) {
                const auto [v, b] = calc[n].binding_point(mu, range[n]);
                nu[n] = v;
                bw[n] = b;
            } else {
                nu[n] = inst.nu_min_hz;
                bw[n] = calc[n].slack_bandwidth(mu);
            }
            sum += bw[n];
        }
        return sum;
    };

    int iterations = 0;
    for (;;) {
        ++iterations;
        if (iterations > static_cast<int>(m) + 1)
            throw NumericalError("alternating optimization failed to settle in m+1 passes");

        // Bracket the budget price, expanding geometrically if needed.
        double lo = detail::kMuBracketLo;
        double hi = detail::kMuBracketHi;
        while (fill_point(hi) > inst.bandwidth_hz && hi < 1e40) hi *= 1e3;
        if (fill_point(hi) > inst.bandwidth_hz)
            throw NumericalError("bandwidth demand does not fall below budget at any price");
        while (fill_point(lo) < inst.bandwidth_hz && lo > 1e-300) lo *= 1e-3;
        if (fill_point(lo) < inst.bandwidth_hz) {
            // Over-provisioned corner: every demand is capped even at a free
            // band. Hand out the remainder proportionally with mu = 0.
            degenerate = true;
            const double sum = fill_point(lo);
            if (sum > 0.0) {
                for (auto& b : bw) b *= inst.bandwidth_hz / sum;
            }
            mu_star = 0.0;
        } else {
            for (int i = 0; i < detail::kMaxBisect && (hi - lo) > tol * hi; ++i) {
                const double mid = 0.5 * (lo + hi);
                (fill_point(mid) > inst.bandwidth_hz ? lo : hi) = mid;
            }
            mu_star = 0.5 * (lo + hi);
            fill_point(mu_star);
        }

        bool promoted = false;
        for (std::size_t n = 0; n < m; ++n) {
            if (!binding[n] && calc[n].latency_gap(nu[n], bw[n]) >= 0.0) {
                binding[n] = true;
                range[n] = calc[n].binding_range();
                promoted = true;
            }
        }
        if (!promoted) break;
    }

    AllocationSolution sol;
    sol.cpu_freq_hz = nu;
    sol.bandwidth_hz = bw;
    sol.binding = binding;
    sol.theta.assign(m, 0.0);
    sol.gamma.assign(m, 0.0);
    sol.sigma.assign(m, 0.0);
    sol.outer_iterations = iterations;

    // Recover multipliers consistent with the final point.
    double mu_acc = 0.0;
    for (std::size_t n = 0; n < m; ++n) {
        const double tau_p = inst.tau * inst.clients[n].tx_power_w;
        if (!binding[n]) {
            sol.gamma[n] = inst.tau * inst.capacitance * inst.clients[n].cycles * inst.nu_min_hz;
            mu_acc += calc[n].implied_mu(bw[n], 0.0);
            continue;
        }
        const double theta_int = calc[n].theta_interior(nu[n]);
        // implied_mu is linear in (tau*p + theta)
        const double price_per_unit = calc[n].implied_mu(bw[n], 0.0) / tau_p;
        if (nu[n] >= inst.nu_max_hz * (1.0 - 1e-12) && !degenerate && price_per_unit > 0.0) {
            // Clamped at nu_max: recover theta from the bandwidth stationarity.
            const double theta = std::max(theta_int, mu_star / price_per_unit - tau_p);
            sol.theta[n] = theta;
            sol.sigma[n] = (theta - theta_int) * inst.clients[n].cycles / (nu[n] * nu[n]);
            mu_acc += calc[n].implied_mu(bw[n], theta);
        } else if (nu[n] <= inst.nu_min_hz * (1.0 + 1e-12) && !degenerate && price_per_unit > 0.0) {
            // Binding exactly at nu_min: gamma absorbs the shortfall.
            const double theta = std::clamp(mu_star / price_per_unit - tau_p, 0.0, theta_int);
            sol.theta[n] = theta;
            sol.gamma[n] = (theta_int - theta) * inst.clients[n].cycles / (nu[n] * nu[n]);
            mu_acc += calc[n].implied_mu(bw[n], theta);
        } else {
            sol.theta[n] = theta_int;
            mu_acc += calc[n].implied_mu(bw[n], theta_int);
        }
    }
    sol.mu = m > 0 ? mu_acc / static_cast<double>(m) : 0.0;
    sol.objective_j = p1_objective(inst, nu, bw);
    sol.kkt_residual = kkt_residual(inst, sol);
    return sol;
}

// Exhaustive search over a discretized bandwidth simplex with the frequency
// snapped up to a discrete grid. Verification oracle for small instances.
inline AllocationSolution grid_oracle_p1(const P1Instance& inst, int res_bw = 400, int res_nu = 400) {
    validate_instance(inst);
    const std::size_t m = inst.clients.size();
    if (m > 4) throw SizeError("grid oracle supports at most 4 clients");
    if (res_bw < static_cast<int>(m) || res_nu < 2) throw ArgumentError("grid resolution too small");

    std::vector<detail::ClientCalc> calc;
    calc.reserve(m);
    for (const auto& c : inst.clients) calc.emplace_back(c, inst);

    const double nu_step = (inst.nu_max_hz - inst.nu_min_hz) / (res_nu - 1);

    // Cheapest admissible grid frequency for a client granted bandwidth b.
    auto best_nu = [&](std::size_t n, double b) -> std::optional<double> {
        const double budget = inst.deadline_s - calc[n].t_com(b);
        if (budget <= 0.0) return std::nullopt;
        const double nu_req = inst.clients[n].cycles / budget;
        if (nu_req > inst.nu_max_hz * (1.0 + 1e-12)) return std::nullopt;
        const double target = std::clamp(nu_req, inst.nu_min_hz, inst.nu_max_hz);
        if (nu_step <= 0.0) return inst.nu_min_hz;
        long long j = static_cast<long long>(std::ceil((target - inst.nu_min_hz) / nu_step - 1e-12));
        j = std::clamp(j, 0LL, static_cast<long long>(res_nu - 1));
        double nu = inst.nu_min_hz + static_cast<double>(j) * nu_step;
        while (nu < target && j < res_nu - 1) nu = inst.nu_min_hz + static_cast<double>(++j) * nu_step;
        if (nu < target) nu = inst.nu_max_hz; // top grid point, target is within fp noise of nu_max
        return nu;
    };

    AllocationSolution best;
    best.objective_j = std::numeric_limits<double>::infinity();
    std::vector<int> parts(m, 1);
    std::vector<double> nu(m, 0.0);
    std::vector<double> bw(m, 0.0);

    // Enumerate positive integer compositions of res_bw into m parts.
    std::function<void(std::size_t, int)> recurse = [&](std::size_t idx, int remaining) {
        if (idx + 1 == m) {
            parts[idx] = remaining;
            double total = 0.0;
            for (std::size_t n = 0; n < m; ++n) {
                bw[n] = inst.bandwidth_hz * static_cast<double>(parts[n]) / res_bw;
                const auto v = best_nu(n, bw[n]);
                if (!v) return;
                nu[n] = *v;
                total += 0.5 * inst.capacitance * inst.clients[n].cycles * nu[n] * nu[n] +
                         inst.clients[n].tx_power_w * calc[n].t_com(bw[n]);
            }
            total *= inst.tau;
            if (total < best.objective_j) {
                best.objective_j = total;
                best.cpu_freq_hz = nu;
                best.bandwidth_hz = bw;
            }
            return;
        }
        const int max_here = remaining - static_cast<int>(m - idx - 1);
        for (int v = 1; v <= max_here; ++v) {
            parts[idx] = v;
            recurse(idx + 1, remaining - v);
        }
    };
    recurse(0, res_bw);

    if (!std::isfinite(best.objective_j))
        throw InfeasibleError("no feasible grid point for the allocation instance", -1);

    best.binding.assign(m, false);
    best.theta.assign(m, 0.0);
    best.gamma.assign(m, 0.0);
    best.sigma.assign(m, 0.0);
    for (std::size_t n = 0; n < m; ++n) {
        best.binding[n] =
            calc[n].latency_gap(best.cpu_freq_hz[n], best.bandwidth_hz[n]) > -1e-6 * inst.deadline_s;
    }
    return best;
}

} // namespace hflsnm::alloc
