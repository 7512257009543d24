#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "hflsnm/errors.hpp"
#include "hflsnm/rng.hpp"
#include "hflsnm/socialnet.hpp"

namespace hflsnm::sim {

// Flattened parameter vector: per class, feature_dim weights followed by a bias.
using Model = std::vector<double>;

struct LearnerSpec {
    int feature_dim = 20;
    int classes = 5;
    double learning_rate = 0.05;

    int param_count() const { return classes * (feature_dim + 1); }
    double model_bits() const { return 32.0 * param_count(); }
};

struct Dataset {
    int feature_dim = 0;
    std::vector<double> x; // row-major, size() * feature_dim
    std::vector<int> y;

    std::size_t size() const { return y.size(); }

    void append(const Dataset& other) {
        if (feature_dim == 0) feature_dim = other.feature_dim;
        if (other.feature_dim != feature_dim)
            throw ArgumentError("cannot concatenate datasets of different dimension");
        x.insert(x.end(), other.x.begin(), other.x.end());
        y.insert(y.end(), other.y.begin(), other.y.end());
    }
};

inline Model init_model(const LearnerSpec& spec) {
    return Model(static_cast<std::size_t>(spec.param_count()), 0.0);
}

// Adds the sum of per-sample softmax cross-entropy gradients to grad.
inline void accumulate_gradient(const LearnerSpec& spec, const Model& model, const Dataset& data,
                                std::vector<double>& grad) {
    const int dim = spec.feature_dim;
    const int cls = spec.classes;
    std::vector<double> logits(static_cast<std::size_t>(cls));
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double* xi = data.x.data() + static_cast<std::size_t>(dim) * i;
        double max_logit = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < cls; ++c) {
            const double* w = model.data() + static_cast<std::size_t>(c) * (dim + 1);
            double v = w[dim];
            for (int d = 0; d < dim; ++d) v += w[d] * xi[d];
            logits[static_cast<std::size_t>(c)] = v;
            max_logit = std::max(max_logit, v);
        }
        double z = 0.0;
        for (int c = 0; c < cls; ++c) {
            logits[static_cast<std::size_t>(c)] = std::exp(logits[static_cast<std::size_t>(c)] - max_logit);
            z += logits[static_cast<std::size_t>(c)];
        }
        for (int c = 0; c < cls; ++c) {
            const double coef = logits[static_cast<std::size_t>(c)] / z - (c == data.y[i] ? 1.0 : 0.0);
            double* gw = grad.data() + static_cast<std::size_t>(c) * (dim + 1);
            for (int d = 0; d < dim; ++d) gw[d] += coef * xi[d];
            gw[dim] += coef;
        }
    }
}

// Full-batch gradient descent on the mean loss; iters = 0 returns the input.
inline Model local_train(const LearnerSpec& spec, Model model, const Dataset& data, int iters,
                         double eta) {
    if (data.size() == 0 || iters == 0) return model;
    std::vector<double> grad(model.size());
    for (int t = 0; t < iters; ++t) {
        std::fill(grad.begin(), grad.end(), 0.0);
        accumulate_gradient(spec, model, data, grad);
        const double scale = eta / static_cast<double>(data.size());
        for (std::size_t i = 0; i < model.size(); ++i) model[i] -= scale * grad[i];
    }
    return model;
}

// Top-1 accuracy; prediction ties resolve to the lowest class index.
inline double evaluate(const LearnerSpec& spec, const Model& model, const Dataset& test) {
    if (test.size() == 0) return 0.0;
    const int dim = spec.feature_dim;
    const int cls = spec.classes;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const double* xi = test.x.data() + static_cast<std::size_t>(dim) * i;
        int arg = 0;
        double best = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < cls; ++c) {
            const double* w = model.data() + static_cast<std::size_t>(c) * (dim + 1);
            double v = w[dim];
            for (int d = 0; d < dim; ++d) v += w[d] * xi[d];
            if (v > best) {
                best = v;
                arg = c;
            }
        }
        if (arg == test.y[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(test.size());
}

struct TaskParams {
    int feature_dim = 20;
    int classes = 5;
    double dirichlet_rho = 0.6;    // label-skew concentration per client
    double class_separation = 2.0; // distance of class means from the origin
    double feature_noise = 1.0;    // within-class standard deviation
    int test_per_class = 200;
};

// Synthetic classification task realized on top of a social graph: each block
// materializes one sample set (identical on both owners of a shared block),
// labels drawn from the owners' Dirichlet class mix, features from
// class-conditional Gaussians.
struct SyntheticTask {
    TaskParams params;
    std::vector<Dataset> block_data;  // aligned with graph block indices
    std::vector<Dataset> client_data; // concatenation of the client's blocks
    Dataset test_set;
};

inline SyntheticTask make_task(const net::SocialGraph& g, const TaskParams& p, std::uint64_t seed) {
    if (p.feature_dim < 1 || p.classes < 2) throw ConfigError("task needs >= 1 feature and >= 2 classes");
    if (p.dirichlet_rho <= 0.0) throw ConfigError("dirichlet concentration must be positive");

    SyntheticTask task;
    task.params = p;

    // Class means: deterministic random directions scaled to the separation radius.
    std::vector<std::vector<double>> means(static_cast<std::size_t>(p.classes));
    for (int c = 0; c < p.classes; ++c) {
        Rng mrng(derive_seed(seed, {0xC1A55ULL, static_cast<std::uint64_t>(c)}));
        auto& mu = means[static_cast<std::size_t>(c)];
        mu.resize(static_cast<std::size_t>(p.feature_dim));
        double norm = 0.0;
        for (auto& v : mu) {
            v = mrng.normal();
            norm += v * v;
        }
        norm = std::sqrt(norm);
        if (norm <= 0.0) norm = 1.0;
        for (auto& v : mu) v *= p.class_separation / norm;
    }

    // Per-client label mixes.
    std::vector<std::vector<double>> mix(static_cast<std::size_t>(g.client_count()));
    for (int n = 0; n < g.client_count(); ++n) {
        Rng drng(derive_seed(seed, {0xD1E7ULL, static_cast<std::uint64_t>(n)}));
        mix[static_cast<std::size_t>(n)] = drng.dirichlet(p.dirichlet_rho, static_cast<std::size_t>(p.classes));
    }

    auto sample_into = [&](Dataset& ds, const std::vector<double>& weights, long long count, Rng& rng) {
        ds.feature_dim = p.feature_dim;
        for (long long i = 0; i < count; ++i) {
            const double u = rng.unit();
            int label = p.classes - 1;
            double acc = 0.0;
            for (int c = 0; c < p.classes; ++c) {
                acc += weights[static_cast<std::size_t>(c)];
                if (u < acc) {
                    label = c;
                    break;
                }
            }
            ds.y.push_back(label);
            const auto& mu = means[static_cast<std::size_t>(label)];
            for (int d = 0; d < p.feature_dim; ++d) {
                ds.x.push_back(mu[static_cast<std::size_t>(d)] + p.feature_noise * rng.normal());
            }
        }
    };

    task.block_data.resize(g.blocks().size());
    for (std::size_t b = 0; b < g.blocks().size(); ++b) {
        const auto& blk = g.blocks()[b];
        std::vector<double> w = mix[static_cast<std::size_t>(blk.owner_a)];
        if (blk.shared()) {
            const auto& w2 = mix[static_cast<std::size_t>(blk.owner_b)];
            for (std::size_t c = 0; c < w.size(); ++c) w[c] = 0.5 * (w[c] + w2[c]);
        }
        Rng brng(derive_seed(seed, {0xB10CULL, static_cast<std::uint64_t>(b)}));
        sample_into(task.block_data[b], w, blk.size, brng);
    }

    task.client_data.resize(static_cast<std::size_t>(g.client_count()));
    for (int n = 0; n < g.client_count(); ++n) {
        auto& ds = task.client_data[static_cast<std::size_t>(n)];
        ds.feature_dim = p.feature_dim;
        for (int b : g.blocks_of(n)) ds.append(task.block_data[static_cast<std::size_t>(b)]);
    }

    Rng trng(derive_seed(seed, {0x7E57ULL}));
    task.test_set.feature_dim = p.feature_dim;
    for (int c = 0; c < p.classes; ++c) {
        std::vector<double> onehot(static_cast<std::size_t>(p.classes), 0.0);
        onehot[static_cast<std::size_t>(c)] = 1.0;
        sample_into(task.test_set, onehot, p.test_per_class, trng);
    }
    return task;
}

} // namespace hflsnm::sim
