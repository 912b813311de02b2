#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "deltagnn/model.h"
#include "test_util.h"

// Independent reference computations shared by unit and acceptance tests.
namespace oracles {

using namespace deltagnn;

inline MatrixD random_matrix(Rng& rng, int64_t r, int64_t c, double scale = 1.0) {
    MatrixD m(r, c);
    for (auto& x : m.data) x = (2.0 * uniform_unit(rng) - 1.0) * scale;
    return m;
}

inline void randomize(std::span<float> xs, Rng& rng, double scale) {
    for (auto& x : xs) x = static_cast<float>((2.0 * uniform_unit(rng) - 1.0) * scale);
}

inline DenseSample random_sample(Rng& rng, int k) {
    const int64_t n = 3 + static_cast<int64_t>(uniform_index(rng, 30));
    auto edges = testutil::random_edges(rng, n, 3 * n);
    auto sub = testutil::whole_graph(n, edges);
    std::vector<NodeId> targets;
    for (NodeId v = 0; v < n; ++v)
        if (uniform_unit(rng) < 0.3) targets.push_back(v);
    if (targets.empty()) targets.push_back(0);
    std::vector<int> fanouts(static_cast<size_t>(k), 3);
    auto d = multi_hop_sample(sub, targets, {fanouts, Direction::Both, uniform_index(rng, 1000)});
    build_repr_map(d);
    return d;
}

// Per-node scan: find each neighbor's row by searching node_ids instead of
// using repr_map; neighbors summed in list order, then the node itself.
inline MatrixD additive_oracle(const DenseSample& d, const MatrixD& h) {
    MatrixD out(d.num_owners(), h.cols);
    for (int64_t o = 0; o < d.num_owners(); ++o) {
        for (auto t = d.nbr_begin(o); t < d.nbr_end(o); ++t) {
            const NodeId u = d.nbrs[static_cast<size_t>(t)].node;
            int64_t row = 0;
            while (d.node_ids[static_cast<size_t>(row)] != u) ++row;
            for (int64_t k = 0; k < h.cols; ++k) out(o, k) += h(row, k);
        }
        for (int64_t k = 0; k < h.cols; ++k) out(o, k) += h(d.first_owner() + o, k);
    }
    return out;
}

// Every neighbor of v the sampler may see, in candidate order.
inline std::vector<NodeId> all_neighbors(const InMemorySubgraph& sub, NodeId v, Direction dir) {
    std::vector<NodeId> out;
    if (dir != Direction::Outgoing)
        for (const auto& e : sub.in_edges(v)) out.push_back(e.src);
    if (dir != Direction::Incoming)
        for (const auto& e : sub.out_edges(v)) out.push_back(e.dst);
    return out;
}

// Naive recursive expansion: hop distance of every node within k hops.
inline void expand(const InMemorySubgraph& sub, NodeId v, int depth, int k, Direction dir,
            std::map<NodeId, int>& dist) {
    auto it = dist.find(v);
    if (it != dist.end() && it->second <= depth) return;
    dist[v] = depth;
    if (depth == k) return;
    for (auto u : all_neighbors(sub, v, dir)) expand(sub, u, depth + 1, k, dir, dist);
}

// A 10-node instance with a batch over four targets.
struct Instance {
    ModelState model;
    Batch batch;
};

inline Instance make_instance(Task task, EncoderType enc, int layers, uint64_t seed) {
    Rng rng(seed);
    const int64_t n = 10, dim = 4;
    auto edges = testutil::random_edges(rng, n, 25, 2);
    auto sub = testutil::whole_graph(n, edges);

    ModelConfig cfg;
    cfg.task = task;
    cfg.encoder = enc;
    cfg.dim = dim;
    cfg.num_nodes = n;
    cfg.num_relations = 2;
    cfg.num_classes = task == Task::NodeClassification ? 3 : 0;
    cfg.fanouts.assign(static_cast<size_t>(layers), kAllNeighbors);
    cfg.direction = Direction::Both;

    Instance in;
    in.model = ModelState::init(cfg, seed);
    randomize(in.model.relations.data, rng, 1.0);
    for (auto& l : in.model.layers) randomize(l.bias, rng, 0.3);
    randomize(in.model.classifier_bias, rng, 0.3);

    std::vector<NodeId> targets = {0, 3, 5, 8};
    in.batch.dense = multi_hop_sample(sub, targets, {cfg.fanouts, cfg.direction, seed});
    build_repr_map(in.batch.dense);
    const auto rows = static_cast<int64_t>(in.batch.dense.node_ids.size());
    in.batch.h0.resize(rows, dim);
    in.batch.h0_state.resize(rows, dim);
    randomize(in.batch.h0.data, rng, 1.0);

    if (task == Task::LinkPrediction) {
        auto& lp = in.batch.link;
        lp.src = {0, 1, 2};
        lp.dst = {1, 3, 0};
        lp.rel = {0, 1, 1};
        lp.negatives = 2;
        lp.neg = {2, 3, 0, 2, 1, 3};
    } else {
        in.batch.node.rows = {0, 1, 3};
        in.batch.node.labels = {2, 0, 1};
    }
    return in;
}

// Norm-wise relative error |a - b| / |b|.
inline double rel_error(const std::vector<double>& a, const std::vector<double>& b) {
    double diff = 0.0, norm = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        norm += b[i] * b[i];
    }
    return std::sqrt(diff) / std::max(std::sqrt(norm), 1e-12);
}

// Central differences over float parameters; the step is the actual
// representable difference so float rounding does not bias the quotient.
inline std::vector<double> numeric_grad(std::span<float> params, const std::function<double()>& loss,
                                        double eps = 1e-4) {
    std::vector<double> g(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
        const float orig = params[i];
        const auto up = static_cast<float>(orig + eps);
        const auto down = static_cast<float>(orig - eps);
        params[i] = up;
        const double lu = loss();
        params[i] = down;
        const double ld = loss();
        params[i] = orig;
        g[i] = (lu - ld) / (static_cast<double>(up) - static_cast<double>(down));
    }
    return g;
}

// Relative error of every parameter class that the instance's task trains.
inline std::vector<std::pair<std::string, double>> gradient_errors(Instance& in) {
    Gradients grads;
    compute_gradients(in.model, in.batch, grads);
    auto loss = [&] { return batch_loss(in.model, in.batch); };
    std::vector<std::pair<std::string, double>> out;
    out.emplace_back("embeddings", rel_error(numeric_grad(in.batch.h0.data, loss), grads.h0.data));
    if (in.model.config.task == Task::LinkPrediction) {
        out.emplace_back("relations", rel_error(numeric_grad(in.model.relations.data, loss), grads.relations.data));
    } else {
        out.emplace_back("classifier", rel_error(numeric_grad(in.model.classifier.data, loss), grads.classifier.data));
        out.emplace_back("classifier_bias",
                         rel_error(numeric_grad(in.model.classifier_bias, loss), grads.classifier_bias));
    }
    if (in.model.config.encoder != EncoderType::Sage) return out;
    for (size_t i = 0; i < in.model.layers.size(); ++i) {
        auto& p = in.model.layers[i];
        const auto& g = grads.layers[i];
        const auto tag = "layer" + std::to_string(i);
        out.emplace_back(tag + ".w_self", rel_error(numeric_grad(p.w_self.data, loss), g.w_self.data));
        out.emplace_back(tag + ".w_nbr", rel_error(numeric_grad(p.w_nbr.data, loss), g.w_nbr.data));
        out.emplace_back(tag + ".bias", rel_error(numeric_grad(p.bias, loss), g.bias));
    }
    return out;
}

}  // namespace oracles
