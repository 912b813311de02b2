#include "deltagnn/synth.h"

#include <fstream>
#include <numeric>
#include <set>
#include <tuple>

namespace deltagnn {

namespace fs = std::filesystem;

RawGraph synthetic_graph(const SynthOptions& o) {
    if (o.nodes < 2 || o.edges < 1) throw Error("synthetic graph needs at least 2 nodes and 1 edge");
    const bool nc = o.kind == "nc";
    if (!nc && o.kind != "kg") throw Error("synthetic kind must be kg or nc");
    Rng rng(o.seed);
    const int32_t K = nc ? o.classes : o.clusters;
    if (K < 1) throw Error("synthetic graph needs at least one cluster");

    std::vector<NodeId> perm(static_cast<size_t>(o.nodes));
    std::iota(perm.begin(), perm.end(), 0);
    shuffle(perm, rng);
    std::vector<int32_t> cluster(static_cast<size_t>(o.nodes));
    std::vector<std::vector<NodeId>> members(static_cast<size_t>(K));
    for (size_t t = 0; t < perm.size(); ++t) {
        const auto c = static_cast<int32_t>(t % static_cast<size_t>(K));
        cluster[static_cast<size_t>(perm[t])] = c;
        members[static_cast<size_t>(c)].push_back(perm[t]);
    }

    RawGraph g;
    g.num_nodes = o.nodes;
    g.num_relations = nc ? 1 : o.relations;
    std::set<std::tuple<NodeId, RelId, NodeId>> seen;
    const auto n = static_cast<uint64_t>(o.nodes);
    int64_t attempts = 0;
    while (static_cast<int64_t>(g.edges.size()) < o.edges) {
        if (++attempts > o.edges * 50) throw Error("synthetic graph too dense for the requested edge count");
        const auto src = static_cast<NodeId>(uniform_index(rng, n));
        const auto rel = static_cast<RelId>(nc ? 0 : uniform_index(rng, static_cast<uint64_t>(o.relations)));
        NodeId dst;
        const bool structured = nc ? uniform_unit(rng) < o.homophily : uniform_unit(rng) >= o.noise;
        if (structured) {
            const int32_t c = nc ? cluster[static_cast<size_t>(src)]
                                 : (cluster[static_cast<size_t>(src)] + rel + 1) % K;
            const auto& m = members[static_cast<size_t>(c)];
            dst = m[uniform_index(rng, m.size())];
        } else {
            dst = static_cast<NodeId>(uniform_index(rng, n));
        }
        if (dst == src) continue;
        if (!seen.emplace(src, rel, dst).second) continue;
        g.edges.push_back({src, rel, dst});
    }

    if (nc) {
        g.train_edges.resize(g.edges.size());
        std::iota(g.train_edges.begin(), g.train_edges.end(), 0);
        g.num_classes = K;
        g.labels = cluster;
        std::vector<NodeId> order(static_cast<size_t>(o.nodes));
        std::iota(order.begin(), order.end(), 0);
        shuffle(order, rng);
        const auto n_train = static_cast<size_t>(o.train_node_fraction * static_cast<double>(o.nodes));
        const auto n_valid = static_cast<size_t>(o.valid_fraction * static_cast<double>(o.nodes));
        const auto n_test = static_cast<size_t>(o.test_fraction * static_cast<double>(o.nodes));
        for (size_t t = 0; t < order.size(); ++t) {
            if (t < n_train) g.train_nodes.push_back(order[t]);
            else if (t < n_train + n_valid) g.valid_nodes.push_back(order[t]);
            else if (t < n_train + n_valid + n_test) g.test_nodes.push_back(order[t]);
            else g.labels[static_cast<size_t>(order[t])] = -1;
        }
        std::sort(g.train_nodes.begin(), g.train_nodes.end());
        std::sort(g.valid_nodes.begin(), g.valid_nodes.end());
        std::sort(g.test_nodes.begin(), g.test_nodes.end());
    } else {
        std::vector<int64_t> idx(g.edges.size());
        std::iota(idx.begin(), idx.end(), 0);
        shuffle(idx, rng);
        const auto n_valid = static_cast<size_t>(o.valid_fraction * static_cast<double>(idx.size()));
        const auto n_test = static_cast<size_t>(o.test_fraction * static_cast<double>(idx.size()));
        for (size_t t = 0; t < idx.size(); ++t) {
            if (t < n_valid) g.valid_edges.push_back(idx[t]);
            else if (t < n_valid + n_test) g.test_edges.push_back(idx[t]);
            else g.train_edges.push_back(idx[t]);
        }
        std::sort(g.train_edges.begin(), g.train_edges.end());
        std::sort(g.valid_edges.begin(), g.valid_edges.end());
        std::sort(g.test_edges.begin(), g.test_edges.end());
    }
    g.validate();
    return g;
}

void write_synthetic(const fs::path& dir, const SynthOptions& o) {
    const RawGraph g = synthetic_graph(o);
    fs::create_directories(dir);
    const bool nc = o.kind == "nc";
    auto write_edges = [&](const fs::path& path, const std::vector<int64_t>& ids) {
        std::ofstream out(path);
        if (!out) throw Error("cannot write " + path.string());
        for (auto i : ids) {
            const Edge& e = g.edges[static_cast<size_t>(i)];
            if (nc) out << e.src << '\t' << e.dst << '\n';
            else out << e.src << '\t' << e.rel << '\t' << e.dst << '\n';
        }
    };
    write_edges(dir / "train.txt", g.train_edges);
    if (!nc) {
        write_edges(dir / "valid.txt", g.valid_edges);
        write_edges(dir / "test.txt", g.test_edges);
        return;
    }
    std::ofstream out(dir / "labels.tsv");
    auto put = [&](const std::vector<NodeId>& nodes, const char* split) {
        for (auto v : nodes) out << v << '\t' << g.labels[static_cast<size_t>(v)] << '\t' << split << '\n';
    };
    put(g.train_nodes, "train");
    put(g.valid_nodes, "valid");
    put(g.test_nodes, "test");
}

}  // namespace deltagnn
