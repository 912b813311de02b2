#include "deltagnn/dense.h"

#include <algorithm>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

namespace deltagnn {

Direction parse_direction(const std::string& name) {
    if (name == "incoming" || name == "in") return Direction::Incoming;
    if (name == "outgoing" || name == "out") return Direction::Outgoing;
    if (name == "both") return Direction::Both;
    throw Error("unknown direction '" + name + "' (expected incoming, outgoing, both)");
}

const char* direction_name(Direction d) {
    switch (d) {
        case Direction::Incoming: return "incoming";
        case Direction::Outgoing: return "outgoing";
        case Direction::Both: return "both";
    }
    return "both";
}

void DenseSample::validate() const {
    if (node_id_offsets.empty() || node_id_offsets[0] != 0)
        throw Error("node_id_offsets must start with 0");
    for (size_t g = 1; g < node_id_offsets.size(); ++g)
        if (node_id_offsets[g] < node_id_offsets[g - 1] ||
            node_id_offsets[g] > static_cast<int64_t>(node_ids.size()))
            throw Error("node_id_offsets not monotone within node_ids");
    if (num_groups() != k + 1) throw Error("group count does not match layer count");

    std::unordered_set<NodeId> seen;
    for (auto v : node_ids)
        if (!seen.insert(v).second) throw Error("duplicate node id " + std::to_string(v));

    if (static_cast<int64_t>(nbr_offsets.size()) != num_owners())
        throw Error("nbr_offsets size does not match the number of neighbor-owning nodes");
    for (size_t t = 0; t < nbr_offsets.size(); ++t) {
        if ((t == 0 && nbr_offsets[t] != 0) || (t > 0 && nbr_offsets[t] < nbr_offsets[t - 1]) ||
            nbr_offsets[t] > static_cast<int64_t>(nbrs.size()))
            throw Error("nbr_offsets not monotone within nbrs");
    }
    if (nbr_offsets.empty() && !nbrs.empty()) throw Error("neighbors without owners");
    for (const auto& n : nbrs)
        if (!seen.count(n.node)) throw Error("closure violated: neighbor " + std::to_string(n.node));
    if (!repr_map.empty() || nbrs.empty()) {
        if (repr_map.size() != nbrs.size()) throw Error("repr_map not parallel to nbrs");
        for (size_t t = 0; t < nbrs.size(); ++t) {
            if (repr_map[t] < 0 || repr_map[t] >= static_cast<int64_t>(node_ids.size()) ||
                node_ids[static_cast<size_t>(repr_map[t])] != nbrs[t].node)
                throw Error("repr_map entry " + std::to_string(t) + " does not index its neighbor");
        }
    }
}

std::string DenseSample::to_json() const {
    nlohmann::json j;
    j["node_id_offsets"] = node_id_offsets;
    j["node_ids"] = node_ids;
    j["nbr_offsets"] = nbr_offsets;
    auto arr = nlohmann::json::array();
    for (const auto& n : nbrs) arr.push_back({n.node, n.rel, n.inverse ? 1 : 0});
    j["nbrs"] = arr;
    j["repr_map"] = repr_map;
    j["fanouts"] = fanouts;
    j["k"] = k;
    return j.dump();
}

namespace {

// Candidate neighbors of v in direction order: incoming first, then outgoing.
struct Candidates {
    std::span<const Edge> in;
    std::span<const Edge> out;

    size_t size() const { return in.size() + out.size(); }
    Neighbor at(size_t t) const {
        if (t < in.size()) return {in[t].src, in[t].rel, false};
        const Edge& e = out[t - in.size()];
        return {e.dst, e.rel, true};
    }
};

Candidates candidates(const InMemorySubgraph& sub, NodeId v, Direction dir) {
    Candidates c;
    if (dir != Direction::Outgoing) c.in = sub.in_edges(v);
    if (dir != Direction::Incoming) c.out = sub.out_edges(v);
    return c;
}

}  // namespace

OneHopResult one_hop_sample(const InMemorySubgraph& sub, std::span<const NodeId> delta, int fanout,
                            Direction direction, uint64_t seed) {
    if (fanout == 0 || fanout < kAllNeighbors) throw Error("fanout must be positive or ALL");
    OneHopResult res;
    res.offsets.reserve(delta.size());
    std::vector<uint32_t> scratch;
    for (size_t j = 0; j < delta.size(); ++j) {
        res.offsets.push_back(static_cast<int64_t>(res.nbrs.size()));
        auto cand = candidates(sub, delta[j], direction);
        const size_t deg = cand.size();
        if (fanout == kAllNeighbors || deg <= static_cast<size_t>(fanout)) {
            for (size_t t = 0; t < deg; ++t) res.nbrs.push_back(cand.at(t));
            continue;
        }
        // partial Fisher-Yates; each node gets its own stream so the result
        // does not depend on how nodes are split across workers
        Rng rng(derive_seed(seed, j));
        scratch.resize(deg);
        std::iota(scratch.begin(), scratch.end(), 0u);
        const auto f = static_cast<size_t>(fanout);
        for (size_t t = 0; t < f; ++t) {
            size_t pick = t + uniform_index(rng, deg - t);
            std::swap(scratch[t], scratch[pick]);
        }
        std::sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(f));
        for (size_t t = 0; t < f; ++t) res.nbrs.push_back(cand.at(scratch[t]));
    }
    return res;
}

std::vector<NodeId> compute_next_delta(std::span<const Neighbor> nbrs, std::span<const NodeId> node_ids) {
    std::unordered_set<NodeId> seen(node_ids.begin(), node_ids.end());
    std::vector<NodeId> out;
    for (const auto& n : nbrs)
        if (seen.insert(n.node).second) out.push_back(n.node);
    return out;
}

DenseSample multi_hop_sample(const InMemorySubgraph& sub, std::span<const NodeId> targets,
                             const SamplerConfig& cfg) {
    const int k = static_cast<int>(cfg.fanouts.size());
    std::unordered_set<NodeId> seen;
    seen.reserve(targets.size() * 2);
    for (auto v : targets) {
        if (!seen.insert(v).second) throw Error("duplicate target node " + std::to_string(v));
        if (!sub.is_resident(v)) throw ResidencyError("target node " + std::to_string(v) + " is not resident");
    }

    DenseSample d;
    d.fanouts = cfg.fanouts;
    d.k = k;
    d.node_id_offsets = {0};
    d.node_ids.assign(targets.begin(), targets.end());
    std::vector<NodeId> delta(targets.begin(), targets.end());

    for (int round = 0; round < k; ++round) {
        auto hop = one_hop_sample(sub, delta, cfg.fanouts[static_cast<size_t>(round)], cfg.direction,
                                  derive_seed(cfg.seed, static_cast<uint64_t>(round)));
        const auto added = static_cast<int64_t>(hop.nbrs.size());
        for (auto& off : d.nbr_offsets) off += added;
        hop.offsets.insert(hop.offsets.end(), d.nbr_offsets.begin(), d.nbr_offsets.end());
        d.nbr_offsets = std::move(hop.offsets);

        std::vector<NodeId> next;
        for (const auto& n : hop.nbrs)
            if (seen.insert(n.node).second) next.push_back(n.node);

        hop.nbrs.insert(hop.nbrs.end(), d.nbrs.begin(), d.nbrs.end());
        d.nbrs = std::move(hop.nbrs);

        const auto shift = static_cast<int64_t>(next.size());
        for (auto& off : d.node_id_offsets) off += shift;
        d.node_id_offsets.insert(d.node_id_offsets.begin(), 0);
        next.insert(next.end(), d.node_ids.begin(), d.node_ids.end());
        d.node_ids.swap(next);
        delta.assign(d.node_ids.begin(), d.node_ids.begin() + shift);
    }
    return d;
}

void build_repr_map(DenseSample& d) {
    std::unordered_map<NodeId, int64_t> position;
    position.reserve(d.node_ids.size() * 2);
    for (size_t i = 0; i < d.node_ids.size(); ++i) position.emplace(d.node_ids[i], static_cast<int64_t>(i));
    d.repr_map.resize(d.nbrs.size());
    for (size_t t = 0; t < d.nbrs.size(); ++t) {
        auto it = position.find(d.nbrs[t].node);
        if (it == position.end())
            throw Error("closure violated: neighbor " + std::to_string(d.nbrs[t].node) +
                        " missing from node_ids");
        d.repr_map[t] = it->second;
    }
}

void advance_layer(DenseSample& d) {
    if (d.num_groups() < 2) throw Error("advance_layer needs at least two delta groups");
    if (d.repr_map.size() != d.nbrs.size()) throw Error("advance_layer needs a built repr_map");

    const int64_t outer_len = d.node_id_offsets[1];
    const int64_t next_len = d.group_end(1) - d.group_begin(1);
    const int64_t next_nbrs = next_len < static_cast<int64_t>(d.nbr_offsets.size())
                                  ? d.nbr_offsets[static_cast<size_t>(next_len)]
                                  : static_cast<int64_t>(d.nbrs.size());

    d.nbrs.erase(d.nbrs.begin(), d.nbrs.begin() + next_nbrs);
    d.repr_map.erase(d.repr_map.begin(), d.repr_map.begin() + next_nbrs);
    for (auto& r : d.repr_map) r -= outer_len;
    d.nbr_offsets.erase(d.nbr_offsets.begin(), d.nbr_offsets.begin() + next_len);
    for (auto& off : d.nbr_offsets) off -= next_nbrs;
    d.node_ids.erase(d.node_ids.begin(), d.node_ids.begin() + outer_len);
    d.node_id_offsets.erase(d.node_id_offsets.begin());
    for (auto& off : d.node_id_offsets) off -= outer_len;
    d.k -= 1;
    if (!d.fanouts.empty()) d.fanouts.pop_back();
}

}  // namespace deltagnn
