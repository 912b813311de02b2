#pragma once

#include <span>
#include <string>
#include <vector>

#include "deltagnn/subgraph.h"
#include "deltagnn/types.h"

namespace deltagnn {

enum class Direction { Incoming, Outgoing, Both };

Direction parse_direction(const std::string& name);
const char* direction_name(Direction d);

// Fanout value meaning "take every neighbor".
constexpr int kAllNeighbors = -1;

/// One sampled neighbor. `inverse` marks neighbors reached by walking an
/// edge against its direction (dst -> src).
struct Neighbor {
    NodeId node = 0;
    RelId rel = 0;
    bool inverse = false;

    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

struct SamplerConfig {
    std::vector<int> fanouts;  // fanouts[0] applies to the targets' own neighbors
    Direction direction = Direction::Both;
    uint64_t seed = 0;
};

/// Delta-encoded multi-hop neighborhood sample.
///
/// node_ids holds the delta groups outermost first (the group with no
/// sampled neighbors), targets last. node_id_offsets[g] is where group g
/// starts. Every node from node_id_offsets[1] onward owns one contiguous
/// neighbor range in nbrs starting at nbr_offsets[owner]. repr_map[t] is the
/// row of nbrs[t] in a representation matrix ordered like node_ids.
struct DenseSample {
    std::vector<int64_t> node_id_offsets;
    std::vector<NodeId> node_ids;
    std::vector<int64_t> nbr_offsets;
    std::vector<Neighbor> nbrs;
    std::vector<int64_t> repr_map;
    std::vector<int> fanouts;
    int k = 0;

    int64_t num_groups() const { return static_cast<int64_t>(node_id_offsets.size()); }
    int64_t group_begin(int64_t g) const { return node_id_offsets[static_cast<size_t>(g)]; }
    int64_t group_end(int64_t g) const {
        return g + 1 < num_groups() ? node_id_offsets[static_cast<size_t>(g) + 1]
                                    : static_cast<int64_t>(node_ids.size());
    }
    // Index in node_ids of the first node that owns a neighbor range.
    int64_t first_owner() const {
        return num_groups() > 1 ? node_id_offsets[1] : static_cast<int64_t>(node_ids.size());
    }
    int64_t num_owners() const { return static_cast<int64_t>(node_ids.size()) - first_owner(); }
    int64_t nbr_begin(int64_t owner) const { return nbr_offsets[static_cast<size_t>(owner)]; }
    int64_t nbr_end(int64_t owner) const {
        return owner + 1 < num_owners() ? nbr_offsets[static_cast<size_t>(owner) + 1]
                                        : static_cast<int64_t>(nbrs.size());
    }
    std::span<const NodeId> targets() const {
        auto b = static_cast<size_t>(group_begin(num_groups() - 1));
        return std::span<const NodeId>(node_ids).subspan(b);
    }

    // Throws Error describing the first violated structural invariant.
    void validate() const;

    std::string to_json() const;
};

struct OneHopResult {
    std::vector<Neighbor> nbrs;
    std::vector<int64_t> offsets;  // start of each delta node's range in nbrs
};

OneHopResult one_hop_sample(const InMemorySubgraph& sub, std::span<const NodeId> delta, int fanout,
                            Direction direction, uint64_t seed);

// Unique ids in `nbrs` absent from `node_ids`, in first-occurrence order.
std::vector<NodeId> compute_next_delta(std::span<const Neighbor> nbrs, std::span<const NodeId> node_ids);

DenseSample multi_hop_sample(const InMemorySubgraph& sub, std::span<const NodeId> targets,
                             const SamplerConfig& cfg);

void build_repr_map(DenseSample& d);

// Drops the outermost delta group and the neighbor lists of the next group,
// rebasing offsets so the structure describes one fewer layer.
void advance_layer(DenseSample& d);

}  // namespace deltagnn
