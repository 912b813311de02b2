#pragma once

#include <memory>
#include <span>
#include <vector>

#include "deltagnn/graph_store.h"
#include "deltagnn/types.h"

namespace deltagnn {

/// Edges among a set of resident partitions, held twice: sorted by source
/// and sorted by destination. A per-node range table over each copy gives
/// O(1) access to a node's outgoing and incoming edges.
///
/// Node ranges are indexed by a local id: resident partitions in ascending
/// order, nodes in partition order within each.
class InMemorySubgraph {
  public:
    InMemorySubgraph() = default;

    InMemorySubgraph(std::shared_ptr<const PartitionMap> partitions,
                     std::vector<PartitionId> resident, std::vector<Edge> edges);

    static InMemorySubgraph build(const EdgeBucketStore& store,
                                  std::shared_ptr<const PartitionMap> partitions,
                                  std::vector<PartitionId> resident);

    // Replaces `evicted` partitions with `loaded` ones. `incoming` must hold
    // exactly the edges of buckets that become resident (both endpoints in
    // the new resident set and at least one in `loaded`). The result is
    // identical to a full rebuild over the new resident set.
    void swap_partitions(std::span<const PartitionId> evicted, std::span<const PartitionId> loaded,
                         std::vector<Edge> incoming);

    bool is_resident_partition(PartitionId part) const {
        return part >= 0 && static_cast<size_t>(part) < base_.size() && base_[static_cast<size_t>(part)] >= 0;
    }
    bool is_resident(NodeId v) const;

    int64_t local_id(NodeId v) const;  // throws ResidencyError
    NodeId global_id(int64_t local) const;

    std::span<const Edge> out_edges(NodeId v) const;
    std::span<const Edge> in_edges(NodeId v) const;

    const std::vector<PartitionId>& resident_partitions() const { return resident_; }
    int64_t num_nodes() const { return num_local_; }
    int64_t num_edges() const { return static_cast<int64_t>(by_src_.size()); }
    const std::vector<Edge>& edges_by_src() const { return by_src_; }
    const std::vector<Edge>& edges_by_dst() const { return by_dst_; }
    const PartitionMap& partition_map() const { return *partitions_; }

    // All resident node ids in local-id order.
    std::vector<NodeId> resident_nodes() const;

  private:
    void index_partitions();
    void build_ranges();

    std::shared_ptr<const PartitionMap> partitions_;
    std::vector<PartitionId> resident_;
    std::vector<int64_t> base_;  // per physical partition, local-id base or -1
    int64_t num_local_ = 0;
    std::vector<Edge> by_src_;
    std::vector<Edge> by_dst_;
    std::vector<int64_t> out_ranges_;  // [begin, end) pairs per local id
    std::vector<int64_t> in_ranges_;
};

}  // namespace deltagnn
