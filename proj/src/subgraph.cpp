#include "deltagnn/subgraph.h"

#include <algorithm>

namespace deltagnn {

InMemorySubgraph::InMemorySubgraph(std::shared_ptr<const PartitionMap> partitions,
                                   std::vector<PartitionId> resident, std::vector<Edge> edges)
    : partitions_(std::move(partitions)), resident_(std::move(resident)) {
    index_partitions();
    for (const Edge& e : edges)
        if (!is_resident(e.src) || !is_resident(e.dst))
            throw ResidencyError("subgraph edge has a non-resident endpoint");
    by_dst_ = edges;
    by_src_ = std::move(edges);
    std::sort(by_src_.begin(), by_src_.end(), src_order);
    std::sort(by_dst_.begin(), by_dst_.end(), dst_order);
    build_ranges();
}

InMemorySubgraph InMemorySubgraph::build(const EdgeBucketStore& store,
                                         std::shared_ptr<const PartitionMap> partitions,
                                         std::vector<PartitionId> resident) {
    std::vector<Edge> edges;
    for (auto i : resident)
        for (auto j : resident) {
            auto bucket = store.read_bucket(i, j);
            edges.insert(edges.end(), bucket.begin(), bucket.end());
        }
    return InMemorySubgraph(std::move(partitions), std::move(resident), std::move(edges));
}

void InMemorySubgraph::index_partitions() {
    std::sort(resident_.begin(), resident_.end());
    if (std::adjacent_find(resident_.begin(), resident_.end()) != resident_.end())
        throw Error("duplicate resident partition");
    base_.assign(static_cast<size_t>(partitions_->p), -1);
    num_local_ = 0;
    for (auto part : resident_) {
        if (part < 0 || part >= partitions_->p) throw Error("resident partition id out of range");
        base_[static_cast<size_t>(part)] = num_local_;
        num_local_ += partitions_->partition_sizes[static_cast<size_t>(part)];
    }
}

void InMemorySubgraph::build_ranges() {
    out_ranges_.assign(static_cast<size_t>(num_local_) * 2, 0);
    in_ranges_.assign(static_cast<size_t>(num_local_) * 2, 0);
    auto fill = [this](const std::vector<Edge>& sorted, std::vector<int64_t>& ranges, bool by_src) {
        size_t t = 0;
        while (t < sorted.size()) {
            NodeId key = by_src ? sorted[t].src : sorted[t].dst;
            size_t end = t;
            while (end < sorted.size() && (by_src ? sorted[end].src : sorted[end].dst) == key) ++end;
            auto local = static_cast<size_t>(local_id(key));
            ranges[2 * local] = static_cast<int64_t>(t);
            ranges[2 * local + 1] = static_cast<int64_t>(end);
            t = end;
        }
    };
    fill(by_src_, out_ranges_, true);
    fill(by_dst_, in_ranges_, false);
}

void InMemorySubgraph::swap_partitions(std::span<const PartitionId> evicted,
                                       std::span<const PartitionId> loaded,
                                       std::vector<Edge> incoming) {
    std::vector<char> gone(static_cast<size_t>(partitions_->p), 0);
    for (auto part : evicted) {
        if (!is_resident_partition(part)) throw ResidencyError("evicting a non-resident partition");
        gone[static_cast<size_t>(part)] = 1;
    }
    std::vector<PartitionId> next;
    for (auto part : resident_)
        if (!gone[static_cast<size_t>(part)]) next.push_back(part);
    for (auto part : loaded) {
        if (is_resident_partition(part) && !gone[static_cast<size_t>(part)])
            throw Error("loading an already resident partition");
        next.push_back(part);
    }
    resident_ = std::move(next);
    index_partitions();

    const auto& pm = *partitions_;
    auto keep = [&](const Edge& e) {
        return !gone[static_cast<size_t>(pm.partition_of(e.src))] &&
               !gone[static_cast<size_t>(pm.partition_of(e.dst))];
    };
    for (const Edge& e : incoming)
        if (!is_resident(e.src) || !is_resident(e.dst))
            throw ResidencyError("incoming edge has a non-resident endpoint");

    auto merge_in = [&](std::vector<Edge>& sorted, auto cmp) {
        std::vector<Edge> kept;
        kept.reserve(sorted.size() + incoming.size());
        std::copy_if(sorted.begin(), sorted.end(), std::back_inserter(kept), keep);
        std::vector<Edge> add = incoming;
        std::sort(add.begin(), add.end(), cmp);
        std::vector<Edge> merged;
        merged.reserve(kept.size() + add.size());
        std::merge(kept.begin(), kept.end(), add.begin(), add.end(), std::back_inserter(merged), cmp);
        sorted = std::move(merged);
    };
    merge_in(by_src_, src_order);
    merge_in(by_dst_, dst_order);
    build_ranges();
}

bool InMemorySubgraph::is_resident(NodeId v) const {
    if (!partitions_ || v < 0 || v >= partitions_->num_nodes()) return false;
    return base_[static_cast<size_t>(partitions_->partition_of(v))] >= 0;
}

int64_t InMemorySubgraph::local_id(NodeId v) const {
    if (!is_resident(v)) throw ResidencyError("node " + std::to_string(v) + " is not resident");
    return base_[static_cast<size_t>(partitions_->partition_of(v))] + partitions_->position_of(v);
}

NodeId InMemorySubgraph::global_id(int64_t local) const {
    if (local < 0 || local >= num_local_) throw Error("local id out of range");
    // resident_ is sorted and bases are increasing with it
    auto it = std::upper_bound(resident_.begin(), resident_.end(), local,
                               [this](int64_t x, PartitionId part) { return x < base_[static_cast<size_t>(part)]; });
    PartitionId part = *(it - 1);
    return partitions_->members(part)[static_cast<size_t>(local - base_[static_cast<size_t>(part)])];
}

std::span<const Edge> InMemorySubgraph::out_edges(NodeId v) const {
    auto l = static_cast<size_t>(local_id(v));
    auto b = static_cast<size_t>(out_ranges_[2 * l]);
    auto e = static_cast<size_t>(out_ranges_[2 * l + 1]);
    return std::span<const Edge>(by_src_).subspan(b, e - b);
}

std::span<const Edge> InMemorySubgraph::in_edges(NodeId v) const {
    auto l = static_cast<size_t>(local_id(v));
    auto b = static_cast<size_t>(in_ranges_[2 * l]);
    auto e = static_cast<size_t>(in_ranges_[2 * l + 1]);
    return std::span<const Edge>(by_dst_).subspan(b, e - b);
}

std::vector<NodeId> InMemorySubgraph::resident_nodes() const {
    std::vector<NodeId> out;
    out.reserve(static_cast<size_t>(num_local_));
    for (auto part : resident_) {
        auto m = partitions_->members(part);
        out.insert(out.end(), m.begin(), m.end());
    }
    return out;
}

}  // namespace deltagnn
