#pragma once

#include <filesystem>
#include <future>
#include <memory>
#include <ostream>
#include <span>
#include <vector>

#include "deltagnn/graph_store.h"
#include "deltagnn/schedule.h"
#include "deltagnn/subgraph.h"
#include "deltagnn/tensor.h"

namespace deltagnn {

struct BufferStats {
    int64_t swaps = 0;
    int64_t bytes_read = 0;
    int64_t bytes_written = 0;
    double rebuild_ms = 0.0;
};

/// Node embeddings and optimizer state for the resident partitions, plus
/// the in-memory subgraph over their edge buckets.
class EmbeddingStore {
  public:
    virtual ~EmbeddingStore() = default;

    virtual int64_t dim() const = 0;

    // Makes S_i resident. i = 0 may start from any state; later steps must
    // follow S_{i-1} by the schedule's swap.
    virtual void load_set(const Schedule& s, size_t i) = 0;

    virtual const InMemorySubgraph& subgraph() const = 0;

    // Rows in request order; duplicates allowed. Throws ResidencyError.
    virtual void gather(std::span<const NodeId> ids, MatrixF& rows, MatrixF& state) const = 0;
    // Overwrites rows with optimizer-updated values.
    virtual void scatter(std::span<const NodeId> ids, const MatrixF& rows, const MatrixF& state) = 0;

    // Persists every modified row.
    virtual void flush() = 0;

    // Full tables in node-id order (after flush).
    virtual void snapshot(MatrixF& embeddings, MatrixF& state) = 0;

    virtual const BufferStats& stats() const = 0;
};

struct BufferOptions {
    bool prefetch = true;
    int read_delay_ms = 0;       // injected per partition or bucket-batch read
    bool full_rebuild = false;   // rebuild the subgraph from scratch on swaps
    std::ostream* stats_out = nullptr;  // one JSON line per swap
};

/// Disk-backed partition buffer with write-back and one-ahead prefetch.
class PartitionBuffer : public EmbeddingStore {
  public:
    PartitionBuffer(const EdgeBucketStore& store, std::shared_ptr<const PartitionMap> partitions,
                    const std::filesystem::path& embeddings, const std::filesystem::path& state, int64_t dim,
                    BufferOptions options = {});
    ~PartitionBuffer() override;

    int64_t dim() const override { return dim_; }
    void load_set(const Schedule& s, size_t i) override;
    const InMemorySubgraph& subgraph() const override { return sub_; }
    void gather(std::span<const NodeId> ids, MatrixF& rows, MatrixF& state) const override;
    void scatter(std::span<const NodeId> ids, const MatrixF& rows, const MatrixF& state) override;
    void flush() override;
    void snapshot(MatrixF& embeddings, MatrixF& state) override;
    const BufferStats& stats() const override { return stats_; }

    std::vector<PartitionId> resident() const;
    bool dirty(PartitionId part) const;

  private:
    struct Block {
        std::vector<float> emb;
        std::vector<float> state;
        bool dirty = false;
    };
    struct Staged {
        std::vector<PartitionId> parts;
        std::vector<Block> blocks;
        std::vector<Edge> edges;
        int64_t bytes = 0;
    };

    Block read_block(PartitionId part) const;
    std::vector<Edge> read_buckets(const std::vector<PartitionId>& resident,
                                   const std::vector<PartitionId>& loaded, int64_t* bytes) const;
    Staged stage(std::vector<PartitionId> next, std::vector<PartitionId> loaded) const;
    int64_t evict(PartitionId part);
    void full_load(const std::vector<PartitionId>& target);
    void start_prefetch(const Schedule& s, size_t i);
    void delay() const;
    const Block& block_of(NodeId v) const;

    const EdgeBucketStore& store_;
    std::shared_ptr<const PartitionMap> partitions_;
    NodeTableFile emb_file_;
    NodeTableFile state_file_;
    int64_t dim_;
    BufferOptions options_;

    std::vector<std::unique_ptr<Block>> blocks_;  // per physical partition, null when absent
    InMemorySubgraph sub_;
    BufferStats stats_;
    int64_t step_ = 0;

    std::future<Staged> pending_;
    const Schedule* pending_schedule_ = nullptr;
    size_t pending_index_ = 0;
};

/// Whole tables in memory; follows the schedule's residency exactly so it
/// can stand in for the disk buffer.
class FlatStore : public EmbeddingStore {
  public:
    FlatStore(const EdgeBucketStore& store, std::shared_ptr<const PartitionMap> partitions, MatrixF embeddings,
              MatrixF state);

    // Loads tables from node-table files laid out by `partitions`.
    static FlatStore open(const EdgeBucketStore& store, std::shared_ptr<const PartitionMap> partitions,
                          const std::filesystem::path& embeddings, const std::filesystem::path& state,
                          int64_t dim);

    int64_t dim() const override { return emb_.cols; }
    void load_set(const Schedule& s, size_t i) override;
    const InMemorySubgraph& subgraph() const override { return sub_; }
    void gather(std::span<const NodeId> ids, MatrixF& rows, MatrixF& state) const override;
    void scatter(std::span<const NodeId> ids, const MatrixF& rows, const MatrixF& state) override;
    void flush() override {}
    void snapshot(MatrixF& embeddings, MatrixF& state) override;
    const BufferStats& stats() const override { return stats_; }

    // Writes both tables to node-table files laid out by the partition map.
    void write(const std::filesystem::path& embeddings, const std::filesystem::path& state) const;

  private:
    std::shared_ptr<const PartitionMap> partitions_;
    std::vector<std::vector<Edge>> buckets_;
    MatrixF emb_;
    MatrixF state_;
    InMemorySubgraph sub_;
    BufferStats stats_;
};

}  // namespace deltagnn
