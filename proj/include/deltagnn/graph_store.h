#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deltagnn/types.h"

namespace deltagnn {

enum class InputFormat { Auto, Tsv2, Tsv3, Binary };
enum class IdWidth { U32 = 4, U64 = 8 };

InputFormat parse_input_format(const std::string& name);
IdWidth parse_id_width(int bits);

/// An ingested graph with dense node and relation ids.
///
/// Link-prediction graphs carry edge-index splits; node-classification graphs
/// carry per-node labels plus node-id splits. Node names are only populated
/// when the input used non-integer ids.
struct RawGraph {
    int64_t num_nodes = 0;
    int64_t num_relations = 1;
    std::vector<Edge> edges;

    std::vector<int64_t> train_edges;
    std::vector<int64_t> valid_edges;
    std::vector<int64_t> test_edges;

    std::vector<int32_t> labels;  // per node, -1 when unlabeled
    int32_t num_classes = 0;
    std::vector<NodeId> train_nodes;
    std::vector<NodeId> valid_nodes;
    std::vector<NodeId> test_nodes;

    std::vector<std::string> node_names;
    std::vector<std::string> relation_names;

    bool has_labels() const { return !labels.empty(); }

    // Checks id ranges and split disjointness; throws Error.
    void validate() const;
};

struct IngestReport {
    int64_t num_nodes = 0;
    int64_t num_relations = 0;
    int64_t num_edges = 0;
    int64_t num_train = 0;
    int64_t num_valid = 0;
    int64_t num_test = 0;
    bool string_ids = false;

    std::string to_json() const;
};

struct IngestOptions {
    InputFormat format = InputFormat::Auto;
    IdWidth width = IdWidth::U32;
};

// Single edge file; every edge lands in the training split.
RawGraph ingest(const std::filesystem::path& path, const IngestOptions& options = {},
                IngestReport* report = nullptr);

// Train/valid/test edge files sharing one id space. Empty paths are skipped.
RawGraph ingest_splits(const std::filesystem::path& train, const std::filesystem::path& valid,
                       const std::filesystem::path& test, const IngestOptions& options = {},
                       IngestReport* report = nullptr);

// Reads `node<TAB>label<TAB>split` lines (split in train|valid|test) and
// attaches labels and node splits to g. Node tokens are resolved with the
// same id convention the graph was ingested with.
void attach_node_labels(RawGraph& g, const std::filesystem::path& path);

enum class PartitionMode { Random, TrainFirst };

PartitionMode parse_partition_mode(const std::string& name);

/// Node-to-partition assignment. Within a partition, nodes are ordered by id;
/// that order defines the row layout of the partition's embedding region.
struct PartitionMap {
    int32_t p = 1;
    std::vector<PartitionId> node_to_partition;
    std::vector<int64_t> node_to_position;
    std::vector<int64_t> partition_sizes;
    std::vector<int64_t> partition_offsets;  // size p + 1
    std::vector<NodeId> nodes_by_partition;

    static PartitionMap from_assignment(int32_t p, std::vector<PartitionId> assignment);

    int64_t num_nodes() const { return static_cast<int64_t>(node_to_partition.size()); }
    PartitionId partition_of(NodeId v) const { return node_to_partition[static_cast<size_t>(v)]; }
    int64_t position_of(NodeId v) const { return node_to_position[static_cast<size_t>(v)]; }
    std::span<const NodeId> members(PartitionId part) const;

    // Number of leading partitions that contain training nodes under the
    // train-first layout.
    int32_t train_partitions = 0;
};

PartitionMap assign_partitions(const RawGraph& g, int32_t p, PartitionMode mode, uint64_t seed);

struct BucketEntry {
    uint64_t offset = 0;  // byte offset into the bucket file
    uint64_t count = 0;   // number of edge records
};

/// Bucketed training edges on disk.
///
/// `buckets.bin` holds fixed-width little-endian (src, rel, dst) records,
/// buckets laid out row-major by (i, j). `buckets.idx` holds a header followed
/// by one (offset, count) pair per bucket in the same order.
class EdgeBucketStore {
  public:
    static constexpr char kMagic[4] = {'D', 'G', 'B', 'K'};
    static constexpr uint32_t kVersion = 1;

    static EdgeBucketStore open(const std::filesystem::path& dir);

    int32_t p() const { return p_; }
    IdWidth width() const { return width_; }
    int64_t num_nodes() const { return num_nodes_; }
    int64_t num_relations() const { return num_relations_; }
    uint64_t seed() const { return seed_; }
    int64_t num_edges() const { return num_edges_; }

    const BucketEntry& entry(PartitionId i, PartitionId j) const;
    int64_t bucket_count(PartitionId i, PartitionId j) const {
        return static_cast<int64_t>(entry(i, j).count);
    }
    int64_t bucket_bytes(PartitionId i, PartitionId j) const;
    std::vector<int64_t> bucket_counts() const;  // row-major p*p

    std::vector<Edge> read_bucket(PartitionId i, PartitionId j) const;
    std::vector<Edge> read_all() const;

    const std::filesystem::path& dir() const { return dir_; }

  private:
    std::filesystem::path dir_;
    int32_t p_ = 0;
    IdWidth width_ = IdWidth::U32;
    int64_t num_nodes_ = 0;
    int64_t num_relations_ = 0;
    uint64_t seed_ = 0;
    int64_t num_edges_ = 0;
    std::vector<BucketEntry> index_;
};

std::vector<Edge> read_edge_records(const std::filesystem::path& path, IdWidth width);
void write_edge_records(const std::filesystem::path& path, std::span<const Edge> edges, IdWidth width);

/// Row-addressable float32 node table (embeddings or optimizer state) laid
/// out as p contiguous partition regions.
class NodeTableFile {
  public:
    NodeTableFile(std::filesystem::path path, std::shared_ptr<const PartitionMap> partitions,
                  int64_t dim);
    ~NodeTableFile();
    NodeTableFile(const NodeTableFile&) = delete;
    NodeTableFile& operator=(const NodeTableFile&) = delete;

    int64_t dim() const { return dim_; }
    int64_t partition_bytes(PartitionId part) const;

    // Both calls are safe to issue concurrently for distinct partitions.
    std::vector<float> read_partition(PartitionId part) const;
    void write_partition(PartitionId part, std::span<const float> rows) const;

    // Whole table in global node-id order.
    std::vector<float> read_all_by_node() const;

  private:
    std::filesystem::path path_;
    std::shared_ptr<const PartitionMap> partitions_;
    int64_t dim_;
    int fd_ = -1;
};

struct BuildOptions {
    int64_t dim = 100;
    uint64_t seed = 0;
    IdWidth width = IdWidth::U32;
};

// Writes buckets, index, partition map, embedding tables and split files.
EdgeBucketStore build_buckets(const RawGraph& g, const PartitionMap& pm,
                              const std::filesystem::path& out_dir, const BuildOptions& options);

// Deterministic per-node initial embedding row, independent of partitioning.
void init_embedding_row(uint64_t seed, NodeId v, std::span<float> row);

struct DatasetMeta {
    int64_t num_nodes = 0;
    int64_t num_relations = 1;
    int64_t num_train_edges = 0;
    int32_t p = 1;
    int64_t dim = 0;
    IdWidth width = IdWidth::U32;
    uint64_t seed = 0;
    int32_t num_classes = 0;
    int32_t train_partitions = 0;
    std::string partition_mode = "random";
};

/// A preprocessed dataset directory opened for training or evaluation.
struct Dataset {
    std::filesystem::path dir;
    DatasetMeta meta;
    std::shared_ptr<const PartitionMap> partitions;
    EdgeBucketStore store;
    std::vector<Edge> valid_edges;
    std::vector<Edge> test_edges;
    std::vector<int32_t> labels;
    std::vector<NodeId> train_nodes;
    std::vector<NodeId> valid_nodes;
    std::vector<NodeId> test_nodes;

    static Dataset open(const std::filesystem::path& dir);

    bool node_classification() const { return meta.num_classes > 0; }
    std::filesystem::path embeddings_path() const { return dir / "embeddings.bin"; }
    std::filesystem::path embedding_state_path() const { return dir / "embeddings_state.bin"; }
};

void write_partition_map(const std::filesystem::path& path, const PartitionMap& pm);
PartitionMap read_partition_map(const std::filesystem::path& path);

// Full preprocessing pipeline used by the CLI.
Dataset preprocess(const RawGraph& g, int32_t p, PartitionMode mode, const BuildOptions& options,
                   const std::filesystem::path& out_dir);

}  // namespace deltagnn
