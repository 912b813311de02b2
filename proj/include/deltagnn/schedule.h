#pragma once

#include <span>
#include <string>
#include <vector>

#include "deltagnn/graph_store.h"
#include "deltagnn/types.h"

namespace deltagnn {

/// Random balanced grouping of p physical partitions into l logical ones.
struct LogicalGrouping {
    int32_t p = 1;
    int32_t l = 1;
    uint64_t seed = 0;
    std::vector<std::vector<PartitionId>> groups;  // logical id -> sorted physical ids
    std::vector<int32_t> logical_of;               // physical id -> logical id

    static LogicalGrouping identity(int32_t p);

    // Sorted physical ids of a set of logical ids.
    std::vector<PartitionId> expand(std::span<const int32_t> logical) const;
};

LogicalGrouping group_logical(int32_t p, int32_t l, uint64_t seed);

struct Swap {
    int32_t evicted = -1;  // logical ids
    int32_t loaded = -1;
};

enum class ExampleKind { Buckets, Nodes };

/// Per-epoch partition sets S and example assignment X. S entries are
/// logical ids of `grouping`; X entries are bucket ids i*p + j in physical
/// coordinates, or training node ids for node classification.
struct Schedule {
    LogicalGrouping grouping;
    std::vector<std::vector<int32_t>> S;
    std::vector<std::vector<int64_t>> X;
    std::vector<Swap> swaps;  // S.size() - 1 transitions
    ExampleKind kind = ExampleKind::Buckets;

    size_t size() const { return S.size(); }
    std::vector<PartitionId> physical_set(size_t i) const { return grouping.expand(S[i]); }

    // Checks the one-swap structure and swap records; throws Error.
    void validate_structure() const;
};

// Sequence S only (X left empty).
Schedule comet_schedule(const LogicalGrouping& g, int32_t c_l, uint64_t seed);

// Fills s.X. bucket_counts is row-major p*p; empty buckets are not assigned.
void comet_assign(Schedule& s, std::span<const int64_t> bucket_counts, uint64_t seed);

Schedule beta_schedule(int32_t p, int32_t c, std::span<const int64_t> bucket_counts, uint64_t seed);

// pm must use the train-first layout; train_nodes are the training node ids.
Schedule nc_schedule(const PartitionMap& pm, int32_t c, std::span<const NodeId> train_nodes, uint64_t seed);

// Throws Error on any coverage or residency violation.
void check_bucket_schedule(const Schedule& s, std::span<const int64_t> bucket_counts);

struct BiasReport {
    double B = 0.0;
    std::vector<double> d;  // spread after each X_i
    int64_t tracked_nodes = 0;

    std::string to_json() const;
};

// buckets[i*p + j] holds the edges of bucket (i, j).
BiasReport edge_permutation_bias(const Schedule& s, const std::vector<std::vector<Edge>>& buckets,
                                 int64_t num_nodes);
BiasReport edge_permutation_bias(const Schedule& s, const EdgeBucketStore& store);

struct TuningPlan {
    int32_t p = 1;
    int32_t l = 1;
    int32_t c = 1;
    int32_t c_l = 1;
    bool in_memory = true;
    double NO = 0, EO = 0, PO = 0, EBO = 0, alpha4 = 0;
    double cpu = 0, block = 0, F = 0;

    // Throws Error if the plan violates its own invariants.
    void validate() const;
    std::string to_json() const;
};

struct TuningInputs {
    double num_nodes = 0;
    double num_edges = 0;
    double dim = 100;
    double bytes_per_edge = 12;
    double cpu = 0;    // bytes
    double block = 0;  // smallest efficient disk read, bytes
    double fudge = 0;  // bytes reserved for everything else
};

TuningPlan autotune(const TuningInputs& in);

// Plan for a caller-fixed p and physical capacity c; l chosen as in autotune.
TuningPlan plan_for_partitions(int32_t p, int32_t c);

struct IoReport {
    int64_t total_bytes = 0;
    int64_t initial_bytes = 0;
    int64_t swaps = 0;
    int64_t sets = 0;
    int64_t min_read = 0;  // smallest nonempty single read

    std::string to_json() const;
};

// partition_bytes per physical partition; bucket_bytes row-major p*p.
IoReport io_report(const Schedule& s, std::span<const int64_t> partition_bytes,
                   std::span<const int64_t> bucket_bytes);

}  // namespace deltagnn
