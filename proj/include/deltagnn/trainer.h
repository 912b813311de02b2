#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "deltagnn/buffer.h"
#include "deltagnn/graph_store.h"
#include "deltagnn/model.h"
#include "deltagnn/schedule.h"

namespace deltagnn {

struct TrainConfig {
    std::string dataset;
    std::string output = "run";
    std::string task = "auto";      // auto | link-prediction | node-classification
    std::string model = "distmult"; // distmult | sage | additive
    std::vector<int> fanouts;       // one per layer, -1 = all neighbors
    Direction direction = Direction::Both;
    int64_t dim = 100;
    double lr = 0.1;
    double dense_lr = 0.01;
    int negatives = 500;
    int64_t batch_size = 1000;
    int epochs = 10;
    uint64_t seed = 0;
    std::string storage = "memory";  // memory | disk
    std::string backend = "auto";    // auto | buffer | flat
    std::string policy = "auto";     // auto | comet | beta | nc
    int32_t buffer_capacity = 0;     // physical partitions c; 0 = p/4
    int32_t logical_partitions = 0;  // l; 0 = derived from p and c
    bool prefetch = true;
    int read_delay_ms = 0;
    std::string eval_mode = "all";
    int eval_every = 1;  // epochs between validation runs; 0 = final only
    uint64_t eval_seed = 0;
    bool compute_bias = false;
    bool save_checkpoint = true;

    // key=value lines; '#' starts a comment.
    static TrainConfig parse(const std::string& text);
    static TrainConfig load(const std::filesystem::path& path);
    // Throws Error listing valid keys when `key` is unknown.
    void set(const std::string& key, const std::string& value);
    static std::vector<std::string> keys();

    Task resolved_task(const Dataset& ds) const;
    void validate() const;
};

struct EpochMetrics {
    int epoch = 0;
    double wall_seconds = 0.0;
    double loss = 0.0;
    std::optional<double> mrr;
    std::optional<double> accuracy;
    int64_t io_bytes = 0;
    int64_t swaps = 0;
    int64_t sets = 0;
    int64_t examples = 0;
    std::optional<double> bias;

    std::string to_json() const;
};

using ScheduleFn = std::function<Schedule(int epoch)>;

/// Runs epochs over a dataset with a given embedding store.
class Trainer {
  public:
    Trainer(TrainConfig cfg, const Dataset& ds);

    // Overrides the per-epoch schedule (both backends accept any schedule).
    void set_schedule(ScheduleFn fn) { schedule_fn_ = std::move(fn); }
    // Replaces the store built from the config.
    void set_store(std::unique_ptr<EmbeddingStore> store) { store_ = std::move(store); }

    EpochMetrics train_epoch(int epoch);
    // Trains cfg.epochs epochs, writing metrics lines to `out` and to
    // metrics.jsonl in the output directory.
    std::vector<EpochMetrics> run(std::ostream* out);

    Schedule make_schedule(int epoch) const;
    double evaluate(std::span<const Edge> edges, EvalMode mode);
    double evaluate_nodes(std::span<const NodeId> nodes);

    ModelState& model() { return model_; }
    EmbeddingStore& store() { return *store_; }
    const TrainConfig& config() const { return cfg_; }
    void save(const std::filesystem::path& path);

    int32_t capacity() const { return c_; }
    int32_t logical() const { return l_; }

  private:
    MatrixD representations();
    void train_set(const Schedule& s, size_t i, int epoch, EpochMetrics& m, double& loss_sum, int64_t& batches);

    TrainConfig cfg_;
    const Dataset& ds_;
    Task task_;
    ModelState model_;
    OptimizerConfig opt_;
    std::unique_ptr<std::ofstream> stats_file_;
    std::unique_ptr<EmbeddingStore> store_;
    ScheduleFn schedule_fn_;
    std::unique_ptr<InMemorySubgraph> full_graph_;
    int32_t c_ = 0;
    int32_t l_ = 0;
};

// Fresh working tables for a training run, initialized from `seed`.
void init_working_tables(const PartitionMap& pm, int64_t dim, uint64_t seed, const std::filesystem::path& emb,
                         const std::filesystem::path& state);

// Command-line entry point; returns the process exit status.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace deltagnn
