#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "deltagnn/dense.h"
#include "deltagnn/tensor.h"
#include "deltagnn/types.h"

namespace deltagnn {

enum class Task { LinkPrediction, NodeClassification };
enum class EncoderType { None, Sage, Additive };

Task parse_task(const std::string& name);
const char* task_name(Task t);
EncoderType parse_encoder(const std::string& name);
const char* encoder_name(EncoderType e);

struct ModelConfig {
    Task task = Task::LinkPrediction;
    EncoderType encoder = EncoderType::None;
    int64_t dim = 100;
    int64_t num_nodes = 0;
    int64_t num_relations = 1;
    int32_t num_classes = 0;
    std::vector<int> fanouts;  // one per layer; empty for a bare embedding model
    Direction direction = Direction::Both;

    int layers() const { return encoder == EncoderType::None ? 0 : static_cast<int>(fanouts.size()); }
};

struct LayerParams {
    MatrixF w_self;  // d x d
    MatrixF w_nbr;   // d x d
    std::vector<float> bias;
};

/// Dense learnable parameters plus their optimizer state. Base node
/// embeddings live in an embedding store and travel through Batch.
struct ModelState {
    ModelConfig config;
    MatrixF relations;       // num_relations x d
    MatrixF relation_state;  // Adagrad accumulators
    std::vector<LayerParams> layers;
    MatrixF classifier;  // d x num_classes
    std::vector<float> classifier_bias;

    static ModelState init(const ModelConfig& config, uint64_t seed);

    // Throws Error naming the first non-finite parameter.
    void check_finite() const;
};

struct OptimizerConfig {
    double lr = 0.1;        // Adagrad, embeddings and relations
    double dense_lr = 0.01; // SGD, layer and classifier weights
    double eps = 1e-10;
};

struct LinkPayload {
    // Indices into the target rows (dense.targets()).
    std::vector<int64_t> src;
    std::vector<int64_t> dst;
    std::vector<RelId> rel;
    std::vector<int64_t> neg;  // src.size() x negatives, row-major
    int negatives = 0;
};

struct NodePayload {
    std::vector<int64_t> rows;  // indices into the target rows
    std::vector<int32_t> labels;
};

struct Batch {
    DenseSample dense;
    MatrixF h0;        // row i is node_ids[i]
    MatrixF h0_state;  // Adagrad accumulators, same layout
    LinkPayload link;
    NodePayload node;
};

struct LayerGrads {
    MatrixD w_self;
    MatrixD w_nbr;
    std::vector<double> bias;
};

struct Gradients {
    MatrixD h0;
    MatrixD relations;
    std::vector<LayerGrads> layers;
    MatrixD classifier;
    std::vector<double> classifier_bias;
};

struct LayerCache {
    DenseSample dense;  // structure the layer ran on
    MatrixD input;
    MatrixD mean_nbrs;  // sage only
    MatrixD preact;     // sage only
    bool relu = false;
};

struct ForwardCache {
    std::vector<LayerCache> layers;
};

double distmult_score(std::span<const double> h_src, std::span<const double> rel,
                      std::span<const double> h_dst);

// Softmax cross-entropy of each positive against its negatives, averaged.
// neg_scores is pos_scores.size() x N.
double lp_loss(std::span<const double> pos_scores, const MatrixD& neg_scores);
double nc_loss(const MatrixD& logits, std::span<const int32_t> labels);

MatrixD layer_forward_additive(const DenseSample& d, const MatrixD& h_in);
MatrixD layer_forward_sage(const DenseSample& d, const MatrixD& h_in, const LayerParams& params, bool relu,
                           MatrixD* mean_out = nullptr, MatrixD* preact_out = nullptr);

// Representations of the targets of `dense` given base rows h0 ordered like
// dense.node_ids.
MatrixD gnn_forward(DenseSample dense, const MatrixD& h0, const ModelState& model,
                    ForwardCache* cache = nullptr);

double batch_loss(const ModelState& model, const Batch& batch);
double compute_gradients(const ModelState& model, const Batch& batch, Gradients& grads);
// Applies grads; updated base rows and their state are written back into
// batch.h0 and batch.h0_state.
void apply_gradients(ModelState& model, Batch& batch, const Gradients& grads, const OptimizerConfig& opt);

struct StepResult {
    double loss = 0.0;
    std::span<const NodeId> updated;  // node ids of batch.h0 rows
};

StepResult backward_and_step(ModelState& model, Batch& batch, const OptimizerConfig& opt);

/// Final representations for every node, computed with full neighborhoods
/// (or sampled ones when fanouts are bounded) over an in-memory graph.
MatrixD compute_representations(const ModelState& model, const InMemorySubgraph& graph,
                                const MatrixF& embeddings, uint64_t seed, int64_t chunk = 4096);

struct EvalMode {
    int64_t sampled = 0;  // 0 means rank against all entities

    static EvalMode parse(const std::string& s);  // "all" or "sampled:N"
    std::string name() const;
};

double evaluate_lp(const ModelState& model, const MatrixD& reps, std::span<const Edge> test, EvalMode mode,
                   uint64_t seed = 0);
double evaluate_nc(const ModelState& model, const MatrixD& reps, std::span<const NodeId> nodes,
                   std::span<const int32_t> labels);
double mrr_from_ranks(std::span<const double> ranks);
MatrixD classifier_logits(const ModelState& model, const MatrixD& reps, std::span<const int64_t> rows);

/// Checkpoint layout, little-endian: magic "DGCK", u32 version, u32 task,
/// u32 encoder, u32 direction, u32 layers, u32 num_classes, u64 dim,
/// u64 num_nodes, u64 num_relations, i32 fanouts[layers]; then float32 blobs
/// in order: embeddings and their state (node-id order), relations and their
/// state, per layer (w_self, w_nbr, bias), classifier, classifier bias.
void save_checkpoint(const std::filesystem::path& path, const ModelState& model, const MatrixF& embeddings,
                     const MatrixF& embedding_state);

struct Checkpoint {
    ModelState model;
    MatrixF embeddings;
    MatrixF embedding_state;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace deltagnn
