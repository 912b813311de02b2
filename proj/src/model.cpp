#include "deltagnn/model.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace deltagnn {

Task parse_task(const std::string& name) {
    if (name == "link-prediction" || name == "lp") return Task::LinkPrediction;
    if (name == "node-classification" || name == "nc") return Task::NodeClassification;
    throw Error("unknown task '" + name + "' (expected link-prediction, node-classification)");
}

const char* task_name(Task t) {
    return t == Task::LinkPrediction ? "link-prediction" : "node-classification";
}

EncoderType parse_encoder(const std::string& name) {
    if (name == "none" || name == "distmult") return EncoderType::None;
    if (name == "sage") return EncoderType::Sage;
    if (name == "additive") return EncoderType::Additive;
    throw Error("unknown encoder '" + name + "' (expected none, sage, additive)");
}

const char* encoder_name(EncoderType e) {
    switch (e) {
        case EncoderType::None: return "none";
        case EncoderType::Sage: return "sage";
        case EncoderType::Additive: return "additive";
    }
    return "none";
}

namespace {

void glorot(MatrixF& m, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(m.rows + m.cols));
    for (auto& x : m.data) x = static_cast<float>((2.0 * uniform_unit(rng) - 1.0) * bound);
}

void require_finite(std::span<const float> xs, const char* what) {
    for (size_t i = 0; i < xs.size(); ++i)
        if (!std::isfinite(xs[i]))
            throw Error(std::string("non-finite value in ") + what + " at index " + std::to_string(i));
}

void require_finite_grad(std::span<const double> xs, const char* what) {
    for (size_t i = 0; i < xs.size(); ++i)
        if (!std::isfinite(xs[i]))
            throw Error(std::string("non-finite gradient for ") + what + " at index " + std::to_string(i));
}

double dot(const double* a, const double* b, int64_t n) {
    double s = 0.0;
    for (int64_t k = 0; k < n; ++k) s += a[k] * b[k];
    return s;
}

void check_sample_rows(const DenseSample& d, const MatrixD& h_in) {
    if (h_in.rows != static_cast<int64_t>(d.node_ids.size()))
        throw Error("layer input has " + std::to_string(h_in.rows) + " rows, sample has " +
                    std::to_string(d.node_ids.size()) + " nodes");
    if (d.repr_map.size() != d.nbrs.size()) throw Error("layer input sample has no repr_map");
    if (d.num_groups() < 2) throw Error("layer input sample has no neighbor-owning group");
}

// out = a * w, a: n x d, w: d x m
void matmul_acc(const MatrixD& a, const MatrixF& w, MatrixD& out) {
    for (int64_t i = 0; i < a.rows; ++i) {
        double* o = out.row(i);
        const double* ai = a.row(i);
        for (int64_t k = 0; k < a.cols; ++k) {
            const double x = ai[k];
            if (x == 0.0) continue;
            const float* wk = w.row(k);
            for (int64_t j = 0; j < w.cols; ++j) o[j] += x * static_cast<double>(wk[j]);
        }
    }
}

// out += a * w^T, a: n x m, w: d x m -> out: n x d
void matmul_bt_acc(const MatrixD& a, const MatrixF& w, MatrixD& out) {
    for (int64_t i = 0; i < a.rows; ++i) {
        const double* ai = a.row(i);
        double* o = out.row(i);
        for (int64_t k = 0; k < w.rows; ++k) {
            const float* wk = w.row(k);
            double s = 0.0;
            for (int64_t j = 0; j < w.cols; ++j) s += ai[j] * static_cast<double>(wk[j]);
            o[k] += s;
        }
    }
}

// g += a^T * b, a: n x d, b: n x m
void matmul_at_acc(const MatrixD& a, const MatrixD& b, MatrixD& g) {
    for (int64_t i = 0; i < a.rows; ++i) {
        const double* ai = a.row(i);
        const double* bi = b.row(i);
        for (int64_t k = 0; k < a.cols; ++k) {
            const double x = ai[k];
            if (x == 0.0) continue;
            double* gk = g.row(k);
            for (int64_t j = 0; j < b.cols; ++j) gk[j] += x * bi[j];
        }
    }
}

MatrixD self_rows(const DenseSample& d, const MatrixD& h_in) {
    const int64_t fo = d.first_owner();
    MatrixD s(h_in.rows - fo, h_in.cols);
    std::copy(h_in.row(fo), h_in.row(fo) + s.data.size(), s.data.begin());
    return s;
}

}  // namespace

ModelState ModelState::init(const ModelConfig& config, uint64_t seed) {
    if (config.dim <= 0) throw Error("embedding dimension must be positive");
    ModelState m;
    m.config = config;
    const int64_t d = config.dim;
    if (config.task == Task::LinkPrediction) {
        m.relations.resize(config.num_relations, d);
        m.relation_state.resize(config.num_relations, d);
        for (int64_t r = 0; r < config.num_relations; ++r) {
            Rng rng(derive_seed(seed, 0x72656cULL, static_cast<uint64_t>(r)));
            for (int64_t k = 0; k < d; ++k)
                m.relations(r, k) = static_cast<float>((uniform_unit(rng) - 0.5) / static_cast<double>(d));
        }
    }
    for (int i = 0; i < config.layers(); ++i) {
        LayerParams lp;
        lp.w_self.resize(d, d);
        lp.w_nbr.resize(d, d);
        lp.bias.assign(static_cast<size_t>(d), 0.0f);
        if (config.encoder == EncoderType::Sage) {
            Rng rng(derive_seed(seed, 0x6c6179ULL, static_cast<uint64_t>(i)));
            glorot(lp.w_self, rng);
            glorot(lp.w_nbr, rng);
        }
        m.layers.push_back(std::move(lp));
    }
    if (config.task == Task::NodeClassification) {
        if (config.num_classes <= 0) throw Error("node classification needs num_classes > 0");
        m.classifier.resize(d, config.num_classes);
        m.classifier_bias.assign(static_cast<size_t>(config.num_classes), 0.0f);
        Rng rng(derive_seed(seed, 0x636c73ULL));
        glorot(m.classifier, rng);
    }
    return m;
}

void ModelState::check_finite() const {
    require_finite(relations.data, "relations");
    require_finite(relation_state.data, "relation state");
    for (const auto& l : layers) {
        require_finite(l.w_self.data, "w_self");
        require_finite(l.w_nbr.data, "w_nbr");
        require_finite(l.bias, "layer bias");
    }
    require_finite(classifier.data, "classifier");
    require_finite(classifier_bias, "classifier bias");
}

double distmult_score(std::span<const double> h_src, std::span<const double> rel,
                      std::span<const double> h_dst) {
    double s = 0.0;
    for (size_t k = 0; k < h_src.size(); ++k) s += h_src[k] * rel[k] * h_dst[k];
    return s;
}

namespace {

// -log softmax(x)[target]
double cross_entropy(const double* x, int64_t n, int64_t target) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int64_t j = 0; j < n; ++j) mx = std::max(mx, x[j]);
    double z = 0.0;
    for (int64_t j = 0; j < n; ++j) z += std::exp(x[j] - mx);
    return mx + std::log(z) - x[target];
}

// softmax in place
void softmax(double* x, int64_t n) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int64_t j = 0; j < n; ++j) mx = std::max(mx, x[j]);
    double z = 0.0;
    for (int64_t j = 0; j < n; ++j) {
        x[j] = std::exp(x[j] - mx);
        z += x[j];
    }
    for (int64_t j = 0; j < n; ++j) x[j] /= z;
}

}  // namespace

double lp_loss(std::span<const double> pos_scores, const MatrixD& neg_scores) {
    if (neg_scores.cols == 0) throw Error("lp_loss needs at least one negative per positive");
    if (neg_scores.rows != static_cast<int64_t>(pos_scores.size()))
        throw Error("lp_loss: negative score rows do not match positives");
    if (pos_scores.empty()) return 0.0;
    std::vector<double> row(static_cast<size_t>(neg_scores.cols + 1));
    double total = 0.0;
    for (size_t b = 0; b < pos_scores.size(); ++b) {
        row[0] = pos_scores[b];
        std::copy(neg_scores.row(static_cast<int64_t>(b)), neg_scores.row(static_cast<int64_t>(b)) + neg_scores.cols,
                  row.begin() + 1);
        total += cross_entropy(row.data(), neg_scores.cols + 1, 0);
    }
    return total / static_cast<double>(pos_scores.size());
}

double nc_loss(const MatrixD& logits, std::span<const int32_t> labels) {
    if (logits.rows != static_cast<int64_t>(labels.size())) throw Error("nc_loss: label count mismatch");
    if (labels.empty()) return 0.0;
    double total = 0.0;
    for (int64_t i = 0; i < logits.rows; ++i) {
        const int32_t y = labels[static_cast<size_t>(i)];
        if (y < 0 || y >= logits.cols) throw Error("nc_loss: label " + std::to_string(y) + " out of range");
        total += cross_entropy(logits.row(i), logits.cols, y);
    }
    return total / static_cast<double>(logits.rows);
}

MatrixD layer_forward_additive(const DenseSample& d, const MatrixD& h_in) {
    check_sample_rows(d, h_in);
    const int64_t fo = d.first_owner();
    const int64_t dim = h_in.cols;
    MatrixD out(d.num_owners(), dim);
    for (int64_t i = 0; i < d.num_owners(); ++i) {
        double* o = out.row(i);
        for (int64_t t = d.nbr_begin(i); t < d.nbr_end(i); ++t) {
            const double* src = h_in.row(d.repr_map[static_cast<size_t>(t)]);
            for (int64_t k = 0; k < dim; ++k) o[k] += src[k];
        }
        const double* self = h_in.row(fo + i);
        for (int64_t k = 0; k < dim; ++k) o[k] += self[k];
    }
    return out;
}

MatrixD layer_forward_sage(const DenseSample& d, const MatrixD& h_in, const LayerParams& params, bool relu,
                           MatrixD* mean_out, MatrixD* preact_out) {
    check_sample_rows(d, h_in);
    const int64_t dim = h_in.cols;
    if (params.w_self.rows != dim || params.w_nbr.rows != dim || params.w_self.cols != params.w_nbr.cols ||
        static_cast<int64_t>(params.bias.size()) != params.w_self.cols)
        throw Error("sage layer weight dimensions do not match input dimension " + std::to_string(dim));
    const int64_t n = d.num_owners();

    MatrixD mean(n, dim);
    for (int64_t i = 0; i < n; ++i) {
        const int64_t b = d.nbr_begin(i), e = d.nbr_end(i);
        if (b == e) continue;
        double* m = mean.row(i);
        for (int64_t t = b; t < e; ++t) {
            const double* src = h_in.row(d.repr_map[static_cast<size_t>(t)]);
            for (int64_t k = 0; k < dim; ++k) m[k] += src[k];
        }
        const double inv = 1.0 / static_cast<double>(e - b);
        for (int64_t k = 0; k < dim; ++k) m[k] *= inv;
    }

    MatrixD z(n, params.w_self.cols);
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < z.cols; ++j) z(i, j) = params.bias[static_cast<size_t>(j)];
    matmul_acc(self_rows(d, h_in), params.w_self, z);
    matmul_acc(mean, params.w_nbr, z);

    MatrixD out = z;
    if (relu)
        for (auto& x : out.data) x = std::max(x, 0.0);
    if (mean_out) *mean_out = std::move(mean);
    if (preact_out) *preact_out = std::move(z);
    return out;
}

MatrixD gnn_forward(DenseSample dense, const MatrixD& h0, const ModelState& model, ForwardCache* cache) {
    const int layers = model.config.layers();
    if (layers != dense.k)
        throw Error("model has " + std::to_string(layers) + " layers but the sample has k=" +
                    std::to_string(dense.k));
    if (h0.rows != static_cast<int64_t>(dense.node_ids.size()))
        throw Error("base embedding rows do not match sample nodes");
    if (dense.repr_map.size() != dense.nbrs.size()) build_repr_map(dense);
    if (cache) cache->layers.clear();

    MatrixD h = h0;
    for (int i = 0; i < layers; ++i) {
        const bool relu = i + 1 < layers;
        MatrixD next;
        if (cache) {
            LayerCache lc;
            lc.dense = dense;
            lc.input = h;
            lc.relu = relu;
            cache->layers.push_back(std::move(lc));
        }
        if (model.config.encoder == EncoderType::Additive) {
            next = layer_forward_additive(dense, h);
        } else {
            MatrixD* mean = cache ? &cache->layers.back().mean_nbrs : nullptr;
            MatrixD* pre = cache ? &cache->layers.back().preact : nullptr;
            next = layer_forward_sage(dense, h, model.layers[static_cast<size_t>(i)], relu, mean, pre);
        }
        advance_layer(dense);
        h = std::move(next);
    }
    return h;
}

namespace {

struct Head {
    double loss = 0.0;
    MatrixD d_reps;
    MatrixD d_rel;
    MatrixD d_cls;
    std::vector<double> d_cls_bias;
};

// Loss over target representations; fills gradients when `grads` is set.
double head_loss(const ModelState& model, const Batch& batch, const MatrixD& reps, Head* grads) {
    const int64_t d = reps.cols;
    if (model.config.task == Task::LinkPrediction) {
        const auto& lp = batch.link;
        const auto B = static_cast<int64_t>(lp.src.size());
        const int64_t N = lp.negatives;
        if (N <= 0) throw Error("link prediction batch has no negatives");
        if (static_cast<int64_t>(lp.neg.size()) != B * N) throw Error("negative count does not match positives");
        if (grads) {
            grads->d_reps.resize(reps.rows, d);
            grads->d_rel.resize(model.relations.rows, d);
        }
        if (B == 0) return 0.0;
        std::vector<double> q(static_cast<size_t>(d)), dq(static_cast<size_t>(d));
        std::vector<double> scores(static_cast<size_t>(N + 1));
        double total = 0.0;
        for (int64_t b = 0; b < B; ++b) {
            const double* hs = reps.row(lp.src[static_cast<size_t>(b)]);
            const double* hd = reps.row(lp.dst[static_cast<size_t>(b)]);
            const RelId r = lp.rel[static_cast<size_t>(b)];
            const float* rv = model.relations.row(r);
            for (int64_t k = 0; k < d; ++k) q[static_cast<size_t>(k)] = hs[k] * static_cast<double>(rv[k]);
            scores[0] = dot(q.data(), hd, d);
            const int64_t* negs = lp.neg.data() + b * N;
            for (int64_t j = 0; j < N; ++j) scores[static_cast<size_t>(j + 1)] = dot(q.data(), reps.row(negs[j]), d);
            total += cross_entropy(scores.data(), N + 1, 0);
            if (!grads) continue;

            softmax(scores.data(), N + 1);
            const double scale = 1.0 / static_cast<double>(B);
            // dL/ds_0 = p_0 - 1, dL/ds_j = p_j
            std::fill(dq.begin(), dq.end(), 0.0);
            auto accumulate = [&](int64_t row, double w) {
                const double* h = reps.row(row);
                double* dh = grads->d_reps.row(row);
                for (int64_t k = 0; k < d; ++k) {
                    dq[static_cast<size_t>(k)] += w * h[k];
                    dh[k] += w * q[static_cast<size_t>(k)];
                }
            };
            accumulate(lp.dst[static_cast<size_t>(b)], (scores[0] - 1.0) * scale);
            for (int64_t j = 0; j < N; ++j) accumulate(negs[j], scores[static_cast<size_t>(j + 1)] * scale);
            double* dhs = grads->d_reps.row(lp.src[static_cast<size_t>(b)]);
            double* dr = grads->d_rel.row(r);
            for (int64_t k = 0; k < d; ++k) {
                dhs[k] += dq[static_cast<size_t>(k)] * static_cast<double>(rv[k]);
                dr[k] += dq[static_cast<size_t>(k)] * hs[k];
            }
        }
        return total / static_cast<double>(B);
    }

    const auto& nc = batch.node;
    if (nc.rows.size() != nc.labels.size()) throw Error("node batch label count mismatch");
    MatrixD logits = classifier_logits(model, reps, nc.rows);
    const double loss = nc_loss(logits, nc.labels);
    if (grads) {
        const int64_t C = model.classifier.cols;
        grads->d_reps.resize(reps.rows, d);
        grads->d_cls.resize(d, C);
        grads->d_cls_bias.assign(static_cast<size_t>(C), 0.0);
        if (nc.rows.empty()) return loss;
        const double scale = 1.0 / static_cast<double>(nc.rows.size());
        MatrixD dlogits = logits;
        MatrixD sel(static_cast<int64_t>(nc.rows.size()), d);
        for (int64_t i = 0; i < dlogits.rows; ++i) {
            softmax(dlogits.row(i), C);
            dlogits(i, nc.labels[static_cast<size_t>(i)]) -= 1.0;
            for (int64_t c = 0; c < C; ++c) {
                dlogits(i, c) *= scale;
                grads->d_cls_bias[static_cast<size_t>(c)] += dlogits(i, c);
            }
            std::copy(reps.row(nc.rows[static_cast<size_t>(i)]), reps.row(nc.rows[static_cast<size_t>(i)]) + d,
                      sel.row(i));
        }
        matmul_at_acc(sel, dlogits, grads->d_cls);
        MatrixD dsel(sel.rows, d);
        matmul_bt_acc(dlogits, model.classifier, dsel);
        for (int64_t i = 0; i < dsel.rows; ++i) {
            double* dst = grads->d_reps.row(nc.rows[static_cast<size_t>(i)]);
            for (int64_t k = 0; k < d; ++k) dst[k] += dsel(i, k);
        }
    }
    return loss;
}

}  // namespace

MatrixD classifier_logits(const ModelState& model, const MatrixD& reps, std::span<const int64_t> rows) {
    const int64_t C = model.classifier.cols;
    MatrixD sel(static_cast<int64_t>(rows.size()), reps.cols);
    for (size_t i = 0; i < rows.size(); ++i)
        std::copy(reps.row(rows[i]), reps.row(rows[i]) + reps.cols, sel.row(static_cast<int64_t>(i)));
    MatrixD logits(sel.rows, C);
    for (int64_t i = 0; i < sel.rows; ++i)
        for (int64_t c = 0; c < C; ++c) logits(i, c) = model.classifier_bias[static_cast<size_t>(c)];
    matmul_acc(sel, model.classifier, logits);
    return logits;
}

double batch_loss(const ModelState& model, const Batch& batch) {
    MatrixD reps = gnn_forward(batch.dense, convert<double>(batch.h0), model);
    return head_loss(model, batch, reps, nullptr);
}

double compute_gradients(const ModelState& model, const Batch& batch, Gradients& grads) {
    ForwardCache cache;
    MatrixD reps = gnn_forward(batch.dense, convert<double>(batch.h0), model, &cache);
    Head head;
    const double loss = head_loss(model, batch, reps, &head);

    grads.relations = std::move(head.d_rel);
    grads.classifier = std::move(head.d_cls);
    grads.classifier_bias = std::move(head.d_cls_bias);
    grads.layers.assign(model.layers.size(), {});

    MatrixD d_out = std::move(head.d_reps);
    for (int i = static_cast<int>(cache.layers.size()) - 1; i >= 0; --i) {
        const LayerCache& lc = cache.layers[static_cast<size_t>(i)];
        const DenseSample& ds = lc.dense;
        const int64_t fo = ds.first_owner();
        const int64_t dim = lc.input.cols;
        MatrixD d_in(lc.input.rows, dim);
        if (model.config.encoder == EncoderType::Additive) {
            for (int64_t o = 0; o < ds.num_owners(); ++o) {
                const double* g = d_out.row(o);
                double* self = d_in.row(fo + o);
                for (int64_t k = 0; k < dim; ++k) self[k] += g[k];
                for (int64_t t = ds.nbr_begin(o); t < ds.nbr_end(o); ++t) {
                    double* dst = d_in.row(ds.repr_map[static_cast<size_t>(t)]);
                    for (int64_t k = 0; k < dim; ++k) dst[k] += g[k];
                }
            }
        } else {
            const LayerParams& p = model.layers[static_cast<size_t>(i)];
            LayerGrads& lg = grads.layers[static_cast<size_t>(i)];
            MatrixD dz = d_out;
            if (lc.relu)
                for (size_t t = 0; t < dz.data.size(); ++t)
                    if (lc.preact.data[t] <= 0.0) dz.data[t] = 0.0;
            lg.w_self.resize(dim, p.w_self.cols);
            lg.w_nbr.resize(dim, p.w_nbr.cols);
            lg.bias.assign(static_cast<size_t>(p.w_self.cols), 0.0);
            for (int64_t o = 0; o < dz.rows; ++o)
                for (int64_t j = 0; j < dz.cols; ++j) lg.bias[static_cast<size_t>(j)] += dz(o, j);
            matmul_at_acc(self_rows(ds, lc.input), dz, lg.w_self);
            matmul_at_acc(lc.mean_nbrs, dz, lg.w_nbr);

            MatrixD d_self(dz.rows, dim);
            matmul_bt_acc(dz, p.w_self, d_self);
            MatrixD d_mean(dz.rows, dim);
            matmul_bt_acc(dz, p.w_nbr, d_mean);
            for (int64_t o = 0; o < dz.rows; ++o) {
                double* self = d_in.row(fo + o);
                const double* g = d_self.row(o);
                for (int64_t k = 0; k < dim; ++k) self[k] += g[k];
                const int64_t b = ds.nbr_begin(o), e = ds.nbr_end(o);
                if (b == e) continue;
                const double inv = 1.0 / static_cast<double>(e - b);
                const double* gm = d_mean.row(o);
                for (int64_t t = b; t < e; ++t) {
                    double* dst = d_in.row(ds.repr_map[static_cast<size_t>(t)]);
                    for (int64_t k = 0; k < dim; ++k) dst[k] += gm[k] * inv;
                }
            }
        }
        d_out = std::move(d_in);
    }
    grads.h0 = std::move(d_out);
    return loss;
}

namespace {

void adagrad(float& w, float& state, double g, const OptimizerConfig& opt) {
    const double s = static_cast<double>(state) + g * g;
    state = static_cast<float>(s);
    if (g == 0.0) return;
    w = static_cast<float>(static_cast<double>(w) - opt.lr * g / (std::sqrt(s) + opt.eps));
}

void sgd(std::span<float> w, std::span<const double> g, double lr) {
    for (size_t t = 0; t < w.size(); ++t) w[t] = static_cast<float>(static_cast<double>(w[t]) - lr * g[t]);
}

}  // namespace

void apply_gradients(ModelState& model, Batch& batch, const Gradients& grads, const OptimizerConfig& opt) {
    require_finite_grad(grads.h0.data, "base embeddings");
    require_finite_grad(grads.relations.data, "relations");
    for (const auto& l : grads.layers) {
        require_finite_grad(l.w_self.data, "w_self");
        require_finite_grad(l.w_nbr.data, "w_nbr");
        require_finite_grad(l.bias, "layer bias");
    }
    require_finite_grad(grads.classifier.data, "classifier");
    require_finite_grad(grads.classifier_bias, "classifier bias");

    if (grads.h0.rows != batch.h0.rows || batch.h0_state.data.size() != batch.h0.data.size())
        throw Error("embedding gradient rows do not match the batch");
    for (size_t t = 0; t < batch.h0.data.size(); ++t)
        adagrad(batch.h0.data[t], batch.h0_state.data[t], grads.h0.data[t], opt);
    for (size_t t = 0; t < grads.relations.data.size(); ++t)
        adagrad(model.relations.data[t], model.relation_state.data[t], grads.relations.data[t], opt);
    for (size_t i = 0; i < grads.layers.size(); ++i) {
        const auto& g = grads.layers[i];
        auto& p = model.layers[i];
        if (g.w_self.data.empty()) continue;
        sgd(p.w_self.data, g.w_self.data, opt.dense_lr);
        sgd(p.w_nbr.data, g.w_nbr.data, opt.dense_lr);
        sgd(p.bias, g.bias, opt.dense_lr);
    }
    if (!grads.classifier.data.empty()) {
        sgd(model.classifier.data, grads.classifier.data, opt.dense_lr);
        sgd(model.classifier_bias, grads.classifier_bias, opt.dense_lr);
    }
}

StepResult backward_and_step(ModelState& model, Batch& batch, const OptimizerConfig& opt) {
    Gradients grads;
    StepResult res;
    res.loss = compute_gradients(model, batch, grads);
    if (!std::isfinite(res.loss)) throw Error("non-finite loss");
    apply_gradients(model, batch, grads, opt);
    res.updated = batch.dense.node_ids;
    return res;
}

MatrixD compute_representations(const ModelState& model, const InMemorySubgraph& graph,
                                const MatrixF& embeddings, uint64_t seed, int64_t chunk) {
    const int64_t n = embeddings.rows;
    const int64_t d = embeddings.cols;
    if (model.config.layers() == 0) return convert<double>(embeddings);

    SamplerConfig cfg{model.config.fanouts, model.config.direction, 0};
    MatrixD out(n, d);
    std::vector<NodeId> targets;
    for (int64_t begin = 0; begin < n; begin += chunk) {
        const int64_t end = std::min(n, begin + chunk);
        targets.resize(static_cast<size_t>(end - begin));
        for (int64_t v = begin; v < end; ++v) targets[static_cast<size_t>(v - begin)] = v;
        cfg.seed = derive_seed(seed, static_cast<uint64_t>(begin));
        DenseSample ds = multi_hop_sample(graph, targets, cfg);
        MatrixD h0(static_cast<int64_t>(ds.node_ids.size()), d);
        for (size_t i = 0; i < ds.node_ids.size(); ++i) {
            const float* src = embeddings.row(ds.node_ids[i]);
            std::copy(src, src + d, h0.row(static_cast<int64_t>(i)));
        }
        MatrixD reps = gnn_forward(std::move(ds), h0, model);
        std::copy(reps.data.begin(), reps.data.end(), out.row(begin));
    }
    return out;
}

EvalMode EvalMode::parse(const std::string& s) {
    if (s == "all") return {};
    const std::string prefix = "sampled:";
    if (s.rfind(prefix, 0) == 0) {
        EvalMode m;
        try {
            m.sampled = std::stoll(s.substr(prefix.size()));
        } catch (const std::exception&) {
            m.sampled = 0;
        }
        if (m.sampled <= 0) throw Error("bad eval mode '" + s + "': sample count must be positive");
        return m;
    }
    throw Error("unknown eval mode '" + s + "' (expected all or sampled:N)");
}

std::string EvalMode::name() const { return sampled == 0 ? "all" : "sampled:" + std::to_string(sampled); }

double mrr_from_ranks(std::span<const double> ranks) {
    if (ranks.empty()) return 0.0;
    double s = 0.0;
    for (double r : ranks) s += 1.0 / r;
    return s / static_cast<double>(ranks.size());
}

double evaluate_lp(const ModelState& model, const MatrixD& reps, std::span<const Edge> test, EvalMode mode,
                   uint64_t seed) {
    const int64_t n = reps.rows;
    const int64_t d = reps.cols;
    std::vector<double> ranks;
    ranks.reserve(test.size());
    std::vector<double> q(static_cast<size_t>(d));
    for (size_t t = 0; t < test.size(); ++t) {
        const Edge& e = test[t];
        if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n || e.rel < 0 || e.rel >= model.relations.rows)
            throw Error("test edge " + std::to_string(t) + " refers to an unknown node or relation");
        const double* hs = reps.row(e.src);
        const float* rv = model.relations.row(e.rel);
        for (int64_t k = 0; k < d; ++k) q[static_cast<size_t>(k)] = hs[k] * static_cast<double>(rv[k]);
        const double truth = dot(q.data(), reps.row(e.dst), d);
        int64_t greater = 0, ties = 0;
        auto consider = [&](NodeId v) {
            const double s = dot(q.data(), reps.row(v), d);
            if (s > truth) ++greater;
            else if (s == truth) ++ties;
        };
        if (mode.sampled == 0) {
            for (NodeId v = 0; v < n; ++v)
                if (v != e.dst) consider(v);
        } else {
            Rng rng(derive_seed(seed, static_cast<uint64_t>(t)));
            for (int64_t j = 0; j < mode.sampled; ++j) {
                auto v = static_cast<NodeId>(uniform_index(rng, static_cast<uint64_t>(n)));
                if (v != e.dst) consider(v);
            }
        }
        ranks.push_back(1.0 + static_cast<double>(greater) + static_cast<double>(ties) / 2.0);
    }
    return mrr_from_ranks(ranks);
}

double evaluate_nc(const ModelState& model, const MatrixD& reps, std::span<const NodeId> nodes,
                   std::span<const int32_t> labels) {
    if (nodes.empty()) return 0.0;
    std::vector<int64_t> rows(nodes.begin(), nodes.end());
    MatrixD logits = classifier_logits(model, reps, rows);
    int64_t correct = 0;
    for (int64_t i = 0; i < logits.rows; ++i) {
        const double* l = logits.row(i);
        const auto best = std::max_element(l, l + logits.cols) - l;  // first maximum
        if (best == labels[static_cast<size_t>(nodes[static_cast<size_t>(i)])]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(nodes.size());
}

namespace {

constexpr char kCkptMagic[4] = {'D', 'G', 'C', 'K'};
constexpr uint32_t kCkptVersion = 1;

template <typename T>
void put(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw IntegrityError("checkpoint truncated");
    return v;
}

void put_floats(std::ofstream& out, std::span<const float> xs) {
    out.write(reinterpret_cast<const char*>(xs.data()), static_cast<std::streamsize>(xs.size() * sizeof(float)));
}

void get_floats(std::ifstream& in, std::span<float> xs) {
    in.read(reinterpret_cast<char*>(xs.data()), static_cast<std::streamsize>(xs.size() * sizeof(float)));
    if (!in) throw IntegrityError("checkpoint truncated");
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelState& model, const MatrixF& embeddings,
                     const MatrixF& embedding_state) {
    const auto& c = model.config;
    if (embeddings.rows != c.num_nodes || embeddings.cols != c.dim ||
        embedding_state.data.size() != embeddings.data.size())
        throw Error("checkpoint embedding table does not match the model config");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write checkpoint " + path.string());
    out.write(kCkptMagic, 4);
    put<uint32_t>(out, kCkptVersion);
    put<uint32_t>(out, static_cast<uint32_t>(c.task));
    put<uint32_t>(out, static_cast<uint32_t>(c.encoder));
    put<uint32_t>(out, static_cast<uint32_t>(c.direction));
    put<uint32_t>(out, static_cast<uint32_t>(c.fanouts.size()));
    put<uint32_t>(out, static_cast<uint32_t>(c.num_classes));
    put<uint64_t>(out, static_cast<uint64_t>(c.dim));
    put<uint64_t>(out, static_cast<uint64_t>(c.num_nodes));
    put<uint64_t>(out, static_cast<uint64_t>(c.num_relations));
    for (int f : c.fanouts) put<int32_t>(out, f);
    put_floats(out, embeddings.data);
    put_floats(out, embedding_state.data);
    put_floats(out, model.relations.data);
    put_floats(out, model.relation_state.data);
    for (const auto& l : model.layers) {
        put_floats(out, l.w_self.data);
        put_floats(out, l.w_nbr.data);
        put_floats(out, l.bias);
    }
    put_floats(out, model.classifier.data);
    put_floats(out, model.classifier_bias);
    if (!out) throw Error("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open checkpoint " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kCkptMagic, 4) != 0) throw IntegrityError(path.string() + " is not a checkpoint");
    if (get<uint32_t>(in) != kCkptVersion) throw IntegrityError("unsupported checkpoint version");
    ModelConfig c;
    const auto task = get<uint32_t>(in);
    const auto enc = get<uint32_t>(in);
    const auto dir = get<uint32_t>(in);
    if (task > 1 || enc > 2 || dir > 2) throw IntegrityError("corrupt checkpoint header");
    c.task = static_cast<Task>(task);
    c.encoder = static_cast<EncoderType>(enc);
    c.direction = static_cast<Direction>(dir);
    const auto nf = get<uint32_t>(in);
    c.num_classes = static_cast<int32_t>(get<uint32_t>(in));
    c.dim = static_cast<int64_t>(get<uint64_t>(in));
    c.num_nodes = static_cast<int64_t>(get<uint64_t>(in));
    c.num_relations = static_cast<int64_t>(get<uint64_t>(in));
    if (nf > 64 || c.dim <= 0 || c.dim > (1 << 20)) throw IntegrityError("corrupt checkpoint header");
    for (uint32_t i = 0; i < nf; ++i) c.fanouts.push_back(get<int32_t>(in));

    Checkpoint ck;
    ck.model = ModelState::init(c, 0);
    ck.embeddings.resize(c.num_nodes, c.dim);
    ck.embedding_state.resize(c.num_nodes, c.dim);
    get_floats(in, ck.embeddings.data);
    get_floats(in, ck.embedding_state.data);
    get_floats(in, ck.model.relations.data);
    get_floats(in, ck.model.relation_state.data);
    for (auto& l : ck.model.layers) {
        get_floats(in, l.w_self.data);
        get_floats(in, l.w_nbr.data);
        get_floats(in, l.bias);
    }
    get_floats(in, ck.model.classifier.data);
    get_floats(in, ck.model.classifier_bias);
    in.peek();
    if (!in.eof()) throw IntegrityError("trailing bytes in checkpoint");
    return ck;
}

}  // namespace deltagnn
