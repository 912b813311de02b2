#include "deltagnn/trainer.h"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

namespace deltagnn {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw Error("config key '" + key + "': expected a boolean, got '" + v + "'");
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
    std::istringstream in(v);
    T x{};
    in >> x;
    if (in.fail() || !in.eof()) throw Error("config key '" + key + "': cannot parse '" + v + "'");
    return x;
}

std::vector<int> parse_fanouts(const std::string& v) {
    std::vector<int> out;
    if (trim(v).empty() || trim(v) == "none") return out;
    std::stringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (tok == "all" || tok == "-1") {
            out.push_back(kAllNeighbors);
            continue;
        }
        const int f = parse_number<int>("fanouts", tok);
        if (f <= 0) throw Error("fanouts must be positive or 'all'");
        out.push_back(f);
    }
    return out;
}

using Setter = void (*)(TrainConfig&, const std::string&, const std::string&);

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"dataset", [](TrainConfig& c, const std::string&, const std::string& v) { c.dataset = v; }},
        {"output", [](TrainConfig& c, const std::string&, const std::string& v) { c.output = v; }},
        {"task", [](TrainConfig& c, const std::string&, const std::string& v) {
             if (v != "auto") parse_task(v);
             c.task = v;
         }},
        {"model", [](TrainConfig& c, const std::string&, const std::string& v) {
             parse_encoder(v);
             c.model = v;
         }},
        {"fanouts", [](TrainConfig& c, const std::string&, const std::string& v) { c.fanouts = parse_fanouts(v); }},
        {"direction",
         [](TrainConfig& c, const std::string&, const std::string& v) { c.direction = parse_direction(v); }},
        {"dim", [](TrainConfig& c, const std::string& k, const std::string& v) { c.dim = parse_number<int64_t>(k, v); }},
        {"lr", [](TrainConfig& c, const std::string& k, const std::string& v) { c.lr = parse_number<double>(k, v); }},
        {"dense_lr",
         [](TrainConfig& c, const std::string& k, const std::string& v) { c.dense_lr = parse_number<double>(k, v); }},
        {"negatives",
         [](TrainConfig& c, const std::string& k, const std::string& v) { c.negatives = parse_number<int>(k, v); }},
        {"batch_size", [](TrainConfig& c, const std::string& k,
                          const std::string& v) { c.batch_size = parse_number<int64_t>(k, v); }},
        {"epochs", [](TrainConfig& c, const std::string& k, const std::string& v) { c.epochs = parse_number<int>(k, v); }},
        {"seed", [](TrainConfig& c, const std::string& k, const std::string& v) { c.seed = parse_number<uint64_t>(k, v); }},
        {"storage", [](TrainConfig& c, const std::string&, const std::string& v) {
             if (v != "memory" && v != "disk") throw Error("storage must be memory or disk");
             c.storage = v;
         }},
        {"backend", [](TrainConfig& c, const std::string&, const std::string& v) {
             if (v != "auto" && v != "buffer" && v != "flat") throw Error("backend must be auto, buffer or flat");
             c.backend = v;
         }},
        {"policy", [](TrainConfig& c, const std::string&, const std::string& v) {
             if (v != "auto" && v != "comet" && v != "beta" && v != "nc")
                 throw Error("policy must be auto, comet, beta or nc");
             c.policy = v;
         }},
        {"buffer_capacity", [](TrainConfig& c, const std::string& k,
                               const std::string& v) { c.buffer_capacity = parse_number<int32_t>(k, v); }},
        {"logical_partitions", [](TrainConfig& c, const std::string& k,
                                  const std::string& v) { c.logical_partitions = parse_number<int32_t>(k, v); }},
        {"prefetch", [](TrainConfig& c, const std::string& k, const std::string& v) { c.prefetch = parse_bool(k, v); }},
        {"read_delay_ms", [](TrainConfig& c, const std::string& k,
                             const std::string& v) { c.read_delay_ms = parse_number<int>(k, v); }},
        {"eval_mode", [](TrainConfig& c, const std::string&, const std::string& v) {
             EvalMode::parse(v);
             c.eval_mode = v;
         }},
        {"eval_every",
         [](TrainConfig& c, const std::string& k, const std::string& v) { c.eval_every = parse_number<int>(k, v); }},
        {"eval_seed", [](TrainConfig& c, const std::string& k,
                         const std::string& v) { c.eval_seed = parse_number<uint64_t>(k, v); }},
        {"compute_bias",
         [](TrainConfig& c, const std::string& k, const std::string& v) { c.compute_bias = parse_bool(k, v); }},
        {"save_checkpoint",
         [](TrainConfig& c, const std::string& k, const std::string& v) { c.save_checkpoint = parse_bool(k, v); }},
    };
    return table;
}

}  // namespace

std::vector<std::string> TrainConfig::keys() {
    std::vector<std::string> out;
    for (const auto& [k, _] : setters()) out.push_back(k);
    return out;
}

void TrainConfig::set(const std::string& key, const std::string& value) {
    const auto& table = setters();
    auto it = table.find(key);
    if (it == table.end()) {
        std::string valid;
        for (const auto& k : keys()) valid += (valid.empty() ? "" : ", ") + k;
        throw Error("unknown config key '" + key + "'; valid keys: " + valid);
    }
    it->second(*this, key, value);
}

TrainConfig TrainConfig::parse(const std::string& text) {
    TrainConfig c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error("config line " + std::to_string(lineno) + ": expected key=value, got '" + line + "'");
        c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return c;
}

TrainConfig TrainConfig::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

Task TrainConfig::resolved_task(const Dataset& ds) const {
    if (task == "auto") return ds.node_classification() ? Task::NodeClassification : Task::LinkPrediction;
    return parse_task(task);
}

void TrainConfig::validate() const {
    if (dataset.empty()) throw Error("config: dataset is required");
    const auto enc = parse_encoder(model);
    if (enc != EncoderType::None && fanouts.empty())
        throw Error("config: model '" + model + "' needs fanouts (one per layer)");
    if (dim <= 0) throw Error("config: dim must be positive");
    if (batch_size <= 0) throw Error("config: batch_size must be positive");
    if (epochs < 0) throw Error("config: epochs must be non-negative");
    if (lr < 0 || dense_lr < 0) throw Error("config: learning rates must be non-negative");
    if (read_delay_ms < 0) throw Error("config: read_delay_ms must be non-negative");
}

std::string EpochMetrics::to_json() const {
    nlohmann::ordered_json j;
    j["epoch"] = epoch;
    j["wall_seconds"] = wall_seconds;
    j["loss"] = loss;
    if (mrr) j["mrr"] = *mrr;
    if (accuracy) j["accuracy"] = *accuracy;
    j["io_bytes"] = io_bytes;
    j["swaps"] = swaps;
    j["sets"] = sets;
    j["examples"] = examples;
    if (bias) j["bias"] = *bias;
    return j.dump();
}

void init_working_tables(const PartitionMap& pm, int64_t dim, uint64_t seed, const fs::path& emb,
                         const fs::path& state) {
    const auto d = static_cast<size_t>(dim);
    std::vector<float> rows(static_cast<size_t>(pm.num_nodes()) * d);
    for (size_t r = 0; r < pm.nodes_by_partition.size(); ++r)
        init_embedding_row(seed, pm.nodes_by_partition[r], std::span<float>(rows.data() + r * d, d));
    auto write = [](const fs::path& path, const std::vector<float>& data) {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(float)));
        if (!out) throw Error("cannot write " + path.string());
    };
    write(emb, rows);
    std::fill(rows.begin(), rows.end(), 0.0f);
    write(state, rows);
}

Trainer::Trainer(TrainConfig cfg, const Dataset& ds) : cfg_(std::move(cfg)), ds_(ds) {
    cfg_.validate();
    task_ = cfg_.resolved_task(ds_);
    if (task_ == Task::NodeClassification && !ds_.node_classification())
        throw Error("dataset has no node labels; node classification is unavailable");
    fs::create_directories(cfg_.output);

    ModelConfig mc;
    mc.task = task_;
    mc.encoder = parse_encoder(cfg_.model);
    mc.dim = cfg_.dim;
    mc.num_nodes = ds_.meta.num_nodes;
    mc.num_relations = ds_.meta.num_relations;
    mc.num_classes = ds_.meta.num_classes;
    if (mc.encoder != EncoderType::None) mc.fanouts = cfg_.fanouts;
    mc.direction = cfg_.direction;
    model_ = ModelState::init(mc, derive_seed(cfg_.seed, 0x6d6f64ULL));
    opt_.lr = cfg_.lr;
    opt_.dense_lr = cfg_.dense_lr;

    const int32_t p = ds_.meta.p;
    if (cfg_.storage == "disk") {
        c_ = cfg_.buffer_capacity > 0 ? std::min(cfg_.buffer_capacity, p) : std::max(2, p / 4);
        if (c_ >= p) {
            c_ = l_ = p;
        } else if (cfg_.logical_partitions > 0) {
            l_ = cfg_.logical_partitions;
            if (p % l_ != 0 || (static_cast<int64_t>(l_) * c_) % p != 0 || static_cast<int64_t>(l_) * c_ / p < 2)
                throw Error("logical_partitions=" + std::to_string(l_) + " needs l | p and l*c/p integral and >= 2 (p=" +
                            std::to_string(p) + ", c=" + std::to_string(c_) + ")");
        } else {
            auto plan = plan_for_partitions(p, c_);
            l_ = plan.l;
            c_ = plan.c;
        }
    } else {
        c_ = l_ = p;
    }

    const std::string backend =
        cfg_.backend != "auto" ? cfg_.backend : (cfg_.storage == "disk" ? "buffer" : "flat");
    const fs::path out = cfg_.output;
    if (backend == "buffer") {
        init_working_tables(*ds_.partitions, cfg_.dim, cfg_.seed, out / "embeddings.bin", out / "embeddings_state.bin");
        stats_file_ = std::make_unique<std::ofstream>(out / "buffer_stats.jsonl", std::ios::trunc);
        BufferOptions bo;
        bo.prefetch = cfg_.prefetch;
        bo.read_delay_ms = cfg_.read_delay_ms;
        bo.stats_out = stats_file_.get();
        store_ = std::make_unique<PartitionBuffer>(ds_.store, ds_.partitions, out / "embeddings.bin",
                                                   out / "embeddings_state.bin", cfg_.dim, bo);
    } else {
        MatrixF emb(ds_.meta.num_nodes, cfg_.dim), state(ds_.meta.num_nodes, cfg_.dim);
        for (NodeId v = 0; v < emb.rows; ++v) init_embedding_row(cfg_.seed, v, emb.row_span(v));
        store_ = std::make_unique<FlatStore>(ds_.store, ds_.partitions, std::move(emb), std::move(state));
    }
}

Schedule Trainer::make_schedule(int epoch) const {
    if (schedule_fn_) return schedule_fn_(epoch);
    const uint64_t es = derive_seed(cfg_.seed, 0x736368ULL, static_cast<uint64_t>(epoch));
    const int32_t p = ds_.meta.p;
    const auto counts = ds_.store.bucket_counts();

    if (c_ >= p) {
        Schedule s;
        s.grouping = LogicalGrouping::identity(p);
        std::vector<int32_t> all(static_cast<size_t>(p));
        for (int32_t q = 0; q < p; ++q) all[static_cast<size_t>(q)] = q;
        s.S.push_back(all);
        s.X.resize(1);
        if (task_ == Task::NodeClassification) {
            s.kind = ExampleKind::Nodes;
            s.X[0] = ds_.train_nodes;
        } else {
            for (size_t b = 0; b < counts.size(); ++b)
                if (counts[b] > 0) s.X[0].push_back(static_cast<int64_t>(b));
        }
        return s;
    }

    std::string policy = cfg_.policy;
    if (policy == "auto") policy = task_ == Task::NodeClassification ? "nc" : "comet";
    if (task_ == Task::NodeClassification && policy != "nc")
        throw Error("node classification in disk mode uses policy nc");
    if (task_ == Task::LinkPrediction && policy == "nc") throw Error("policy nc is for node classification");
    if (policy == "nc") return nc_schedule(*ds_.partitions, c_, ds_.train_nodes, es);
    if (policy == "beta") return beta_schedule(p, c_, counts, derive_seed(es, 4));
    auto g = group_logical(p, l_, derive_seed(es, 1));
    auto s = comet_schedule(g, c_ * l_ / p, derive_seed(es, 2));
    comet_assign(s, counts, derive_seed(es, 3));
    return s;
}

void Trainer::train_set(const Schedule& s, size_t i, int epoch, EpochMetrics& m, double& loss_sum,
                        int64_t& batches) {
    store_->load_set(s, i);
    const InMemorySubgraph& sub = store_->subgraph();
    const uint64_t set_seed = derive_seed(cfg_.seed, static_cast<uint64_t>(epoch), static_cast<uint64_t>(i));
    Rng order_rng(set_seed);
    SamplerConfig sc{model_.config.fanouts, model_.config.direction, 0};
    const auto B = static_cast<size_t>(cfg_.batch_size);
    Batch batch;
    std::vector<NodeId> targets;
    std::unordered_map<NodeId, int64_t> row_of;

    auto run_batch = [&](uint64_t batch_seed) {
        sc.seed = derive_seed(batch_seed, 0x736d70ULL);
        batch.dense = multi_hop_sample(sub, targets, sc);
        store_->gather(batch.dense.node_ids, batch.h0, batch.h0_state);
        auto res = backward_and_step(model_, batch, opt_);
        store_->scatter(batch.dense.node_ids, batch.h0, batch.h0_state);
        ++batches;
        return res.loss;
    };
    auto row = [&](NodeId v) {
        auto [it, fresh] = row_of.emplace(v, static_cast<int64_t>(targets.size()));
        if (fresh) targets.push_back(v);
        return it->second;
    };

    if (s.kind == ExampleKind::Nodes) {
        std::vector<NodeId> nodes = s.X[i];
        shuffle(nodes, order_rng);
        for (size_t b0 = 0, b = 0; b0 < nodes.size(); b0 += B, ++b) {
            const size_t b1 = std::min(nodes.size(), b0 + B);
            targets.clear();
            row_of.clear();
            batch.node.rows.clear();
            batch.node.labels.clear();
            for (size_t t = b0; t < b1; ++t) {
                batch.node.rows.push_back(row(nodes[t]));
                batch.node.labels.push_back(ds_.labels[static_cast<size_t>(nodes[t])]);
            }
            const double loss = run_batch(derive_seed(set_seed, b));
            loss_sum += loss * static_cast<double>(b1 - b0);
            m.examples += static_cast<int64_t>(b1 - b0);
        }
        return;
    }

    const int32_t p = s.grouping.p;
    std::vector<char> wanted(static_cast<size_t>(p) * static_cast<size_t>(p), 0);
    for (auto id : s.X[i]) wanted[static_cast<size_t>(id)] = 1;
    const auto& pm = sub.partition_map();
    std::vector<Edge> edges;
    for (const Edge& e : sub.edges_by_src())
        if (wanted[static_cast<size_t>(pm.partition_of(e.src)) * p + pm.partition_of(e.dst)]) edges.push_back(e);
    shuffle(edges, order_rng);
    const auto candidates = sub.resident_nodes();
    if (candidates.empty()) return;
    const int N = cfg_.negatives;
    if (N <= 0) throw Error("link prediction needs negatives > 0");

    for (size_t b0 = 0, b = 0; b0 < edges.size(); b0 += B, ++b) {
        const size_t b1 = std::min(edges.size(), b0 + B);
        const uint64_t batch_seed = derive_seed(set_seed, b);
        Rng neg_rng(derive_seed(batch_seed, 0x6e6567ULL));
        targets.clear();
        row_of.clear();
        auto& lp = batch.link;
        lp.src.clear();
        lp.dst.clear();
        lp.rel.clear();
        lp.neg.clear();
        lp.negatives = N;
        for (size_t t = b0; t < b1; ++t) {
            lp.src.push_back(row(edges[t].src));
            lp.dst.push_back(row(edges[t].dst));
            lp.rel.push_back(edges[t].rel);
        }
        for (size_t t = b0; t < b1; ++t)
            for (int j = 0; j < N; ++j)
                lp.neg.push_back(row(candidates[uniform_index(neg_rng, candidates.size())]));
        const double loss = run_batch(batch_seed);
        loss_sum += loss * static_cast<double>(b1 - b0);
        m.examples += static_cast<int64_t>(b1 - b0);
    }
}

EpochMetrics Trainer::train_epoch(int epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochMetrics m;
    m.epoch = epoch;
    const Schedule s = make_schedule(epoch);
    if (s.X.size() != s.S.size()) throw Error("schedule has no example assignment");
    const auto before = store_->stats();
    double loss_sum = 0.0;
    int64_t batches = 0;
    for (size_t i = 0; i < s.size(); ++i) train_set(s, i, epoch, m, loss_sum, batches);
    store_->flush();
    model_.check_finite();

    const int64_t expected = task_ == Task::NodeClassification ? static_cast<int64_t>(ds_.train_nodes.size())
                                                               : ds_.meta.num_train_edges;
    if (m.examples != expected)
        throw Error("epoch coverage mismatch: processed " + std::to_string(m.examples) + " examples, expected " +
                    std::to_string(expected));

    const auto& after = store_->stats();
    m.loss = m.examples ? loss_sum / static_cast<double>(m.examples) : 0.0;
    m.io_bytes = after.bytes_read - before.bytes_read;
    m.swaps = after.swaps - before.swaps;
    m.sets = static_cast<int64_t>(s.size());
    if (cfg_.compute_bias) m.bias = edge_permutation_bias(s, ds_.store).B;
    m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return m;
}

MatrixD Trainer::representations() {
    MatrixF emb, state;
    store_->snapshot(emb, state);
    if (!full_graph_) {
        std::vector<PartitionId> all(static_cast<size_t>(ds_.meta.p));
        for (PartitionId q = 0; q < ds_.meta.p; ++q) all[static_cast<size_t>(q)] = q;
        full_graph_ = std::make_unique<InMemorySubgraph>(ds_.partitions, all, ds_.store.read_all());
    }
    return compute_representations(model_, *full_graph_, emb, cfg_.eval_seed);
}

double Trainer::evaluate(std::span<const Edge> edges, EvalMode mode) {
    MatrixD reps = representations();
    return evaluate_lp(model_, reps, edges, mode, cfg_.eval_seed);
}

double Trainer::evaluate_nodes(std::span<const NodeId> nodes) {
    MatrixD reps = representations();
    return evaluate_nc(model_, reps, nodes, ds_.labels);
}

void Trainer::save(const fs::path& path) {
    MatrixF emb, state;
    store_->snapshot(emb, state);
    save_checkpoint(path, model_, emb, state);
}

std::vector<EpochMetrics> Trainer::run(std::ostream* out) {
    std::ofstream metrics(fs::path(cfg_.output) / "metrics.jsonl", std::ios::app);
    const EvalMode mode = EvalMode::parse(cfg_.eval_mode);
    std::vector<EpochMetrics> all;
    auto emit = [&](const std::string& line) {
        if (out) *out << line << std::endl;
        metrics << line << '\n';
    };
    for (int e = 0; e < cfg_.epochs; ++e) {
        EpochMetrics m = train_epoch(e);
        const bool due = cfg_.eval_every > 0 && ((e + 1) % cfg_.eval_every == 0 || e + 1 == cfg_.epochs);
        if (due) {
            if (task_ == Task::LinkPrediction && !ds_.valid_edges.empty()) m.mrr = evaluate(ds_.valid_edges, mode);
            if (task_ == Task::NodeClassification && !ds_.valid_nodes.empty())
                m.accuracy = evaluate_nodes(ds_.valid_nodes);
        }
        emit(m.to_json());
        all.push_back(m);
    }

    nlohmann::ordered_json fin;
    fin["final"] = true;
    fin["epochs"] = cfg_.epochs;
    if (task_ == Task::LinkPrediction && !ds_.test_edges.empty()) {
        fin["eval_mode"] = mode.name();
        fin["test_mrr"] = evaluate(ds_.test_edges, mode);
    }
    if (task_ == Task::NodeClassification && !ds_.test_nodes.empty())
        fin["test_accuracy"] = evaluate_nodes(ds_.test_nodes);
    if (cfg_.save_checkpoint) {
        const auto path = fs::path(cfg_.output) / "model.ckpt";
        save(path);
        fin["checkpoint"] = path.string();
    }
    emit(fin.dump());
    return all;
}

}  // namespace deltagnn
