#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "deltagnn/synth.h"
#include "deltagnn/trainer.h"
#include "json.hpp"

namespace deltagnn {

namespace fs = std::filesystem;

namespace {

RawGraph read_input(const fs::path& input, const IngestOptions& opts, IngestReport* report) {
    if (fs::is_directory(input)) {
        auto pick = [&](const char* stem) -> fs::path {
            for (const char* ext : {".txt", ".tsv", ".bin"}) {
                auto p = input / (std::string(stem) + ext);
                if (fs::exists(p)) return p;
            }
            return {};
        };
        auto train = pick("train");
        if (train.empty()) throw Error("no train.txt (or .tsv/.bin) in " + input.string());
        return ingest_splits(train, pick("valid"), pick("test"), opts, report);
    }
    return ingest(input, opts, report);
}

// --key value / --key=value pairs left over after option parsing.
std::vector<std::pair<std::string, std::string>> key_values(const std::vector<std::string>& args) {
    std::vector<std::pair<std::string, std::string>> out;
    for (size_t i = 0; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (a.rfind("--", 0) != 0) throw Error("unexpected argument '" + a + "'");
        auto body = a.substr(2);
        if (auto eq = body.find('='); eq != std::string::npos) {
            out.emplace_back(body.substr(0, eq), body.substr(eq + 1));
        } else {
            if (i + 1 >= args.size()) throw Error("missing value for --" + body);
            out.emplace_back(body, args[++i]);
        }
    }
    return out;
}

double bytes_arg(const std::string& s) {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    std::string unit = s.substr(pos);
    if (unit.empty() || unit == "B") return v;
    if (unit == "K" || unit == "KB") return v * 1e3;
    if (unit == "M" || unit == "MB") return v * 1e6;
    if (unit == "G" || unit == "GB") return v * 1e9;
    if (unit == "KiB") return v * 1024.0;
    if (unit == "MiB") return v * 1024.0 * 1024.0;
    if (unit == "GiB") return v * 1024.0 * 1024.0 * 1024.0;
    throw Error("bad byte size '" + s + "'");
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Disk-based GNN training with delta-encoded neighborhood samples"};
    app.require_subcommand(1);

    // preprocess
    auto* pre = app.add_subcommand("preprocess", "Ingest an edge list and write a partitioned dataset");
    std::string pre_in, pre_out, pre_p = "1", pre_mode = "random", pre_labels, pre_format = "auto";
    int64_t pre_dim = 100;
    uint64_t pre_seed = 0;
    int pre_width = 32;
    std::string pre_cpu = "4G", pre_block = "1M", pre_fudge = "0.25G";
    pre->add_option("input", pre_in, "Edge file or directory with train/valid/test files")->required();
    pre->add_option("out_dir", pre_out, "Output dataset directory")->required();
    pre->add_option("--p", pre_p, "Partition count or 'auto'");
    pre->add_option("--mode", pre_mode, "random | train-first");
    pre->add_option("--labels", pre_labels, "node<TAB>label<TAB>split file for node classification");
    pre->add_option("--format", pre_format, "auto | tsv2 | tsv3 | binary");
    pre->add_option("--dim", pre_dim, "Embedding dimension for the initial table");
    pre->add_option("--seed", pre_seed, "Seed for partitioning and initialization");
    pre->add_option("--id-width", pre_width, "32 or 64");
    pre->add_option("--cpu", pre_cpu, "CPU memory for --p auto");
    pre->add_option("--block", pre_block, "Disk block size for --p auto");
    pre->add_option("--fudge", pre_fudge, "Reserved memory for --p auto");

    // plan
    auto* plan = app.add_subcommand("plan", "Print the auto-tuned (p, l, c) plan");
    std::string plan_ds, plan_cpu, plan_block, plan_fudge = "0";
    double plan_nodes = 0, plan_edges = 0, plan_dim = 0, plan_bpe = 0;
    plan->add_option("dataset", plan_ds, "Preprocessed dataset (optional with --nodes/--edges)");
    plan->add_option("--cpu", plan_cpu, "CPU memory in bytes (suffixes K, M, G accepted)")->required();
    plan->add_option("--block", plan_block, "Smallest efficient disk read in bytes")->required();
    plan->add_option("--fudge", plan_fudge, "Memory reserved for everything else");
    plan->add_option("--nodes", plan_nodes, "Node count (overrides dataset)");
    plan->add_option("--edges", plan_edges, "Edge count (overrides dataset)");
    plan->add_option("--dim", plan_dim, "Embedding dimension (default: dataset or 100)");
    plan->add_option("--bytes-per-edge", plan_bpe, "Edge record size (default: dataset or 12)");

    // train
    auto* train = app.add_subcommand("train", "Train a model from a key=value config");
    std::string train_cfg;
    train->add_option("config", train_cfg, "Config file")->required();
    train->allow_extras();

    // eval
    auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
    std::string ev_ckpt, ev_ds, ev_mode = "all", ev_split = "test";
    uint64_t ev_seed = 0;
    ev->add_option("checkpoint", ev_ckpt)->required();
    ev->add_option("dataset", ev_ds)->required();
    ev->add_option("--mode", ev_mode, "all | sampled:N");
    ev->add_option("--split", ev_split, "test | valid");
    ev->add_option("--seed", ev_seed, "Evaluation seed (sampled fanouts or negatives)");

    // bias
    auto* bias = app.add_subcommand("bias", "Edge Permutation Bias of one epoch's schedule");
    std::string bias_ds, bias_policy = "comet";
    uint64_t bias_seed = 0;
    int32_t bias_c = 0, bias_l = 0;
    bias->add_option("dataset", bias_ds)->required();
    bias->add_option("--policy", bias_policy, "comet | beta | nc");
    bias->add_option("--seed", bias_seed);
    bias->add_option("--c", bias_c, "Buffer capacity in physical partitions (default p/2)");
    bias->add_option("--l", bias_l, "Logical partitions (default derived)");

    // synth
    auto* syn = app.add_subcommand("synth", "Write a clustered synthetic graph");
    SynthOptions so;
    std::string syn_out;
    syn->add_option("out_dir", syn_out)->required();
    syn->add_option("--kind", so.kind, "kg | nc");
    syn->add_option("--nodes", so.nodes);
    syn->add_option("--edges", so.edges);
    syn->add_option("--relations", so.relations);
    syn->add_option("--clusters", so.clusters);
    syn->add_option("--classes", so.classes);
    syn->add_option("--noise", so.noise);
    syn->add_option("--homophily", so.homophily);
    syn->add_option("--train-fraction", so.train_node_fraction);
    syn->add_option("--seed", so.seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*pre) {
            IngestOptions io;
            io.format = parse_input_format(pre_format);
            io.width = parse_id_width(pre_width);
            IngestReport rep;
            RawGraph g = read_input(pre_in, io, &rep);
            if (!pre_labels.empty()) attach_node_labels(g, pre_labels);
            int32_t p;
            if (pre_p == "auto") {
                TuningInputs ti;
                ti.num_nodes = static_cast<double>(g.num_nodes);
                ti.num_edges = static_cast<double>(g.train_edges.size());
                ti.dim = static_cast<double>(pre_dim);
                ti.bytes_per_edge = 3.0 * static_cast<double>(io.width);
                ti.cpu = bytes_arg(pre_cpu);
                ti.block = bytes_arg(pre_block);
                ti.fudge = bytes_arg(pre_fudge);
                p = autotune(ti).p;
            } else {
                p = std::stoi(pre_p);
            }
            BuildOptions bo;
            bo.dim = pre_dim;
            bo.seed = pre_seed;
            bo.width = io.width;
            auto ds = preprocess(g, p, parse_partition_mode(pre_mode), bo, pre_out);
            nlohmann::ordered_json j = nlohmann::ordered_json::parse(rep.to_json());
            j["p"] = ds.meta.p;
            j["partition_mode"] = pre_mode;
            j["num_classes"] = ds.meta.num_classes;
            j["out_dir"] = pre_out;
            out << j.dump() << std::endl;
            return 0;
        }
        if (*plan) {
            TuningInputs ti;
            ti.dim = 100;
            ti.bytes_per_edge = 12;
            if (!plan_ds.empty()) {
                auto ds = Dataset::open(plan_ds);
                ti.num_nodes = static_cast<double>(ds.meta.num_nodes);
                ti.num_edges = static_cast<double>(ds.meta.num_train_edges);
                ti.dim = static_cast<double>(ds.meta.dim);
                ti.bytes_per_edge = 3.0 * static_cast<double>(ds.meta.width);
            }
            if (plan_nodes > 0) ti.num_nodes = plan_nodes;
            if (plan_edges > 0) ti.num_edges = plan_edges;
            if (plan_dim > 0) ti.dim = plan_dim;
            if (plan_bpe > 0) ti.bytes_per_edge = plan_bpe;
            if (ti.num_nodes <= 0 || ti.num_edges <= 0) throw Error("plan needs a dataset or --nodes and --edges");
            ti.cpu = bytes_arg(plan_cpu);
            ti.block = bytes_arg(plan_block);
            ti.fudge = bytes_arg(plan_fudge);
            out << autotune(ti).to_json() << std::endl;
            return 0;
        }
        if (*train) {
            TrainConfig cfg = TrainConfig::load(train_cfg);
            for (const auto& [k, v] : key_values(train->remaining())) cfg.set(k, v);
            auto ds = Dataset::open(cfg.dataset);
            Trainer t(cfg, ds);
            t.run(&out);
            return 0;
        }
        if (*ev) {
            auto ck = load_checkpoint(ev_ckpt);
            auto ds = Dataset::open(ev_ds);
            if (ck.model.config.num_nodes != ds.meta.num_nodes) throw Error("checkpoint and dataset node counts differ");
            std::vector<PartitionId> all(static_cast<size_t>(ds.meta.p));
            for (PartitionId q = 0; q < ds.meta.p; ++q) all[static_cast<size_t>(q)] = q;
            InMemorySubgraph full(ds.partitions, all, ds.store.read_all());
            MatrixD reps = compute_representations(ck.model, full, ck.embeddings, ev_seed);
            nlohmann::ordered_json j;
            j["split"] = ev_split;
            if (ev_split != "test" && ev_split != "valid") throw Error("split must be test or valid");
            if (ck.model.config.task == Task::LinkPrediction) {
                const auto mode = EvalMode::parse(ev_mode);
                const auto& edges = ev_split == "test" ? ds.test_edges : ds.valid_edges;
                j["eval_mode"] = mode.name();
                j["mrr"] = evaluate_lp(ck.model, reps, edges, mode, ev_seed);
                j["edges"] = edges.size();
            } else {
                const auto& nodes = ev_split == "test" ? ds.test_nodes : ds.valid_nodes;
                j["accuracy"] = evaluate_nc(ck.model, reps, nodes, ds.labels);
                j["nodes"] = nodes.size();
            }
            out << j.dump() << std::endl;
            return 0;
        }
        if (*bias) {
            auto ds = Dataset::open(bias_ds);
            const int32_t p = ds.meta.p;
            const int32_t c = bias_c > 0 ? std::min(bias_c, p) : std::max(2, p / 2);
            const auto counts = ds.store.bucket_counts();
            Schedule s;
            int32_t l = p;
            if (bias_policy == "beta") {
                s = beta_schedule(p, c, counts, bias_seed);
            } else if (bias_policy == "nc") {
                if (!ds.node_classification()) throw Error("policy nc needs a node-classification dataset");
                s = nc_schedule(*ds.partitions, c, ds.train_nodes, bias_seed);
            } else if (bias_policy == "comet") {
                l = bias_l > 0 ? bias_l : (c >= p ? p : plan_for_partitions(p, c).l);
                if ((static_cast<int64_t>(l) * c) % p != 0) throw Error("l*c/p must be an integer");
                auto g = group_logical(p, l, derive_seed(bias_seed, 1));
                s = comet_schedule(g, static_cast<int32_t>(static_cast<int64_t>(l) * c / p), derive_seed(bias_seed, 2));
                comet_assign(s, counts, derive_seed(bias_seed, 3));
            } else {
                throw Error("unknown policy '" + bias_policy + "' (expected comet, beta, nc)");
            }
            auto rep = edge_permutation_bias(s, ds.store);
            std::vector<int64_t> part_bytes(static_cast<size_t>(p)), bucket_bytes(counts.size());
            for (PartitionId q = 0; q < p; ++q)
                part_bytes[static_cast<size_t>(q)] =
                    ds.partitions->partition_sizes[static_cast<size_t>(q)] * ds.meta.dim * 4;
            for (int32_t i = 0; i < p; ++i)
                for (int32_t j2 = 0; j2 < p; ++j2)
                    bucket_bytes[static_cast<size_t>(i * p + j2)] = ds.store.bucket_bytes(i, j2);
            auto io = io_report(s, part_bytes, bucket_bytes);
            nlohmann::ordered_json j = nlohmann::ordered_json::parse(rep.to_json());
            j["policy"] = bias_policy;
            j["seed"] = bias_seed;
            j["p"] = p;
            j["c"] = c;
            j["l"] = l;
            j["sets"] = s.size();
            j["io"] = nlohmann::json::parse(io.to_json());
            out << j.dump() << std::endl;
            return 0;
        }
        if (*syn) {
            write_synthetic(syn_out, so);
            out << nlohmann::json{{"out_dir", syn_out}, {"kind", so.kind}, {"nodes", so.nodes}, {"edges", so.edges}}.dump()
                << std::endl;
            return 0;
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << std::endl;
        return 1;
    }
    return 1;
}

}  // namespace deltagnn
