// Acceptance suite: one PASS/FAIL/SKIP line per criterion.
//
//   deltagnn_acceptance [--only N] [--data DIR] [--fb15k DIR]
//
// Exit status is 0 when every run criterion passes, 1 otherwise, and 77 when
// every selected criterion was skipped.

#include <chrono>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "deltagnn/dense.h"
#include "deltagnn/model.h"
#include "deltagnn/schedule.h"
#include "deltagnn/synth.h"
#include "deltagnn/trainer.h"
#include "oracles.h"
#include "test_util.h"

using namespace deltagnn;
using namespace oracles;
namespace fs = std::filesystem;

namespace {

enum class Status { Pass, Fail, Skip, Declared };

struct Outcome {
    Status status = Status::Pass;
    std::string detail;
};

struct Ctx {
    fs::path data_dir;
    fs::path fb15k_dir;
};

Outcome pass(std::string d) { return {Status::Pass, std::move(d)}; }
Outcome fail(std::string d) { return {Status::Fail, std::move(d)}; }
Outcome verdict(bool ok, std::string d) { return {ok ? Status::Pass : Status::Fail, std::move(d)}; }

std::string fmt(double x, int prec = 4) {
    std::ostringstream s;
    s.precision(prec);
    s << std::fixed << x;
    return s.str();
}

template <typename T>
std::string join(const std::vector<T>& xs, const std::function<std::string(const T&)>& f) {
    std::string out;
    for (const auto& x : xs) out += (out.empty() ? "" : " ") + f(x);
    return out;
}

bool strictly_increasing(const std::vector<double>& v) {
    for (size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1])) return false;
    return true;
}

bool strictly_decreasing(const std::vector<double>& v) {
    for (size_t i = 1; i < v.size(); ++i)
        if (!(v[i] < v[i - 1])) return false;
    return true;
}

std::vector<Edge> train_edges_of(const RawGraph& g) {
    std::vector<Edge> out;
    out.reserve(g.train_edges.size());
    for (auto i : g.train_edges) out.push_back(g.edges[static_cast<size_t>(i)]);
    return out;
}

// ---------------------------------------------------------------------------

Outcome c1_worked_example(const Ctx&) {
    enum : NodeId { A = 0, B = 1, C = 2, D = 3, E = 4 };
    std::vector<Edge> edges = {{C, 0, A}, {D, 0, A}, {A, 0, B}, {C, 0, B}, {E, 0, C}, {A, 0, D}};
    auto sub = testutil::whole_graph(5, edges);
    std::vector<NodeId> targets = {A, B};
    auto d = multi_hop_sample(sub, targets, {{kAllNeighbors, kAllNeighbors}, Direction::Incoming, 0});
    build_repr_map(d);
    d.validate();

    auto group = [&](int64_t g) {
        std::set<NodeId> s(d.node_ids.begin() + d.group_begin(g), d.node_ids.begin() + d.group_end(g));
        return s;
    };
    bool ok = d.num_groups() == 3 && group(2) == std::set<NodeId>{A, B} && group(1) == std::set<NodeId>{C, D} &&
              group(0) == std::set<NodeId>{E};
    // A's list {C, D} is stored once and is still present after one layer
    auto lists_equal_cd = [](const DenseSample& s) {
        int n = 0;
        for (int64_t o = 0; o < s.num_owners(); ++o) {
            std::multiset<NodeId> l;
            for (auto t = s.nbr_begin(o); t < s.nbr_end(o); ++t) l.insert(s.nbrs[static_cast<size_t>(t)].node);
            if (s.node_ids[static_cast<size_t>(s.first_owner() + o)] == A && l == std::multiset<NodeId>{C, D}) ++n;
        }
        return n;
    };
    ok = ok && lists_equal_cd(d) == 1;
    advance_layer(d);
    d.validate();
    ok = ok && lists_equal_cd(d) == 1;
    return verdict(ok, "groups {E} {C,D} {A,B}; A's list stored once and reused after advance");
}

Outcome c2_oracle(const Ctx&) {
    Rng rng(2024);
    int64_t mismatches = 0, fanout_violations = 0, checks = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int64_t n = 2 + static_cast<int64_t>(uniform_index(rng, 49));
        auto edges = testutil::random_edges(rng, n, static_cast<int64_t>(uniform_index(rng, 3 * static_cast<uint64_t>(n))) + 1,
                                            2, trial % 3 == 0);
        auto sub = testutil::whole_graph(n, edges);
        const auto dir = static_cast<Direction>(trial % 3);
        std::vector<NodeId> targets;
        for (NodeId v = 0; v < n && targets.size() < 3; ++v)
            if (uniform_unit(rng) < 0.4) targets.push_back(v);
        if (targets.empty()) targets.push_back(0);

        for (int k = 1; k <= 3; ++k) {
            std::map<NodeId, int> dist;
            for (auto t : targets) expand(sub, t, 0, k, dir, dist);
            auto d = multi_hop_sample(sub, targets, {std::vector<int>(static_cast<size_t>(k), kAllNeighbors), dir, 1});
            std::set<NodeId> got(d.node_ids.begin(), d.node_ids.end()), want;
            for (auto& [v, _] : dist) want.insert(v);
            ++checks;
            if (got != want) ++mismatches;
            for (int64_t g = 0; g < d.num_groups(); ++g)
                for (auto i = d.group_begin(g); i < d.group_end(g); ++i)
                    if (dist[d.node_ids[static_cast<size_t>(i)]] != k - g) ++mismatches;

            std::vector<int> fanouts;
            for (int i = 0; i < k; ++i) fanouts.push_back(1 + static_cast<int>(uniform_index(rng, 4)));
            auto f = multi_hop_sample(sub, targets, {fanouts, dir, static_cast<uint64_t>(trial)});
            for (int64_t o = 0; o < f.num_owners(); ++o) {
                const int64_t idx = f.first_owner() + o;
                int64_t g = 0;
                while (g + 1 < f.num_groups() && f.group_begin(g + 1) <= idx) ++g;
                const int layer = static_cast<int>(f.num_groups() - 1 - g);
                auto cand = all_neighbors(sub, f.node_ids[static_cast<size_t>(idx)], dir);
                const auto size = f.nbr_end(o) - f.nbr_begin(o);
                if (size != std::min<int64_t>(fanouts[static_cast<size_t>(layer)], static_cast<int64_t>(cand.size())))
                    ++fanout_violations;
                std::multiset<NodeId> pool(cand.begin(), cand.end());
                for (auto t = f.nbr_begin(o); t < f.nbr_end(o); ++t) {
                    auto it = pool.find(f.nbrs[static_cast<size_t>(t)].node);
                    if (it == pool.end()) {
                        ++fanout_violations;
                        break;
                    }
                    pool.erase(it);
                }
            }
        }
    }
    return verdict(mismatches == 0 && fanout_violations == 0,
                   std::to_string(checks) + " samples; node-set/hop mismatches=" + std::to_string(mismatches) +
                       ", effective-fanout violations=" + std::to_string(fanout_violations));
}

// Per-layer resampling without reuse: every node of a layer's frontier draws
// fresh neighbors, and the next frontier is the deduplicated union. Returns
// the number of unique nodes over all layers.
int64_t naive_unique_nodes(const InMemorySubgraph& sub, std::span<const NodeId> targets, int k, int fanout,
                           Direction dir, Rng& rng) {
    std::vector<NodeId> frontier(targets.begin(), targets.end());
    std::set<NodeId> seen(targets.begin(), targets.end());
    for (int layer = 0; layer < k; ++layer) {
        std::set<NodeId> next(frontier.begin(), frontier.end());
        for (auto v : frontier) {
            auto cand = all_neighbors(sub, v, dir);
            const size_t take = std::min<size_t>(static_cast<size_t>(fanout), cand.size());
            for (size_t i = 0; i < take; ++i) {
                const size_t j = i + uniform_index(rng, cand.size() - i);
                std::swap(cand[i], cand[j]);
                next.insert(cand[i]);
            }
        }
        seen.insert(next.begin(), next.end());
        frontier.assign(next.begin(), next.end());
    }
    return static_cast<int64_t>(seen.size());
}

Outcome c3_reuse(const Ctx&) {
    const int64_t n = 100000;
    Rng rng(3);
    auto edges = testutil::random_edges(rng, n, 10 * n);
    auto sub = testutil::whole_graph(n, edges);
    const int batches = 20, batch = 100, fanout = 5;
    bool ok = true;
    std::string detail;
    for (int k = 2; k <= 4; ++k) {
        double dense = 0, naive = 0;
        Rng brng(static_cast<uint64_t>(k));
        for (int b = 0; b < batches; ++b) {
            std::set<NodeId> t;
            while (static_cast<int>(t.size()) < batch) t.insert(static_cast<NodeId>(uniform_index(brng, n)));
            std::vector<NodeId> targets(t.begin(), t.end());
            auto d = multi_hop_sample(sub, targets,
                                      {std::vector<int>(static_cast<size_t>(k), fanout), Direction::Both,
                                       static_cast<uint64_t>(b)});
            dense += static_cast<double>(d.node_ids.size());
            naive += static_cast<double>(naive_unique_nodes(sub, targets, k, fanout, Direction::Both, brng));
        }
        dense /= batches;
        naive /= batches;
        ok = ok && dense <= naive && (k < 3 || dense < naive);
        detail += (detail.empty() ? "" : "; ") + ("k=" + std::to_string(k) + " dense=" + fmt(dense, 0) +
                                                 " naive=" + fmt(naive, 0));
    }
    return verdict(ok, detail);
}

Outcome c4_gradients(const Ctx&) {
    double worst = 0;
    std::string where;
    struct Case {
        Task task;
        EncoderType enc;
        int layers;
        const char* name;
    };
    const std::vector<Case> cases = {{Task::LinkPrediction, EncoderType::None, 0, "lp-distmult"},
                                     {Task::LinkPrediction, EncoderType::Sage, 2, "lp-sage2"},
                                     {Task::LinkPrediction, EncoderType::Additive, 2, "lp-additive2"},
                                     {Task::NodeClassification, EncoderType::Sage, 2, "nc-sage2"},
                                     {Task::NodeClassification, EncoderType::Sage, 1, "nc-sage1"}};
    std::set<std::string> classes;
    for (const auto& c : cases)
        for (uint64_t seed = 1; seed <= 3; ++seed) {
            auto in = make_instance(c.task, c.enc, c.layers, seed);
            for (const auto& [name, err] : gradient_errors(in)) {
                classes.insert(name.substr(name.find('.') + 1));
                if (err > worst) {
                    worst = err;
                    where = std::string(c.name) + ":" + name;
                }
            }
        }
    return verdict(worst < 1e-3, "max relative error " + fmt(worst * 1e6, 2) + "e-6 at " + where + " over " +
                                     std::to_string(classes.size()) + " parameter classes");
}

Outcome c5_additive(const Ctx&) {
    Rng rng(5);
    int exact = 0;
    for (int trial = 0; trial < 100; ++trial) {
        auto d = random_sample(rng, 1 + trial % 3);
        auto h = random_matrix(rng, static_cast<int64_t>(d.node_ids.size()), 8);
        if (layer_forward_additive(d, h).data == additive_oracle(d, h).data) ++exact;
    }
    return verdict(exact == 100, std::to_string(exact) + "/100 bit-exact");
}

// FB15k-237 helpers --------------------------------------------------------

std::optional<Dataset> open_fb15k(const Ctx& ctx, const fs::path& work, int32_t p, std::string& why) {
    if (ctx.fb15k_dir.empty() || !fs::exists(ctx.fb15k_dir / "train.txt")) {
        why = "FB15k-237 not found (set FB15K237_DIR or place it in data/fb15k-237)";
        return std::nullopt;
    }
    RawGraph g = ingest_splits(ctx.fb15k_dir / "train.txt", ctx.fb15k_dir / "valid.txt", ctx.fb15k_dir / "test.txt");
    BuildOptions bo;
    bo.dim = 100;
    return preprocess(g, p, PartitionMode::Random, bo, work);
}

TrainConfig fb_config(const fs::path& ds, const fs::path& out) {
    TrainConfig c;
    c.dataset = ds.string();
    c.output = out.string();
    c.dim = 100;
    c.lr = 0.1;
    c.negatives = 500;
    c.batch_size = 1000;
    c.epochs = 10;
    c.eval_every = 0;
    c.save_checkpoint = false;
    return c;
}

// Test-split MRR over all entities after cfg.epochs epochs.
double final_mrr(Trainer& t, const Dataset& ds) {
    for (int e = 0; e < t.config().epochs; ++e) t.train_epoch(e);
    return t.evaluate(ds.test_edges, EvalMode::parse("all"));
}

Outcome c6_fb_memory(const Ctx& ctx) {
    testutil::TempDir tmp;
    std::string why;
    auto ds = open_fb15k(ctx, tmp / "ds", 1, why);
    if (!ds) return {Status::Skip, why};
    auto cfg = fb_config(tmp / "ds", tmp / "run");
    Trainer t(cfg, *ds);
    const double mrr = final_mrr(t, *ds);
    return verdict(mrr >= 0.20, "all-entities MRR " + fmt(mrr) + " after 10 epochs (threshold 0.20)");
}

Outcome c7_fb_disk(const Ctx& ctx) {
    testutil::TempDir tmp;
    std::string why;
    auto ds = open_fb15k(ctx, tmp / "ds", 16, why);
    if (!ds) return {Status::Skip, why};
    bool ok = true;
    std::string detail;
    for (const char* model : {"distmult", "sage"}) {
        double mean[2] = {0, 0};
        const char* policies[2] = {"comet", "beta"};
        for (int pi = 0; pi < 2; ++pi)
            for (uint64_t seed = 0; seed < 3; ++seed) {
                auto cfg = fb_config(tmp / "ds", tmp / ("run_" + std::string(model) + policies[pi]));
                cfg.model = model;
                if (cfg.model == "sage") cfg.fanouts = {kAllNeighbors};
                cfg.storage = "disk";
                cfg.buffer_capacity = 4;
                cfg.policy = policies[pi];
                cfg.seed = seed;
                Trainer t(cfg, *ds);
                mean[pi] += final_mrr(t, *ds) / 3.0;
            }
        ok = ok && mean[0] > mean[1];
        detail += (detail.empty() ? "" : "; ") +
                  (std::string(model) + " comet=" + fmt(mean[0]) + " beta=" + fmt(mean[1]));
    }
    return verdict(ok, detail);
}

// ---------------------------------------------------------------------------

struct BiasPoint {
    double B = 0, io = 0, sets = 0;
};

// Mean B, IO bytes and |S| of COMET on g over `seeds` seeds.
BiasPoint comet_point(const RawGraph& g, const std::vector<Edge>& edges, int32_t p, int32_t l, int32_t c_l, int seeds,
                      int64_t dim) {
    BiasPoint pt;
    for (int s = 0; s < seeds; ++s) {
        const auto seed = static_cast<uint64_t>(s);
        auto pm = assign_partitions(g, p, PartitionMode::Random, seed);
        auto buckets = testutil::bucketize(pm, edges);
        auto counts = testutil::counts_of(buckets);
        auto sched = comet_schedule(group_logical(p, l, seed), c_l, seed);
        comet_assign(sched, counts, seed);
        pt.B += edge_permutation_bias(sched, buckets, g.num_nodes).B;
        std::vector<int64_t> part_bytes(static_cast<size_t>(p)), bucket_bytes(counts.size());
        for (int32_t q = 0; q < p; ++q) part_bytes[static_cast<size_t>(q)] = pm.partition_sizes[static_cast<size_t>(q)] * dim * 4;
        for (size_t t = 0; t < counts.size(); ++t) bucket_bytes[t] = counts[t] * 12;
        pt.io += static_cast<double>(io_report(sched, part_bytes, bucket_bytes).total_bytes);
        pt.sets += static_cast<double>(sched.size());
    }
    pt.B /= seeds;
    pt.io /= seeds;
    pt.sets /= seeds;
    return pt;
}

Outcome c8_bias(const Ctx& ctx) {
    const auto dir = ctx.data_dir / "synth-kg";
    if (!fs::exists(dir / "train.txt")) return fail("bundled graph missing at " + dir.string());
    RawGraph g = ingest_splits(dir / "train.txt", dir / "valid.txt", dir / "test.txt");
    auto edges = train_edges_of(g);
    const int seeds = 10;
    const int64_t dim = 100;

    // (a) l = p/2 and c_l = 2: the autotune rule l = 2p/c at a fixed buffer of c = 4
    std::vector<double> a;
    for (int32_t p : {8, 16, 32}) a.push_back(comet_point(g, edges, p, p / 2, 2, seeds, dim).B);
    // (b, c) p = 16, buffer of c = 8 physical partitions, l in {4, 8, 16}
    std::vector<double> b, iob, sets;
    for (int32_t l : {4, 8, 16}) {
        auto pt = comet_point(g, edges, 16, l, l / 2, seeds, dim);
        b.push_back(pt.B);
        iob.push_back(pt.io);
        sets.push_back(pt.sets);
    }
    const bool ok_a = strictly_decreasing(a), ok_b = strictly_increasing(b);
    const bool ok_c = strictly_decreasing(iob) && strictly_increasing(sets);
    std::function<std::string(const double&)> f4 = [](const double& x) { return fmt(x); };
    std::function<std::string(const double&)> f1 = [](const double& x) { return fmt(x, 1); };
    std::function<std::string(const double&)> fmb = [](const double& x) { return fmt(x / 1e6, 3) + "MB"; };
    return verdict(ok_a && ok_b && ok_c,
                   std::string("(a) p=8,16,32 B=") + join(a, f4) + (ok_a ? " ok" : " NOT decreasing") +
                       "; (b) l=4,8,16 B=" + join(b, f4) + (ok_b ? " ok" : " NOT increasing") +
                       "; (c) IO=" + join(iob, fmb) + " |S|=" + join(sets, f1) + (ok_c ? " ok" : " trend broken"));
}

Outcome c9_properties(const Ctx&) {
    Rng rng(9);
    int64_t configs = 0, violations = 0, plans = 0, rejected = 0;
    std::string first_error;
    auto note = [&](const std::string& what) {
        ++violations;
        if (first_error.empty()) first_error = what;
    };
    for (int trial = 0; trial < 1000; ++trial) {
        const int32_t p = 2 + static_cast<int32_t>(uniform_index(rng, 31));
        std::vector<int32_t> divisors;
        for (int32_t x = 2; x <= p; ++x)
            if (p % x == 0) divisors.push_back(x);
        const int32_t l = divisors[uniform_index(rng, divisors.size())];
        const int32_t c_l = 2 + static_cast<int32_t>(uniform_index(rng, static_cast<uint64_t>(l - 1)));
        const int32_t c = 2 + static_cast<int32_t>(uniform_index(rng, static_cast<uint64_t>(p - 1)));
        const uint64_t seed = static_cast<uint64_t>(trial);

        const int64_t n = std::max<int64_t>(p, 20 + static_cast<int64_t>(uniform_index(rng, 200)));
        auto edges = testutil::random_edges(rng, n, 1 + static_cast<int64_t>(uniform_index(rng, 8 * static_cast<uint64_t>(n))));
        std::vector<PartitionId> assignment(static_cast<size_t>(n));
        for (int64_t v = 0; v < n; ++v) assignment[static_cast<size_t>(v)] = static_cast<PartitionId>(v % p);
        auto pm = PartitionMap::from_assignment(p, assignment);
        auto buckets = testutil::bucketize(pm, edges);
        auto counts = testutil::counts_of(buckets);

        auto check = [&](const Schedule& s, const std::string& name) {
            try {
                s.validate_structure();
                check_bucket_schedule(s, counts);
                auto rep = edge_permutation_bias(s, buckets, n);
                if (!(rep.B >= 0.0 && rep.B <= 1.0)) note(name + ": B out of range");
                if (s.size() == 1 && rep.B != 0.0) note(name + ": B != 0 with one set");
            } catch (const std::exception& e) {
                note(name + " p=" + std::to_string(p) + ": " + e.what());
            }
        };
        auto cs = comet_schedule(group_logical(p, l, seed), c_l, seed);
        comet_assign(cs, counts, seed);
        check(cs, "comet");
        check(beta_schedule(p, c, counts, seed), "beta");

        TuningInputs ti;
        ti.num_nodes = std::pow(10.0, 3 + 5 * uniform_unit(rng));
        ti.num_edges = ti.num_nodes * (1 + 100 * uniform_unit(rng));
        ti.dim = 10 + static_cast<double>(uniform_index(rng, 200));
        ti.bytes_per_edge = 8 + 4 * static_cast<double>(uniform_index(rng, 2));
        ti.block = 4096;
        ti.fudge = 1e8 * uniform_unit(rng);
        ti.cpu = ti.fudge + std::pow(10.0, 7 + 4 * uniform_unit(rng));
        try {
            auto plan = autotune(ti);
            plan.validate();
            if (!plan.in_memory && plan.c_l < 2) note("autotune: c_l < 2");
            ++plans;
        } catch (const Error& e) {
            ++rejected;
            // rejecting an infeasible budget is allowed; anything else is not
            if (std::string(e.what()).find("insufficient memory") == std::string::npos) note(std::string("autotune: ") + e.what());
        }
        ++configs;
    }
    return verdict(violations == 0, std::to_string(configs) + " configurations, " + std::to_string(violations) +
                                        " violations; autotune " + std::to_string(plans) + " plans, " +
                                        std::to_string(rejected) + " rejected budgets" + (first_error.empty() ? "" : " (first: " + first_error + ")"));
}

Outcome c10_equivalence(const Ctx&) {
    testutil::TempDir tmp;
    SynthOptions so;
    so.nodes = 300;
    so.edges = 2400;
    so.relations = 4;
    so.clusters = 15;
    auto g = synthetic_graph(so);
    BuildOptions bo;
    bo.dim = 8;
    auto ds = preprocess(g, 8, PartitionMode::Random, bo, tmp / "ds");

    auto config = [&](const std::string& name, const std::string& storage) {
        TrainConfig c;
        c.dataset = (tmp / "ds").string();
        c.output = (tmp / name).string();
        c.dim = 8;
        c.negatives = 16;
        c.batch_size = 128;
        c.epochs = 2;
        c.eval_every = 0;
        c.model = "sage";
        c.fanouts = {4};
        c.seed = 11;
        c.storage = storage;
        c.buffer_capacity = 4;
        return c;
    };
    auto ckpt = [&](Trainer& t, const std::string& name) {
        t.run(nullptr);
        return testutil::read_bytes(tmp / name / "model.ckpt");
    };

    // disk mode forced onto the in-memory schedule
    Trainer mem(config("mem", "memory"), ds);
    Trainer disk_as_mem(config("disk_mem", "disk"), ds);
    disk_as_mem.set_schedule([&](int epoch) { return mem.make_schedule(epoch); });
    const auto a = ckpt(mem, "mem");
    const bool same1 = !a.empty() && a == ckpt(disk_as_mem, "disk_mem");

    // in-memory tables forced onto the disk schedule
    Trainer disk(config("disk", "disk"), ds);
    Trainer mem_as_disk(config("mem_disk", "memory"), ds);
    mem_as_disk.set_schedule([&](int epoch) { return disk.make_schedule(epoch); });
    const auto b = ckpt(disk, "disk");
    const bool same2 = !b.empty() && b == ckpt(mem_as_disk, "mem_disk");
    return verdict(same1 && same2, std::string("in-memory schedule: ") + (same1 ? "identical" : "DIFFERENT") +
                                       "; COMET schedule: " + (same2 ? "identical" : "DIFFERENT") + " (" +
                                       std::to_string(a.size()) + " bytes)");
}

Outcome c11_declared(const Ctx&) {
    return {Status::Declared,
            "wall-clock/cost comparisons with DGL/PyG, billion-scale accuracy, the hyperlink-graph run and GPU "
            "sampling times are out of scope at desk scale; covered by criteria 1-10 instead"};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria"};
    int only = 0;
    Ctx ctx;
    std::string data = DELTAGNN_DATA_DIR, fb;
    if (const char* env = std::getenv("FB15K237_DIR")) fb = env;
    app.add_option("--only", only, "Run a single criterion");
    app.add_option("--data", data, "Bundled data directory");
    app.add_option("--fb15k", fb, "FB15k-237 directory (train.txt, valid.txt, test.txt)");
    CLI11_PARSE(app, argc, argv);
    ctx.data_dir = data;
    ctx.fb15k_dir = fb.empty() ? ctx.data_dir / "fb15k-237" : fs::path(fb);

    const std::vector<std::pair<std::string, std::function<Outcome(const Ctx&)>>> criteria = {
        {"worked DENSE example golden sample", c1_worked_example},
        {"sampler equals k-hop oracle", c2_oracle},
        {"sample reuse vs naive resampling", c3_reuse},
        {"gradient checks", c4_gradients},
        {"additive layer equals scan oracle", c5_additive},
        {"FB15k-237 in-memory DistMult MRR", c6_fb_memory},
        {"FB15k-237 COMET vs BETA MRR", c7_fb_disk},
        {"bias, IO and |S| trends", c8_bias},
        {"schedule properties", c9_properties},
        {"disk/memory checkpoint equivalence", c10_equivalence},
        {"not reproducible at desk scale", c11_declared},
    };

    int failed = 0, selected = 0, skipped = 0;
    for (size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (only && only != id) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = criteria[i].second(ctx);
        } catch (const std::exception& e) {
            out = fail(std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const char* tag = out.status == Status::Pass     ? "PASS"
                          : out.status == Status::Fail   ? "FAIL"
                          : out.status == Status::Skip   ? "SKIP"
                                                         : "DECLARED";
        std::cout << "[" << tag << "] " << id << ". " << criteria[i].first << ": " << out.detail << " ("
                  << fmt(secs, 1) << "s)" << std::endl;
        if (out.status == Status::Fail) ++failed;
        ++selected;
        if (out.status == Status::Skip) ++skipped;
    }
    if (failed) return 1;
    return selected > 0 && skipped == selected ? 77 : 0;
}
