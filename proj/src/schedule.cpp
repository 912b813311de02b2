#include "deltagnn/schedule.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "json.hpp"

namespace deltagnn {

LogicalGrouping LogicalGrouping::identity(int32_t p) {
    LogicalGrouping g;
    g.p = p;
    g.l = p;
    g.groups.resize(static_cast<size_t>(p));
    g.logical_of.resize(static_cast<size_t>(p));
    for (int32_t i = 0; i < p; ++i) {
        g.groups[static_cast<size_t>(i)] = {i};
        g.logical_of[static_cast<size_t>(i)] = i;
    }
    return g;
}

std::vector<PartitionId> LogicalGrouping::expand(std::span<const int32_t> logical) const {
    std::vector<PartitionId> out;
    for (auto lg : logical) {
        const auto& m = groups.at(static_cast<size_t>(lg));
        out.insert(out.end(), m.begin(), m.end());
    }
    std::sort(out.begin(), out.end());
    return out;
}

LogicalGrouping group_logical(int32_t p, int32_t l, uint64_t seed) {
    if (p < 1 || l < 1 || l > p || p % l != 0) {
        std::string divisors;
        for (int32_t x = 1; x <= p; ++x)
            if (p % x == 0) divisors += (divisors.empty() ? "" : ", ") + std::to_string(x);
        throw Error("logical partition count l=" + std::to_string(l) + " must divide p=" + std::to_string(p) +
                    " (valid l: " + divisors + ")");
    }
    std::vector<PartitionId> perm(static_cast<size_t>(p));
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    shuffle(perm, rng);
    LogicalGrouping g;
    g.p = p;
    g.l = l;
    g.seed = seed;
    g.groups.resize(static_cast<size_t>(l));
    g.logical_of.resize(static_cast<size_t>(p));
    const int32_t size = p / l;
    for (int32_t t = 0; t < p; ++t) {
        const int32_t lg = t / size;
        g.groups[static_cast<size_t>(lg)].push_back(perm[static_cast<size_t>(t)]);
        g.logical_of[static_cast<size_t>(perm[static_cast<size_t>(t)])] = lg;
    }
    for (auto& m : g.groups) std::sort(m.begin(), m.end());
    return g;
}

void Schedule::validate_structure() const {
    if (S.empty()) throw Error("schedule has no partition sets");
    if (swaps.size() + 1 != S.size()) throw Error("schedule swap count does not match set count");
    if (X.size() != S.size()) throw Error("schedule X and S lengths differ");
    const size_t cl = S[0].size();
    for (size_t i = 0; i < S.size(); ++i) {
        auto s = S[i];
        if (s.size() != cl) throw Error("partition set " + std::to_string(i) + " has a different size");
        std::sort(s.begin(), s.end());
        if (std::adjacent_find(s.begin(), s.end()) != s.end())
            throw Error("partition set " + std::to_string(i) + " repeats a partition");
        for (auto x : s)
            if (x < 0 || x >= grouping.l) throw Error("partition set holds an unknown logical id");
        if (i == 0) continue;
        const Swap& sw = swaps[i - 1];
        auto prev = S[i - 1];
        std::sort(prev.begin(), prev.end());
        std::vector<int32_t> removed, added;
        std::set_difference(prev.begin(), prev.end(), s.begin(), s.end(), std::back_inserter(removed));
        std::set_difference(s.begin(), s.end(), prev.begin(), prev.end(), std::back_inserter(added));
        if (removed.size() != 1 || added.size() != 1)
            throw Error("sets " + std::to_string(i - 1) + " and " + std::to_string(i) +
                        " differ by more than one partition");
        if (removed[0] != sw.evicted || added[0] != sw.loaded)
            throw Error("swap record " + std::to_string(i - 1) + " does not match its sets");
    }
}

namespace {

template <typename T>
T pick(const std::vector<T>& xs, Rng& rng) {
    return xs[uniform_index(rng, xs.size())];
}

std::vector<int32_t> random_subset(int32_t n, int32_t k, Rng& rng) {
    std::vector<int32_t> all(static_cast<size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    shuffle(all, rng);
    all.resize(static_cast<size_t>(k));
    std::sort(all.begin(), all.end());
    return all;
}

void apply_swap(std::vector<int32_t>& cur, int32_t evicted, int32_t loaded) {
    *std::find(cur.begin(), cur.end(), evicted) = loaded;
    std::sort(cur.begin(), cur.end());
}

}  // namespace

Schedule comet_schedule(const LogicalGrouping& g, int32_t c_l, uint64_t seed) {
    if (c_l < 1) throw Error("buffer capacity must hold at least one logical partition");
    Schedule s;
    s.grouping = g;
    const int32_t l = g.l;
    if (c_l >= l) {
        std::vector<int32_t> all(static_cast<size_t>(l));
        std::iota(all.begin(), all.end(), 0);
        s.S.push_back(all);
        s.X.resize(1);
        return s;
    }
    if (c_l < 2) throw Error("disk mode needs room for at least two logical partitions");

    Rng rng(seed);
    std::vector<char> covered(static_cast<size_t>(l * l), 0);
    int64_t uncovered = static_cast<int64_t>(l) * (l - 1) / 2;
    auto cover = [&](const std::vector<int32_t>& set) {
        for (size_t a = 0; a < set.size(); ++a)
            for (size_t b = a + 1; b < set.size(); ++b) {
                auto& c = covered[static_cast<size_t>(set[a] * l + set[b])];
                if (!c) {
                    c = 1;
                    covered[static_cast<size_t>(set[b] * l + set[a])] = 1;
                    --uncovered;
                }
            }
    };
    auto is_covered = [&](int32_t a, int32_t b) { return covered[static_cast<size_t>(a * l + b)] != 0; };

    std::vector<int32_t> cur = random_subset(l, c_l, rng);
    cover(cur);
    s.S.push_back(cur);

    std::vector<char> resident(static_cast<size_t>(l), 0);
    std::vector<Swap> best;
    while (uncovered > 0) {
        std::fill(resident.begin(), resident.end(), 0);
        for (auto x : cur) resident[static_cast<size_t>(x)] = 1;
        // most new pairs first, then evict the partition with the fewest
        // open pairs left
        std::vector<int64_t> open_pairs(static_cast<size_t>(l), 0);
        for (int32_t a = 0; a < l; ++a)
            for (int32_t b = 0; b < l; ++b)
                if (a != b && !is_covered(a, b)) ++open_pairs[static_cast<size_t>(a)];
        int64_t best_gain = -1, best_left = 0;
        best.clear();
        for (auto e : cur)
            for (int32_t a = 0; a < l; ++a) {
                if (resident[static_cast<size_t>(a)]) continue;
                int64_t gain = 0;
                for (auto x : cur)
                    if (x != e && !is_covered(a, x)) ++gain;
                const int64_t left = open_pairs[static_cast<size_t>(e)];
                if (gain > best_gain || (gain == best_gain && left < best_left)) {
                    best_gain = gain;
                    best_left = left;
                    best.clear();
                }
                if (gain == best_gain && left == best_left) best.push_back({e, a});
            }
        Swap sw;
        if (best_gain > 0) {
            sw = pick(best, rng);
        } else {
            // every uncovered pair lies entirely outside the buffer: bring in
            // one endpoint of a random uncovered pair
            std::vector<std::pair<int32_t, int32_t>> open;
            for (int32_t a = 0; a < l; ++a)
                for (int32_t b = a + 1; b < l; ++b)
                    if (!is_covered(a, b)) open.emplace_back(a, b);
            auto [a, b] = pick(open, rng);
            sw.loaded = uniform_index(rng, 2) == 0 ? a : b;
            sw.evicted = pick(cur, rng);
        }
        apply_swap(cur, sw.evicted, sw.loaded);
        cover(cur);
        s.S.push_back(cur);
        s.swaps.push_back(sw);
    }
    s.X.resize(s.S.size());
    return s;
}

void comet_assign(Schedule& s, std::span<const int64_t> bucket_counts, uint64_t seed) {
    const int32_t p = s.grouping.p;
    if (bucket_counts.size() != static_cast<size_t>(p) * static_cast<size_t>(p))
        throw Error("bucket count table does not match p");
    const int32_t l = s.grouping.l;
    // sets containing each logical pair
    std::vector<std::vector<int32_t>> holders(static_cast<size_t>(l * l));
    for (size_t t = 0; t < s.S.size(); ++t)
        for (auto a : s.S[t])
            for (auto b : s.S[t]) holders[static_cast<size_t>(a * l + b)].push_back(static_cast<int32_t>(t));

    s.X.assign(s.S.size(), {});
    for (int32_t i = 0; i < p; ++i)
        for (int32_t j = 0; j < p; ++j) {
            const int64_t id = static_cast<int64_t>(i) * p + j;
            if (bucket_counts[static_cast<size_t>(id)] == 0) continue;
            const auto& h = holders[static_cast<size_t>(s.grouping.logical_of[static_cast<size_t>(i)] * l +
                                                        s.grouping.logical_of[static_cast<size_t>(j)])];
            if (h.empty())
                throw Error("schedule bug: bucket (" + std::to_string(i) + "," + std::to_string(j) +
                            ") is never resident");
            Rng rng(derive_seed(seed, static_cast<uint64_t>(id)));
            s.X[static_cast<size_t>(pick(h, rng))].push_back(id);
        }
}

Schedule beta_schedule(int32_t p, int32_t c, std::span<const int64_t> bucket_counts, uint64_t seed) {
    if (bucket_counts.size() != static_cast<size_t>(p) * static_cast<size_t>(p))
        throw Error("bucket count table does not match p");
    if (c < 1) throw Error("buffer capacity must be positive");
    if (c < p && c < 2) throw Error("disk mode needs room for at least two partitions");
    Schedule s;
    s.grouping = LogicalGrouping::identity(p);
    Rng rng(seed);

    std::vector<char> assigned(bucket_counts.size(), 0);
    int64_t left = 0;
    for (size_t b = 0; b < bucket_counts.size(); ++b) {
        if (bucket_counts[b] == 0) assigned[b] = 1;
        else ++left;
    }
    auto take = [&](std::vector<int64_t>& x, int32_t i, int32_t j) {
        const auto id = static_cast<size_t>(i) * static_cast<size_t>(p) + static_cast<size_t>(j);
        if (assigned[id]) return;
        assigned[id] = 1;
        x.push_back(static_cast<int64_t>(id));
        --left;
    };

    std::vector<int32_t> cur = c >= p ? random_subset(p, p, rng) : random_subset(p, c, rng);
    std::vector<int64_t> x0;
    for (auto i : cur)
        for (auto j : cur) take(x0, i, j);
    std::sort(x0.begin(), x0.end());
    s.S.push_back(cur);
    s.X.push_back(std::move(x0));
    if (c >= p) return s;

    auto remaining = [&](int32_t q) {
        int64_t n = 0;
        for (int32_t x = 0; x < p; ++x) {
            n += !assigned[static_cast<size_t>(q) * p + x];
            if (x != q) n += !assigned[static_cast<size_t>(x) * p + q];
        }
        return n;
    };
    std::vector<char> resident(static_cast<size_t>(p), 0);
    const int64_t cap = static_cast<int64_t>(p) * p + p;
    for (int64_t step = 0; left > 0; ++step) {
        if (step > cap) throw Error("BETA schedule failed to converge");
        std::fill(resident.begin(), resident.end(), 0);
        for (auto x : cur) resident[static_cast<size_t>(x)] = 1;

        int64_t fewest = std::numeric_limits<int64_t>::max();
        std::vector<int32_t> evict;
        for (auto q : cur) {
            const int64_t r = remaining(q);
            if (r < fewest) {
                fewest = r;
                evict.clear();
            }
            if (r == fewest) evict.push_back(q);
        }
        const int32_t e = pick(evict, rng);
        resident[static_cast<size_t>(e)] = 0;

        int64_t best_gain = -1;
        std::vector<int32_t> load;
        for (int32_t q = 0; q < p; ++q) {
            if (resident[static_cast<size_t>(q)] || q == e) continue;
            int64_t gain = !assigned[static_cast<size_t>(q) * p + q];
            for (int32_t x = 0; x < p; ++x)
                if (resident[static_cast<size_t>(x)])
                    gain += !assigned[static_cast<size_t>(q) * p + x] + !assigned[static_cast<size_t>(x) * p + q];
            if (gain > best_gain) {
                best_gain = gain;
                load.clear();
            }
            if (gain == best_gain) load.push_back(q);
        }
        if (best_gain == 0) {
            // nothing reachable from the remaining residents: load the
            // partition with the most outstanding buckets
            int64_t most = -1;
            load.clear();
            for (int32_t q = 0; q < p; ++q) {
                if (resident[static_cast<size_t>(q)] || q == e) continue;
                const int64_t r = remaining(q);
                if (r > most) {
                    most = r;
                    load.clear();
                }
                if (r == most) load.push_back(q);
            }
        }
        const int32_t in = pick(load, rng);
        apply_swap(cur, e, in);
        std::vector<int64_t> x;
        for (auto q : cur) {
            take(x, in, q);
            take(x, q, in);
        }
        std::sort(x.begin(), x.end());
        s.S.push_back(cur);
        s.X.push_back(std::move(x));
        s.swaps.push_back({e, in});
    }
    return s;
}

Schedule nc_schedule(const PartitionMap& pm, int32_t c, std::span<const NodeId> train_nodes, uint64_t seed) {
    const int32_t p = pm.p;
    if (c < 1) throw Error("buffer capacity must be positive");
    Schedule s;
    s.kind = ExampleKind::Nodes;
    s.grouping = LogicalGrouping::identity(p);
    Rng rng(seed);

    std::vector<char> has_train(static_cast<size_t>(p), 0);
    for (auto v : train_nodes) has_train[static_cast<size_t>(pm.partition_of(v))] = 1;
    const auto k_train = static_cast<int32_t>(std::count(has_train.begin(), has_train.end(), 1));

    std::vector<int32_t> cur;
    if (c >= p) {
        cur.resize(static_cast<size_t>(p));
        std::iota(cur.begin(), cur.end(), 0);
    } else if (k_train < c) {
        std::vector<int32_t> others;
        for (int32_t q = 0; q < p; ++q) {
            if (has_train[static_cast<size_t>(q)]) cur.push_back(q);
            else others.push_back(q);
        }
        shuffle(others, rng);
        cur.insert(cur.end(), others.begin(), others.begin() + (c - k_train));
        std::sort(cur.begin(), cur.end());
    } else {
        cur = random_subset(p, c, rng);
    }
    s.S.push_back(cur);

    if (c < p && k_train >= c) {
        std::vector<char> seen(static_cast<size_t>(p), 0);
        for (auto q : cur) seen[static_cast<size_t>(q)] = 1;
        std::vector<int32_t> unseen;
        for (int32_t q = 0; q < p; ++q)
            if (!seen[static_cast<size_t>(q)]) unseen.push_back(q);
        shuffle(unseen, rng);
        for (auto in : unseen) {
            const int32_t e = pick(cur, rng);
            apply_swap(cur, e, in);
            s.S.push_back(cur);
            s.swaps.push_back({e, in});
        }
    }

    // each training node goes to the first set holding its partition
    std::vector<int32_t> first(static_cast<size_t>(p), -1);
    for (size_t t = 0; t < s.S.size(); ++t)
        for (auto q : s.S[t])
            if (first[static_cast<size_t>(q)] < 0) first[static_cast<size_t>(q)] = static_cast<int32_t>(t);
    s.X.assign(s.S.size(), {});
    for (auto v : train_nodes) {
        const int32_t t = first[static_cast<size_t>(pm.partition_of(v))];
        if (t < 0) throw Error("schedule bug: training node " + std::to_string(v) + " is never resident");
        s.X[static_cast<size_t>(t)].push_back(v);
    }
    return s;
}

void check_bucket_schedule(const Schedule& s, std::span<const int64_t> bucket_counts) {
    s.validate_structure();
    const int32_t p = s.grouping.p;
    std::vector<int32_t> seen(bucket_counts.size(), 0);
    std::vector<char> resident(static_cast<size_t>(p));
    for (size_t t = 0; t < s.X.size(); ++t) {
        std::fill(resident.begin(), resident.end(), 0);
        for (auto q : s.physical_set(t)) resident[static_cast<size_t>(q)] = 1;
        for (auto id : s.X[t]) {
            if (id < 0 || static_cast<size_t>(id) >= bucket_counts.size()) throw Error("bucket id out of range");
            if (!resident[static_cast<size_t>(id / p)] || !resident[static_cast<size_t>(id % p)])
                throw Error("bucket " + std::to_string(id) + " assigned to X_" + std::to_string(t) +
                            " while not resident");
            ++seen[static_cast<size_t>(id)];
        }
    }
    for (size_t b = 0; b < bucket_counts.size(); ++b) {
        const int32_t want = bucket_counts[b] > 0 ? 1 : 0;
        if (seen[b] > want || (want == 1 && seen[b] != 1))
            throw Error("bucket " + std::to_string(b) + " assigned " + std::to_string(seen[b]) + " times");
    }
}

std::string BiasReport::to_json() const {
    nlohmann::json j;
    j["B"] = B;
    j["d"] = d;
    j["tracked_nodes"] = tracked_nodes;
    return j.dump();
}

BiasReport edge_permutation_bias(const Schedule& s, const std::vector<std::vector<Edge>>& buckets,
                                 int64_t num_nodes) {
    BiasReport rep;
    std::vector<int64_t> deg(static_cast<size_t>(num_nodes), 0);
    std::vector<int64_t> cum(static_cast<size_t>(num_nodes), 0);

    if (s.kind == ExampleKind::Nodes) {
        // each training node is one example
        for (const auto& x : s.X)
            for (auto v : x) deg[static_cast<size_t>(v)] = 1;
        for (const auto& x : s.X) {
            for (auto v : x) cum[static_cast<size_t>(v)] = 1;
            double lo = 1.0, hi = 0.0;
            for (size_t v = 0; v < deg.size(); ++v)
                if (deg[v]) {
                    lo = std::min(lo, static_cast<double>(cum[v]));
                    hi = std::max(hi, static_cast<double>(cum[v]));
                }
            rep.d.push_back(std::max(0.0, hi - lo));
        }
    } else {
        auto tally = [](std::vector<int64_t>& t, const Edge& e) {
            ++t[static_cast<size_t>(e.src)];
            if (e.dst != e.src) ++t[static_cast<size_t>(e.dst)];
        };
        for (const auto& x : s.X)
            for (auto id : x)
                for (const Edge& e : buckets.at(static_cast<size_t>(id))) tally(deg, e);
        for (const auto& x : s.X) {
            for (auto id : x)
                for (const Edge& e : buckets[static_cast<size_t>(id)]) tally(cum, e);
            double lo = 1.0, hi = 0.0;
            for (size_t v = 0; v < deg.size(); ++v)
                if (deg[v]) {
                    const double t = static_cast<double>(cum[v]) / static_cast<double>(deg[v]);
                    lo = std::min(lo, t);
                    hi = std::max(hi, t);
                }
            rep.d.push_back(std::max(0.0, hi - lo));
        }
    }
    rep.tracked_nodes = static_cast<int64_t>(std::count_if(deg.begin(), deg.end(), [](int64_t x) { return x > 0; }));
    for (double x : rep.d) rep.B = std::max(rep.B, x);
    return rep;
}

BiasReport edge_permutation_bias(const Schedule& s, const EdgeBucketStore& store) {
    const int32_t p = store.p();
    std::vector<std::vector<Edge>> buckets(static_cast<size_t>(p) * static_cast<size_t>(p));
    for (int32_t i = 0; i < p; ++i)
        for (int32_t j = 0; j < p; ++j) buckets[static_cast<size_t>(i * p + j)] = store.read_bucket(i, j);
    return edge_permutation_bias(s, buckets, store.num_nodes());
}

void TuningPlan::validate() const {
    if (p < 1 || l < 1 || c < 1 || c_l < 1) throw Error("plan has a non-positive count");
    if (p % l != 0) throw Error("plan: l does not divide p");
    if (static_cast<int64_t>(p) * c_l != static_cast<int64_t>(l) * c) throw Error("plan: p/c != l/c_l");
    if (c > p) throw Error("plan: c exceeds p");
    if (!in_memory && c_l < 2) throw Error("plan: disk mode needs c_l >= 2");
    if (cpu > 0 && !(c * PO + 2.0 * c * c * EBO + F < cpu)) throw Error("plan violates the memory inequality");
}

std::string TuningPlan::to_json() const {
    nlohmann::json j;
    j["p"] = p;
    j["l"] = l;
    j["c"] = c;
    j["c_l"] = c_l;
    j["mode"] = in_memory ? "memory" : "disk";
    j["NO"] = NO;
    j["EO"] = EO;
    j["PO"] = PO;
    j["EBO"] = EBO;
    j["alpha4"] = alpha4;
    j["F"] = F;
    j["CPU"] = cpu;
    j["D"] = block;
    return j.dump();
}

namespace {

// Largest c with c*PO + 2*c^2*EBO + F < CPU, or 0.
int64_t max_capacity(double PO, double EBO, double F, double cpu, int64_t cap) {
    const double budget = cpu - F;
    if (budget <= 0) return 0;
    double root;
    if (EBO > 0) root = (-PO + std::sqrt(PO * PO + 8.0 * EBO * budget)) / (4.0 * EBO);
    else root = budget / PO;
    auto fits = [&](int64_t c) {
        const double x = static_cast<double>(c);
        return x * PO + 2.0 * x * x * EBO + F < cpu;
    };
    int64_t c = static_cast<int64_t>(std::min(std::ceil(root), static_cast<double>(cap) + 1.0));
    while (c > 0 && !fits(c)) --c;
    while (c < cap && fits(c + 1)) ++c;
    return std::min(c, cap);
}

void choose_logical(TuningPlan& plan, int32_t c) {
    const int32_t p = plan.p;
    if (c >= p) {
        plan.in_memory = true;
        plan.c = plan.l = plan.c_l = p;
        return;
    }
    plan.in_memory = false;
    const int32_t want = (2 * p + c - 1) / c;  // ceil(2p / c)
    int32_t l = p;
    for (int32_t x = want; x <= p; ++x)
        if (p % x == 0) {
            l = x;
            break;
        }
    plan.l = l;
    plan.c_l = static_cast<int32_t>(static_cast<int64_t>(l) * c / p);
    plan.c = plan.c_l * (p / l);
}

}  // namespace

TuningPlan autotune(const TuningInputs& in) {
    if (in.num_nodes <= 0 || in.num_edges <= 0 || in.dim <= 0 || in.bytes_per_edge <= 0 || in.block <= 0 ||
        in.cpu <= 0 || in.fudge < 0)
        throw Error("autotune inputs must be positive");
    if (in.cpu <= in.fudge) throw Error("CPU memory must exceed the reserved fudge bytes");
    TuningPlan plan;
    plan.cpu = in.cpu;
    plan.block = in.block;
    plan.F = in.fudge;
    plan.NO = in.num_nodes * in.dim * 4.0;
    plan.EO = in.num_edges * in.bytes_per_edge;
    plan.alpha4 = std::min(plan.NO / in.block, std::sqrt(plan.EO / in.block));
    const double pmax = static_cast<double>(std::numeric_limits<int32_t>::max() / 4);
    plan.p = static_cast<int32_t>(std::clamp(std::floor(plan.alpha4), 2.0, pmax));

    auto sized = [&](int32_t p) {
        const double PO = plan.NO / p;
        const double EBO = plan.EO / (static_cast<double>(p) * p);
        return max_capacity(PO, EBO, plan.F, plan.cpu, p);
    };
    plan.PO = plan.NO / plan.p;
    plan.EBO = plan.EO / (static_cast<double>(plan.p) * plan.p);
    const int64_t c = sized(plan.p);
    if (c < 2) {
        int64_t suggest = plan.p;
        while (suggest < pmax && sized(static_cast<int32_t>(suggest)) < 2) suggest *= 2;
        throw Error("insufficient memory for disk mode at computed p=" + std::to_string(plan.p) +
                    "; try a larger p (e.g. " + std::to_string(suggest) + ") or more CPU memory");
    }
    choose_logical(plan, static_cast<int32_t>(c));
    plan.validate();
    return plan;
}

TuningPlan plan_for_partitions(int32_t p, int32_t c) {
    if (p < 1 || c < 1) throw Error("p and c must be positive");
    TuningPlan plan;
    plan.p = p;
    if (c < p && c < 2) throw Error("disk mode needs c >= 2");
    choose_logical(plan, std::min(c, p));
    plan.validate();
    return plan;
}

std::string IoReport::to_json() const {
    nlohmann::json j;
    j["total_bytes"] = total_bytes;
    j["initial_bytes"] = initial_bytes;
    j["swaps"] = swaps;
    j["sets"] = sets;
    j["min_read"] = min_read;
    return j.dump();
}

IoReport io_report(const Schedule& s, std::span<const int64_t> partition_bytes,
                   std::span<const int64_t> bucket_bytes) {
    const int32_t p = s.grouping.p;
    if (partition_bytes.size() != static_cast<size_t>(p) ||
        bucket_bytes.size() != static_cast<size_t>(p) * static_cast<size_t>(p))
        throw Error("io_report size tables do not match p");
    IoReport rep;
    rep.sets = static_cast<int64_t>(s.S.size());
    rep.swaps = static_cast<int64_t>(s.swaps.size());
    int64_t min_read = std::numeric_limits<int64_t>::max();
    for (auto b : partition_bytes)
        if (b > 0) min_read = std::min(min_read, b);
    for (auto b : bucket_bytes)
        if (b > 0) min_read = std::min(min_read, b);
    rep.min_read = min_read == std::numeric_limits<int64_t>::max() ? 0 : min_read;
    if (s.S.empty()) return rep;

    auto cur = s.physical_set(0);
    for (auto q : cur) rep.initial_bytes += partition_bytes[static_cast<size_t>(q)];
    for (auto i : cur)
        for (auto j : cur) rep.initial_bytes += bucket_bytes[static_cast<size_t>(i) * p + j];
    rep.total_bytes = rep.initial_bytes;

    std::vector<char> loaded(static_cast<size_t>(p));
    for (size_t t = 1; t < s.S.size(); ++t) {
        std::fill(loaded.begin(), loaded.end(), 0);
        for (auto q : s.grouping.groups[static_cast<size_t>(s.swaps[t - 1].loaded)]) {
            loaded[static_cast<size_t>(q)] = 1;
            rep.total_bytes += partition_bytes[static_cast<size_t>(q)];
        }
        cur = s.physical_set(t);
        for (auto i : cur)
            for (auto j : cur)
                if (loaded[static_cast<size_t>(i)] || loaded[static_cast<size_t>(j)])
                    rep.total_bytes += bucket_bytes[static_cast<size_t>(i) * p + j];
    }
    return rep;
}

}  // namespace deltagnn
