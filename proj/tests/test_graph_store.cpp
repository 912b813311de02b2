#include <algorithm>
#include <numeric>

#include "deltagnn/graph_store.h"
#include "deltagnn/subgraph.h"
#include "doctest.h"
#include "test_util.h"

using namespace deltagnn;
using testutil::TempDir;
using testutil::write_text;

TEST_CASE("ingest integer three-column edges") {
    TempDir tmp;
    write_text(tmp / "e.txt", "0 1 2\n2\t0\t3\n\n3 1 0\n");
    IngestReport rep;
    auto g = ingest(tmp / "e.txt", {}, &rep);
    CHECK(g.num_nodes == 4);
    CHECK(g.num_relations == 2);
    REQUIRE(g.edges.size() == 3);
    CHECK(g.edges[1] == Edge{2, 0, 3});
    CHECK(g.train_edges == std::vector<int64_t>{0, 1, 2});
    CHECK_FALSE(rep.string_ids);
    CHECK(rep.num_edges == 3);
}

TEST_CASE("ingest two-column edges uses one relation") {
    TempDir tmp;
    write_text(tmp / "e.tsv", "5\t6\n6\t7\n");
    auto g = ingest(tmp / "e.tsv");
    CHECK(g.num_nodes == 8);
    CHECK(g.num_relations == 1);
    CHECK(g.edges[0].rel == 0);
}

TEST_CASE("string ids get dense first-occurrence ids shared across splits") {
    TempDir tmp;
    write_text(tmp / "train.txt", "/m/a likes /m/b\n/m/b hates /m/c\n");
    write_text(tmp / "valid.txt", "/m/c likes /m/a\n");
    write_text(tmp / "test.txt", "/m/d hates /m/b\n");
    IngestReport rep;
    auto g = ingest_splits(tmp / "train.txt", tmp / "valid.txt", tmp / "test.txt", {}, &rep);
    CHECK(rep.string_ids);
    CHECK(g.node_names == std::vector<std::string>{"/m/a", "/m/b", "/m/c", "/m/d"});
    CHECK(g.relation_names == std::vector<std::string>{"likes", "hates"});
    CHECK(g.edges[2] == Edge{2, 0, 0});
    CHECK(g.edges[3] == Edge{3, 1, 1});
    CHECK(g.valid_edges == std::vector<int64_t>{2});
    CHECK(g.test_edges == std::vector<int64_t>{3});
}

TEST_CASE("malformed lines report file and line number") {
    TempDir tmp;
    write_text(tmp / "bad.txt", "0 0 1\n1 2\n");
    try {
        ingest(tmp / "bad.txt");
        FAIL("expected an error");
    } catch (const Error& e) {
        std::string msg = e.what();
        CHECK(msg.find(":2:") != std::string::npos);
        CHECK(msg.find("malformed") != std::string::npos);
    }
    write_text(tmp / "bad4.txt", "0 0 1 4\n");
    CHECK_THROWS_AS(ingest(tmp / "bad4.txt"), Error);
}

TEST_CASE("32-bit overflow asks for 64-bit ids") {
    TempDir tmp;
    write_text(tmp / "big.txt", "0 0 4294967296\n");
    CHECK_THROWS_WITH_AS(ingest(tmp / "big.txt"), doctest::Contains("64-bit"), Error);
    IngestOptions wide;
    wide.width = IdWidth::U64;
    // ids are not remapped, so the node count follows the largest id
    write_text(tmp / "mid.txt", "0 0 3\n");
    CHECK(ingest(tmp / "mid.txt", wide).num_nodes == 4);
}

TEST_CASE("empty and missing inputs are rejected") {
    TempDir tmp;
    write_text(tmp / "empty.txt", "\n\n");
    CHECK_THROWS_AS(ingest(tmp / "empty.txt"), Error);
    CHECK_THROWS_AS(ingest(tmp / "missing.txt"), Error);
}

TEST_CASE("binary records round trip") {
    TempDir tmp;
    std::vector<Edge> edges = {{0, 1, 2}, {3, 0, 1}, {2, 2, 3}};
    for (auto w : {IdWidth::U32, IdWidth::U64}) {
        write_edge_records(tmp / "e.bin", edges, w);
        CHECK(std::filesystem::file_size(tmp / "e.bin") == edges.size() * 3 * static_cast<size_t>(w));
        CHECK(read_edge_records(tmp / "e.bin", w) == edges);
        IngestOptions o;
        o.width = w;
        auto g = ingest(tmp / "e.bin", o);
        CHECK(g.edges == edges);
        CHECK(g.num_relations == 3);
    }
    write_text(tmp / "odd.bin", "12345");
    CHECK_THROWS_AS(read_edge_records(tmp / "odd.bin", IdWidth::U32), IntegrityError);
}

TEST_CASE("node labels attach with splits") {
    TempDir tmp;
    write_text(tmp / "e.txt", "0 1\n1 2\n2 3\n");
    write_text(tmp / "labels.tsv", "0\t1\ttrain\n2\t0\tvalid\n3\t1\ttest\n");
    auto g = ingest(tmp / "e.txt");
    attach_node_labels(g, tmp / "labels.tsv");
    CHECK(g.num_classes == 2);
    CHECK(g.labels == std::vector<int32_t>{1, -1, 0, 1});
    CHECK(g.train_nodes == std::vector<NodeId>{0});
    CHECK(g.valid_nodes == std::vector<NodeId>{2});
    CHECK(g.test_nodes == std::vector<NodeId>{3});
    write_text(tmp / "bad.tsv", "9\t1\ttrain\n");
    CHECK_THROWS_AS(attach_node_labels(g, tmp / "bad.tsv"), Error);
}

TEST_CASE("random partitions are balanced and cover every node") {
    Rng rng(1);
    auto g = testutil::graph_from_edges(103, testutil::random_edges(rng, 103, 400));
    for (int32_t p : {1, 2, 7, 16}) {
        auto pm = assign_partitions(g, p, PartitionMode::Random, 3);
        auto [lo, hi] = std::minmax_element(pm.partition_sizes.begin(), pm.partition_sizes.end());
        CHECK(*hi - *lo <= 1);
        CHECK(std::accumulate(pm.partition_sizes.begin(), pm.partition_sizes.end(), int64_t{0}) == 103);
        for (NodeId v = 0; v < 103; ++v) {
            auto part = pm.partition_of(v);
            CHECK(pm.members(part)[static_cast<size_t>(pm.position_of(v))] == v);
        }
        for (int32_t part = 0; part < p; ++part) {
            auto m = pm.members(part);
            CHECK(std::is_sorted(m.begin(), m.end()));
        }
    }
    CHECK_THROWS_AS(assign_partitions(g, 200, PartitionMode::Random, 0), Error);
}

TEST_CASE("train-first packs training nodes into leading partitions") {
    Rng rng(2);
    auto g = testutil::graph_from_edges(100, testutil::random_edges(rng, 100, 300));
    for (NodeId v = 0; v < 100; v += 4) g.train_nodes.push_back(v);  // 25 nodes
    auto pm = assign_partitions(g, 8, PartitionMode::TrainFirst, 5);
    // capacity ceil(100/8) = 13, so 25 training nodes fill two partitions
    CHECK(pm.train_partitions == 2);
    for (auto v : g.train_nodes) CHECK(pm.partition_of(v) < 2);
    for (auto s : pm.partition_sizes) CHECK(s <= 13);
    g.train_nodes.clear();
    CHECK_THROWS_AS(assign_partitions(g, 8, PartitionMode::TrainFirst, 5), Error);
}

TEST_CASE("buckets hold exactly their edges and survive reopen") {
    TempDir tmp;
    Rng rng(3);
    auto edges = testutil::random_edges(rng, 60, 500, 4);
    auto g = testutil::graph_from_edges(60, edges, 4);
    auto pm = assign_partitions(g, 4, PartitionMode::Random, 9);
    BuildOptions opt;
    opt.dim = 8;
    opt.seed = 21;
    auto store = build_buckets(g, pm, tmp.path(), opt);
    CHECK(store.p() == 4);
    CHECK(store.num_edges() == 500);

    auto expected = testutil::bucketize(pm, edges);
    for (int32_t i = 0; i < 4; ++i)
        for (int32_t j = 0; j < 4; ++j) {
            auto got = store.read_bucket(i, j);
            auto want = expected[static_cast<size_t>(i * 4 + j)];
            CHECK(got == want);  // stable within a bucket
            CHECK(store.bucket_count(i, j) == static_cast<int64_t>(want.size()));
            CHECK(store.bucket_bytes(i, j) == static_cast<int64_t>(want.size() * 12));
        }

    auto again = EdgeBucketStore::open(tmp.path());
    CHECK(again.bucket_counts() == store.bucket_counts());
    CHECK(read_partition_map(tmp / "partition_map.bin").node_to_partition == pm.node_to_partition);
}

TEST_CASE("bucket build is idempotent") {
    TempDir a, b;
    Rng rng(4);
    auto g = testutil::graph_from_edges(50, testutil::random_edges(rng, 50, 200, 2), 2);
    auto pm = assign_partitions(g, 3, PartitionMode::Random, 1);
    BuildOptions opt;
    opt.dim = 4;
    build_buckets(g, pm, a.path(), opt);
    build_buckets(g, pm, b.path(), opt);
    for (const char* f : {"buckets.bin", "buckets.idx", "partition_map.bin", "embeddings.bin"})
        CHECK(testutil::read_bytes(a / f) == testutil::read_bytes(b / f));
}

TEST_CASE("corrupt bucket files raise IntegrityError") {
    TempDir tmp;
    Rng rng(5);
    auto g = testutil::graph_from_edges(30, testutil::random_edges(rng, 30, 100));
    auto pm = assign_partitions(g, 2, PartitionMode::Random, 1);
    build_buckets(g, pm, tmp.path(), {});

    auto bin = testutil::read_bytes(tmp / "buckets.bin");
    write_text(tmp / "buckets.bin", bin.substr(0, bin.size() - 12));
    CHECK_THROWS_AS(EdgeBucketStore::open(tmp.path()), IntegrityError);
    write_text(tmp / "buckets.bin", bin);

    auto idx = testutil::read_bytes(tmp / "buckets.idx");
    auto bad = idx;
    bad[0] = 'X';
    write_text(tmp / "buckets.idx", bad);
    CHECK_THROWS_AS(EdgeBucketStore::open(tmp.path()), IntegrityError);
    write_text(tmp / "buckets.idx", idx.substr(0, idx.size() - 4));
    CHECK_THROWS_AS(EdgeBucketStore::open(tmp.path()), IntegrityError);
    write_text(tmp / "buckets.idx", idx);
    CHECK_NOTHROW(EdgeBucketStore::open(tmp.path()));
}

TEST_CASE("node tables read and write partition regions") {
    TempDir tmp;
    Rng rng(6);
    auto g = testutil::graph_from_edges(20, testutil::random_edges(rng, 20, 40));
    auto pm = std::make_shared<const PartitionMap>(assign_partitions(g, 3, PartitionMode::Random, 2));
    BuildOptions opt;
    opt.dim = 5;
    opt.seed = 8;
    build_buckets(g, *pm, tmp.path(), opt);

    NodeTableFile table(tmp / "embeddings.bin", pm, 5);
    auto by_node = table.read_all_by_node();
    std::vector<float> row(5);
    for (NodeId v = 0; v < 20; ++v) {
        init_embedding_row(8, v, row);
        CHECK(std::equal(row.begin(), row.end(), by_node.begin() + v * 5));
    }

    std::vector<float> block(static_cast<size_t>(pm->partition_sizes[1] * 5));
    std::iota(block.begin(), block.end(), 1.0f);
    table.write_partition(1, block);
    CHECK(table.read_partition(1) == block);
    CHECK(table.partition_bytes(1) == static_cast<int64_t>(block.size() * 4));
    CHECK_THROWS_AS(table.write_partition(1, std::vector<float>(3)), Error);
    CHECK_THROWS_AS(NodeTableFile(tmp / "embeddings.bin", pm, 6), IntegrityError);
}

TEST_CASE("initial embedding rows are bounded and independent of partitioning") {
    std::vector<float> a(64), b(64);
    init_embedding_row(3, 17, a);
    init_embedding_row(3, 17, b);
    CHECK(a == b);
    for (float x : a) CHECK(std::abs(x) <= 0.5f / 64.0f);
    init_embedding_row(4, 17, b);
    CHECK(a != b);
}

TEST_CASE("incremental swaps equal full rebuilds") {
    Rng rng(7);
    const int64_t n = 80;
    auto edges = testutil::random_edges(rng, n, 600, 3);
    auto g = testutil::graph_from_edges(n, edges, 3);
    auto pm = std::make_shared<const PartitionMap>(assign_partitions(g, 6, PartitionMode::Random, 4));
    auto buckets = testutil::bucketize(*pm, edges);

    auto edges_among = [&](const std::vector<PartitionId>& parts) {
        std::vector<Edge> out;
        for (auto i : parts)
            for (auto j : parts) {
                const auto& b = buckets[static_cast<size_t>(i * 6 + j)];
                out.insert(out.end(), b.begin(), b.end());
            }
        return out;
    };

    std::vector<PartitionId> resident = {0, 1, 2};
    InMemorySubgraph sub(pm, resident, edges_among(resident));
    for (int step = 0; step < 30; ++step) {
        auto out_idx = uniform_index(rng, resident.size());
        std::vector<PartitionId> absent;
        for (PartitionId q = 0; q < 6; ++q)
            if (std::find(resident.begin(), resident.end(), q) == resident.end()) absent.push_back(q);
        PartitionId in = absent[uniform_index(rng, absent.size())];
        PartitionId out = resident[out_idx];
        resident[out_idx] = in;

        std::vector<Edge> incoming;
        for (auto r : resident) {
            const auto& b1 = buckets[static_cast<size_t>(in * 6 + r)];
            incoming.insert(incoming.end(), b1.begin(), b1.end());
            if (r != in) {
                const auto& b2 = buckets[static_cast<size_t>(r * 6 + in)];
                incoming.insert(incoming.end(), b2.begin(), b2.end());
            }
        }
        std::vector<PartitionId> ev = {out}, ld = {in};
        sub.swap_partitions(ev, ld, incoming);

        auto sorted = resident;
        std::sort(sorted.begin(), sorted.end());
        InMemorySubgraph ref(pm, sorted, edges_among(sorted));
        REQUIRE(sub.resident_partitions() == ref.resident_partitions());
        CHECK(sub.edges_by_src() == ref.edges_by_src());
        CHECK(sub.edges_by_dst() == ref.edges_by_dst());
        CHECK(sub.resident_nodes() == ref.resident_nodes());
        for (auto v : ref.resident_nodes()) {
            CHECK(sub.local_id(v) == ref.local_id(v));
            auto a = sub.in_edges(v), b = ref.in_edges(v);
            CHECK(std::equal(a.begin(), a.end(), b.begin(), b.end()));
        }
        for (NodeId v = 0; v < n; ++v)
            if (!sub.is_resident(v)) CHECK_THROWS_AS(sub.local_id(v), ResidencyError);
    }
}

TEST_CASE("preprocess writes an openable dataset") {
    TempDir tmp;
    Rng rng(8);
    auto g = testutil::graph_from_edges(40, testutil::random_edges(rng, 40, 150, 2), 2);
    g.valid_edges = {0, 1};
    g.test_edges = {2, 3, 4};
    g.train_edges.erase(g.train_edges.begin(), g.train_edges.begin() + 5);
    BuildOptions opt;
    opt.dim = 6;
    auto ds = preprocess(g, 4, PartitionMode::Random, opt, tmp.path());
    auto re = Dataset::open(tmp.path());
    CHECK(re.meta.num_nodes == 40);
    CHECK(re.meta.num_train_edges == 145);
    CHECK(re.meta.p == 4);
    CHECK(re.valid_edges.size() == 2);
    CHECK(re.test_edges == std::vector<Edge>{g.edges[2], g.edges[3], g.edges[4]});
    CHECK_FALSE(re.node_classification());
    CHECK_THROWS_AS(Dataset::open(tmp / "nothing"), Error);
}
