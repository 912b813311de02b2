#include "deltagnn/graph_store.h"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

static_assert(std::endian::native == std::endian::little,
              "on-disk formats assume a little-endian host");

namespace deltagnn {

namespace fs = std::filesystem;
using json = nlohmann::json;

InputFormat parse_input_format(const std::string& name) {
    if (name == "auto") return InputFormat::Auto;
    if (name == "tsv-2col" || name == "tsv2") return InputFormat::Tsv2;
    if (name == "tsv-3col" || name == "tsv3") return InputFormat::Tsv3;
    if (name == "binary" || name == "bin") return InputFormat::Binary;
    throw Error("unknown input format '" + name + "' (expected auto, tsv-2col, tsv-3col, binary)");
}

IdWidth parse_id_width(int bits) {
    if (bits == 32) return IdWidth::U32;
    if (bits == 64) return IdWidth::U64;
    throw Error("id width must be 32 or 64, got " + std::to_string(bits));
}

PartitionMode parse_partition_mode(const std::string& name) {
    if (name == "random") return PartitionMode::Random;
    if (name == "train-first" || name == "train_first") return PartitionMode::TrainFirst;
    throw Error("unknown partition mode '" + name + "' (expected random or train-first)");
}

void RawGraph::validate() const {
    for (size_t i = 0; i < edges.size(); ++i) {
        const Edge& e = edges[i];
        if (e.src < 0 || e.src >= num_nodes || e.dst < 0 || e.dst >= num_nodes)
            throw Error("edge " + std::to_string(i) + " has a node id outside [0, num_nodes)");
        if (e.rel < 0 || e.rel >= num_relations)
            throw Error("edge " + std::to_string(i) + " has a relation id outside [0, num_relations)");
    }
    auto check_disjoint = [](const std::vector<int64_t>& a, const std::vector<int64_t>& b,
                             const char* what) {
        std::unordered_set<int64_t> seen(a.begin(), a.end());
        for (auto x : b)
            if (seen.count(x)) throw Error(std::string("splits overlap: ") + what);
    };
    check_disjoint(train_edges, valid_edges, "train/valid edges");
    check_disjoint(train_edges, test_edges, "train/test edges");
    check_disjoint(valid_edges, test_edges, "valid/test edges");
    check_disjoint(train_nodes, valid_nodes, "train/valid nodes");
    check_disjoint(train_nodes, test_nodes, "train/test nodes");
    check_disjoint(valid_nodes, test_nodes, "valid/test nodes");
}

std::string IngestReport::to_json() const {
    json j = {{"num_nodes", num_nodes}, {"num_relations", num_relations},
              {"num_edges", num_edges}, {"num_train", num_train},
              {"num_valid", num_valid}, {"num_test", num_test},
              {"string_ids", string_ids}};
    return j.dump();
}

namespace {

struct TokenRow {
    std::string src, rel, dst;
};

struct ParsedFile {
    std::vector<TokenRow> rows;
    std::vector<Edge> binary_edges;
    bool binary = false;
};

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

std::optional<uint64_t> parse_uint(std::string_view s) {
    if (s.empty() || s.size() > 20) return std::nullopt;
    uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

ParsedFile parse_file(const fs::path& path, InputFormat format, IdWidth width) {
    if (!fs::exists(path)) throw Error("input file not found: " + path.string());
    if (format == InputFormat::Auto && path.extension() == ".bin") format = InputFormat::Binary;

    ParsedFile out;
    if (format == InputFormat::Binary) {
        out.binary = true;
        out.binary_edges = read_edge_records(path, width);
        return out;
    }

    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::string line;
    int64_t line_no = 0;
    size_t expected = format == InputFormat::Tsv2 ? 2 : format == InputFormat::Tsv3 ? 3 : 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto tokens = split_ws(line);
        if (tokens.empty()) continue;
        if (expected == 0) {
            if (tokens.size() != 2 && tokens.size() != 3)
                throw Error(path.string() + ":" + std::to_string(line_no) +
                            ": malformed line, expected 2 or 3 columns");
            expected = tokens.size();
        }
        if (tokens.size() != expected)
            throw Error(path.string() + ":" + std::to_string(line_no) + ": malformed line, expected " +
                        std::to_string(expected) + " columns, found " +
                        std::to_string(tokens.size()));
        if (expected == 2)
            out.rows.push_back({std::string(tokens[0]), std::string(), std::string(tokens[1])});
        else
            out.rows.push_back(
                {std::string(tokens[0]), std::string(tokens[1]), std::string(tokens[2])});
    }
    return out;
}

void check_width(uint64_t id, IdWidth width, const char* what) {
    if (width == IdWidth::U32 && id >= UINT32_MAX)
        throw Error(std::string(what) + " id " + std::to_string(id) +
                    " exceeds the 32-bit record range; re-run with 64-bit ids (--id-width 64)");
}

class Dictionary {
  public:
    int64_t id(const std::string& key) {
        auto [it, inserted] = ids_.try_emplace(key, static_cast<int64_t>(names_.size()));
        if (inserted) names_.push_back(key);
        return it->second;
    }
    std::vector<std::string> take_names() { return std::move(names_); }
    size_t size() const { return names_.size(); }

  private:
    std::unordered_map<std::string, int64_t> ids_;
    std::vector<std::string> names_;
};

}  // namespace

RawGraph ingest_splits(const fs::path& train, const fs::path& valid, const fs::path& test,
                       const IngestOptions& options, IngestReport* report) {
    std::array<fs::path, 3> paths = {train, valid, test};
    std::array<ParsedFile, 3> parsed;
    int binary_files = 0, text_files = 0;
    for (size_t s = 0; s < 3; ++s) {
        if (paths[s].empty()) continue;
        parsed[s] = parse_file(paths[s], options.format, options.width);
        (parsed[s].binary ? binary_files : text_files)++;
    }
    if (binary_files > 0 && text_files > 0)
        throw Error("cannot mix binary and text edge files in one dataset");

    RawGraph g;
    std::array<std::vector<int64_t>*, 3> split_out = {&g.train_edges, &g.valid_edges, &g.test_edges};
    bool string_ids = false;

    if (binary_files > 0) {
        int64_t max_node = -1, max_rel = -1;
        for (size_t s = 0; s < 3; ++s) {
            for (const Edge& e : parsed[s].binary_edges) {
                split_out[s]->push_back(static_cast<int64_t>(g.edges.size()));
                g.edges.push_back(e);
                max_node = std::max({max_node, e.src, e.dst});
                max_rel = std::max<int64_t>(max_rel, e.rel);
            }
        }
        g.num_nodes = max_node + 1;
        g.num_relations = std::max<int64_t>(1, max_rel + 1);
    } else {
        bool nodes_int = true, rels_int = true;
        bool typed = false;
        for (const auto& pf : parsed) {
            for (const auto& row : pf.rows) {
                if (nodes_int && (!parse_uint(row.src) || !parse_uint(row.dst))) nodes_int = false;
                if (!row.rel.empty()) {
                    typed = true;
                    if (rels_int && !parse_uint(row.rel)) rels_int = false;
                }
            }
        }
        Dictionary nodes, rels;
        int64_t max_node = -1, max_rel = -1;
        auto node_id = [&](const std::string& tok) -> int64_t {
            if (nodes_int) {
                uint64_t v = *parse_uint(tok);
                check_width(v, options.width, "node");
                if (v > static_cast<uint64_t>(INT64_MAX)) throw Error("node id too large: " + tok);
                max_node = std::max<int64_t>(max_node, static_cast<int64_t>(v));
                return static_cast<int64_t>(v);
            }
            return nodes.id(tok);
        };
        auto rel_id = [&](const std::string& tok) -> int64_t {
            if (tok.empty()) return 0;
            if (rels_int) {
                uint64_t v = *parse_uint(tok);
                if (v >= static_cast<uint64_t>(INT32_MAX))
                    throw Error("relation id " + tok + " exceeds the supported relation range");
                max_rel = std::max<int64_t>(max_rel, static_cast<int64_t>(v));
                return static_cast<int64_t>(v);
            }
            return rels.id(tok);
        };
        for (size_t s = 0; s < 3; ++s) {
            for (const auto& row : parsed[s].rows) {
                Edge e;
                e.src = node_id(row.src);
                e.rel = static_cast<RelId>(rel_id(row.rel));
                e.dst = node_id(row.dst);
                split_out[s]->push_back(static_cast<int64_t>(g.edges.size()));
                g.edges.push_back(e);
            }
        }
        if (nodes_int) {
            g.num_nodes = max_node + 1;
        } else {
            g.num_nodes = static_cast<int64_t>(nodes.size());
            check_width(nodes.size(), options.width, "node");
            g.node_names = nodes.take_names();
            string_ids = true;
        }
        if (!typed)
            g.num_relations = 1;
        else if (rels_int)
            g.num_relations = max_rel + 1;
        else {
            g.num_relations = static_cast<int64_t>(rels.size());
            g.relation_names = rels.take_names();
        }
    }

    if (g.train_edges.empty()) throw Error("no edges in " + train.string());
    g.validate();

    if (report) {
        report->num_nodes = g.num_nodes;
        report->num_relations = g.num_relations;
        report->num_edges = static_cast<int64_t>(g.edges.size());
        report->num_train = static_cast<int64_t>(g.train_edges.size());
        report->num_valid = static_cast<int64_t>(g.valid_edges.size());
        report->num_test = static_cast<int64_t>(g.test_edges.size());
        report->string_ids = string_ids;
    }
    return g;
}

RawGraph ingest(const fs::path& path, const IngestOptions& options, IngestReport* report) {
    return ingest_splits(path, {}, {}, options, report);
}

void attach_node_labels(RawGraph& g, const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open label file " + path.string());
    std::unordered_map<std::string, NodeId> by_name;
    for (size_t i = 0; i < g.node_names.size(); ++i) by_name.emplace(g.node_names[i], i);

    struct Row {
        NodeId node;
        std::string label;
        std::string split;
    };
    std::vector<Row> rows;
    std::string line;
    int64_t line_no = 0;
    bool labels_int = true;
    while (std::getline(in, line)) {
        ++line_no;
        auto t = split_ws(line);
        if (t.empty()) continue;
        if (t.size() != 3)
            throw Error(path.string() + ":" + std::to_string(line_no) +
                        ": malformed line, expected node, label, split");
        NodeId v;
        if (g.node_names.empty()) {
            auto parsed = parse_uint(t[0]);
            if (!parsed || static_cast<int64_t>(*parsed) >= g.num_nodes)
                throw Error(path.string() + ":" + std::to_string(line_no) + ": unknown node " +
                            std::string(t[0]));
            v = static_cast<NodeId>(*parsed);
        } else {
            auto it = by_name.find(std::string(t[0]));
            if (it == by_name.end())
                throw Error(path.string() + ":" + std::to_string(line_no) + ": unknown node " +
                            std::string(t[0]));
            v = it->second;
        }
        if (!parse_uint(t[1])) labels_int = false;
        rows.push_back({v, std::string(t[1]), std::string(t[2])});
    }

    g.labels.assign(static_cast<size_t>(g.num_nodes), -1);
    g.train_nodes.clear();
    g.valid_nodes.clear();
    g.test_nodes.clear();
    Dictionary label_dict;
    int32_t max_label = -1;
    for (const auto& r : rows) {
        int32_t label;
        if (labels_int) {
            label = static_cast<int32_t>(*parse_uint(r.label));
        } else {
            label = static_cast<int32_t>(label_dict.id(r.label));
        }
        max_label = std::max(max_label, label);
        g.labels[static_cast<size_t>(r.node)] = label;
        if (r.split == "train")
            g.train_nodes.push_back(r.node);
        else if (r.split == "valid")
            g.valid_nodes.push_back(r.node);
        else if (r.split == "test")
            g.test_nodes.push_back(r.node);
        else
            throw Error("unknown split '" + r.split + "' in " + path.string());
    }
    g.num_classes = max_label + 1;
    g.validate();
}

std::span<const NodeId> PartitionMap::members(PartitionId part) const {
    auto begin = static_cast<size_t>(partition_offsets[static_cast<size_t>(part)]);
    auto end = static_cast<size_t>(partition_offsets[static_cast<size_t>(part) + 1]);
    return std::span<const NodeId>(nodes_by_partition).subspan(begin, end - begin);
}

PartitionMap PartitionMap::from_assignment(int32_t p, std::vector<PartitionId> assignment) {
    PartitionMap pm;
    pm.p = p;
    pm.node_to_partition = std::move(assignment);
    pm.partition_sizes.assign(static_cast<size_t>(p), 0);
    for (auto part : pm.node_to_partition) {
        if (part < 0 || part >= p) throw Error("partition id out of range in assignment");
        pm.partition_sizes[static_cast<size_t>(part)]++;
    }
    pm.partition_offsets.assign(static_cast<size_t>(p) + 1, 0);
    for (int32_t i = 0; i < p; ++i)
        pm.partition_offsets[static_cast<size_t>(i) + 1] =
            pm.partition_offsets[static_cast<size_t>(i)] + pm.partition_sizes[static_cast<size_t>(i)];
    pm.nodes_by_partition.assign(pm.node_to_partition.size(), 0);
    pm.node_to_position.assign(pm.node_to_partition.size(), 0);
    std::vector<int64_t> fill(static_cast<size_t>(p), 0);
    for (size_t v = 0; v < pm.node_to_partition.size(); ++v) {
        auto part = static_cast<size_t>(pm.node_to_partition[v]);
        int64_t pos = fill[part]++;
        pm.node_to_position[v] = pos;
        pm.nodes_by_partition[static_cast<size_t>(pm.partition_offsets[part] + pos)] =
            static_cast<NodeId>(v);
    }
    return pm;
}

PartitionMap assign_partitions(const RawGraph& g, int32_t p, PartitionMode mode, uint64_t seed) {
    if (p < 1) throw Error("partition count must be at least 1");
    if (p > g.num_nodes)
        throw Error("partition count " + std::to_string(p) + " exceeds node count " +
                    std::to_string(g.num_nodes));
    const auto n = static_cast<size_t>(g.num_nodes);
    std::vector<PartitionId> assignment(n, 0);
    Rng rng(seed);

    if (mode == PartitionMode::Random) {
        std::vector<NodeId> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        shuffle(perm, rng);
        for (size_t i = 0; i < n; ++i)
            assignment[static_cast<size_t>(perm[i])] = static_cast<PartitionId>(i % static_cast<size_t>(p));
        return PartitionMap::from_assignment(p, std::move(assignment));
    }

    if (g.train_nodes.empty()) throw Error("train-first partitioning requires a training node set");
    const int64_t capacity = (g.num_nodes + p - 1) / p;
    std::vector<NodeId> train = g.train_nodes;
    std::sort(train.begin(), train.end());
    train.erase(std::unique(train.begin(), train.end()), train.end());

    std::vector<int64_t> used(static_cast<size_t>(p), 0);
    std::vector<char> placed(n, 0);
    for (size_t t = 0; t < train.size(); ++t) {
        auto part = static_cast<PartitionId>(static_cast<int64_t>(t) / capacity);
        assignment[static_cast<size_t>(train[t])] = part;
        used[static_cast<size_t>(part)]++;
        placed[static_cast<size_t>(train[t])] = 1;
    }
    std::vector<PartitionId> slots;
    for (int32_t part = 0; part < p; ++part)
        for (int64_t k = used[static_cast<size_t>(part)]; k < capacity; ++k) slots.push_back(part);
    std::vector<NodeId> rest;
    for (size_t v = 0; v < n; ++v)
        if (!placed[v]) rest.push_back(static_cast<NodeId>(v));
    shuffle(slots, rng);
    shuffle(rest, rng);
    for (size_t i = 0; i < rest.size(); ++i) assignment[static_cast<size_t>(rest[i])] = slots[i];

    auto pm = PartitionMap::from_assignment(p, std::move(assignment));
    pm.train_partitions = static_cast<int32_t>((static_cast<int64_t>(train.size()) + capacity - 1) / capacity);
    return pm;
}

// ---------------------------------------------------------------------------
// Binary records

namespace {

size_t record_bytes(IdWidth width) { return 3 * static_cast<size_t>(width); }

void encode_edge(const Edge& e, IdWidth width, char* out) {
    if (width == IdWidth::U32) {
        uint32_t v[3] = {static_cast<uint32_t>(e.src), static_cast<uint32_t>(e.rel),
                         static_cast<uint32_t>(e.dst)};
        std::memcpy(out, v, sizeof v);
    } else {
        uint64_t v[3] = {static_cast<uint64_t>(e.src), static_cast<uint64_t>(e.rel),
                         static_cast<uint64_t>(e.dst)};
        std::memcpy(out, v, sizeof v);
    }
}

Edge decode_edge(const char* in, IdWidth width) {
    Edge e;
    if (width == IdWidth::U32) {
        uint32_t v[3];
        std::memcpy(v, in, sizeof v);
        e = {static_cast<NodeId>(v[0]), static_cast<RelId>(v[1]), static_cast<NodeId>(v[2])};
    } else {
        uint64_t v[3];
        std::memcpy(v, in, sizeof v);
        e = {static_cast<NodeId>(v[0]), static_cast<RelId>(v[1]), static_cast<NodeId>(v[2])};
    }
    return e;
}

std::vector<Edge> decode_edges(const std::vector<char>& buf, IdWidth width) {
    const size_t rec = record_bytes(width);
    std::vector<Edge> out(buf.size() / rec);
    for (size_t i = 0; i < out.size(); ++i) out[i] = decode_edge(buf.data() + i * rec, width);
    return out;
}

void write_file(const fs::path& path, const void* data, size_t bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
    if (!out) throw Error("write failed: " + path.string());
}

std::vector<char> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    in.seekg(0, std::ios::end);
    auto size = static_cast<size_t>(in.tellg());
    in.seekg(0);
    std::vector<char> buf(size);
    in.read(buf.data(), static_cast<std::streamsize>(size));
    if (!in) throw Error("read failed: " + path.string());
    return buf;
}

template <typename T>
void write_vector(const fs::path& path, const std::vector<T>& v) {
    write_file(path, v.data(), v.size() * sizeof(T));
}

template <typename T>
std::vector<T> read_vector(const fs::path& path) {
    auto buf = read_file(path);
    if (buf.size() % sizeof(T) != 0) throw IntegrityError("truncated file " + path.string());
    std::vector<T> v(buf.size() / sizeof(T));
    std::memcpy(v.data(), buf.data(), buf.size());
    return v;
}

struct IndexHeader {
    char magic[4];
    uint32_t version;
    uint32_t p;
    uint32_t width;
    uint64_t num_nodes;
    uint64_t num_relations;
    uint64_t seed;
    uint64_t num_edges;
};
static_assert(sizeof(IndexHeader) == 48);

}  // namespace

std::vector<Edge> read_edge_records(const fs::path& path, IdWidth width) {
    auto buf = read_file(path);
    if (buf.size() % record_bytes(width) != 0)
        throw IntegrityError(path.string() + ": length is not a multiple of the record size");
    return decode_edges(buf, width);
}

void write_edge_records(const fs::path& path, std::span<const Edge> edges, IdWidth width) {
    const size_t rec = record_bytes(width);
    std::vector<char> buf(edges.size() * rec);
    for (size_t i = 0; i < edges.size(); ++i) encode_edge(edges[i], width, buf.data() + i * rec);
    write_file(path, buf.data(), buf.size());
}

EdgeBucketStore EdgeBucketStore::open(const fs::path& dir) {
    EdgeBucketStore s;
    s.dir_ = dir;
    auto idx = read_file(dir / "buckets.idx");
    if (idx.size() < sizeof(IndexHeader)) throw IntegrityError("bucket index too short");
    IndexHeader h;
    std::memcpy(&h, idx.data(), sizeof h);
    if (std::memcmp(h.magic, kMagic, 4) != 0) throw IntegrityError("bad bucket index magic");
    if (h.version != kVersion) throw IntegrityError("unsupported bucket index version");
    if (h.width != 4 && h.width != 8) throw IntegrityError("bad record width in bucket index");
    s.p_ = static_cast<int32_t>(h.p);
    s.width_ = static_cast<IdWidth>(h.width);
    s.num_nodes_ = static_cast<int64_t>(h.num_nodes);
    s.num_relations_ = static_cast<int64_t>(h.num_relations);
    s.seed_ = h.seed;
    s.num_edges_ = static_cast<int64_t>(h.num_edges);

    const size_t buckets = static_cast<size_t>(s.p_) * static_cast<size_t>(s.p_);
    if (idx.size() != sizeof(IndexHeader) + buckets * sizeof(BucketEntry))
        throw IntegrityError("bucket index length does not match partition count");
    s.index_.resize(buckets);
    std::memcpy(s.index_.data(), idx.data() + sizeof(IndexHeader), buckets * sizeof(BucketEntry));

    const uint64_t rec = record_bytes(s.width_);
    uint64_t expected_offset = 0, total = 0;
    for (const auto& e : s.index_) {
        if (e.offset != expected_offset) throw IntegrityError("bucket offsets are not contiguous");
        expected_offset += e.count * rec;
        total += e.count;
    }
    if (total != h.num_edges) throw IntegrityError("bucket counts do not sum to the edge count");
    auto file_size = fs::file_size(dir / "buckets.bin");
    if (file_size != expected_offset)
        throw IntegrityError("bucket file length " + std::to_string(file_size) +
                             " inconsistent with index (" + std::to_string(expected_offset) + ")");
    return s;
}

const BucketEntry& EdgeBucketStore::entry(PartitionId i, PartitionId j) const {
    if (i < 0 || j < 0 || i >= p_ || j >= p_) throw Error("bucket coordinates out of range");
    return index_[static_cast<size_t>(i) * static_cast<size_t>(p_) + static_cast<size_t>(j)];
}

int64_t EdgeBucketStore::bucket_bytes(PartitionId i, PartitionId j) const {
    return static_cast<int64_t>(entry(i, j).count * record_bytes(width_));
}

std::vector<int64_t> EdgeBucketStore::bucket_counts() const {
    std::vector<int64_t> out(index_.size());
    for (size_t t = 0; t < index_.size(); ++t) out[t] = static_cast<int64_t>(index_[t].count);
    return out;
}

std::vector<Edge> EdgeBucketStore::read_bucket(PartitionId i, PartitionId j) const {
    const auto& e = entry(i, j);
    if (e.count == 0) return {};
    std::ifstream in(dir_ / "buckets.bin", std::ios::binary);
    if (!in) throw Error("cannot open bucket file in " + dir_.string());
    std::vector<char> buf(e.count * record_bytes(width_));
    in.seekg(static_cast<std::streamoff>(e.offset));
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!in) throw Error("short read from bucket file");
    return decode_edges(buf, width_);
}

std::vector<Edge> EdgeBucketStore::read_all() const {
    return read_edge_records(dir_ / "buckets.bin", width_);
}

// ---------------------------------------------------------------------------
// Node tables

NodeTableFile::NodeTableFile(fs::path path, std::shared_ptr<const PartitionMap> partitions,
                             int64_t dim)
    : path_(std::move(path)), partitions_(std::move(partitions)), dim_(dim) {
    fd_ = ::open(path_.c_str(), O_RDWR);
    if (fd_ < 0) throw Error("cannot open node table " + path_.string());
    auto expected = static_cast<uintmax_t>(partitions_->num_nodes() * dim_) * sizeof(float);
    if (fs::file_size(path_) != expected)
        throw IntegrityError("node table " + path_.string() + " has unexpected length");
}

NodeTableFile::~NodeTableFile() {
    if (fd_ >= 0) ::close(fd_);
}

int64_t NodeTableFile::partition_bytes(PartitionId part) const {
    return partitions_->partition_sizes[static_cast<size_t>(part)] * dim_ *
           static_cast<int64_t>(sizeof(float));
}

std::vector<float> NodeTableFile::read_partition(PartitionId part) const {
    const auto rows = partitions_->partition_sizes[static_cast<size_t>(part)];
    std::vector<float> out(static_cast<size_t>(rows * dim_));
    const auto bytes = out.size() * sizeof(float);
    const auto offset = static_cast<off_t>(partitions_->partition_offsets[static_cast<size_t>(part)] *
                                           dim_ * static_cast<int64_t>(sizeof(float)));
    size_t done = 0;
    auto* dst = reinterpret_cast<char*>(out.data());
    while (done < bytes) {
        auto n = ::pread(fd_, dst + done, bytes - done, offset + static_cast<off_t>(done));
        if (n <= 0) throw Error("read failed on node table " + path_.string());
        done += static_cast<size_t>(n);
    }
    return out;
}

void NodeTableFile::write_partition(PartitionId part, std::span<const float> rows) const {
    const auto expected = static_cast<size_t>(partitions_->partition_sizes[static_cast<size_t>(part)] * dim_);
    if (rows.size() != expected) throw Error("partition row block has the wrong size");
    const auto bytes = rows.size() * sizeof(float);
    const auto offset = static_cast<off_t>(partitions_->partition_offsets[static_cast<size_t>(part)] *
                                           dim_ * static_cast<int64_t>(sizeof(float)));
    size_t done = 0;
    const auto* src = reinterpret_cast<const char*>(rows.data());
    while (done < bytes) {
        auto n = ::pwrite(fd_, src + done, bytes - done, offset + static_cast<off_t>(done));
        if (n <= 0) throw Error("write failed on node table " + path_.string());
        done += static_cast<size_t>(n);
    }
}

std::vector<float> NodeTableFile::read_all_by_node() const {
    std::vector<float> out(static_cast<size_t>(partitions_->num_nodes() * dim_));
    const auto d = static_cast<size_t>(dim_);
    for (int32_t part = 0; part < partitions_->p; ++part) {
        auto block = read_partition(part);
        auto members = partitions_->members(part);
        for (size_t r = 0; r < members.size(); ++r)
            std::copy_n(block.data() + r * d, d, out.data() + static_cast<size_t>(members[r]) * d);
    }
    return out;
}

void init_embedding_row(uint64_t seed, NodeId v, std::span<float> row) {
    Rng rng(derive_seed(seed, 0x656d62ULL, static_cast<uint64_t>(v)));
    const double bound = 0.5 / static_cast<double>(row.size());
    for (auto& x : row) x = static_cast<float>((2.0 * uniform_unit(rng) - 1.0) * bound);
}

// ---------------------------------------------------------------------------
// Build

void write_partition_map(const fs::path& path, const PartitionMap& pm) {
    std::vector<int32_t> blob;
    blob.reserve(pm.node_to_partition.size() + 2);
    blob.push_back(pm.p);
    blob.push_back(pm.train_partitions);
    blob.insert(blob.end(), pm.node_to_partition.begin(), pm.node_to_partition.end());
    write_vector(path, blob);
}

PartitionMap read_partition_map(const fs::path& path) {
    auto blob = read_vector<int32_t>(path);
    if (blob.size() < 2) throw IntegrityError("partition map file too short");
    int32_t p = blob[0];
    std::vector<PartitionId> assignment(blob.begin() + 2, blob.end());
    auto pm = PartitionMap::from_assignment(p, std::move(assignment));
    pm.train_partitions = blob[1];
    return pm;
}

EdgeBucketStore build_buckets(const RawGraph& g, const PartitionMap& pm, const fs::path& out_dir,
                              const BuildOptions& options) {
    if (pm.num_nodes() != g.num_nodes) throw Error("partition map does not cover every node");
    if (options.dim < 1) throw Error("embedding dimension must be positive");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw Error("cannot create " + out_dir.string() + ": " + ec.message());

    const auto p = static_cast<size_t>(pm.p);
    const auto width = options.width;
    const auto rec = record_bytes(width);
    if (width == IdWidth::U32 && g.num_nodes >= static_cast<int64_t>(UINT32_MAX))
        throw Error("graph too large for 32-bit records; use --id-width 64");

    std::vector<uint64_t> counts(p * p, 0);
    auto bucket_of = [&](const Edge& e) {
        return static_cast<size_t>(pm.partition_of(e.src)) * p + static_cast<size_t>(pm.partition_of(e.dst));
    };
    for (auto idx : g.train_edges) counts[bucket_of(g.edges[static_cast<size_t>(idx)])]++;

    std::vector<BucketEntry> index(p * p);
    uint64_t offset = 0;
    for (size_t b = 0; b < p * p; ++b) {
        index[b] = {offset * rec, counts[b]};
        offset += counts[b];
    }
    std::vector<char> records(offset * rec);
    std::vector<uint64_t> cursor(p * p, 0);
    for (auto idx : g.train_edges) {
        const Edge& e = g.edges[static_cast<size_t>(idx)];
        auto b = bucket_of(e);
        auto slot = index[b].offset / rec + cursor[b]++;
        encode_edge(e, width, records.data() + slot * rec);
    }
    write_file(out_dir / "buckets.bin", records.data(), records.size());

    IndexHeader h{};
    std::memcpy(h.magic, EdgeBucketStore::kMagic, 4);
    h.version = EdgeBucketStore::kVersion;
    h.p = static_cast<uint32_t>(pm.p);
    h.width = static_cast<uint32_t>(width);
    h.num_nodes = static_cast<uint64_t>(g.num_nodes);
    h.num_relations = static_cast<uint64_t>(g.num_relations);
    h.seed = options.seed;
    h.num_edges = offset;
    std::vector<char> idx(sizeof h + index.size() * sizeof(BucketEntry));
    std::memcpy(idx.data(), &h, sizeof h);
    std::memcpy(idx.data() + sizeof h, index.data(), index.size() * sizeof(BucketEntry));
    write_file(out_dir / "buckets.idx", idx.data(), idx.size());

    write_partition_map(out_dir / "partition_map.bin", pm);

    const auto d = static_cast<size_t>(options.dim);
    std::vector<float> emb(static_cast<size_t>(g.num_nodes) * d);
    for (size_t r = 0; r < pm.nodes_by_partition.size(); ++r)
        init_embedding_row(options.seed, pm.nodes_by_partition[r],
                           std::span<float>(emb.data() + r * d, d));
    write_vector(out_dir / "embeddings.bin", emb);
    std::fill(emb.begin(), emb.end(), 0.0f);
    write_vector(out_dir / "embeddings_state.bin", emb);

    auto gather_split = [&](const std::vector<int64_t>& ids) {
        std::vector<Edge> out;
        out.reserve(ids.size());
        for (auto i : ids) out.push_back(g.edges[static_cast<size_t>(i)]);
        return out;
    };
    write_edge_records(out_dir / "valid_edges.bin", gather_split(g.valid_edges), width);
    write_edge_records(out_dir / "test_edges.bin", gather_split(g.test_edges), width);
    if (g.has_labels()) {
        write_vector(out_dir / "labels.bin", g.labels);
        write_vector(out_dir / "train_nodes.bin", g.train_nodes);
        write_vector(out_dir / "valid_nodes.bin", g.valid_nodes);
        write_vector(out_dir / "test_nodes.bin", g.test_nodes);
    }
    auto write_names = [&](const char* name, const std::vector<std::string>& names) {
        if (names.empty()) return;
        std::ofstream out(out_dir / name);
        for (const auto& s : names) out << s << '\n';
    };
    write_names("node_names.txt", g.node_names);
    write_names("relation_names.txt", g.relation_names);

    json meta = {{"num_nodes", g.num_nodes},
                 {"num_relations", g.num_relations},
                 {"num_train_edges", static_cast<int64_t>(offset)},
                 {"p", pm.p},
                 {"dim", options.dim},
                 {"id_width", static_cast<int>(width) * 8},
                 {"seed", options.seed},
                 {"num_classes", g.num_classes},
                 {"train_partitions", pm.train_partitions}};
    std::ofstream(out_dir / "dataset.json") << meta.dump(2) << '\n';

    return EdgeBucketStore::open(out_dir);
}

Dataset Dataset::open(const fs::path& dir) {
    Dataset ds;
    ds.dir = dir;
    std::ifstream meta_in(dir / "dataset.json");
    if (!meta_in) throw Error("not a preprocessed dataset (missing dataset.json): " + dir.string());
    json meta = json::parse(meta_in);
    ds.meta.num_nodes = meta.at("num_nodes").get<int64_t>();
    ds.meta.num_relations = meta.at("num_relations").get<int64_t>();
    ds.meta.num_train_edges = meta.at("num_train_edges").get<int64_t>();
    ds.meta.p = meta.at("p").get<int32_t>();
    ds.meta.dim = meta.at("dim").get<int64_t>();
    ds.meta.width = parse_id_width(meta.at("id_width").get<int>());
    ds.meta.seed = meta.at("seed").get<uint64_t>();
    ds.meta.num_classes = meta.value("num_classes", 0);
    ds.meta.train_partitions = meta.value("train_partitions", 0);
    ds.meta.partition_mode = meta.value("partition_mode", std::string("random"));

    ds.partitions = std::make_shared<const PartitionMap>(read_partition_map(dir / "partition_map.bin"));
    if (ds.partitions->p != ds.meta.p || ds.partitions->num_nodes() != ds.meta.num_nodes)
        throw IntegrityError("partition map disagrees with dataset metadata");
    ds.store = EdgeBucketStore::open(dir);
    if (ds.store.p() != ds.meta.p || ds.store.num_nodes() != ds.meta.num_nodes)
        throw IntegrityError("bucket index disagrees with dataset metadata");
    ds.valid_edges = read_edge_records(dir / "valid_edges.bin", ds.meta.width);
    ds.test_edges = read_edge_records(dir / "test_edges.bin", ds.meta.width);
    if (ds.meta.num_classes > 0) {
        ds.labels = read_vector<int32_t>(dir / "labels.bin");
        ds.train_nodes = read_vector<NodeId>(dir / "train_nodes.bin");
        ds.valid_nodes = read_vector<NodeId>(dir / "valid_nodes.bin");
        ds.test_nodes = read_vector<NodeId>(dir / "test_nodes.bin");
    }
    return ds;
}

Dataset preprocess(const RawGraph& g, int32_t p, PartitionMode mode, const BuildOptions& options,
                   const fs::path& out_dir) {
    auto pm = assign_partitions(g, p, mode, options.seed);
    build_buckets(g, pm, out_dir, options);
    {
        std::ifstream in(out_dir / "dataset.json");
        json meta = json::parse(in);
        meta["partition_mode"] = mode == PartitionMode::Random ? "random" : "train-first";
        std::ofstream(out_dir / "dataset.json") << meta.dump(2) << '\n';
    }
    return Dataset::open(out_dir);
}

}  // namespace deltagnn
