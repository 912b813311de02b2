#include "deltagnn/buffer.h"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <thread>

#include "json.hpp"

namespace deltagnn {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::vector<PartitionId> difference(const std::vector<PartitionId>& a, const std::vector<PartitionId>& b) {
    std::vector<PartitionId> out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

}  // namespace

PartitionBuffer::PartitionBuffer(const EdgeBucketStore& store, std::shared_ptr<const PartitionMap> partitions,
                                 const std::filesystem::path& embeddings, const std::filesystem::path& state,
                                 int64_t dim, BufferOptions options)
    : store_(store),
      partitions_(partitions),
      emb_file_(embeddings, partitions, dim),
      state_file_(state, partitions, dim),
      dim_(dim),
      options_(options) {
    blocks_.resize(static_cast<size_t>(partitions_->p));
}

PartitionBuffer::~PartitionBuffer() {
    if (pending_.valid()) {
        try {
            pending_.get();
        } catch (...) {
        }
    }
}

void PartitionBuffer::delay() const {
    if (options_.read_delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(options_.read_delay_ms));
}

PartitionBuffer::Block PartitionBuffer::read_block(PartitionId part) const {
    delay();
    Block b;
    b.emb = emb_file_.read_partition(part);
    b.state = state_file_.read_partition(part);
    return b;
}

std::vector<Edge> PartitionBuffer::read_buckets(const std::vector<PartitionId>& resident,
                                                const std::vector<PartitionId>& loaded, int64_t* bytes) const {
    delay();
    std::vector<char> is_new(static_cast<size_t>(partitions_->p), 0);
    for (auto q : loaded) is_new[static_cast<size_t>(q)] = 1;
    std::vector<Edge> edges;
    for (auto i : resident)
        for (auto j : resident) {
            if (!is_new[static_cast<size_t>(i)] && !is_new[static_cast<size_t>(j)]) continue;
            auto b = store_.read_bucket(i, j);
            *bytes += store_.bucket_bytes(i, j);
            edges.insert(edges.end(), b.begin(), b.end());
        }
    return edges;
}

PartitionBuffer::Staged PartitionBuffer::stage(std::vector<PartitionId> next, std::vector<PartitionId> loaded) const {
    Staged st;
    st.parts = loaded;
    for (auto q : loaded) {
        st.blocks.push_back(read_block(q));
        st.bytes += emb_file_.partition_bytes(q) + state_file_.partition_bytes(q);
    }
    st.edges = read_buckets(next, loaded, &st.bytes);
    return st;
}

int64_t PartitionBuffer::evict(PartitionId part) {
    auto& b = blocks_[static_cast<size_t>(part)];
    if (!b) throw ResidencyError("evicting non-resident partition " + std::to_string(part));
    int64_t written = 0;
    if (b->dirty) {
        emb_file_.write_partition(part, b->emb);
        state_file_.write_partition(part, b->state);
        written = emb_file_.partition_bytes(part) + state_file_.partition_bytes(part);
    }
    b.reset();
    return written;
}

std::vector<PartitionId> PartitionBuffer::resident() const {
    std::vector<PartitionId> out;
    for (size_t q = 0; q < blocks_.size(); ++q)
        if (blocks_[q]) out.push_back(static_cast<PartitionId>(q));
    return out;
}

bool PartitionBuffer::dirty(PartitionId part) const {
    const auto& b = blocks_.at(static_cast<size_t>(part));
    return b && b->dirty;
}

void PartitionBuffer::full_load(const std::vector<PartitionId>& target) {
    const auto t0 = Clock::now();
    const auto current = resident();
    const auto gone = difference(current, target);
    const auto fresh = difference(target, current);
    int64_t written = 0, read = 0;
    for (auto q : gone) written += evict(q);
    for (auto q : fresh) {
        blocks_[static_cast<size_t>(q)] = std::make_unique<Block>(read_block(q));
        read += emb_file_.partition_bytes(q) + state_file_.partition_bytes(q);
    }
    // all resident buckets are re-read for the new subgraph
    auto edges = read_buckets(target, target, &read);
    sub_ = InMemorySubgraph(partitions_, target, std::move(edges));

    stats_.bytes_read += read;
    stats_.bytes_written += written;
    const double ms = ms_since(t0);
    stats_.rebuild_ms += ms;
    if (options_.stats_out) {
        nlohmann::json j{{"step", step_},   {"evicted", gone},        {"loaded", fresh},
                         {"bytes_read", read}, {"bytes_written", written}, {"rebuild_ms", ms}};
        *options_.stats_out << j.dump() << '\n';
    }
}

void PartitionBuffer::start_prefetch(const Schedule& s, size_t i) {
    pending_schedule_ = nullptr;
    if (!options_.prefetch || i >= s.size()) return;
    const auto& sw = s.swaps[i - 1];
    auto next = s.physical_set(i);
    auto loaded = s.grouping.groups[static_cast<size_t>(sw.loaded)];
    pending_ = std::async(std::launch::async,
                          [this, next = std::move(next), loaded = std::move(loaded)]() mutable {
                              return stage(std::move(next), std::move(loaded));
                          });
    pending_schedule_ = &s;
    pending_index_ = i;
}

void PartitionBuffer::load_set(const Schedule& s, size_t i) {
    if (i >= s.size()) throw Error("schedule step " + std::to_string(i) + " out of range");
    const auto target = s.physical_set(i);

    if (i == 0) {
        if (pending_.valid()) {
            try {
                pending_.get();
            } catch (...) {
            }
        }
        pending_schedule_ = nullptr;
        step_ = 0;
        full_load(target);
        start_prefetch(s, 1);
        return;
    }

    const auto current = resident();
    const auto& sw = s.swaps[i - 1];
    const auto& out = s.grouping.groups.at(static_cast<size_t>(sw.evicted));
    const auto& in = s.grouping.groups.at(static_cast<size_t>(sw.loaded));
    if (current != s.physical_set(i - 1) || difference(current, target) != out || difference(target, current) != in)
        throw Error("schedule discontinuity at step " + std::to_string(i) +
                    ": resident set does not differ from S_i by exactly the scheduled logical partition");

    const auto t0 = Clock::now();
    Staged st;
    bool have = false;
    if (pending_.valid() && pending_schedule_ == &s && pending_index_ == i) {
        try {
            st = pending_.get();
            have = true;
        } catch (const std::exception&) {
            have = false;  // fall back to a synchronous read
        }
    } else if (pending_.valid()) {
        try {
            pending_.get();
        } catch (...) {
        }
    }
    pending_schedule_ = nullptr;
    if (!have) st = stage(target, in);

    int64_t written = 0;
    for (auto q : out) written += evict(q);
    for (size_t t = 0; t < st.parts.size(); ++t)
        blocks_[static_cast<size_t>(st.parts[t])] = std::make_unique<Block>(std::move(st.blocks[t]));
    if (options_.full_rebuild) {
        int64_t ignored = 0;
        sub_ = InMemorySubgraph(partitions_, target, read_buckets(target, target, &ignored));
    } else {
        sub_.swap_partitions(out, in, std::move(st.edges));
    }

    ++step_;
    ++stats_.swaps;
    stats_.bytes_read += st.bytes;
    stats_.bytes_written += written;
    const double ms = ms_since(t0);
    stats_.rebuild_ms += ms;
    if (options_.stats_out) {
        nlohmann::json j{{"step", step_},       {"evicted", out},         {"loaded", in},
                         {"bytes_read", st.bytes}, {"bytes_written", written}, {"rebuild_ms", ms}};
        *options_.stats_out << j.dump() << '\n';
    }
    start_prefetch(s, i + 1);
}

const PartitionBuffer::Block& PartitionBuffer::block_of(NodeId v) const {
    if (v < 0 || v >= partitions_->num_nodes()) throw Error("node id " + std::to_string(v) + " out of range");
    const auto& b = blocks_[static_cast<size_t>(partitions_->partition_of(v))];
    if (!b) throw ResidencyError("node " + std::to_string(v) + " is not resident");
    return *b;
}

void PartitionBuffer::gather(std::span<const NodeId> ids, MatrixF& rows, MatrixF& state) const {
    rows.resize(static_cast<int64_t>(ids.size()), dim_);
    state.resize(static_cast<int64_t>(ids.size()), dim_);
    for (size_t t = 0; t < ids.size(); ++t) {
        const Block& b = block_of(ids[t]);
        const auto off = static_cast<size_t>(partitions_->position_of(ids[t]) * dim_);
        std::copy_n(b.emb.data() + off, dim_, rows.row(static_cast<int64_t>(t)));
        std::copy_n(b.state.data() + off, dim_, state.row(static_cast<int64_t>(t)));
    }
}

void PartitionBuffer::scatter(std::span<const NodeId> ids, const MatrixF& rows, const MatrixF& state) {
    if (rows.rows != static_cast<int64_t>(ids.size()) || state.rows != rows.rows || rows.cols != dim_)
        throw Error("scatter rows do not match ids");
    for (size_t t = 0; t < ids.size(); ++t) {
        auto& b = const_cast<Block&>(block_of(ids[t]));
        const auto off = static_cast<size_t>(partitions_->position_of(ids[t]) * dim_);
        std::copy_n(rows.row(static_cast<int64_t>(t)), dim_, b.emb.data() + off);
        std::copy_n(state.row(static_cast<int64_t>(t)), dim_, b.state.data() + off);
        b.dirty = true;
    }
}

void PartitionBuffer::flush() {
    for (size_t q = 0; q < blocks_.size(); ++q) {
        auto& b = blocks_[q];
        if (!b || !b->dirty) continue;
        const auto part = static_cast<PartitionId>(q);
        emb_file_.write_partition(part, b->emb);
        state_file_.write_partition(part, b->state);
        stats_.bytes_written += emb_file_.partition_bytes(part) + state_file_.partition_bytes(part);
        b->dirty = false;
    }
}

void PartitionBuffer::snapshot(MatrixF& embeddings, MatrixF& state) {
    flush();
    const int64_t n = partitions_->num_nodes();
    embeddings.rows = state.rows = n;
    embeddings.cols = state.cols = dim_;
    embeddings.data = emb_file_.read_all_by_node();
    state.data = state_file_.read_all_by_node();
}

FlatStore::FlatStore(const EdgeBucketStore& store, std::shared_ptr<const PartitionMap> partitions,
                     MatrixF embeddings, MatrixF state)
    : partitions_(std::move(partitions)), emb_(std::move(embeddings)), state_(std::move(state)) {
    const int32_t p = store.p();
    if (partitions_->p != p) throw Error("partition map and bucket store disagree on p");
    if (emb_.rows != partitions_->num_nodes() || state_.rows != emb_.rows || state_.cols != emb_.cols)
        throw Error("flat store tables do not match the node count");
    buckets_.resize(static_cast<size_t>(p) * static_cast<size_t>(p));
    for (int32_t i = 0; i < p; ++i)
        for (int32_t j = 0; j < p; ++j) buckets_[static_cast<size_t>(i * p + j)] = store.read_bucket(i, j);
}

FlatStore FlatStore::open(const EdgeBucketStore& store, std::shared_ptr<const PartitionMap> partitions,
                          const std::filesystem::path& embeddings, const std::filesystem::path& state,
                          int64_t dim) {
    const int64_t n = partitions->num_nodes();
    MatrixF emb, st;
    emb.rows = st.rows = n;
    emb.cols = st.cols = dim;
    emb.data = NodeTableFile(embeddings, partitions, dim).read_all_by_node();
    st.data = NodeTableFile(state, partitions, dim).read_all_by_node();
    return FlatStore(store, std::move(partitions), std::move(emb), std::move(st));
}

void FlatStore::load_set(const Schedule& s, size_t i) {
    if (i >= s.size()) throw Error("schedule step " + std::to_string(i) + " out of range");
    const auto t0 = Clock::now();
    const auto target = s.physical_set(i);
    const int32_t p = partitions_->p;
    std::vector<Edge> edges;
    for (auto a : target)
        for (auto b : target) {
            const auto& bk = buckets_[static_cast<size_t>(a * p + b)];
            edges.insert(edges.end(), bk.begin(), bk.end());
        }
    sub_ = InMemorySubgraph(partitions_, target, std::move(edges));
    if (i > 0) ++stats_.swaps;
    stats_.rebuild_ms += ms_since(t0);
}

void FlatStore::gather(std::span<const NodeId> ids, MatrixF& rows, MatrixF& state) const {
    const int64_t d = emb_.cols;
    rows.resize(static_cast<int64_t>(ids.size()), d);
    state.resize(static_cast<int64_t>(ids.size()), d);
    for (size_t t = 0; t < ids.size(); ++t) {
        if (!sub_.is_resident(ids[t])) throw ResidencyError("node " + std::to_string(ids[t]) + " is not resident");
        std::copy_n(emb_.row(ids[t]), d, rows.row(static_cast<int64_t>(t)));
        std::copy_n(state_.row(ids[t]), d, state.row(static_cast<int64_t>(t)));
    }
}

void FlatStore::scatter(std::span<const NodeId> ids, const MatrixF& rows, const MatrixF& state) {
    const int64_t d = emb_.cols;
    if (rows.rows != static_cast<int64_t>(ids.size()) || state.rows != rows.rows || rows.cols != d)
        throw Error("scatter rows do not match ids");
    for (size_t t = 0; t < ids.size(); ++t) {
        if (!sub_.is_resident(ids[t])) throw ResidencyError("node " + std::to_string(ids[t]) + " is not resident");
        std::copy_n(rows.row(static_cast<int64_t>(t)), d, emb_.row(ids[t]));
        std::copy_n(state.row(static_cast<int64_t>(t)), d, state_.row(ids[t]));
    }
}

void FlatStore::snapshot(MatrixF& embeddings, MatrixF& state) {
    embeddings = emb_;
    state = state_;
}

void FlatStore::write(const std::filesystem::path& embeddings, const std::filesystem::path& state) const {
    const int64_t d = emb_.cols;
    const auto bytes = static_cast<uintmax_t>(emb_.rows * d) * sizeof(float);
    for (const auto& path : {embeddings, state}) {
        if (!std::filesystem::exists(path)) std::ofstream(path, std::ios::binary).flush();
        std::filesystem::resize_file(path, bytes);
    }
    NodeTableFile ef(embeddings, partitions_, d), sf(state, partitions_, d);
    std::vector<float> block;
    for (PartitionId q = 0; q < partitions_->p; ++q) {
        auto members = partitions_->members(q);
        for (const auto& [file, table] : {std::pair{&ef, &emb_}, std::pair{&sf, &state_}}) {
            block.resize(members.size() * static_cast<size_t>(d));
            for (size_t t = 0; t < members.size(); ++t)
                std::copy_n(table->row(members[t]), d, block.data() + t * static_cast<size_t>(d));
            file->write_partition(q, block);
        }
    }
}

}  // namespace deltagnn
