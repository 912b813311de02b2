#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "deltagnn/dense.h"
#include "deltagnn/schedule.h"
#include "deltagnn/trainer.h"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace deltagnn;

namespace {

template <typename T>
py::array_t<T> to_array(const std::vector<T>& v) {
    py::array_t<T> a(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), a.mutable_data());
    return a;
}

std::vector<Edge> edges_from(py::array_t<int64_t, py::array::c_style | py::array::forcecast> arr) {
    if (arr.ndim() != 2 || (arr.shape(1) != 2 && arr.shape(1) != 3))
        throw py::value_error("edges must have shape (m, 2) or (m, 3) as src[, rel], dst");
    const bool has_rel = arr.shape(1) == 3;
    auto r = arr.unchecked<2>();
    std::vector<Edge> out(static_cast<size_t>(arr.shape(0)));
    for (py::ssize_t i = 0; i < arr.shape(0); ++i) {
        out[static_cast<size_t>(i)].src = r(i, 0);
        out[static_cast<size_t>(i)].rel = has_rel ? static_cast<RelId>(r(i, 1)) : 0;
        out[static_cast<size_t>(i)].dst = r(i, has_rel ? 2 : 1);
    }
    return out;
}

py::dict sample(py::array_t<int64_t, py::array::c_style | py::array::forcecast> edges, int64_t num_nodes,
                std::vector<NodeId> targets, std::vector<int> fanouts, const std::string& direction, uint64_t seed) {
    auto es = edges_from(edges);
    for (const auto& e : es)
        if (e.src < 0 || e.src >= num_nodes || e.dst < 0 || e.dst >= num_nodes)
            throw py::value_error("edge endpoint outside [0, num_nodes)");
    auto pm = std::make_shared<const PartitionMap>(
        PartitionMap::from_assignment(1, std::vector<PartitionId>(static_cast<size_t>(num_nodes), 0)));
    InMemorySubgraph sub(pm, {0}, std::move(es));
    auto d = multi_hop_sample(sub, targets, {std::move(fanouts), parse_direction(direction), seed});
    build_repr_map(d);
    std::vector<NodeId> nbrs;
    for (const auto& n : d.nbrs) nbrs.push_back(n.node);
    return py::dict("node_ids"_a = to_array(d.node_ids), "node_id_offsets"_a = to_array(d.node_id_offsets),
                    "nbrs"_a = to_array(nbrs), "nbr_offsets"_a = to_array(d.nbr_offsets),
                    "repr_map"_a = to_array(d.repr_map));
}

py::dict schedule_dict(const Schedule& s) {
    std::vector<std::pair<int32_t, int32_t>> swaps;
    for (const auto& sw : s.swaps) swaps.emplace_back(sw.evicted, sw.loaded);
    return py::dict("S"_a = s.S, "X"_a = s.X, "swaps"_a = swaps, "groups"_a = s.grouping.groups);
}

py::dict comet(int32_t p, int32_t l, int32_t c_l, std::vector<int64_t> bucket_counts, uint64_t seed) {
    auto s = comet_schedule(group_logical(p, l, seed), c_l, seed);
    if (bucket_counts.empty()) bucket_counts.assign(static_cast<size_t>(p) * p, 1);
    comet_assign(s, bucket_counts, seed);
    check_bucket_schedule(s, bucket_counts);
    return schedule_dict(s);
}

py::dict beta(int32_t p, int32_t c, std::vector<int64_t> bucket_counts, uint64_t seed) {
    if (bucket_counts.empty()) bucket_counts.assign(static_cast<size_t>(p) * p, 1);
    auto s = beta_schedule(p, c, bucket_counts, seed);
    check_bucket_schedule(s, bucket_counts);
    return schedule_dict(s);
}

py::dict plan(double num_nodes, double num_edges, double dim, double bytes_per_edge, double cpu, double block,
              double fudge) {
    TuningInputs in{num_nodes, num_edges, dim, bytes_per_edge, cpu, block, fudge};
    auto p = autotune(in);
    return py::dict("p"_a = p.p, "l"_a = p.l, "c"_a = p.c, "c_l"_a = p.c_l, "in_memory"_a = p.in_memory,
                    "alpha4"_a = p.alpha4);
}

py::tuple cli(std::vector<std::string> args) {
    args.insert(args.begin(), "deltagnn");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream out, err;
    int rc;
    {
        py::gil_scoped_release release;
        rc = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    }
    return py::make_tuple(rc, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_deltagnn, m) {
    m.doc() = "Delta-encoded GNN sampling, partition schedules and disk-aware training";

    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

    m.def("sample", &sample, "edges"_a, "num_nodes"_a, "targets"_a, "fanouts"_a, "direction"_a = "both",
          "seed"_a = 0, "Multi-hop DENSE sample over an in-memory edge list.");
    m.def("comet_schedule", &comet, "p"_a, "l"_a, "c_l"_a, "bucket_counts"_a = std::vector<int64_t>{}, "seed"_a = 0);
    m.def("beta_schedule", &beta, "p"_a, "c"_a, "bucket_counts"_a = std::vector<int64_t>{}, "seed"_a = 0);
    m.def("autotune", &plan, "num_nodes"_a, "num_edges"_a, "dim"_a, "bytes_per_edge"_a, "cpu"_a, "block"_a,
          "fudge"_a = 0.0);
    m.def("run_cli", &cli, "args"_a, "Runs a deltagnn subcommand; returns (exit_status, stdout, stderr).");
}
