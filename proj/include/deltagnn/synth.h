#pragma once

#include <filesystem>
#include <string>

#include "deltagnn/graph_store.h"

namespace deltagnn {

/// Clustered random graphs with learnable structure.
///
/// Knowledge graphs: each node belongs to one of `clusters` groups and an
/// edge with relation r from cluster a lands in cluster (a + r + 1) mod K
/// unless it is noise. Node-classification graphs: a single relation,
/// edges stay inside the source's class with probability `homophily`, and
/// the class is the label.
struct SynthOptions {
    std::string kind = "kg";  // kg | nc
    int64_t nodes = 2000;
    int64_t edges = 20000;
    int64_t relations = 8;
    int32_t clusters = 100;
    int32_t classes = 8;
    double noise = 0.2;
    double homophily = 0.8;
    double valid_fraction = 0.05;
    double test_fraction = 0.05;
    double train_node_fraction = 0.1;
    uint64_t seed = 0;
};

RawGraph synthetic_graph(const SynthOptions& o);

// train.txt / valid.txt / test.txt (and labels.tsv for nc) under dir.
void write_synthetic(const std::filesystem::path& dir, const SynthOptions& o);

}  // namespace deltagnn
