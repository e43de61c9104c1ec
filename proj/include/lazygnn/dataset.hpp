#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "lazygnn/graph.hpp"
#include "lazygnn/matrix.hpp"
#include "lazygnn/rng.hpp"
#include "lazygnn/trainer.hpp"

namespace lazygnn {

template <class T>
struct Dataset {
    SparseGraph<T> graph;  // symmetrically normalized, self-loops included
    Matrix<T> features;
    std::vector<uint32_t> labels;
    std::vector<uint8_t> split;  // kSplitTrain / kSplitVal / kSplitTest
    size_t num_classes = 0;

    void validate() const {
        const size_t n = graph.num_nodes;
        if (features.rows() != n || labels.size() != n || split.size() != n)
            throw std::invalid_argument("Dataset: node count mismatch across fields");
        if (num_classes == 0) throw std::invalid_argument("Dataset: num_classes must be >= 1");
        for (uint32_t l : labels)
            if (l >= num_classes) throw std::invalid_argument("Dataset: label out of range");
        for (uint8_t s : split)
            if (s > kSplitTest) throw std::invalid_argument("Dataset: split value out of range");
    }
};

struct SbmSpec {
    size_t blocks = 4;
    size_t nodes_per_block = 250;
    double p_in = 0.05;
    double p_out = 0.005;
    size_t feature_dim = 8;
    double feature_noise_sigma = 1.0;
    uint64_t seed = 1;

    void validate() const {
        if (blocks == 0 || nodes_per_block == 0)
            throw std::invalid_argument("SbmSpec: blocks and nodes_per_block must be >= 1");
        if (feature_dim == 0) throw std::invalid_argument("SbmSpec: feature_dim must be >= 1");
        if (!(p_out >= 0.0 && p_out < p_in && p_in <= 1.0))
            throw std::invalid_argument("SbmSpec: need 0 <= p_out < p_in <= 1");
        if (feature_noise_sigma < 0.0)
            throw std::invalid_argument("SbmSpec: feature_noise_sigma must be >= 0");
    }
};

// Random train/val/test assignment with the given fractions; the remainder
// becomes test.
inline std::vector<uint8_t> make_split(size_t num_nodes, double train_frac, double val_frac,
                                       Rng& rng) {
    if (train_frac < 0 || val_frac < 0 || train_frac + val_frac > 1.0)
        throw std::invalid_argument("make_split: fractions must be nonnegative and sum to <= 1");
    auto perm = rng.permutation(num_nodes);
    size_t n_train = static_cast<size_t>(train_frac * static_cast<double>(num_nodes));
    size_t n_val = static_cast<size_t>(val_frac * static_cast<double>(num_nodes));
    std::vector<uint8_t> split(num_nodes, kSplitTest);
    for (size_t i = 0; i < num_nodes && i < n_train; ++i) split[perm[i]] = kSplitTrain;
    for (size_t i = n_train; i < num_nodes && i < n_train + n_val; ++i) split[perm[i]] = kSplitVal;
    return split;
}

// Stochastic block model. Labels are block ids; node features are the
// one-hot centroid of class b at index b % feature_dim plus Gaussian noise.
// Distinct seeds drive the graph, the features, and the default 60/20/20
// split, so the same topology can be re-featured reproducibly.
template <class T>
Dataset<T> generate_sbm(const SbmSpec& spec) {
    spec.validate();
    const size_t n = spec.blocks * spec.nodes_per_block;
    Rng root(spec.seed);
    Rng rng_edges = root.derive(1);
    Rng rng_feat = root.derive(2);
    Rng rng_split = root.derive(3);

    std::vector<std::pair<NodeId, NodeId>> edges;
    for (size_t i = 0; i < n; ++i) {
        const size_t bi = i / spec.nodes_per_block;
        for (size_t j = i + 1; j < n; ++j) {
            const size_t bj = j / spec.nodes_per_block;
            const double p = (bi == bj) ? spec.p_in : spec.p_out;
            if (rng_edges.uniform() < p)
                edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
        }
    }

    Dataset<T> ds;
    ds.graph = normalize(build_graph<T>(edges, n), /*add_self_loops=*/true);
    ds.features = Matrix<T>(n, spec.feature_dim);
    ds.labels.resize(n);
    ds.num_classes = spec.blocks;
    for (size_t i = 0; i < n; ++i) {
        const size_t b = i / spec.nodes_per_block;
        ds.labels[i] = static_cast<uint32_t>(b);
        for (size_t c = 0; c < spec.feature_dim; ++c) {
            T centroid = (c == b % spec.feature_dim) ? T(1) : T(0);
            ds.features(i, c) =
                centroid + static_cast<T>(spec.feature_noise_sigma) * static_cast<T>(rng_feat.normal());
        }
    }
    ds.split = make_split(n, 0.6, 0.2, rng_split);
    ds.validate();
    return ds;
}

}  // namespace lazygnn
