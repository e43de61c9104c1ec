#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lazygnn/matrix.hpp"

namespace lazygnn {

using NodeId = uint32_t;

// CSR over an undirected graph. Invariants: row_ptr non-decreasing with
// row_ptr[0] = 0 and row_ptr[N] = nnz; col_idx strictly increasing within
// each row; structurally symmetric with equal weights both ways.
template <class T>
struct SparseGraph {
    size_t num_nodes = 0;
    std::vector<size_t> row_ptr;
    std::vector<NodeId> col_idx;
    std::vector<T> values;

    size_t nnz() const { return col_idx.size(); }
};

// Builds the raw symmetric CSR with unit weights. Duplicate edges collapse,
// self-loops in the input are kept once.
template <class T>
SparseGraph<T> build_graph(const std::vector<std::pair<NodeId, NodeId>>& edges, size_t num_nodes) {
    if (num_nodes == 0) throw std::invalid_argument("build_graph: num_nodes must be positive");
    std::vector<std::vector<NodeId>> adj(num_nodes);
    for (const auto& [src, dst] : edges) {
        if (src >= num_nodes || dst >= num_nodes)
            throw std::out_of_range("build_graph: node id out of range");
        adj[src].push_back(dst);
        if (src != dst) adj[dst].push_back(src);
    }
    SparseGraph<T> g;
    g.num_nodes = num_nodes;
    g.row_ptr.assign(num_nodes + 1, 0);
    for (size_t i = 0; i < num_nodes; ++i) {
        auto& row = adj[i];
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
        g.row_ptr[i + 1] = g.row_ptr[i] + row.size();
        g.col_idx.insert(g.col_idx.end(), row.begin(), row.end());
    }
    g.values.assign(g.col_idx.size(), T(1));
    return g;
}

// Symmetric normalization value(i,j) = a_ij / sqrt(d_i * d_j) with the degree
// taken after optional self-loop insertion. Degree-0 rows stay all-zero.
template <class T>
SparseGraph<T> normalize(const SparseGraph<T>& g, bool add_self_loops) {
    SparseGraph<T> out;
    out.num_nodes = g.num_nodes;
    out.row_ptr.assign(g.num_nodes + 1, 0);
    for (size_t i = 0; i < g.num_nodes; ++i) {
        size_t begin = g.row_ptr[i], end = g.row_ptr[i + 1];
        bool has_loop = false;
        for (size_t k = begin; k < end; ++k)
            if (g.col_idx[k] == i) has_loop = true;
        size_t row_len = end - begin + ((add_self_loops && !has_loop) ? 1 : 0);
        out.row_ptr[i + 1] = out.row_ptr[i] + row_len;
        bool inserted = false;
        for (size_t k = begin; k < end; ++k) {
            if (add_self_loops && !has_loop && !inserted && g.col_idx[k] > i) {
                out.col_idx.push_back(static_cast<NodeId>(i));
                out.values.push_back(T(1));
                inserted = true;
            }
            out.col_idx.push_back(g.col_idx[k]);
            out.values.push_back(g.values[k]);
        }
        if (add_self_loops && !has_loop && !inserted) {
            out.col_idx.push_back(static_cast<NodeId>(i));
            out.values.push_back(T(1));
        }
    }
    std::vector<T> degree(g.num_nodes, T(0));
    for (size_t i = 0; i < g.num_nodes; ++i)
        for (size_t k = out.row_ptr[i]; k < out.row_ptr[i + 1]; ++k) degree[i] += out.values[k];
    std::vector<T> inv_sqrt(g.num_nodes, T(0));
    for (size_t i = 0; i < g.num_nodes; ++i)
        if (degree[i] > T(0)) inv_sqrt[i] = T(1) / std::sqrt(degree[i]);
    for (size_t i = 0; i < g.num_nodes; ++i)
        for (size_t k = out.row_ptr[i]; k < out.row_ptr[i + 1]; ++k)
            out.values[k] = out.values[k] * inv_sqrt[i] * inv_sqrt[out.col_idx[k]];
    return out;
}

// result = A * x. Accumulates in ascending column order per row so the result
// is bit-identical to a dense reference product that walks columns in order.
template <class T>
Matrix<T> spmm(const SparseGraph<T>& g, const Matrix<T>& x) {
    if (x.rows() != g.num_nodes) throw std::invalid_argument("spmm: row count mismatch");
    Matrix<T> out(g.num_nodes, x.cols());
    for (size_t i = 0; i < g.num_nodes; ++i) {
        T* orow = out.row(i);
        for (size_t k = g.row_ptr[i]; k < g.row_ptr[i + 1]; ++k) {
            const T v = g.values[k];
            const T* xrow = x.row(g.col_idx[k]);
            for (size_t c = 0; c < x.cols(); ++c) orow[c] += v * xrow[c];
        }
    }
    return out;
}

// One mini-batch support set: targets V1 first, then the breadth-first L-hop
// discovery order. local_graph holds the induced slice with GLOBAL values.
template <class T>
struct SubgraphBatch {
    std::vector<NodeId> targets;
    std::vector<NodeId> closure;
    SparseGraph<T> local_graph;
    std::unordered_map<NodeId, NodeId> global_to_local;
};

template <class T>
SubgraphBatch<T> sample_lhop(const SparseGraph<T>& g, const std::vector<NodeId>& targets,
                             size_t hops) {
    if (targets.empty()) throw std::invalid_argument("sample_lhop: empty target set");
    if (hops == 0) throw std::invalid_argument("sample_lhop: hops must be >= 1");
    SubgraphBatch<T> batch;
    std::vector<uint8_t> seen(g.num_nodes, 0);
    for (NodeId t : targets) {
        if (t >= g.num_nodes) throw std::out_of_range("sample_lhop: target id out of range");
        if (seen[t]) continue;
        seen[t] = 1;
        batch.closure.push_back(t);
    }
    batch.targets = batch.closure;  // unique targets, first-occurrence order
    size_t frontier_begin = 0, frontier_end = batch.closure.size();
    for (size_t hop = 0; hop < hops && frontier_begin < frontier_end; ++hop) {
        for (size_t q = frontier_begin; q < frontier_end; ++q) {
            NodeId u = batch.closure[q];
            for (size_t k = g.row_ptr[u]; k < g.row_ptr[u + 1]; ++k) {
                NodeId v = g.col_idx[k];
                if (!seen[v]) {
                    seen[v] = 1;
                    batch.closure.push_back(v);
                }
            }
        }
        frontier_begin = frontier_end;
        frontier_end = batch.closure.size();
    }
    batch.global_to_local.reserve(batch.closure.size());
    for (size_t loc = 0; loc < batch.closure.size(); ++loc)
        batch.global_to_local.emplace(batch.closure[loc], static_cast<NodeId>(loc));

    SparseGraph<T>& lg = batch.local_graph;
    lg.num_nodes = batch.closure.size();
    lg.row_ptr.assign(lg.num_nodes + 1, 0);
    std::vector<std::pair<NodeId, T>> row_entries;
    for (size_t loc = 0; loc < batch.closure.size(); ++loc) {
        NodeId u = batch.closure[loc];
        row_entries.clear();
        for (size_t k = g.row_ptr[u]; k < g.row_ptr[u + 1]; ++k) {
            auto it = batch.global_to_local.find(g.col_idx[k]);
            if (it != batch.global_to_local.end()) row_entries.emplace_back(it->second, g.values[k]);
        }
        std::sort(row_entries.begin(), row_entries.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        lg.row_ptr[loc + 1] = lg.row_ptr[loc] + row_entries.size();
        for (const auto& [col, val] : row_entries) {
            lg.col_idx.push_back(col);
            lg.values.push_back(val);
        }
    }
    return batch;
}

}  // namespace lazygnn
