#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lazygnn/matrix.hpp"

namespace lazygnn {

enum class Store { fea, grad };

// Persistent per-node stores for diffused features (m_fea) and input-feature
// gradients (m_grad). Shapes are fixed at construction; the value footprint
// is exactly 2*N*C entries regardless of propagation depth.
template <class T>
struct LazyState {
    Matrix<T> m_fea;
    Matrix<T> m_grad;
    std::vector<uint8_t> fea_initialized;
    std::vector<uint8_t> grad_initialized;
    // Iteration of the last write per row; staleness diagnostic only.
    std::vector<uint64_t> fea_written_at;
    std::vector<uint64_t> grad_written_at;

    LazyState(size_t num_nodes, size_t num_channels)
        : m_fea(num_nodes, num_channels),
          m_grad(num_nodes, num_channels),
          fea_initialized(num_nodes, 0),
          grad_initialized(num_nodes, 0),
          fea_written_at(num_nodes, 0),
          grad_written_at(num_nodes, 0) {}

    size_t num_nodes() const { return m_fea.rows(); }
    size_t num_channels() const { return m_fea.cols(); }
    size_t store_bytes() const { return 2 * m_fea.data().size() * sizeof(T); }

    Matrix<T>& store(Store which) { return which == Store::fea ? m_fea : m_grad; }
    const Matrix<T>& store(Store which) const { return which == Store::fea ? m_fea : m_grad; }
    std::vector<uint8_t>& flags(Store which) {
        return which == Store::fea ? fea_initialized : grad_initialized;
    }
    const std::vector<uint8_t>& flags(Store which) const {
        return which == Store::fea ? fea_initialized : grad_initialized;
    }
};

template <class T>
struct GatherResult {
    Matrix<T> rows;
    std::vector<uint8_t> initialized;  // per requested node, in request order
};

// Rows come back in the order of `nodes`. Never-written rows carry whatever
// the store holds (zeros at construction) and are flagged so the caller can
// bypass history mixing for them.
template <class T>
GatherResult<T> gather(const LazyState<T>& state, Store which, const std::vector<uint32_t>& nodes) {
    const Matrix<T>& src = state.store(which);
    const std::vector<uint8_t>& init = state.flags(which);
    GatherResult<T> out;
    out.rows = Matrix<T>(nodes.size(), state.num_channels());
    out.initialized.resize(nodes.size());
    for (size_t i = 0; i < nodes.size(); ++i) {
        uint32_t node = nodes[i];
        if (node >= state.num_nodes()) throw std::out_of_range("gather: node id out of range");
        const T* srow = src.row(node);
        T* drow = out.rows.row(i);
        for (size_t c = 0; c < state.num_channels(); ++c) drow[c] = srow[c];
        out.initialized[i] = init[node];
    }
    return out;
}

// Writes target rows only and marks them initialized. `iteration` feeds the
// staleness diagnostic; callers that do not track iterations pass 0.
template <class T>
void scatter(LazyState<T>& state, Store which, const std::vector<uint32_t>& nodes,
             const Matrix<T>& rows, uint64_t iteration = 0) {
    if (rows.rows() != nodes.size() || rows.cols() != state.num_channels())
        throw std::invalid_argument("scatter: row block shape mismatch");
    Matrix<T>& dst = state.store(which);
    std::vector<uint8_t>& init = state.flags(which);
    std::vector<uint64_t>& written =
        which == Store::fea ? state.fea_written_at : state.grad_written_at;
    for (size_t i = 0; i < nodes.size(); ++i) {
        uint32_t node = nodes[i];
        if (node >= state.num_nodes()) throw std::out_of_range("scatter: node id out of range");
        const T* srow = rows.row(i);
        T* drow = dst.row(node);
        for (size_t c = 0; c < state.num_channels(); ++c) drow[c] = srow[c];
        init[node] = 1;
        written[node] = iteration;
    }
}

// Age of a row's last write relative to current_iteration, or nothing if the
// row was never written.
template <class T>
std::optional<uint64_t> staleness_age(const LazyState<T>& state, Store which, uint32_t node,
                                      uint64_t current_iteration) {
    if (node >= state.num_nodes()) throw std::out_of_range("staleness_age: node id out of range");
    if (!state.flags(which)[node]) return std::nullopt;
    const std::vector<uint64_t>& written =
        which == Store::fea ? state.fea_written_at : state.grad_written_at;
    uint64_t at = written[node];
    return current_iteration >= at ? current_iteration - at : 0;
}

namespace detail {

inline void put_u32(std::string& buf, uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::string& buf, uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline uint32_t get_u32(const char* p) {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return v;
}
inline uint64_t get_u64(const char* p) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return v;
}
inline void put_f64(std::string& buf, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    put_u64(buf, bits);
}
inline double get_f64(const char* p) {
    uint64_t bits = get_u64(p);
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

}  // namespace detail

// Checkpoint layout: magic "LZST", version u32, N u64, C u64, then the m_fea
// rows and the m_grad rows as raw 64-bit little-endian values.
template <class T>
void save_state(const LazyState<T>& state, const std::string& path) {
    std::string buf;
    buf.reserve(24 + 16 * state.m_fea.data().size());
    buf.append("LZST");
    detail::put_u32(buf, 1);
    detail::put_u64(buf, state.num_nodes());
    detail::put_u64(buf, state.num_channels());
    for (T v : state.m_fea.data()) detail::put_f64(buf, static_cast<double>(v));
    for (T v : state.m_grad.data()) detail::put_f64(buf, static_cast<double>(v));
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("save_state: cannot open " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw std::runtime_error("save_state: write failed for " + path);
}

// Reloaded rows are all marked initialized; write ages reset to zero.
template <class T>
LazyState<T> load_state(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_state: cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (buf.size() < 24 || buf.compare(0, 4, "LZST") != 0)
        throw std::runtime_error("load_state: bad magic in " + path);
    uint32_t version = detail::get_u32(buf.data() + 4);
    if (version != 1) throw std::runtime_error("load_state: unsupported version");
    uint64_t n = detail::get_u64(buf.data() + 8);
    uint64_t c = detail::get_u64(buf.data() + 16);
    size_t expected = 24 + 16 * static_cast<size_t>(n) * static_cast<size_t>(c);
    if (buf.size() != expected)
        throw std::runtime_error("load_state: truncated checkpoint " + path);
    LazyState<T> state(static_cast<size_t>(n), static_cast<size_t>(c));
    const char* p = buf.data() + 24;
    for (size_t i = 0; i < state.m_fea.data().size(); ++i, p += 8)
        state.m_fea.data()[i] = static_cast<T>(detail::get_f64(p));
    for (size_t i = 0; i < state.m_grad.data().size(); ++i, p += 8)
        state.m_grad.data()[i] = static_cast<T>(detail::get_f64(p));
    state.fea_initialized.assign(state.num_nodes(), 1);
    state.grad_initialized.assign(state.num_nodes(), 1);
    return state;
}

}  // namespace lazygnn
