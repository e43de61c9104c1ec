#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lazygnn/dataset.hpp"
#include "lazygnn/graph.hpp"
#include "lazygnn/matrix.hpp"
#include "lazygnn/memory.hpp"
#include "lazygnn/mlp.hpp"

namespace lazygnn {

namespace detail {

inline void put_f32(std::string& buf, float v) {
    uint32_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    put_u32(buf, bits);
}

inline float get_f32(const char* p) {
    uint32_t bits = get_u32(p);
    float v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

[[noreturn]] inline void parse_fail(const std::string& path, size_t line, const std::string& msg) {
    std::ostringstream os;
    os << path << ": line " << line << ": " << msg;
    throw std::runtime_error(os.str());
}

inline std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    fields.push_back(trim(cur));
    return fields;
}

inline uint64_t parse_u64(const std::string& s, const std::string& path, size_t line) {
    try {
        size_t pos = 0;
        uint64_t v = std::stoull(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        parse_fail(path, line, "expected a nonnegative integer, got '" + s + "'");
    }
}

inline double parse_f64(const std::string& s, const std::string& path, size_t line) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        parse_fail(path, line, "expected a number, got '" + s + "'");
    }
}

inline bool is_integer_field(const std::string& s) {
    if (s.empty()) return false;
    for (char ch : s)
        if (ch < '0' || ch > '9') return false;
    return true;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline void write_file(const std::string& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace detail

// Whitespace-separated "src dst" pairs, one edge per line; '#' starts a
// comment and blank lines are skipped. Node ids must be < num_nodes.
inline std::vector<std::pair<NodeId, NodeId>> load_edge_list(const std::string& path,
                                                             size_t num_nodes) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<std::pair<NodeId, NodeId>> edges;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ls(line);
        std::string a, b, extra;
        if (!(ls >> a)) continue;
        if (!(ls >> b)) detail::parse_fail(path, lineno, "expected two node ids");
        if (ls >> extra) detail::parse_fail(path, lineno, "trailing content '" + extra + "'");
        uint64_t src = detail::parse_u64(a, path, lineno);
        uint64_t dst = detail::parse_u64(b, path, lineno);
        if (src >= num_nodes || dst >= num_nodes)
            detail::parse_fail(path, lineno, "node id exceeds node count");
        edges.emplace_back(static_cast<NodeId>(src), static_cast<NodeId>(dst));
    }
    return edges;
}

// Undirected edges of a stored graph: upper-triangle off-diagonal entries.
// Reloading through build_graph + normalize reproduces the operator exactly
// because normalization re-derives values from degrees.
template <class T>
std::vector<std::pair<NodeId, NodeId>> extract_edges(const SparseGraph<T>& g) {
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (size_t i = 0; i < g.num_nodes; ++i)
        for (size_t k = g.row_ptr[i]; k < g.row_ptr[i + 1]; ++k)
            if (g.col_idx[k] > i) edges.emplace_back(static_cast<NodeId>(i), g.col_idx[k]);
    return edges;
}

inline void write_edge_list(const std::string& path,
                            const std::vector<std::pair<NodeId, NodeId>>& edges) {
    std::ostringstream os;
    for (const auto& [s, d] : edges) os << s << '\t' << d << '\n';
    detail::write_file(path, os.str());
}

// Feature matrix container: magic "LZFT", version u32, N u64, d u64, then
// row-major float32 values, all little-endian.
template <class T>
void write_features_binary(const std::string& path, const Matrix<T>& m) {
    std::string buf;
    buf.reserve(24 + 4 * m.data().size());
    buf.append("LZFT");
    detail::put_u32(buf, 1);
    detail::put_u64(buf, m.rows());
    detail::put_u64(buf, m.cols());
    for (T v : m.data()) detail::put_f32(buf, static_cast<float>(v));
    detail::write_file(path, buf);
}

template <class T>
void write_features_csv(const std::string& path, const Matrix<T>& m) {
    std::ostringstream os;
    os.precision(9);
    os << "node_id";
    for (size_t c = 0; c < m.cols(); ++c) os << ",f" << c;
    os << '\n';
    for (size_t i = 0; i < m.rows(); ++i) {
        os << i;
        for (size_t c = 0; c < m.cols(); ++c) os << ',' << m(i, c);
        os << '\n';
    }
    detail::write_file(path, os.str());
}

// Accepts either the binary container (detected by magic) or CSV rows
// "node_id,f0,...,f{d-1}" with an optional header.
template <class T>
Matrix<T> load_features(const std::string& path) {
    std::string buf = detail::read_file(path);
    if (buf.size() >= 4 && buf.compare(0, 4, "LZFT") == 0) {
        if (buf.size() < 24) throw std::runtime_error(path + ": truncated feature header");
        uint32_t version = detail::get_u32(buf.data() + 4);
        if (version != 1) throw std::runtime_error(path + ": unsupported feature version");
        uint64_t n = detail::get_u64(buf.data() + 8);
        uint64_t d = detail::get_u64(buf.data() + 16);
        if (buf.size() != 24 + 4 * n * d) throw std::runtime_error(path + ": truncated feature data");
        Matrix<T> m(static_cast<size_t>(n), static_cast<size_t>(d));
        const char* p = buf.data() + 24;
        for (size_t i = 0; i < m.data().size(); ++i, p += 4)
            m.data()[i] = static_cast<T>(detail::get_f32(p));
        return m;
    }
    std::istringstream in(buf);
    std::string line;
    size_t lineno = 0;
    std::vector<std::vector<T>> rows;
    size_t dims = 0;
    size_t expect = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto fields = detail::split_csv(t);
        if (lineno == 1 && !detail::is_integer_field(fields[0])) continue;  // header
        if (fields.size() < 2) detail::parse_fail(path, lineno, "expected node_id and features");
        uint64_t id = detail::parse_u64(fields[0], path, lineno);
        if (id != expect)
            detail::parse_fail(path, lineno, "node ids must be consecutive from 0");
        ++expect;
        if (dims == 0)
            dims = fields.size() - 1;
        else if (fields.size() - 1 != dims)
            detail::parse_fail(path, lineno, "inconsistent feature width");
        std::vector<T> row(dims);
        for (size_t c = 0; c < dims; ++c)
            row[c] = static_cast<T>(detail::parse_f64(fields[c + 1], path, lineno));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error(path + ": no feature rows");
    Matrix<T> m(rows.size(), dims);
    for (size_t i = 0; i < rows.size(); ++i)
        for (size_t c = 0; c < dims; ++c) m(i, c) = rows[i][c];
    return m;
}

// CSV "node_id,class"; every node in [0, num_nodes) must appear exactly once.
inline std::vector<uint32_t> load_labels(const std::string& path, size_t num_nodes) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<uint32_t> labels(num_nodes, 0);
    std::vector<uint8_t> seen(num_nodes, 0);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto fields = detail::split_csv(t);
        if (lineno == 1 && !detail::is_integer_field(fields[0])) continue;
        if (fields.size() != 2) detail::parse_fail(path, lineno, "expected node_id,class");
        uint64_t id = detail::parse_u64(fields[0], path, lineno);
        if (id >= num_nodes) detail::parse_fail(path, lineno, "node id exceeds node count");
        if (seen[id]) detail::parse_fail(path, lineno, "duplicate label for node " + fields[0]);
        seen[id] = 1;
        labels[id] = static_cast<uint32_t>(detail::parse_u64(fields[1], path, lineno));
    }
    for (size_t i = 0; i < num_nodes; ++i)
        if (!seen[i])
            throw std::runtime_error(path + ": missing label for node " + std::to_string(i));
    return labels;
}

inline void write_labels(const std::string& path, const std::vector<uint32_t>& labels) {
    std::ostringstream os;
    os << "node_id,class\n";
    for (size_t i = 0; i < labels.size(); ++i) os << i << ',' << labels[i] << '\n';
    detail::write_file(path, os.str());
}

// CSV "node_id,{train|val|test}"; every node must appear exactly once.
inline std::vector<uint8_t> load_split(const std::string& path, size_t num_nodes) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<uint8_t> split(num_nodes, kSplitTest);
    std::vector<uint8_t> seen(num_nodes, 0);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto fields = detail::split_csv(t);
        if (lineno == 1 && !detail::is_integer_field(fields[0])) continue;
        if (fields.size() != 2) detail::parse_fail(path, lineno, "expected node_id,split");
        uint64_t id = detail::parse_u64(fields[0], path, lineno);
        if (id >= num_nodes) detail::parse_fail(path, lineno, "node id exceeds node count");
        if (seen[id]) detail::parse_fail(path, lineno, "duplicate split for node " + fields[0]);
        seen[id] = 1;
        if (fields[1] == "train")
            split[id] = kSplitTrain;
        else if (fields[1] == "val")
            split[id] = kSplitVal;
        else if (fields[1] == "test")
            split[id] = kSplitTest;
        else
            detail::parse_fail(path, lineno, "unknown split '" + fields[1] + "'");
    }
    for (size_t i = 0; i < num_nodes; ++i)
        if (!seen[i])
            throw std::runtime_error(path + ": missing split for node " + std::to_string(i));
    return split;
}

inline void write_split(const std::string& path, const std::vector<uint8_t>& split) {
    static const char* names[] = {"train", "val", "test"};
    std::ostringstream os;
    os << "node_id,split\n";
    for (size_t i = 0; i < split.size(); ++i) {
        if (split[i] > kSplitTest) throw std::invalid_argument("write_split: value out of range");
        os << i << ',' << names[split[i]] << '\n';
    }
    detail::write_file(path, os.str());
}

// Node count comes from the feature file; the edge list, labels, and split
// must agree with it. An empty split path assigns 60/20/20 from the seed.
template <class T>
Dataset<T> load_dataset(const std::string& edges_path, const std::string& features_path,
                        const std::string& labels_path, const std::string& split_path,
                        uint64_t split_seed) {
    Dataset<T> ds;
    ds.features = load_features<T>(features_path);
    const size_t n = ds.features.rows();
    auto edges = load_edge_list(edges_path, n);
    ds.graph = normalize(build_graph<T>(edges, n), /*add_self_loops=*/true);
    ds.labels = load_labels(labels_path, n);
    uint32_t top = 0;
    for (uint32_t l : ds.labels) top = std::max(top, l);
    ds.num_classes = static_cast<size_t>(top) + 1;
    if (split_path.empty()) {
        Rng rng = Rng(split_seed).derive(3);
        ds.split = make_split(n, 0.6, 0.2, rng);
    } else {
        ds.split = load_split(split_path, n);
    }
    ds.validate();
    return ds;
}

// Flat "key = value" config lines; '#' starts a comment. Duplicate keys are
// an error so overrides stay explicit at the CLI layer.
inline std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::string t = detail::trim(line);
        if (t.empty()) continue;
        size_t eq = t.find('=');
        if (eq == std::string::npos) detail::parse_fail(path, lineno, "expected key = value");
        std::string key = detail::trim(t.substr(0, eq));
        std::string value = detail::trim(t.substr(eq + 1));
        if (key.empty()) detail::parse_fail(path, lineno, "empty key");
        if (kv.count(key)) detail::parse_fail(path, lineno, "duplicate key '" + key + "'");
        kv[key] = value;
    }
    return kv;
}

inline void write_config(const std::string& path,
                         const std::vector<std::pair<std::string, std::string>>& kv) {
    std::ostringstream os;
    for (const auto& [k, v] : kv) os << k << " = " << v << '\n';
    detail::write_file(path, os.str());
}

// Model checkpoint: magic "LZMP", version u32, layer count u32, dropout f64,
// then per layer in_dim u64, out_dim u64, row-major f64 weights, f64 biases.
template <class T>
void save_model(const MlpParams<T>& p, const std::string& path) {
    std::string buf;
    buf.append("LZMP");
    detail::put_u32(buf, 1);
    detail::put_u32(buf, static_cast<uint32_t>(p.num_layers()));
    detail::put_f64(buf, static_cast<double>(p.dropout_rate));
    for (size_t l = 0; l < p.num_layers(); ++l) {
        detail::put_u64(buf, p.weights[l].rows());
        detail::put_u64(buf, p.weights[l].cols());
        for (T v : p.weights[l].data()) detail::put_f64(buf, static_cast<double>(v));
        for (T v : p.biases[l]) detail::put_f64(buf, static_cast<double>(v));
    }
    detail::write_file(path, buf);
}

template <class T>
MlpParams<T> load_model(const std::string& path) {
    std::string buf = detail::read_file(path);
    if (buf.size() < 20 || buf.compare(0, 4, "LZMP") != 0)
        throw std::runtime_error(path + ": not a model checkpoint");
    if (detail::get_u32(buf.data() + 4) != 1)
        throw std::runtime_error(path + ": unsupported model version");
    uint32_t layers = detail::get_u32(buf.data() + 8);
    MlpParams<T> p;
    p.dropout_rate = static_cast<T>(detail::get_f64(buf.data() + 12));
    size_t off = 20;
    auto need = [&](size_t bytes) {
        if (off + bytes > buf.size()) throw std::runtime_error(path + ": truncated model data");
    };
    for (uint32_t l = 0; l < layers; ++l) {
        need(16);
        uint64_t rows = detail::get_u64(buf.data() + off);
        uint64_t cols = detail::get_u64(buf.data() + off + 8);
        off += 16;
        need(8 * (rows * cols + cols));
        Matrix<T> w(static_cast<size_t>(rows), static_cast<size_t>(cols));
        for (size_t i = 0; i < w.data().size(); ++i, off += 8)
            w.data()[i] = static_cast<T>(detail::get_f64(buf.data() + off));
        std::vector<T> b(static_cast<size_t>(cols));
        for (size_t i = 0; i < b.size(); ++i, off += 8)
            b[i] = static_cast<T>(detail::get_f64(buf.data() + off));
        p.weights.push_back(std::move(w));
        p.biases.push_back(std::move(b));
    }
    if (off != buf.size()) throw std::runtime_error(path + ": trailing bytes in model file");
    p.validate();
    return p;
}

}  // namespace lazygnn
