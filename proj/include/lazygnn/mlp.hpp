#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "lazygnn/matrix.hpp"
#include "lazygnn/rng.hpp"

namespace lazygnn {

// Feature transformation f(X, theta): dense layers with a rectifier between
// them, identity at the output, inverted dropout after each hidden activation.
template <class T>
struct MlpParams {
    std::vector<Matrix<T>> weights;       // layer l maps in_l -> out_l
    std::vector<std::vector<T>> biases;   // one vector per layer
    T dropout_rate = T(0);

    size_t num_layers() const { return weights.size(); }

    void validate() const {
        if (weights.empty() || weights.size() != biases.size())
            throw std::invalid_argument("MlpParams: layer lists inconsistent");
        for (size_t l = 0; l < weights.size(); ++l) {
            if (biases[l].size() != weights[l].cols())
                throw std::invalid_argument("MlpParams: bias width mismatch");
            if (l + 1 < weights.size() && weights[l].cols() != weights[l + 1].rows())
                throw std::invalid_argument("MlpParams: layer dimensions do not chain");
        }
        if (dropout_rate < T(0) || dropout_rate >= T(1))
            throw std::invalid_argument("MlpParams: dropout_rate must lie in [0, 1)");
    }
};

// Glorot-uniform weights, zero biases. dims = {in, hidden..., out}.
template <class T>
MlpParams<T> init_mlp(const std::vector<size_t>& dims, T dropout_rate, Rng& rng) {
    if (dims.size() < 2) throw std::invalid_argument("init_mlp: need at least input and output dims");
    MlpParams<T> p;
    p.dropout_rate = dropout_rate;
    for (size_t l = 0; l + 1 < dims.size(); ++l) {
        size_t fan_in = dims[l], fan_out = dims[l + 1];
        T bound = std::sqrt(T(6) / static_cast<T>(fan_in + fan_out));
        Matrix<T> w(fan_in, fan_out);
        for (T& v : w.data()) v = static_cast<T>(rng.uniform(-static_cast<double>(bound),
                                                             static_cast<double>(bound)));
        p.weights.push_back(std::move(w));
        p.biases.emplace_back(fan_out, T(0));
    }
    p.validate();
    return p;
}

// Training-mode byproducts needed by the exact backward pass. masks hold the
// inverted dropout scaling {0, 1/(1-p)}; the last layer has no mask.
template <class T>
struct ForwardCache {
    std::vector<Matrix<T>> inputs;            // input to each layer
    std::vector<Matrix<T>> pre_activations;   // z = input W + b
    std::vector<Matrix<T>> dropout_masks;     // per hidden layer
};

enum class MlpMode { train, eval };

// Eval mode applies no dropout and fills no cache. Train mode draws one mask
// per hidden layer from rng, so a fixed rng state reproduces outputs exactly.
template <class T>
Matrix<T> mlp_forward(const MlpParams<T>& p, const Matrix<T>& x, MlpMode mode, Rng& rng,
                      ForwardCache<T>* cache = nullptr) {
    if (x.cols() != p.weights.front().rows())
        throw std::invalid_argument("mlp_forward: input width mismatch");
    const bool training = mode == MlpMode::train;
    if (training && cache == nullptr)
        throw std::invalid_argument("mlp_forward: train mode requires a cache");
    if (cache) {
        cache->inputs.clear();
        cache->pre_activations.clear();
        cache->dropout_masks.clear();
    }
    Matrix<T> h = x;
    for (size_t l = 0; l < p.num_layers(); ++l) {
        Matrix<T> z = matmul(h, p.weights[l]);
        for (size_t i = 0; i < z.rows(); ++i) {
            T* row = z.row(i);
            for (size_t j = 0; j < z.cols(); ++j) row[j] += p.biases[l][j];
        }
        if (cache) {
            cache->inputs.push_back(std::move(h));
            cache->pre_activations.push_back(z);
        }
        if (l + 1 == p.num_layers()) {
            h = std::move(z);
            break;
        }
        for (T& v : z.data()) v = v > T(0) ? v : T(0);
        if (training && p.dropout_rate > T(0)) {
            Matrix<T> mask(z.rows(), z.cols());
            const T keep_scale = T(1) / (T(1) - p.dropout_rate);
            for (T& m : mask.data())
                m = rng.uniform() >= static_cast<double>(p.dropout_rate) ? keep_scale : T(0);
            for (size_t i = 0; i < z.data().size(); ++i) z.data()[i] *= mask.data()[i];
            if (cache) cache->dropout_masks.push_back(std::move(mask));
        } else if (cache) {
            cache->dropout_masks.emplace_back();  // empty mask means identity
        }
        h = std::move(z);
    }
    return h;
}

template <class T>
struct MlpGrads {
    std::vector<Matrix<T>> weights;
    std::vector<std::vector<T>> biases;
};

// Exact reverse-mode gradients of the cached forward map. The rectifier
// subgradient at 0 is taken as 0.
template <class T>
MlpGrads<T> mlp_backward(const MlpParams<T>& p, const ForwardCache<T>& cache,
                         const Matrix<T>& grad_out) {
    if (cache.inputs.size() != p.num_layers())
        throw std::invalid_argument("mlp_backward: cache does not match the parameter stack");
    MlpGrads<T> grads;
    grads.weights.resize(p.num_layers());
    grads.biases.resize(p.num_layers());
    Matrix<T> g = grad_out;
    for (size_t li = p.num_layers(); li > 0; --li) {
        size_t l = li - 1;
        grads.weights[l] = matmul_at_b(cache.inputs[l], g);
        grads.biases[l].assign(p.weights[l].cols(), T(0));
        for (size_t i = 0; i < g.rows(); ++i) {
            const T* row = g.row(i);
            for (size_t j = 0; j < g.cols(); ++j) grads.biases[l][j] += row[j];
        }
        if (l == 0) break;
        g = matmul_a_bt(g, p.weights[l]);
        const Matrix<T>& z = cache.pre_activations[l - 1];
        const Matrix<T>& mask = cache.dropout_masks[l - 1];
        for (size_t i = 0; i < g.data().size(); ++i) {
            T factor = z.data()[i] > T(0) ? T(1) : T(0);
            if (!mask.data().empty()) factor *= mask.data()[i];
            g.data()[i] *= factor;
        }
    }
    return grads;
}

// Loss averaged over masked rows; gradient rows outside the mask stay exactly
// zero. Numerically stabilized by the row-max shift.
template <class T>
std::pair<T, Matrix<T>> softmax_cross_entropy(const Matrix<T>& logits,
                                              const std::vector<uint32_t>& labels,
                                              const std::vector<uint8_t>& mask) {
    if (labels.size() != logits.rows() || mask.size() != logits.rows())
        throw std::invalid_argument("softmax_cross_entropy: row count mismatch");
    size_t count = 0;
    for (uint8_t m : mask)
        if (m) ++count;
    if (count == 0) throw std::invalid_argument("softmax_cross_entropy: empty mask");
    const size_t classes = logits.cols();
    Matrix<T> grad(logits.rows(), classes);
    T loss = 0;
    for (size_t i = 0; i < logits.rows(); ++i) {
        if (!mask[i]) continue;
        if (labels[i] >= classes)
            throw std::invalid_argument("softmax_cross_entropy: label out of range");
        const T* row = logits.row(i);
        T max = row[0];
        for (size_t j = 1; j < classes; ++j) max = std::max(max, row[j]);
        T sum = 0;
        for (size_t j = 0; j < classes; ++j) sum += std::exp(row[j] - max);
        loss += std::log(sum) - (row[labels[i]] - max);
        T* grow = grad.row(i);
        for (size_t j = 0; j < classes; ++j) grow[j] = std::exp(row[j] - max) / sum;
        grow[labels[i]] -= T(1);
    }
    const T inv = T(1) / static_cast<T>(count);
    loss *= inv;
    for (size_t i = 0; i < logits.rows(); ++i) {
        if (!mask[i]) continue;
        T* grow = grad.row(i);
        for (size_t j = 0; j < classes; ++j) grow[j] *= inv;
    }
    return {loss, grad};
}

// Adam with bias correction and decoupled weight decay (wd * lr * theta
// subtracted after the moment update).
template <class T>
struct AdamState {
    T lr;
    T weight_decay;
    T beta1 = T(0.9);
    T beta2 = T(0.999);
    T eps = T(1e-8);
    size_t step = 0;
    std::vector<Matrix<T>> m_weights, v_weights;
    std::vector<std::vector<T>> m_biases, v_biases;

    AdamState(const MlpParams<T>& p, T lr_, T weight_decay_) : lr(lr_), weight_decay(weight_decay_) {
        for (size_t l = 0; l < p.num_layers(); ++l) {
            m_weights.emplace_back(p.weights[l].rows(), p.weights[l].cols());
            v_weights.emplace_back(p.weights[l].rows(), p.weights[l].cols());
            m_biases.emplace_back(p.biases[l].size(), T(0));
            v_biases.emplace_back(p.biases[l].size(), T(0));
        }
    }
};

namespace detail {

template <class T>
void adam_update_span(T* theta, T* m, T* v, const T* g, size_t n, const AdamState<T>& s,
                      T bc1, T bc2) {
    for (size_t i = 0; i < n; ++i) {
        m[i] = s.beta1 * m[i] + (T(1) - s.beta1) * g[i];
        v[i] = s.beta2 * v[i] + (T(1) - s.beta2) * g[i] * g[i];
        const T mhat = m[i] / bc1;
        const T vhat = v[i] / bc2;
        theta[i] -= s.lr * mhat / (std::sqrt(vhat) + s.eps) + s.lr * s.weight_decay * theta[i];
    }
}

}  // namespace detail

template <class T>
void adam_step(AdamState<T>& state, MlpParams<T>& p, const MlpGrads<T>& grads) {
    if (grads.weights.size() != p.num_layers())
        throw std::invalid_argument("adam_step: gradient stack mismatch");
    ++state.step;
    const T bc1 = T(1) - std::pow(state.beta1, static_cast<T>(state.step));
    const T bc2 = T(1) - std::pow(state.beta2, static_cast<T>(state.step));
    for (size_t l = 0; l < p.num_layers(); ++l) {
        if (!grads.weights[l].same_shape(p.weights[l]))
            throw std::invalid_argument("adam_step: weight gradient shape mismatch");
        detail::adam_update_span(p.weights[l].data().data(), state.m_weights[l].data().data(),
                                 state.v_weights[l].data().data(), grads.weights[l].data().data(),
                                 p.weights[l].data().size(), state, bc1, bc2);
        detail::adam_update_span(p.biases[l].data(), state.m_biases[l].data(),
                                 state.v_biases[l].data(), grads.biases[l].data(),
                                 p.biases[l].size(), state, bc1, bc2);
    }
}

// Central differences of a scalar function of the parameters; the test oracle
// for the manual backward passes. fn must be deterministic.
template <class T>
MlpGrads<T> finite_difference(const std::function<T(const MlpParams<T>&)>& fn, MlpParams<T> p,
                              T eps) {
    MlpGrads<T> out;
    out.weights.resize(p.num_layers());
    out.biases.resize(p.num_layers());
    for (size_t l = 0; l < p.num_layers(); ++l) {
        out.weights[l] = Matrix<T>(p.weights[l].rows(), p.weights[l].cols());
        for (size_t i = 0; i < p.weights[l].data().size(); ++i) {
            T saved = p.weights[l].data()[i];
            p.weights[l].data()[i] = saved + eps;
            T up = fn(p);
            p.weights[l].data()[i] = saved - eps;
            T down = fn(p);
            p.weights[l].data()[i] = saved;
            out.weights[l].data()[i] = (up - down) / (T(2) * eps);
        }
        out.biases[l].assign(p.biases[l].size(), T(0));
        for (size_t i = 0; i < p.biases[l].size(); ++i) {
            T saved = p.biases[l][i];
            p.biases[l][i] = saved + eps;
            T up = fn(p);
            p.biases[l][i] = saved - eps;
            T down = fn(p);
            p.biases[l][i] = saved;
            out.biases[l][i] = (up - down) / (T(2) * eps);
        }
    }
    return out;
}

}  // namespace lazygnn
