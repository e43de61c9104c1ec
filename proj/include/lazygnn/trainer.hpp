#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lazygnn/graph.hpp"
#include "lazygnn/matrix.hpp"
#include "lazygnn/memory.hpp"
#include "lazygnn/mlp.hpp"
#include "lazygnn/propagation.hpp"
#include "lazygnn/rng.hpp"

namespace lazygnn {

// Split encoding shared by datasets and trainers.
inline constexpr uint8_t kSplitTrain = 0;
inline constexpr uint8_t kSplitVal = 1;
inline constexpr uint8_t kSplitTest = 2;

template <class T>
struct TrainConfig {
    size_t epochs = 1;
    size_t batch_size = 0;  // 0 = full batch, otherwise target nodes per batch
    T lr = T(0.01);
    T weight_decay = T(0);
    T dropout = T(0);
    uint64_t seed = 1;
    Hyperparams<T> hp{T(0.5), T(0.5), T(0.5), 1};
    size_t eval_every = 1;
    size_t inference_layers = 1;
    std::vector<size_t> hidden_dims = {32};

    void validate(size_t num_nodes) const {
        if (epochs == 0) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
        if (batch_size > num_nodes)
            throw std::invalid_argument("TrainConfig: batch_size exceeds node count");
        if (!(lr >= T(0)) || !std::isfinite(static_cast<double>(lr)))
            throw std::invalid_argument("TrainConfig: lr must be finite and >= 0");
        if (dropout < T(0) || dropout >= T(1))
            throw std::invalid_argument("TrainConfig: dropout must lie in [0, 1)");
        if (eval_every == 0) throw std::invalid_argument("TrainConfig: eval_every must be >= 1");
        if (inference_layers == 0)
            throw std::invalid_argument("TrainConfig: inference_layers must be >= 1");
        for (size_t h : hidden_dims)
            if (h == 0) throw std::invalid_argument("TrainConfig: hidden dims must be >= 1");
    }
};

struct EpochRecord {
    size_t epoch = 0;        // 1-based
    size_t iter = 0;         // cumulative batch iterations at the end of the epoch
    double train_loss = 0;   // mean loss over this epoch's optimizer steps
    double val_accuracy = std::numeric_limits<double>::quiet_NaN();  // NaN off-schedule
    double redundancy = 0;   // relative feature change on the probe set
    double wall_time_ms = 0;
    size_t peak_store_bytes = 0;
};

// ||cur - prev||_F / ||prev||_F.
template <class T>
T redundancy_probe(const Matrix<T>& prev_xl, const Matrix<T>& cur_xl) {
    check_same_shape(prev_xl, cur_xl, "redundancy_probe");
    T denom = frobenius_norm(prev_xl);
    if (denom == T(0)) throw std::invalid_argument("redundancy_probe: zero-norm previous matrix");
    return frobenius_distance(cur_xl, prev_xl) / denom;
}

namespace detail {

// Convex row mix of history and fresh values with a per-row cold-start
// bypass: uninitialized rows take the fresh value unmixed.
template <class T>
Matrix<T> mix_with_history(const Matrix<T>& history_rows, const std::vector<uint8_t>& initialized,
                           const Matrix<T>& fresh, T mix_fresh) {
    check_same_shape(history_rows, fresh, "mix_with_history");
    Matrix<T> out = fresh;
    for (size_t i = 0; i < fresh.rows(); ++i) {
        if (!initialized[i]) continue;
        const T* hrow = history_rows.row(i);
        T* orow = out.row(i);
        for (size_t c = 0; c < fresh.cols(); ++c)
            orow[c] = (T(1) - mix_fresh) * hrow[c] + mix_fresh * orow[c];
    }
    return out;
}

template <class T>
Matrix<T> take_rows(const Matrix<T>& src, const std::vector<uint32_t>& ids) {
    Matrix<T> out(ids.size(), src.cols());
    for (size_t i = 0; i < ids.size(); ++i) {
        const T* srow = src.row(ids[i]);
        T* drow = out.row(i);
        for (size_t c = 0; c < src.cols(); ++c) drow[c] = srow[c];
    }
    return out;
}

}  // namespace detail

// Orchestrates lazy training. batch_size = 0 runs the full-batch loop where
// one epoch is one optimizer step; otherwise each epoch shuffles the train
// targets and steps once per batch.
template <class T>
class Trainer {
public:
    Trainer(const SparseGraph<T>& graph, const Matrix<T>& features,
            const std::vector<uint32_t>& labels, const std::vector<uint8_t>& split,
            const TrainConfig<T>& cfg)
        : graph_(graph),
          features_(features),
          labels_(labels),
          split_(split),
          cfg_(cfg),
          rng_init_(Rng(cfg.seed).derive(1)),
          rng_dropout_(Rng(cfg.seed).derive(2)),
          rng_shuffle_(Rng(cfg.seed).derive(3)),
          rng_probe_(Rng(cfg.seed).derive(4)),
          params_(make_params(features, labels, cfg, rng_init_)),
          adam_(params_, cfg.lr, cfg.weight_decay),
          state_(graph.num_nodes, num_classes_from(labels)),
          prev_probe_(0, 0) {
        const size_t n = graph_.num_nodes;
        cfg_.validate(n);
        if (features_.rows() != n || labels_.size() != n || split_.size() != n)
            throw std::invalid_argument("Trainer: node count mismatch across inputs");
        for (uint8_t s : split_)
            if (s > kSplitTest) throw std::invalid_argument("Trainer: split value out of range");
        num_classes_ = num_classes_from(labels_);
        for (size_t i = 0; i < n; ++i)
            if (split_[i] == kSplitTrain) train_ids_.push_back(static_cast<uint32_t>(i));
        if (train_ids_.empty()) throw std::invalid_argument("Trainer: no train nodes in split");
        if (n <= 1024 || cfg_.batch_size == 0) {
            probe_nodes_.resize(n);
            for (size_t i = 0; i < n; ++i) probe_nodes_[i] = static_cast<uint32_t>(i);
        } else {
            auto perm = rng_probe_.permutation(n);
            probe_nodes_.assign(perm.begin(), perm.begin() + 1024);
            std::sort(probe_nodes_.begin(), probe_nodes_.end());
        }
    }

    // One optimizer step over a target set. Batches whose targets carry no
    // train labels still refresh the feature store but skip the gradient
    // side and the optimizer. Returns (loss, stepped).
    std::pair<T, bool> step_on_targets(const std::vector<uint32_t>& targets) {
        ++iter_;
        SubgraphBatch<T> batch = sample_lhop(graph_, targets, cfg_.hp.layers);
        const auto& closure = batch.closure;
        Matrix<T> x_batch = detail::take_rows(features_, closure);
        ForwardCache<T> cache;
        Matrix<T> x_in = mlp_forward(params_, x_batch, MlpMode::train, rng_dropout_, &cache);

        GatherResult<T> fea = gather(state_, Store::fea, closure);
        Matrix<T> x0 = detail::mix_with_history(fea.rows, fea.initialized, x_in, cfg_.hp.beta);
        Matrix<T> x_l = propagate_forward(batch.local_graph, x0, x_in, cfg_.hp.alpha, cfg_.hp.layers);

        std::vector<uint32_t> target_ids(batch.targets.begin(), batch.targets.end());
        Matrix<T> target_rows(target_ids.size(), num_classes_);
        for (size_t i = 0; i < target_ids.size(); ++i)
            for (size_t c = 0; c < num_classes_; ++c) target_rows(i, c) = x_l(i, c);
        scatter(state_, Store::fea, target_ids, target_rows, iter_);

        std::vector<uint8_t> loss_mask(closure.size(), 0);
        std::vector<uint32_t> local_labels(closure.size(), 0);
        size_t labeled = 0;
        for (size_t i = 0; i < closure.size(); ++i) {
            local_labels[i] = labels_[closure[i]];
            if (i < target_ids.size() && split_[closure[i]] == kSplitTrain) {
                loss_mask[i] = 1;
                ++labeled;
            }
        }
        if (labeled == 0) return {T(0), false};

        auto [loss, grad_top] = softmax_cross_entropy(x_l, local_labels, loss_mask);

        GatherResult<T> gra = gather(state_, Store::grad, closure);
        Matrix<T> g_seed = detail::mix_with_history(gra.rows, gra.initialized, grad_top, cfg_.hp.gamma);
        Matrix<T> g0 = propagate_forward(batch.local_graph, g_seed, grad_top, cfg_.hp.alpha,
                                         cfg_.hp.layers);
        Matrix<T> grad_rows(target_ids.size(), num_classes_);
        for (size_t i = 0; i < target_ids.size(); ++i)
            for (size_t c = 0; c < num_classes_; ++c) grad_rows(i, c) = g0(i, c);
        scatter(state_, Store::grad, target_ids, grad_rows, iter_);

        MlpGrads<T> grads = mlp_backward(params_, cache, g0);
        adam_step(adam_, params_, grads);
        return {loss, true};
    }

    EpochRecord run_epoch() {
        auto t0 = std::chrono::steady_clock::now();
        ++epoch_;
        double loss_sum = 0;
        size_t steps = 0;
        if (cfg_.batch_size == 0) {
            auto [loss, stepped] = full_batch_step();
            loss_sum += static_cast<double>(loss);
            steps = stepped ? 1 : 0;
        } else {
            auto order = rng_shuffle_.permutation(train_ids_.size());
            for (size_t begin = 0; begin < order.size(); begin += cfg_.batch_size) {
                size_t end = std::min(begin + cfg_.batch_size, order.size());
                std::vector<uint32_t> targets;
                targets.reserve(end - begin);
                for (size_t i = begin; i < end; ++i) targets.push_back(train_ids_[order[i]]);
                auto [loss, stepped] = step_on_targets(targets);
                if (stepped) {
                    loss_sum += static_cast<double>(loss);
                    ++steps;
                }
            }
        }
        EpochRecord rec;
        rec.epoch = epoch_;
        rec.iter = iter_;
        rec.train_loss = steps ? loss_sum / static_cast<double>(steps)
                               : std::numeric_limits<double>::quiet_NaN();
        rec.peak_store_bytes = state_.store_bytes();
        Matrix<T> probe = detail::take_rows(state_.m_fea, probe_nodes_);
        if (prev_probe_.rows() == probe.rows() && frobenius_norm(prev_probe_) > T(0))
            rec.redundancy = static_cast<double>(redundancy_probe(prev_probe_, probe));
        prev_probe_ = std::move(probe);
        if (epoch_ % cfg_.eval_every == 0) {
            std::vector<uint8_t> val_mask(split_.size(), 0);
            size_t val_count = 0;
            for (size_t i = 0; i < split_.size(); ++i)
                if (split_[i] == kSplitVal) {
                    val_mask[i] = 1;
                    ++val_count;
                }
            if (val_count)
                rec.val_accuracy = static_cast<double>(
                    evaluate(params_, state_, graph_, features_, labels_, val_mask, cfg_));
        }
        auto t1 = std::chrono::steady_clock::now();
        rec.wall_time_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        return rec;
    }

    std::vector<EpochRecord> run() {
        std::vector<EpochRecord> records;
        records.reserve(cfg_.epochs);
        for (size_t e = 0; e < cfg_.epochs; ++e) records.push_back(run_epoch());
        return records;
    }

    const MlpParams<T>& params() const { return params_; }
    MlpParams<T>& params() { return params_; }
    const LazyState<T>& state() const { return state_; }
    LazyState<T>& state() { return state_; }
    const TrainConfig<T>& config() const { return cfg_; }
    size_t num_classes() const { return num_classes_; }
    size_t iterations() const { return iter_; }

private:
    static size_t num_classes_from(const std::vector<uint32_t>& labels) {
        uint32_t top = 0;
        for (uint32_t l : labels) top = std::max(top, l);
        return static_cast<size_t>(top) + 1;
    }

    static MlpParams<T> make_params(const Matrix<T>& features, const std::vector<uint32_t>& labels,
                                    const TrainConfig<T>& cfg, Rng& rng_init) {
        std::vector<size_t> dims;
        dims.push_back(features.cols());
        for (size_t h : cfg.hidden_dims) dims.push_back(h);
        dims.push_back(num_classes_from(labels));
        return init_mlp(dims, cfg.dropout, rng_init);
    }

    // Full batch: the whole graph is the closure and every node is a target,
    // so histories mix per node exactly as in the mini-batch step.
    std::pair<T, bool> full_batch_step() {
        ++iter_;
        ForwardCache<T> cache;
        Matrix<T> x_in = mlp_forward(params_, features_, MlpMode::train, rng_dropout_, &cache);
        GatherResult<T> fea = gather(state_, Store::fea, probe_all_ids());
        Matrix<T> x0 = detail::mix_with_history(fea.rows, fea.initialized, x_in, cfg_.hp.beta);
        Matrix<T> x_l = propagate_forward(graph_, x0, x_in, cfg_.hp.alpha, cfg_.hp.layers);
        scatter(state_, Store::fea, probe_all_ids(), x_l, iter_);

        std::vector<uint8_t> train_mask(split_.size(), 0);
        for (size_t i = 0; i < split_.size(); ++i)
            if (split_[i] == kSplitTrain) train_mask[i] = 1;
        auto [loss, grad_top] = softmax_cross_entropy(x_l, labels_, train_mask);

        GatherResult<T> gra = gather(state_, Store::grad, probe_all_ids());
        Matrix<T> g_seed = detail::mix_with_history(gra.rows, gra.initialized, grad_top, cfg_.hp.gamma);
        Matrix<T> g0 = propagate_forward(graph_, g_seed, grad_top, cfg_.hp.alpha, cfg_.hp.layers);
        scatter(state_, Store::grad, probe_all_ids(), g0, iter_);

        MlpGrads<T> grads = mlp_backward(params_, cache, g0);
        adam_step(adam_, params_, grads);
        return {loss, true};
    }

    const std::vector<uint32_t>& probe_all_ids() {
        if (all_ids_.size() != graph_.num_nodes) {
            all_ids_.resize(graph_.num_nodes);
            for (size_t i = 0; i < graph_.num_nodes; ++i) all_ids_[i] = static_cast<uint32_t>(i);
        }
        return all_ids_;
    }

    const SparseGraph<T>& graph_;
    const Matrix<T>& features_;
    const std::vector<uint32_t>& labels_;
    const std::vector<uint8_t>& split_;
    TrainConfig<T> cfg_;
    Rng rng_init_, rng_dropout_, rng_shuffle_, rng_probe_;
    MlpParams<T> params_;
    AdamState<T> adam_;
    LazyState<T> state_;
    Matrix<T> prev_probe_;
    std::vector<uint32_t> probe_nodes_;
    std::vector<uint32_t> train_ids_;
    std::vector<uint32_t> all_ids_;
    size_t num_classes_ = 0;
    size_t epoch_ = 0;
    uint64_t iter_ = 0;
};

// Eval-mode logits, then propagation seeded from the feature store mixed per
// the configured beta (cold rows fall back to the fresh logits). Ties in the
// argmax resolve to the lowest class id.
template <class T>
T evaluate(const MlpParams<T>& params, const LazyState<T>& state, const SparseGraph<T>& graph,
           const Matrix<T>& features, const std::vector<uint32_t>& labels,
           const std::vector<uint8_t>& mask, const TrainConfig<T>& cfg) {
    if (mask.size() != graph.num_nodes)
        throw std::invalid_argument("evaluate: mask size mismatch");
    size_t total = 0;
    for (uint8_t m : mask)
        if (m) ++total;
    if (total == 0) throw std::invalid_argument("evaluate: empty mask");
    Rng dummy(0);
    Matrix<T> x_in = mlp_forward(params, features, MlpMode::eval, dummy);
    std::vector<uint32_t> all_ids(graph.num_nodes);
    for (size_t i = 0; i < graph.num_nodes; ++i) all_ids[i] = static_cast<uint32_t>(i);
    GatherResult<T> fea = gather(state, Store::fea, all_ids);
    Matrix<T> x0 = detail::mix_with_history(fea.rows, fea.initialized, x_in, cfg.hp.beta);
    Matrix<T> x = propagate_forward(graph, x0, x_in, cfg.hp.alpha, cfg.inference_layers);
    size_t correct = 0;
    for (size_t i = 0; i < graph.num_nodes; ++i) {
        if (!mask[i]) continue;
        const T* row = x.row(i);
        size_t best = 0;
        for (size_t c = 1; c < x.cols(); ++c)
            if (row[c] > row[best]) best = c;
        if (best == labels[i]) ++correct;
    }
    return static_cast<T>(correct) / static_cast<T>(total);
}

// Same scoring but on the exact diffusion fixed point of the eval-mode
// logits; reported alongside the lazy-state score after training.
template <class T>
T evaluate_converged(const MlpParams<T>& params, const SparseGraph<T>& graph,
                     const Matrix<T>& features, const std::vector<uint32_t>& labels,
                     const std::vector<uint8_t>& mask, const TrainConfig<T>& cfg) {
    if (mask.size() != graph.num_nodes)
        throw std::invalid_argument("evaluate_converged: mask size mismatch");
    size_t total = 0;
    for (uint8_t m : mask)
        if (m) ++total;
    if (total == 0) throw std::invalid_argument("evaluate_converged: empty mask");
    Rng dummy(0);
    Matrix<T> x_in = mlp_forward(params, features, MlpMode::eval, dummy);
    Matrix<T> x = fixed_point_solve(graph, x_in, cfg.hp.alpha, T(1e-10));
    size_t correct = 0;
    for (size_t i = 0; i < graph.num_nodes; ++i) {
        if (!mask[i]) continue;
        const T* row = x.row(i);
        size_t best = 0;
        for (size_t c = 1; c < x.cols(); ++c)
            if (row[c] > row[best]) best = c;
        if (best == labels[i]) ++correct;
    }
    return static_cast<T>(correct) / static_cast<T>(total);
}

template <class T>
std::vector<EpochRecord> train_full_batch(const SparseGraph<T>& graph, const Matrix<T>& features,
                                          const std::vector<uint32_t>& labels,
                                          const std::vector<uint8_t>& split, TrainConfig<T> cfg) {
    cfg.batch_size = 0;
    Trainer<T> trainer(graph, features, labels, split, cfg);
    return trainer.run();
}

template <class T>
std::vector<EpochRecord> train_mini_batch(const SparseGraph<T>& graph, const Matrix<T>& features,
                                          const std::vector<uint32_t>& labels,
                                          const std::vector<uint8_t>& split,
                                          const TrainConfig<T>& cfg) {
    if (cfg.batch_size == 0)
        throw std::invalid_argument("train_mini_batch: batch_size must be >= 1");
    Trainer<T> trainer(graph, features, labels, split, cfg);
    return trainer.run();
}

struct BenchRow {
    std::string variant;
    size_t layers = 0;
    double sec_per_epoch = 0;
    size_t store_bytes = 0;
};

// Wall-clock medians over `measured` epochs after `warmup` epochs, one row
// per variant. Store bytes come from the lazy state and do not depend on L.
template <class T>
std::vector<BenchRow> bench(const SparseGraph<T>& graph, const Matrix<T>& features,
                            const std::vector<uint32_t>& labels, const std::vector<uint8_t>& split,
                            const std::vector<std::pair<std::string, TrainConfig<T>>>& variants,
                            size_t warmup = 2, size_t measured = 5) {
    if (measured < 5) throw std::invalid_argument("bench: need at least 5 measured epochs");
    std::vector<BenchRow> rows;
    for (const auto& [name, cfg] : variants) {
        Trainer<T> trainer(graph, features, labels, split, cfg);
        for (size_t e = 0; e < warmup; ++e) trainer.run_epoch();
        std::vector<double> times;
        times.reserve(measured);
        for (size_t e = 0; e < measured; ++e) times.push_back(trainer.run_epoch().wall_time_ms);
        std::sort(times.begin(), times.end());
        double median = times.size() % 2 ? times[times.size() / 2]
                                         : 0.5 * (times[times.size() / 2 - 1] + times[times.size() / 2]);
        BenchRow row;
        row.variant = name;
        row.layers = cfg.hp.layers;
        row.sec_per_epoch = median / 1000.0;
        row.store_bytes = trainer.state().store_bytes();
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace lazygnn
