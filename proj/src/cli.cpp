#include "lazygnn/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "lazygnn/lazygnn.hpp"

namespace lazygnn {
namespace {

namespace fs = std::filesystem;

// Configuration and flag mistakes exit with code 2; other runtime failures
// exit with code 1.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt(double v, const char* spec = "%.17g") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

uint64_t opt_u64(const std::map<std::string, std::string>& m, const std::string& key) {
    const std::string& s = m.at(key);
    try {
        size_t pos = 0;
        uint64_t v = std::stoull(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw UsageError("option '" + key + "' expects a nonnegative integer, got '" + s + "'");
    }
}

double opt_f64(const std::map<std::string, std::string>& m, const std::string& key) {
    const std::string& s = m.at(key);
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw UsageError("option '" + key + "' expects a number, got '" + s + "'");
    }
}

std::vector<size_t> opt_dims(const std::map<std::string, std::string>& m, const std::string& key) {
    const std::string& s = m.at(key);
    std::vector<size_t> dims;
    if (s.empty()) return dims;
    size_t begin = 0;
    while (begin <= s.size()) {
        size_t comma = s.find(',', begin);
        std::string field = s.substr(begin, comma == std::string::npos ? std::string::npos
                                                                       : comma - begin);
        try {
            size_t pos = 0;
            uint64_t v = std::stoull(field, &pos);
            if (pos != field.size() || v == 0) throw std::invalid_argument(field);
            dims.push_back(static_cast<size_t>(v));
        } catch (const std::exception&) {
            throw UsageError("option '" + key + "' expects comma-separated positive integers, got '" +
                             s + "'");
        }
        if (comma == std::string::npos) break;
        begin = comma + 1;
    }
    return dims;
}

struct OptSpec {
    const char* flag;
    const char* key;
    const char* def;
    const char* help;
};

// Binds one string target per option so values can be merged with a config
// file afterwards: defaults < config file < explicitly passed flags.
class OptionTable {
public:
    OptionTable(CLI::App* sub, std::vector<OptSpec> specs) : sub_(sub), specs_(std::move(specs)) {
        for (const auto& spec : specs_) {
            values_[spec.key] = spec.def;
            sub_->add_option(spec.flag, values_[spec.key], spec.help);
        }
        sub_->add_option("--config", config_path_, "flat key = value configuration file");
    }

    std::map<std::string, std::string> resolve() const {
        std::map<std::string, std::string> merged;
        for (const auto& spec : specs_) merged[spec.key] = spec.def;
        if (!config_path_.empty()) {
            std::map<std::string, std::string> file;
            try {
                file = parse_config_file(config_path_);
            } catch (const std::runtime_error& e) {
                throw UsageError(e.what());
            }
            for (const auto& [k, v] : file) {
                if (!merged.count(k)) throw UsageError("unknown config key '" + k + "'");
                merged[k] = v;
            }
        }
        for (const auto& spec : specs_)
            if (sub_->count(spec.flag)) merged[spec.key] = values_.at(spec.key);
        return merged;
    }

private:
    CLI::App* sub_;
    std::vector<OptSpec> specs_;
    std::map<std::string, std::string> values_;
    std::string config_path_;
};

const std::vector<OptSpec> kDatasetOpts = {
    {"--edges", "edges", "", "edge list file (src<TAB>dst per line)"},
    {"--features", "features", "", "feature file (binary container or CSV)"},
    {"--labels", "labels", "", "label CSV (node_id,class)"},
    {"--splits", "splits", "", "split CSV (node_id,train|val|test); omitted = seeded 60/20/20"},
};

const std::vector<OptSpec> kTrainOpts = {
    {"--mode", "mode", "full", "training mode: full or mini"},
    {"--epochs", "epochs", "100", "number of epochs"},
    {"--batch-size", "batch_size", "256", "target nodes per mini batch (mini mode)"},
    {"--lr", "lr", "0.01", "Adam learning rate"},
    {"--weight-decay", "weight_decay", "0", "decoupled weight decay"},
    {"--dropout", "dropout", "0", "dropout rate in [0,1)"},
    {"--seed", "seed", "1", "random seed"},
    {"--alpha", "alpha", "0.5", "diffusion teleport weight in (0,1]"},
    {"--beta", "beta", "0.5", "forward history mixing in [0,1]"},
    {"--gamma", "gamma", "0.5", "backward history mixing in [0,1]"},
    {"--layers", "layers", "2", "propagation steps per iteration"},
    {"--eval-every", "eval_every", "1", "validation cadence in epochs"},
    {"--inference-layers", "inference_layers", "0", "propagation steps at eval time; 0 = layers"},
    {"--hidden", "hidden", "32", "comma-separated hidden widths; empty = linear model"},
    {"--precision", "precision", "64", "floating point width: 32 or 64"},
    {"--out", "out", ".", "output directory"},
};

// Appends specs whose keys are not already present, so subcommands can share
// one option (e.g. --seed) across several tables.
std::vector<OptSpec> concat(std::vector<OptSpec> a, const std::vector<OptSpec>& b) {
    for (const auto& spec : b) {
        bool dup = false;
        for (const auto& have : a) dup = dup || std::string(have.key) == spec.key;
        if (!dup) a.push_back(spec);
    }
    return a;
}

struct TrainValues {
    std::string mode, edges, features, labels, splits, out, hidden_str;
    uint64_t epochs = 0, batch_size = 0, seed = 0, layers = 0, eval_every = 0,
             inference_layers = 0;
    double lr = 0, weight_decay = 0, dropout = 0, alpha = 0, beta = 0, gamma = 0;
    int precision = 64;
    std::vector<size_t> hidden;

    static TrainValues from(const std::map<std::string, std::string>& m) {
        TrainValues v;
        v.mode = m.at("mode");
        if (v.mode != "full" && v.mode != "mini")
            throw UsageError("option 'mode' must be 'full' or 'mini', got '" + v.mode + "'");
        v.edges = m.at("edges");
        v.features = m.at("features");
        v.labels = m.at("labels");
        v.splits = m.at("splits");
        v.out = m.at("out");
        v.hidden_str = m.at("hidden");
        v.epochs = opt_u64(m, "epochs");
        v.batch_size = opt_u64(m, "batch_size");
        v.seed = opt_u64(m, "seed");
        v.layers = opt_u64(m, "layers");
        v.eval_every = opt_u64(m, "eval_every");
        v.inference_layers = opt_u64(m, "inference_layers");
        v.lr = opt_f64(m, "lr");
        v.weight_decay = opt_f64(m, "weight_decay");
        v.dropout = opt_f64(m, "dropout");
        v.alpha = opt_f64(m, "alpha");
        v.beta = opt_f64(m, "beta");
        v.gamma = opt_f64(m, "gamma");
        uint64_t prec = opt_u64(m, "precision");
        if (prec != 32 && prec != 64)
            throw UsageError("option 'precision' must be 32 or 64, got '" + m.at("precision") + "'");
        v.precision = static_cast<int>(prec);
        v.hidden = opt_dims(m, "hidden");
        if (v.mode == "mini" && v.batch_size == 0)
            throw UsageError("mini mode requires batch_size >= 1");
        return v;
    }

    std::vector<std::pair<std::string, std::string>> resolved_pairs() const {
        size_t inf = inference_layers ? inference_layers : layers;
        return {
            {"mode", mode},
            {"epochs", std::to_string(epochs)},
            {"batch_size", std::to_string(mode == "full" ? 0 : batch_size)},
            {"lr", fmt(lr)},
            {"weight_decay", fmt(weight_decay)},
            {"dropout", fmt(dropout)},
            {"seed", std::to_string(seed)},
            {"alpha", fmt(alpha)},
            {"beta", fmt(beta)},
            {"gamma", fmt(gamma)},
            {"layers", std::to_string(layers)},
            {"eval_every", std::to_string(eval_every)},
            {"inference_layers", std::to_string(inf)},
            {"hidden", hidden_str},
            {"precision", std::to_string(precision)},
            {"edges", edges},
            {"features", features},
            {"labels", labels},
            {"splits", splits},
            {"out", out},
        };
    }
};

template <class T>
TrainConfig<T> make_config(const TrainValues& v) {
    TrainConfig<T> cfg;
    cfg.epochs = v.epochs;
    cfg.batch_size = v.mode == "full" ? 0 : v.batch_size;
    cfg.lr = static_cast<T>(v.lr);
    cfg.weight_decay = static_cast<T>(v.weight_decay);
    cfg.dropout = static_cast<T>(v.dropout);
    cfg.seed = v.seed;
    cfg.hp = Hyperparams<T>(static_cast<T>(v.alpha), static_cast<T>(v.beta),
                            static_cast<T>(v.gamma), v.layers);
    cfg.eval_every = v.eval_every;
    cfg.inference_layers = v.inference_layers ? v.inference_layers : v.layers;
    cfg.hidden_dims = v.hidden;
    return cfg;
}

template <class T>
Dataset<T> load_dataset_opts(const TrainValues& v) {
    if (v.edges.empty() || v.features.empty() || v.labels.empty())
        throw UsageError("--edges, --features and --labels are required");
    return load_dataset<T>(v.edges, v.features, v.labels, v.splits, v.seed);
}

std::vector<uint8_t> mask_for(const std::vector<uint8_t>& split, uint8_t which, size_t& count) {
    std::vector<uint8_t> mask(split.size(), 0);
    count = 0;
    for (size_t i = 0; i < split.size(); ++i)
        if (split[i] == which) {
            mask[i] = 1;
            ++count;
        }
    return mask;
}

template <class T>
int run_train(const TrainValues& v) {
    Dataset<T> ds = load_dataset_opts<T>(v);
    TrainConfig<T> cfg = make_config<T>(v);
    fs::create_directories(v.out);
    std::ofstream metrics(fs::path(v.out) / "metrics.csv");
    if (!metrics) throw std::runtime_error("cannot open metrics.csv for writing");
    metrics << "epoch,iter,train_loss,val_acc,redundancy,wall_ms,store_bytes\n";

    Trainer<T> trainer(ds.graph, ds.features, ds.labels, ds.split, cfg);
    for (size_t e = 0; e < cfg.epochs; ++e) {
        EpochRecord rec = trainer.run_epoch();
        if (std::isnan(rec.val_accuracy)) continue;
        metrics << rec.epoch << ',' << rec.iter << ',' << fmt(rec.train_loss) << ','
                << fmt(rec.val_accuracy) << ',' << fmt(rec.redundancy) << ','
                << fmt(rec.wall_time_ms) << ',' << rec.peak_store_bytes << '\n';
        std::cout << "epoch " << rec.epoch << " iter " << rec.iter << " loss "
                  << fmt(rec.train_loss, "%.6f") << " val_acc " << fmt(rec.val_accuracy, "%.4f")
                  << " redundancy " << fmt(rec.redundancy, "%.6f") << '\n';
    }

    size_t n_test = 0;
    auto test_mask = mask_for(ds.split, kSplitTest, n_test);
    if (n_test) {
        T lazy = evaluate(trainer.params(), trainer.state(), ds.graph, ds.features, ds.labels,
                          test_mask, cfg);
        T conv = evaluate_converged(trainer.params(), ds.graph, ds.features, ds.labels, test_mask,
                                    cfg);
        std::cout << "test_acc_lazy " << fmt(static_cast<double>(lazy), "%.4f")
                  << " test_acc_converged " << fmt(static_cast<double>(conv), "%.4f") << '\n';
    } else {
        std::cout << "no test nodes in split; skipping test evaluation\n";
    }

    save_model(trainer.params(), (fs::path(v.out) / "model.bin").string());
    save_state(trainer.state(), (fs::path(v.out) / "state.lzst").string());
    write_config((fs::path(v.out) / "resolved.cfg").string(), v.resolved_pairs());
    return 0;
}

template <class T>
int run_eval(const TrainValues& v, const std::string& model_path, const std::string& state_path,
             const std::string& split_name) {
    if (model_path.empty()) throw UsageError("--model is required");
    uint8_t which;
    if (split_name == "train")
        which = kSplitTrain;
    else if (split_name == "val")
        which = kSplitVal;
    else if (split_name == "test")
        which = kSplitTest;
    else
        throw UsageError("option 'split' must be train, val or test, got '" + split_name + "'");

    Dataset<T> ds = load_dataset_opts<T>(v);
    MlpParams<T> params = load_model<T>(model_path);
    if (params.weights.back().cols() != ds.num_classes)
        throw std::runtime_error(model_path + ": model emits " +
                                 std::to_string(params.weights.back().cols()) +
                                 " classes but the dataset has " +
                                 std::to_string(ds.num_classes));
    TrainConfig<T> cfg = make_config<T>(v);
    LazyState<T> state(ds.graph.num_nodes, ds.num_classes);
    if (!state_path.empty()) {
        state = load_state<T>(state_path);
        if (state.num_nodes() != ds.graph.num_nodes || state.num_channels() != ds.num_classes)
            throw std::runtime_error(state_path + ": state shape does not match the dataset");
    }
    size_t count = 0;
    auto mask = mask_for(ds.split, which, count);
    if (count == 0) throw std::runtime_error("no '" + split_name + "' nodes in the split");
    T lazy = evaluate(params, state, ds.graph, ds.features, ds.labels, mask, cfg);
    T conv = evaluate_converged(params, ds.graph, ds.features, ds.labels, mask, cfg);
    std::cout << "accuracy_lazy " << fmt(static_cast<double>(lazy), "%.4f") << '\n'
              << "accuracy_converged " << fmt(static_cast<double>(conv), "%.4f") << '\n';
    return 0;
}

template <class T>
int run_redundancy(const TrainValues& v, const std::string& out_file) {
    Dataset<T> ds = load_dataset_opts<T>(v);
    TrainValues local = v;
    local.mode = "full";
    TrainConfig<T> cfg = make_config<T>(local);
    cfg.eval_every = cfg.epochs + 1;  // metric stream only, no validation passes
    Trainer<T> trainer(ds.graph, ds.features, ds.labels, ds.split, cfg);
    std::ostringstream os;
    os << "iter,redundancy\n";
    for (size_t e = 0; e < cfg.epochs; ++e) {
        EpochRecord rec = trainer.run_epoch();
        os << rec.iter << ',' << fmt(rec.redundancy) << '\n';
    }
    std::cout << os.str();
    if (!out_file.empty()) detail::write_file(out_file, os.str());
    return 0;
}

struct SbmValues {
    SbmSpec spec;
    double train_frac = 0.6, val_frac = 0.2;
    std::string out = ".";

    static SbmValues from(const std::map<std::string, std::string>& m) {
        SbmValues v;
        v.spec.blocks = opt_u64(m, "blocks");
        v.spec.nodes_per_block = opt_u64(m, "nodes_per_block");
        v.spec.p_in = opt_f64(m, "p_in");
        v.spec.p_out = opt_f64(m, "p_out");
        v.spec.feature_dim = opt_u64(m, "dim");
        v.spec.feature_noise_sigma = opt_f64(m, "sigma");
        v.spec.seed = opt_u64(m, "seed");
        if (m.count("train_frac")) v.train_frac = opt_f64(m, "train_frac");
        if (m.count("val_frac")) v.val_frac = opt_f64(m, "val_frac");
        if (m.count("out")) v.out = m.at("out");
        return v;
    }
};

const std::vector<OptSpec> kSbmOpts = {
    {"--blocks", "blocks", "4", "number of blocks (classes)"},
    {"--nodes-per-block", "nodes_per_block", "250", "nodes per block"},
    {"--p-in", "p_in", "0.05", "within-block edge probability"},
    {"--p-out", "p_out", "0.005", "cross-block edge probability"},
    {"--dim", "dim", "8", "feature dimension"},
    {"--sigma", "sigma", "1.0", "feature noise standard deviation"},
    {"--seed", "seed", "1", "random seed"},
};

int run_gen_sbm(const SbmValues& v) {
    Dataset<double> ds = generate_sbm<double>(v.spec);
    const size_t n = ds.graph.num_nodes;
    if (v.train_frac != 0.6 || v.val_frac != 0.2) {
        Rng rng = Rng(v.spec.seed).derive(3);
        ds.split = make_split(n, v.train_frac, v.val_frac, rng);
    }
    fs::create_directories(v.out);
    auto edges = extract_edges(ds.graph);
    write_edge_list((fs::path(v.out) / "edges.tsv").string(), edges);
    write_features_binary((fs::path(v.out) / "features.bin").string(), ds.features);
    write_labels((fs::path(v.out) / "labels.csv").string(), ds.labels);
    write_split((fs::path(v.out) / "splits.csv").string(), ds.split);
    std::cout << "wrote " << n << " nodes, " << edges.size() << " edges, " << ds.num_classes
              << " classes to " << v.out << '\n';
    return 0;
}

int run_oracle_check(uint64_t n, uint64_t trials, uint64_t seed) {
    if (n < 2) throw UsageError("oracle-check needs n >= 2");
    if (trials == 0) throw UsageError("oracle-check needs trials >= 1");
    using T = double;
    Rng rng(seed);
    double worst_fixed = 0, worst_implicit = 0;
    for (uint64_t t = 0; t < trials; ++t) {
        std::vector<std::pair<NodeId, NodeId>> edges;
        for (NodeId i = 0; i < n; ++i)
            for (NodeId j = i + 1; j < n; ++j)
                if (rng.uniform() < 0.1) edges.emplace_back(i, j);
        // keep the graph connected enough to be nondegenerate
        for (NodeId i = 0; i + 1 < n; ++i)
            if (rng.uniform() < 0.05) edges.emplace_back(i, i + 1);
        SparseGraph<T> g = normalize(build_graph<T>(edges, n), true);
        T alpha = static_cast<T>(rng.uniform(0.1, 0.9));
        Matrix<T> x_in(n, 4), g_top(n, 4);
        for (T& v : x_in.data()) v = static_cast<T>(rng.normal());
        for (T& v : g_top.data()) v = static_cast<T>(rng.normal());

        Matrix<T> xs = fixed_point_solve(g, x_in, alpha, T(1e-10));
        Matrix<T> px = spmm(g, xs);
        Matrix<T> rhs(n, 4);
        for (size_t i = 0; i < rhs.data().size(); ++i)
            rhs.data()[i] = (T(1) - alpha) * px.data()[i] + alpha * x_in.data()[i];
        double r1 = frobenius_distance(xs, rhs) / (1.0 + frobenius_norm(x_in));
        worst_fixed = std::max(worst_fixed, r1);

        Matrix<T> z = implicit_grad_reference(g, g_top, alpha);
        Matrix<T> pz = spmm(g, z);
        Matrix<T> lhs(n, 4);
        for (size_t i = 0; i < lhs.data().size(); ++i)
            lhs.data()[i] = z.data()[i] - (T(1) - alpha) * pz.data()[i] - alpha * g_top.data()[i];
        double r2 = frobenius_norm(lhs) / (1.0 + frobenius_norm(g_top));
        worst_implicit = std::max(worst_implicit, r2);
    }
    std::cout << "fixed_point max_residual " << fmt(worst_fixed, "%.3e") << '\n'
              << "implicit_grad max_residual " << fmt(worst_implicit, "%.3e") << '\n';
    bool ok = worst_fixed < 1e-6 && worst_implicit < 1e-6;
    std::cout << (ok ? "OK" : "FAIL") << '\n';
    return ok ? 0 : 1;
}

struct BenchValues {
    TrainValues train;
    SbmSpec sbm;
    bool use_files = false;
    uint64_t warmup = 2, measured = 5;
};

template <class T>
int run_bench(const BenchValues& bv) {
    Dataset<T> ds = bv.use_files ? load_dataset_opts<T>(bv.train) : generate_sbm<T>(bv.sbm);
    std::vector<std::pair<std::string, TrainConfig<T>>> variants;
    const size_t no_eval = 1u << 20;  // keep validation out of the timed epochs
    for (size_t layers : {1, 2, 4, 8}) {
        TrainValues v = bv.train;
        v.mode = "full";
        v.beta = 0.5;
        v.gamma = 0.5;
        v.layers = layers;
        v.inference_layers = layers;
        TrainConfig<T> cfg = make_config<T>(v);
        cfg.epochs = 1;
        cfg.eval_every = no_eval;
        variants.emplace_back("lazy", cfg);
    }
    {
        TrainValues v = bv.train;
        v.mode = "full";
        v.beta = 1.0;
        v.gamma = 1.0;
        v.layers = 10;
        v.inference_layers = 10;
        TrainConfig<T> cfg = make_config<T>(v);
        cfg.epochs = 1;
        cfg.eval_every = no_eval;
        variants.emplace_back("plain", cfg);
    }
    auto rows = bench(ds.graph, ds.features, ds.labels, ds.split, variants, bv.warmup, bv.measured);
    std::cout << "variant,layers,sec_per_epoch,store_bytes\n";
    for (const auto& row : rows)
        std::cout << row.variant << ',' << row.layers << ',' << fmt(row.sec_per_epoch, "%.6f")
                  << ',' << row.store_bytes << '\n';
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"lazy-propagation GNN trainer for node classification"};
    app.name("lazygnn");
    app.require_subcommand(1);

    auto* train_cmd = app.add_subcommand("train", "train a model and write metrics + checkpoints");
    OptionTable train_opts(train_cmd, concat(kDatasetOpts, kTrainOpts));

    auto* eval_cmd = app.add_subcommand("eval", "score a saved model on a split");
    OptionTable eval_opts(eval_cmd, concat(kDatasetOpts, kTrainOpts));
    std::string model_path, state_path, split_name = "test";
    eval_cmd->add_option("--model", model_path, "model checkpoint");
    eval_cmd->add_option("--state", state_path, "lazy state checkpoint; omitted = cold stores");
    eval_cmd->add_option("--split", split_name, "split to score: train, val or test");

    auto* bench_cmd = app.add_subcommand("bench", "epoch-time and store-size table across depths");
    OptionTable bench_opts(
        bench_cmd,
        concat(concat(concat(kDatasetOpts, kTrainOpts), kSbmOpts),
               {{"--warmup", "warmup", "2", "warmup epochs per variant"},
                {"--measured", "measured", "5", "measured epochs per variant (>= 5)"}}));

    auto* oracle_cmd = app.add_subcommand("oracle-check", "verify solver self-consistency");
    OptionTable oracle_opts(oracle_cmd,
                            {{"--n", "n", "64", "nodes per random graph (<= 512)"},
                             {"--trials", "trials", "20", "number of random trials"},
                             {"--seed", "seed", "7", "random seed"}});

    auto* gen_cmd = app.add_subcommand("gen-sbm", "generate a block-model dataset on disk");
    OptionTable gen_opts(gen_cmd, concat(kSbmOpts, {
                                             {"--train-frac", "train_frac", "0.6", "train fraction"},
                                             {"--val-frac", "val_frac", "0.2", "validation fraction"},
                                             {"--out", "out", ".", "output directory"},
                                         }));

    auto* red_cmd = app.add_subcommand("redundancy", "full-batch redundancy series as CSV");
    OptionTable red_opts(red_cmd, concat(kDatasetOpts, kTrainOpts));
    std::string red_out;
    red_cmd->add_option("--out-file", red_out, "also write the series to this file");

    std::vector<const char*> argv;
    argv.push_back("lazygnn");
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
        try {
            app.parse(static_cast<int>(argv.size()), argv.data());
        } catch (const CLI::ParseError& e) {
            int rc = app.exit(e);
            return rc == 0 ? 0 : 2;
        }

        if (train_cmd->parsed()) {
            TrainValues v = TrainValues::from(train_opts.resolve());
            return v.precision == 32 ? run_train<float>(v) : run_train<double>(v);
        }
        if (eval_cmd->parsed()) {
            TrainValues v = TrainValues::from(eval_opts.resolve());
            return v.precision == 32 ? run_eval<float>(v, model_path, state_path, split_name)
                                     : run_eval<double>(v, model_path, state_path, split_name);
        }
        if (bench_cmd->parsed()) {
            auto merged = bench_opts.resolve();
            BenchValues bv;
            bv.train = TrainValues::from(merged);
            bv.sbm = SbmValues::from(merged).spec;
            bv.use_files = !bv.train.edges.empty();
            bv.warmup = opt_u64(merged, "warmup");
            bv.measured = opt_u64(merged, "measured");
            return bv.train.precision == 32 ? run_bench<float>(bv) : run_bench<double>(bv);
        }
        if (oracle_cmd->parsed()) {
            auto merged = oracle_opts.resolve();
            return run_oracle_check(opt_u64(merged, "n"), opt_u64(merged, "trials"),
                                    opt_u64(merged, "seed"));
        }
        if (gen_cmd->parsed()) return run_gen_sbm(SbmValues::from(gen_opts.resolve()));
        if (red_cmd->parsed()) {
            TrainValues v = TrainValues::from(red_opts.resolve());
            return v.precision == 32 ? run_redundancy<float>(v, red_out)
                                     : run_redundancy<double>(v, red_out);
        }
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace lazygnn
