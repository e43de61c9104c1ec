#include <fcntl.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "doctest.h"
#include "lazygnn/cli.hpp"
#include "lazygnn/lazygnn.hpp"

namespace fs = std::filesystem;
using lazygnn::run_cli;

namespace {

// Redirects fd 1 into a file so printed tables can be asserted on. Restores
// the original stream in finish(); assertions must run after that.
class CaptureStdout {
public:
    explicit CaptureStdout(std::string path) : path_(std::move(path)) {
        std::cout.flush();
        std::fflush(stdout);
        saved_ = dup(1);
        int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
        REQUIRE(fd >= 0);
        dup2(fd, 1);
        ::close(fd);
    }
    std::string finish() {
        std::cout.flush();
        std::fflush(stdout);
        dup2(saved_, 1);
        ::close(saved_);
        return lazygnn::detail::read_file(path_);
    }

private:
    std::string path_;
    int saved_;
};

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    size_t begin = 0;
    while (begin < text.size()) {
        size_t end = text.find('\n', begin);
        if (end == std::string::npos) end = text.size();
        lines.push_back(text.substr(begin, end - begin));
        begin = end + 1;
    }
    return lines;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage mistakes exit 2, missing files exit 1") {
    CHECK(run_cli({}) == 2);
    CHECK(run_cli({"--help"}) == 0);
    CHECK(run_cli({"train", "--help"}) == 0);
    CHECK(run_cli({"train", "--no-such-flag"}) == 2);
    CHECK(run_cli({"train"}) == 2);  // dataset paths are required
    CHECK(run_cli({"train", "--epochs", "abc"}) == 2);
    CHECK(run_cli({"train", "--config", "no_such_file.cfg"}) == 2);
    CHECK(run_cli({"eval"}) == 2);  // --model is required
    CHECK(run_cli({"train", "--edges", "no.tsv", "--features", "no.bin", "--labels", "no.csv"}) ==
          1);

    lazygnn::detail::write_file("bad_key.cfg", "not_an_option = 1\n");
    CHECK(run_cli({"train", "--config", "bad_key.cfg"}) == 2);
    lazygnn::detail::write_file("bad_key.cfg", "epochs = 3\n");  // valid key, still no dataset
    CHECK(run_cli({"train", "--config", "bad_key.cfg"}) == 2);
    std::remove("bad_key.cfg");
}

TEST_CASE("generate, train, evaluate round trip on disk") {
    const std::string dir = "cli_pipeline_tmp";
    fs::remove_all(dir);
    CHECK(run_cli({"gen-sbm", "--blocks", "3", "--nodes-per-block", "20", "--p-in", "0.3",
                   "--p-out", "0.02", "--dim", "4", "--sigma", "1.0", "--seed", "9", "--out",
                   dir}) == 0);
    for (const char* name : {"edges.tsv", "features.bin", "labels.csv", "splits.csv"})
        CHECK(fs::exists(fs::path(dir) / name));

    const std::string run = dir + "/run";
    CaptureStdout cap(dir + "/train_stdout.txt");
    int rc = run_cli({"train", "--edges", dir + "/edges.tsv", "--features", dir + "/features.bin",
                      "--labels", dir + "/labels.csv", "--splits", dir + "/splits.csv", "--mode",
                      "full", "--epochs", "4", "--lr", "0.05", "--alpha", "0.35", "--layers", "2",
                      "--eval-every", "2", "--out", run});
    std::string out = cap.finish();
    CHECK(rc == 0);
    CHECK(out.find("test_acc_lazy ") != std::string::npos);
    CHECK(out.find("test_acc_converged ") != std::string::npos);

    for (const char* name : {"metrics.csv", "model.bin", "state.lzst", "resolved.cfg"})
        CHECK(fs::exists(fs::path(run) / name));
    auto metrics = split_lines(lazygnn::detail::read_file(run + "/metrics.csv"));
    REQUIRE(metrics.size() == 3);  // header + epochs 2 and 4
    CHECK(metrics[0] == "epoch,iter,train_loss,val_acc,redundancy,wall_ms,store_bytes");
    CHECK(metrics[1].substr(0, 2) == "2,");
    CHECK(metrics[2].substr(0, 2) == "4,");

    CaptureStdout cap2(dir + "/eval_stdout.txt");
    rc = run_cli({"eval", "--config", run + "/resolved.cfg", "--model", run + "/model.bin",
                  "--state", run + "/state.lzst", "--split", "test"});
    out = cap2.finish();
    CHECK(rc == 0);
    CHECK(out.find("accuracy_lazy ") != std::string::npos);
    CHECK(out.find("accuracy_converged ") != std::string::npos);

    // cold stores and a different split are accepted too
    CaptureStdout cap3(dir + "/eval2_stdout.txt");
    rc = run_cli({"eval", "--config", run + "/resolved.cfg", "--model", run + "/model.bin",
                  "--split", "val"});
    cap3.finish();
    CHECK(rc == 0);

    CHECK(run_cli({"eval", "--config", run + "/resolved.cfg", "--model", run + "/model.bin",
                   "--split", "nope"}) == 2);

    // mini-batch and float32 paths drive the same data end to end
    CaptureStdout cap4(dir + "/mini_stdout.txt");
    rc = run_cli({"train", "--config", run + "/resolved.cfg", "--mode", "mini", "--batch-size",
                  "16", "--epochs", "2", "--out", dir + "/run_mini"});
    cap4.finish();
    CHECK(rc == 0);
    CaptureStdout cap5(dir + "/f32_stdout.txt");
    rc = run_cli({"train", "--config", run + "/resolved.cfg", "--precision", "32", "--epochs", "2",
                  "--out", dir + "/run_f32"});
    cap5.finish();
    CHECK(rc == 0);

    fs::remove_all(dir);
}

TEST_CASE("redundancy series is printed and written") {
    const std::string dir = "cli_redundancy_tmp";
    fs::remove_all(dir);
    CHECK(run_cli({"gen-sbm", "--blocks", "2", "--nodes-per-block", "15", "--p-in", "0.3",
                   "--p-out", "0.05", "--dim", "3", "--seed", "4", "--out", dir}) == 0);
    CaptureStdout cap(dir + "/red_stdout.txt");
    int rc = run_cli({"redundancy", "--edges", dir + "/edges.tsv", "--features",
                      dir + "/features.bin", "--labels", dir + "/labels.csv", "--splits",
                      dir + "/splits.csv", "--epochs", "3", "--out-file", dir + "/series.csv"});
    std::string out = cap.finish();
    CHECK(rc == 0);
    auto lines = split_lines(out);
    REQUIRE(lines.size() == 4);
    CHECK(lines[0] == "iter,redundancy");
    CHECK(lazygnn::detail::read_file(dir + "/series.csv") == out);
    fs::remove_all(dir);
}

TEST_CASE("oracle check validates the solvers") {
    CaptureStdout cap("oracle_stdout_tmp.txt");
    int rc = run_cli({"oracle-check", "--n", "32", "--trials", "8", "--seed", "3"});
    std::string out = cap.finish();
    std::remove("oracle_stdout_tmp.txt");
    CHECK(rc == 0);
    CHECK(out.find("fixed_point max_residual") != std::string::npos);
    CHECK(out.find("OK") != std::string::npos);
}

TEST_CASE("bench prints one row per variant") {
    CaptureStdout cap("bench_stdout_tmp.txt");
    int rc = run_cli({"bench", "--blocks", "2", "--nodes-per-block", "15", "--p-in", "0.3",
                      "--p-out", "0.05", "--dim", "3", "--seed", "4", "--epochs", "1", "--warmup",
                      "1", "--measured", "5"});
    std::string out = cap.finish();
    std::remove("bench_stdout_tmp.txt");
    CHECK(rc == 0);
    auto lines = split_lines(out);
    REQUIRE(lines.size() == 6);
    CHECK(lines[0] == "variant,layers,sec_per_epoch,store_bytes");
    CHECK(lines[1].substr(0, 7) == "lazy,1,");
    CHECK(lines[4].substr(0, 7) == "lazy,8,");
    CHECK(lines[5].substr(0, 9) == "plain,10,");

    CHECK(run_cli({"bench", "--nodes-per-block", "5", "--measured", "3"}) == 2);
}

}  // TEST_SUITE
