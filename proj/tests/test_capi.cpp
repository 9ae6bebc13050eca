// Copyright 2026 The Lookback Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "lookback/lookback.h"

namespace fs = std::filesystem;

namespace {

struct Scratch {
    fs::path path;
    Scratch() {
        path = fs::temp_directory_path() / ("lookback-capi-" + std::to_string(std::rand()) + "-" +
                                            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
        std::ofstream out(path / "corpus.txt");
        for (int i = 0; i < 30; ++i) out << "w" << i % 5 << " x y z x y z x y z x y z x y z x y z\n";
        for (int i = 0; i < 30; ++i) out << "p q r s t u v p r t v q s u\n";
    }
    ~Scratch() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string operator/(const char* name) const { return (path / name).string(); }
};

lb_lm* train(const Scratch& s, uint32_t order = 3) {
    lb_ngram_params p;
    lb_ngram_params_init(&p);
    p.order = order;
    lb_lm* lm = nullptr;
    REQUIRE(lb_lm_train_file((s / "corpus.txt").c_str(), &p, &lm) == LB_OK);
    REQUIRE(lm != nullptr);
    return lm;
}

std::string take(char* s) {
    std::string out(s);
    lb_string_free(s);
    return out;
}

}  // namespace

TEST_CASE("version and defaults") {
    CHECK(std::string(lb_version()).size() > 0);
    lb_decode_params d;
    lb_decode_params_init(&d);
    CHECK(std::string(d.algorithm) == "greedy");
    CHECK(d.k == 5);
    CHECK(d.history_includes_prefix == 1);
    lb_ngram_params n;
    lb_ngram_params_init(&n);
    CHECK(n.order >= 1);
    CHECK(n.lambdas == nullptr);
}

TEST_CASE("language model handles") {
    Scratch s;
    lb_lm* lm = train(s);
    size_t v = 0;
    REQUIRE(lb_lm_vocab_size(lm, &v) == LB_OK);
    CHECK(v == 2 + 5 + 3 + 7);

    uint32_t* ids = nullptr;
    size_t len = 0;
    REQUIRE(lb_lm_tokenize(lm, "x y nope", &ids, &len) == LB_OK);
    REQUIRE(len == 3);
    CHECK(ids[2] == 0);
    std::vector<double> probs(v);
    REQUIRE(lb_lm_next_dist(lm, ids, 2, probs.data(), probs.size()) == LB_OK);
    double sum = 0.0;
    for (double p : probs) sum += p;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(lb_lm_next_dist(lm, ids, 2, probs.data(), probs.size() - 1) == LB_ERR_INVALID_ARGUMENT);
    lb_ids_free(ids);

    REQUIRE(lb_lm_save(lm, (s / "model.bin").c_str()) == LB_OK);
    REQUIRE(lb_lm_save_vocab(lm, (s / "vocab.txt").c_str()) == LB_OK);
    lb_lm* back = nullptr;
    REQUIRE(lb_lm_load((s / "model.bin").c_str(), &back) == LB_OK);
    std::vector<double> again(v);
    uint32_t ctx[1] = {3};
    REQUIRE(lb_lm_next_dist(lm, ctx, 1, probs.data(), v) == LB_OK);
    REQUIRE(lb_lm_next_dist(back, ctx, 1, again.data(), v) == LB_OK);
    CHECK(probs == again);
    lb_lm_free(back);
    lb_lm_free(lm);
    lb_lm_free(nullptr);
}

TEST_CASE("status codes and last error") {
    Scratch s;
    lb_lm* lm = nullptr;
    CHECK(lb_lm_load((s / "absent.bin").c_str(), &lm) == LB_ERR_IO);
    CHECK(lm == nullptr);
    CHECK(std::string(lb_last_error()).find("absent.bin") != std::string::npos);
    {
        std::ofstream bad(s / "bad.bin");
        bad << "not a model";
    }
    CHECK(lb_lm_load((s / "bad.bin").c_str(), &lm) == LB_ERR_FORMAT);
    CHECK(lb_lm_load(nullptr, &lm) == LB_ERR_INVALID_ARGUMENT);
    lb_ngram_params p;
    lb_ngram_params_init(&p);
    p.add_k = -1.0;
    CHECK(lb_lm_train_file((s / "corpus.txt").c_str(), &p, &lm) == LB_ERR_INVALID_ARGUMENT);
    CHECK(lb_lm_remote("http://127.0.0.1:1/next", (s / "missing-vocab.txt").c_str(), 5, 100, 0, &lm) == LB_ERR_IO);

    lb_lm* good = train(s);
    lb_decode_params d;
    lb_decode_params_init(&d);
    d.algorithm = "beam";
    lb_record* r = nullptr;
    CHECK(lb_decode(good, "x y", &d, &r) == LB_ERR_INVALID_ARGUMENT);
    CHECK(r == nullptr);
    CHECK(std::string(lb_last_error()).size() > 0);
    CHECK(lb_record_from_json(good, "{not json", &r) == LB_ERR_FORMAT);
    lb_lm_free(good);
}

TEST_CASE("decode, serialize, reload") {
    Scratch s;
    lb_lm* lm = train(s);
    lb_decode_params d;
    lb_decode_params_init(&d);
    d.algorithm = "lookback";
    d.max_new_tokens = 30;
    d.alpha = 0.5;
    d.seed = 11;
    lb_record* r = nullptr;
    REQUIRE(lb_decode(lm, "w1 x y z", &d, &r) == LB_OK);
    size_t steps = 0, alarms = 0;
    REQUIRE(lb_record_length(r, &steps) == LB_OK);
    REQUIRE(lb_record_alarms(r, &alarms) == LB_OK);
    CHECK(steps >= 1);
    CHECK(steps <= 30);
    CHECK(alarms > 0);

    char* json = nullptr;
    REQUIRE(lb_record_json(r, lm, &json) == LB_OK);
    const std::string line = take(json);
    CHECK(line.find("\"lookback.generation/1\"") != std::string::npos);

    lb_record* back = nullptr;
    REQUIRE(lb_record_from_json(lm, line.c_str(), &back) == LB_OK);
    REQUIRE(lb_record_json(back, lm, &json) == LB_OK);
    CHECK(take(json) == line);

    char* text = nullptr;
    REQUIRE(lb_record_continuation(r, lm, &text) == LB_OK);
    CHECK(take(text).size() > 0);

    REQUIRE(lb_record_export_diagnostics(back, (s / "diag").c_str(), 1) == LB_OK);
    CHECK(fs::exists(s.path / "diag" / "curves.csv"));

    lb_record* again = nullptr;
    REQUIRE(lb_decode(lm, "w1 x y z", &d, &again) == LB_OK);
    REQUIRE(lb_record_json(again, lm, &json) == LB_OK);
    CHECK(take(json) == line);

    lb_record_free(again);
    lb_record_free(back);
    lb_record_free(r);
    lb_lm_free(lm);
}

TEST_CASE("experiment entry points") {
    Scratch s;
    {
        std::ofstream cfg(s / "exp.ini");
        cfg << "[experiment]\ntrain = corpus.txt\ntest = corpus.txt\nprefix_len = 4\nnum_instances = 6\n"
               "max_new_tokens = 12\nseed = 1\nout = out\n"
               "[backend]\ntype = ngram\norder = 2\n"
               "[decoder.greedy]\nalgorithm = greedy\n"
               "[decoder.lookback]\nalgorithm = lookback\nalpha = 0.5\n"
               "[sweep]\nk = 2\nalpha = 0.5, 1.0\n"
               "[mauve]\nclusters = 3\n";
    }
    lb_experiment_options o;
    lb_experiment_options_init(&o);
    const std::string cfg = s / "exp.ini";
    o.config_path = cfg.c_str();
    char* csv = nullptr;
    REQUIRE(lb_run_experiment(&o, &csv) == LB_OK);
    const std::string metrics = take(csv);
    CHECK(metrics.rfind("decoder,rep-2,rep-3,rep-4,diversity,mauve,coherence,status\n", 0) == 0);
    CHECK(fs::exists(s.path / "out" / "generations.jsonl"));

    const std::string alt = s / "alt";
    o.out_dir = alt.c_str();
    REQUIRE(lb_run_experiment(&o, &csv) == LB_OK);
    CHECK(take(csv) == metrics);

    char* summary = nullptr;
    REQUIRE(lb_run_sweep(&o, &summary) == LB_OK);
    CHECK(take(summary).find("lookback.sweep/1") != std::string::npos);
    CHECK(fs::exists(s.path / "alt" / "sweep.csv"));

    o.config_path = "/nonexistent.ini";
    CHECK(lb_run_experiment(&o, nullptr) == LB_ERR_IO);
}
