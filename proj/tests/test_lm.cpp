// Copyright 2026 The Lookback Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cmath>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "fixtures.hpp"
#include "lookback/error.hpp"
#include "lookback/ngram.hpp"
#include "lookback/remote.hpp"
#include "oracles.hpp"

using namespace lookback;

namespace {

std::vector<std::vector<unsigned>> token_lines(const NGramModel& m, const std::vector<std::string>& lines) {
    std::vector<std::vector<unsigned>> out;
    for (const auto& l : lines) {
        auto t = tokenize(l, m.vocab());
        out.emplace_back(t.begin(), t.end());
    }
    return out;
}

void check_same(const ProbDist& got, const std::vector<double>& want, double tol) {
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i) CHECK(std::abs(got[i] - want[i]) <= tol);
}

const std::vector<std::string> kToyCorpus{
    "the ridge racer drifts around the bend",
    "the racer takes the bend at full speed",
    "a ridge runs along the coast road",
    "the coast road bends around the ridge",
    "full speed around the coast",
};

// Local next-token server backed by an n-gram model.
class Server {
public:
    explicit Server(const NGramModel& lm) : lm_(lm) {
        svr_.Post("/next", [this](const httplib::Request& req, httplib::Response& res) {
            ++hits;
            auto body = nlohmann::json::parse(req.body);
            auto ctx = body.at("context").get<TokenSeq>();
            auto n = body.at("top_n").get<std::size_t>();
            auto d = lm_.next_dist(ctx);
            auto top = dist_top_k(d, std::min(n, d.size()));
            nlohmann::json lp = nlohmann::json::array();
            for (const auto& t : top) lp.push_back({t.id, std::log(t.prob)});
            res.set_content(nlohmann::json{{"logprobs", lp}}.dump(), "application/json");
        });
        svr_.Post("/fixed", [this](const httplib::Request&, httplib::Response& res) {
            ++hits;
            res.set_content(R"({"logprobs": [[2, -0.5108256237659907], [3, -1.2039728043259361]]})",
                            "application/json");
        });
        svr_.Post("/down", [this](const httplib::Request&, httplib::Response& res) {
            ++hits;
            res.status = 503;
        });
        svr_.Post("/slow", [this](const httplib::Request&, httplib::Response& res) {
            ++hits;
            std::this_thread::sleep_for(std::chrono::milliseconds(400));
            res.set_content(R"({"logprobs": []})", "application/json");
        });
        svr_.Post("/missing", [this](const httplib::Request&, httplib::Response& res) {
            ++hits;
            res.status = 404;
        });
        svr_.Post("/garbage", [this](const httplib::Request&, httplib::Response& res) {
            ++hits;
            res.set_content("not json", "text/plain");
        });
        port_ = svr_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { svr_.listen_after_bind(); });
        svr_.wait_until_ready();
    }
    ~Server() {
        svr_.stop();
        thread_.join();
    }
    std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

    std::atomic<int> hits{0};

private:
    const NGramModel& lm_;
    httplib::Server svr_;
    int port_ = 0;
    std::thread thread_;
};

}  // namespace

TEST_CASE("n-gram: bigram count ratio") {
    NGramParams p;
    p.order = 2;
    p.add_k = 1e-9;
    p.lambdas = {0.0, 1.0};
    auto m = NGramModel::train_text(std::vector<std::string>{"a b a b"}, p);
    auto d = m.next_dist(TokenSeq{m.vocab().id("a")});
    CHECK(d[m.vocab().id("b")] > 1.0 - 1e-6);
}

TEST_CASE("n-gram: smoothed bigram with add-one over five tokens") {
    NGramParams p;
    p.order = 2;
    p.add_k = 1.0;
    p.lambdas = {0.0, 1.0};
    // |V| = 5: the reserved pair plus a, b, c; only a occurs.
    auto vocab = Vocabulary::build(std::vector<std::string>{"a", "b", "c"});
    const TokenId a = vocab.id("a");
    std::vector<TokenSeq> lines{{a, a, a}};
    auto m = NGramModel::train(vocab, lines, p);
    // After a: a twice, <eot> once.
    CHECK(m.next_dist(TokenSeq{a})[a] == doctest::Approx((2.0 + 1.0) / (3.0 + 1.0 * 5.0)).epsilon(1e-12));
}

TEST_CASE("n-gram: order 1 ignores the context") {
    NGramParams p;
    p.order = 1;
    auto m = NGramModel::train_text(kToyCorpus, p);
    auto base = m.next_dist({});
    CHECK(m.next_dist(TokenSeq{2, 3, 4}) == base);
    CHECK(m.next_dist(TokenSeq{5}) == base);
}

TEST_CASE("n-gram: empty context gives the unigram distribution") {
    NGramParams p;
    p.order = 3;
    auto m = NGramModel::train_text(kToyCorpus, p);
    auto lines = token_lines(m, kToyCorpus);
    auto unigram = oracle::ngram_dist(lines, Vocabulary::eot_id, m.vocab().size(), 1, p.add_k, {1.0}, {});
    check_same(m.next_dist({}), unigram, 1e-12);
}

TEST_CASE("n-gram: distributions match the recount oracle") {
    fixtures::CycleFixture fx;
    for (int order = 1; order <= 4; ++order) {
        NGramParams p;
        p.order = order;
        p.add_k = 0.3;
        if (order == 3) p.lambdas = {0.2, 0.3, 0.5};
        auto m = NGramModel::train_text(fx.lines, p);
        auto lines = token_lines(m, fx.lines);
        Rng rng(static_cast<std::uint64_t>(order));
        for (int trial = 0; trial < 40; ++trial) {
            TokenSeq ctx(rng.below(5));
            for (auto& t : ctx) t = static_cast<TokenId>(rng.below(m.vocab().size()));
            auto want = oracle::ngram_dist(lines, Vocabulary::eot_id, m.vocab().size(), order, p.add_k, p.lambdas,
                                           std::vector<unsigned>(ctx.begin(), ctx.end()));
            check_same(m.next_dist(ctx), want, 1e-12);
        }
    }
}

TEST_CASE("n-gram: deterministic cycle is followed by the argmax") {
    fixtures::CycleFixture fx;
    auto m = fx.model(3);
    TokenSeq ctx{m.vocab().id("f0"), m.vocab().id("c0"), m.vocab().id("c1")};
    for (int step = 0; step < 30; ++step) {
        auto next = m.next_dist(ctx).argmax();
        CHECK(m.vocab().token(next) == fx.cycle[static_cast<std::size_t>((step + 2) % fx.cycle_len)]);
        ctx.push_back(next);
    }
}

TEST_CASE("property: n-gram is deterministic, Markov-local and fully supported") {
    fixtures::DriftFixture fx;
    NGramParams p;
    p.order = 3;
    p.add_k = 0.1;
    auto m = NGramModel::train_text(fx.all_lines(), p);
    const auto V = m.vocab().size();
    std::uint64_t total1 = m.table(1).begin()->second.total;
    const double lambda1 = m.lambdas()[0];
    Rng rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        TokenSeq ctx(2 + rng.below(6));
        for (auto& t : ctx) t = static_cast<TokenId>(rng.below(V));
        auto d = m.next_dist(ctx);
        CHECK(d == m.next_dist(ctx));
        TokenSeq longer(rng.below(5));
        for (auto& t : longer) t = static_cast<TokenId>(rng.below(V));
        longer.insert(longer.end(), ctx.end() - 2, ctx.end());
        CHECK(m.next_dist(longer) == d);
        const double floor = p.add_k * lambda1 / (static_cast<double>(total1) + p.add_k * static_cast<double>(V));
        for (std::size_t i = 0; i < V; ++i) CHECK(d[i] >= floor * (1.0 - 1e-9));
    }
}

TEST_CASE("n-gram: parameter validation") {
    NGramParams p;
    p.order = 0;
    CHECK_THROWS_AS(NGramModel::train_text(kToyCorpus, p), InvalidArgument);
    p.order = 2;
    p.add_k = 0.0;
    CHECK_THROWS_AS(NGramModel::train_text(kToyCorpus, p), InvalidArgument);
    p.add_k = 0.1;
    p.lambdas = {0.5};
    CHECK_THROWS_AS(NGramModel::train_text(kToyCorpus, p), InvalidArgument);
    p.lambdas = {-1.0, 2.0};
    CHECK_THROWS_AS(NGramModel::train_text(kToyCorpus, p), InvalidArgument);
    p.lambdas = {};
    CHECK_THROWS_AS(NGramModel::train_text(std::vector<std::string>{}, p), InvalidArgument);
}

TEST_CASE("n-gram: save and load round trip") {
    fixtures::TempDir dir;
    NGramParams p;
    p.order = 3;
    p.lambdas = {0.1, 0.3, 0.6};
    auto m = NGramModel::train_text(kToyCorpus, p);
    m.save(dir / "toy.bin");
    auto back = NGramModel::load(dir / "toy.bin");
    CHECK(back == m);
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        TokenSeq ctx(rng.below(6));
        for (auto& t : ctx) t = static_cast<TokenId>(rng.below(m.vocab().size()));
        CHECK(back.next_dist(ctx) == m.next_dist(ctx));
    }
}

TEST_CASE("n-gram: damaged files are rejected") {
    fixtures::TempDir dir;
    auto m = NGramModel::train_text(kToyCorpus, NGramParams{});
    const auto bytes = m.serialize();
    for (std::size_t cut : {std::size_t{0}, std::size_t{4}, std::size_t{12}, bytes.size() / 2, bytes.size() - 1}) {
        CHECK_THROWS_AS(NGramModel::deserialize(std::string_view(bytes).substr(0, cut)), FormatError);
    }
    CHECK_THROWS_AS(NGramModel::deserialize(bytes + "x"), FormatError);
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(NGramModel::deserialize(bad_magic), FormatError);
    {
        std::ofstream out(dir / "trunc.bin", std::ios::binary);
        out << bytes.substr(0, bytes.size() - 3);
    }
    CHECK_THROWS_AS(NGramModel::load(dir / "trunc.bin"), FormatError);
    CHECK_THROWS_AS(NGramModel::load(""), InvalidArgument);
    CHECK_THROWS_AS(NGramModel::load(dir / "absent.bin"), IoError);
}

TEST_CASE("remote: uniform tail rule") {
    std::vector<LogProb> listed{{0, std::log(0.6)}, {1, std::log(0.3)}};
    auto d = complete_logprobs(listed, 4);
    CHECK(d[0] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(d[1] == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(d[2] == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(d[3] == doctest::Approx(0.05).epsilon(1e-12));

    std::vector<LogProb> full{{0, std::log(0.5)}, {1, std::log(0.5)}};
    auto e = complete_logprobs(full, 2);
    CHECK(e[0] == doctest::Approx(0.5));

    CHECK_THROWS_AS(complete_logprobs(std::vector<LogProb>{{5, -1.0}}, 4), BackendError);
    CHECK_THROWS_AS(complete_logprobs(std::vector<LogProb>{{0, -1.0}, {0, -1.0}}, 4), BackendError);
    CHECK_THROWS_AS(complete_logprobs(std::vector<LogProb>{{0, NAN}}, 4), BackendError);
    CHECK_THROWS_AS(complete_logprobs(std::vector<LogProb>{{0, 0.0}, {1, 0.0}}, 4), BackendError);
}

TEST_CASE("remote: full log-probs reproduce the served distribution") {
    auto m = NGramModel::train_text(kToyCorpus, NGramParams{});
    Server srv(m);
    RemoteLMConfig cfg;
    cfg.endpoint = srv.url("/next");
    cfg.top_n = static_cast<int>(m.vocab().size());
    RemoteLM remote(m.vocab(), cfg);
    TokenSeq ctx{m.vocab().id("the"), m.vocab().id("ridge")};
    auto got = remote.next_dist(ctx);
    auto want = m.next_dist(ctx);
    for (std::size_t i = 0; i < want.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-9));
}

TEST_CASE("remote: top-n reply with tail") {
    auto m = NGramModel::train_text(kToyCorpus, NGramParams{});
    Server srv(m);
    RemoteLMConfig cfg;
    cfg.endpoint = srv.url("/fixed");
    cfg.top_n = 2;
    auto d = remote_next_dist(cfg, 4, TokenSeq{});
    CHECK(d[2] == doctest::Approx(0.6).epsilon(1e-9));
    CHECK(d[3] == doctest::Approx(0.3).epsilon(1e-9));
    CHECK(d[0] == doctest::Approx(0.05).epsilon(1e-9));
    CHECK(d[1] == doctest::Approx(0.05).epsilon(1e-9));
}

TEST_CASE("remote: failures") {
    auto m = NGramModel::train_text(kToyCorpus, NGramParams{});
    Server srv(m);
    RemoteLMConfig cfg;
    cfg.retries = 2;
    cfg.timeout = std::chrono::milliseconds(100);

    SUBCASE("5xx is retried and reported with endpoint and attempts") {
        cfg.endpoint = srv.url("/down");
        try {
            remote_next_dist(cfg, 4, TokenSeq{});
            FAIL("expected an error");
        } catch (const BackendError& e) {
            CHECK(e.retryable());
            CHECK(e.attempts() == 3);
            CHECK(std::string(e.what()).find(cfg.endpoint) != std::string::npos);
            CHECK(std::string(e.what()).find("3 attempt") != std::string::npos);
        }
        CHECK(srv.hits == 3);
    }
    SUBCASE("timeout after retries") {
        cfg.endpoint = srv.url("/slow");
        try {
            remote_next_dist(cfg, 4, TokenSeq{});
            FAIL("expected an error");
        } catch (const BackendError& e) {
            CHECK(e.retryable());
            CHECK(e.attempts() == 3);
            CHECK(std::string(e.what()).find(cfg.endpoint) != std::string::npos);
        }
    }
    SUBCASE("4xx and bad JSON are fatal without retry") {
        cfg.endpoint = srv.url("/missing");
        CHECK_THROWS_AS(remote_next_dist(cfg, 4, TokenSeq{}), BackendError);
        CHECK(srv.hits == 1);
        cfg.endpoint = srv.url("/garbage");
        try {
            remote_next_dist(cfg, 4, TokenSeq{});
            FAIL("expected an error");
        } catch (const BackendError& e) {
            CHECK_FALSE(e.retryable());
        }
    }
    SUBCASE("unreachable server") {
        cfg.endpoint = "http://127.0.0.1:1/next";
        cfg.retries = 1;
        try {
            remote_next_dist(cfg, 4, TokenSeq{});
            FAIL("expected an error");
        } catch (const BackendError& e) {
            CHECK(e.attempts() == 2);
        }
    }
    SUBCASE("bad endpoints") {
        CHECK_THROWS_AS(RemoteLM(m.vocab(), RemoteLMConfig{"https://x/y"}), InvalidArgument);
        CHECK_THROWS_AS(RemoteLM(m.vocab(), RemoteLMConfig{"localhost:80"}), InvalidArgument);
    }
}

TEST_CASE("ngram representation") {
    fixtures::CycleFixture fx;
    auto m = fx.model(2);
    auto ctx = tokenize("f0 c3", m.vocab());
    auto rep = m.representation(ctx);
    REQUIRE(rep.has_value());
    const std::size_t n = m.vocab().size();
    REQUIRE(rep->size() == 2 * n);
    auto d = m.next_dist(ctx);
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) norm += d[i] * d[i];
    for (std::size_t i = 0; i < n; ++i) {
        CHECK((*rep)[i] == (i == ctx.back() ? 1.0 : 0.0));
        CHECK((*rep)[n + i] == doctest::Approx(d[i] / std::sqrt(norm)).epsilon(1e-12));
    }
    auto empty = m.representation(TokenSeq{});
    for (std::size_t i = 0; i < n; ++i) CHECK((*empty)[i] == 0.0);
}
