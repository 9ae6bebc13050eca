// Copyright 2026 The Lookback Authors
// SPDX-License-Identifier: Apache-2.0

#include "lookback/ngram.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

#include "lookback/error.hpp"

namespace lookback {

namespace {

constexpr char kMagic[8] = {'L', 'B', 'N', 'G', 'R', 'A', 'M', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

// Little-endian encoder for the model container.
class Writer {
public:
    void bytes(const void* data, std::size_t n) { out_.append(static_cast<const char*>(data), n); }
    void u32(std::uint32_t v) { le(v); }
    void u64(std::uint64_t v) { le(v); }
    void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }
    std::string take() { return std::move(out_); }

private:
    template <typename T>
    void le(T v) {
        for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    std::string out_;
};

class Reader {
public:
    explicit Reader(std::string_view in) : in_(in) {}

    std::size_t offset() const { return pos_; }
    bool at_end() const { return pos_ == in_.size(); }

    std::string_view bytes(std::size_t n, const char* what) {
        if (in_.size() - pos_ < n) fail(std::string("truncated file while reading ") + what);
        auto s = in_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::uint32_t u32(const char* what) { return le<std::uint32_t>(what); }
    std::uint64_t u64(const char* what) { return le<std::uint64_t>(what); }
    double f64(const char* what) { return std::bit_cast<double>(le<std::uint64_t>(what)); }
    std::string str(const char* what) {
        auto n = u32(what);
        return std::string(bytes(n, what));
    }

    [[noreturn]] void fail(const std::string& msg) const { throw FormatError("n-gram model: " + msg, pos_); }
    [[noreturn]] void fail_at(const std::string& msg, std::size_t at) const {
        throw FormatError("n-gram model: " + msg, at);
    }

private:
    template <typename T>
    T le(const char* what) {
        auto b = bytes(sizeof(T), what);
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<unsigned char>(b[i])) << (8 * i);
        return v;
    }

    std::string_view in_;
    std::size_t pos_ = 0;
};

}  // namespace

void NGramModel::validate_params(const NGramParams& params, std::vector<double>& lambdas) {
    if (params.order < 1) throw InvalidArgument("n-gram order must be >= 1");
    if (!(params.add_k > 0.0) || !std::isfinite(params.add_k)) throw InvalidArgument("add_k must be > 0");
    lambdas = params.lambdas;
    if (lambdas.empty()) lambdas.assign(static_cast<std::size_t>(params.order), 1.0 / params.order);
    if (lambdas.size() != static_cast<std::size_t>(params.order)) {
        throw InvalidArgument("expected " + std::to_string(params.order) + " interpolation weights, got " +
                              std::to_string(lambdas.size()));
    }
    double sum = 0.0;
    for (double l : lambdas) {
        if (!(l >= 0.0) || !std::isfinite(l)) throw InvalidArgument("interpolation weights must be >= 0");
        sum += l;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("interpolation weights must sum to 1");
}

NGramModel NGramModel::train(Vocabulary vocab, std::span<const TokenSeq> lines, const NGramParams& params) {
    NGramModel m;
    validate_params(params, m.lambdas_);
    m.order_ = params.order;
    m.add_k_ = params.add_k;
    m.tables_.resize(static_cast<std::size_t>(params.order));

    std::size_t used = 0;
    TokenSeq seq;
    for (const auto& line : lines) {
        if (line.empty()) continue;
        check_tokens(line, vocab);
        ++used;
        seq.assign(line.begin(), line.end());
        seq.push_back(Vocabulary::eot_id);
        for (std::size_t i = 0; i < seq.size(); ++i) {
            for (int o = 1; o <= params.order; ++o) {
                auto ctx_len = static_cast<std::size_t>(o - 1);
                if (ctx_len > i) break;
                TokenSeq ctx(seq.begin() + static_cast<std::ptrdiff_t>(i - ctx_len),
                             seq.begin() + static_cast<std::ptrdiff_t>(i));
                auto& table = m.tables_[static_cast<std::size_t>(o - 1)][std::move(ctx)];
                ++table.total;
                ++table.counts[seq[i]];
            }
        }
    }
    if (used == 0) throw InvalidArgument("cannot train an n-gram model on an empty corpus");
    m.vocab_ = std::move(vocab);
    return m;
}

NGramModel NGramModel::train_text(std::span<const std::string> lines, const NGramParams& params) {
    auto vocab = Vocabulary::from_text(lines);
    std::vector<TokenSeq> seqs;
    seqs.reserve(lines.size());
    for (const auto& l : lines) seqs.push_back(tokenize(l, vocab));
    return train(std::move(vocab), seqs, params);
}

ProbDist NGramModel::next_dist(std::span<const TokenId> context) const {
    const std::size_t V = vocab_.size();
    const int usable = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(order_), context.size() + 1));

    double weight_sum = 0.0;
    for (int o = 1; o <= usable; ++o) weight_sum += lambdas_[static_cast<std::size_t>(o - 1)];

    std::vector<double> mix(V, 0.0);
    TokenSeq ctx;
    for (int o = 1; o <= usable; ++o) {
        double w = weight_sum > 0.0 ? lambdas_[static_cast<std::size_t>(o - 1)] / weight_sum : (o == usable ? 1.0 : 0.0);
        if (w == 0.0) continue;
        auto ctx_len = static_cast<std::size_t>(o - 1);
        ctx.assign(context.end() - static_cast<std::ptrdiff_t>(ctx_len), context.end());
        const auto& table = tables_[static_cast<std::size_t>(o - 1)];
        auto it = table.find(ctx);
        const double total = it == table.end() ? 0.0 : static_cast<double>(it->second.total);
        const double denom = total + add_k_ * static_cast<double>(V);
        const double base = w * add_k_ / denom;
        for (auto& v : mix) v += base;
        if (it != table.end()) {
            for (const auto& [id, c] : it->second.counts) mix[id] += w * static_cast<double>(c) / denom;
        }
    }
    return dist_normalize(mix);
}

std::optional<std::vector<double>> NGramModel::representation(std::span<const TokenId> context) const {
    const std::size_t n = vocab_.size();
    std::vector<double> rep(2 * n, 0.0);
    if (!context.empty()) rep[context.back()] = 1.0;
    auto d = next_dist(context);
    double norm = 0.0;
    for (double p : d.probs()) norm += p * p;
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < n; ++i) rep[n + i] = d[i] / norm;
    return rep;
}

std::string NGramModel::backend_id() const {
    std::ostringstream os;
    os << "ngram(order=" << order_ << ",add_k=" << add_k_ << ",vocab=" << vocab_.size() << ")";
    return os.str();
}

std::string NGramModel::serialize() const {
    Writer w;
    w.bytes(kMagic, sizeof kMagic);
    w.u32(kFormatVersion);
    w.u32(static_cast<std::uint32_t>(order_));
    w.f64(add_k_);
    for (double l : lambdas_) w.f64(l);
    w.u32(static_cast<std::uint32_t>(vocab_.size()));
    for (const auto& t : vocab_.tokens()) w.str(t);
    for (const auto& table : tables_) {
        w.u64(table.size());
        for (const auto& [ctx, ct] : table) {
            for (auto id : ctx) w.u32(id);
            w.u64(ct.total);
            w.u32(static_cast<std::uint32_t>(ct.counts.size()));
            for (const auto& [id, c] : ct.counts) {
                w.u32(id);
                w.u64(c);
            }
        }
    }
    return w.take();
}

NGramModel NGramModel::deserialize(std::string_view bytes) {
    Reader r(bytes);
    auto magic = r.bytes(sizeof kMagic, "magic");
    if (std::memcmp(magic.data(), kMagic, sizeof kMagic) != 0) r.fail_at("bad magic, not an n-gram model file", 0);
    auto version_at = r.offset();
    auto version = r.u32("version");
    if (version != kFormatVersion) {
        r.fail_at("unsupported format version " + std::to_string(version) + " (expected " +
                      std::to_string(kFormatVersion) + ")",
                  version_at);
    }

    NGramModel m;
    auto order_at = r.offset();
    auto order = r.u32("order");
    if (order < 1 || order > 64) r.fail_at("order out of range", order_at);
    NGramParams params;
    params.order = static_cast<int>(order);
    params.add_k = r.f64("add_k");
    for (std::uint32_t i = 0; i < order; ++i) params.lambdas.push_back(r.f64("lambda"));
    try {
        validate_params(params, m.lambdas_);
    } catch (const InvalidArgument& e) {
        r.fail_at(e.what(), order_at);
    }
    m.order_ = params.order;
    m.add_k_ = params.add_k;

    auto vocab_at = r.offset();
    auto vsize = r.u32("vocabulary size");
    if (vsize < 2) r.fail_at("vocabulary too small", vocab_at);
    std::vector<std::string> words;
    for (std::uint32_t i = 0; i < vsize; ++i) {
        auto at = r.offset();
        auto s = r.str("vocabulary token");
        if (i == 0 && s != Vocabulary::unk_token) r.fail_at("first token must be <unk>", at);
        if (i == 1 && s != Vocabulary::eot_token) r.fail_at("second token must be <eot>", at);
        if (i >= 2) words.push_back(std::move(s));
    }
    m.vocab_ = Vocabulary::build(words);
    if (m.vocab_.size() != vsize) r.fail_at("duplicate vocabulary tokens", vocab_at);

    m.tables_.resize(order);
    for (std::uint32_t o = 1; o <= order; ++o) {
        auto n_ctx = r.u64("context count");
        auto& table = m.tables_[o - 1];
        for (std::uint64_t c = 0; c < n_ctx; ++c) {
            auto entry_at = r.offset();
            TokenSeq ctx(o - 1);
            for (auto& id : ctx) {
                id = r.u32("context id");
                if (id >= vsize) r.fail_at("context id out of range", entry_at);
            }
            CountTable ct;
            ct.total = r.u64("context total");
            auto n = r.u32("entry count");
            if (n == 0) r.fail_at("context without counts", entry_at);
            std::uint64_t sum = 0;
            for (std::uint32_t e = 0; e < n; ++e) {
                auto id = r.u32("token id");
                auto count = r.u64("count");
                if (id >= vsize || count == 0) r.fail_at("invalid count entry", entry_at);
                if (!ct.counts.emplace(id, count).second) r.fail_at("duplicate count entry", entry_at);
                sum += count;
            }
            if (sum != ct.total) r.fail_at("context total does not match its counts", entry_at);
            if (!table.emplace(std::move(ctx), std::move(ct)).second) r.fail_at("duplicate context", entry_at);
        }
    }
    if (!r.at_end()) r.fail("trailing bytes after model");
    return m;
}

void NGramModel::save(const std::filesystem::path& path) const {
    if (path.empty()) throw InvalidArgument("model path is empty");
    auto bytes = serialize();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write model file '" + path.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

NGramModel NGramModel::load(const std::filesystem::path& path) {
    if (path.empty()) throw InvalidArgument("model path is empty");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file '" + path.string() + "'");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

}  // namespace lookback
