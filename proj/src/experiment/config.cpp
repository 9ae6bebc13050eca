// Copyright 2026 The Lookback Authors
// SPDX-License-Identifier: Apache-2.0

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "lookback/error.hpp"
#include "lookback/experiment.hpp"

namespace lookback {

namespace {

namespace pt = boost::property_tree;

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad(const std::string& where, const std::string& what) {
    throw InvalidArgument("config " + where + ": " + what);
}

long long to_int(const std::string& where, const std::string& v) {
    long long out = 0;
    auto s = trim(v);
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty()) bad(where, "expected an integer, got '" + v + "'");
    return out;
}

std::uint64_t to_u64(const std::string& where, const std::string& v) {
    std::uint64_t out = 0;
    auto s = trim(v);
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty()) {
        bad(where, "expected an unsigned integer, got '" + v + "'");
    }
    return out;
}

double to_double(const std::string& where, const std::string& v) {
    auto s = trim(v);
    std::istringstream is(s);
    is.imbue(std::locale::classic());
    double out = 0.0;
    is >> out;
    if (s.empty() || is.fail() || !is.eof()) bad(where, "expected a number, got '" + v + "'");
    return out;
}

bool to_bool(const std::string& where, const std::string& v) {
    auto s = trim(v);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    bad(where, "expected true/false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : v) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
    return out;
}

double tidy(double x) { return std::round(x * 1e10) / 1e10; }

// "0.5, 0.7" or "lo:hi:step".
std::vector<double> to_grid(const std::string& where, const std::string& v) {
    std::vector<double> out;
    if (v.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::string cur;
        for (char c : v) {
            if (c == ':') {
                parts.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        parts.push_back(cur);
        if (parts.size() != 3) bad(where, "range must be lo:hi:step");
        double lo = to_double(where, parts[0]), hi = to_double(where, parts[1]), step = to_double(where, parts[2]);
        if (!(step > 0.0) || hi < lo) bad(where, "range needs lo <= hi and step > 0");
        auto n = static_cast<long long>(std::floor((hi - lo) / step + 1e-9)) + 1;
        for (long long i = 0; i < n; ++i) out.push_back(tidy(lo + static_cast<double>(i) * step));
    } else {
        for (const auto& s : split_list(v)) out.push_back(to_double(where, s));
    }
    if (out.empty()) bad(where, "empty list");
    return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& v) {
    std::filesystem::path p(trim(v));
    if (p.empty() || p.is_absolute() || base.empty()) return p;
    return base / p;
}

PromptMode to_prompt_mode(const std::string& where, const std::string& v) {
    auto s = trim(v);
    if (s == "tokens") return PromptMode::tokens;
    if (s == "first-field") return PromptMode::first_field;
    bad(where, "prompt_mode must be 'tokens' or 'first-field'");
}

template <typename Fn>
void each_key(const pt::ptree& section, const std::string& name, const std::set<std::string>& allowed, Fn&& fn) {
    for (const auto& [key, value] : section) {
        const std::string where = "[" + name + "] " + key;
        if (!allowed.count(key)) bad(where, "unknown key");
        fn(key, value.data(), where);
    }
}

void parse_experiment(const pt::ptree& s, ExperimentConfig& cfg, const std::filesystem::path& base) {
    each_key(s, "experiment",
             {"train", "validation", "test", "prefix_len", "num_instances", "max_new_tokens", "seed", "out", "workers",
              "prompt_mode", "diagnostics"},
             [&](const std::string& k, const std::string& v, const std::string& w) {
                 if (k == "train") cfg.train = resolve(base, v);
                 else if (k == "validation") cfg.validation = resolve(base, v);
                 else if (k == "test") cfg.test = resolve(base, v);
                 else if (k == "prefix_len") cfg.prefix_len = static_cast<std::size_t>(std::max(0LL, to_int(w, v)));
                 else if (k == "num_instances") cfg.num_instances = static_cast<std::size_t>(std::max(0LL, to_int(w, v)));
                 else if (k == "max_new_tokens") cfg.max_new_tokens = static_cast<int>(to_int(w, v));
                 else if (k == "seed") cfg.seed = to_u64(w, v);
                 else if (k == "out") cfg.out = resolve(base, v);
                 else if (k == "workers") cfg.workers = static_cast<int>(to_int(w, v));
                 else if (k == "prompt_mode") cfg.prompt_mode = to_prompt_mode(w, v);
                 else if (k == "diagnostics") cfg.diagnostics = to_bool(w, v);
             });
}

void parse_backend(const pt::ptree& s, ExperimentConfig& cfg, const std::filesystem::path& base) {
    each_key(s, "backend",
             {"type", "model", "order", "add_k", "lambdas", "endpoint", "top_n", "timeout_ms", "retries",
              "accepts_empty_context", "vocab"},
             [&](const std::string& k, const std::string& v, const std::string& w) {
                 auto& b = cfg.backend;
                 if (k == "type") {
                     auto t = trim(v);
                     if (t == "ngram") b.kind = BackendSpec::Kind::ngram;
                     else if (t == "remote") b.kind = BackendSpec::Kind::remote;
                     else bad(w, "type must be 'ngram' or 'remote'");
                 } else if (k == "model") b.model = resolve(base, v);
                 else if (k == "order") b.ngram.order = static_cast<int>(to_int(w, v));
                 else if (k == "add_k") b.ngram.add_k = to_double(w, v);
                 else if (k == "lambdas") {
                     b.ngram.lambdas.clear();
                     for (const auto& x : split_list(v)) b.ngram.lambdas.push_back(to_double(w, x));
                 } else if (k == "endpoint") b.remote.endpoint = trim(v);
                 else if (k == "top_n") b.remote.top_n = static_cast<int>(to_int(w, v));
                 else if (k == "timeout_ms") b.remote.timeout = std::chrono::milliseconds(to_int(w, v));
                 else if (k == "retries") b.remote.retries = static_cast<int>(to_int(w, v));
                 else if (k == "accepts_empty_context") b.remote.accepts_empty_context = to_bool(w, v);
                 else if (k == "vocab") b.vocab = resolve(base, v);
             });
}

DecoderSpec parse_decoder(const pt::ptree& s, const std::string& name, int default_max_new_tokens) {
    DecoderSpec d;
    d.name = name;
    auto alg = s.get_optional<std::string>("algorithm");
    if (!alg) bad("[decoder." + name + "]", "missing 'algorithm'");
    d.config.algorithm = parse_algorithm(trim(*alg));
    d.config.max_new_tokens = default_max_new_tokens;
    each_key(s, "decoder." + name,
             {"algorithm", "max_new_tokens", "top_p", "tau", "eta", "k", "alpha", "mode", "history_includes_prefix",
              "track_signals", "summary_top"},
             [&](const std::string& k, const std::string& v, const std::string& w) {
                 auto& c = d.config;
                 const bool lb = c.algorithm == Algorithm::lookback;
                 const bool cs = c.algorithm == Algorithm::contrastive;
                 if (k == "algorithm") return;
                 if (k == "max_new_tokens") c.max_new_tokens = static_cast<int>(to_int(w, v));
                 else if (k == "top_p") c.top_p = to_double(w, v);
                 else if (k == "tau") c.tau = to_double(w, v);
                 else if (k == "eta") c.eta = to_double(w, v);
                 else if (k == "k") {
                     if (!lb && !cs) bad(w, "'k' applies to lookback and contrastive decoders only");
                     (lb ? c.lookback_k : c.contrastive_k) = static_cast<int>(to_int(w, v));
                 } else if (k == "alpha") {
                     if (!lb && !cs) bad(w, "'alpha' applies to lookback and contrastive decoders only");
                     (lb ? c.lookback_alpha : c.contrastive_alpha) = to_double(w, v);
                 } else if (k == "mode") c.lookback_mode = parse_lookback_mode(trim(v));
                 else if (k == "history_includes_prefix") c.history_includes_prefix = to_bool(w, v);
                 else if (k == "track_signals") c.track_signals = to_bool(w, v);
                 else if (k == "summary_top") c.summary_top = static_cast<int>(to_int(w, v));
             });
    try {
        d.config.validate();
    } catch (const InvalidArgument& e) {
        bad("[decoder." + name + "]", e.what());
    }
    return d;
}

void parse_sweep(const pt::ptree& s, ExperimentConfig& cfg) {
    each_key(s, "sweep", {"k", "alpha", "mode"}, [&](const std::string& k, const std::string& v, const std::string& w) {
        if (k == "k") {
            cfg.sweep.ks.clear();
            for (const auto& x : split_list(v)) cfg.sweep.ks.push_back(static_cast<int>(to_int(w, x)));
        } else if (k == "alpha") cfg.sweep.alphas = to_grid(w, v);
        else if (k == "mode") cfg.sweep.mode = parse_lookback_mode(trim(v));
    });
}

void parse_mauve(const pt::ptree& s, ExperimentConfig& cfg) {
    each_key(s, "mauve", {"clusters", "iterations", "restarts", "scaling", "grid", "epsilon", "seed"},
             [&](const std::string& k, const std::string& v, const std::string& w) {
                 auto& m = cfg.mauve;
                 if (k == "clusters") m.num_clusters = static_cast<int>(to_int(w, v));
                 else if (k == "iterations") m.kmeans_iterations = static_cast<int>(to_int(w, v));
                 else if (k == "restarts") m.kmeans_restarts = static_cast<int>(to_int(w, v));
                 else if (k == "scaling") m.scaling = to_double(w, v);
                 else if (k == "grid") m.grid_size = static_cast<int>(to_int(w, v));
                 else if (k == "epsilon") m.epsilon = to_double(w, v);
                 else if (k == "seed") m.seed = to_u64(w, v);
             });
}

void parse_embedder(const pt::ptree& s, ExperimentConfig& cfg) {
    each_key(s, "embedder", {"endpoint", "dimension"},
             [&](const std::string& k, const std::string& v, const std::string& w) {
                 if (k == "endpoint") cfg.embedder_endpoint = trim(v);
                 else cfg.embedder_dimension = static_cast<std::size_t>(std::max(0LL, to_int(w, v)));
             });
}

}  // namespace

std::vector<double> default_alpha_grid() {
    std::vector<double> g;
    for (int i = 0; i <= 11; ++i) g.push_back(tidy(0.5 + 0.1 * i));
    return g;
}

ExperimentConfig parse_experiment_config(const std::string& text, const std::filesystem::path& base_dir) {
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw InvalidArgument("config line " + std::to_string(e.line()) + ": " + e.message());
    }
    ExperimentConfig cfg;
    cfg.sweep.alphas = default_alpha_grid();
    // [experiment] first: decoders inherit its max_new_tokens.
    if (auto exp = tree.get_child_optional(pt::ptree::path_type("experiment", '\0'))) {
        parse_experiment(*exp, cfg, base_dir);
    }
    for (const auto& [name, section] : tree) {
        if (!section.data().empty() && section.empty()) bad(name, "key outside of any section");
        if (name == "experiment") continue;
        if (name == "backend") parse_backend(section, cfg, base_dir);
        else if (name == "sweep") parse_sweep(section, cfg);
        else if (name == "mauve") parse_mauve(section, cfg);
        else if (name == "embedder") parse_embedder(section, cfg);
        else if (name.rfind("decoder.", 0) == 0 && name.size() > 8) {
            auto spec = parse_decoder(section, name.substr(8), cfg.max_new_tokens);
            for (const auto& d : cfg.decoders) {
                if (d.name == spec.name) bad("[" + name + "]", "duplicate decoder name");
            }
            cfg.decoders.push_back(std::move(spec));
        } else {
            bad("[" + name + "]", "unknown section");
        }
    }
    return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_experiment_config(ss.str(), path.parent_path());
}

void ExperimentConfig::validate() const {
    auto need = [](const std::filesystem::path& p, const char* what) {
        if (p.empty()) throw InvalidArgument(std::string("config: ") + what + " path is not set");
        if (!std::filesystem::exists(p)) throw IoError(std::string("config: ") + what + " '" + p.string() + "' does not exist");
    };
    if (prefix_len < 1) throw InvalidArgument("config: prefix_len must be >= 1");
    if (num_instances < 1) throw InvalidArgument("config: num_instances must be >= 1");
    if (max_new_tokens < 0) throw InvalidArgument("config: max_new_tokens must be >= 0");
    if (workers < 1) throw InvalidArgument("config: workers must be >= 1");
    need(test, "test corpus");
    if (!validation.empty()) need(validation, "validation corpus");
    if (!train.empty()) need(train, "train corpus");
    if (backend.kind == BackendSpec::Kind::ngram) {
        if (backend.model.empty() || !std::filesystem::exists(backend.model)) {
            if (train.empty()) throw InvalidArgument("config: n-gram backend needs an existing model or a train corpus");
        }
    } else {
        if (backend.remote.endpoint.empty()) throw InvalidArgument("config: remote backend needs an endpoint");
        need(backend.vocab, "remote vocabulary");
    }
    if (!embedder_endpoint.empty() && embedder_dimension == 0) {
        throw InvalidArgument("config: [embedder] endpoint needs a dimension");
    }
    for (const auto& d : decoders) d.config.validate();
    for (int k : sweep.ks) {
        if (k < 1) throw InvalidArgument("config: sweep k must be >= 1");
    }
}

std::unique_ptr<ConditionalLM> make_backend(const ExperimentConfig& cfg) {
    if (cfg.backend.kind == BackendSpec::Kind::remote) {
        return std::make_unique<RemoteLM>(Vocabulary::load(cfg.backend.vocab), cfg.backend.remote);
    }
    if (!cfg.backend.model.empty() && std::filesystem::exists(cfg.backend.model)) {
        return std::make_unique<NGramModel>(NGramModel::load(cfg.backend.model));
    }
    auto lines = read_lines(cfg.train);
    return std::make_unique<NGramModel>(NGramModel::train_text(lines, cfg.backend.ngram));
}

}  // namespace lookback
