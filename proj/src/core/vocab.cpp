// Copyright 2026 The Lookback Authors
// SPDX-License-Identifier: Apache-2.0

#include "lookback/core.hpp"

#include <fstream>
#include <set>

#include "lookback/error.hpp"

namespace lookback {

namespace {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
    tokens_.reserve(tokens.size() + 2);
    tokens_.emplace_back(unk_token);
    tokens_.emplace_back(eot_token);
    index_.emplace(std::string(unk_token), unk_id);
    index_.emplace(std::string(eot_token), eot_id);
    for (auto& t : tokens) {
        if (t.empty()) throw InvalidArgument("vocabulary: empty token");
        if (split_whitespace(t).size() != 1 || split_whitespace(t)[0].size() != t.size()) {
            throw InvalidArgument("vocabulary: token '" + t + "' contains whitespace");
        }
        if (index_.find(t) != index_.end()) throw InvalidArgument("vocabulary: duplicate token '" + t + "'");
        index_.emplace(t, static_cast<TokenId>(tokens_.size()));
        tokens_.push_back(std::move(t));
    }
}

Vocabulary Vocabulary::build(std::span<const std::string> words) {
    return Vocabulary(std::vector<std::string>(words.begin(), words.end()));
}

Vocabulary Vocabulary::from_text(std::span<const std::string> lines) {
    std::vector<std::string> words;
    std::set<std::string_view> seen{unk_token, eot_token};
    for (const auto& line : lines) {
        for (auto w : split_whitespace(line)) {
            if (seen.insert(w).second) words.emplace_back(w);
        }
    }
    return Vocabulary(std::move(words));
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open vocabulary file '" + path.string() + "'");
    std::vector<std::string> lines;
    std::size_t offset = 0;
    std::string line;
    std::vector<std::size_t> offsets;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        offsets.push_back(offset);
        offset += line.size() + 1;
        lines.push_back(line);
    }
    if (lines.size() < 2 || lines[0] != unk_token || lines[1] != eot_token) {
        throw FormatError("vocabulary file '" + path.string() + "' must start with <unk> and <eot>", 0);
    }
    std::map<std::string, TokenId, std::less<>> seen;
    for (std::size_t i = 2; i < lines.size(); ++i) {
        const auto parts = split_whitespace(lines[i]);
        if (parts.size() != 1 || parts[0].size() != lines[i].size() || lines[i] == unk_token ||
            lines[i] == eot_token || !seen.emplace(lines[i], 0).second) {
            throw FormatError("vocabulary file '" + path.string() + "': invalid or duplicate token on line " +
                                  std::to_string(i + 1),
                              offsets[i]);
        }
    }
    return Vocabulary(std::vector<std::string>(lines.begin() + 2, lines.end()));
}

void Vocabulary::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write vocabulary file '" + path.string() + "'");
    for (const auto& t : tokens_) out << t << '\n';
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
    auto it = index_.find(token);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

TokenId Vocabulary::id(std::string_view token) const { return find(token).value_or(unk_id); }

const std::string& Vocabulary::token(TokenId id) const {
    if (id >= tokens_.size()) throw InvalidArgument("token id " + std::to_string(id) + " out of range");
    return tokens_[id];
}

std::vector<std::string_view> split_whitespace(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        std::size_t start = i;
        while (i < text.size() && !is_space(text[i])) ++i;
        if (i > start) out.push_back(text.substr(start, i - start));
    }
    return out;
}

TokenSeq tokenize(std::string_view text, const Vocabulary& vocab) {
    TokenSeq ids;
    for (auto w : split_whitespace(text)) ids.push_back(vocab.id(w));
    return ids;
}

std::string detokenize(std::span<const TokenId> ids, const Vocabulary& vocab) {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) out += ' ';
        out += vocab.token(ids[i]);
    }
    return out;
}

void check_tokens(std::span<const TokenId> ids, const Vocabulary& vocab) {
    for (auto id : ids) {
        if (!vocab.contains(id)) {
            throw InvalidArgument("token id " + std::to_string(id) + " outside vocabulary of size " +
                                  std::to_string(vocab.size()));
        }
    }
}

}  // namespace lookback
