#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "impact/types.hpp"
#include "impact/vocab.hpp"

namespace impact {

struct TermCount {
    token_id token;
    std::uint32_t count;

    bool operator==(const TermCount&) const = default;
};

/// Query as token-id -> frequency, sorted by token id. Stopwords and [UNK]
/// never appear as keys.
struct SparseTermVector {
    std::vector<TermCount> terms;

    std::uint32_t count(token_id token) const noexcept;
    std::uint64_t total() const noexcept;
    bool empty() const noexcept { return terms.empty(); }
    bool operator==(const SparseTermVector&) const = default;
};

SparseTermVector encode_query(std::string_view text, const Vocabulary& vocab, const StopwordSet& stop);

/// Same as encode_query but over an already tokenized sequence.
SparseTermVector encode_tokens(const TokenSequence& tokens, std::optional<token_id> unk, const StopwordSet& stop);

/// Adds counts term-wise.
SparseTermVector merge(const SparseTermVector& a, const SparseTermVector& b);

}  // namespace impact
