#include "impact/query_encoder.hpp"

#include <algorithm>

namespace impact {

std::uint32_t SparseTermVector::count(token_id token) const noexcept
{
    auto it = std::lower_bound(terms.begin(), terms.end(), token,
                               [](const TermCount& t, token_id id) { return t.token < id; });
    return it != terms.end() && it->token == token ? it->count : 0;
}

std::uint64_t SparseTermVector::total() const noexcept
{
    std::uint64_t sum = 0;
    for (const auto& t : terms) {
        sum += t.count;
    }
    return sum;
}

SparseTermVector encode_tokens(const TokenSequence& tokens, std::optional<token_id> unk, const StopwordSet& stop)
{
    std::vector<token_id> kept;
    kept.reserve(tokens.size());
    for (auto id : tokens.ids) {
        if (id != unk && !stop.contains(id)) {
            kept.push_back(id);
        }
    }
    std::sort(kept.begin(), kept.end());

    SparseTermVector out;
    for (auto id : kept) {
        if (!out.terms.empty() && out.terms.back().token == id) {
            ++out.terms.back().count;
        } else {
            out.terms.push_back({id, 1});
        }
    }
    return out;
}

SparseTermVector encode_query(std::string_view text, const Vocabulary& vocab, const StopwordSet& stop)
{
    return encode_tokens(tokenize(text, vocab), vocab.unk_id(), stop);
}

SparseTermVector merge(const SparseTermVector& a, const SparseTermVector& b)
{
    SparseTermVector out;
    auto i = a.terms.begin();
    auto j = b.terms.begin();
    while (i != a.terms.end() || j != b.terms.end()) {
        if (j == b.terms.end() || (i != a.terms.end() && i->token < j->token)) {
            out.terms.push_back(*i++);
        } else if (i == a.terms.end() || j->token < i->token) {
            out.terms.push_back(*j++);
        } else {
            out.terms.push_back({i->token, i->count + j->count});
            ++i;
            ++j;
        }
    }
    return out;
}

}  // namespace impact
