#pragma once

#include <vector>

#include "impact/types.hpp"

namespace impact {

struct ScoredPassage {
    passage_id id;
    double score;

    bool operator==(const ScoredPassage&) const = default;
};

/// Results in rank order, best first.
struct RankedList {
    std::vector<ScoredPassage> entries;

    std::size_t size() const noexcept { return entries.size(); }
    bool empty() const noexcept { return entries.empty(); }
    bool operator==(const RankedList&) const = default;
};

/// Descending score, ascending id on ties.
inline bool ranks_before(const ScoredPassage& a, const ScoredPassage& b) noexcept
{
    return a.score > b.score || (a.score == b.score && a.id < b.id);
}

}  // namespace impact
