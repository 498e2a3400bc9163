#include "impact/reranker.hpp"

#include <algorithm>
#include <thread>

#include "impact/error.hpp"

namespace impact {

double score(const SparseTermVector& query, const PassageImpactEntry& entry) noexcept
{
    double total = 0.0;
    auto it = entry.postings.begin();
    const auto end = entry.postings.end();
    for (const auto& term : query.terms) {
        // both sides ascend by token id
        it = std::lower_bound(it, end, term.token, [](const ImpactPosting& p, token_id t) { return p.token < t; });
        if (it == end) {
            break;
        }
        if (it->token == term.token) {
            total += static_cast<double>(term.count) * static_cast<double>(it->weight);
        }
    }
    return total;
}

RerankResult rerank(const RerankRequest& request, const ImpactIndex& index, const RerankOptions& options)
{
    if (request.cutoff == 0) {
        throw error(errc::invalid_argument, "re-rank cutoff must be at least 1");
    }
    const auto& candidates = request.candidates.entries;
    const std::size_t n = std::min(request.cutoff, candidates.size());

    RerankResult result;
    for (std::size_t i = 0; i < n; ++i) {
        if (index.find(candidates[i].id) == nullptr) {
            if (options.missing == MissingPolicy::fail) {
                throw error(errc::unknown_passage, "candidate " + std::to_string(candidates[i].id) + " not in impact index");
            }
            result.skipped.push_back(candidates[i].id);
        }
    }

    auto& out = result.ranking.entries;
    out.reserve(n - result.skipped.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (index.find(candidates[i].id) != nullptr) {
            out.push_back({candidates[i].id, 0.0});
        }
    }

    auto score_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            out[i].score = score(request.query, *index.find(out[i].id));
        }
    };
    std::size_t workers = std::clamp<std::size_t>(options.threads, 1, std::max<std::size_t>(1, out.size() / 64));
    if (workers <= 1) {
        score_range(0, out.size());
    } else {
        std::vector<std::jthread> pool;
        std::size_t chunk = (out.size() + workers - 1) / workers;
        for (std::size_t begin = 0; begin < out.size(); begin += chunk) {
            pool.emplace_back(score_range, begin, std::min(out.size(), begin + chunk));
        }
    }

    std::stable_sort(out.begin(), out.end(),
                     [](const ScoredPassage& a, const ScoredPassage& b) { return a.score > b.score; });
    return result;
}

}  // namespace impact
