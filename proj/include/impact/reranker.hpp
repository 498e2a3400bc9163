#pragma once

#include <cstddef>
#include <vector>

#include "impact/impact_index.hpp"
#include "impact/query_encoder.hpp"
#include "impact/ranked_list.hpp"

namespace impact {

/// Exact term matching: sum over query tokens of count times the passage's
/// stored max weight for that token (zero when absent). Accumulated in double.
double score(const SparseTermVector& query, const PassageImpactEntry& entry) noexcept;

enum class MissingPolicy { skip, fail };

struct RerankRequest {
    SparseTermVector query;
    RankedList candidates;  // first-stage order, ids in the impact index's id space
    std::size_t cutoff = 1000;
};

struct RerankOptions {
    MissingPolicy missing = MissingPolicy::skip;
    /// Workers scoring disjoint candidate slices; 1 keeps everything on the caller's thread.
    std::size_t threads = 1;
};

struct RerankResult {
    RankedList ranking;
    std::vector<passage_id> skipped;  // candidates absent from the index
};

/// Rescores the first `cutoff` candidates and stable-sorts them by descending
/// score, so ties keep first-stage order. Throws InvalidArgument for cutoff 0
/// and UnknownPassage for a missing candidate under MissingPolicy::fail.
RerankResult rerank(const RerankRequest& request, const ImpactIndex& index, const RerankOptions& options = {});

}  // namespace impact
