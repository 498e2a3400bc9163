#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "impact/likelihood.hpp"
#include "impact/types.hpp"
#include "impact/vocab.hpp"

namespace impact {

struct ExpansionConfig {
    std::size_t m = 128;  // how many of the top-ranked tokens are inspected
    StopwordSet stopwords;
};

struct ExpandedPassage {
    TokenSequence original;
    std::vector<token_id> appended;  // descending likelihood

    TokenSequence full() const;
};

/// Sorts the distribution descending (ties: ascending token id), inspects the
/// top m tokens, and appends each one that is neither in the passage nor a
/// stopword. Filtered tokens are not replaced by lower-ranked ones, so at most
/// m tokens are appended. Throws InvalidArgument when the distribution length
/// differs from the stopword set's vocabulary size or holds non-finite values.
ExpandedPassage expand_passage(const TokenSequence& passage, const LikelihoodDistribution& likelihood,
                               const ExpansionConfig& config);

struct NamedPassage {
    std::string id;
    TokenSequence tokens;
};

struct ExpansionStats {
    std::size_t passages = 0;
    std::size_t total_appended = 0;
    double mean_appended = 0.0;
    double p50_appended = 0.0;
    double wall_seconds = 0.0;
    double passages_per_second = 0.0;
    std::size_t failures = 0;

    nlohmann::json to_json() const;
};

struct ExpansionFailure {
    std::string id;
    std::string message;
};

struct ExpansionOutput {
    std::vector<ExpandedPassage> passages;  // same order as the input
    std::vector<ExpansionFailure> failures;
    ExpansionStats stats;
};

struct ExpansionRunOptions {
    bool strict = false;      // rethrow the first provider failure
    std::size_t threads = 1;  // workers; output order is unaffected
};

/// A passage whose distribution cannot be produced is kept unexpanded and
/// recorded as a failure, unless `strict` is set.
ExpansionOutput expand_collection(std::span<const NamedPassage> collection, const LikelihoodProvider& provider,
                                  const ExpansionConfig& config, const ExpansionRunOptions& options = {});

/// Original text followed by the appended tokens' surface forms ("##" stripped).
std::string expanded_text(std::string_view original_text, const ExpandedPassage& passage, const Vocabulary& vocab,
                          std::string_view separator = {});

}  // namespace impact
