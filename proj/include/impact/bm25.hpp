#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "impact/query_encoder.hpp"
#include "impact/ranked_list.hpp"
#include "impact/types.hpp"

namespace impact {

/// Anserini defaults.
struct Bm25Params {
    double k1 = 0.9;
    double b = 0.4;

    bool operator==(const Bm25Params&) const = default;
};

struct PassageTokens {
    passage_id id;
    TokenSequence tokens;
};

/// `doc` is the passage's ordinal inside the index; ordinals follow ascending
/// passage id, so posting lists are ordered by passage id as well.
struct Posting {
    std::uint32_t doc;
    std::uint32_t tf;

    bool operator==(const Posting&) const = default;
};

class InvertedIndex {
  public:
    std::size_t num_passages() const noexcept { return m_ids.size(); }
    std::size_t vocab_size() const noexcept { return m_postings.size(); }
    double avg_doc_length() const noexcept { return m_avg_len; }
    const Bm25Params& params() const noexcept { return m_params; }

    std::span<const Posting> postings(token_id token) const noexcept;
    passage_id passage_of(std::uint32_t doc) const { return m_ids.at(doc); }
    std::uint32_t doc_length(std::uint32_t doc) const { return m_lengths.at(doc); }
    std::optional<std::uint32_t> doc_of(passage_id id) const;
    /// k1 * (1 - b + b * dl / avgdl)
    double length_norm(std::uint32_t doc) const noexcept { return m_norms[doc]; }

    /// Lucene-style idf: ln(1 + (N - df + 0.5) / (df + 0.5)).
    double idf(token_id token) const noexcept;

    std::uint64_t vocab_checksum() const noexcept { return m_vocab_checksum; }
    void set_vocab_checksum(std::uint64_t checksum) noexcept { m_vocab_checksum = checksum; }

    /// Optional external names, indexed by ordinal.
    const std::vector<std::string>& names() const noexcept { return m_names; }
    void set_names(std::vector<std::string> names);

    bool operator==(const InvertedIndex&) const = default;

    friend InvertedIndex build_inverted_index(std::vector<PassageTokens> collection, std::size_t vocab_size,
                                              Bm25Params params);
    friend std::string serialize(const InvertedIndex& index);
    friend InvertedIndex deserialize_inverted_index(std::string_view bytes, std::optional<std::uint64_t> checksum);

  private:
    std::vector<std::vector<Posting>> m_postings;
    std::vector<passage_id> m_ids;
    std::vector<std::uint32_t> m_lengths;
    std::vector<double> m_norms;  // k1 * (1 - b + b * dl / avgdl)
    std::vector<std::string> m_names;
    double m_avg_len = 0.0;
    Bm25Params m_params;
    std::uint64_t m_vocab_checksum = 0;
};

/// Throws EmptyCollection, DuplicatePassage, or InvalidArgument (bad params,
/// token id outside the vocabulary).
InvertedIndex build_inverted_index(std::vector<PassageTokens> collection, std::size_t vocab_size,
                                   Bm25Params params = {});

/// Exhaustive document-at-a-time evaluation keeping a bounded heap of k.
/// Each query term contributes count times its term score.
RankedList bm25_search(const InvertedIndex& index, const SparseTermVector& query, std::size_t k);

std::string serialize(const InvertedIndex& index);
/// When `checksum` is set it must match the stored vocabulary checksum.
InvertedIndex deserialize_inverted_index(std::string_view bytes, std::optional<std::uint64_t> checksum);

void save(const InvertedIndex& index, const std::filesystem::path& path);
InvertedIndex load_inverted_index(const std::filesystem::path& path, std::optional<std::uint64_t> checksum);

}  // namespace impact
