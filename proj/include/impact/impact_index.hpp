#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "impact/types.hpp"

namespace impact {

struct ImpactPosting {
    token_id token;
    float weight;

    /// Bitwise on the weight so round-trips are checked exactly.
    bool operator==(const ImpactPosting& other) const noexcept
    {
        return token == other.token && std::bit_cast<std::uint32_t>(weight) == std::bit_cast<std::uint32_t>(other.weight);
    }
};

/// Max contextualized weight per unique token of one passage, ascending token id.
struct PassageImpactEntry {
    passage_id id;
    std::vector<ImpactPosting> postings;

    bool operator==(const PassageImpactEntry&) const = default;
};

using TokenWeight = std::pair<token_id, float>;

/// One line of the weight JSON-lines stream.
struct WeightRecord {
    std::string pid;
    std::vector<TokenWeight> tokens;
};

class ImpactIndex {
  public:
    std::size_t size() const noexcept { return m_entries.size(); }
    const std::vector<PassageImpactEntry>& entries() const noexcept { return m_entries; }

    /// Throws UnknownPassage.
    const PassageImpactEntry& entry(passage_id id) const;
    const PassageImpactEntry* find(passage_id id) const noexcept
    {
        return id < m_entries.size() ? &m_entries[id] : nullptr;
    }

    std::optional<passage_id> id_of(std::string_view name) const;
    const std::string& name_of(passage_id id) const { return m_names.at(id); }
    const std::vector<std::string>& names() const noexcept { return m_names; }

    std::uint64_t vocab_checksum() const noexcept { return m_vocab_checksum; }
    const std::string& model_id() const noexcept { return m_model_id; }
    std::int64_t build_timestamp() const noexcept { return m_timestamp; }
    std::size_t total_postings() const noexcept;

    bool operator==(const ImpactIndex& other) const;

  private:
    friend class ImpactIndexBuilder;
    friend ImpactIndex deserialize_impact_index(std::string_view bytes, std::optional<std::uint64_t> checksum);

    void rebuild_name_lookup();

    std::vector<PassageImpactEntry> m_entries;
    std::vector<std::string> m_names;
    std::unordered_map<std::string, passage_id> m_by_name;
    std::uint64_t m_vocab_checksum = 0;
    std::string m_model_id;
    std::int64_t m_timestamp = 0;
};

struct ImpactMetadata {
    std::uint64_t vocab_checksum = 0;
    std::string model_id;
    std::int64_t timestamp = 0;
    /// Token ids must be below this; 0 disables the check.
    std::size_t vocab_size = 0;
};

/// Single-writer builder. Passages receive dense ids in insertion order.
class ImpactIndexBuilder {
  public:
    explicit ImpactIndexBuilder(ImpactMetadata meta);

    /// Collapses repeated tokens by max. Throws NegativeWeight for a weight
    /// below zero (or NaN), DuplicatePassage for a repeated name.
    passage_id add(std::string name, std::span<const TokenWeight> weights);

    ImpactIndex finish() &&;

  private:
    ImpactIndex m_index;
    std::size_t m_vocab_size;
};

ImpactIndex build_impact_index(std::span<const WeightRecord> records, ImpactMetadata meta);

/// Stored weight, or nothing when the passage lacks the token. Throws
/// UnknownPassage for an id outside the index.
std::optional<float> lookup(const ImpactIndex& index, passage_id pid, token_id token);

std::string serialize(const ImpactIndex& index);
ImpactIndex deserialize_impact_index(std::string_view bytes, std::optional<std::uint64_t> checksum);
void save(const ImpactIndex& index, const std::filesystem::path& path);
ImpactIndex load_impact_index(const std::filesystem::path& path, std::optional<std::uint64_t> checksum);

/// `{"pid": "<string>", "tokens": [[<token-id>, <weight>], ...]}` per line.
std::optional<WeightRecord> read_weight_record(std::istream& in, std::size_t& line_no);
std::vector<WeightRecord> read_weight_jsonl(const std::filesystem::path& path);
void write_weight_record(std::ostream& out, const WeightRecord& record);

}  // namespace impact
