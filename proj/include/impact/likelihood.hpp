#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "impact/types.hpp"
#include "impact/vocab.hpp"

namespace impact {

/// A score for every vocabulary token; only the ordering matters to expansion.
struct LikelihoodDistribution {
    std::vector<float> scores;

    std::size_t size() const noexcept { return scores.size(); }
    bool operator==(const LikelihoodDistribution&) const = default;
};

/// Source of per-passage distributions. Implementations must tolerate
/// concurrent calls.
class LikelihoodProvider {
  public:
    virtual ~LikelihoodProvider() = default;
    virtual std::size_t vocab_size() const noexcept = 0;
    virtual LikelihoodDistribution distribution(std::string_view pid, const TokenSequence& passage) const = 0;
};

LikelihoodDistribution likelihood_distribution(std::string_view pid, const TokenSequence& passage,
                                               const LikelihoodProvider& provider);

/// score(t) = ln(1 + sum over the passage's unique non-stopword tokens u of
/// C[u][t]), where C[u][t] counts corpus passages containing both u and t.
/// Stopword columns keep the smoothing-only score ln(1) = 0.
class CooccurrenceProvider final : public LikelihoodProvider {
  public:
    CooccurrenceProvider(std::span<const TokenSequence> corpus, std::size_t vocab_size, StopwordSet stopwords);

    std::size_t vocab_size() const noexcept override { return m_vocab_size; }
    LikelihoodDistribution distribution(std::string_view pid, const TokenSequence& passage) const override;

    std::uint32_t cooccurrence(token_id u, token_id t) const noexcept;

  private:
    struct Cell {
        token_id token;
        std::uint32_t count;
    };
    std::size_t m_vocab_size;
    StopwordSet m_stopwords;
    std::vector<std::size_t> m_row_start;  // CSR over rows u
    std::vector<Cell> m_cells;
};

/// Reads precomputed distributions from an LKH1 file:
/// "LKH1", u32 V, u64 count, then per passage u32 pid length, pid bytes,
/// V little-endian float32.
class FileLikelihoodProvider final : public LikelihoodProvider {
  public:
    explicit FileLikelihoodProvider(const std::filesystem::path& path);
    ~FileLikelihoodProvider() override;
    FileLikelihoodProvider(const FileLikelihoodProvider&) = delete;
    FileLikelihoodProvider& operator=(const FileLikelihoodProvider&) = delete;

    std::size_t vocab_size() const noexcept override { return m_vocab_size; }
    std::size_t size() const noexcept { return m_offsets.size(); }
    bool contains(std::string_view pid) const { return m_offsets.contains(std::string(pid)); }

    /// Throws MissingRecord when the file has no record for `pid`.
    LikelihoodDistribution distribution(std::string_view pid, const TokenSequence& passage) const override;

  private:
    int m_fd = -1;
    std::size_t m_vocab_size = 0;
    std::unordered_map<std::string, std::uint64_t> m_offsets;  // pid -> start of float block
};

struct LikelihoodRecord {
    std::string pid;
    LikelihoodDistribution distribution;
};

void write_likelihood_file(const std::filesystem::path& path, std::size_t vocab_size,
                           std::span<const LikelihoodRecord> records);

}  // namespace impact
