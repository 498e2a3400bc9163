#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "impact/types.hpp"

namespace impact {

/// WordPiece vocabulary. Line number in the vocabulary file is the token id.
class Vocabulary {
  public:
    Vocabulary() = default;

    /// Throws DuplicateToken, EmptyVocabulary, or ParseError on an empty entry.
    static Vocabulary from_entries(std::vector<std::string> entries);

    std::size_t size() const noexcept { return m_entries.size(); }
    const std::string& token(token_id id) const { return m_entries.at(id); }
    const std::vector<std::string>& entries() const noexcept { return m_entries; }
    std::optional<token_id> find(std::string_view token) const;

    /// FNV-1a over the entries in order, each terminated by '\n'.
    std::uint64_t checksum() const noexcept { return m_checksum; }

    std::optional<token_id> unk_id() const noexcept { return m_unk; }

  private:
    std::vector<std::string> m_entries;
    std::unordered_map<std::string, token_id> m_lookup;
    std::uint64_t m_checksum = 0;
    std::optional<token_id> m_unk;
};

Vocabulary load_vocabulary(const std::filesystem::path& path);

std::uint64_t vocabulary_checksum(std::span<const std::string> entries) noexcept;

class StopwordSet {
  public:
    StopwordSet() = default;
    StopwordSet(std::vector<token_id> ids, std::size_t vocab_size);

    bool contains(token_id id) const noexcept { return id < m_member.size() && m_member[id]; }
    const std::vector<token_id>& ids() const noexcept { return m_ids; }
    std::size_t size() const noexcept { return m_ids.size(); }
    std::size_t vocab_size() const noexcept { return m_member.size(); }

  private:
    std::vector<token_id> m_ids;
    std::vector<bool> m_member;
};

/// Maps surface forms onto ids; a form that does not tokenize to exactly one
/// known token is ignored.
StopwordSet stopwords_from_surface(std::span<const std::string> forms, const Vocabulary& vocab);
StopwordSet load_stopwords(const std::filesystem::path& path, const Vocabulary& vocab);

/// English stopwords plus ASCII punctuation.
const std::vector<std::string>& default_stopword_forms();
StopwordSet default_stopwords(const Vocabulary& vocab);

/// Text cleanup, lowercasing, accent stripping, and whitespace/punctuation
/// splitting, as done by the uncased BERT basic tokenizer.
std::vector<std::string> basic_tokenize(std::string_view text);

inline constexpr std::size_t max_wordpiece_chars = 100;

/// Greedy longest-match-first split of one word. A word with no complete
/// segmentation, or longer than max_wordpiece_chars code points, becomes [UNK].
void wordpiece(std::string_view word, const Vocabulary& vocab, std::vector<token_id>& out);

/// Throws MissingUnk when the vocabulary lacks "[UNK]".
TokenSequence tokenize(std::string_view text, const Vocabulary& vocab);

/// Surface form of a token with the "##" continuation prefix removed.
std::string_view surface_form(const Vocabulary& vocab, token_id id);

}  // namespace impact
