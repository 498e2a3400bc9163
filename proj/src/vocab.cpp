#include "impact/vocab.hpp"

#include <algorithm>
#include <fstream>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/locid.h>
#include <unicode/unistr.h>

#include "impact/error.hpp"

namespace impact {

namespace {

constexpr std::uint64_t fnv_offset = 14695981039346656037ULL;
constexpr std::uint64_t fnv_prime = 1099511628211ULL;

bool is_ascii_punct(UChar32 c)
{
    return (c >= 33 && c <= 47) || (c >= 58 && c <= 64) || (c >= 91 && c <= 96)
        || (c >= 123 && c <= 126);
}

bool is_whitespace(UChar32 c)
{
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        return true;
    }
    return u_charType(c) == U_SPACE_SEPARATOR;
}

bool is_control(UChar32 c)
{
    if (c == '\t' || c == '\n' || c == '\r') {
        return false;
    }
    auto type = u_charType(c);
    return type == U_CONTROL_CHAR || type == U_FORMAT_CHAR;
}

bool is_punct(UChar32 c)
{
    if (is_ascii_punct(c)) {
        return true;
    }
    switch (u_charType(c)) {
    case U_DASH_PUNCTUATION:
    case U_START_PUNCTUATION:
    case U_END_PUNCTUATION:
    case U_CONNECTOR_PUNCTUATION:
    case U_OTHER_PUNCTUATION:
    case U_INITIAL_PUNCTUATION:
    case U_FINAL_PUNCTUATION: return true;
    default: return false;
    }
}

bool is_cjk(UChar32 c)
{
    return (c >= 0x4E00 && c <= 0x9FFF) || (c >= 0x3400 && c <= 0x4DBF)
        || (c >= 0x20000 && c <= 0x2A6DF) || (c >= 0x2A700 && c <= 0x2B73F)
        || (c >= 0x2B740 && c <= 0x2B81F) || (c >= 0x2B820 && c <= 0x2CEAF)
        || (c >= 0xF900 && c <= 0xFAFF) || (c >= 0x2F800 && c <= 0x2FA1F);
}

void basic_tokenize_ascii(std::string_view text, std::vector<std::string>& out)
{
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            out.push_back(std::move(current));
            current.clear();
        }
    };
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            flush();
        } else if (c < 32 || c == 127) {
            continue;
        } else if (is_ascii_punct(c)) {
            flush();
            out.emplace_back(1, ch);
        } else {
            current.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : ch);
        }
    }
    flush();
}

void normalize_word(const icu::UnicodeString& word, std::vector<std::string>& out)
{
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* nfd = icu::Normalizer2::getNFDInstance(status);
    if (U_FAILURE(status)) {
        throw error(errc::io, "ICU NFD normalizer unavailable");
    }
    icu::UnicodeString lowered(word);
    lowered.toLower(icu::Locale::getRoot());
    icu::UnicodeString decomposed = nfd->normalize(lowered, status);
    if (U_FAILURE(status)) {
        decomposed = lowered;
    }

    icu::UnicodeString current;
    auto flush = [&] {
        if (!current.isEmpty()) {
            std::string utf8;
            current.toUTF8String(utf8);
            out.push_back(std::move(utf8));
            current.remove();
        }
    };
    for (int32_t i = 0; i < decomposed.length();) {
        UChar32 c = decomposed.char32At(i);
        i += U16_LENGTH(c);
        if (u_charType(c) == U_NON_SPACING_MARK) {
            continue;
        }
        if (is_punct(c)) {
            flush();
            current.append(c);
            flush();
        } else {
            current.append(c);
        }
    }
    flush();
}

void basic_tokenize_unicode(std::string_view text, std::vector<std::string>& out)
{
    auto input = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
    icu::UnicodeString word;
    auto flush = [&] {
        if (!word.isEmpty()) {
            normalize_word(word, out);
            word.remove();
        }
    };
    for (int32_t i = 0; i < input.length();) {
        UChar32 c = input.char32At(i);
        i += U16_LENGTH(c);
        if (c == 0 || c == 0xFFFD || is_control(c)) {
            continue;
        }
        if (is_whitespace(c)) {
            flush();
        } else if (is_cjk(c)) {
            flush();
            word.append(c);
            flush();
        } else {
            word.append(c);
        }
    }
    flush();
}

}  // namespace

std::uint64_t vocabulary_checksum(std::span<const std::string> entries) noexcept
{
    std::uint64_t hash = fnv_offset;
    auto mix = [&hash](unsigned char byte) {
        hash ^= byte;
        hash *= fnv_prime;
    };
    for (const auto& entry : entries) {
        for (char c : entry) {
            mix(static_cast<unsigned char>(c));
        }
        mix('\n');
    }
    return hash;
}

Vocabulary Vocabulary::from_entries(std::vector<std::string> entries)
{
    if (entries.empty()) {
        throw error(errc::empty_vocabulary, "vocabulary has no entries");
    }
    Vocabulary vocab;
    vocab.m_lookup.reserve(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].empty()) {
            throw error(errc::parse, "empty vocabulary entry at line " + std::to_string(i + 1));
        }
        auto [it, inserted] = vocab.m_lookup.emplace(entries[i], static_cast<token_id>(i));
        if (!inserted) {
            throw error(errc::duplicate_token, "token '" + entries[i] + "' repeated at line " + std::to_string(i + 1));
        }
    }
    vocab.m_checksum = vocabulary_checksum(entries);
    vocab.m_entries = std::move(entries);
    if (auto it = vocab.m_lookup.find("[UNK]"); it != vocab.m_lookup.end()) {
        vocab.m_unk = it->second;
    }
    return vocab;
}

std::optional<token_id> Vocabulary::find(std::string_view token) const
{
    auto it = m_lookup.find(std::string(token));
    if (it == m_lookup.end()) {
        return std::nullopt;
    }
    return it->second;
}

Vocabulary load_vocabulary(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw error(errc::io, "cannot open vocabulary " + path.string());
    }
    std::vector<std::string> entries;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        entries.push_back(line);
    }
    return Vocabulary::from_entries(std::move(entries));
}

StopwordSet::StopwordSet(std::vector<token_id> ids, std::size_t vocab_size) : m_member(vocab_size, false)
{
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    for (auto id : ids) {
        if (id >= vocab_size) {
            throw error(errc::invalid_argument, "stopword id " + std::to_string(id) + " outside vocabulary");
        }
        m_member[id] = true;
    }
    m_ids = std::move(ids);
}

StopwordSet stopwords_from_surface(std::span<const std::string> forms, const Vocabulary& vocab)
{
    std::vector<token_id> ids;
    for (const auto& form : forms) {
        if (form.empty()) {
            continue;
        }
        std::vector<token_id> pieces;
        for (const auto& word : basic_tokenize(form)) {
            wordpiece(word, vocab, pieces);
        }
        if (pieces.size() == 1 && pieces.front() != vocab.unk_id()) {
            ids.push_back(pieces.front());
        }
    }
    return StopwordSet(std::move(ids), vocab.size());
}

StopwordSet load_stopwords(const std::filesystem::path& path, const Vocabulary& vocab)
{
    std::ifstream in(path);
    if (!in) {
        throw error(errc::io, "cannot open stopword list " + path.string());
    }
    std::vector<std::string> forms;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        forms.push_back(line);
    }
    return stopwords_from_surface(forms, vocab);
}

const std::vector<std::string>& default_stopword_forms()
{
    static const std::vector<std::string> forms = {
        "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "you're", "you've",
        "you'll", "you'd", "your", "yours", "yourself", "yourselves", "he", "him", "his",
        "himself", "she", "she's", "her", "hers", "herself", "it", "it's", "its", "itself",
        "they", "them", "their", "theirs", "themselves", "what", "which", "who", "whom", "this",
        "that", "that'll", "these", "those", "am", "is", "are", "was", "were", "be", "been",
        "being", "have", "has", "had", "having", "do", "does", "did", "doing", "a", "an", "the",
        "and", "but", "if", "or", "because", "as", "until", "while", "of", "at", "by", "for",
        "with", "about", "against", "between", "into", "through", "during", "before", "after",
        "above", "below", "to", "from", "up", "down", "in", "out", "on", "off", "over", "under",
        "again", "further", "then", "once", "here", "there", "when", "where", "why", "how",
        "all", "any", "both", "each", "few", "more", "most", "other", "some", "such", "no",
        "nor", "not", "only", "own", "same", "so", "than", "too", "very", "s", "t", "can",
        "will", "just", "don", "don't", "should", "should've", "now", "d", "ll", "m", "o", "re",
        "ve", "y", "ain", "aren", "aren't", "couldn", "couldn't", "didn", "didn't", "doesn",
        "doesn't", "hadn", "hadn't", "hasn", "hasn't", "haven", "haven't", "isn", "isn't", "ma",
        "mightn", "mightn't", "mustn", "mustn't", "needn", "needn't", "shan", "shan't",
        "shouldn", "shouldn't", "wasn", "wasn't", "weren", "weren't", "won", "won't", "wouldn",
        "wouldn't",
        "!", "\"", "#", "$", "%", "&", "'", "(", ")", "*", "+", ",", "-", ".", "/", ":", ";",
        "<", "=", ">", "?", "@", "[", "\\", "]", "^", "_", "`", "{", "|", "}", "~",
    };
    return forms;
}

StopwordSet default_stopwords(const Vocabulary& vocab)
{
    return stopwords_from_surface(default_stopword_forms(), vocab);
}

std::vector<std::string> basic_tokenize(std::string_view text)
{
    std::vector<std::string> out;
    bool ascii = std::all_of(text.begin(), text.end(), [](char c) { return static_cast<unsigned char>(c) < 0x80; });
    if (ascii) {
        basic_tokenize_ascii(text, out);
    } else {
        basic_tokenize_unicode(text, out);
    }
    return out;
}

void wordpiece(std::string_view word, const Vocabulary& vocab, std::vector<token_id>& out)
{
    if (!vocab.unk_id()) {
        throw error(errc::missing_unk, "vocabulary has no [UNK] entry");
    }
    // byte offsets of code point starts, plus the end
    std::vector<std::size_t> bounds;
    bounds.reserve(word.size() + 1);
    for (std::size_t i = 0; i < word.size(); ++i) {
        if ((static_cast<unsigned char>(word[i]) & 0xC0) != 0x80) {
            bounds.push_back(i);
        }
    }
    bounds.push_back(word.size());
    std::size_t chars = bounds.size() - 1;
    if (chars == 0) {
        return;
    }
    if (chars > max_wordpiece_chars) {
        out.push_back(*vocab.unk_id());
        return;
    }

    auto mark = out.size();
    std::string candidate;
    std::size_t start = 0;
    while (start < chars) {
        std::optional<token_id> match;
        std::size_t end = chars;
        for (; end > start; --end) {
            candidate.clear();
            if (start > 0) {
                candidate = "##";
            }
            candidate.append(word.substr(bounds[start], bounds[end] - bounds[start]));
            if ((match = vocab.find(candidate))) {
                break;
            }
        }
        if (!match) {
            out.resize(mark);
            out.push_back(*vocab.unk_id());
            return;
        }
        out.push_back(*match);
        start = end;
    }
}

TokenSequence tokenize(std::string_view text, const Vocabulary& vocab)
{
    if (!vocab.unk_id()) {
        throw error(errc::missing_unk, "vocabulary has no [UNK] entry");
    }
    TokenSequence seq;
    for (const auto& word : basic_tokenize(text)) {
        wordpiece(word, vocab, seq.ids);
    }
    return seq;
}

std::string_view surface_form(const Vocabulary& vocab, token_id id)
{
    std::string_view token = vocab.token(id);
    if (token.starts_with("##") && token.size() > 2) {
        token.remove_prefix(2);
    }
    return token;
}

}  // namespace impact
