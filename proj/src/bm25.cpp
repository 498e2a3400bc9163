#include "impact/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "binary_io.hpp"
#include "impact/error.hpp"

namespace impact {

namespace {

constexpr char bm25_magic[4] = {'B', 'M', '2', '5'};
constexpr std::uint32_t bm25_version = 1;

void check_params(const Bm25Params& params)
{
    if (!(params.k1 > 0.0) || !(params.b >= 0.0 && params.b <= 1.0)) {
        throw error(errc::invalid_argument, "BM25 requires k1 > 0 and 0 <= b <= 1");
    }
}

std::vector<double> compute_norms(const std::vector<std::uint32_t>& lengths, double avg_len, const Bm25Params& p)
{
    std::vector<double> norms(lengths.size());
    for (std::size_t i = 0; i < lengths.size(); ++i) {
        double rel = avg_len > 0.0 ? static_cast<double>(lengths[i]) / avg_len : 0.0;
        norms[i] = p.k1 * (1.0 - p.b + p.b * rel);
    }
    return norms;
}

}  // namespace

std::span<const Posting> InvertedIndex::postings(token_id token) const noexcept
{
    if (token >= m_postings.size()) {
        return {};
    }
    return m_postings[token];
}

std::optional<std::uint32_t> InvertedIndex::doc_of(passage_id id) const
{
    auto it = std::lower_bound(m_ids.begin(), m_ids.end(), id);
    if (it == m_ids.end() || *it != id) {
        return std::nullopt;
    }
    return static_cast<std::uint32_t>(it - m_ids.begin());
}

double InvertedIndex::idf(token_id token) const noexcept
{
    auto df = static_cast<double>(postings(token).size());
    auto n = static_cast<double>(m_ids.size());
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

void InvertedIndex::set_names(std::vector<std::string> names)
{
    if (!names.empty() && names.size() != m_ids.size()) {
        throw error(errc::invalid_argument, "name table size does not match passage count");
    }
    m_names = std::move(names);
}

InvertedIndex build_inverted_index(std::vector<PassageTokens> collection, std::size_t vocab_size, Bm25Params params)
{
    check_params(params);
    if (collection.empty()) {
        throw error(errc::empty_collection, "cannot index an empty collection");
    }
    if (collection.size() > UINT32_MAX) {
        throw error(errc::invalid_argument, "too many passages");
    }
    std::sort(collection.begin(), collection.end(),
              [](const PassageTokens& a, const PassageTokens& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < collection.size(); ++i) {
        if (collection[i].id == collection[i - 1].id) {
            throw error(errc::duplicate_passage, "passage id " + std::to_string(collection[i].id) + " repeated");
        }
    }

    InvertedIndex index;
    index.m_params = params;
    index.m_postings.resize(vocab_size);
    index.m_ids.reserve(collection.size());
    index.m_lengths.reserve(collection.size());

    std::uint64_t total_len = 0;
    std::vector<token_id> sorted;
    for (std::size_t doc = 0; doc < collection.size(); ++doc) {
        const auto& ids = collection[doc].tokens.ids;
        index.m_ids.push_back(collection[doc].id);
        index.m_lengths.push_back(static_cast<std::uint32_t>(ids.size()));
        total_len += ids.size();

        sorted.assign(ids.begin(), ids.end());
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < sorted.size();) {
            auto token = sorted[i];
            if (token >= vocab_size) {
                throw error(errc::invalid_argument, "token id " + std::to_string(token) + " outside vocabulary");
            }
            std::size_t j = i;
            while (j < sorted.size() && sorted[j] == token) {
                ++j;
            }
            index.m_postings[token].push_back({static_cast<std::uint32_t>(doc), static_cast<std::uint32_t>(j - i)});
            i = j;
        }
    }
    index.m_avg_len = static_cast<double>(total_len) / static_cast<double>(collection.size());
    index.m_norms = compute_norms(index.m_lengths, index.m_avg_len, params);
    return index;
}

RankedList bm25_search(const InvertedIndex& index, const SparseTermVector& query, std::size_t k)
{
    if (k == 0) {
        throw error(errc::invalid_argument, "k must be at least 1");
    }
    struct Cursor {
        const Posting* it;
        const Posting* end;
        double weight;  // count * idf * (k1 + 1)
    };
    const double k1p1 = index.params().k1 + 1.0;
    std::vector<Cursor> cursors;
    cursors.reserve(query.terms.size());
    for (const auto& term : query.terms) {
        auto list = index.postings(term.token);
        if (!list.empty()) {
            cursors.push_back({list.data(), list.data() + list.size(), term.count * index.idf(term.token) * k1p1});
        }
    }

    // top of the heap is the weakest kept result
    auto weaker = [](const ScoredPassage& a, const ScoredPassage& b) { return ranks_before(a, b); };
    std::priority_queue<ScoredPassage, std::vector<ScoredPassage>, decltype(weaker)> heap(weaker);

    while (true) {
        std::uint32_t doc = UINT32_MAX;
        for (const auto& c : cursors) {
            if (c.it != c.end) {
                doc = std::min(doc, c.it->doc);
            }
        }
        if (doc == UINT32_MAX) {
            break;
        }
        double norm = index.length_norm(doc);
        double score = 0.0;
        for (auto& c : cursors) {
            if (c.it != c.end && c.it->doc == doc) {
                double tf = c.it->tf;
                score += c.weight * tf / (tf + norm);
                ++c.it;
            }
        }
        ScoredPassage hit{index.passage_of(doc), score};
        if (heap.size() < k) {
            heap.push(hit);
        } else if (ranks_before(hit, heap.top())) {
            heap.pop();
            heap.push(hit);
        }
    }

    RankedList out;
    out.entries.resize(heap.size());
    for (auto i = heap.size(); i-- > 0;) {
        out.entries[i] = heap.top();
        heap.pop();
    }
    return out;
}

std::string serialize(const InvertedIndex& index)
{
    detail::ByteWriter w;
    w.put_bytes(std::string_view(bm25_magic, 4));
    w.put<std::uint32_t>(bm25_version);
    w.put<std::uint64_t>(index.m_vocab_checksum);
    w.put<double>(index.m_params.k1);
    w.put<double>(index.m_params.b);
    w.put<std::uint64_t>(index.m_ids.size());
    w.put<std::uint64_t>(index.m_postings.size());
    w.put<std::uint8_t>(index.m_names.empty() ? 0 : 1);
    for (std::size_t doc = 0; doc < index.m_ids.size(); ++doc) {
        w.put<std::uint64_t>(index.m_ids[doc]);
        w.put<std::uint32_t>(index.m_lengths[doc]);
        if (!index.m_names.empty()) {
            w.put_string(index.m_names[doc]);
        }
    }
    std::uint64_t nonempty = 0;
    for (const auto& list : index.m_postings) {
        nonempty += list.empty() ? 0 : 1;
    }
    w.put<std::uint64_t>(nonempty);
    for (std::size_t token = 0; token < index.m_postings.size(); ++token) {
        const auto& list = index.m_postings[token];
        if (list.empty()) {
            continue;
        }
        w.put<std::uint32_t>(static_cast<std::uint32_t>(token));
        w.put<std::uint32_t>(static_cast<std::uint32_t>(list.size()));
        std::uint32_t prev = 0;
        for (const auto& p : list) {
            w.put_varint(p.doc - prev);
            w.put_varint(p.tf);
            prev = p.doc;
        }
    }
    return w.release();
}

InvertedIndex deserialize_inverted_index(std::string_view bytes, std::optional<std::uint64_t> checksum)
{
    detail::ByteReader r(bytes);
    if (r.get_bytes(4) != std::string_view(bm25_magic, 4)) {
        throw error(errc::corrupt_index, "not a BM25 index file");
    }
    if (auto version = r.get<std::uint32_t>(); version != bm25_version) {
        throw error(errc::version_mismatch, "unsupported BM25 index version " + std::to_string(version));
    }
    InvertedIndex index;
    index.m_vocab_checksum = r.get<std::uint64_t>();
    if (checksum && *checksum != index.m_vocab_checksum) {
        throw error(errc::vocab_mismatch, "BM25 index was built with a different vocabulary");
    }
    index.m_params.k1 = r.get<double>();
    index.m_params.b = r.get<double>();
    auto n = r.get<std::uint64_t>();
    auto vocab_size = r.get<std::uint64_t>();
    bool named = r.get<std::uint8_t>() != 0;
    if (n > r.remaining() || vocab_size > (1ULL << 32)) {
        throw error(errc::corrupt_index, "implausible BM25 header");
    }
    index.m_ids.resize(n);
    index.m_lengths.resize(n);
    if (named) {
        index.m_names.resize(n);
    }
    std::uint64_t total_len = 0;
    for (std::size_t doc = 0; doc < n; ++doc) {
        index.m_ids[doc] = r.get<std::uint64_t>();
        index.m_lengths[doc] = r.get<std::uint32_t>();
        total_len += index.m_lengths[doc];
        if (named) {
            index.m_names[doc] = r.get_string();
        }
        if (doc > 0 && index.m_ids[doc] <= index.m_ids[doc - 1]) {
            throw error(errc::corrupt_index, "passage ids out of order");
        }
    }
    index.m_postings.resize(vocab_size);
    auto lists = r.get<std::uint64_t>();
    for (std::uint64_t l = 0; l < lists; ++l) {
        auto token = r.get<std::uint32_t>();
        auto count = r.get<std::uint32_t>();
        if (token >= vocab_size || count > n) {
            throw error(errc::corrupt_index, "bad posting list header");
        }
        auto& list = index.m_postings[token];
        list.resize(count);
        std::uint64_t doc = 0;
        for (auto& p : list) {
            doc += r.get_varint();
            if (doc >= n) {
                throw error(errc::corrupt_index, "posting refers to unknown passage");
            }
            p.doc = static_cast<std::uint32_t>(doc);
            p.tf = static_cast<std::uint32_t>(r.get_varint());
        }
    }
    if (r.remaining() != 0) {
        throw error(errc::corrupt_index, "trailing bytes after BM25 index");
    }
    index.m_avg_len = n == 0 ? 0.0 : static_cast<double>(total_len) / static_cast<double>(n);
    index.m_norms = compute_norms(index.m_lengths, index.m_avg_len, index.m_params);
    return index;
}

void save(const InvertedIndex& index, const std::filesystem::path& path)
{
    detail::write_file(path, serialize(index));
}

InvertedIndex load_inverted_index(const std::filesystem::path& path, std::optional<std::uint64_t> checksum)
{
    return deserialize_inverted_index(detail::read_file(path), checksum);
}

}  // namespace impact
