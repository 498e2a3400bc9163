#include "impact/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fcntl.h>
#include <unistd.h>

#include "binary_io.hpp"
#include "impact/error.hpp"

namespace impact {

namespace {

constexpr char lkh_magic[4] = {'L', 'K', 'H', '1'};

void pread_exact(int fd, char* dst, std::size_t n, std::uint64_t offset)
{
    while (n > 0) {
        auto got = ::pread(fd, dst, n, static_cast<off_t>(offset));
        if (got <= 0) {
            throw error(errc::corrupt_index, "short read from likelihood file");
        }
        dst += got;
        n -= static_cast<std::size_t>(got);
        offset += static_cast<std::uint64_t>(got);
    }
}

}  // namespace

LikelihoodDistribution likelihood_distribution(std::string_view pid, const TokenSequence& passage,
                                               const LikelihoodProvider& provider)
{
    return provider.distribution(pid, passage);
}

CooccurrenceProvider::CooccurrenceProvider(std::span<const TokenSequence> corpus, std::size_t vocab_size,
                                           StopwordSet stopwords)
    : m_vocab_size(vocab_size), m_stopwords(std::move(stopwords))
{
    std::vector<std::map<token_id, std::uint32_t>> rows(vocab_size);
    std::vector<token_id> unique;
    for (const auto& passage : corpus) {
        unique.assign(passage.ids.begin(), passage.ids.end());
        std::sort(unique.begin(), unique.end());
        unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
        if (!unique.empty() && unique.back() >= vocab_size) {
            throw error(errc::invalid_argument, "co-occurrence corpus token outside vocabulary");
        }
        for (auto u : unique) {
            if (m_stopwords.contains(u)) {
                continue;
            }
            auto& row = rows[u];
            for (auto t : unique) {
                ++row[t];
            }
        }
    }
    m_row_start.reserve(vocab_size + 1);
    for (const auto& row : rows) {
        m_row_start.push_back(m_cells.size());
        for (const auto& [t, c] : row) {
            m_cells.push_back({t, c});
        }
    }
    m_row_start.push_back(m_cells.size());
}

std::uint32_t CooccurrenceProvider::cooccurrence(token_id u, token_id t) const noexcept
{
    if (u >= m_vocab_size) {
        return 0;
    }
    auto begin = m_cells.begin() + static_cast<std::ptrdiff_t>(m_row_start[u]);
    auto end = m_cells.begin() + static_cast<std::ptrdiff_t>(m_row_start[u + 1]);
    auto it = std::lower_bound(begin, end, t, [](const Cell& c, token_id id) { return c.token < id; });
    return it != end && it->token == t ? it->count : 0;
}

LikelihoodDistribution CooccurrenceProvider::distribution(std::string_view, const TokenSequence& passage) const
{
    std::vector<double> sums(m_vocab_size, 0.0);
    std::vector<token_id> unique(passage.ids.begin(), passage.ids.end());
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    for (auto u : unique) {
        if (u >= m_vocab_size || m_stopwords.contains(u)) {
            continue;
        }
        for (auto i = m_row_start[u]; i < m_row_start[u + 1]; ++i) {
            sums[m_cells[i].token] += m_cells[i].count;
        }
    }
    LikelihoodDistribution out;
    out.scores.resize(m_vocab_size);
    for (std::size_t t = 0; t < m_vocab_size; ++t) {
        out.scores[t] = m_stopwords.contains(static_cast<token_id>(t)) ? 0.0F : static_cast<float>(std::log1p(sums[t]));
    }
    return out;
}

FileLikelihoodProvider::FileLikelihoodProvider(const std::filesystem::path& path)
{
    m_fd = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
    if (m_fd < 0) {
        throw error(errc::io, "cannot open likelihood file " + path.string());
    }
    try {
        auto file_size = std::filesystem::file_size(path);
        char header[16];
        if (file_size < sizeof(header)) {
            throw error(errc::corrupt_index, "likelihood file too short");
        }
        pread_exact(m_fd, header, sizeof(header), 0);
        detail::ByteReader r(std::string_view(header, sizeof(header)));
        if (r.get_bytes(4) != std::string_view(lkh_magic, 4)) {
            throw error(errc::corrupt_index, "not an LKH1 likelihood file");
        }
        m_vocab_size = r.get<std::uint32_t>();
        auto count = r.get<std::uint64_t>();
        const std::uint64_t block = std::uint64_t{m_vocab_size} * sizeof(float);
        std::uint64_t offset = sizeof(header);
        for (std::uint64_t i = 0; i < count; ++i) {
            std::uint32_t len = 0;
            if (offset + sizeof(len) > file_size) {
                throw error(errc::corrupt_index, "likelihood file truncated");
            }
            pread_exact(m_fd, reinterpret_cast<char*>(&len), sizeof(len), offset);
            offset += sizeof(len);
            if (offset + len + block > file_size) {
                throw error(errc::corrupt_index, "likelihood file truncated");
            }
            std::string pid(len, '\0');
            pread_exact(m_fd, pid.data(), len, offset);
            offset += len;
            if (!m_offsets.emplace(std::move(pid), offset).second) {
                throw error(errc::duplicate_passage, "likelihood file repeats a passage");
            }
            offset += block;
        }
        if (offset != file_size) {
            throw error(errc::corrupt_index, "trailing bytes in likelihood file");
        }
    } catch (...) {
        ::close(m_fd);
        throw;
    }
}

FileLikelihoodProvider::~FileLikelihoodProvider()
{
    if (m_fd >= 0) {
        ::close(m_fd);
    }
}

LikelihoodDistribution FileLikelihoodProvider::distribution(std::string_view pid, const TokenSequence&) const
{
    auto it = m_offsets.find(std::string(pid));
    if (it == m_offsets.end()) {
        throw error(errc::missing_record, "no likelihood record for passage '" + std::string(pid) + "'");
    }
    LikelihoodDistribution out;
    out.scores.resize(m_vocab_size);
    pread_exact(m_fd, reinterpret_cast<char*>(out.scores.data()), m_vocab_size * sizeof(float), it->second);
    return out;
}

void write_likelihood_file(const std::filesystem::path& path, std::size_t vocab_size,
                           std::span<const LikelihoodRecord> records)
{
    detail::ByteWriter w;
    w.put_bytes(std::string_view(lkh_magic, 4));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(vocab_size));
    w.put<std::uint64_t>(records.size());
    for (const auto& record : records) {
        if (record.distribution.size() != vocab_size) {
            throw error(errc::invalid_argument, "likelihood record length differs from vocabulary size");
        }
        w.put_string(record.pid);
        for (float x : record.distribution.scores) {
            w.put<float>(x);
        }
    }
    detail::write_file(path, w.bytes());
}

}  // namespace impact
