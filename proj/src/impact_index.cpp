#include "impact/impact_index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "binary_io.hpp"
#include "impact/error.hpp"

namespace impact {

namespace {

constexpr char impact_magic[4] = {'I', 'M', 'P', '2'};
constexpr std::uint32_t impact_version = 1;

}  // namespace

const PassageImpactEntry& ImpactIndex::entry(passage_id id) const
{
    if (id >= m_entries.size()) {
        throw error(errc::unknown_passage, "passage " + std::to_string(id) + " not in impact index");
    }
    return m_entries[id];
}

std::optional<passage_id> ImpactIndex::id_of(std::string_view name) const
{
    auto it = m_by_name.find(std::string(name));
    if (it == m_by_name.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::size_t ImpactIndex::total_postings() const noexcept
{
    std::size_t total = 0;
    for (const auto& e : m_entries) {
        total += e.postings.size();
    }
    return total;
}

bool ImpactIndex::operator==(const ImpactIndex& other) const
{
    return m_entries == other.m_entries && m_names == other.m_names && m_vocab_checksum == other.m_vocab_checksum
        && m_model_id == other.m_model_id && m_timestamp == other.m_timestamp;
}

void ImpactIndex::rebuild_name_lookup()
{
    m_by_name.clear();
    m_by_name.reserve(m_names.size());
    for (std::size_t i = 0; i < m_names.size(); ++i) {
        if (!m_by_name.emplace(m_names[i], i).second) {
            throw error(errc::duplicate_passage, "passage '" + m_names[i] + "' repeated");
        }
    }
}

ImpactIndexBuilder::ImpactIndexBuilder(ImpactMetadata meta) : m_vocab_size(meta.vocab_size)
{
    m_index.m_vocab_checksum = meta.vocab_checksum;
    m_index.m_model_id = std::move(meta.model_id);
    m_index.m_timestamp = meta.timestamp;
}

passage_id ImpactIndexBuilder::add(std::string name, std::span<const TokenWeight> weights)
{
    std::vector<ImpactPosting> postings;
    postings.reserve(weights.size());
    for (const auto& [token, weight] : weights) {
        if (!(weight >= 0.0F)) {
            throw error(errc::negative_weight,
                        "passage '" + name + "' token " + std::to_string(token) + " has weight " + std::to_string(weight));
        }
        if (std::isinf(weight)) {
            throw error(errc::invalid_argument, "passage '" + name + "' has an infinite weight");
        }
        if (m_vocab_size != 0 && token >= m_vocab_size) {
            throw error(errc::invalid_argument, "passage '" + name + "' token " + std::to_string(token) + " outside vocabulary");
        }
        postings.push_back({token, weight});
    }
    std::sort(postings.begin(), postings.end(), [](const ImpactPosting& a, const ImpactPosting& b) {
        return a.token < b.token || (a.token == b.token && a.weight > b.weight);
    });
    // first of each run now holds the max
    postings.erase(std::unique(postings.begin(), postings.end(),
                               [](const ImpactPosting& a, const ImpactPosting& b) { return a.token == b.token; }),
                   postings.end());

    passage_id id = m_index.m_entries.size();
    if (!m_index.m_by_name.emplace(name, id).second) {
        throw error(errc::duplicate_passage, "passage '" + name + "' repeated");
    }
    m_index.m_names.push_back(std::move(name));
    m_index.m_entries.push_back({id, std::move(postings)});
    return id;
}

ImpactIndex ImpactIndexBuilder::finish() &&
{
    return std::move(m_index);
}

ImpactIndex build_impact_index(std::span<const WeightRecord> records, ImpactMetadata meta)
{
    ImpactIndexBuilder builder(std::move(meta));
    for (const auto& record : records) {
        builder.add(record.pid, record.tokens);
    }
    return std::move(builder).finish();
}

std::optional<float> lookup(const ImpactIndex& index, passage_id pid, token_id token)
{
    const auto& postings = index.entry(pid).postings;
    auto it = std::lower_bound(postings.begin(), postings.end(), token,
                               [](const ImpactPosting& p, token_id t) { return p.token < t; });
    if (it == postings.end() || it->token != token) {
        return std::nullopt;
    }
    return it->weight;
}

std::string serialize(const ImpactIndex& index)
{
    detail::ByteWriter w;
    w.put_bytes(std::string_view(impact_magic, 4));
    w.put<std::uint32_t>(impact_version);
    w.put<std::uint64_t>(index.vocab_checksum());
    w.put<std::uint64_t>(index.size());
    w.put<std::int64_t>(index.build_timestamp());
    w.put_string(index.model_id());

    std::vector<std::uint64_t> offsets;
    offsets.reserve(index.size());
    for (const auto& e : index.entries()) {
        offsets.push_back(w.size());
        w.put<std::uint64_t>(e.id);
        w.put_varint(e.postings.size());
        for (const auto& p : e.postings) {
            w.put_varint(p.token);
            w.put<float>(p.weight);
        }
    }
    std::uint64_t names_at = w.size();
    for (const auto& name : index.names()) {
        w.put_string(name);
    }
    std::uint64_t offsets_at = w.size();
    for (auto off : offsets) {
        w.put<std::uint64_t>(off);
    }
    w.put<std::uint64_t>(names_at);
    w.put<std::uint64_t>(offsets_at);
    w.put_bytes(std::string_view(impact_magic, 4));
    return w.release();
}

ImpactIndex deserialize_impact_index(std::string_view bytes, std::optional<std::uint64_t> checksum)
{
    constexpr std::size_t footer = 8 + 8 + 4;
    detail::ByteReader r(bytes);
    if (r.get_bytes(4) != std::string_view(impact_magic, 4)) {
        throw error(errc::corrupt_index, "not an impact index file");
    }
    if (auto version = r.get<std::uint32_t>(); version != impact_version) {
        throw error(errc::version_mismatch, "unsupported impact index version " + std::to_string(version));
    }
    if (bytes.size() < footer || bytes.substr(bytes.size() - 4) != std::string_view(impact_magic, 4)) {
        throw error(errc::corrupt_index, "impact index footer missing (truncated file?)");
    }

    ImpactIndex index;
    index.m_vocab_checksum = r.get<std::uint64_t>();
    if (checksum && *checksum != index.m_vocab_checksum) {
        throw error(errc::vocab_mismatch, "impact index was built with a different vocabulary");
    }
    auto count = r.get<std::uint64_t>();
    index.m_timestamp = r.get<std::int64_t>();
    index.m_model_id = r.get_string();

    detail::ByteReader tail(bytes.substr(bytes.size() - footer));
    auto names_at = tail.get<std::uint64_t>();
    auto offsets_at = tail.get<std::uint64_t>();
    if (names_at > offsets_at || offsets_at > bytes.size() - footer || (bytes.size() - footer - offsets_at) / 8 != count
        || (bytes.size() - footer - offsets_at) % 8 != 0) {
        throw error(errc::corrupt_index, "impact index offsets inconsistent");
    }

    detail::ByteReader offsets(bytes.substr(offsets_at, count * 8));
    index.m_entries.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        if (offsets.get<std::uint64_t>() != r.position()) {
            throw error(errc::corrupt_index, "offset table disagrees with records");
        }
        auto& e = index.m_entries[i];
        e.id = r.get<std::uint64_t>();
        if (e.id != i) {
            throw error(errc::corrupt_index, "passage ids not dense");
        }
        auto n = r.get_varint();
        if (n > r.remaining()) {
            throw error(errc::corrupt_index, "posting count past end of file");
        }
        e.postings.resize(n);
        for (auto& p : e.postings) {
            p.token = static_cast<token_id>(r.get_varint());
            p.weight = r.get<float>();
        }
    }
    if (r.position() != names_at) {
        throw error(errc::corrupt_index, "record section length mismatch");
    }
    index.m_names.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        index.m_names.push_back(r.get_string());
    }
    if (r.position() != offsets_at) {
        throw error(errc::corrupt_index, "name table length mismatch");
    }
    index.rebuild_name_lookup();
    return index;
}

void save(const ImpactIndex& index, const std::filesystem::path& path)
{
    detail::write_file(path, serialize(index));
}

ImpactIndex load_impact_index(const std::filesystem::path& path, std::optional<std::uint64_t> checksum)
{
    return deserialize_impact_index(detail::read_file(path), checksum);
}

std::optional<WeightRecord> read_weight_record(std::istream& in, std::size_t& line_no)
{
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            auto j = nlohmann::json::parse(line);
            WeightRecord record;
            record.pid = j.at("pid").get<std::string>();
            for (const auto& pair : j.at("tokens")) {
                if (!pair.is_array() || pair.size() != 2) {
                    throw error(errc::parse, "token entry must be [id, weight]");
                }
                auto id = pair[0].get<std::int64_t>();
                if (id < 0 || id > UINT32_MAX) {
                    throw error(errc::parse, "token id out of range");
                }
                record.tokens.emplace_back(static_cast<token_id>(id), pair[1].get<float>());
            }
            return record;
        } catch (const nlohmann::json::exception& e) {
            throw error(errc::parse, "weight record line " + std::to_string(line_no) + ": " + e.what());
        } catch (const error& e) {
            throw error(e.code(), "weight record line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return std::nullopt;
}

std::vector<WeightRecord> read_weight_jsonl(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw error(errc::io, "cannot open " + path.string());
    }
    std::vector<WeightRecord> records;
    std::size_t line_no = 0;
    while (auto record = read_weight_record(in, line_no)) {
        records.push_back(std::move(*record));
    }
    return records;
}

void write_weight_record(std::ostream& out, const WeightRecord& record)
{
    nlohmann::json tokens = nlohmann::json::array();
    for (const auto& [id, weight] : record.tokens) {
        tokens.push_back({id, weight});
    }
    nlohmann::json j{{"pid", record.pid}, {"tokens", std::move(tokens)}};
    out << j.dump() << '\n';
}

}  // namespace impact
