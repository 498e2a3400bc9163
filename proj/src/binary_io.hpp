#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "impact/error.hpp"

namespace impact::detail {

static_assert(std::endian::native == std::endian::little, "on-disk formats assume a little-endian host");

class ByteWriter {
  public:
    template <typename T>
    void put(T value)
    {
        static_assert(std::is_trivially_copyable_v<T>);
        char raw[sizeof(T)];
        std::memcpy(raw, &value, sizeof(T));
        m_buf.append(raw, sizeof(T));
    }

    void put_varint(std::uint64_t value)
    {
        while (value >= 0x80) {
            m_buf.push_back(static_cast<char>((value & 0x7F) | 0x80));
            value >>= 7;
        }
        m_buf.push_back(static_cast<char>(value));
    }

    void put_bytes(std::string_view bytes) { m_buf.append(bytes); }

    void put_string(std::string_view s)
    {
        put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
        put_bytes(s);
    }

    std::size_t size() const noexcept { return m_buf.size(); }
    const std::string& bytes() const noexcept { return m_buf; }
    std::string release() { return std::move(m_buf); }

  private:
    std::string m_buf;
};

/// Bounds-checked reader; any overrun is reported as a corrupt file.
class ByteReader {
  public:
    explicit ByteReader(std::string_view data, errc overrun = errc::corrupt_index)
        : m_data(data), m_overrun(overrun)
    {}

    template <typename T>
    T get()
    {
        static_assert(std::is_trivially_copyable_v<T>);
        need(sizeof(T));
        T value;
        std::memcpy(&value, m_data.data() + m_pos, sizeof(T));
        m_pos += sizeof(T);
        return value;
    }

    std::uint64_t get_varint()
    {
        std::uint64_t value = 0;
        for (int shift = 0; shift < 64; shift += 7) {
            need(1);
            auto byte = static_cast<unsigned char>(m_data[m_pos++]);
            value |= static_cast<std::uint64_t>(byte & 0x7F) << shift;
            if ((byte & 0x80) == 0) {
                return value;
            }
        }
        throw error(m_overrun, "malformed varint");
    }

    std::string_view get_bytes(std::size_t n)
    {
        need(n);
        auto out = m_data.substr(m_pos, n);
        m_pos += n;
        return out;
    }

    std::string get_string() { return std::string(get_bytes(get<std::uint32_t>())); }

    std::size_t position() const noexcept { return m_pos; }
    void seek(std::size_t pos)
    {
        if (pos > m_data.size()) {
            throw error(m_overrun, "offset past end of file");
        }
        m_pos = pos;
    }
    std::size_t remaining() const noexcept { return m_data.size() - m_pos; }

  private:
    void need(std::size_t n) const
    {
        if (m_data.size() - m_pos < n) {
            throw error(m_overrun, "unexpected end of file");
        }
    }

    std::string_view m_data;
    std::size_t m_pos = 0;
    errc m_overrun;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace impact::detail
