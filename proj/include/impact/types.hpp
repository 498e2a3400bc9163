#pragma once

#include <cstdint>
#include <vector>

namespace impact {

using token_id = std::uint32_t;
using passage_id = std::uint64_t;

/// Token ids in text order.
struct TokenSequence {
    std::vector<token_id> ids;

    std::size_t size() const noexcept { return ids.size(); }
    bool empty() const noexcept { return ids.empty(); }
    bool operator==(const TokenSequence&) const = default;
};

}  // namespace impact
