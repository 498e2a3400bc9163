#pragma once

#include <stdexcept>
#include <string>

namespace impact {

enum class errc {
    io,
    parse,
    invalid_argument,
    duplicate_token,
    empty_vocabulary,
    missing_unk,
    duplicate_passage,
    empty_collection,
    negative_weight,
    unknown_passage,
    corrupt_index,
    vocab_mismatch,
    version_mismatch,
    missing_record,
    non_finite,
    empty_dataset,
};

const char* to_string(errc code) noexcept;

/// Every failure raised by the library carries one of the codes above.
class error : public std::runtime_error {
  public:
    error(errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), m_code(code)
    {}

    errc code() const noexcept { return m_code; }

    /// True for failures caused by bad input (files, arguments) rather than a bug.
    bool is_input_error() const noexcept;

  private:
    errc m_code;
};

}  // namespace impact
