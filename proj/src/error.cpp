#include "impact/error.hpp"

namespace impact {

const char* to_string(errc code) noexcept
{
    switch (code) {
    case errc::io: return "IoError";
    case errc::parse: return "ParseError";
    case errc::invalid_argument: return "InvalidArgument";
    case errc::duplicate_token: return "DuplicateToken";
    case errc::empty_vocabulary: return "EmptyVocabulary";
    case errc::missing_unk: return "MissingUnk";
    case errc::duplicate_passage: return "DuplicatePassage";
    case errc::empty_collection: return "EmptyCollection";
    case errc::negative_weight: return "NegativeWeight";
    case errc::unknown_passage: return "UnknownPassage";
    case errc::corrupt_index: return "CorruptIndex";
    case errc::vocab_mismatch: return "VocabMismatch";
    case errc::version_mismatch: return "VersionMismatch";
    case errc::missing_record: return "MissingRecord";
    case errc::non_finite: return "NonFinite";
    case errc::empty_dataset: return "EmptyDataset";
    }
    return "Unknown";
}

bool error::is_input_error() const noexcept
{
    switch (m_code) {
    case errc::non_finite: return false;
    default: return true;
    }
}

}  // namespace impact
