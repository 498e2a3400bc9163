#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace impact {

/// `id <TAB> text` lines, as in MS MARCO collection.tsv and queries.tsv.
struct TsvRecord {
    std::string id;
    std::string text;
};

/// Throws IoError or ParseError (line without a tab, empty id).
std::vector<TsvRecord> read_tsv_records(const std::filesystem::path& path);
void write_tsv_record(std::ostream& out, std::string_view id, std::string_view text);

struct RunEntry {
    std::string pid;
    int rank = 0;
    double score = 0.0;
};

/// qid -> entries in file order.
using Run = std::map<std::string, std::vector<RunEntry>>;

/// qid -> pid -> grade.
using Qrels = std::map<std::string, std::map<std::string, int>>;

/// `qid Q0 pid rank score tag`; the tag column is ignored.
Run read_run(const std::filesystem::path& path);
Run parse_run(std::istream& in);
void write_run_line(std::ostream& out, std::string_view qid, std::string_view pid, int rank, double score,
                    std::string_view tag);

/// `qid 0 pid grade`.
Qrels read_qrels(const std::filesystem::path& path);
Qrels parse_qrels(std::istream& in);

/// `query <TAB> positive-pid <TAB> comma-separated negative-pids`.
struct TrainingTriple {
    std::string query;
    std::string positive;
    std::vector<std::string> negatives;
};

std::vector<TrainingTriple> read_training_tsv(const std::filesystem::path& path);

}  // namespace impact
