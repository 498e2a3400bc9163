#include "impact/trec_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "impact/error.hpp"

namespace impact {

namespace {

std::ifstream open_input(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw error(errc::io, "cannot open " + path.string());
    }
    return in;
}

void chomp(std::string& line)
{
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
}

std::string where(std::size_t line_no)
{
    return "line " + std::to_string(line_no);
}

}  // namespace

std::vector<TsvRecord> read_tsv_records(const std::filesystem::path& path)
{
    auto in = open_input(path);
    std::vector<TsvRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        chomp(line);
        if (line.empty()) {
            continue;
        }
        auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0) {
            throw error(errc::parse, path.string() + " " + where(line_no) + ": expected 'id<TAB>text'");
        }
        records.push_back({line.substr(0, tab), line.substr(tab + 1)});
    }
    return records;
}

void write_tsv_record(std::ostream& out, std::string_view id, std::string_view text)
{
    out << id << '\t' << text << '\n';
}

Run parse_run(std::istream& in)
{
    Run run;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::string qid, q0, pid, rank, score;
        if (!(fields >> qid)) {
            continue;
        }
        if (!(fields >> q0 >> pid >> rank >> score)) {
            throw error(errc::parse, "run " + where(line_no) + ": expected 'qid Q0 pid rank score tag'");
        }
        RunEntry entry{pid, 0, 0.0};
        try {
            entry.rank = std::stoi(rank);
            entry.score = std::stod(score);
        } catch (const std::exception&) {
            throw error(errc::parse, "run " + where(line_no) + ": bad rank or score");
        }
        run[qid].push_back(std::move(entry));
    }
    return run;
}

Run read_run(const std::filesystem::path& path)
{
    auto in = open_input(path);
    return parse_run(in);
}

void write_run_line(std::ostream& out, std::string_view qid, std::string_view pid, int rank, double score,
                    std::string_view tag)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", score);
    out << qid << " Q0 " << pid << ' ' << rank << ' ' << buf << ' ' << tag << '\n';
}

Qrels parse_qrels(std::istream& in)
{
    Qrels qrels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::string qid, iter, pid;
        int grade = 0;
        if (!(fields >> qid)) {
            continue;
        }
        if (!(fields >> iter >> pid >> grade)) {
            throw error(errc::parse, "qrels " + where(line_no) + ": expected 'qid 0 pid grade'");
        }
        if (grade < 0) {
            // negative grades (e.g. -1 for junk) count as non-relevant
            grade = 0;
        }
        qrels[qid][pid] = grade;
    }
    return qrels;
}

Qrels read_qrels(const std::filesystem::path& path)
{
    auto in = open_input(path);
    return parse_qrels(in);
}

std::vector<TrainingTriple> read_training_tsv(const std::filesystem::path& path)
{
    auto in = open_input(path);
    std::vector<TrainingTriple> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        chomp(line);
        if (line.empty()) {
            continue;
        }
        auto t1 = line.find('\t');
        auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        if (t2 == std::string::npos) {
            throw error(errc::parse, path.string() + " " + where(line_no) + ": expected three tab-separated fields");
        }
        TrainingTriple triple{line.substr(0, t1), line.substr(t1 + 1, t2 - t1 - 1), {}};
        std::string negatives = line.substr(t2 + 1);
        std::size_t start = 0;
        while (start <= negatives.size()) {
            auto comma = negatives.find(',', start);
            auto item = negatives.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
            if (!item.empty()) {
                triple.negatives.push_back(std::move(item));
            }
            if (comma == std::string::npos) {
                break;
            }
            start = comma + 1;
        }
        if (triple.positive.empty()) {
            throw error(errc::parse, path.string() + " " + where(line_no) + ": empty positive pid");
        }
        out.push_back(std::move(triple));
    }
    return out;
}

}  // namespace impact
