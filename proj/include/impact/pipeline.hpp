#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "impact/bm25.hpp"
#include "impact/eval_metrics.hpp"
#include "impact/expansion.hpp"
#include "impact/impact_index.hpp"
#include "impact/query_encoder.hpp"
#include "impact/reranker.hpp"
#include "impact/toy_model.hpp"
#include "impact/trec_io.hpp"
#include "impact/vocab.hpp"

namespace impact {

namespace fs = std::filesystem;

/// Worker count for internal parallelism: hardware concurrency, capped by
/// the IMPACT_RERANK_THREADS environment variable when set.
std::size_t configured_threads();

inline constexpr const char* bm25_index_file = "bm25.idx";
inline constexpr const char* impact_index_file = "impact.idx";

/// Stopwords from a file when given, the built-in English list otherwise.
StopwordSet resolve_stopwords(const std::optional<fs::path>& path, const Vocabulary& vocab);

/// Tokenizes every passage; ids are positions in `records`, names their ids.
InvertedIndex build_bm25_from_records(std::span<const TsvRecord> records, const Vocabulary& vocab, Bm25Params params);

/// BM25 first stage joined to an impact index. Owns every artifact; all
/// query-time calls are const.
class Pipeline {
  public:
    Pipeline(Vocabulary vocab, StopwordSet stopwords, InvertedIndex bm25, ImpactIndex impact);

    static Pipeline load(const fs::path& vocab, const std::optional<fs::path>& stopwords, const fs::path& index_dir);

    const Vocabulary& vocab() const noexcept { return m_vocab; }
    const StopwordSet& stopwords() const noexcept { return m_stopwords; }
    const InvertedIndex& bm25() const noexcept { return m_bm25; }
    const ImpactIndex& impact() const noexcept { return m_impact; }

    SparseTermVector encode(std::string_view query) const { return encode_query(query, m_vocab, m_stopwords); }

    /// BM25 top-`depth` with ids translated into the impact index's id
    /// space; passages unknown to the impact index get an id past its end
    /// so the re-ranker treats them as missing.
    RankedList retrieve(const SparseTermVector& query, std::size_t depth) const;

    /// External pid of an impact-space id produced by retrieve().
    std::string name_of(passage_id id) const;

  private:
    Vocabulary m_vocab;
    StopwordSet m_stopwords;
    InvertedIndex m_bm25;
    ImpactIndex m_impact;
    std::vector<passage_id> m_bm25_to_impact;  // by BM25 ordinal
    std::vector<std::string> m_missing_names;  // for BM25 passages absent from the impact index
};

struct StageLatency {
    double mean_ms = 0.0;
    double p95_ms = 0.0;
};

struct LatencyBreakdown {
    StageLatency query_process;
    StageLatency retrieval;
    StageLatency rerank;
    StageLatency total;
    std::size_t queries = 0;
    double jitter_tolerance = 0.05;  // allowed |sum of stage means - total mean| / total mean

    bool stages_consistent() const noexcept;
    nlohmann::json to_json() const;
};

struct SweepRow {
    std::size_t k = 0;
    double total_ms = 0.0;
    std::optional<double> mrr_at_10;
};

struct BenchConfig {
    std::size_t sample = 200;
    std::uint64_t seed = 42;
    std::size_t depth = 1000;
    std::size_t cutoff = 1000;
    std::vector<std::size_t> sweep = {0, 10, 20, 50, 100, 200, 500, 1000};
};

struct BenchReport {
    LatencyBreakdown breakdown;
    std::vector<SweepRow> sweep;

    std::string sweep_csv() const;
};

/// Issues the sampled queries one by one on the calling thread.
BenchReport run_bench(const Pipeline& pipeline, std::span<const TsvRecord> queries, const Qrels* qrels,
                      const BenchConfig& config);

/// Final ranking for cutoff k: re-ranked top-k followed by the rest of the
/// first stage; k = 0 returns the first stage unchanged.
RankedList rerank_with_tail(const Pipeline& pipeline, const SparseTermVector& query, const RankedList& first_stage,
                            std::size_t k);

// Command implementations shared by the CLI and the tests.

struct IndexCommand {
    fs::path vocab;
    fs::path collection;
    fs::path index_dir;
    Bm25Params params;
};
nlohmann::json cmd_index(const IndexCommand& cmd);

struct ExpandCommand {
    fs::path vocab;
    std::optional<fs::path> stopwords;
    fs::path collection;
    fs::path output;
    std::optional<fs::path> stats;
    std::size_t m = 128;
    std::optional<fs::path> likelihoods;       // LKH1 file; co-occurrence provider otherwise
    std::optional<fs::path> cooccurrence_corpus;  // defaults to the collection itself
    std::string separator;
    bool strict = false;
};
ExpansionStats cmd_expand(const ExpandCommand& cmd);

struct TrainCommand {
    fs::path vocab;
    std::optional<fs::path> stopwords;
    fs::path collection;
    fs::path training;
    fs::path model;
    std::optional<fs::path> log;
    TrainConfig config;
};
TrainingLog cmd_train(const TrainCommand& cmd);

struct WeightsCommand {
    fs::path vocab;
    fs::path collection;
    fs::path model;
    fs::path output;
    std::optional<fs::path> index_dir;  // also build the impact index
};
std::size_t cmd_weights(const WeightsCommand& cmd);

struct ImpactIndexCommand {
    fs::path vocab;
    fs::path weights;
    fs::path index_dir;
    std::string model_id = "external";
};
nlohmann::json cmd_impact_index(const ImpactIndexCommand& cmd);

struct RerankCommand {
    fs::path vocab;
    std::optional<fs::path> stopwords;
    fs::path index_dir;
    fs::path queries;
    std::optional<fs::path> first_stage;  // TREC run; in-process BM25 otherwise
    fs::path output;
    std::size_t cutoff = 1000;
    std::size_t depth = 1000;
    std::string tag = "impact";
    bool strict = false;
};
/// Returns the number of candidates skipped as missing from the impact index.
std::size_t cmd_rerank(const RerankCommand& cmd);

struct EvalCommand {
    fs::path run;
    fs::path qrels;
    std::size_t k = 10;
    int map_threshold = 1;
    std::optional<fs::path> output;
};
nlohmann::json cmd_eval(const EvalCommand& cmd);

struct BenchCommand {
    fs::path vocab;
    std::optional<fs::path> stopwords;
    fs::path index_dir;
    fs::path queries;
    std::optional<fs::path> qrels;
    std::optional<fs::path> csv;
    std::optional<fs::path> report;
    BenchConfig config;
};
BenchReport cmd_bench(const BenchCommand& cmd);

}  // namespace impact
