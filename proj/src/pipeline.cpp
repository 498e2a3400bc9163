#include "impact/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "impact/error.hpp"
#include "impact/likelihood.hpp"

namespace impact {

namespace {

using clock_type = std::chrono::steady_clock;

double elapsed_ms(clock_type::time_point a, clock_type::time_point b)
{
    return std::chrono::duration<double, std::milli>(b - a).count();
}

std::ofstream open_output(const fs::path& path)
{
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw error(errc::io, "cannot write " + path.string());
    }
    return out;
}

void write_json(const fs::path& path, const nlohmann::json& j)
{
    auto out = open_output(path);
    out << j.dump(2) << '\n';
}

/// Tokenizes records on up to configured_threads() workers; output order is input order.
std::vector<TokenSequence> tokenize_all(std::span<const TsvRecord> records, const Vocabulary& vocab)
{
    std::vector<TokenSequence> out(records.size());
    std::size_t workers = std::min(configured_threads(), std::max<std::size_t>(1, records.size() / 256));
    auto run = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            out[i] = tokenize(records[i].text, vocab);
        }
    };
    if (workers <= 1) {
        run(0, records.size());
    } else {
        std::vector<std::jthread> pool;
        std::size_t chunk = (records.size() + workers - 1) / workers;
        for (std::size_t begin = 0; begin < records.size(); begin += chunk) {
            pool.emplace_back(run, begin, std::min(records.size(), begin + chunk));
        }
    }
    return out;
}

/// SOURCE_DATE_EPOCH when set, otherwise the input's modification time, so
/// rebuilding from the same input yields the same bytes.
std::int64_t artifact_timestamp(const fs::path& input)
{
    if (const char* env = std::getenv("SOURCE_DATE_EPOCH"); env != nullptr && *env != '\0') {
        return std::strtoll(env, nullptr, 10);
    }
    std::error_code ec;
    auto mtime = fs::last_write_time(input, ec);
    if (ec) {
        return 0;
    }
    auto sys = std::chrono::file_clock::to_sys(mtime);
    return std::chrono::duration_cast<std::chrono::seconds>(sys.time_since_epoch()).count();
}

StageLatency summarize(std::vector<double> samples)
{
    StageLatency out;
    if (samples.empty()) {
        return out;
    }
    out.mean_ms = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
    std::sort(samples.begin(), samples.end());
    auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(samples.size())));
    out.p95_ms = samples[std::max<std::size_t>(rank, 1) - 1];
    return out;
}

nlohmann::json stage_json(const StageLatency& s)
{
    return {{"mean_ms", s.mean_ms}, {"p95_ms", s.p95_ms}};
}

}  // namespace

std::size_t configured_threads()
{
    std::size_t hw = std::max(1U, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("IMPACT_RERANK_THREADS"); env != nullptr) {
        long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1) {
            return std::min(hw, static_cast<std::size_t>(cap));
        }
    }
    return hw;
}

StopwordSet resolve_stopwords(const std::optional<fs::path>& path, const Vocabulary& vocab)
{
    return path ? load_stopwords(*path, vocab) : default_stopwords(vocab);
}

InvertedIndex build_bm25_from_records(std::span<const TsvRecord> records, const Vocabulary& vocab, Bm25Params params)
{
    auto tokens = tokenize_all(records, vocab);
    std::vector<PassageTokens> collection;
    collection.reserve(records.size());
    std::vector<std::string> names;
    names.reserve(records.size());
    std::unordered_map<std::string_view, std::size_t> seen;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!seen.emplace(records[i].id, i).second) {
            throw error(errc::duplicate_passage, "passage '" + records[i].id + "' repeated in collection");
        }
        collection.push_back({i, std::move(tokens[i])});
        names.push_back(records[i].id);
    }
    auto index = build_inverted_index(std::move(collection), vocab.size(), params);
    index.set_vocab_checksum(vocab.checksum());
    index.set_names(std::move(names));
    return index;
}

Pipeline::Pipeline(Vocabulary vocab, StopwordSet stopwords, InvertedIndex bm25, ImpactIndex impact)
    : m_vocab(std::move(vocab)), m_stopwords(std::move(stopwords)), m_bm25(std::move(bm25)), m_impact(std::move(impact))
{
    const auto n = m_bm25.num_passages();
    m_bm25_to_impact.resize(n);
    const bool named = !m_bm25.names().empty();
    for (std::uint32_t doc = 0; doc < n; ++doc) {
        std::optional<passage_id> id;
        if (named) {
            id = m_impact.id_of(m_bm25.names()[doc]);
        } else if (m_bm25.passage_of(doc) < m_impact.size()) {
            id = m_bm25.passage_of(doc);
        }
        if (id) {
            m_bm25_to_impact[doc] = *id;
        } else {
            m_bm25_to_impact[doc] = m_impact.size() + m_missing_names.size();
            m_missing_names.push_back(named ? m_bm25.names()[doc] : std::to_string(m_bm25.passage_of(doc)));
        }
    }
}

Pipeline Pipeline::load(const fs::path& vocab_path, const std::optional<fs::path>& stopwords, const fs::path& index_dir)
{
    auto vocab = load_vocabulary(vocab_path);
    auto stop = resolve_stopwords(stopwords, vocab);
    auto bm25 = load_inverted_index(index_dir / bm25_index_file, vocab.checksum());
    auto impact = load_impact_index(index_dir / impact_index_file, vocab.checksum());
    return Pipeline(std::move(vocab), std::move(stop), std::move(bm25), std::move(impact));
}

RankedList Pipeline::retrieve(const SparseTermVector& query, std::size_t depth) const
{
    if (query.empty()) {
        return {};
    }
    auto list = bm25_search(m_bm25, query, depth);
    for (auto& e : list.entries) {
        e.id = m_bm25_to_impact[*m_bm25.doc_of(e.id)];
    }
    return list;
}

std::string Pipeline::name_of(passage_id id) const
{
    if (id < m_impact.size()) {
        return m_impact.name_of(id);
    }
    return m_missing_names.at(id - m_impact.size());
}

bool LatencyBreakdown::stages_consistent() const noexcept
{
    double sum = query_process.mean_ms + retrieval.mean_ms + rerank.mean_ms;
    return std::fabs(sum - total.mean_ms) <= jitter_tolerance * total.mean_ms;
}

nlohmann::json LatencyBreakdown::to_json() const
{
    return {
        {"queries", queries},
        {"query_process", stage_json(query_process)},
        {"retrieval", stage_json(retrieval)},
        {"rerank", stage_json(rerank)},
        {"total", stage_json(total)},
        {"jitter_tolerance", jitter_tolerance},
        {"stages_consistent", stages_consistent()},
    };
}

std::string BenchReport::sweep_csv() const
{
    std::ostringstream out;
    out << "k,total_ms,mrr_at_10\n";
    char buf[96];
    for (const auto& row : sweep) {
        if (row.mrr_at_10) {
            std::snprintf(buf, sizeof(buf), "%zu,%.4f,%.4f\n", row.k, row.total_ms, *row.mrr_at_10);
        } else {
            std::snprintf(buf, sizeof(buf), "%zu,%.4f,\n", row.k, row.total_ms);
        }
        out << buf;
    }
    return out.str();
}

RankedList rerank_with_tail(const Pipeline& pipeline, const SparseTermVector& query, const RankedList& first_stage,
                            std::size_t k)
{
    if (k == 0 || first_stage.empty()) {
        return first_stage;
    }
    RerankRequest request{query, first_stage, k};
    auto result = rerank(request, pipeline.impact());
    auto out = std::move(result.ranking);
    for (auto id : result.skipped) {
        out.entries.push_back({id, 0.0});
    }
    for (std::size_t i = std::min(k, first_stage.size()); i < first_stage.size(); ++i) {
        out.entries.push_back(first_stage.entries[i]);
    }
    return out;
}

BenchReport run_bench(const Pipeline& pipeline, std::span<const TsvRecord> queries, const Qrels* qrels,
                      const BenchConfig& config)
{
    std::vector<std::size_t> order(queries.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(config.seed);
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(std::min(config.sample, order.size()));

    BenchReport report;
    std::vector<double> encode_ms, retrieve_ms, rerank_ms, total_ms;
    std::size_t sink = 0;
    for (auto qi : order) {
        auto t0 = clock_type::now();
        auto query = pipeline.encode(queries[qi].text);
        auto t1 = clock_type::now();
        auto candidates = pipeline.retrieve(query, config.depth);
        auto t2 = clock_type::now();
        std::size_t produced = candidates.size();
        if (config.cutoff > 0 && !candidates.empty()) {
            produced = rerank({query, std::move(candidates), config.cutoff}, pipeline.impact()).ranking.size();
        }
        auto t3 = clock_type::now();
        sink += produced;
        encode_ms.push_back(elapsed_ms(t0, t1));
        retrieve_ms.push_back(elapsed_ms(t1, t2));
        rerank_ms.push_back(elapsed_ms(t2, t3));
        total_ms.push_back(elapsed_ms(t0, t3));
    }
    auto& b = report.breakdown;
    b.queries = order.size();
    b.query_process = summarize(encode_ms);
    b.retrieval = summarize(retrieve_ms);
    b.rerank = summarize(rerank_ms);
    b.total = summarize(total_ms);

    for (auto k : config.sweep) {
        SweepRow row{k, 0.0, std::nullopt};
        double rr_sum = 0.0;
        std::size_t judged = 0;
        std::vector<double> times;
        for (auto qi : order) {
            auto t0 = clock_type::now();
            auto query = pipeline.encode(queries[qi].text);
            auto ranking = rerank_with_tail(pipeline, query, pipeline.retrieve(query, config.depth), k);
            auto t1 = clock_type::now();
            sink += ranking.size();
            times.push_back(elapsed_ms(t0, t1));

            if (qrels != nullptr) {
                auto it = qrels->find(queries[qi].id);
                if (it == qrels->end()
                    || std::none_of(it->second.begin(), it->second.end(), [](const auto& kv) { return kv.second >= 1; })) {
                    continue;
                }
                std::vector<std::string> names;
                for (std::size_t r = 0; r < std::min<std::size_t>(10, ranking.size()); ++r) {
                    names.push_back(pipeline.name_of(ranking.entries[r].id));
                }
                rr_sum += reciprocal_rank(names, it->second, 10);
                ++judged;
            }
        }
        row.total_ms = summarize(times).mean_ms;
        if (qrels != nullptr) {
            row.mrr_at_10 = judged == 0 ? 0.0 : rr_sum / static_cast<double>(judged);
        }
        report.sweep.push_back(row);
    }
    if (sink == SIZE_MAX) {
        std::cerr << "";  // keeps the measured work observable
    }
    return report;
}

nlohmann::json cmd_index(const IndexCommand& cmd)
{
    auto vocab = load_vocabulary(cmd.vocab);
    auto records = read_tsv_records(cmd.collection);
    auto index = build_bm25_from_records(records, vocab, cmd.params);
    fs::create_directories(cmd.index_dir);
    save(index, cmd.index_dir / bm25_index_file);

    std::size_t postings = 0;
    for (std::size_t t = 0; t < index.vocab_size(); ++t) {
        postings += index.postings(static_cast<token_id>(t)).size();
    }
    return {
        {"passages", index.num_passages()},
        {"avg_doc_length", index.avg_doc_length()},
        {"postings", postings},
        {"k1", index.params().k1},
        {"b", index.params().b},
        {"vocab_checksum", vocab.checksum()},
    };
}

ExpansionStats cmd_expand(const ExpandCommand& cmd)
{
    auto vocab = load_vocabulary(cmd.vocab);
    auto stop = resolve_stopwords(cmd.stopwords, vocab);
    auto records = read_tsv_records(cmd.collection);
    auto tokens = tokenize_all(records, vocab);

    std::vector<NamedPassage> passages;
    passages.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        passages.push_back({records[i].id, std::move(tokens[i])});
    }

    std::unique_ptr<LikelihoodProvider> provider;
    if (cmd.likelihoods) {
        provider = std::make_unique<FileLikelihoodProvider>(*cmd.likelihoods);
        if (provider->vocab_size() != vocab.size()) {
            throw error(errc::vocab_mismatch, "likelihood file vocabulary size differs from the vocabulary");
        }
    } else {
        std::vector<TokenSequence> corpus;
        if (cmd.cooccurrence_corpus) {
            corpus = tokenize_all(read_tsv_records(*cmd.cooccurrence_corpus), vocab);
        } else {
            for (const auto& p : passages) {
                corpus.push_back(p.tokens);
            }
        }
        provider = std::make_unique<CooccurrenceProvider>(corpus, vocab.size(), stop);
    }

    ExpansionConfig config{cmd.m, stop};
    auto result = expand_collection(passages, *provider, config, {cmd.strict, configured_threads()});
    for (const auto& f : result.failures) {
        std::cerr << "warning: passage " << f.id << " not expanded: " << f.message << '\n';
    }

    auto out = open_output(cmd.output);
    for (std::size_t i = 0; i < records.size(); ++i) {
        write_tsv_record(out, records[i].id, expanded_text(records[i].text, result.passages[i], vocab, cmd.separator));
    }
    if (cmd.stats) {
        write_json(*cmd.stats, result.stats.to_json());
    }
    return result.stats;
}

TrainingLog cmd_train(const TrainCommand& cmd)
{
    auto vocab = load_vocabulary(cmd.vocab);
    auto stop = resolve_stopwords(cmd.stopwords, vocab);
    auto records = read_tsv_records(cmd.collection);
    auto triples = read_training_tsv(cmd.training);
    if (triples.empty()) {
        throw error(errc::empty_dataset, "training file " + cmd.training.string() + " has no examples");
    }

    std::unordered_map<std::string, std::size_t> by_name;
    for (std::size_t i = 0; i < records.size(); ++i) {
        by_name.emplace(records[i].id, i);
    }
    std::vector<TokenSequence> corpus;
    std::unordered_map<std::size_t, std::size_t> corpus_slot;
    auto passage_index = [&](const std::string& pid) {
        auto it = by_name.find(pid);
        if (it == by_name.end()) {
            throw error(errc::parse, "training data refers to unknown passage '" + pid + "'");
        }
        auto [slot, inserted] = corpus_slot.emplace(it->second, corpus.size());
        if (inserted) {
            auto seq = tokenize(records[it->second].text, vocab);
            if (seq.empty()) {
                throw error(errc::parse, "training passage '" + pid + "' has no tokens");
            }
            corpus.push_back(std::move(seq));
        }
        return slot->second;
    };

    std::vector<TrainingExample> examples;
    for (const auto& t : triples) {
        TrainingExample ex{encode_query(t.query, vocab, stop), passage_index(t.positive), {}};
        for (const auto& neg : t.negatives) {
            ex.hard_negatives.push_back(passage_index(neg));
        }
        examples.push_back(std::move(ex));
    }

    auto result = train(corpus, examples, cmd.config, vocab.size());
    if (cmd.model.has_parent_path()) {
        fs::create_directories(cmd.model.parent_path());
    }
    save(result.model, cmd.model);
    if (cmd.log) {
        write_json(*cmd.log, {{"loss", result.log.loss}, {"negatives_per_query", result.log.negatives_per_query}});
    }
    return result.log;
}

std::size_t cmd_weights(const WeightsCommand& cmd)
{
    auto vocab = load_vocabulary(cmd.vocab);
    auto model = load_toy_model(cmd.model);
    if (model.encoder.vocab_size != vocab.size()) {
        throw error(errc::vocab_mismatch, "model vocabulary size differs from the vocabulary");
    }
    auto records = read_tsv_records(cmd.collection);
    auto tokens = tokenize_all(records, vocab);

    auto out = open_output(cmd.output);
    std::optional<ImpactIndexBuilder> builder;
    if (cmd.index_dir) {
        builder.emplace(ImpactMetadata{vocab.checksum(), "toyw:" + cmd.model.filename().string(),
                                       artifact_timestamp(cmd.collection), vocab.size()});
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
        WeightRecord record{records[i].id, {}};
        if (!tokens[i].empty()) {
            record.tokens = term_weights(tokens[i], model);
        }
        write_weight_record(out, record);
        if (builder) {
            builder->add(record.pid, record.tokens);
        }
    }
    if (builder) {
        fs::create_directories(*cmd.index_dir);
        save(std::move(*builder).finish(), *cmd.index_dir / impact_index_file);
    }
    return records.size();
}

nlohmann::json cmd_impact_index(const ImpactIndexCommand& cmd)
{
    auto vocab = load_vocabulary(cmd.vocab);
    std::ifstream in(cmd.weights);
    if (!in) {
        throw error(errc::io, "cannot open " + cmd.weights.string());
    }
    ImpactIndexBuilder builder({vocab.checksum(), cmd.model_id, artifact_timestamp(cmd.weights), vocab.size()});
    std::size_t line_no = 0;
    while (auto record = read_weight_record(in, line_no)) {
        builder.add(std::move(record->pid), record->tokens);
    }
    auto index = std::move(builder).finish();
    fs::create_directories(cmd.index_dir);
    save(index, cmd.index_dir / impact_index_file);
    return {{"passages", index.size()}, {"postings", index.total_postings()}, {"model_id", index.model_id()}};
}

std::size_t cmd_rerank(const RerankCommand& cmd)
{
    auto pipeline = Pipeline::load(cmd.vocab, cmd.stopwords, cmd.index_dir);
    auto queries = read_tsv_records(cmd.queries);
    std::optional<Run> first_run;
    if (cmd.first_stage) {
        first_run = read_run(*cmd.first_stage);
    }

    RerankOptions options;
    options.missing = cmd.strict ? MissingPolicy::fail : MissingPolicy::skip;
    options.threads = configured_threads();

    auto out = open_output(cmd.output);
    std::size_t skipped_total = 0;
    const auto& impact = pipeline.impact();
    for (const auto& q : queries) {
        auto query = pipeline.encode(q.text);

        RankedList candidates;
        std::vector<std::string> extra;  // names of run candidates absent from the impact index
        if (first_run) {
            auto it = first_run->find(q.id);
            if (it != first_run->end()) {
                std::unordered_map<std::string, double> scores;
                for (const auto& e : it->second) {
                    scores.emplace(e.pid, e.score);
                }
                for (const auto& pid : ranked_pids(it->second)) {
                    auto id = impact.id_of(pid);
                    if (!id) {
                        id = impact.size() + extra.size();
                        extra.push_back(pid);
                    }
                    candidates.entries.push_back({*id, scores[pid]});
                }
            }
        } else {
            candidates = pipeline.retrieve(query, cmd.depth);
        }
        auto name = [&](passage_id id) {
            if (first_run) {
                return id < impact.size() ? impact.name_of(id) : extra[id - impact.size()];
            }
            return pipeline.name_of(id);
        };

        RankedList final_list;
        if (cmd.cutoff == 0) {
            final_list = std::move(candidates);
        } else if (!candidates.empty()) {
            auto result = rerank({query, std::move(candidates), cmd.cutoff}, impact, options);
            for (auto id : result.skipped) {
                std::cerr << "warning: query " << q.id << ": passage " << name(id) << " missing from impact index\n";
            }
            skipped_total += result.skipped.size();
            final_list = std::move(result.ranking);
        }
        for (std::size_t r = 0; r < final_list.size(); ++r) {
            write_run_line(out, q.id, name(final_list.entries[r].id), static_cast<int>(r + 1),
                           final_list.entries[r].score, cmd.tag);
        }
    }
    return skipped_total;
}

nlohmann::json cmd_eval(const EvalCommand& cmd)
{
    auto run = read_run(cmd.run);
    auto qrels = read_qrels(cmd.qrels);
    auto mrr = mrr_at_k(run, qrels, cmd.k);
    auto ndcg = ndcg_at_k(run, qrels, cmd.k);
    auto map = mean_average_precision(run, qrels, cmd.map_threshold);
    nlohmann::json j{{mrr.metric, mrr.to_json()}, {ndcg.metric, ndcg.to_json()}, {map.metric, map.to_json()}};
    if (cmd.output) {
        write_json(*cmd.output, j);
    }
    return j;
}

BenchReport cmd_bench(const BenchCommand& cmd)
{
    auto pipeline = Pipeline::load(cmd.vocab, cmd.stopwords, cmd.index_dir);
    auto queries = read_tsv_records(cmd.queries);
    std::optional<Qrels> qrels;
    if (cmd.qrels) {
        qrels = read_qrels(*cmd.qrels);
    }
    auto report = run_bench(pipeline, queries, qrels ? &*qrels : nullptr, cmd.config);
    if (cmd.csv) {
        auto out = open_output(*cmd.csv);
        out << report.sweep_csv();
    }
    if (cmd.report) {
        write_json(*cmd.report, report.breakdown.to_json());
    }
    return report;
}

}  // namespace impact
