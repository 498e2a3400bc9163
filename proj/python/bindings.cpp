#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "impact/error.hpp"
#include "impact/pipeline.hpp"

namespace py = pybind11;
using namespace impact;

namespace {

py::object to_python(const nlohmann::json& j)
{
    return py::module_::import("json").attr("loads")(j.dump());
}

using Scored = std::vector<std::pair<std::string, double>>;

Scored named(const Pipeline& pipeline, const RankedList& list)
{
    Scored out;
    out.reserve(list.size());
    for (const auto& e : list.entries) {
        out.emplace_back(pipeline.name_of(e.id), e.score);
    }
    return out;
}

std::vector<std::pair<token_id, std::uint32_t>> as_pairs(const SparseTermVector& q)
{
    std::vector<std::pair<token_id, std::uint32_t>> out;
    for (const auto& t : q.terms) {
        out.emplace_back(t.token, t.count);
    }
    return out;
}

/// qid -> [(pid, rank, score)]
Run run_from(const std::map<std::string, std::vector<std::tuple<std::string, int, double>>>& in)
{
    Run run;
    for (const auto& [qid, rows] : in) {
        auto& entries = run[qid];
        for (const auto& [pid, rank, score] : rows) {
            entries.push_back({pid, rank, score});
        }
    }
    return run;
}

}  // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "BM25 retrieval with impact-weight re-ranking and passage expansion";
    py::register_exception<error>(m, "ImpactError", PyExc_RuntimeError);

    py::class_<Vocabulary>(m, "Vocabulary")
        .def_static("load", &load_vocabulary, py::arg("path"))
        .def_static("from_entries", &Vocabulary::from_entries, py::arg("entries"))
        .def("__len__", &Vocabulary::size)
        .def_property_readonly("checksum", &Vocabulary::checksum)
        .def_property_readonly("entries", &Vocabulary::entries)
        .def("token", &Vocabulary::token, py::arg("id"))
        .def("find", &Vocabulary::find, py::arg("token"))
        .def(
            "tokenize", [](const Vocabulary& v, std::string_view text) { return tokenize(text, v).ids; },
            py::arg("text"));

    py::class_<StopwordSet>(m, "StopwordSet")
        .def(py::init<std::vector<token_id>, std::size_t>(), py::arg("ids"), py::arg("vocab_size"))
        .def("__contains__", &StopwordSet::contains)
        .def("__len__", &StopwordSet::size)
        .def_property_readonly("ids", &StopwordSet::ids);

    m.def("default_stopwords", &default_stopwords, py::arg("vocab"));
    m.def("load_stopwords", &load_stopwords, py::arg("path"), py::arg("vocab"));
    m.def(
        "encode_query",
        [](std::string_view text, const Vocabulary& vocab, const StopwordSet& stop) {
            return as_pairs(encode_query(text, vocab, stop));
        },
        py::arg("text"), py::arg("vocab"), py::arg("stopwords"),
        "Query as sorted (token id, count) pairs.");
    m.def(
        "expand_passage",
        [](std::vector<token_id> passage, std::vector<float> scores, std::size_t m, const StopwordSet& stop) {
            return expand_passage(TokenSequence{std::move(passage)}, {std::move(scores)}, {m, stop}).appended;
        },
        py::arg("passage"), py::arg("scores"), py::arg("m"), py::arg("stopwords"),
        "Tokens appended to `passage` given one likelihood score per vocabulary token.");

    py::class_<Pipeline>(m, "Pipeline")
        .def_static(
            "load",
            [](const fs::path& vocab, const fs::path& index_dir, const std::optional<fs::path>& stopwords) {
                return Pipeline::load(vocab, stopwords, index_dir);
            },
            py::arg("vocab"), py::arg("index_dir"), py::arg("stopwords") = std::nullopt,
            py::call_guard<py::gil_scoped_release>())
        .def_property_readonly("num_passages", [](const Pipeline& p) { return p.bm25().num_passages(); })
        .def(
            "encode", [](const Pipeline& p, std::string_view text) { return as_pairs(p.encode(text)); },
            py::arg("text"))
        .def(
            "retrieve",
            [](const Pipeline& p, std::string_view text, std::size_t depth) {
                return named(p, p.retrieve(p.encode(text), depth));
            },
            py::arg("text"), py::arg("depth") = 1000, py::call_guard<py::gil_scoped_release>())
        .def(
            "rerank",
            [](const Pipeline& p, std::string_view text, std::size_t depth, std::size_t cutoff) {
                auto query = p.encode(text);
                auto first = p.retrieve(query, depth);
                if (first.empty()) {
                    return Scored{};
                }
                return named(p, rerank({query, std::move(first), cutoff}, p.impact()).ranking);
            },
            py::arg("text"), py::arg("depth") = 1000, py::arg("cutoff") = 1000,
            py::call_guard<py::gil_scoped_release>(), "Re-ranked top `cutoff` of the BM25 top `depth`.");

    m.def(
        "evaluate",
        [](const std::map<std::string, std::vector<std::tuple<std::string, int, double>>>& run,
           const Qrels& qrels, std::size_t k, int map_threshold) {
            auto r = run_from(run);
            auto mrr = mrr_at_k(r, qrels, k);
            auto ndcg = ndcg_at_k(r, qrels, k);
            auto map = mean_average_precision(r, qrels, map_threshold);
            return to_python({{mrr.metric, mrr.to_json()}, {ndcg.metric, ndcg.to_json()}, {map.metric, map.to_json()}});
        },
        py::arg("run"), py::arg("qrels"), py::arg("k") = 10, py::arg("map_threshold") = 1,
        "Metrics of a run given as {qid: [(pid, rank, score)]} against {qid: {pid: grade}}.");

    // command equivalents of the CLI subcommands
    m.def(
        "index",
        [](fs::path vocab, fs::path collection, fs::path index_dir, double k1, double b) {
            nlohmann::json j;
            {
                py::gil_scoped_release release;
                j = cmd_index({std::move(vocab), std::move(collection), std::move(index_dir), {k1, b}});
            }
            return to_python(j);
        },
        py::arg("vocab"), py::arg("collection"), py::arg("index_dir"), py::arg("k1") = 0.9, py::arg("b") = 0.4);

    m.def(
        "expand",
        [](fs::path vocab, fs::path collection, fs::path output, std::size_t m,
           std::optional<fs::path> stopwords, std::optional<fs::path> likelihoods,
           std::optional<fs::path> cooccurrence_corpus, std::string separator, bool strict) {
            ExpandCommand cmd;
            cmd.vocab = std::move(vocab);
            cmd.collection = std::move(collection);
            cmd.output = std::move(output);
            cmd.m = m;
            cmd.stopwords = std::move(stopwords);
            cmd.likelihoods = std::move(likelihoods);
            cmd.cooccurrence_corpus = std::move(cooccurrence_corpus);
            cmd.separator = std::move(separator);
            cmd.strict = strict;
            nlohmann::json j;
            {
                py::gil_scoped_release release;
                j = cmd_expand(cmd).to_json();
            }
            return to_python(j);
        },
        py::arg("vocab"), py::arg("collection"), py::arg("output"), py::arg("m") = 128,
        py::arg("stopwords") = std::nullopt, py::arg("likelihoods") = std::nullopt,
        py::arg("cooccurrence_corpus") = std::nullopt, py::arg("separator") = "", py::arg("strict") = false);

    m.def(
        "train",
        [](fs::path vocab, fs::path collection, fs::path training, fs::path model, std::size_t steps,
           double learning_rate, double momentum, std::size_t batch_size, std::size_t hard_negatives,
           std::size_t dim, std::size_t window, std::uint64_t seed, std::optional<fs::path> stopwords) {
            TrainCommand cmd{std::move(vocab), std::move(stopwords), std::move(collection), std::move(training),
                             std::move(model), std::nullopt, {}};
            cmd.config.steps = steps;
            cmd.config.learning_rate = learning_rate;
            cmd.config.momentum = momentum;
            cmd.config.batch_size = batch_size;
            cmd.config.hard_negatives = hard_negatives;
            cmd.config.seed = seed;
            cmd.config.init.dim = dim;
            cmd.config.init.window = window;
            cmd.config.init.seed = seed;
            py::gil_scoped_release release;
            return cmd_train(cmd).loss;
        },
        py::arg("vocab"), py::arg("collection"), py::arg("training"), py::arg("model"), py::arg("steps") = 500,
        py::arg("learning_rate") = 0.05, py::arg("momentum") = 0.0, py::arg("batch_size") = 8,
        py::arg("hard_negatives") = 7, py::arg("dim") = 16, py::arg("window") = 1, py::arg("seed") = 42,
        py::arg("stopwords") = std::nullopt, "Trains the toy model; returns the per-step loss.");

    m.def(
        "weights",
        [](fs::path vocab, fs::path collection, fs::path model, fs::path output, std::optional<fs::path> index_dir) {
            return cmd_weights(
                {std::move(vocab), std::move(collection), std::move(model), std::move(output), std::move(index_dir)});
        },
        py::arg("vocab"), py::arg("collection"), py::arg("model"), py::arg("output"),
        py::arg("index_dir") = std::nullopt, py::call_guard<py::gil_scoped_release>());

    m.def(
        "impact_index",
        [](fs::path vocab, fs::path weights, fs::path index_dir, std::string model_id) {
            nlohmann::json j;
            {
                py::gil_scoped_release release;
                j = cmd_impact_index({std::move(vocab), std::move(weights), std::move(index_dir), std::move(model_id)});
            }
            return to_python(j);
        },
        py::arg("vocab"), py::arg("weights"), py::arg("index_dir"), py::arg("model_id") = "external");

    m.def(
        "rerank_run",
        [](fs::path vocab, fs::path index_dir, fs::path queries, fs::path output, std::size_t cutoff,
           std::size_t depth, std::optional<fs::path> first_stage, std::optional<fs::path> stopwords,
           std::string tag, bool strict) {
            RerankCommand cmd;
            cmd.vocab = std::move(vocab);
            cmd.index_dir = std::move(index_dir);
            cmd.queries = std::move(queries);
            cmd.output = std::move(output);
            cmd.cutoff = cutoff;
            cmd.depth = depth;
            cmd.first_stage = std::move(first_stage);
            cmd.stopwords = std::move(stopwords);
            cmd.tag = std::move(tag);
            cmd.strict = strict;
            return cmd_rerank(cmd);
        },
        py::arg("vocab"), py::arg("index_dir"), py::arg("queries"), py::arg("output"), py::arg("cutoff") = 1000,
        py::arg("depth") = 1000, py::arg("first_stage") = std::nullopt, py::arg("stopwords") = std::nullopt,
        py::arg("tag") = "impact", py::arg("strict") = false, py::call_guard<py::gil_scoped_release>(),
        "Writes a TREC run; returns the number of candidates missing from the impact index.");

    m.def(
        "eval_run",
        [](fs::path run, fs::path qrels, std::size_t k, int map_threshold) {
            return to_python(cmd_eval({std::move(run), std::move(qrels), k, map_threshold, std::nullopt}));
        },
        py::arg("run"), py::arg("qrels"), py::arg("k") = 10, py::arg("map_threshold") = 1);

    m.def(
        "bench",
        [](fs::path vocab, fs::path index_dir, fs::path queries, std::optional<fs::path> qrels, std::size_t sample,
           std::uint64_t seed, std::size_t depth, std::size_t cutoff) {
            BenchCommand cmd;
            cmd.vocab = std::move(vocab);
            cmd.index_dir = std::move(index_dir);
            cmd.queries = std::move(queries);
            cmd.qrels = std::move(qrels);
            cmd.config.sample = sample;
            cmd.config.seed = seed;
            cmd.config.depth = depth;
            cmd.config.cutoff = cutoff;
            BenchReport report;
            {
                py::gil_scoped_release release;
                report = cmd_bench(cmd);
            }
            auto j = report.breakdown.to_json();
            j["sweep_csv"] = report.sweep_csv();
            return to_python(j);
        },
        py::arg("vocab"), py::arg("index_dir"), py::arg("queries"), py::arg("qrels") = std::nullopt,
        py::arg("sample") = 200, py::arg("seed") = 42, py::arg("depth") = 1000, py::arg("cutoff") = 1000);
}
