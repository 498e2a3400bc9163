#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "impact/error.hpp"
#include "impact/pipeline.hpp"

namespace {

constexpr int exit_internal = 1;
constexpr int exit_input = 2;

template <typename T>
void optional_path(CLI::App* cmd, const std::string& flag, std::optional<T>& target, const std::string& help)
{
    cmd->add_option_function<std::string>(flag, [&target](const std::string& v) { target = T(v); }, help);
}

}  // namespace

int main(int argc, char** argv)
{
    using namespace impact;

    CLI::App app{"BM25 retrieval with impact-weight re-ranking and passage expansion"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "impact_rerank 0.1.0");

    std::string vocab;
    std::optional<fs::path> stopwords;
    auto add_vocab = [&](CLI::App* cmd) {
        cmd->add_option("--vocab", vocab, "WordPiece vocabulary, one token per line")->required();
    };
    auto add_stopwords = [&](CLI::App* cmd) {
        optional_path(cmd, "--stopwords", stopwords, "stopword list, one surface form per line");
    };

    // index
    IndexCommand index_cmd;
    auto* index = app.add_subcommand("index", "build the BM25 index from a collection TSV");
    add_vocab(index);
    index->add_option("--collection", index_cmd.collection, "pid<TAB>text")->required();
    index->add_option("--index-dir", index_cmd.index_dir)->required();
    index->add_option("--k1", index_cmd.params.k1)->capture_default_str();
    index->add_option("--b", index_cmd.params.b)->capture_default_str();

    // expand
    ExpandCommand expand_cmd;
    auto* expand = app.add_subcommand("expand", "append top-likelihood tokens to every passage");
    add_vocab(expand);
    add_stopwords(expand);
    expand->add_option("--collection", expand_cmd.collection)->required();
    expand->add_option("--output", expand_cmd.output, "expanded collection TSV")->required();
    optional_path(expand, "--stats", expand_cmd.stats, "expansion statistics JSON");
    expand->add_option("--m", expand_cmd.m, "tokens considered per passage")->capture_default_str();
    optional_path(expand, "--likelihoods", expand_cmd.likelihoods, "LKH1 likelihood file");
    optional_path(expand, "--cooccurrence-corpus", expand_cmd.cooccurrence_corpus,
                  "TSV used for co-occurrence counts (default: the collection)");
    expand->add_option("--separator", expand_cmd.separator, "text placed between passage and appended tokens");
    expand->add_flag("--strict", expand_cmd.strict, "fail on the first bad passage");

    // train
    TrainCommand train_cmd;
    auto* trn = app.add_subcommand("train", "train the toy term-weighting model");
    add_vocab(trn);
    add_stopwords(trn);
    trn->add_option("--collection", train_cmd.collection)->required();
    trn->add_option("--training", train_cmd.training, "query<TAB>positive pid<TAB>negative pids (comma separated)")
        ->required();
    trn->add_option("--model", train_cmd.model, "output model file")->required();
    optional_path(trn, "--log", train_cmd.log, "per-step loss JSON");
    trn->add_option("--steps", train_cmd.config.steps)->capture_default_str();
    trn->add_option("--lr", train_cmd.config.learning_rate)->capture_default_str();
    trn->add_option("--momentum", train_cmd.config.momentum)->capture_default_str();
    trn->add_option("--batch-size", train_cmd.config.batch_size)->capture_default_str();
    trn->add_option("--hard-negatives", train_cmd.config.hard_negatives)->capture_default_str();
    trn->add_option("--dim", train_cmd.config.init.dim)->capture_default_str();
    trn->add_option("--window", train_cmd.config.init.window)->capture_default_str();
    std::uint64_t seed = 42;
    trn->add_option("--seed", seed)->capture_default_str();

    // weights
    WeightsCommand weights_cmd;
    auto* weights = app.add_subcommand("weights", "emit per-token weights for a collection");
    add_vocab(weights);
    weights->add_option("--collection", weights_cmd.collection)->required();
    weights->add_option("--model", weights_cmd.model)->required();
    weights->add_option("--output", weights_cmd.output, "weight JSONL")->required();
    optional_path(weights, "--index-dir", weights_cmd.index_dir, "also build the impact index here");

    // impact-index
    ImpactIndexCommand impact_cmd;
    auto* impact = app.add_subcommand("impact-index", "build the impact index from weight JSONL");
    add_vocab(impact);
    impact->add_option("--weights", impact_cmd.weights)->required();
    impact->add_option("--index-dir", impact_cmd.index_dir)->required();
    impact->add_option("--model-id", impact_cmd.model_id)->capture_default_str();

    // rerank
    RerankCommand rerank_cmd;
    auto* rr = app.add_subcommand("rerank", "re-rank first-stage candidates with impact weights");
    add_vocab(rr);
    add_stopwords(rr);
    rr->add_option("--index-dir", rerank_cmd.index_dir)->required();
    rr->add_option("--queries", rerank_cmd.queries, "qid<TAB>text")->required();
    optional_path(rr, "--first-stage", rerank_cmd.first_stage, "TREC run (default: in-process BM25)");
    rr->add_option("--output", rerank_cmd.output, "TREC run")->required();
    rr->add_option("--cutoff", rerank_cmd.cutoff, "candidates re-ranked per query; 0 passes through")
        ->capture_default_str();
    rr->add_option("--depth", rerank_cmd.depth, "BM25 depth")->capture_default_str();
    rr->add_option("--run-tag", rerank_cmd.tag)->capture_default_str();
    rr->add_flag("--strict", rerank_cmd.strict, "fail when a candidate is missing from the impact index");

    // eval
    EvalCommand eval_cmd;
    auto* eval = app.add_subcommand("eval", "MRR@k, nDCG@k and MAP of a run");
    eval->add_option("--run", eval_cmd.run)->required();
    eval->add_option("--qrels", eval_cmd.qrels)->required();
    eval->add_option("--k", eval_cmd.k)->capture_default_str();
    eval->add_option("--map-threshold", eval_cmd.map_threshold)->capture_default_str();
    optional_path(eval, "--output", eval_cmd.output, "metric JSON");

    // bench
    BenchCommand bench_cmd;
    auto* bench = app.add_subcommand("bench", "per-stage latency and cut-off sweep");
    add_vocab(bench);
    add_stopwords(bench);
    bench->add_option("--index-dir", bench_cmd.index_dir)->required();
    bench->add_option("--queries", bench_cmd.queries)->required();
    optional_path(bench, "--qrels", bench_cmd.qrels, "adds MRR@10 to the sweep");
    optional_path(bench, "--csv", bench_cmd.csv, "sweep CSV");
    optional_path(bench, "--report", bench_cmd.report, "latency breakdown JSON");
    bench->add_option("--sample", bench_cmd.config.sample)->capture_default_str();
    bench->add_option("--depth", bench_cmd.config.depth)->capture_default_str();
    bench->add_option("--cutoff", bench_cmd.config.cutoff)->capture_default_str();
    bench->add_option("--seed", bench_cmd.config.seed)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : exit_input;
    }

    try {
        if (*index) {
            index_cmd.vocab = vocab;
            std::cout << cmd_index(index_cmd).dump(2) << '\n';
        } else if (*expand) {
            expand_cmd.vocab = vocab;
            expand_cmd.stopwords = stopwords;
            std::cout << cmd_expand(expand_cmd).to_json().dump(2) << '\n';
        } else if (*trn) {
            train_cmd.vocab = vocab;
            train_cmd.stopwords = stopwords;
            train_cmd.config.seed = seed;
            train_cmd.config.init.seed = seed;
            auto log = cmd_train(train_cmd);
            std::cout << "steps " << log.loss.size() << " first loss " << log.loss.front() << " last loss "
                      << log.loss.back() << '\n';
        } else if (*weights) {
            weights_cmd.vocab = vocab;
            std::cout << "passages " << cmd_weights(weights_cmd) << '\n';
        } else if (*impact) {
            impact_cmd.vocab = vocab;
            std::cout << cmd_impact_index(impact_cmd).dump(2) << '\n';
        } else if (*rr) {
            rerank_cmd.vocab = vocab;
            rerank_cmd.stopwords = stopwords;
            auto skipped = cmd_rerank(rerank_cmd);
            if (skipped > 0) {
                std::cerr << skipped << " candidates skipped\n";
            }
        } else if (*eval) {
            std::cout << cmd_eval(eval_cmd).dump(2) << '\n';
        } else if (*bench) {
            bench_cmd.vocab = vocab;
            bench_cmd.stopwords = stopwords;
            auto report = cmd_bench(bench_cmd);
            std::cout << report.breakdown.to_json().dump(2) << '\n';
            if (!bench_cmd.csv) {
                std::cout << report.sweep_csv();
            }
        }
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.is_input_error() ? exit_input : exit_internal;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return exit_internal;
    }
    return EXIT_SUCCESS;
}
