#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "impact/eval_metrics.hpp"
#include "oracles.hpp"

using namespace impact;

namespace {

std::vector<std::string> pids(std::initializer_list<const char*> xs)
{
    return {xs.begin(), xs.end()};
}

MetricReport report_of(const std::vector<double>& values)
{
    MetricReport r;
    for (std::size_t i = 0; i < values.size(); ++i) {
        r.per_query["q" + std::to_string(i)] = values[i];
    }
    return r;
}

}  // namespace

TEST(ReciprocalRank, Basics)
{
    std::map<std::string, int> judged{{"c", 1}, {"z", 0}};
    EXPECT_DOUBLE_EQ(reciprocal_rank(pids({"a", "b", "c"}), judged, 10), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(reciprocal_rank(pids({"a", "b", "c"}), judged, 2), 0.0);
    EXPECT_DOUBLE_EQ(reciprocal_rank(pids({"z", "y"}), judged, 10), 0.0);
    EXPECT_DOUBLE_EQ(reciprocal_rank({}, judged, 10), 0.0);
}

TEST(Ndcg, IdealOrderingIsExactlyOne)
{
    std::map<std::string, int> judged{{"a", 3}, {"b", 2}, {"c", 2}, {"d", 1}, {"e", 0}};
    EXPECT_EQ(ndcg(pids({"a", "b", "c", "d", "e"}), judged, 10), 1.0);
    EXPECT_EQ(ndcg(pids({"a", "c", "b", "d"}), judged, 10), 1.0);
    EXPECT_EQ(ndcg(pids({"x"}), {{"x", 0}}, 10), 0.0);
}

TEST(Ndcg, FiveDocumentHandCase)
{
    // grades along the ranking: 0, 3, 1, 0, 2
    std::map<std::string, int> judged{{"b", 3}, {"c", 1}, {"e", 2}};
    double dcg = 7.0 / std::log2(3.0) + 1.0 / std::log2(4.0) + 3.0 / std::log2(6.0);
    double idcg = 7.0 + 3.0 / std::log2(3.0) + 1.0 / std::log2(4.0);
    EXPECT_NEAR(ndcg(pids({"a", "b", "c", "d", "e"}), judged, 10), dcg / idcg, 1e-15);
}

TEST(AveragePrecision, Basics)
{
    EXPECT_DOUBLE_EQ(average_precision(pids({"a", "b"}), {{"a", 1}}, 1), 1.0);
    // second relevant never retrieved
    EXPECT_DOUBLE_EQ(average_precision(pids({"x", "a"}), {{"a", 1}, {"b", 1}}, 1), 0.25);
    // graded threshold
    EXPECT_DOUBLE_EQ(average_precision(pids({"a", "b"}), {{"a", 1}, {"b", 2}}, 2), 0.5);
    EXPECT_THROW(mean_average_precision({}, {}, 0), std::exception);
}

TEST(Metrics, MeansOverJudgedQueries)
{
    impact::Run run;
    run["q1"] = {{"a", 1, 3.0}, {"b", 2, 2.0}};
    run["q2"] = {{"c", 1, 1.0}};
    run["q9"] = {{"a", 1, 1.0}};
    Qrels qrels;
    qrels["q1"] = {{"b", 1}};
    qrels["q2"] = {{"d", 1}};
    qrels["q3"] = {{"e", 1}};   // missing from the run: counts as 0
    qrels["q4"] = {{"f", 0}};   // no relevant judgment: excluded
    auto mrr = mrr_at_k(run, qrels);
    EXPECT_EQ(mrr.per_query.size(), 3U);
    EXPECT_DOUBLE_EQ(mrr.mean, 0.5 / 3.0);
    EXPECT_EQ(mrr.metric, "mrr@10");
    EXPECT_EQ(ndcg_at_k(run, qrels).per_query.count("q4"), 0U);
}

TEST(Metrics, RankColumnDefinesOrder)
{
    impact::Run run;
    run["q"] = {{"a", 2, 9.0}, {"b", 1, 1.0}};
    Qrels qrels;
    qrels["q"] = {{"b", 1}};
    EXPECT_DOUBLE_EQ(mrr_at_k(run, qrels).mean, 1.0);
}

TEST(Metrics, MatchBruteForceOracles)
{
    std::mt19937_64 rng(83);
    for (int trial = 0; trial < 100; ++trial) {
        impact::Run run;
        Qrels qrels;
        for (int q = 0; q < 5; ++q) {
            std::string qid = "q" + std::to_string(q);
            std::vector<std::string> docs;
            for (int d = 0; d < 25; ++d) {
                docs.push_back("d" + std::to_string(d));
            }
            std::shuffle(docs.begin(), docs.end(), rng);
            std::size_t depth = rng() % 20;
            for (std::size_t r = 0; r < depth; ++r) {
                run[qid].push_back({docs[r], static_cast<int>(r + 1), 100.0 - r});
            }
            for (int j = static_cast<int>(rng() % 6); j > 0; --j) {
                qrels[qid]["d" + std::to_string(rng() % 25)] = static_cast<int>(rng() % 4);
            }
        }
        int threshold = 1 + static_cast<int>(rng() % 2);
        auto mrr = mrr_at_k(run, qrels);
        auto nd = ndcg_at_k(run, qrels);
        auto map = mean_average_precision(run, qrels, threshold);
        for (const auto& [qid, judged] : qrels) {
            std::vector<std::string> ranking;
            for (const auto& e : run[qid]) {
                ranking.push_back(e.pid);
            }
            if (mrr.per_query.count(qid) != 0) {
                EXPECT_NEAR(mrr.per_query.at(qid), oracle::reciprocal_rank(ranking, judged, 10), 1e-12);
                EXPECT_NEAR(nd.per_query.at(qid), oracle::ndcg(ranking, judged, 10), 1e-12);
            }
            if (map.per_query.count(qid) != 0) {
                EXPECT_NEAR(map.per_query.at(qid), oracle::average_precision(ranking, judged, threshold), 1e-12);
            }
        }
    }
}

TEST(PairedTTest, DegenerateCases)
{
    auto a = report_of({0.1, 0.5, 0.9});
    EXPECT_EQ(paired_ttest(a, a), 1.0);
    EXPECT_EQ(paired_ttest(report_of({0.5, 0.75, 1.0}), report_of({0.25, 0.5, 0.75})), 0.0);
    EXPECT_EQ(paired_ttest(report_of({1.0}), report_of({0.0})), 1.0);
}

TEST(PairedTTest, MatchesQuadratureOracle)
{
    std::mt19937_64 rng(89);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
        std::size_t n = 3 + rng() % 40;
        std::vector<double> a(n), b(n);
        double shift = 0.3 * normal(rng);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = normal(rng);
            b[i] = a[i] + shift + 0.5 * normal(rng);
        }
        EXPECT_NEAR(paired_ttest(report_of(a), report_of(b)), oracle::paired_t_pvalue(a, b), 1e-8);
    }
}

TEST(Bonferroni, ScalesAndCaps)
{
    EXPECT_DOUBLE_EQ(bonferroni(0.01, 3), 0.03);
    EXPECT_DOUBLE_EQ(bonferroni(0.4, 3), 1.0);
    EXPECT_DOUBLE_EQ(bonferroni(0.2, 0), 0.2);
}
