#include "impact/eval_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "impact/error.hpp"

namespace impact {

namespace {

int grade_of(const std::map<std::string, int>& judged, const std::string& pid)
{
    auto it = judged.find(pid);
    return it == judged.end() ? 0 : it->second;
}

bool has_relevant(const std::map<std::string, int>& judged, int threshold)
{
    return std::any_of(judged.begin(), judged.end(), [&](const auto& kv) { return kv.second >= threshold; });
}

template <typename PerQuery>
MetricReport evaluate(std::string name, const Run& run, const Qrels& qrels, int threshold, PerQuery&& per_query)
{
    MetricReport report;
    report.metric = std::move(name);
    double sum = 0.0;
    for (const auto& [qid, judged] : qrels) {
        if (!has_relevant(judged, threshold)) {
            continue;
        }
        double value = 0.0;
        if (auto it = run.find(qid); it != run.end()) {
            auto ranking = ranked_pids(it->second);
            value = per_query(std::span<const std::string>(ranking), judged);
        }
        report.per_query.emplace(qid, value);
        sum += value;
    }
    if (!report.per_query.empty()) {
        report.mean = sum / static_cast<double>(report.per_query.size());
    }
    return report;
}

}  // namespace

nlohmann::json MetricReport::to_json() const
{
    return {{"metric", metric}, {"mean", mean}, {"queries", per_query.size()}, {"per_query", per_query}};
}

std::vector<std::string> ranked_pids(std::span<const RunEntry> entries)
{
    std::vector<const RunEntry*> order;
    order.reserve(entries.size());
    for (const auto& e : entries) {
        order.push_back(&e);
    }
    std::sort(order.begin(), order.end(), [](const RunEntry* a, const RunEntry* b) {
        if (a->rank != b->rank) {
            return a->rank < b->rank;
        }
        if (a->score != b->score) {
            return a->score > b->score;
        }
        return a->pid < b->pid;
    });
    std::vector<std::string> out;
    out.reserve(order.size());
    for (const auto* e : order) {
        out.push_back(e->pid);
    }
    return out;
}

double reciprocal_rank(std::span<const std::string> ranking, const std::map<std::string, int>& judged, std::size_t k,
                       int threshold)
{
    std::size_t depth = std::min(k, ranking.size());
    for (std::size_t i = 0; i < depth; ++i) {
        if (grade_of(judged, ranking[i]) >= threshold) {
            return 1.0 / static_cast<double>(i + 1);
        }
    }
    return 0.0;
}

double ndcg(std::span<const std::string> ranking, const std::map<std::string, int>& judged, std::size_t k)
{
    auto gain = [](int grade) { return std::exp2(static_cast<double>(grade)) - 1.0; };
    auto discount = [](std::size_t i) { return std::log2(static_cast<double>(i) + 2.0); };

    std::vector<int> ideal;
    for (const auto& [pid, grade] : judged) {
        if (grade > 0) {
            ideal.push_back(grade);
        }
    }
    if (ideal.empty()) {
        return 0.0;
    }
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    double idcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i) {
        idcg += gain(ideal[i]) / discount(i);
    }
    double dcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, ranking.size()); ++i) {
        dcg += gain(grade_of(judged, ranking[i])) / discount(i);
    }
    return dcg / idcg;
}

double average_precision(std::span<const std::string> ranking, const std::map<std::string, int>& judged,
                         int threshold)
{
    std::size_t relevant = 0;
    for (const auto& [pid, grade] : judged) {
        relevant += grade >= threshold ? 1 : 0;
    }
    if (relevant == 0) {
        return 0.0;
    }
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        if (grade_of(judged, ranking[i]) >= threshold) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(relevant);
}

MetricReport mrr_at_k(const Run& run, const Qrels& qrels, std::size_t k)
{
    return evaluate("mrr@" + std::to_string(k), run, qrels, 1,
                    [k](std::span<const std::string> ranking, const auto& judged) {
                        return reciprocal_rank(ranking, judged, k);
                    });
}

MetricReport ndcg_at_k(const Run& run, const Qrels& qrels, std::size_t k)
{
    return evaluate("ndcg@" + std::to_string(k), run, qrels, 1,
                    [k](std::span<const std::string> ranking, const auto& judged) { return ndcg(ranking, judged, k); });
}

MetricReport mean_average_precision(const Run& run, const Qrels& qrels, int threshold)
{
    if (threshold < 1) {
        throw error(errc::invalid_argument, "MAP relevance threshold must be at least 1");
    }
    return evaluate("map", run, qrels, threshold, [threshold](std::span<const std::string> ranking, const auto& judged) {
        return average_precision(ranking, judged, threshold);
    });
}

double paired_ttest(const MetricReport& a, const MetricReport& b)
{
    std::vector<double> diffs;
    for (const auto& [qid, va] : a.per_query) {
        if (auto it = b.per_query.find(qid); it != b.per_query.end()) {
            diffs.push_back(va - it->second);
        }
    }
    const auto n = static_cast<double>(diffs.size());
    if (diffs.size() < 2) {
        return 1.0;
    }
    double mean = std::accumulate(diffs.begin(), diffs.end(), 0.0) / n;
    double ss = 0.0;
    for (double d : diffs) {
        ss += (d - mean) * (d - mean);
    }
    if (ss == 0.0) {
        return mean == 0.0 ? 1.0 : 0.0;
    }
    double t = mean / std::sqrt(ss / (n - 1.0) / n);
    if (!std::isfinite(t)) {
        return std::isnan(t) ? 1.0 : 0.0;
    }
    boost::math::students_t dist(n - 1.0);
    double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
    return std::clamp(p, 0.0, 1.0);
}

double bonferroni(double p, std::size_t comparisons)
{
    return std::min(1.0, p * static_cast<double>(std::max<std::size_t>(1, comparisons)));
}

}  // namespace impact
