#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "impact/trec_io.hpp"

namespace impact {

struct MetricReport {
    std::string metric;
    std::map<std::string, double> per_query;
    double mean = 0.0;

    nlohmann::json to_json() const;
};

/// Run entries of one query sorted by rank (ties: higher score, then pid).
std::vector<std::string> ranked_pids(std::span<const RunEntry> entries);

// Per-query building blocks. `judged` maps pid -> grade.
double reciprocal_rank(std::span<const std::string> ranking, const std::map<std::string, int>& judged,
                       std::size_t k, int threshold = 1);
/// Gains 2^grade - 1 discounted by log2(rank + 1), over the ideal ordering of
/// all judged grades; 0 when no grade is positive.
double ndcg(std::span<const std::string> ranking, const std::map<std::string, int>& judged, std::size_t k);
double average_precision(std::span<const std::string> ranking, const std::map<std::string, int>& judged,
                         int threshold);

// Means run over qrels queries with at least one judgment at or above the
// relevance threshold; a query missing from the run contributes 0.
MetricReport mrr_at_k(const Run& run, const Qrels& qrels, std::size_t k = 10);
MetricReport ndcg_at_k(const Run& run, const Qrels& qrels, std::size_t k = 10);
/// threshold 1 suits binary MS MARCO qrels, 2 the graded TREC DL convention.
MetricReport mean_average_precision(const Run& run, const Qrels& qrels, int threshold = 1);

/// Two-tailed paired t-test over queries present in both reports. Identical
/// samples give 1; a constant nonzero difference gives 0.
double paired_ttest(const MetricReport& a, const MetricReport& b);
/// p * comparisons, capped at 1.
double bonferroni(double p, std::size_t comparisons);

}  // namespace impact
