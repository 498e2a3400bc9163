#include "impact/expansion.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <numeric>
#include <thread>

#include "impact/error.hpp"

namespace impact {

TokenSequence ExpandedPassage::full() const
{
    TokenSequence out = original;
    out.ids.insert(out.ids.end(), appended.begin(), appended.end());
    return out;
}

ExpandedPassage expand_passage(const TokenSequence& passage, const LikelihoodDistribution& likelihood,
                               const ExpansionConfig& config)
{
    const std::size_t vocab = config.stopwords.vocab_size();
    if (likelihood.size() != vocab) {
        throw error(errc::invalid_argument, "likelihood distribution has length " + std::to_string(likelihood.size())
                                                + ", vocabulary has " + std::to_string(vocab));
    }
    if (config.m > vocab) {
        throw error(errc::invalid_argument, "expansion threshold m exceeds the vocabulary size");
    }
    const auto& scores = likelihood.scores;
    if (!std::all_of(scores.begin(), scores.end(), [](float x) { return std::isfinite(x); })) {
        throw error(errc::invalid_argument, "likelihood distribution has non-finite values");
    }

    ExpandedPassage out{passage, {}};
    if (config.m == 0) {
        return out;
    }

    std::vector<token_id> order(vocab);
    std::iota(order.begin(), order.end(), token_id{0});
    auto higher = [&](token_id a, token_id b) { return scores[a] > scores[b] || (scores[a] == scores[b] && a < b); };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(config.m), order.end(), higher);

    std::vector<bool> present(vocab, false);
    for (auto id : passage.ids) {
        if (id < vocab) {
            present[id] = true;
        }
    }
    for (std::size_t i = 0; i < config.m; ++i) {
        token_id t = order[i];
        if (!present[t] && !config.stopwords.contains(t)) {
            out.appended.push_back(t);
        }
    }
    return out;
}

nlohmann::json ExpansionStats::to_json() const
{
    return {
        {"passages", passages},
        {"mean_appended", mean_appended},
        {"p50_appended", p50_appended},
        {"wall_seconds", wall_seconds},
        {"passages_per_second", passages_per_second},
        {"total_appended", total_appended},
        {"failures", failures},
    };
}

ExpansionOutput expand_collection(std::span<const NamedPassage> collection, const LikelihoodProvider& provider,
                                  const ExpansionConfig& config, const ExpansionRunOptions& options)
{
    auto start = std::chrono::steady_clock::now();
    ExpansionOutput out;
    out.passages.resize(collection.size());
    std::vector<std::string> errors(collection.size());

    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto work = [&] {
        while (!abort.load(std::memory_order_relaxed)) {
            auto i = next.fetch_add(1);
            if (i >= collection.size()) {
                return;
            }
            const auto& passage = collection[i];
            try {
                auto dist = provider.distribution(passage.id, passage.tokens);
                out.passages[i] = expand_passage(passage.tokens, dist, config);
            } catch (const std::exception& e) {
                if (options.strict) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) {
                        first_error = std::current_exception();
                    }
                    abort = true;
                    return;
                }
                errors[i] = e.what();
                out.passages[i] = ExpandedPassage{passage.tokens, {}};
            }
        }
    };
    std::size_t workers = std::clamp<std::size_t>(options.threads, 1, std::max<std::size_t>(1, collection.size()));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back(work);
        }
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }

    std::vector<std::size_t> counts;
    counts.reserve(collection.size());
    for (std::size_t i = 0; i < collection.size(); ++i) {
        if (!errors[i].empty()) {
            out.failures.push_back({collection[i].id, std::move(errors[i])});
        }
        counts.push_back(out.passages[i].appended.size());
        out.stats.total_appended += counts.back();
    }
    auto& stats = out.stats;
    stats.passages = collection.size();
    stats.failures = out.failures.size();
    if (!counts.empty()) {
        stats.mean_appended = static_cast<double>(stats.total_appended) / static_cast<double>(counts.size());
        std::sort(counts.begin(), counts.end());
        auto mid = counts.size() / 2;
        stats.p50_appended = counts.size() % 2 == 1 ? static_cast<double>(counts[mid])
                                                    : (static_cast<double>(counts[mid - 1]) + counts[mid]) / 2.0;
    }
    stats.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    stats.passages_per_second = stats.wall_seconds > 0.0 ? static_cast<double>(stats.passages) / stats.wall_seconds : 0.0;
    return out;
}

std::string expanded_text(std::string_view original_text, const ExpandedPassage& passage, const Vocabulary& vocab,
                          std::string_view separator)
{
    std::string out(original_text);
    if (passage.appended.empty()) {
        return out;
    }
    if (!separator.empty()) {
        out.push_back(' ');
        out.append(separator);
    }
    for (auto id : passage.appended) {
        out.push_back(' ');
        out.append(surface_form(vocab, id));
    }
    return out;
}

}  // namespace impact
