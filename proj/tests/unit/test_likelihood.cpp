#include <cmath>
#include <cstring>
#include <random>
#include <set>
#include <thread>

#include <gtest/gtest.h>

#include "impact/error.hpp"
#include "impact/likelihood.hpp"
#include "test_util.hpp"

using namespace impact;

namespace {

StopwordSet no_stopwords(std::size_t v)
{
    return StopwordSet({}, v);
}

}  // namespace

TEST(Cooccurrence, SeenBeatsUnseen)
{
    // a=1, b=2, c=3
    std::vector<TokenSequence> corpus{TokenSequence{{1, 2}}};
    CooccurrenceProvider provider(corpus, 4, no_stopwords(4));
    auto dist = provider.distribution("q", TokenSequence{{1}});
    ASSERT_EQ(dist.size(), 4U);
    EXPECT_GT(dist.scores[2], dist.scores[3]);
    EXPECT_FLOAT_EQ(dist.scores[2], std::log(2.0F));
    EXPECT_EQ(dist.scores[3], 0.0F);
    EXPECT_EQ(provider.cooccurrence(1, 2), 1U);
    EXPECT_EQ(provider.cooccurrence(1, 1), 1U);
    EXPECT_EQ(provider.cooccurrence(3, 2), 0U);
}

TEST(Cooccurrence, EmptyCorpusIsUniform)
{
    CooccurrenceProvider provider({}, 6, no_stopwords(6));
    auto dist = provider.distribution("p", TokenSequence{{1, 2, 5}});
    EXPECT_EQ(dist.scores, std::vector<float>(6, dist.scores[0]));
}

TEST(Cooccurrence, MatchesCountingOracle)
{
    std::mt19937_64 rng(61);
    const std::size_t v = 15;
    std::vector<token_id> stop_ids{0, 4};
    StopwordSet stop(stop_ids, v);
    std::vector<TokenSequence> corpus(40);
    for (auto& p : corpus) {
        for (int i = static_cast<int>(rng() % 8); i > 0; --i) {
            p.ids.push_back(static_cast<token_id>(rng() % v));
        }
    }
    CooccurrenceProvider provider(corpus, v, stop);
    auto contains = [](const TokenSequence& p, token_id t) {
        return std::find(p.ids.begin(), p.ids.end(), t) != p.ids.end();
    };
    for (int trial = 0; trial < 20; ++trial) {
        TokenSequence passage;
        for (int i = static_cast<int>(1 + rng() % 6); i > 0; --i) {
            passage.ids.push_back(static_cast<token_id>(rng() % v));
        }
        std::set<token_id> unique(passage.ids.begin(), passage.ids.end());
        auto dist = provider.distribution("", passage);
        for (token_id t = 0; t < v; ++t) {
            if (stop.contains(t)) {
                EXPECT_EQ(dist.scores[t], 0.0F);
                continue;
            }
            double sum = 0.0;
            for (auto u : unique) {
                if (stop.contains(u)) {
                    continue;
                }
                for (const auto& p : corpus) {
                    sum += contains(p, u) && contains(p, t) ? 1.0 : 0.0;
                }
            }
            EXPECT_FLOAT_EQ(dist.scores[t], static_cast<float>(std::log(1.0 + sum)));
        }
    }
}

TEST(Cooccurrence, RejectsOutOfVocabularyCorpus)
{
    std::vector<TokenSequence> corpus{TokenSequence{{9}}};
    EXPECT_THROW(CooccurrenceProvider(corpus, 4, no_stopwords(4)), error);
}

TEST(LikelihoodFile, RoundTrip)
{
    impact::test::TempDir dir;
    std::vector<LikelihoodRecord> records{
        {"p0", {{0.5F, -1.0F, 3.25F}}},
        {"passage-1", {{0.0F, 1e-30F, -7.0F}}},
        {"", {{1.0F, 2.0F, 3.0F}}},
    };
    write_likelihood_file(dir / "l.lkh", 3, records);
    FileLikelihoodProvider provider(dir / "l.lkh");
    EXPECT_EQ(provider.vocab_size(), 3U);
    EXPECT_EQ(provider.size(), 3U);
    for (const auto& r : records) {
        EXPECT_TRUE(provider.contains(r.pid));
        EXPECT_EQ(likelihood_distribution(r.pid, {}, provider), r.distribution);
    }
    try {
        provider.distribution("nope", {});
        ADD_FAILURE();
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::missing_record);
    }
}

TEST(LikelihoodFile, ByteLayout)
{
    impact::test::TempDir dir;
    std::vector<LikelihoodRecord> records{{"ab", {{1.0F, 2.0F}}}};
    write_likelihood_file(dir / "l.lkh", 2, records);
    auto bytes = impact::test::read_text(dir / "l.lkh");
    ASSERT_EQ(bytes.size(), 4U + 4 + 8 + 4 + 2 + 2 * 4);
    EXPECT_EQ(bytes.substr(0, 4), "LKH1");
    std::uint32_t v = 0;
    std::uint64_t count = 0;
    std::uint32_t len = 0;
    float second = 0;
    std::memcpy(&v, bytes.data() + 4, 4);
    std::memcpy(&count, bytes.data() + 8, 8);
    std::memcpy(&len, bytes.data() + 16, 4);
    std::memcpy(&second, bytes.data() + 26, 4);
    EXPECT_EQ(v, 2U);
    EXPECT_EQ(count, 1U);
    EXPECT_EQ(len, 2U);
    EXPECT_EQ(bytes.substr(20, 2), "ab");
    EXPECT_EQ(second, 2.0F);
}

TEST(LikelihoodFile, CorruptFilesRejected)
{
    impact::test::TempDir dir;
    std::vector<LikelihoodRecord> records{{"a", {{1.0F, 2.0F}}}, {"b", {{3.0F, 4.0F}}}};
    write_likelihood_file(dir / "l.lkh", 2, records);
    auto bytes = impact::test::read_text(dir / "l.lkh");
    for (std::size_t cut : {std::size_t{3}, std::size_t{17}, bytes.size() - 1}) {
        impact::test::write_text(dir / "t.lkh", bytes.substr(0, cut));
        EXPECT_THROW(FileLikelihoodProvider(dir / "t.lkh"), error) << cut;
    }
    impact::test::write_text(dir / "x.lkh", "XXXX" + bytes.substr(4));
    EXPECT_THROW(FileLikelihoodProvider(dir / "x.lkh"), error);
    EXPECT_THROW(FileLikelihoodProvider(dir / "missing.lkh"), error);

    std::vector<LikelihoodRecord> wrong{{"a", {{1.0F}}}};
    EXPECT_THROW(write_likelihood_file(dir / "w.lkh", 2, wrong), error);
}

TEST(LikelihoodFile, ConcurrentReads)
{
    impact::test::TempDir dir;
    std::vector<LikelihoodRecord> records;
    for (int i = 0; i < 64; ++i) {
        records.push_back({std::to_string(i), {std::vector<float>(50, static_cast<float>(i))}});
    }
    write_likelihood_file(dir / "l.lkh", 50, records);
    FileLikelihoodProvider provider(dir / "l.lkh");
    std::atomic<int> mismatches{0};
    {
        std::vector<std::jthread> pool;
        for (int t = 0; t < 4; ++t) {
            pool.emplace_back([&, t] {
                for (int round = 0; round < 50; ++round) {
                    int i = (round * 7 + t) % 64;
                    if (provider.distribution(std::to_string(i), {}).scores != records[i].distribution.scores) {
                        ++mismatches;
                    }
                }
            });
        }
    }
    EXPECT_EQ(mismatches.load(), 0);
}
