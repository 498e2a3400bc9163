#include <map>
#include <random>

#include <gtest/gtest.h>

#include "impact/query_encoder.hpp"
#include "test_util.hpp"

using namespace impact;

TEST(QueryEncoder, CountsEachToken)
{
    auto vocab = Vocabulary::from_entries({"[UNK]", "apple", "account", "the"});
    StopwordSet none({}, vocab.size());
    auto q = encode_query("apple account", vocab, none);
    EXPECT_EQ(q.terms, (std::vector<TermCount>{{1, 1}, {2, 1}}));
    EXPECT_EQ(q.count(1), 1U);
    EXPECT_EQ(q.count(3), 0U);
    EXPECT_EQ(q.total(), 2U);
}

TEST(QueryEncoder, EmptyQuery)
{
    auto vocab = impact::test::fixture_vocab();
    EXPECT_TRUE(encode_query("", vocab, default_stopwords(vocab)).empty());
    EXPECT_TRUE(encode_query("the of and", vocab, default_stopwords(vocab)).empty());
}

TEST(QueryEncoder, StopwordsRemovedBeforeCounting)
{
    auto vocab = Vocabulary::from_entries({"[UNK]", "the", "apple"});
    StopwordSet stop({1}, vocab.size());
    auto q = encode_query("the the apple", vocab, stop);
    EXPECT_EQ(q.terms, (std::vector<TermCount>{{2, 1}}));
}

TEST(QueryEncoder, UnknownTokensDropped)
{
    auto vocab = Vocabulary::from_entries({"[UNK]", "apple"});
    StopwordSet none({}, vocab.size());
    auto q = encode_query("apple zebra apple", vocab, none);
    EXPECT_EQ(q.terms, (std::vector<TermCount>{{1, 2}}));
}

TEST(QueryEncoder, MatchesHistogramOracle)
{
    std::mt19937_64 rng(3);
    const std::size_t v = 40;
    std::vector<token_id> stop_ids{0, 5, 6, 17};
    StopwordSet stop(stop_ids, v);
    std::uniform_int_distribution<token_id> tok(0, v - 1);
    for (int trial = 0; trial < 300; ++trial) {
        TokenSequence seq;
        for (int i = static_cast<int>(rng() % 30); i > 0; --i) {
            seq.ids.push_back(tok(rng));
        }
        std::map<token_id, std::uint32_t> hist;
        for (auto id : seq.ids) {
            if (id != 1 && std::find(stop_ids.begin(), stop_ids.end(), id) == stop_ids.end()) {
                ++hist[id];
            }
        }
        auto q = encode_tokens(seq, token_id{1}, stop);
        ASSERT_EQ(q.terms.size(), hist.size());
        std::size_t i = 0;
        for (auto [id, c] : hist) {
            EXPECT_EQ(q.terms[i].token, id);
            EXPECT_EQ(q.terms[i].count, c);
            ++i;
        }
    }
}

TEST(QueryEncoder, MergeAddsCounts)
{
    SparseTermVector a{{{1, 2}, {4, 1}}};
    SparseTermVector b{{{0, 1}, {4, 3}, {9, 1}}};
    EXPECT_EQ(merge(a, b).terms, (std::vector<TermCount>{{0, 1}, {1, 2}, {4, 4}, {9, 1}}));
    EXPECT_EQ(merge(a, {}), a);
    EXPECT_EQ(merge({}, b), b);
}
