#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "impact/error.hpp"
#include "impact/impact_index.hpp"
#include "test_util.hpp"

using namespace impact;

namespace {

errc code_of(auto&& fn)
{
    try {
        fn();
    } catch (const error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected impact::error";
    return errc::io;
}

ImpactIndex random_index(std::mt19937_64& rng, std::size_t vocab_size, std::uint64_t checksum)
{
    ImpactIndexBuilder builder({checksum, "model-" + std::to_string(rng() % 100), static_cast<std::int64_t>(rng() % 1000),
                                vocab_size});
    std::uniform_real_distribution<float> weight(0.0F, 5.0F);
    auto n = rng() % 40;
    for (std::size_t p = 0; p < n; ++p) {
        std::vector<TokenWeight> tokens(rng() % 30);
        for (auto& [t, w] : tokens) {
            t = static_cast<token_id>(rng() % vocab_size);
            w = weight(rng);
        }
        builder.add("p" + std::to_string(p) + "_" + std::to_string(rng() % 1000), tokens);
    }
    return std::move(builder).finish();
}

}  // namespace

TEST(ImpactIndex, DuplicateTokenKeepsMaximum)
{
    std::vector<TokenWeight> w{{7, 0.2F}, {7, 0.9F}, {7, 0.5F}};
    auto index = build_impact_index(std::vector<WeightRecord>{{"p", w}}, {});
    ASSERT_EQ(index.size(), 1U);
    EXPECT_EQ(index.entry(0).postings, (std::vector<ImpactPosting>{{7, 0.9F}}));
    EXPECT_EQ(lookup(index, 0, 7), 0.9F);
}

TEST(ImpactIndex, EmptyWeightListGivesEmptyEntry)
{
    auto index = build_impact_index(std::vector<WeightRecord>{{"p", {}}}, {});
    EXPECT_TRUE(index.entry(0).postings.empty());
    EXPECT_FALSE(lookup(index, 0, 3).has_value());
}

TEST(ImpactIndex, InvalidWeightsRejected)
{
    ImpactIndexBuilder builder({0, "", 0, 10});
    std::vector<TokenWeight> negative{{1, -0.1F}};
    std::vector<TokenWeight> nan{{1, std::numeric_limits<float>::quiet_NaN()}};
    std::vector<TokenWeight> inf{{1, std::numeric_limits<float>::infinity()}};
    std::vector<TokenWeight> out_of_vocab{{10, 1.0F}};
    EXPECT_EQ(code_of([&] { builder.add("a", negative); }), errc::negative_weight);
    EXPECT_EQ(code_of([&] { builder.add("a", nan); }), errc::negative_weight);
    EXPECT_EQ(code_of([&] { builder.add("a", inf); }), errc::invalid_argument);
    EXPECT_EQ(code_of([&] { builder.add("a", out_of_vocab); }), errc::invalid_argument);
    builder.add("a", {});
    EXPECT_EQ(code_of([&] { builder.add("a", {}); }), errc::duplicate_passage);
}

TEST(ImpactIndex, LookupReadsWhatWasWritten)
{
    auto index = build_impact_index(std::vector<WeightRecord>{{"x", {{7, 0.9F}}}, {"y", {{2, 1.5F}, {9, 0.0F}}}}, {});
    EXPECT_EQ(lookup(index, 0, 7), 0.9F);
    EXPECT_FALSE(lookup(index, 0, 2).has_value());
    EXPECT_EQ(lookup(index, 1, 9), 0.0F);
    EXPECT_EQ(index.id_of("y"), 1U);
    EXPECT_EQ(index.name_of(0), "x");
    EXPECT_FALSE(index.id_of("z").has_value());
    EXPECT_EQ(code_of([&] { lookup(index, 5, 1); }), errc::unknown_passage);
}

TEST(ImpactIndex, PostingsSortedUniqueNonNegative)
{
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<WeightRecord> records;
        for (int p = 0; p < 5; ++p) {
            WeightRecord r{"p" + std::to_string(p), {}};
            for (int i = static_cast<int>(rng() % 20); i > 0; --i) {
                r.tokens.emplace_back(static_cast<token_id>(rng() % 12), static_cast<float>(rng() % 100) / 10.0F);
            }
            records.push_back(std::move(r));
        }
        auto index = build_impact_index(records, {});
        for (std::size_t p = 0; p < records.size(); ++p) {
            std::set<token_id> unique;
            for (auto [t, w] : records[p].tokens) {
                unique.insert(t);
            }
            const auto& postings = index.entry(p).postings;
            ASSERT_EQ(postings.size(), unique.size());
            for (std::size_t i = 0; i < postings.size(); ++i) {
                EXPECT_GE(postings[i].weight, 0.0F);
                if (i > 0) {
                    EXPECT_LT(postings[i - 1].token, postings[i].token);
                }
                float best = -1.0F;
                for (auto [t, w] : records[p].tokens) {
                    if (t == postings[i].token) {
                        best = std::max(best, w);
                    }
                }
                EXPECT_EQ(postings[i].weight, best);
            }
        }
    }
}

TEST(ImpactSerialization, RandomRoundTripIsBitExact)
{
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 100; ++trial) {
        auto index = random_index(rng, 50, 1234);
        auto bytes = serialize(index);
        auto back = deserialize_impact_index(bytes, 1234ULL);
        EXPECT_EQ(back, index);
        EXPECT_EQ(serialize(back), bytes);
    }
}

TEST(ImpactSerialization, CorruptionDetected)
{
    std::mt19937_64 rng(31);
    auto index = random_index(rng, 20, 5);
    while (index.size() == 0) {
        index = random_index(rng, 20, 5);
    }
    auto bytes = serialize(index);
    EXPECT_EQ(code_of([&] { deserialize_impact_index(bytes, 6ULL); }), errc::vocab_mismatch);
    for (std::size_t cut : {std::size_t{0}, std::size_t{10}, bytes.size() / 2, bytes.size() - 1}) {
        EXPECT_EQ(code_of([&] { deserialize_impact_index(std::string_view(bytes).substr(0, cut), std::nullopt); }),
                  errc::corrupt_index)
            << "cut at " << cut;
    }
    auto bad_version = bytes;
    bad_version[4] = 9;
    EXPECT_EQ(code_of([&] { deserialize_impact_index(bad_version, std::nullopt); }), errc::version_mismatch);
}

TEST(ImpactSerialization, FileRoundTrip)
{
    impact::test::TempDir dir;
    std::mt19937_64 rng(37);
    auto index = random_index(rng, 30, 9);
    save(index, dir / "impact.idx");
    EXPECT_EQ(load_impact_index(dir / "impact.idx", 9ULL), index);
}

TEST(WeightJsonl, RoundTripPreservesFloats)
{
    WeightRecord in{"p\"1", {{3, 0.1F}, {0, 1e-7F}, {3, 2.5F}}};
    std::stringstream buf;
    write_weight_record(buf, in);
    write_weight_record(buf, {"empty", {}});
    std::size_t line = 0;
    auto out = read_weight_record(buf, line);
    ASSERT_TRUE(out.has_value());
    EXPECT_EQ(out->pid, in.pid);
    EXPECT_EQ(out->tokens, in.tokens);
    auto empty = read_weight_record(buf, line);
    ASSERT_TRUE(empty.has_value());
    EXPECT_TRUE(empty->tokens.empty());
    EXPECT_FALSE(read_weight_record(buf, line).has_value());
    EXPECT_EQ(line, 2U);
}

TEST(WeightJsonl, MalformedLinesRejected)
{
    for (const char* text : {"{\"pid\":\"a\"}", "not json", "{\"pid\":\"a\",\"tokens\":[[1]]}",
                             "{\"pid\":\"a\",\"tokens\":[[-1,0.5]]}", "{\"pid\":1,\"tokens\":[]}"}) {
        std::stringstream buf(text);
        std::size_t line = 0;
        EXPECT_EQ(code_of([&] { read_weight_record(buf, line); }), errc::parse) << text;
    }
}
