#include <sstream>

#include <gtest/gtest.h>

#include "impact/error.hpp"
#include "impact/eval_metrics.hpp"
#include "impact/trec_io.hpp"
#include "test_util.hpp"

using namespace impact;

TEST(Tsv, ReadsFixtureAndKeepsTabsInText)
{
    auto records = read_tsv_records(test::data_dir / "collection.tsv");
    ASSERT_EQ(records.size(), 6U);
    EXPECT_EQ(records[2].id, "p2");
    EXPECT_EQ(records[2].text, "Paris is the capital city of France, on the river Seine.");

    test::TempDir dir;
    test::write_text(dir / "c.tsv", "a\tone\ttwo\r\n\nb\t\n");
    records = read_tsv_records(dir / "c.tsv");
    ASSERT_EQ(records.size(), 2U);
    EXPECT_EQ(records[0].text, "one\ttwo");
    EXPECT_EQ(records[1].text, "");
}

TEST(Tsv, Errors)
{
    test::TempDir dir;
    test::write_text(dir / "notab.tsv", "a\tok\nbroken line\n");
    test::write_text(dir / "noid.tsv", "\ttext\n");
    for (const char* name : {"notab.tsv", "noid.tsv"}) {
        try {
            read_tsv_records(dir / name);
            ADD_FAILURE() << name;
        } catch (const error& e) {
            EXPECT_EQ(e.code(), errc::parse);
        }
    }
    try {
        read_tsv_records(dir / "absent.tsv");
        ADD_FAILURE();
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::io);
        EXPECT_TRUE(e.is_input_error());
    }
}

TEST(Tsv, WriteReadRoundTrip)
{
    test::TempDir dir;
    {
        std::ofstream out(dir / "r.tsv");
        write_tsv_record(out, "x1", "hello world");
        write_tsv_record(out, "x2", "caf\xc3\xa9");
    }
    auto records = read_tsv_records(dir / "r.tsv");
    ASSERT_EQ(records.size(), 2U);
    EXPECT_EQ(records[1].text, "caf\xc3\xa9");
}

TEST(Run, WriteParseRoundTrip)
{
    std::ostringstream out;
    write_run_line(out, "q1", "p9", 1, 12.5, "tag");
    write_run_line(out, "q1", "p3", 2, -0.25, "tag");
    write_run_line(out, "q2", "p1", 1, 0.0, "tag");
    EXPECT_EQ(out.str().substr(0, 28), "q1 Q0 p9 1 12.500000 tag\nq1 ");
    std::istringstream in(out.str() + "\n");
    auto run = parse_run(in);
    ASSERT_EQ(run.size(), 2U);
    ASSERT_EQ(run["q1"].size(), 2U);
    EXPECT_EQ(run["q1"][1].pid, "p3");
    EXPECT_EQ(run["q1"][1].rank, 2);
    EXPECT_DOUBLE_EQ(run["q1"][1].score, -0.25);
}

TEST(Run, Errors)
{
    std::istringstream short_line("q1 Q0 p1 1\n");
    EXPECT_THROW(parse_run(short_line), error);
    std::istringstream bad_rank("q1 Q0 p1 x 1.0 t\n");
    EXPECT_THROW(parse_run(bad_rank), error);
}

TEST(Run, RankedPidsOrder)
{
    std::vector<RunEntry> entries{{"c", 2, 1.0}, {"a", 1, 0.5}, {"b", 2, 3.0}, {"d", 2, 3.0}};
    EXPECT_EQ(ranked_pids(entries), (std::vector<std::string>{"a", "b", "d", "c"}));
}

TEST(Qrels, ParseGrades)
{
    std::istringstream in("q1 0 p1 2\nq1 0 p2 0\n\nq2 0 p5 -1\n");
    auto qrels = parse_qrels(in);
    EXPECT_EQ(qrels["q1"]["p1"], 2);
    EXPECT_EQ(qrels["q1"]["p2"], 0);
    EXPECT_EQ(qrels["q2"]["p5"], 0);
    std::istringstream bad("q1 0 p1\n");
    EXPECT_THROW(parse_qrels(bad), error);
    EXPECT_EQ(read_qrels(test::data_dir / "qrels.tsv").size(), 3U);
}

TEST(Training, ParsesTriples)
{
    auto triples = read_training_tsv(test::data_dir / "train.tsv");
    ASSERT_EQ(triples.size(), 5U);
    EXPECT_EQ(triples[0].query, "what was the manhattan project");
    EXPECT_EQ(triples[0].positive, "p0");
    EXPECT_EQ(triples[0].negatives, (std::vector<std::string>{"p2", "p3"}));

    test::TempDir dir;
    test::write_text(dir / "t.tsv", "q\tp1\t\nq2\tp2\ta,,b\n");
    triples = read_training_tsv(dir / "t.tsv");
    EXPECT_TRUE(triples[0].negatives.empty());
    EXPECT_EQ(triples[1].negatives, (std::vector<std::string>{"a", "b"}));
    test::write_text(dir / "bad.tsv", "q\tp1\n");
    EXPECT_THROW(read_training_tsv(dir / "bad.tsv"), error);
    test::write_text(dir / "nopos.tsv", "q\t\tn\n");
    EXPECT_THROW(read_training_tsv(dir / "nopos.tsv"), error);
}
