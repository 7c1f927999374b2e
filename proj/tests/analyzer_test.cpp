#include <algorithm>
#include <sstream>

#include <gtest/gtest.h>

#include "convsim/analyzer.hpp"
#include "convsim/error.hpp"
#include "convsim/rng.hpp"
#include "test_support.hpp"

namespace convsim {
namespace {

using testing::TempDir;

TEST(SessionRatios, HalfSilentNoOverlap) {
  const std::vector<Segment> segs = {{"A", 0.0, 5.0}};
  const auto r = session_ratios(segs, 10.0);
  EXPECT_DOUBLE_EQ(r.silence_ratio, 0.5);
  EXPECT_DOUBLE_EQ(r.overlap_ratio, 0.0);
}

TEST(SessionRatios, TwoWayOverlap) {
  const std::vector<Segment> segs = {{"A", 0.0, 4.0}, {"B", 3.0, 4.0}};
  const auto r = session_ratios(segs, 10.0);
  EXPECT_NEAR(r.union_speech, 7.0, 1e-12);
  EXPECT_NEAR(r.overlap_time, 1.0, 1e-12);
  EXPECT_NEAR(r.silence_ratio, 0.3, 1e-12);
  EXPECT_NEAR(r.overlap_ratio, 1.0 / 7.0, 1e-12);
}

TEST(SessionRatios, ThreeWayOverlapCountsExtraSpeakers) {
  const std::vector<Segment> segs = {{"A", 0.0, 3.0}, {"B", 1.0, 2.0}, {"C", 2.5, 0.5}};
  const auto r = session_ratios(segs, 3.0);
  EXPECT_NEAR(r.union_speech, 3.0, 1e-12);
  EXPECT_NEAR(r.overlap_time, 2.5, 1e-12);
  EXPECT_NEAR(r.silence_ratio, 0.0, 1e-12);
  EXPECT_NEAR(r.overlap_ratio, 2.5 / 3.0, 1e-12);
}

TEST(SessionRatios, NestedTripleOverlap) {
  // Concurrency 2 on [1, 1.5) and [2, 2.5), 3 on [1.5, 2): 0.5 + 1.0 + 0.5.
  const std::vector<Segment> segs = {{"A", 0.0, 2.0}, {"B", 1.0, 2.0}, {"C", 1.5, 1.0}};
  const auto r = session_ratios(segs, 3.0);
  EXPECT_NEAR(r.union_speech, 3.0, 1e-12);
  EXPECT_NEAR(r.overlap_time, 2.0, 1e-12);
}

TEST(SessionRatios, EmptyAndOutOfRange) {
  const auto r = session_ratios({}, 4.0);
  EXPECT_EQ(r.silence_ratio, 1.0);
  EXPECT_EQ(r.overlap_ratio, 0.0);
  const std::vector<Segment> late = {{"A", 3.0, 2.0}};
  EXPECT_THROW(session_ratios(late, 4.0), Error);
  const std::vector<Segment> rounded = {{"A", 3.0, 1.0005}};
  EXPECT_NO_THROW(session_ratios(rounded, 4.0));
  EXPECT_THROW(session_ratios({}, 0.0), Error);
}

// Brute-force oracle on a millisecond grid.
TEST(SessionRatios, MatchesGridCount) {
  SeededRng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const int length_ms = 1000 + static_cast<int>(rng.uniform_index(5000));
    std::vector<int> active(static_cast<std::size_t>(length_ms), 0);
    std::vector<Segment> segs;
    const int n = static_cast<int>(rng.uniform_index(12));
    for (int i = 0; i < n; ++i) {
      const int on = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(length_ms)));
      const int dur = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(length_ms - on + 1)));
      for (int t = on; t < on + dur; ++t) ++active[static_cast<std::size_t>(t)];
      segs.push_back({"s" + std::to_string(i % 3), on / 1000.0, dur / 1000.0});
    }
    int covered = 0;
    int extra = 0;
    for (int a : active) {
      covered += a > 0 ? 1 : 0;
      extra += std::max(0, a - 1);
    }
    const auto r = session_ratios(segs, length_ms / 1000.0);
    ASSERT_NEAR(r.union_speech, covered / 1000.0, 1e-9);
    ASSERT_NEAR(r.overlap_time, extra / 1000.0, 1e-9);
  }
}

TEST(Summaries, MeanAndPopulationVariance) {
  const std::vector<double> xs = {0.1, 0.2};
  const auto s = summarize_ratios(xs);
  EXPECT_NEAR(s.mean, 0.15, 1e-12);
  ASSERT_TRUE(s.variance.has_value());
  EXPECT_NEAR(*s.variance, 0.0025, 1e-12);
  ASSERT_TRUE(s.fit.has_value());
  EXPECT_NEAR(beta_mean(*s.fit), 0.15, 1e-12);
}

TEST(Summaries, ConstantRatiosHaveNoFit) {
  const std::vector<double> xs = {0.2, 0.2, 0.2};
  const auto s = summarize_ratios(xs);
  ASSERT_TRUE(s.variance.has_value());
  EXPECT_EQ(*s.variance, 0.0);
  EXPECT_FALSE(s.fit.has_value());
  EXPECT_FALSE(s.notice.empty());
}

TEST(Summaries, SingleSessionHasNoVariance) {
  const std::vector<double> xs = {0.3};
  const auto s = summarize_ratios(xs);
  EXPECT_DOUBLE_EQ(s.mean, 0.3);
  EXPECT_FALSE(s.variance.has_value());
  EXPECT_FALSE(s.fit.has_value());
}

TEST(Histogram, Bins) {
  const std::vector<double> xs = {0.0, 0.05, 0.1, 0.55, 0.999, 1.0};
  const auto h = histogram(xs, 10);
  ASSERT_EQ(h.size(), 10u);
  EXPECT_EQ(h[0], 2u);
  EXPECT_EQ(h[1], 1u);
  EXPECT_EQ(h[5], 1u);
  EXPECT_EQ(h[9], 2u);
  EXPECT_THROW(histogram(xs, 0), Error);
}

TEST(Histogram, CountsAreTotalAndOrderFree) {
  SeededRng rng(4);
  std::vector<double> xs(500);
  for (auto& x : xs) x = rng.uniform();
  const auto h = histogram(xs, 7);
  std::size_t total = 0;
  for (auto c : h) total += c;
  EXPECT_EQ(total, xs.size());
  std::vector<double> shuffled = xs;
  std::reverse(shuffled.begin(), shuffled.end());
  std::rotate(shuffled.begin(), shuffled.begin() + 123, shuffled.end());
  EXPECT_EQ(histogram(shuffled, 7), h);
}

TEST(ParseRttm, RejectsWrongFieldCount) {
  std::istringstream in(
      "SPEAKER s 1 0.000 1.000 <NA> <NA> A <NA> <NA>\n"
      "SPEAKER s 1 1.000 1.000 <NA> <NA> B <NA>\n");
  try {
    parse_rttm(in, "x.rttm");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("x.rttm:2"), std::string::npos) << e.what();
  }
}

TEST(ParseRttm, EmptyAndCommentsAndOtherTypes) {
  std::istringstream empty("");
  EXPECT_TRUE(parse_rttm(empty, "e").empty());
  std::istringstream mixed(
      ";; comment line\n"
      "SPKR-INFO s 1 <NA> <NA> <NA> unknown A <NA> <NA>\n"
      "SPEAKER s 1 0.500 1.250 <NA> <NA> A <NA> <NA>\n");
  const auto segs = parse_rttm(mixed, "m");
  ASSERT_EQ(segs.size(), 1u);
  EXPECT_EQ(segs[0].segment, (Segment{"A", 0.5, 1.25}));
  std::istringstream bad("SPEAKER s 1 x 1.0 <NA> <NA> A <NA> <NA>\n");
  EXPECT_THROW(parse_rttm(bad, "b"), Error);
}

TEST(StatsCsv, RoundTripAndSchemaCheck) {
  TempDir dir;
  const std::vector<SessionStatsRow> rows = {{"a", 600.0, 510.0, 30.0, 0.15, 30.0 / 510.0},
                                             {"b", 601.5, 480.0, 40.0, 0.2, 1.0 / 12.0}};
  write_stats_csv(rows, dir / "s.csv");
  const auto back = read_stats_csv(dir / "s.csv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].session_id, "b");
  EXPECT_NEAR(back[1].overlap_ratio, 1.0 / 12.0, 1e-10);
  EXPECT_NEAR(back[0].session_length, 600.0, 1e-9);

  testing::write_file(dir / "bad.csv", "id,sil,ovl\nx,0.1,0.2\n");
  try {
    read_stats_csv(dir / "bad.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("header"), std::string::npos);
  }
}

TEST(SummaryCsv, Layout) {
  TempDir dir;
  const auto stats = aggregate_stats({{"a", 10, 9, 1, 0.1, 0.1}, {"b", 10, 8, 2, 0.2, 0.25}});
  write_summary_csv(stats, dir / "sum.csv");
  const std::string text = testing::read_file(dir / "sum.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), "ratio,sessions,mean,variance,beta_alpha,beta_beta");
  EXPECT_NE(text.find("\nsilence,2,0.15,0.0025,"), std::string::npos) << text;
}

TEST(Compare, IdenticalDatasetsHaveZeroDeltas) {
  const auto stats = aggregate_stats({{"a", 10, 9, 1, 0.1, 0.1}, {"b", 10, 8, 2, 0.2, 0.25}});
  const auto rows = compare_stats(stats, stats, "real", "sim");
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].type, "observed sil. ratio");
  EXPECT_EQ(rows[1].type, "real-world sil. ratio");
  EXPECT_EQ(rows[2].type, "observed ovl. ratio");
  EXPECT_EQ(rows[3].type, "real-world ovl. ratio");
  for (const auto& r : rows) {
    EXPECT_EQ(r.delta_mean, 0.0);
    ASSERT_TRUE(r.delta_variance.has_value());
    EXPECT_EQ(*r.delta_variance, 0.0);
  }
  const std::string table = format_comparison_table(rows);
  EXPECT_NE(table.find("real-world ovl. ratio"), std::string::npos);
}

TEST(Compare, DeltasAreSimulatedMinusReal) {
  const auto real = aggregate_stats({{"a", 10, 9, 1, 0.1, 0.1}, {"b", 10, 8, 2, 0.3, 0.2}});
  const auto sim = aggregate_stats({{"c", 10, 9, 1, 0.2, 0.1}, {"d", 10, 8, 2, 0.2, 0.1}});
  const auto rows = compare_stats(real, sim, "real", "sim");
  EXPECT_NEAR(rows[0].delta_mean, 0.0, 1e-12);
  EXPECT_NEAR(*rows[0].delta_variance, -0.01, 1e-12);
  EXPECT_NEAR(rows[2].delta_mean, -0.05, 1e-12);
}

TEST(HistogramCsv, OverlaysTwoDatasets) {
  TempDir dir;
  const std::vector<double> a = {0.1, 0.6};
  const std::vector<double> b = {0.65};
  write_histogram_csv(dir / "h.csv", 2, "real", a, "sim", b);
  EXPECT_EQ(testing::read_file(dir / "h.csv"), "bin_lo,bin_hi,real,sim\n0,0.5,1,0\n0.5,1,1,1\n");
}

}  // namespace
}  // namespace convsim
