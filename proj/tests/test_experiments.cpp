#include <cstdlib>

#include <gtest/gtest.h>

#include "specperturb/experiments.hpp"

using namespace specperturb;

TEST(Summarize, SampleStd) {
  const SweepRow r = summarize(2.0, {1.0, 2.0, 3.0});
  EXPECT_EQ(r.mean, 2.0);
  EXPECT_DOUBLE_EQ(r.std, 1.0);
  EXPECT_EQ(r.trials, 3);
  EXPECT_EQ(summarize(1.0, {4.0}).std, 0.0);
}

TEST(CountInversions, Direction) {
  std::vector<SweepRow> rows;
  for (double v : {3.0, 2.0, 2.5, 1.0}) rows.push_back(summarize(0.0, {v}));
  EXPECT_EQ(count_inversions(rows, false), 1);
  EXPECT_EQ(count_inversions(rows, true), 2);
}

TEST(ParallelFor, CoversAllAndRethrows) {
  std::vector<int> hit(100, 0);
  parallel_for(100, [&](std::size_t i) { hit[i] += 1; });
  for (int h : hit) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(10, [](std::size_t i) {
                 if (i == 3) throw InvalidArgument("boom");
               }),
               InvalidArgument);
}

TEST(MeasurementSweep, ThreadCountDoesNotChangeResults) {
  MeasurementSweepConfig cfg;
  cfg.cloud.N = 40;
  cfg.cloud.n = 60;
  cfg.cloud.s = 4;
  cfg.cloud.k = 2;
  cfg.cloud.noise = 1.0;
  cfg.m_values = {4, 16};
  cfg.trials = 4;
  cfg.base_seed = 9;
  setenv("SPECPERTURB_THREADS", "1", 1);
  const auto a = measurement_sweep(cfg);
  setenv("SPECPERTURB_THREADS", "3", 1);
  const auto b = measurement_sweep(cfg);
  unsetenv("SPECPERTURB_THREADS");
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].values, b[i].values);
  EXPECT_EQ(a[0].parameter, 4.0);
  EXPECT_EQ(a[0].trials, 4);
}

TEST(MeasurementSweep, TrialSeedsAreBasePlusIndex) {
  MeasurementSweepConfig cfg;
  cfg.cloud.N = 30;
  cfg.cloud.n = 40;
  cfg.cloud.noise = 1.0;
  cfg.m_values = {8};
  cfg.trials = 3;
  cfg.base_seed = 5;
  const auto all = measurement_sweep(cfg);
  cfg.trials = 1;
  cfg.base_seed = 7;
  const auto last = measurement_sweep(cfg);
  EXPECT_EQ(all[0].values[2], last[0].values[0]);
}

TEST(MeasurementSweep, EmbedModeErrorShrinksWithM) {
  MeasurementSweepConfig cfg;
  cfg.cloud.N = 30;
  cfg.cloud.n = 20;
  cfg.cloud.s = 3;
  cfg.cloud.k = 3;
  cfg.m_values = {5, 400};
  cfg.trials = 2;
  cfg.embed_mode = true;
  const auto rows = measurement_sweep(cfg);
  EXPECT_GT(rows[0].mean, rows[1].mean);
  for (const auto& r : rows)
    for (double v : r.values) EXPECT_GE(v, 0.0);
}

TEST(CompletionSweeps, SmallRankAndFraction) {
  CompletionSweepConfig cfg;
  cfg.data.N = 90;
  cfg.data.n = 40;
  cfg.data.inflate_scale = 0.3;
  cfg.ranks = {3, 5};
  cfg.fractions = {0.3, 0.8};
  cfg.trials = 2;
  cfg.p = 0.5;
  const auto rr = rank_sweep(cfg);
  ASSERT_EQ(rr.size(), 2u);
  EXPECT_EQ(rr[1].parameter, 5.0);
  const auto fr = fraction_sweep(cfg);
  ASSERT_EQ(fr.size(), 2u);
  for (const auto& r : fr)
    for (double v : r.values) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 2.0 / 3.0 + 1e-12);
    }
  cfg.ranks = {2};
  EXPECT_THROW(rank_sweep(cfg), InvalidArgument);
}
