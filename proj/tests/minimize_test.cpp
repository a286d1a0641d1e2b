#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "fracperim/minimize.hpp"
#include "fracperim/parallel.hpp"
#include "support.hpp"

using namespace fracperim;

namespace {

GridPartition random_interior(GridPartition p, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dist(1, p.chambers());
  for (std::size_t c = 0; c < p.size(); ++c)
    if (!p.on_boundary_ring(c)) p.set_label(c, dist(rng));
  return p;
}

SurfaceTensionMatrix wetting_sigma() { return SurfaceTensionMatrix{{0, 3, 1}, {3, 0, 1}, {1, 1, 0}}; }

}  // namespace

TEST(MinimizeConfig, ParsesStrategies) {
  EXPECT_EQ(MinimizeConfig::parse_strategy("greedy"), MinimizeConfig::Strategy::greedy);
  EXPECT_EQ(MinimizeConfig::parse_strategy("annealed-cell-flip"), MinimizeConfig::Strategy::annealed);
  EXPECT_THROW(MinimizeConfig::parse_strategy("tabu"), std::invalid_argument);
  EXPECT_EQ(MinimizeConfig::to_string(MinimizeConfig::Strategy::annealed), "annealed");
}

TEST(MinimizeConfig, Validation) {
  MinimizeConfig c;
  EXPECT_NO_THROW(c.validate());
  c.max_sweeps = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.strategy = MinimizeConfig::Strategy::annealed;
  c.decay = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.decay = 0.5;
  c.initial_temperature = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(FlipDelta, MatchesFullRecompute) {
  std::mt19937_64 rng(11);
  const GridSpec spec{2, 8, 1.0};
  KernelConfig cfg;
  cfg.s = 0.35;
  const GridPartition base = make_halfspace_pair(spec, 3, 1, 2, 2);
  const InteractionEngine engine(spec, cfg, base.exterior());
  for (int trial = 0; trial < 20; ++trial) {
    const auto sigma = fracperim::testing::random_matrix(3, rng);
    GridPartition p = random_interior(base, rng);
    const std::size_t cell = rng() % p.size();
    const Label to = static_cast<Label>(1 + rng() % 3);
    const double before = engine.energy(p, sigma).total;
    const double delta = flip_delta(engine, p, cell, to, sigma);
    p.set_label(cell, to);
    const double after = engine.energy(p, sigma).total;
    EXPECT_NEAR(delta, after - before, 1e-11 * std::abs(before));
  }
}

TEST(FlipDelta, ReverseFlipCancels) {
  std::mt19937_64 rng(12);
  const GridSpec spec{2, 6, 1.0};
  const GridPartition base = make_halfspace_pair(spec, 3, 2, 3, 1);
  const InteractionEngine engine(spec, KernelConfig{}, base.exterior());
  const auto sigma = fracperim::testing::random_matrix(3, rng);
  GridPartition p = random_interior(base, rng);
  for (std::size_t cell = 0; cell < p.size(); ++cell) {
    const Label from = p.label(cell);
    const Label to = from % 3 + 1;
    const double forward = flip_delta(engine, p, cell, to, sigma);
    GridPartition q = p;
    q.set_label(cell, to);
    EXPECT_EQ(forward + flip_delta(engine, q, cell, from, sigma), 0.0);
  }
}

TEST(FlipDelta, ConvenienceOverloadAgrees) {
  const GridSpec spec{2, 5, 1.0};
  KernelConfig cfg;
  cfg.s = 0.4;
  const GridPartition p = make_halfspace_pair(spec, 2, 1, 2, 2);
  const InteractionEngine engine(spec, cfg, p.exterior());
  const auto sigma = SurfaceTensionMatrix::uniform(2, 1.0);
  EXPECT_EQ(flip_delta(engine, p, 12, 1, sigma), flip_delta(p, 12, 1, sigma, cfg));
  EXPECT_EQ(flip_delta(engine, p, 12, p.label(12), sigma), 0.0);
  EXPECT_THROW(flip_delta(engine, p, 12, 3, sigma), std::out_of_range);
}

TEST(ThirdPhaseVolume, CountsLabelsOutsideExterior) {
  const GridSpec spec{2, 4, 2.0};
  GridPartition p = make_halfspace_pair(spec, 3, 1, 2, 2);
  EXPECT_EQ(third_phase_volume(p), 0.0);
  p.set_label(5, 3);
  p.set_label(6, 3);
  EXPECT_DOUBLE_EQ(third_phase_volume(p), 2 * 0.25);
}

TEST(LocalSearch, GreedyEnergyNeverIncreases) {
  std::mt19937_64 rng(13);
  const GridSpec spec{2, 10, 1.0};
  const GridPartition base = make_halfspace_pair(spec, 3, 1, 2, 2);
  const InteractionEngine engine(spec, KernelConfig{}, base.exterior());
  const auto sigma = fracperim::testing::random_matrix(3, rng);
  const GridPartition start = random_interior(base, rng);
  const SearchResult r = local_search(engine, start, sigma, MinimizeConfig{});
  double previous = engine.energy(start, sigma).total;
  ASSERT_FALSE(r.log.empty());
  for (const auto& rec : r.log) {
    EXPECT_LE(rec.energy, previous * (1 + 1e-12));
    previous = rec.energy;
  }
  EXPECT_EQ(r.log.back().accepted, 0U);
  EXPECT_DOUBLE_EQ(r.report.total, r.log.back().energy);
}

TEST(LocalSearch, BoundaryRingStaysFrozen) {
  std::mt19937_64 rng(14);
  const GridSpec spec{2, 8, 1.0};
  const GridPartition base = make_halfspace_pair(spec, 3, 1, 2, 2);
  const InteractionEngine engine(spec, KernelConfig{}, base.exterior());
  MinimizeConfig cfg;
  cfg.strategy = MinimizeConfig::Strategy::annealed;
  cfg.max_sweeps = 20;
  const GridPartition start = random_interior(base, rng);
  const SearchResult r = local_search(engine, start, wetting_sigma(), cfg);
  for (std::size_t c = 0; c < start.size(); ++c)
    if (start.on_boundary_ring(c)) EXPECT_EQ(r.partition.label(c), start.label(c));
}

TEST(LocalSearch, GreedyResultIsLocalMinimum) {
  std::mt19937_64 rng(15);
  const GridSpec spec{2, 8, 1.0};
  const GridPartition base = make_halfspace_pair(spec, 3, 1, 2, 2);
  const InteractionEngine engine(spec, KernelConfig{}, base.exterior());
  const auto sigma = fracperim::testing::random_matrix(3, rng);
  const SearchResult r = local_search(engine, random_interior(base, rng), sigma, MinimizeConfig{});
  const double scale = std::abs(r.report.total);
  for (std::size_t c = 0; c < r.partition.size(); ++c) {
    if (r.partition.on_boundary_ring(c)) continue;
    for (Label to = 1; to <= 3; ++to) EXPECT_GE(flip_delta(engine, r.partition, c, to, sigma), -1e-12 * scale);
  }
}

TEST(LocalSearch, HalfspaceIsStableUnderRelaxedTensions) {
  std::mt19937_64 rng(16);
  const GridSpec spec{2, 12, 1.0};
  KernelConfig cfg;
  cfg.s = 0.45;
  const GridPartition flat = make_halfspace_pair(spec, 4, 1, 2, 2);
  const InteractionEngine engine(spec, cfg, flat.exterior());
  for (int trial = 0; trial < 5; ++trial) {
    const auto sigma = fracperim::testing::random_metric(4, rng);
    const double total = engine.energy(flat, sigma).total;
    for (std::size_t c = 0; c < flat.size(); ++c) {
      if (flat.on_boundary_ring(c)) continue;
      for (Label to = 1; to <= 4; ++to) EXPECT_GE(flip_delta(engine, flat, c, to, sigma), -1e-10 * total);
    }
  }
}

TEST(LocalSearch, DeterministicAcrossThreadCounts) {
  const GridSpec spec{2, 12, 1.0};
  KernelConfig kc;
  kc.s = 0.45;
  const GridPartition flat = make_halfspace_pair(spec, 3, 1, 2, 2);
  const InteractionEngine engine(spec, kc, flat.exterior());
  MinimizeConfig cfg;
  cfg.strategy = MinimizeConfig::Strategy::annealed;
  cfg.max_sweeps = 30;
  cfg.seed = 7;
  const int saved = thread_limit();
  set_thread_limit(1);
  const SearchResult a = local_search(engine, flat, wetting_sigma(), cfg);
  set_thread_limit(4);
  const SearchResult b = local_search(engine, flat, wetting_sigma(), cfg);
  set_thread_limit(saved);
  EXPECT_EQ(a.partition, b.partition);
  EXPECT_EQ(a.report.total, b.report.total);
  ASSERT_EQ(a.log.size(), b.log.size());
  for (std::size_t k = 0; k < a.log.size(); ++k) EXPECT_EQ(a.log[k].energy, b.log[k].energy);
}

TEST(LocalSearch, SeedChangesAnnealedTrajectory) {
  const GridSpec spec{2, 10, 1.0};
  const GridPartition flat = make_halfspace_pair(spec, 3, 1, 2, 2);
  const InteractionEngine engine(spec, KernelConfig{}, flat.exterior());
  MinimizeConfig cfg;
  cfg.strategy = MinimizeConfig::Strategy::annealed;
  cfg.max_sweeps = 5;
  cfg.initial_temperature = 1.0;
  cfg.decay = 0.99;
  const SearchResult a = local_search(engine, flat, wetting_sigma(), cfg);
  cfg.seed = 1;
  const SearchResult b = local_search(engine, flat, wetting_sigma(), cfg);
  EXPECT_NE(a.log.front().energy, b.log.front().energy);
}

TEST(GammaBar, RestartZeroStartsFromHalfspace) {
  const GridSpec spec{2, 8, 1.0};
  KernelConfig kc;
  kc.s = 0.4;
  const GridPartition flat = make_halfspace_pair(spec, 3, 1, 2, 2);
  const InteractionEngine engine(spec, kc, flat.exterior());
  const auto sigma = relax(wetting_sigma());
  const GammaBarEstimate g = gamma_bar_estimate(engine, 3, 1, 2, sigma, MinimizeConfig{}, 3);
  ASSERT_EQ(g.per_restart.size(), 3U);
  EXPECT_LE(g.per_restart[0], g.halfspace * (1 + 1e-12));
  EXPECT_LE(g.best, g.per_restart[0]);
  EXPECT_DOUBLE_EQ(g.gap, g.best - g.halfspace);
  EXPECT_NEAR(g.halfspace, 0.2 * 2.0 * engine.perimeter(flat, 1), 1e-12);
}

TEST(GammaBar, MoreRestartsNeverWorsen) {
  const GridSpec spec{2, 8, 1.0};
  const GridPartition flat = make_halfspace_pair(spec, 3, 1, 2, 2);
  const InteractionEngine engine(spec, KernelConfig{}, flat.exterior());
  std::mt19937_64 rng(17);
  const auto sigma = fracperim::testing::random_metric(3, rng);
  const auto two = gamma_bar_estimate(engine, 3, 1, 2, sigma, MinimizeConfig{}, 2);
  const auto four = gamma_bar_estimate(engine, 3, 1, 2, sigma, MinimizeConfig{}, 4);
  EXPECT_EQ(two.per_restart[0], four.per_restart[0]);
  EXPECT_EQ(two.per_restart[1], four.per_restart[1]);
  EXPECT_LE(four.best, two.best);
}

TEST(GammaBar, RejectsBadInput) {
  const GridSpec spec{2, 6, 1.0};
  const GridPartition flat = make_halfspace_pair(spec, 3, 1, 2, 2);
  const InteractionEngine engine(spec, KernelConfig{}, flat.exterior());
  EXPECT_THROW(gamma_bar_estimate(engine, 3, 1, 2, wetting_sigma(), MinimizeConfig{}, 1), std::invalid_argument);
  EXPECT_THROW(gamma_bar_estimate(engine, 3, 1, 3, relax(wetting_sigma()), MinimizeConfig{}, 1), std::invalid_argument);
  EXPECT_THROW(gamma_bar_estimate(engine, 3, 1, 2, relax(wetting_sigma()), MinimizeConfig{}, 0), std::invalid_argument);
}

TEST(Wetting, RejectsTriangleSatisfyingPair) {
  const double s[] = {0.45};
  const int n_cells[] = {8};
  const auto sigma = SurfaceTensionMatrix::uniform(3, 1.0);
  EXPECT_THROW(wetting_experiment(sigma, 1, 2, 2, 1.0, s, n_cells, KernelConfig{}, MinimizeConfig{}), std::invalid_argument);
  EXPECT_THROW(wetting_experiment(wetting_sigma(), 1, 1, 2, 1.0, s, n_cells, KernelConfig{}, MinimizeConfig{}),
               std::invalid_argument);
}

TEST(Wetting, NucleatesIntermediatePhase) {
  const double s[] = {0.45};
  const int n_cells[] = {16};
  MinimizeConfig cfg;
  cfg.strategy = MinimizeConfig::Strategy::annealed;
  const WettingResult r = wetting_experiment(wetting_sigma(), 1, 2, 2, 1.0, s, n_cells, KernelConfig{}, cfg);
  ASSERT_EQ(r.rows.size(), 1U);
  const WettingRow& row = r.rows[0];
  EXPECT_GT(row.third_phase_volume, 0.0);
  EXPECT_LT(row.achieved, row.pure_interface);
  EXPECT_GT(row.achieved, row.relaxed_target);
  EXPECT_TRUE(row.success);
  EXPECT_NEAR(row.relaxed_target / row.pure_interface, 2.0 / 3.0, 1e-14);
}

TEST(Wetting, CsvLayout) {
  std::ostringstream out;
  const WettingRow row{0.5, 16, 0.125, 5.0, 6.0, 4.0, true};
  write_wetting_csv(out, std::span<const WettingRow>(&row, 1));
  EXPECT_EQ(out.str(), "s,N,third_phase_volume,achieved,pure_interface,relaxed_target,success\n0.5,16,0.125,5,6,4,1\n");
}

TEST(SweepLog, CsvLayout) {
  std::ostringstream out;
  const SweepRecord rec{3, 7, 1.5, 0.0};
  write_sweep_log(out, std::span<const SweepRecord>(&rec, 1));
  EXPECT_EQ(out.str(), "sweep,accepted,energy,third_phase_volume\n3,7,1.5,0\n");
}

TEST(ExhaustiveSearch, MatchesDirectEnumeration) {
  const GridSpec spec{2, 3, 1.0};
  KernelConfig kc;
  kc.s = 0.3;
  const GridPartition flat = make_halfspace_pair(spec, 2, 1, 2, 1);
  const InteractionEngine engine(spec, kc, flat.exterior());
  const SurfaceTensionMatrix sigma = SurfaceTensionMatrix::uniform(2, 1.5);
  double best = INFINITY;
  for (unsigned code = 0; code < 512; ++code) {
    GridPartition p = flat;
    for (std::size_t c = 0; c < 9; ++c) p.set_label(c, (code >> c) & 1U ? 2 : 1);
    best = std::min(best, engine.energy(p, sigma).total);
  }
  const ExhaustiveResult r = exhaustive_search(engine, 2, sigma);
  EXPECT_NEAR(r.best, best, 1e-12 * best);
  EXPECT_GE(r.runner_up, r.best);
  EXPECT_EQ(r.labels, flat.labels());
}

TEST(ExhaustiveSearch, UniformExteriorHasConstantMinimizer) {
  const GridSpec spec{2, 3, 1.0};
  const InteractionEngine engine(spec, KernelConfig{}, ExteriorRule::constant(2));
  const ExhaustiveResult r = exhaustive_search(engine, 3, wetting_sigma());
  EXPECT_EQ(r.best, 0.0);
  EXPECT_EQ(r.minimizers, 1U);
  EXPECT_EQ(r.labels, std::vector<Label>(9, 2));
}

TEST(ExhaustiveSearch, RejectsHugeSpaces) {
  const GridSpec spec{2, 5, 1.0};
  const InteractionEngine engine(spec, KernelConfig{}, ExteriorRule::none());
  EXPECT_THROW(exhaustive_search(engine, 2, SurfaceTensionMatrix::uniform(2, 1.0)), std::invalid_argument);
}
