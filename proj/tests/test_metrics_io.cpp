#include <gtest/gtest.h>

#include <cstdio>

#include "agrisim/metrics.hpp"
#include "agrisim/scripted_policies.hpp"
#include "agrisim/sweep.hpp"

using namespace agrisim;

namespace {

// Brute-force evaluation of the neighbourhood composition, independent of the
// library path: double loop over all cell pairs.
double brute_force_n1(const EnvState& s) {
  long long total = 0;
  int p1_cells = 0;
  for (int y = 0; y < s.height; ++y)
    for (int x = 0; x < s.width; ++x) {
      if (!s.at(x, y).has_p1()) continue;
      ++p1_cells;
      for (int ny = 0; ny < s.height; ++ny)
        for (int nx = 0; nx < s.width; ++nx) {
          if (nx == x && ny == y) continue;
          if (std::abs(nx - x) <= 1 && std::abs(ny - y) <= 1 && s.at(nx, ny).has_p2()) ++total;
        }
    }
  if (p1_cells == 0) return 0.0;
  return static_cast<double>(total) / p1_cells;
}

EnvState random_grid(int side, std::uint64_t seed) {
  EnvConfig cfg;
  cfg.grid_width = cfg.grid_height = side;
  cfg.water_patch = 0;
  cfg.init_seed1_density = cfg.init_seed2_density = 0.0;
  EnvState s = reset(cfg);
  Rng rng(seed);
  for (auto& c : s.grid) {
    const int k = static_cast<int>(rng.uniform_int(4));
    if (k == 1) c.growth1 = 0.2 + rng.uniform() * 0.8;
    if (k == 2) c.growth2 = 0.2 + rng.uniform() * 0.8;
    if (k == 3) c.p3_present = true;
  }
  return s;
}

}  // namespace

TEST(Neighbourhood, EmptyGridIsZero) {
  EnvState s = random_grid(6, 1);
  for (auto& c : s.grid) c.growth1 = 0.0;
  EXPECT_DOUBLE_EQ(neighbourhood_composition(s), 0.0);
}

TEST(Neighbourhood, FullyRingedPlantCountsEight) {
  EnvConfig cfg;
  cfg.grid_width = cfg.grid_height = 5;
  cfg.water_patch = 0;
  cfg.init_seed1_density = cfg.init_seed2_density = 0.0;
  EnvState s = reset(cfg);
  s.at(2, 2).growth1 = 1.0;
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx)
      if (dx != 0 || dy != 0) s.at(2 + dx, 2 + dy).growth2 = 1.0;
  EXPECT_DOUBLE_EQ(neighbourhood_composition(s), 8.0);
}

TEST(Neighbourhood, MatchesBruteForceOnRandomGrids) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const EnvState s = random_grid(10, seed);
    EXPECT_DOUBLE_EQ(neighbourhood_composition(s), brute_force_n1(s)) << "seed " << seed;
  }
}

TEST(Neighbourhood, VonNeumannVariant) {
  EnvConfig cfg;
  cfg.grid_width = cfg.grid_height = 5;
  cfg.water_patch = 0;
  cfg.init_seed1_density = cfg.init_seed2_density = 0.0;
  EnvState s = reset(cfg);
  s.at(2, 2).growth1 = 1.0;
  s.at(3, 2).growth2 = 1.0;  // edge neighbor
  s.at(3, 3).growth2 = 1.0;  // corner neighbor
  EXPECT_DOUBLE_EQ(neighbourhood_composition(s, false), 2.0);
  EXPECT_DOUBLE_EQ(neighbourhood_composition(s, true), 1.0);
}

TEST(Metrics, NoOpEpisodeHasNoEvents) {
  EnvConfig cfg;
  cfg.grid_width = cfg.grid_height = 8;
  cfg.water_patch = 0;
  cfg.eta3 = 0.0;
  cfg.init_seed1_density = cfg.init_seed2_density = 0.0;
  cfg.cycles_per_episode = 2;
  const EpisodeTrace tr = run_episode(
      cfg, 1, [](int, const HistoryWindow&) { return AgentAction::harvest(); }, 5);
  const EpisodeMetrics m = collect_episode_metrics(tr);
  EXPECT_DOUBLE_EQ(m.movement_rate, 0.0);
  EXPECT_EQ(m.p3_foraging, 0);
  EXPECT_EQ(m.watering_events, 0);
  EXPECT_EQ(m.p2_removals, 0);
  EXPECT_DOUBLE_EQ(m.p1_abundance, 0.0);
}

TEST(Metrics, ForagerHarvestsWithoutWatering) {
  EnvConfig cfg;
  cfg.eta3 = 0.05;  // abundant wild plants
  cfg.cycles_per_episode = 4;
  const EpisodeTrace tr = run_episode(
      cfg, 1, [](int, const HistoryWindow& h) { return scripted_forager(h); }, 7);
  const EpisodeMetrics m = collect_episode_metrics(tr);
  EXPECT_GT(m.p3_foraging, 0);
  EXPECT_EQ(m.watering_events, 0);
}

TEST(Metrics, FarmerWatersAndWeeds) {
  EnvConfig cfg;  // default 30x30, low eta3
  cfg.cycles_per_episode = 8;
  const EpisodeTrace tr = run_episode(
      cfg, 1, [](int, const HistoryWindow& h) { return scripted_farmer(h); }, 11);
  const EpisodeMetrics m = collect_episode_metrics(tr);
  EXPECT_GT(m.watering_events, 0);
  EXPECT_GT(m.p2_removals, 0);
}

TEST(Metrics, TruncatedTraceIsAHardError) {
  EnvConfig cfg;
  cfg.grid_width = cfg.grid_height = 8;
  cfg.water_patch = 0;
  cfg.cycles_per_episode = 1;
  EpisodeTrace tr = run_episode(
      cfg, 1, [](int, const HistoryWindow&) { return AgentAction::harvest(); }, 5);
  tr.steps.pop_back();
  EXPECT_THROW(collect_episode_metrics(tr), std::runtime_error);
  EpisodeTrace tr2 = run_episode(
      cfg, 2, [](int, const HistoryWindow&) { return AgentAction::harvest(); }, 5);
  tr2.steps[3].agents.pop_back();
  EXPECT_THROW(collect_episode_metrics(tr2), std::runtime_error);
}

TEST(Metrics, RecomputationFromPersistedTraceIsBitExact) {
  EnvConfig cfg;
  cfg.grid_width = cfg.grid_height = 10;
  cfg.cycles_per_episode = 3;
  cfg.water_patch = 2;
  cfg.eta3 = 0.02;
  const EpisodeTrace tr = run_episode(
      cfg, 2, [](int, const HistoryWindow& h) { return scripted_forager(h); }, 13);
  const EpisodeMetrics m0 = collect_episode_metrics(tr);

  const std::string path = ::testing::TempDir() + "trace_roundtrip.csv";
  tr.save_csv(path);
  const EpisodeTrace loaded = EpisodeTrace::load_csv(path);
  const EpisodeMetrics m1 = collect_episode_metrics(loaded);
  EXPECT_EQ(m0.p1_abundance, m1.p1_abundance);
  EXPECT_EQ(m0.p1_last_summer, m1.p1_last_summer);
  EXPECT_EQ(m0.p3_foraging, m1.p3_foraging);
  EXPECT_EQ(m0.watering_events, m1.watering_events);
  EXPECT_EQ(m0.p2_removals, m1.p2_removals);
  EXPECT_EQ(m0.movement_rate, m1.movement_rate);
  EXPECT_EQ(m0.neighbourhood_mean, m1.neighbourhood_mean);
  EXPECT_EQ(m0.agent_returns, m1.agent_returns);
  std::remove(path.c_str());
}

TEST(Sweep, SingleCellMatchesDirectEvaluation) {
  SweepSpec spec;
  spec.axes.push_back({"env.eta3", {"0.02"}});
  spec.replicates = 1;
  spec.episodes = 1;
  spec.mode = "scripted";
  spec.policy = "forager";
  spec.n_agents = 1;
  spec.seed = 77;
  KVConfig base;
  EnvConfig().to_kv(base);
  const auto rows = run_sweep(spec, base);
  ASSERT_EQ(rows.size(), 1u);
  ASSERT_TRUE(rows[0].error.empty());

  EnvConfig cfg;
  cfg.eta3 = 0.02;
  const std::uint64_t cell_seed = mix_seed({spec.seed, 0ull, 0ull});
  const std::uint64_t ep_seed = mix_seed({cell_seed, 0ull});
  const EpisodeTrace tr =
      run_episode(cfg, 1, make_named_policy("forager", ep_seed), ep_seed);
  const EpisodeMetrics m = collect_episode_metrics(tr);
  EXPECT_EQ(rows[0].metrics.mean_return, m.mean_return);
  EXPECT_EQ(rows[0].metrics.p3_foraging, m.p3_foraging);
  EXPECT_EQ(rows[0].metrics.p1_abundance, m.p1_abundance);
}

TEST(Sweep, RowCountIsCellsTimesReplicates) {
  SweepSpec spec;
  spec.axes.push_back({"env.eta3", {"0.0", "0.1"}});
  spec.axes.push_back({"sweep.policy", {"forager", "random"}});
  spec.replicates = 2;
  spec.episodes = 1;
  spec.n_agents = 1;
  KVConfig base;
  EnvConfig small;
  small.grid_width = small.grid_height = 8;
  small.water_patch = 2;
  small.cycles_per_episode = 1;
  small.to_kv(base);
  const auto rows = run_sweep(spec, base);
  EXPECT_EQ(rows.size(), 8u);
  for (const auto& r : rows) EXPECT_TRUE(r.error.empty());
  const std::string path = ::testing::TempDir() + "sweep.csv";
  write_sweep_csv(spec, rows, path);
  std::ifstream f(path, std::ios::binary);
  std::string line;
  int lines = 0;
  while (std::getline(f, line)) ++lines;
  EXPECT_EQ(lines, 9);  // header + 8 rows
  std::remove(path.c_str());
}

TEST(Sweep, RowsIndependentOfWorkerCount) {
  SweepSpec spec;
  spec.axes.push_back({"env.eta3", {"0.0", "0.05", "0.2"}});
  spec.replicates = 2;
  spec.episodes = 1;
  spec.policy = "forager";
  spec.n_agents = 1;
  spec.seed = 99;
  KVConfig base;
  EnvConfig small;
  small.grid_width = small.grid_height = 8;
  small.water_patch = 2;
  small.cycles_per_episode = 1;
  small.to_kv(base);
  const auto serial = run_sweep(spec, base, 1);
  const auto parallel = run_sweep(spec, base, 3);
  ASSERT_EQ(serial.size(), parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    EXPECT_EQ(serial[i].seed, parallel[i].seed);
    EXPECT_EQ(serial[i].metrics.mean_return, parallel[i].metrics.mean_return);
    EXPECT_EQ(serial[i].metrics.p3_foraging, parallel[i].metrics.p3_foraging);
  }
}

TEST(Sweep, PerCellFailuresAreRecordedAndDoNotAbort) {
  SweepSpec spec;
  spec.axes.push_back({"sweep.policy", {"forager", "no_such_policy"}});
  spec.replicates = 1;
  spec.episodes = 1;
  spec.n_agents = 1;
  KVConfig base;
  EnvConfig small;
  small.grid_width = small.grid_height = 8;
  small.water_patch = 2;
  small.cycles_per_episode = 1;
  small.to_kv(base);
  const auto rows = run_sweep(spec, base);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_TRUE(rows[0].error.empty());
  EXPECT_FALSE(rows[1].error.empty());
}

TEST(ConfigIo, EnvRoundTripPreservesEveryField) {
  EnvConfig cfg;
  cfg.grid_width = 17;
  cfg.alpha1 = 0.123456789012345;
  cfg.eta3 = 1e-4;
  cfg.rng_seed = 987654321;
  cfg.inventory_capacity = 3;
  KVConfig kv;
  cfg.to_kv(kv);
  const KVConfig parsed = KVConfig::parse(kv.str());
  const EnvConfig back = EnvConfig::from_kv(parsed);
  EXPECT_EQ(back.grid_width, cfg.grid_width);
  EXPECT_EQ(back.alpha1, cfg.alpha1);
  EXPECT_EQ(back.eta3, cfg.eta3);
  EXPECT_EQ(back.rng_seed, cfg.rng_seed);
  EXPECT_EQ(back.inventory_capacity, cfg.inventory_capacity);
}

TEST(ConfigIo, FileRoundTripAndComments) {
  const std::string path = ::testing::TempDir() + "cfg.txt";
  {
    std::ofstream f(path);
    f << "# comment line\n"
      << "env.grid_width = 12\n"
      << "env.grid_height = 12   # trailing comment\n"
      << "env.water_patch = 3\n";
  }
  const KVConfig kv = KVConfig::load(path);
  const EnvConfig cfg = EnvConfig::from_kv(kv);
  EXPECT_EQ(cfg.grid_width, 12);
  EXPECT_EQ(cfg.water_patch, 3);
  std::remove(path.c_str());
}

TEST(ConfigIo, MalformedLinesAreRejected) {
  EXPECT_THROW(KVConfig::parse("this has no equals sign\n"), std::invalid_argument);
  KVConfig kv = KVConfig::parse("env.temp = oops\n");
  EXPECT_THROW(kv.get_double("env.temp", 1.0), std::invalid_argument);
}

TEST(Snapshot, StableAcrossIdenticalRuns) {
  EnvConfig cfg;
  cfg.grid_width = cfg.grid_height = 9;
  cfg.water_patch = 3;
  cfg.rng_seed = 3;
  const EnvState a = reset(cfg);
  const EnvState b = reset(cfg);
  EXPECT_EQ(snapshot(a, cfg), snapshot(b, cfg));
  EXPECT_NE(snapshot(a, cfg).find("t 0 season 0 season_step 0"), std::string::npos);
}
