#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "agrisim/metrics.hpp"
#include "agrisim/scripted_policies.hpp"
#include "agrisim/trainer.hpp"

namespace agrisim {

// Grid experiment: the cross product of axis values, each cell run with a
// fixed replicate count. Axis names are config keys (env.eta3, ppo.gamma,
// sweep.policy, sweep.n_agents); common short names are aliased.
struct SweepSpec {
  struct Axis {
    std::string key;
    std::vector<std::string> values;
  };
  std::vector<Axis> axes;
  int replicates = 1;
  int episodes = 1;          // per-cell episode budget (eval episodes in train mode)
  int updates = 0;           // train mode only
  std::string mode = "scripted";  // scripted | train
  std::string policy = "farmer";  // scripted mode default when not an axis
  int n_agents = 1;
  std::uint64_t seed = 0;

  static std::string canonical_key(const std::string& raw) {
    if (raw == "eta3") return "env.eta3";
    if (raw == "gamma") return "ppo.gamma";
    if (raw == "policy") return "sweep.policy";
    if (raw == "n" || raw == "n_agents" || raw == "agents") return "sweep.n_agents";
    return raw;
  }

  void validate() const {
    if (axes.empty()) throw std::invalid_argument("SweepSpec: at least one axis required");
    for (const auto& a : axes)
      if (a.values.empty()) throw std::invalid_argument("SweepSpec: empty axis " + a.key);
    if (replicates < 1 || episodes < 1)
      throw std::invalid_argument("SweepSpec: replicates and episodes must be >= 1");
    if (mode != "scripted" && mode != "train")
      throw std::invalid_argument("SweepSpec: mode must be scripted or train");
  }

  static SweepSpec from_kv(const KVConfig& kv) {
    SweepSpec s;
    for (const auto& raw : kv.get_list("sweep.axes")) {
      Axis a;
      a.key = canonical_key(raw);
      a.values = kv.get_list("sweep.values." + raw);
      s.axes.push_back(std::move(a));
    }
    s.replicates = static_cast<int>(kv.get_int("sweep.replicates", s.replicates));
    s.episodes = static_cast<int>(kv.get_int("sweep.episodes", s.episodes));
    s.updates = static_cast<int>(kv.get_int("sweep.updates", s.updates));
    s.mode = kv.get_string("sweep.mode", s.mode);
    s.policy = kv.get_string("sweep.policy", s.policy);
    s.n_agents = static_cast<int>(kv.get_int("sweep.n_agents", s.n_agents));
    s.seed = static_cast<std::uint64_t>(kv.get_int("sweep.seed", 0));
    s.validate();
    return s;
  }

  int cell_count() const {
    int n = 1;
    for (const auto& a : axes) n *= static_cast<int>(a.values.size());
    return n;
  }
  std::vector<int> cell_coords(int cell) const {
    std::vector<int> c(axes.size());
    for (std::size_t i = axes.size(); i-- > 0;) {
      c[i] = cell % static_cast<int>(axes[i].values.size());
      cell /= static_cast<int>(axes[i].values.size());
    }
    return c;
  }
};

struct SweepRow {
  int cell = 0;
  int replicate = 0;
  std::vector<std::string> axis_values;
  std::uint64_t seed = 0;
  EpisodeMetrics metrics;  // per-episode means over the cell budget
  std::string error;       // empty on success
};

inline PolicyFn make_named_policy(const std::string& name, std::uint64_t rng_seed) {
  if (name == "farmer")
    return [](int, const HistoryWindow& h) { return scripted_farmer(h); };
  if (name == "forager")
    return [](int, const HistoryWindow& h) { return scripted_forager(h); };
  if (name == "random") {
    auto rng = std::make_shared<Rng>(rng_seed);
    return [rng](int, const HistoryWindow&) {
      std::vector<int> f;
      for (int s : AgentAction::factor_sizes()) f.push_back(static_cast<int>(rng->uniform_int(s)));
      return AgentAction::from_factors(f);
    };
  }
  throw std::invalid_argument("unknown policy name: " + name);
}

namespace detail {

inline EpisodeMetrics average_metrics(const std::vector<EpisodeMetrics>& ms) {
  EpisodeMetrics avg;
  if (ms.empty()) return avg;
  for (const auto& m : ms) {
    avg.p1_abundance += m.p1_abundance;
    avg.p1_last_summer += m.p1_last_summer;
    avg.p3_foraging += m.p3_foraging;
    avg.watering_events += m.watering_events;
    avg.p2_removals += m.p2_removals;
    avg.movement_rate += m.movement_rate;
    avg.neighbourhood_mean += m.neighbourhood_mean;
    avg.mean_return += m.mean_return;
  }
  const double n = static_cast<double>(ms.size());
  avg.p1_abundance /= n;
  avg.p1_last_summer /= n;
  avg.movement_rate /= n;
  avg.neighbourhood_mean /= n;
  avg.mean_return /= n;
  return avg;  // event counts stay totals over the cell budget
}

inline SweepRow run_cell(const SweepSpec& spec, const KVConfig& base, int cell, int replicate) {
  SweepRow row;
  row.cell = cell;
  row.replicate = replicate;
  const std::vector<int> coords = spec.cell_coords(cell);
  KVConfig kv = base;
  for (std::size_t i = 0; i < spec.axes.size(); ++i) {
    kv.set(spec.axes[i].key, spec.axes[i].values[coords[i]]);
    row.axis_values.push_back(spec.axes[i].values[coords[i]]);
  }
  row.seed = mix_seed({spec.seed, static_cast<std::uint64_t>(cell),
                       static_cast<std::uint64_t>(replicate)});
  try {
    const std::string policy = kv.get_string("sweep.policy", spec.policy);
    const int n_agents = static_cast<int>(kv.get_int("sweep.n_agents", spec.n_agents));
    if (spec.mode == "scripted") {
      const EnvConfig env = EnvConfig::from_kv(kv);
      std::vector<EpisodeMetrics> ms;
      for (int e = 0; e < spec.episodes; ++e) {
        const std::uint64_t ep_seed = mix_seed({row.seed, static_cast<std::uint64_t>(e)});
        const EpisodeTrace tr =
            run_episode(env, n_agents, make_named_policy(policy, ep_seed), ep_seed);
        ms.push_back(collect_episode_metrics(tr));
      }
      row.metrics = average_metrics(ms);
    } else {
      TrainerConfig tc = TrainerConfig::from_kv(kv);
      tc.pop.n0 = n_agents;
      tc.updates = spec.updates;
      tc.seed = row.seed;
      Trainer trainer(tc);
      trainer.run();
      const EvalResult ev = trainer.evaluate(spec.episodes, mix_seed({row.seed, 0x6576ULL}));
      row.metrics.mean_return = ev.mean_return;
      row.metrics.watering_events = ev.watering_events;
      row.metrics.p3_foraging = ev.p3_harvests;
      row.metrics.p1_last_summer = ev.p1_last_summer;
    }
  } catch (const std::exception& ex) {
    std::string msg = ex.what();
    for (char& ch : msg)
      if (ch == ',' || ch == '\n') ch = ';';
    row.error = msg;
  }
  return row;
}

}  // namespace detail

/// Run every (cell, replicate) pair. Results are deterministic in the spec
/// seed and independent of worker scheduling: each pair owns a derived seed
/// and a preassigned output slot.
inline std::vector<SweepRow> run_sweep(const SweepSpec& spec, const KVConfig& base,
                                       int n_threads = 1) {
  spec.validate();
  const int cells = spec.cell_count();
  const int total = cells * spec.replicates;
  std::vector<SweepRow> rows(total);
  auto work = [&](int w, int stride) {
    for (int k = w; k < total; k += stride)
      rows[k] = detail::run_cell(spec, base, k / spec.replicates, k % spec.replicates);
  };
  if (n_threads <= 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_threads; ++w) pool.emplace_back(work, w, n_threads);
    for (auto& th : pool) th.join();
  }
  return rows;
}

/// One CSV row per (cell, replicate): axis values, seed, metric means, error.
inline void write_sweep_csv(const SweepSpec& spec, const std::vector<SweepRow>& rows,
                            const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "cell,replicate";
  for (const auto& a : spec.axes) f << ',' << a.key;
  f << ",seed,mean_return,p1_abundance,p1_last_summer,p3_foraging,watering_events,p2_removals,"
       "movement_rate,neighbourhood_mean,error\n";
  for (const auto& r : rows) {
    f << r.cell << ',' << r.replicate;
    for (const auto& v : r.axis_values) f << ',' << v;
    f << ',' << r.seed << ',' << fmt_double(r.metrics.mean_return) << ','
      << fmt_double(r.metrics.p1_abundance) << ',' << fmt_double(r.metrics.p1_last_summer) << ','
      << r.metrics.p3_foraging << ',' << r.metrics.watering_events << ','
      << r.metrics.p2_removals << ',' << fmt_double(r.metrics.movement_rate) << ','
      << fmt_double(r.metrics.neighbourhood_mean) << ',' << r.error << '\n';
  }
}

}  // namespace agrisim
