#pragma once

#include <algorithm>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "agrisim/config.hpp"
#include "agrisim/policy.hpp"
#include "agrisim/ppo.hpp"

namespace agrisim {

struct PopulationConfig {
  int n0 = 2;
  int n_max = 32;
  double r_plus = 50.0;    // cumulative reward that triggers reproduction
  double r_minus = -50.0;  // cumulative reward that triggers death
  bool sl_enabled = false;
  // Optional scale-free thresholds: after warmup_updates, R+ and R- are set to
  // plus_factor / minus_factor times the median per-episode return seen so far.
  bool auto_thresholds = false;
  int warmup_updates = 10;
  double plus_factor = 1.5;
  double minus_factor = 0.25;

  void validate() const {
    if (!(r_minus < r_plus)) throw std::invalid_argument("PopulationConfig: r_minus < r_plus");
    if (n0 < 1 || n0 > n_max) throw std::invalid_argument("PopulationConfig: 1 <= n0 <= n_max");
    if (warmup_updates < 0) throw std::invalid_argument("PopulationConfig: warmup_updates >= 0");
  }
  void to_kv(KVConfig& kv) const {
    kv.set("pop.n0", n0);
    kv.set("pop.n_max", n_max);
    kv.set("pop.r_plus", r_plus);
    kv.set("pop.r_minus", r_minus);
    kv.set("pop.sl_enabled", sl_enabled);
    kv.set("pop.auto_thresholds", auto_thresholds);
    kv.set("pop.warmup_updates", warmup_updates);
    kv.set("pop.plus_factor", plus_factor);
    kv.set("pop.minus_factor", minus_factor);
  }
  static PopulationConfig from_kv(const KVConfig& kv) {
    PopulationConfig c;
    c.n0 = static_cast<int>(kv.get_int("pop.n0", c.n0));
    c.n_max = static_cast<int>(kv.get_int("pop.n_max", c.n_max));
    c.r_plus = kv.get_double("pop.r_plus", c.r_plus);
    c.r_minus = kv.get_double("pop.r_minus", c.r_minus);
    c.sl_enabled = kv.get_bool("pop.sl_enabled", c.sl_enabled);
    c.auto_thresholds = kv.get_bool("pop.auto_thresholds", c.auto_thresholds);
    c.warmup_updates = static_cast<int>(kv.get_int("pop.warmup_updates", c.warmup_updates));
    c.plus_factor = kv.get_double("pop.plus_factor", c.plus_factor);
    c.minus_factor = kv.get_double("pop.minus_factor", c.minus_factor);
    c.validate();
    return c;
  }
};

struct RosterEntry {
  int id = 0;
  PolicyHandle policy;
  AdamState opt;             // dies with the agent
  double cum_reward = 0.0;   // R_i, resets on reproduction
  int parent_id = -1;
  int birth_episode = 0;
};

struct PopEvent {
  int episode = 0;
  char type = 'B';  // 'B' birth, 'D' death, 'X' extinction
  int agent_id = -1;
  int parent_id = -1;
  double r_value = 0.0;
};

struct PopulationState {
  std::vector<RosterEntry> roster;
  int next_id = 0;
  std::vector<std::pair<int, int>> lineage;  // (parent, child), acyclic since ids grow

  static PopulationState init(const PopulationConfig& cfg, const ArchDescriptor& arch,
                              std::uint64_t seed) {
    cfg.validate();
    PopulationState pop;
    for (int i = 0; i < cfg.n0; ++i) {
      RosterEntry e;
      e.id = pop.next_id++;
      e.policy = PolicyHandle::init(arch, mix_seed({seed, 0x726f73ULL, static_cast<std::uint64_t>(i)}));
      e.opt.init(e.policy.params.size());
      pop.roster.push_back(std::move(e));
    }
    return pop;
  }
};

/// Exact policy copy with fresh optimizer-independent generator state; the
/// child trains independently of the parent afterwards.
inline PolicyHandle clone_policy(const PolicyHandle& parent, std::uint64_t child_seed) {
  PolicyHandle child;
  child.arch = parent.arch;
  child.params = parent.params;  // byte-identical parameter vector
  child.sampler = Rng(mix_seed({child_seed, 0x636c6f6e65ULL}));
  return child;
}

/// Reward-threshold reproduction and death. Adds each agent's episode reward
/// to its accumulator, removes agents at or below r_minus, and lets agents at
/// or above r_plus reproduce while the cap allows; candidates are admitted
/// highest accumulator first, ties by id. Reproduction resets the parent's
/// accumulator. Population hitting zero emits a terminal extinction event.
inline std::vector<PopEvent> population_update(PopulationState& pop,
                                               const std::vector<double>& episode_rewards,
                                               const PopulationConfig& cfg, int episode,
                                               std::uint64_t clone_seed_base = 0) {
  cfg.validate();
  if (episode_rewards.size() != pop.roster.size())
    throw std::invalid_argument("population_update: one reward entry per living agent");
  for (std::size_t i = 0; i < pop.roster.size(); ++i)
    pop.roster[i].cum_reward += episode_rewards[i];
  if (!cfg.sl_enabled) return {};

  std::vector<PopEvent> events;
  std::vector<RosterEntry> survivors;
  survivors.reserve(pop.roster.size());
  std::vector<std::size_t> breeders;  // indices into survivors
  for (auto& e : pop.roster) {
    if (e.cum_reward <= cfg.r_minus) {
      events.push_back({episode, 'D', e.id, e.parent_id, e.cum_reward});
      continue;  // optimizer state dies with the agent
    }
    survivors.push_back(std::move(e));
    if (survivors.back().cum_reward >= cfg.r_plus) breeders.push_back(survivors.size() - 1);
  }

  std::sort(breeders.begin(), breeders.end(), [&](std::size_t a, std::size_t b) {
    if (survivors[a].cum_reward != survivors[b].cum_reward)
      return survivors[a].cum_reward > survivors[b].cum_reward;
    return survivors[a].id < survivors[b].id;
  });

  // N' = N + births - deaths, births admitted only up to the cap
  const int headroom = cfg.n_max - static_cast<int>(survivors.size());
  const int births = std::clamp(static_cast<int>(breeders.size()), 0, std::max(0, headroom));
  std::vector<RosterEntry> children;
  for (int b = 0; b < births; ++b) {
    RosterEntry& parent = survivors[breeders[b]];
    RosterEntry child;
    child.id = pop.next_id++;
    child.policy = clone_policy(parent.policy,
                                mix_seed({clone_seed_base, static_cast<std::uint64_t>(child.id)}));
    child.opt.init(child.policy.params.size());
    child.parent_id = parent.id;
    child.birth_episode = episode + 1;  // joins from the next episode
    events.push_back({episode, 'B', child.id, parent.id, parent.cum_reward});
    pop.lineage.emplace_back(parent.id, child.id);
    parent.cum_reward = 0.0;
    children.push_back(std::move(child));
  }
  for (auto& c : children) survivors.push_back(std::move(c));
  pop.roster = std::move(survivors);

  if (pop.roster.empty()) events.push_back({episode, 'X', -1, -1, 0.0});
  return events;
}

/// Event log CSV: episode, event, agent_id, parent_id, r_value.
inline void write_events_csv(const std::vector<PopEvent>& events, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "episode,event,agent_id,parent_id,r_value\n";
  for (const auto& e : events)
    f << e.episode << ','
      << (e.type == 'B' ? "birth" : (e.type == 'D' ? "death" : "extinction")) << ','
      << e.agent_id << ',' << e.parent_id << ',' << fmt_double(e.r_value) << '\n';
}

/// Lineage as a plain edge list: one "parent child" pair per line.
inline void write_lineage(const PopulationState& pop, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  for (const auto& [parent, child] : pop.lineage) f << parent << ' ' << child << '\n';
}

}  // namespace agrisim
