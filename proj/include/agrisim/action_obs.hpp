#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "agrisim/env_core.hpp"
#include "agrisim/policy.hpp"

namespace agrisim {

enum class ActionKind : int { Move = 0, Pick = 1, Drop = 2, Harvest = 3, Protect = 4 };
enum class Direction : int { North = 0, South = 1, East = 2, West = 3 };
enum class Item : int { Water = 0, Seed1 = 1, Seed2 = 2 };

constexpr int kKindCount = 5;
constexpr int kDirCount = 4;
constexpr int kItemCount = 3;
constexpr int kOffsetCount = 9;  // 3x3 Moore offsets, row-major, 4 = own cell

inline int offset_dx(int idx) { return idx % 3 - 1; }
inline int offset_dy(int idx) { return idx / 3 - 1; }
inline int offset_index(int dx, int dy) { return (dy + 1) * 3 + (dx + 1); }

inline int dir_dx(Direction d) {
  switch (d) {
    case Direction::East: return 1;
    case Direction::West: return -1;
    default: return 0;
  }
}
inline int dir_dy(Direction d) {
  switch (d) {
    case Direction::North: return -1;
    case Direction::South: return 1;
    default: return 0;
  }
}

// Multi-discrete action: the kind factor selects the behavior, the other
// factors parameterize it (and are simply ignored when irrelevant, which keeps
// the factored policy distribution well-defined).
struct AgentAction {
  ActionKind kind = ActionKind::Harvest;
  Direction dir = Direction::North;
  Item item = Item::Water;
  int offset = 4;

  /// Flat integer encoding, factor order: kind, dir, item, offset.
  std::vector<int> factors() const {
    return {static_cast<int>(kind), static_cast<int>(dir), static_cast<int>(item), offset};
  }
  static AgentAction from_factors(const std::vector<int>& f) {
    if (f.size() != 4) throw std::invalid_argument("AgentAction: want 4 factors");
    if (f[0] < 0 || f[0] >= kKindCount || f[1] < 0 || f[1] >= kDirCount || f[2] < 0 ||
        f[2] >= kItemCount || f[3] < 0 || f[3] >= kOffsetCount)
      throw std::invalid_argument("AgentAction: factor out of range");
    AgentAction a;
    a.kind = static_cast<ActionKind>(f[0]);
    a.dir = static_cast<Direction>(f[1]);
    a.item = static_cast<Item>(f[2]);
    a.offset = f[3];
    return a;
  }
  static std::vector<int> factor_sizes() {
    return {kKindCount, kDirCount, kItemCount, kOffsetCount};
  }

  static AgentAction move(Direction d) { return {ActionKind::Move, d, Item::Water, 4}; }
  static AgentAction pick(Item it) { return {ActionKind::Pick, Direction::North, it, 4}; }
  static AgentAction drop(Item it) { return {ActionKind::Drop, Direction::North, it, 4}; }
  static AgentAction harvest() { return {ActionKind::Harvest, Direction::North, Item::Water, 4}; }
  static AgentAction protect(int offset) {
    return {ActionKind::Protect, Direction::North, Item::Water, offset};
  }
};

inline const char* action_kind_name(ActionKind k) {
  switch (k) {
    case ActionKind::Move: return "move";
    case ActionKind::Pick: return "pick";
    case ActionKind::Drop: return "drop";
    case ActionKind::Harvest: return "harvest";
    case ActionKind::Protect: return "protect";
  }
  return "?";
}

struct Inventory {
  int water = 0;
  int seeds1 = 0;
  int seeds2 = 0;
  int& of(Item it) { return it == Item::Water ? water : (it == Item::Seed1 ? seeds1 : seeds2); }
  int of(Item it) const {
    return it == Item::Water ? water : (it == Item::Seed1 ? seeds1 : seeds2);
  }
};

struct AgentState {
  int id = 0;
  int x = 0;
  int y = 0;
  Inventory inv;
  double episode_return = 0.0;
};

// Egocentric 11x11 observation window, 8 channels per cell, plus inventory and
// season clock. Flat layout (documented for policy consumption):
//   [ (wy*11 + wx)*8 + ch ] for wx,wy in [0,11), channels:
//     0 growth1, 1 growth2, 2 p3 (0/1), 3 seeds1 count, 4 seeds2 count,
//     5 water source (0/1), 6 watered (0/1), 7 agent count
//   then inventory water, seeds1, seeds2, then season phase in [0,1) and a
//   summer flag. Cells outside the grid carry -1 on every channel.
struct Observation {
  static constexpr int kWindow = 11;
  static constexpr int kChannels = 8;
  static constexpr int kHalf = kWindow / 2;
  static constexpr int kFlatSize = kWindow * kWindow * kChannels + 5;

  std::vector<double> flat = std::vector<double>(kFlatSize, 0.0);

  double cell(int wx, int wy, int ch) const {
    return flat[static_cast<std::size_t>((wy * kWindow + wx) * kChannels + ch)];
  }
  double& cell(int wx, int wy, int ch) {
    return flat[static_cast<std::size_t>((wy * kWindow + wx) * kChannels + ch)];
  }
  bool out_of_bounds(int wx, int wy) const { return cell(wx, wy, 0) < 0.0; }
  double inv_water() const { return flat[kFlatSize - 5]; }
  double inv_seeds1() const { return flat[kFlatSize - 4]; }
  double inv_seeds2() const { return flat[kFlatSize - 3]; }
  double season_phase() const { return flat[kFlatSize - 2]; }
  bool is_summer() const { return flat[kFlatSize - 1] > 0.5; }
};

/// Pure observation extraction for one agent.
inline Observation observe(const EnvState& s, const EnvConfig& cfg, const AgentState& agent) {
  Observation o;
  for (int wy = 0; wy < Observation::kWindow; ++wy)
    for (int wx = 0; wx < Observation::kWindow; ++wx) {
      const int gx = agent.x + wx - Observation::kHalf;
      const int gy = agent.y + wy - Observation::kHalf;
      if (!s.in_bounds(gx, gy)) {
        for (int ch = 0; ch < Observation::kChannels; ++ch) o.cell(wx, wy, ch) = -1.0;
        continue;
      }
      const CellState& c = s.at(gx, gy);
      o.cell(wx, wy, 0) = c.growth1;
      o.cell(wx, wy, 1) = c.growth2;
      o.cell(wx, wy, 2) = c.p3_present ? 1.0 : 0.0;
      o.cell(wx, wy, 3) = c.seeds1;
      o.cell(wx, wy, 4) = c.seeds2;
      o.cell(wx, wy, 5) = c.water_source ? 1.0 : 0.0;
      o.cell(wx, wy, 6) = c.watered ? 1.0 : 0.0;
      o.cell(wx, wy, 7) = c.agents_here;
    }
  o.flat[Observation::kFlatSize - 5] = agent.inv.water;
  o.flat[Observation::kFlatSize - 4] = agent.inv.seeds1;
  o.flat[Observation::kFlatSize - 3] = agent.inv.seeds2;
  o.flat[Observation::kFlatSize - 2] =
      static_cast<double>(season_step_of(s.t, cfg)) / cfg.season_length;
  o.flat[Observation::kFlatSize - 1] = season_of(s.t, cfg) == Season::Summer ? 1.0 : 0.0;
  return o;
}

// What one action did, for metrics and reward accounting.
struct ActionOutcome {
  double reward = 0.0;
  bool moved = false;
  bool harvested_p1 = false;
  bool harvested_p3 = false;
  bool removed_p2 = false;       // a living P2 plant removed (protect or harvest)
  bool dropped_water = false;    // a water unit actually placed
};

/// Apply one agent's action. Infeasible actions are no-ops that still pay the
/// action cost.
inline ActionOutcome apply_action(EnvState& s, const EnvConfig& cfg, AgentState& agent,
                                  const AgentAction& action) {
  ActionOutcome out;
  CellState& here = s.at(agent.x, agent.y);
  switch (action.kind) {
    case ActionKind::Move: {
      out.reward -= cfg.move_cost;
      const int nx = std::clamp(agent.x + dir_dx(action.dir), 0, s.width - 1);
      const int ny = std::clamp(agent.y + dir_dy(action.dir), 0, s.height - 1);
      if (nx != agent.x || ny != agent.y) {
        here.agents_here -= 1;
        agent.x = nx;
        agent.y = ny;
        s.at(nx, ny).agents_here += 1;
      }
      out.moved = true;  // counted as a move action regardless of border clamping
      break;
    }
    case ActionKind::Pick: {
      out.reward -= cfg.pickdrop_cost;
      int& slot = agent.inv.of(action.item);
      if (slot < cfg.inventory_capacity) {
        if (action.item == Item::Water) {
          if (here.water_source) {
            slot += 1;  // the source is not depleted
          } else if (here.watered) {
            here.watered = false;
            slot += 1;
          }
        } else {
          int& seeds = action.item == Item::Seed1 ? here.seeds1 : here.seeds2;
          if (seeds > 0) {
            seeds -= 1;
            slot += 1;
          }
        }
      }
      break;
    }
    case ActionKind::Drop: {
      out.reward -= cfg.pickdrop_cost;
      int& slot = agent.inv.of(action.item);
      if (slot > 0) {
        slot -= 1;
        if (action.item == Item::Water) {
          here.watered = true;
          out.dropped_water = true;
        } else {
          (action.item == Item::Seed1 ? here.seeds1 : here.seeds2) += 1;
        }
      }
      break;
    }
    case ActionKind::Harvest: {
      const bool had_p1 = here.has_p1();
      const bool had_p2 = here.has_p2();
      const bool had_p3 = here.p3_present;
      out.reward += harvest_reward(here, cfg, true);
      out.harvested_p1 = had_p1;
      out.harvested_p3 = had_p3;
      out.removed_p2 = had_p2;
      break;
    }
    case ActionKind::Protect: {
      out.reward -= cfg.protect_cost;
      const int tx = agent.x + offset_dx(action.offset);
      const int ty = agent.y + offset_dy(action.offset);
      if (s.in_bounds(tx, ty)) {
        CellState& target = s.at(tx, ty);
        out.removed_p2 = target.has_p2();
        target.growth2 = 0.0;
        target.seeds2 = 0;
      }
      break;
    }
  }
  agent.episode_return += out.reward;
  return out;
}

struct JointStepResult {
  std::vector<double> rewards;
  std::vector<ActionOutcome> outcomes;
  std::vector<Observation> observations;
  bool episode_done = false;
};

/// Apply all agents' actions in a per-step uniformly shuffled order, run the
/// ecology updates, advance the clock, and return rewards plus fresh
/// observations. Bit-reproducible for a fixed seed, roster and action list.
inline JointStepResult joint_step(EnvState& s, const EnvConfig& cfg,
                                  std::vector<AgentState>& agents,
                                  const std::vector<AgentAction>& actions) {
  if (agents.size() != actions.size())
    throw std::invalid_argument("joint_step: one action per living agent required");
  JointStepResult res;
  res.rewards.assign(agents.size(), 0.0);
  res.outcomes.assign(agents.size(), ActionOutcome{});

  std::vector<std::size_t> order(agents.size());
  std::iota(order.begin(), order.end(), 0);
  s.rng.shuffle(order);
  for (std::size_t idx : order) {
    res.outcomes[idx] = apply_action(s, cfg, agents[idx], actions[idx]);
    res.rewards[idx] = res.outcomes[idx].reward;
  }

  ecology_step(s, cfg);
  res.episode_done = s.t >= cfg.episode_length();

  res.observations.reserve(agents.size());
  for (const auto& a : agents) res.observations.push_back(observe(s, cfg, a));
  return res;
}

/// Sample a full environment action from a factored policy distribution; the
/// joint log-probability sums over all four factors.
inline std::pair<AgentAction, double> sample_action(const ActionDistribution& dist, Rng& rng) {
  const SampledAction s = sample_factors(dist, rng);
  return {AgentAction::from_factors(s.factors), s.log_prob};
}

/// Place n agents uniformly at random (draws from the environment generator).
inline std::vector<AgentState> init_agents(EnvState& s, int n) {
  std::vector<AgentState> agents;
  agents.reserve(n);
  for (int i = 0; i < n; ++i) {
    AgentState a;
    a.id = i;
    a.x = static_cast<int>(s.rng.uniform_int(s.width));
    a.y = static_cast<int>(s.rng.uniform_int(s.height));
    s.at(a.x, a.y).agents_here += 1;
    agents.push_back(a);
  }
  return agents;
}

}  // namespace agrisim
