#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "agrisim/config.hpp"
#include "agrisim/env_config.hpp"
#include "agrisim/rng.hpp"

namespace agrisim {

enum class Season { Summer = 0, Winter = 1 };

struct CellState {
  int agents_here = 0;
  int seeds1 = 0;
  int seeds2 = 0;
  double growth1 = 0.0;  // 0 = no plant, 1 = fully grown
  double growth2 = 0.0;
  bool water_source = false;
  bool watered = false;
  int w_time = 0;  // steps this season the cell was watered while holding a P1
  bool p3_present = false;

  bool has_p1() const { return growth1 > 0.0; }
  bool has_p2() const { return growth2 > 0.0; }
};

struct EnvState {
  int width = 0;
  int height = 0;
  std::vector<CellState> grid;  // row-major, index = y * width + x
  int t = 0;                    // global step within the episode
  Rng rng;

  bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
  CellState& at(int x, int y) { return grid[static_cast<std::size_t>(y) * width + x]; }
  const CellState& at(int x, int y) const {
    return grid[static_cast<std::size_t>(y) * width + x];
  }
};

// Season bookkeeping is derived from t: alternating summer/winter blocks of
// season_length steps, starting with summer.
inline Season season_of(int t, const EnvConfig& cfg) {
  const int in_cycle = t % (2 * cfg.season_length);
  return in_cycle < cfg.season_length ? Season::Summer : Season::Winter;
}
inline int season_step_of(int t, const EnvConfig& cfg) { return t % cfg.season_length; }
inline bool in_dispersal_window(int t, const EnvConfig& cfg) {
  return season_of(t, cfg) == Season::Summer &&
         season_step_of(t, cfg) >= cfg.season_length - EnvConfig::kDispersalWindow;
}

struct GerminationProbs {
  double p1 = 0.0;
  double p2 = 0.0;
  double p_empty = 1.0;
};

/// Germination competition at one cell: saturating rates, clipped occupancy
/// pressures, softmax with inverse temperature. Sums to 1.
inline GerminationProbs germination_probabilities(const CellState& cell, const EnvConfig& cfg) {
  const double germ1 = cfg.alpha1 * cell.seeds1 / (1.0 + cfg.beta21 * cell.seeds2);
  const double germ2 = cfg.alpha2 * cell.seeds2 / (1.0 + cfg.beta12 * cell.seeds1);
  const double z1 = std::clamp(germ1, 0.0, 1.0);
  const double z2 = std::clamp(germ2, 0.0, 1.0);
  const double z_empty = 1.0 - std::clamp(z1 + z2, 0.0, 1.0);
  const double w1 = std::pow(z1, cfg.temp);
  const double w2 = std::pow(z2, cfg.temp);
  const double we = std::pow(z_empty, cfg.temp);
  const double z = w1 + w2 + we;  // > 0: z_empty = 1 whenever z1 = z2 = 0
  return {w1 / z, w2 / z, we / z};
}

namespace detail {

// The water source fertilizes its 3x3 neighborhood: those cells count as
// watered on every step and never dry out while the source is present.
inline void apply_source_wetting(EnvState& s) {
  for (int y = 0; y < s.height; ++y)
    for (int x = 0; x < s.width; ++x) {
      if (!s.at(x, y).water_source) continue;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (s.in_bounds(nx, ny)) s.at(nx, ny).watered = true;
        }
    }
}

inline int surviving_seeds(int count, double p, Rng& rng) {
  int kept = 0;
  for (int i = 0; i < count; ++i)
    if (rng.bernoulli(p)) ++kept;
  return kept;
}

}  // namespace detail

/// Summer onset: reset per-season water counters, then sample one germination
/// outcome per cell; a germinating seed is consumed and becomes a plant at
/// init_growth.
inline void begin_summer(EnvState& s, const EnvConfig& cfg) {
  for (auto& cell : s.grid) {
    cell.w_time = 0;
    const GerminationProbs p = germination_probabilities(cell, cfg);
    const double w[3] = {p.p1, p.p2, p.p_empty};
    const int outcome = s.rng.categorical(w, 3);
    if (outcome == 0) {
      cell.growth1 = cfg.init_growth;
      cell.seeds1 -= 1;
    } else if (outcome == 1) {
      cell.growth2 = cfg.init_growth;
      cell.seeds2 -= 1;
    }
  }
}

/// Winter onset: all plants die, each stored seed survives independently with
/// probability seed_survival.
inline void begin_winter(EnvState& s, const EnvConfig& cfg) {
  for (auto& cell : s.grid) {
    cell.growth1 = 0.0;
    cell.growth2 = 0.0;
    cell.p3_present = false;
    cell.w_time = 0;
    cell.seeds1 = detail::surviving_seeds(cell.seeds1, cfg.seed_survival, s.rng);
    cell.seeds2 = detail::surviving_seeds(cell.seeds2, cfg.seed_survival, s.rng);
  }
}

/// Linear maturation from init_growth at germination to 1 by the last summer
/// step. The reward nonlinearity lives in the harvest logistic, not here.
inline void grow_plants(EnvState& s, const EnvConfig& cfg) {
  const double inc = cfg.season_length > 1
                         ? (1.0 - cfg.init_growth) / (cfg.season_length - 1)
                         : 1.0;
  for (auto& cell : s.grid) {
    if (cell.growth1 > 0.0) cell.growth1 = std::min(1.0, cell.growth1 + inc);
    if (cell.growth2 > 0.0) cell.growth2 = std::min(1.0, cell.growth2 + inc);
  }
}

/// One dispersal pass: each cell gains a seed of type i with probability
/// d_i * (n_i + P_i), where n_i counts plants over the Moore neighborhood
/// including the cell itself and a watered cell holding a P1 counts double.
inline void disperse_seeds(EnvState& s, const EnvConfig& cfg) {
  struct PlantFlags {
    float p1, p2, wet;
  };
  std::vector<PlantFlags> snap(s.grid.size());
  for (std::size_t i = 0; i < s.grid.size(); ++i)
    snap[i] = {s.grid[i].has_p1() ? 1.0f : 0.0f, s.grid[i].has_p2() ? 1.0f : 0.0f,
               s.grid[i].watered ? 1.0f : 0.0f};

  const double d[2] = {cfg.d1, cfg.d2};
  for (int y = 0; y < s.height; ++y)
    for (int x = 0; x < s.width; ++x) {
      double n[2] = {0.0, 0.0};
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (!s.in_bounds(nx, ny)) continue;
          const PlantFlags& f = snap[static_cast<std::size_t>(ny) * s.width + nx];
          n[0] += (1.0 + f.wet) * f.p1;  // watering doubles P1 seed output
          n[1] += f.p2;
        }
      const PlantFlags& self = snap[static_cast<std::size_t>(y) * s.width + x];
      const double p_self[2] = {static_cast<double>(self.p1), static_cast<double>(self.p2)};
      for (int i = 0; i < 2; ++i) {
        const double rho = std::clamp(d[i] * (n[i] + p_self[i]), 0.0, 1.0);
        if (rho > 0.0 && s.rng.bernoulli(rho)) {
          CellState& cell = s.at(x, y);
          (i == 0 ? cell.seeds1 : cell.seeds2) += 1;
        }
      }
    }
}

/// Wild plant spawning; a spawn replaces any P1/P2 on the cell.
inline void spawn_wild(EnvState& s, const EnvConfig& cfg) {
  for (auto& cell : s.grid) {
    if (s.rng.bernoulli(cfg.eta3)) {
      cell.p3_present = true;
      cell.growth1 = 0.0;
      cell.growth2 = 0.0;
    }
  }
}

/// Water bookkeeping: agent-laid water evaporates, the source block re-wets
/// its neighborhood, and watered cells holding a P1 accrue w_time.
inline void water_step(EnvState& s, const EnvConfig& cfg) {
  for (auto& cell : s.grid) {
    if (cell.watered && !cell.water_source && s.rng.bernoulli(cfg.evap_prob))
      cell.watered = false;
  }
  detail::apply_source_wetting(s);
  for (auto& cell : s.grid) {
    if (cell.watered && cell.growth1 > 0.0) cell.w_time += 1;
  }
}

/// Harvest resolution on one cell. Returns 0 when did_harvest is false;
/// otherwise pays c_harvest, collects the P1 logistic reward and/or the unit
/// P3 reward, and removes every plant on the cell (P2 is removed for free).
inline double harvest_reward(CellState& cell, const EnvConfig& cfg, bool did_harvest) {
  if (!did_harvest) return 0.0;
  double r = -cfg.c_harvest;
  if (cell.growth1 > 0.0) {
    r += (1.0 + cell.w_time) / (1.0 + std::exp(-cfg.xi * (cell.growth1 - 1.0)));
    cell.growth1 = 0.0;
  }
  if (cell.p3_present) {
    r += 1.0;
    cell.p3_present = false;
  }
  cell.growth2 = 0.0;
  return r;
}

/// Fresh episode state: centered water block, Bernoulli seed placement, then
/// the first summer's germination. Deterministic in cfg.rng_seed.
inline EnvState reset(const EnvConfig& cfg) {
  cfg.validate();
  EnvState s;
  s.width = cfg.grid_width;
  s.height = cfg.grid_height;
  s.grid.assign(static_cast<std::size_t>(s.width) * s.height, CellState{});
  s.t = 0;
  s.rng.reseed(cfg.rng_seed);

  const int x0 = (cfg.grid_width - cfg.water_patch) / 2;
  const int y0 = (cfg.grid_height - cfg.water_patch) / 2;
  for (int y = y0; y < y0 + cfg.water_patch; ++y)
    for (int x = x0; x < x0 + cfg.water_patch; ++x) {
      s.at(x, y).water_source = true;
      s.at(x, y).watered = true;
    }

  for (auto& cell : s.grid) {
    if (s.rng.bernoulli(cfg.init_seed1_density)) cell.seeds1 = 1;
    if (s.rng.bernoulli(cfg.init_seed2_density)) cell.seeds2 = 1;
  }

  detail::apply_source_wetting(s);
  begin_summer(s, cfg);
  return s;
}

/// Ecology updates for the current step, then the clock advance and any
/// season-boundary handler for the next step. Call after agent actions.
inline void ecology_step(EnvState& s, const EnvConfig& cfg) {
  if (season_of(s.t, cfg) == Season::Summer) {
    grow_plants(s, cfg);
    if (in_dispersal_window(s.t, cfg)) disperse_seeds(s, cfg);
  }
  spawn_wild(s, cfg);
  water_step(s, cfg);
  s.t += 1;
  if (s.t < cfg.episode_length() && season_step_of(s.t, cfg) == 0) {
    if (season_of(s.t, cfg) == Season::Summer)
      begin_summer(s, cfg);
    else
      begin_winter(s, cfg);
  }
}

inline int count_p1(const EnvState& s) {
  int n = 0;
  for (const auto& c : s.grid) n += c.has_p1() ? 1 : 0;
  return n;
}
inline int count_p2(const EnvState& s) {
  int n = 0;
  for (const auto& c : s.grid) n += c.has_p2() ? 1 : 0;
  return n;
}
inline int count_p3(const EnvState& s) {
  int n = 0;
  for (const auto& c : s.grid) n += c.p3_present ? 1 : 0;
  return n;
}
inline long long total_seeds1(const EnvState& s) {
  long long n = 0;
  for (const auto& c : s.grid) n += c.seeds1;
  return n;
}
inline long long total_seeds2(const EnvState& s) {
  long long n = 0;
  for (const auto& c : s.grid) n += c.seeds2;
  return n;
}

/// Line-oriented state dump used by golden-file tests: one header line, then
/// one line per cell: x y seeds1 seeds2 growth1 growth2 water_source watered
/// w_time p3.
inline std::string snapshot(const EnvState& s, const EnvConfig& cfg) {
  std::string out = "t " + std::to_string(s.t) + " season " +
                    std::to_string(static_cast<int>(season_of(s.t, cfg))) + " season_step " +
                    std::to_string(season_step_of(s.t, cfg)) + "\n";
  for (int y = 0; y < s.height; ++y)
    for (int x = 0; x < s.width; ++x) {
      const CellState& c = s.at(x, y);
      out += std::to_string(x) + " " + std::to_string(y) + " " + std::to_string(c.seeds1) +
             " " + std::to_string(c.seeds2) + " " + fmt_double(c.growth1) + " " +
             fmt_double(c.growth2) + " " + (c.water_source ? "1" : "0") + " " +
             (c.watered ? "1" : "0") + " " + std::to_string(c.w_time) + " " +
             (c.p3_present ? "1" : "0") + "\n";
    }
  return out;
}

}  // namespace agrisim
