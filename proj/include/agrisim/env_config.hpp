#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "agrisim/config.hpp"

namespace agrisim {

// Seasonal grid ecology parameters plus the agent-facing costs/limits that the
// environment charges. Defaults are the working set described in the README;
// they are not canonical published values.
struct EnvConfig {
  int grid_width = 30;
  int grid_height = 30;
  int season_length = 20;      // steps per season (summer == winter length)
  int cycles_per_episode = 25; // one cycle = summer + winter

  double alpha1 = 0.5;  // baseline germination rates
  double alpha2 = 0.8;
  double beta12 = 1.0;  // inhibition of type-2 germination by seeds1
  double beta21 = 1.0;  // inhibition of type-1 germination by seeds2
  double temp = 5.0;    // inverse temperature of the germination softmax

  double d1 = 0.05;  // per-neighbor seed dispersal rates
  double d2 = 0.10;
  double seed_survival = 0.8;  // per-winter survival probability of a seed
  double eta3 = 0.001;         // per-cell per-step wild plant spawn probability
  double xi = 5.0;             // harvest reward logistic steepness
  double c_harvest = 0.1;      // harvest action cost
  double evap_prob = 0.05;     // per-step watered-flag decay probability
  int water_patch = 5;         // side length of the central water source
  std::uint64_t rng_seed = 0;

  double init_seed1_density = 0.05;  // fraction of cells seeded at reset
  double init_seed2_density = 0.05;
  double init_growth = 0.1;  // growth state assigned at germination

  double move_cost = 0.01;
  double pickdrop_cost = 0.01;
  double protect_cost = 0.05;
  int inventory_capacity = 1;  // per item type

  // Plants disperse seeds only during this many final steps of each summer.
  static constexpr int kDispersalWindow = 10;

  int episode_length() const { return cycles_per_episode * 2 * season_length; }

  void validate() const {
    auto prob = [](double p, const char* name) {
      if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument(std::string("EnvConfig: ") + name + " must be in [0,1]");
    };
    if (grid_width < 1 || grid_height < 1)
      throw std::invalid_argument("EnvConfig: grid dimensions must be >= 1");
    if (water_patch < 0 || water_patch > grid_width || water_patch > grid_height)
      throw std::invalid_argument("EnvConfig: water_patch must fit inside the grid");
    if (season_length < 1) throw std::invalid_argument("EnvConfig: season_length must be >= 1");
    if (cycles_per_episode < 1)
      throw std::invalid_argument("EnvConfig: cycles_per_episode must be >= 1");
    if (alpha1 < 0 || alpha2 < 0 || beta12 < 0 || beta21 < 0)
      throw std::invalid_argument("EnvConfig: germination rates must be >= 0");
    if (!(temp > 0)) throw std::invalid_argument("EnvConfig: temp must be > 0");
    if (d1 < 0 || d2 < 0) throw std::invalid_argument("EnvConfig: dispersal rates must be >= 0");
    prob(seed_survival, "seed_survival");
    prob(eta3, "eta3");
    prob(evap_prob, "evap_prob");
    prob(init_seed1_density, "init_seed1_density");
    prob(init_seed2_density, "init_seed2_density");
    if (!(xi > 0)) throw std::invalid_argument("EnvConfig: xi must be > 0");
    if (c_harvest < 0) throw std::invalid_argument("EnvConfig: c_harvest must be >= 0");
    if (!(init_growth > 0.0 && init_growth <= 1.0))
      throw std::invalid_argument("EnvConfig: init_growth must be in (0,1]");
    if (move_cost < 0 || pickdrop_cost < 0 || protect_cost < 0)
      throw std::invalid_argument("EnvConfig: action costs must be >= 0");
    if (inventory_capacity < 0)
      throw std::invalid_argument("EnvConfig: inventory_capacity must be >= 0");
  }

  void to_kv(KVConfig& kv) const {
    kv.set("env.grid_width", grid_width);
    kv.set("env.grid_height", grid_height);
    kv.set("env.season_length", season_length);
    kv.set("env.cycles_per_episode", cycles_per_episode);
    kv.set("env.alpha1", alpha1);
    kv.set("env.alpha2", alpha2);
    kv.set("env.beta12", beta12);
    kv.set("env.beta21", beta21);
    kv.set("env.temp", temp);
    kv.set("env.d1", d1);
    kv.set("env.d2", d2);
    kv.set("env.seed_survival", seed_survival);
    kv.set("env.eta3", eta3);
    kv.set("env.xi", xi);
    kv.set("env.c_harvest", c_harvest);
    kv.set("env.evap_prob", evap_prob);
    kv.set("env.water_patch", water_patch);
    kv.set("env.rng_seed", static_cast<unsigned long long>(rng_seed));
    kv.set("env.init_seed1_density", init_seed1_density);
    kv.set("env.init_seed2_density", init_seed2_density);
    kv.set("env.init_growth", init_growth);
    kv.set("env.move_cost", move_cost);
    kv.set("env.pickdrop_cost", pickdrop_cost);
    kv.set("env.protect_cost", protect_cost);
    kv.set("env.inventory_capacity", inventory_capacity);
  }

  static EnvConfig from_kv(const KVConfig& kv) {
    EnvConfig c;
    c.grid_width = static_cast<int>(kv.get_int("env.grid_width", c.grid_width));
    c.grid_height = static_cast<int>(kv.get_int("env.grid_height", c.grid_height));
    c.season_length = static_cast<int>(kv.get_int("env.season_length", c.season_length));
    c.cycles_per_episode =
        static_cast<int>(kv.get_int("env.cycles_per_episode", c.cycles_per_episode));
    c.alpha1 = kv.get_double("env.alpha1", c.alpha1);
    c.alpha2 = kv.get_double("env.alpha2", c.alpha2);
    c.beta12 = kv.get_double("env.beta12", c.beta12);
    c.beta21 = kv.get_double("env.beta21", c.beta21);
    c.temp = kv.get_double("env.temp", c.temp);
    c.d1 = kv.get_double("env.d1", c.d1);
    c.d2 = kv.get_double("env.d2", c.d2);
    c.seed_survival = kv.get_double("env.seed_survival", c.seed_survival);
    c.eta3 = kv.get_double("env.eta3", c.eta3);
    c.xi = kv.get_double("env.xi", c.xi);
    c.c_harvest = kv.get_double("env.c_harvest", c.c_harvest);
    c.evap_prob = kv.get_double("env.evap_prob", c.evap_prob);
    c.water_patch = static_cast<int>(kv.get_int("env.water_patch", c.water_patch));
    c.rng_seed = static_cast<std::uint64_t>(
        kv.get_int("env.rng_seed", static_cast<long long>(c.rng_seed)));
    c.init_seed1_density = kv.get_double("env.init_seed1_density", c.init_seed1_density);
    c.init_seed2_density = kv.get_double("env.init_seed2_density", c.init_seed2_density);
    c.init_growth = kv.get_double("env.init_growth", c.init_growth);
    c.move_cost = kv.get_double("env.move_cost", c.move_cost);
    c.pickdrop_cost = kv.get_double("env.pickdrop_cost", c.pickdrop_cost);
    c.protect_cost = kv.get_double("env.protect_cost", c.protect_cost);
    c.inventory_capacity =
        static_cast<int>(kv.get_int("env.inventory_capacity", c.inventory_capacity));
    c.validate();
    return c;
  }
};

}  // namespace agrisim
