#pragma once

#include <stdexcept>
#include <vector>

#include "agrisim/episode.hpp"

namespace agrisim {

/// Mean number of P2 plants in the neighbourhood of each P1 plant; 0 when no
/// P1 exists. Moore ring by default, von Neumann behind the flag.
inline double neighbourhood_composition(const EnvState& s, bool von_neumann = false) {
  const EnvStepSummary sum = summarize_env(s, von_neumann);
  if (sum.n1_count == 0) return 0.0;
  return static_cast<double>(sum.n1_sum) / sum.n1_count;
}

// Per-episode aggregates over a step trace. Definitions:
//   p1_abundance       mean P1 plant count over all steps (start-of-step state)
//   p1_last_summer     mean P1 plant count over the final summer season
//   p3_foraging        successful P3 harvest events
//   watering_events    water units actually dropped on cells
//   p2_removals        live P2 plants removed via protect or harvest
//   movement_rate      move actions per agent per step, in [0,1]
//   neighbourhood_mean mean of the per-step P1/P2 neighbourhood composition,
//                      averaged over steps that have at least one P1
struct EpisodeMetrics {
  double p1_abundance = 0.0;
  double p1_last_summer = 0.0;
  long long p3_foraging = 0;
  long long watering_events = 0;
  long long p2_removals = 0;
  double movement_rate = 0.0;
  double neighbourhood_mean = 0.0;
  std::vector<double> agent_returns;
  double mean_return = 0.0;
};

inline EpisodeMetrics collect_episode_metrics(const EpisodeTrace& trace) {
  if (static_cast<int>(trace.steps.size()) != trace.episode_length)
    throw std::runtime_error("collect_episode_metrics: truncated trace");
  EpisodeMetrics m;
  m.agent_returns.assign(trace.n_agents, 0.0);

  double p1_total = 0.0, p1_last = 0.0;
  double n1_total = 0.0;
  int n1_steps = 0, last_summer_steps = 0;
  long long moves = 0;
  // the final summer block of a cycle-aligned episode
  const int last_summer_begin = trace.episode_length - 2 * trace.season_length;
  const int last_summer_end = trace.episode_length - trace.season_length;

  for (const auto& st : trace.steps) {
    if (static_cast<int>(st.agents.size()) != trace.n_agents)
      throw std::runtime_error("collect_episode_metrics: truncated trace");
    p1_total += st.env.p1_plants;
    if (st.t >= last_summer_begin && st.t < last_summer_end) {
      p1_last += st.env.p1_plants;
      ++last_summer_steps;
    }
    if (st.env.n1_count > 0) {
      n1_total += static_cast<double>(st.env.n1_sum) / st.env.n1_count;
      ++n1_steps;
    }
    for (const auto& ar : st.agents) {
      m.agent_returns[ar.agent] += ar.reward;
      if (ar.action.kind == ActionKind::Move) ++moves;
      if (ar.harvested_p3) ++m.p3_foraging;
      if (ar.dropped_water) ++m.watering_events;
      if (ar.removed_p2) ++m.p2_removals;
    }
  }
  m.p1_abundance = p1_total / trace.episode_length;
  m.p1_last_summer = last_summer_steps > 0 ? p1_last / last_summer_steps : 0.0;
  m.neighbourhood_mean = n1_steps > 0 ? n1_total / n1_steps : 0.0;
  const long long agent_steps =
      static_cast<long long>(trace.n_agents) * trace.episode_length;
  m.movement_rate = agent_steps > 0 ? static_cast<double>(moves) / agent_steps : 0.0;
  for (double r : m.agent_returns) m.mean_return += r;
  if (trace.n_agents > 0) m.mean_return /= trace.n_agents;
  return m;
}

}  // namespace agrisim
