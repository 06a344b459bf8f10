#pragma once

#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "agrisim/action_obs.hpp"
#include "agrisim/policy.hpp"

namespace agrisim {

struct AgentStepRecord {
  int agent = 0;
  AgentAction action;
  double reward = 0.0;
  bool harvested_p1 = false;
  bool harvested_p3 = false;
  bool removed_p2 = false;
  bool dropped_water = false;
};

// Grid summary as the agents saw it at the start of the step.
struct EnvStepSummary {
  int p1_plants = 0;
  int p2_plants = 0;
  int p3_plants = 0;
  long long n1_sum = 0;  // P2 neighbours summed over all P1 cells
  int n1_count = 0;      // number of P1 cells
};

struct StepRecord {
  int t = 0;
  EnvStepSummary env;
  std::vector<AgentStepRecord> agents;
};

struct EpisodeTrace {
  int n_agents = 0;
  int episode_length = 0;
  int season_length = 0;
  std::uint64_t seed = 0;
  std::vector<StepRecord> steps;

  void save_csv(const std::string& path) const;
  static EpisodeTrace load_csv(const std::string& path);
};

inline EnvStepSummary summarize_env(const EnvState& s, bool von_neumann = false) {
  EnvStepSummary out;
  for (int y = 0; y < s.height; ++y)
    for (int x = 0; x < s.width; ++x) {
      const CellState& c = s.at(x, y);
      if (c.has_p1()) ++out.p1_plants;
      if (c.has_p2()) ++out.p2_plants;
      if (c.p3_present) ++out.p3_plants;
      if (!c.has_p1()) continue;
      ++out.n1_count;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          if (von_neumann && dx != 0 && dy != 0) continue;
          const int nx = x + dx, ny = y + dy;
          if (s.in_bounds(nx, ny) && s.at(nx, ny).has_p2()) ++out.n1_sum;
        }
    }
  return out;
}

/// Behavior map used by the trace runner: (agent index, history) -> action.
using PolicyFn = std::function<AgentAction(int, const HistoryWindow&)>;

/// Run one full episode under the given behavior map and record a step trace.
inline EpisodeTrace run_episode(const EnvConfig& cfg, int n_agents, const PolicyFn& policy,
                                std::uint64_t seed, int t_mem = 1) {
  EnvConfig c = cfg;
  c.rng_seed = seed;
  EnvState s = reset(c);
  std::vector<AgentState> agents = init_agents(s, n_agents);

  const std::vector<int> sizes = AgentAction::factor_sizes();
  const int onehot = kKindCount + kDirCount + kItemCount + kOffsetCount;
  std::vector<HistoryWindow> hist(n_agents,
                                  HistoryWindow(Observation::kFlatSize, onehot, t_mem));

  EpisodeTrace trace;
  trace.n_agents = n_agents;
  trace.episode_length = c.episode_length();
  trace.season_length = c.season_length;
  trace.seed = seed;
  trace.steps.reserve(trace.episode_length);

  std::vector<Observation> obs;
  obs.reserve(n_agents);
  for (const auto& a : agents) obs.push_back(observe(s, c, a));

  for (int t = 0; t < trace.episode_length; ++t) {
    StepRecord rec;
    rec.t = t;
    rec.env = summarize_env(s);

    std::vector<AgentAction> actions(n_agents);
    for (int i = 0; i < n_agents; ++i) {
      hist[i].push_observation(obs[i].flat);
      actions[i] = policy(i, hist[i]);
    }
    JointStepResult res = joint_step(s, c, agents, actions);
    for (int i = 0; i < n_agents; ++i) {
      hist[i].complete_step(actions[i].factors(), sizes, res.rewards[i]);
      AgentStepRecord ar;
      ar.agent = i;
      ar.action = actions[i];
      ar.reward = res.rewards[i];
      ar.harvested_p1 = res.outcomes[i].harvested_p1;
      ar.harvested_p3 = res.outcomes[i].harvested_p3;
      ar.removed_p2 = res.outcomes[i].removed_p2;
      ar.dropped_water = res.outcomes[i].dropped_water;
      rec.agents.push_back(ar);
    }
    trace.steps.push_back(std::move(rec));
    obs = std::move(res.observations);
  }
  return trace;
}

// Trace CSV: one env row per step (agent = -1, action fields zeroed), then one
// row per agent action. Column order starts with (step, agent, kind, reward)
// followed by the action detail, outcome flags and grid summary.
inline void EpisodeTrace::save_csv(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("trace: cannot write " + path);
  f << "step,agent,kind,reward,dir,item,offset,harvested_p1,harvested_p3,removed_p2,"
       "dropped_water,p1_plants,p2_plants,p3_plants,n1_sum,n1_count\n";
  f << "-1,-2," << n_agents << ',' << episode_length << ',' << season_length << ','
    << seed << ",0,0,0,0,0,0,0,0,0,0\n";  // header row carrying episode metadata
  for (const auto& st : steps) {
    f << st.t << ",-1,0,0,0,0,0,0,0,0,0," << st.env.p1_plants << ',' << st.env.p2_plants << ','
      << st.env.p3_plants << ',' << st.env.n1_sum << ',' << st.env.n1_count << '\n';
    for (const auto& ar : st.agents)
      f << st.t << ',' << ar.agent << ',' << static_cast<int>(ar.action.kind) << ','
        << fmt_double(ar.reward) << ',' << static_cast<int>(ar.action.dir) << ','
        << static_cast<int>(ar.action.item) << ',' << ar.action.offset << ','
        << (ar.harvested_p1 ? 1 : 0) << ',' << (ar.harvested_p3 ? 1 : 0) << ','
        << (ar.removed_p2 ? 1 : 0) << ',' << (ar.dropped_water ? 1 : 0) << ",0,0,0,0,0\n";
  }
}

inline EpisodeTrace EpisodeTrace::load_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("trace: cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("trace: empty file " + path);
  EpisodeTrace trace;
  bool meta_seen = false;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) cols.push_back(item);
    if (cols.size() != 16) throw std::runtime_error("trace: malformed row: " + line);
    const int step = std::stoi(cols[0]);
    const int agent = std::stoi(cols[1]);
    if (step == -1 && agent == -2) {
      trace.n_agents = std::stoi(cols[2]);
      trace.episode_length = std::stoi(cols[3]);
      trace.season_length = std::stoi(cols[4]);
      trace.seed = std::stoull(cols[5]);
      meta_seen = true;
      continue;
    }
    if (!meta_seen) throw std::runtime_error("trace: missing metadata row");
    if (agent == -1) {
      StepRecord rec;
      rec.t = step;
      rec.env.p1_plants = std::stoi(cols[11]);
      rec.env.p2_plants = std::stoi(cols[12]);
      rec.env.p3_plants = std::stoi(cols[13]);
      rec.env.n1_sum = std::stoll(cols[14]);
      rec.env.n1_count = std::stoi(cols[15]);
      trace.steps.push_back(std::move(rec));
    } else {
      if (trace.steps.empty() || trace.steps.back().t != step)
        throw std::runtime_error("trace: agent row before env row at step " + cols[0]);
      AgentStepRecord ar;
      ar.agent = agent;
      ar.action.kind = static_cast<ActionKind>(std::stoi(cols[2]));
      ar.reward = std::stod(cols[3]);
      ar.action.dir = static_cast<Direction>(std::stoi(cols[4]));
      ar.action.item = static_cast<Item>(std::stoi(cols[5]));
      ar.action.offset = std::stoi(cols[6]);
      ar.harvested_p1 = cols[7] == "1";
      ar.harvested_p3 = cols[8] == "1";
      ar.removed_p2 = cols[9] == "1";
      ar.dropped_water = cols[10] == "1";
      trace.steps.back().agents.push_back(ar);
    }
  }
  return trace;
}

}  // namespace agrisim
