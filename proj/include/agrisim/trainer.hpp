#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "agrisim/action_obs.hpp"
#include "agrisim/episode.hpp"
#include "agrisim/metrics.hpp"
#include "agrisim/ppo.hpp"
#include "agrisim/scripted_policies.hpp"
#include "agrisim/social.hpp"

namespace agrisim {

struct TrainerConfig {
  EnvConfig env;
  PPOConfig ppo;
  PopulationConfig pop;  // pop.n0 is the roster size; sl_enabled gates cloning
  int updates = 100;
  std::uint64_t seed = 0;
  int t_mem = 8;
  int embed_dim = 16;
  int hidden_dim = 64;
  std::string metrics_csv;        // per-update stats stream, empty = off
  int checkpoint_every = 0;       // updates between checkpoints, 0 = off
  std::string checkpoint_prefix;  // path prefix for policy blobs

  ArchDescriptor arch() const {
    ArchDescriptor a;
    a.obs_dim = Observation::kFlatSize;
    a.factor_sizes = AgentAction::factor_sizes();
    a.t_mem = t_mem;
    a.embed_dim = embed_dim;
    a.hidden_dim = hidden_dim;
    return a;
  }

  void to_kv(KVConfig& kv) const {
    env.to_kv(kv);
    ppo.to_kv(kv);
    pop.to_kv(kv);
    kv.set("train.updates", updates);
    kv.set("train.seed", static_cast<unsigned long long>(seed));
    kv.set("train.t_mem", t_mem);
    kv.set("train.embed_dim", embed_dim);
    kv.set("train.hidden_dim", hidden_dim);
  }
  static TrainerConfig from_kv(const KVConfig& kv) {
    TrainerConfig c;
    c.env = EnvConfig::from_kv(kv);
    c.ppo = PPOConfig::from_kv(kv);
    c.pop = PopulationConfig::from_kv(kv);
    c.updates = static_cast<int>(kv.get_int("train.updates", c.updates));
    c.seed = static_cast<std::uint64_t>(kv.get_int("train.seed", 0));
    c.t_mem = static_cast<int>(kv.get_int("train.t_mem", c.t_mem));
    c.embed_dim = static_cast<int>(kv.get_int("train.embed_dim", c.embed_dim));
    c.hidden_dim = static_cast<int>(kv.get_int("train.hidden_dim", c.hidden_dim));
    return c;
  }
};

struct RolloutData {
  std::vector<TrajectoryBatch> batches;                // one per agent slot
  std::vector<std::vector<double>> episode_returns;    // [agent][env]
  long long watering_events = 0;
  long long p3_harvests = 0;
};

inline std::uint64_t rollout_env_seed(std::uint64_t base, int update, int env) {
  return mix_seed({base, 0x656e76ULL, static_cast<std::uint64_t>(update),
                   static_cast<std::uint64_t>(env)});
}

/// Collect episodes_per_update full episodes with every roster agent present
/// in every environment instance. Deterministic in (base_seed, update_idx).
inline RolloutData collect_rollouts(const EnvConfig& env_cfg, const ArchDescriptor& arch,
                                    const std::vector<const PolicyHandle*>& policies,
                                    int episodes_per_update, std::uint64_t base_seed,
                                    int update_idx) {
  const int n = static_cast<int>(policies.size());
  const int episode_len = env_cfg.episode_length();
  const std::vector<int> sizes = arch.factor_sizes;
  const int onehot = arch.onehot_dim();

  RolloutData out;
  out.batches.resize(n);
  out.episode_returns.assign(n, {});
  for (auto& b : out.batches) b.steps.reserve(static_cast<std::size_t>(episodes_per_update) * episode_len);

  std::vector<double> mean;
  for (int e = 0; e < episodes_per_update; ++e) {
    EnvConfig ec = env_cfg;
    ec.rng_seed = rollout_env_seed(base_seed, update_idx, e);
    EnvState s = reset(ec);
    std::vector<AgentState> agents = init_agents(s, n);
    std::vector<HistoryWindow> hist(n, HistoryWindow(arch.obs_dim, onehot, arch.t_mem));
    std::vector<Rng> act_rng;
    for (int i = 0; i < n; ++i)
      act_rng.emplace_back(mix_seed({base_seed, 0x726f6c6cULL, static_cast<std::uint64_t>(update_idx),
                                     static_cast<std::uint64_t>(e), static_cast<std::uint64_t>(i)}));

    std::vector<Observation> obs;
    obs.reserve(n);
    for (const auto& a : agents) obs.push_back(observe(s, ec, a));
    std::vector<double> ep_ret(n, 0.0);

    for (int t = 0; t < episode_len; ++t) {
      std::vector<AgentAction> actions(n);
      std::vector<std::size_t> tr_at(n);
      for (int i = 0; i < n; ++i) {
        hist[i].push_observation(obs[i].flat);
        hist[i].mean_entry(mean);
        const ForwardResult fwd = policy_forward_inputs(*policies[i], obs[i].flat, mean);
        const SampledAction sa = sample_factors(fwd.dist, act_rng[i]);
        actions[i] = AgentAction::from_factors(sa.factors);
        Transition tr;
        tr.obs = obs[i].flat;
        tr.hist_mean = mean;
        tr.action = sa.factors;
        tr.log_prob_old = sa.log_prob;
        tr.value_old = fwd.value;
        tr_at[i] = out.batches[i].steps.size();
        out.batches[i].steps.push_back(std::move(tr));
      }
      JointStepResult res = joint_step(s, ec, agents, actions);
      for (int i = 0; i < n; ++i) {
        Transition& tr = out.batches[i].steps[tr_at[i]];
        tr.reward = res.rewards[i];
        tr.done = (t == episode_len - 1);
        hist[i].complete_step(actions[i].factors(), sizes, res.rewards[i]);
        ep_ret[i] += res.rewards[i];
        if (res.outcomes[i].dropped_water) ++out.watering_events;
        if (res.outcomes[i].harvested_p3) ++out.p3_harvests;
      }
      obs = std::move(res.observations);
    }
    for (int i = 0; i < n; ++i) out.episode_returns[i].push_back(ep_ret[i]);
  }
  return out;
}

struct EvalResult {
  double mean_return = 0.0;  // per agent per episode
  long long watering_events = 0;
  long long p3_harvests = 0;
  double p1_last_summer = 0.0;
};

/// Evaluate policies by sampling (the trained object is the stochastic
/// policy); aggregates trace metrics over the episodes.
inline EvalResult evaluate_policies(const EnvConfig& env_cfg, const ArchDescriptor& arch,
                                    const std::vector<const PolicyHandle*>& policies,
                                    int n_episodes, std::uint64_t seed_base) {
  EvalResult out;
  const int n = static_cast<int>(policies.size());
  for (int e = 0; e < n_episodes; ++e) {
    std::vector<Rng> rngs;
    for (int i = 0; i < n; ++i)
      rngs.emplace_back(mix_seed({seed_base, 0x6576616cULL, static_cast<std::uint64_t>(e),
                                  static_cast<std::uint64_t>(i)}));
    PolicyFn fn = [&](int i, const HistoryWindow& h) {
      const ForwardResult fwd = policy_forward(*policies[i], h);
      return AgentAction::from_factors(sample_factors(fwd.dist, rngs[i]).factors);
    };
    const EpisodeTrace trace = run_episode(env_cfg, n, fn,
                                           mix_seed({seed_base, 0x65707300ULL,
                                                     static_cast<std::uint64_t>(e)}),
                                           arch.t_mem);
    const EpisodeMetrics m = collect_episode_metrics(trace);
    out.mean_return += m.mean_return;
    out.watering_events += m.watering_events;
    out.p3_harvests += m.p3_foraging;
    out.p1_last_summer += m.p1_last_summer;
  }
  if (n_episodes > 0) {
    out.mean_return /= n_episodes;
    out.p1_last_summer /= n_episodes;
  }
  return out;
}

// Decentralized PPO training over a (possibly reproducing) roster. With
// sl_enabled=false the roster is fixed and the loop reduces to plain per-agent
// PPO on shared environments.
class Trainer {
 public:
  explicit Trainer(TrainerConfig cfg)
      : cfg_(std::move(cfg)), arch_(cfg_.arch()),
        pop_(PopulationState::init(cfg_.pop, arch_, cfg_.seed)) {
    cfg_.env.validate();
    cfg_.ppo.validate();
    if (!cfg_.metrics_csv.empty()) {
      metrics_.open(cfg_.metrics_csv, std::ios::binary);
      if (!metrics_) throw std::runtime_error("trainer: cannot write " + cfg_.metrics_csv);
      metrics_ << "update,agent_slot,agent_id,mean_return,loss,entropy,clip_fraction,approx_kl,"
                  "aborted,n_agents\n";
    }
  }

  const PopulationState& population() const { return pop_; }
  const std::vector<PopEvent>& events() const { return events_; }
  const ArchDescriptor& arch() const { return arch_; }
  bool extinct() const { return extinct_; }

  /// One update cycle: rollouts, per-agent PPO, then the population step.
  /// Returns per-slot stats for the update.
  std::vector<AgentUpdateStats> step(int update_idx) {
    std::vector<const PolicyHandle*> views;
    for (const auto& e : pop_.roster) views.push_back(&e.policy);
    RolloutData data = collect_rollouts(cfg_.env, arch_, views, cfg_.ppo.episodes_per_update,
                                        cfg_.seed, update_idx);

    std::vector<PolicyHandle*> handles;
    std::vector<AdamState*> opts;
    for (auto& e : pop_.roster) {
      handles.push_back(&e.policy);
      opts.push_back(&e.opt);
    }
    const std::uint64_t update_seed =
        mix_seed({cfg_.seed, 0x757064ULL, static_cast<std::uint64_t>(update_idx)});
    std::vector<AgentUpdateStats> stats = train_update(handles, opts, data.batches, cfg_.ppo,
                                                       update_seed);

    if (metrics_) {
      for (std::size_t i = 0; i < stats.size(); ++i)
        metrics_ << update_idx << ',' << i << ',' << pop_.roster[i].id << ','
                 << fmt_double(stats[i].mean_episode_return) << ',' << fmt_double(stats[i].loss)
                 << ',' << fmt_double(stats[i].entropy) << ','
                 << fmt_double(stats[i].clip_fraction) << ',' << fmt_double(stats[i].approx_kl)
                 << ',' << (stats[i].aborted ? 1 : 0) << ',' << pop_.roster.size() << '\n';
      metrics_.flush();
    }

    maybe_update_thresholds(data, update_idx);
    std::vector<double> update_rewards(pop_.roster.size(), 0.0);
    for (std::size_t i = 0; i < pop_.roster.size(); ++i)
      for (double r : data.episode_returns[i]) update_rewards[i] += r;
    const auto ev = population_update(pop_, update_rewards, cfg_.pop, update_idx,
                                      mix_seed({cfg_.seed, 0x636c6fULL}));
    events_.insert(events_.end(), ev.begin(), ev.end());
    for (const auto& e : ev)
      if (e.type == 'X') extinct_ = true;

    if (cfg_.checkpoint_every > 0 && (update_idx + 1) % cfg_.checkpoint_every == 0)
      checkpoint(update_idx);
    return stats;
  }

  void run() {
    for (int u = 0; u < cfg_.updates && !extinct_; ++u) step(u);
  }

  EvalResult evaluate(int n_episodes, std::uint64_t seed_base) const {
    std::vector<const PolicyHandle*> views;
    for (const auto& e : pop_.roster) views.push_back(&e.policy);
    return evaluate_policies(cfg_.env, arch_, views, n_episodes, seed_base);
  }

 private:
  void maybe_update_thresholds(const RolloutData& data, int update_idx) {
    if (!cfg_.pop.auto_thresholds || thresholds_set_) return;
    for (const auto& per_agent : data.episode_returns)
      for (double r : per_agent) warmup_returns_.push_back(r);
    if (update_idx + 1 < cfg_.pop.warmup_updates) return;
    std::vector<double> v = warmup_returns_;
    std::sort(v.begin(), v.end());
    const double median = v.empty() ? 0.0 : v[v.size() / 2];
    if (median > 0.0) {
      cfg_.pop.r_plus = cfg_.pop.plus_factor * median * cfg_.ppo.episodes_per_update;
      cfg_.pop.r_minus = cfg_.pop.minus_factor * median * cfg_.ppo.episodes_per_update;
      if (!(cfg_.pop.r_minus < cfg_.pop.r_plus)) cfg_.pop.r_minus = cfg_.pop.r_plus - 1.0;
    }
    thresholds_set_ = true;
  }

  void checkpoint(int update_idx) const {
    for (const auto& e : pop_.roster)
      save_policy(e.policy, cfg_.checkpoint_prefix + "_u" + std::to_string(update_idx) + "_a" +
                                std::to_string(e.id) + ".policy");
  }

  TrainerConfig cfg_;
  ArchDescriptor arch_;
  PopulationState pop_;
  std::vector<PopEvent> events_;
  std::ofstream metrics_;
  std::vector<double> warmup_returns_;
  bool thresholds_set_ = false;
  bool extinct_ = false;
};

}  // namespace agrisim
