#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "agrisim/config.hpp"
#include "agrisim/policy.hpp"
#include "agrisim/rng.hpp"

namespace agrisim {

struct PPOConfig {
  double gamma = 0.99;
  double clip_eps = 0.2;
  double entropy_coef = 0.036;
  double gae_lambda = 0.95;
  double learning_rate = 3e-4;
  int epochs_per_update = 4;
  int minibatch_size = 256;
  int episodes_per_update = 16;
  double value_coef = 0.5;
  double kl_ceiling = 0.5;  // abort an agent's update when approximate KL exceeds this

  void validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("PPOConfig: gamma in [0,1]");
    if (!(clip_eps > 0.0)) throw std::invalid_argument("PPOConfig: clip_eps > 0");
    if (entropy_coef < 0.0) throw std::invalid_argument("PPOConfig: entropy_coef >= 0");
    if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0))
      throw std::invalid_argument("PPOConfig: gae_lambda in [0,1]");
    if (learning_rate < 0.0) throw std::invalid_argument("PPOConfig: learning_rate >= 0");
    if (epochs_per_update < 1 || minibatch_size < 1 || episodes_per_update < 1)
      throw std::invalid_argument("PPOConfig: counts must be >= 1");
    if (!(kl_ceiling > 0.0)) throw std::invalid_argument("PPOConfig: kl_ceiling > 0");
  }

  void to_kv(KVConfig& kv) const {
    kv.set("ppo.gamma", gamma);
    kv.set("ppo.clip_eps", clip_eps);
    kv.set("ppo.entropy_coef", entropy_coef);
    kv.set("ppo.gae_lambda", gae_lambda);
    kv.set("ppo.learning_rate", learning_rate);
    kv.set("ppo.epochs_per_update", epochs_per_update);
    kv.set("ppo.minibatch_size", minibatch_size);
    kv.set("ppo.episodes_per_update", episodes_per_update);
    kv.set("ppo.value_coef", value_coef);
    kv.set("ppo.kl_ceiling", kl_ceiling);
  }
  static PPOConfig from_kv(const KVConfig& kv) {
    PPOConfig c;
    c.gamma = kv.get_double("ppo.gamma", c.gamma);
    c.clip_eps = kv.get_double("ppo.clip_eps", c.clip_eps);
    c.entropy_coef = kv.get_double("ppo.entropy_coef", c.entropy_coef);
    c.gae_lambda = kv.get_double("ppo.gae_lambda", c.gae_lambda);
    c.learning_rate = kv.get_double("ppo.learning_rate", c.learning_rate);
    c.epochs_per_update = static_cast<int>(kv.get_int("ppo.epochs_per_update", c.epochs_per_update));
    c.minibatch_size = static_cast<int>(kv.get_int("ppo.minibatch_size", c.minibatch_size));
    c.episodes_per_update =
        static_cast<int>(kv.get_int("ppo.episodes_per_update", c.episodes_per_update));
    c.value_coef = kv.get_double("ppo.value_coef", c.value_coef);
    c.kl_ceiling = kv.get_double("ppo.kl_ceiling", c.kl_ceiling);
    c.validate();
    return c;
  }
};

/// G = sum_t gamma^t r_t.
inline double discounted_return(const std::vector<double>& rewards, double gamma) {
  double g = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) g = rewards[i] + gamma * g;
  return g;
}

// One collected step. obs and hist_mean are the (data) inputs the policy saw;
// storing them makes minibatch recomputation under new parameters exact.
struct Transition {
  std::vector<double> obs;
  std::vector<double> hist_mean;
  std::vector<int> action;
  double log_prob_old = 0.0;
  double reward = 0.0;
  double value_old = 0.0;
  bool done = false;  // last step of an episode
};

struct TrajectoryBatch {
  std::vector<Transition> steps;
};

struct GAEResult {
  std::vector<double> advantages;  // raw, un-normalized
  std::vector<double> returns;
};

/// Generalized advantage estimates over concatenated episodes; no value
/// bootstrap across a done boundary (episodes are finite-horizon).
inline GAEResult compute_gae(const TrajectoryBatch& batch, double gamma, double lambda) {
  const std::size_t n = batch.steps.size();
  GAEResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double next_value = 0.0;
  double next_adv = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const Transition& tr = batch.steps[i];
    if (tr.done) {
      next_value = 0.0;
      next_adv = 0.0;
    }
    const double delta = tr.reward + gamma * next_value - tr.value_old;
    const double adv = delta + gamma * lambda * next_adv;
    out.advantages[i] = adv;
    out.returns[i] = adv + tr.value_old;
    next_value = tr.value_old;
    next_adv = adv;
  }
  return out;
}

/// In-place zero-mean unit-variance normalization (applied once per update).
inline void normalize_advantages(std::vector<double>& adv) {
  if (adv.empty()) return;
  double mean = 0.0;
  for (double a : adv) mean += a;
  mean /= adv.size();
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  const double sd = std::sqrt(var / adv.size()) + 1e-8;
  for (double& a : adv) a = (a - mean) / sd;
}

struct PPOLossDiag {
  double loss = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
};

/// Clipped-surrogate loss with a clipped value term and entropy bonus:
///   -E[min(r A, clip(r, 1-eps, 1+eps) A)]
///   + value_coef * E[max((V-R)^2, (clip(V-V_old) - R)^2)]
///   - entropy_coef * E[H]
inline PPOLossDiag ppo_loss(const TrajectoryBatch& batch, const std::vector<double>& advantages,
                            const std::vector<double>& returns,
                            const std::vector<double>& new_log_probs,
                            const std::vector<double>& new_values,
                            const std::vector<double>& entropies, const PPOConfig& cfg) {
  const std::size_t n = batch.steps.size();
  if (advantages.size() != n || returns.size() != n || new_log_probs.size() != n ||
      new_values.size() != n || entropies.size() != n)
    throw std::invalid_argument("ppo_loss: array length mismatch");
  if (n == 0) throw std::invalid_argument("ppo_loss: empty batch");

  PPOLossDiag d;
  long clipped = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Transition& tr = batch.steps[i];
    const double ratio = std::exp(new_log_probs[i] - tr.log_prob_old);
    const double a = advantages[i];
    const double s1 = ratio * a;
    const double s2 = std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * a;
    d.policy_loss -= std::min(s1, s2);
    if (std::abs(ratio - 1.0) > cfg.clip_eps) ++clipped;

    const double v = new_values[i];
    const double v_clip =
        tr.value_old + std::clamp(v - tr.value_old, -cfg.clip_eps, cfg.clip_eps);
    const double l1 = (v - returns[i]) * (v - returns[i]);
    const double l2 = (v_clip - returns[i]) * (v_clip - returns[i]);
    d.value_loss += std::max(l1, l2);

    d.entropy += entropies[i];
    d.approx_kl += tr.log_prob_old - new_log_probs[i];
  }
  d.policy_loss /= n;
  d.value_loss /= n;
  d.entropy /= n;
  d.approx_kl /= n;
  d.clip_fraction = static_cast<double>(clipped) / n;
  d.loss = d.policy_loss + cfg.value_coef * d.value_loss - cfg.entropy_coef * d.entropy;
  if (!std::isfinite(d.loss)) throw std::runtime_error("ppo_loss: non-finite loss");
  return d;
}

struct AdamState {
  std::vector<double> m, v;
  long t = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  void init(std::size_t n) {
    m.assign(n, 0.0);
    v.assign(n, 0.0);
    t = 0;
  }
  void step(std::vector<double>& params, const std::vector<double>& grad, double lr) {
    if (m.size() != params.size()) init(params.size());
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, t);
    const double bc2 = 1.0 - std::pow(beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
      params[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
  }
};

struct AgentUpdateStats {
  double mean_episode_return = 0.0;
  double loss = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  bool aborted = false;  // KL ceiling tripped
  int minibatches = 0;
};

namespace detail {

// Minibatch pass: recompute forward under current parameters, accumulate the
// loss gradient, and report diagnostics for the pass.
inline PPOLossDiag minibatch_pass(PolicyHandle& policy, const TrajectoryBatch& batch,
                                  const std::vector<double>& advantages,
                                  const std::vector<double>& returns,
                                  const std::vector<std::size_t>& idx, const PPOConfig& cfg,
                                  std::vector<double>& grad, PolicyWorkspace& ws) {
  const std::size_t m = idx.size();
  std::fill(grad.begin(), grad.end(), 0.0);
  PPOLossDiag d;
  long clipped = 0;
  for (std::size_t k = 0; k < m; ++k) {
    const Transition& tr = batch.steps[idx[k]];
    policy_forward_inputs(policy, tr.obs, tr.hist_mean, &ws);
    const double lp = ws.dist.log_prob_of(tr.action);
    const double h = ws.dist.entropy();
    const double v = ws.value;
    const double ratio = std::exp(lp - tr.log_prob_old);
    const double a = advantages[idx[k]];
    const double s1 = ratio * a;
    const double s2 = std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * a;
    d.policy_loss -= std::min(s1, s2);
    if (std::abs(ratio - 1.0) > cfg.clip_eps) ++clipped;
    const double v_clip =
        tr.value_old + std::clamp(v - tr.value_old, -cfg.clip_eps, cfg.clip_eps);
    const double l1 = (v - returns[idx[k]]) * (v - returns[idx[k]]);
    const double l2 = (v_clip - returns[idx[k]]) * (v_clip - returns[idx[k]]);
    d.value_loss += std::max(l1, l2);
    d.entropy += h;
    d.approx_kl += tr.log_prob_old - lp;

    const double c_logp = (s1 <= s2) ? -ratio * a / m : 0.0;
    const double c_value = (l1 >= l2) ? cfg.value_coef * 2.0 * (v - returns[idx[k]]) / m : 0.0;
    const double c_entropy = -cfg.entropy_coef / m;
    policy_backward(policy, ws, tr.action, c_logp, c_value, c_entropy, grad);
  }
  d.policy_loss /= m;
  d.value_loss /= m;
  d.entropy /= m;
  d.approx_kl /= m;
  d.clip_fraction = static_cast<double>(clipped) / m;
  d.loss = d.policy_loss + cfg.value_coef * d.value_loss - cfg.entropy_coef * d.entropy;
  if (!std::isfinite(d.loss)) throw std::runtime_error("train: non-finite loss");
  return d;
}

}  // namespace detail

/// PPO update for one agent: epochs of shuffled minibatch Adam steps on the
/// clipped loss, aborting once the approximate KL passes the ceiling.
inline AgentUpdateStats train_agent(PolicyHandle& policy, AdamState& opt,
                                    const TrajectoryBatch& batch, const PPOConfig& cfg,
                                    Rng shuffle_rng) {
  cfg.validate();
  AgentUpdateStats stats;
  if (batch.steps.empty()) return stats;

  GAEResult gae = compute_gae(batch, cfg.gamma, cfg.gae_lambda);
  normalize_advantages(gae.advantages);

  std::vector<std::size_t> order(batch.steps.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<double> grad(policy.params.size(), 0.0);
  PolicyWorkspace ws;
  double agg_loss = 0, agg_pl = 0, agg_vl = 0, agg_h = 0, agg_clip = 0, agg_kl = 0;

  for (int epoch = 0; epoch < cfg.epochs_per_update && !stats.aborted; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.minibatch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.minibatch_size);
      std::vector<std::size_t> idx(order.begin() + start, order.begin() + end);
      const PPOLossDiag d =
          detail::minibatch_pass(policy, batch, gae.advantages, gae.returns, idx, cfg, grad, ws);
      if (d.approx_kl > cfg.kl_ceiling) {
        stats.aborted = true;  // divergence guard: keep the pre-step parameters
        break;
      }
      opt.step(policy.params, grad, cfg.learning_rate);
      for (double p : policy.params)
        if (!std::isfinite(p)) throw std::runtime_error("train: non-finite parameters");
      ++stats.minibatches;
      agg_loss += d.loss;
      agg_pl += d.policy_loss;
      agg_vl += d.value_loss;
      agg_h += d.entropy;
      agg_clip += d.clip_fraction;
      agg_kl += d.approx_kl;
    }
  }
  if (stats.minibatches > 0) {
    stats.loss = agg_loss / stats.minibatches;
    stats.policy_loss = agg_pl / stats.minibatches;
    stats.value_loss = agg_vl / stats.minibatches;
    stats.entropy = agg_h / stats.minibatches;
    stats.clip_fraction = agg_clip / stats.minibatches;
    stats.approx_kl = agg_kl / stats.minibatches;
  }
  double ret = 0.0;
  int episodes = 0;
  double acc = 0.0;
  for (const Transition& tr : batch.steps) {
    acc += tr.reward;
    if (tr.done) {
      ret += acc;
      acc = 0.0;
      ++episodes;
    }
  }
  stats.mean_episode_return = episodes > 0 ? ret / episodes : acc;
  return stats;
}

/// Decentralized update: each agent optimizes its own parameters on its own
/// batch; no gradients or parameters cross agents.
inline std::vector<AgentUpdateStats> train_update(std::vector<PolicyHandle*> policies,
                                                  std::vector<AdamState*> optimizers,
                                                  const std::vector<TrajectoryBatch>& batches,
                                                  const PPOConfig& cfg, std::uint64_t seed) {
  if (policies.size() != batches.size() || optimizers.size() != batches.size())
    throw std::invalid_argument("train_update: one batch and optimizer per agent");
  std::vector<AgentUpdateStats> stats;
  stats.reserve(policies.size());
  for (std::size_t i = 0; i < policies.size(); ++i)
    stats.push_back(train_agent(*policies[i], *optimizers[i], batches[i], cfg,
                                Rng(mix_seed({seed, 0x7368756646ULL, i}))));
  return stats;
}

}  // namespace agrisim
