#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "agrisim/rng.hpp"

namespace agrisim {

// History-conditioned stochastic policy over a multi-discrete action space.
// Backend: a linear per-step embedding of (observation, action one-hot,
// reward) tuples, mean-pooled over the last t_mem steps, concatenated with the
// current observation, one tanh hidden layer, then per-factor softmax heads
// and a scalar value head. The descriptor admits other backends; this one is
// sized for CPU training.
struct ArchDescriptor {
  int obs_dim = 0;
  std::vector<int> factor_sizes;
  int t_mem = 8;
  int embed_dim = 16;
  int hidden_dim = 64;

  int onehot_dim() const {
    return std::accumulate(factor_sizes.begin(), factor_sizes.end(), 0);
  }
  int entry_dim() const { return obs_dim + onehot_dim() + 1; }
  int trunk_in() const { return obs_dim + embed_dim; }
  int param_count() const {
    int n = embed_dim * entry_dim() + embed_dim;      // embed
    n += hidden_dim * trunk_in() + hidden_dim;        // trunk
    for (int f : factor_sizes) n += f * hidden_dim + f;  // heads
    n += hidden_dim + 1;                              // value
    return n;
  }
  bool operator==(const ArchDescriptor& o) const {
    return obs_dim == o.obs_dim && factor_sizes == o.factor_sizes && t_mem == o.t_mem &&
           embed_dim == o.embed_dim && hidden_dim == o.hidden_dim;
  }
  void validate() const {
    if (obs_dim < 1) throw std::invalid_argument("ArchDescriptor: obs_dim must be >= 1");
    if (factor_sizes.empty()) throw std::invalid_argument("ArchDescriptor: no action factors");
    for (int f : factor_sizes)
      if (f < 1) throw std::invalid_argument("ArchDescriptor: factor sizes must be >= 1");
    if (t_mem < 1 || embed_dim < 1 || hidden_dim < 1)
      throw std::invalid_argument("ArchDescriptor: dims must be >= 1");
  }
};

namespace detail {

struct ParamLayout {
  int we = 0, be = 0, w1 = 0, b1 = 0;
  std::vector<int> wf, bf;
  int wv = 0, bv = 0, total = 0;

  explicit ParamLayout(const ArchDescriptor& a) {
    int off = 0;
    we = off; off += a.embed_dim * a.entry_dim();
    be = off; off += a.embed_dim;
    w1 = off; off += a.hidden_dim * a.trunk_in();
    b1 = off; off += a.hidden_dim;
    for (int f : a.factor_sizes) {
      wf.push_back(off); off += f * a.hidden_dim;
      bf.push_back(off); off += f;
    }
    wv = off; off += a.hidden_dim;
    bv = off; off += 1;
    total = off;
  }
};

}  // namespace detail

constexpr double kLogitClamp = 20.0;  // keeps every action probability > 0

struct ActionDistribution {
  std::vector<std::vector<double>> probs;      // per factor, each sums to 1
  std::vector<std::vector<double>> log_probs;  // log of the above, finite

  double entropy() const {
    double h = 0.0;
    for (std::size_t f = 0; f < probs.size(); ++f)
      for (std::size_t j = 0; j < probs[f].size(); ++j)
        h -= probs[f][j] * log_probs[f][j];
    return h;
  }
  double log_prob_of(const std::vector<int>& choice) const {
    if (choice.size() != probs.size())
      throw std::invalid_argument("log_prob_of: factor count mismatch");
    double lp = 0.0;
    for (std::size_t f = 0; f < choice.size(); ++f) lp += log_probs[f][choice[f]];
    return lp;
  }
};

// Ring of (observation, action one-hot, reward) entries, newest last. Missing
// entries at episode start act as zeros in the pooled mean. The newest entry
// is the current step; its action/reward stay zero until completed.
class HistoryWindow {
 public:
  HistoryWindow() = default;
  HistoryWindow(int obs_dim, int onehot_dim, int t_mem)
      : obs_dim_(obs_dim), onehot_dim_(onehot_dim), t_mem_(t_mem),
        slots_(t_mem, std::vector<double>(obs_dim + onehot_dim + 1, 0.0)) {}

  int length() const { return filled_; }
  int capacity() const { return t_mem_; }
  int entry_dim() const { return obs_dim_ + onehot_dim_ + 1; }

  void clear() {
    for (auto& s : slots_) std::fill(s.begin(), s.end(), 0.0);
    filled_ = 0;
    head_ = 0;
  }

  void push_observation(const std::vector<double>& obs_flat) {
    if (static_cast<int>(obs_flat.size()) != obs_dim_)
      throw std::invalid_argument("HistoryWindow: observation size mismatch");
    head_ = (head_ + 1) % t_mem_;
    auto& slot = slots_[head_];
    std::copy(obs_flat.begin(), obs_flat.end(), slot.begin());
    std::fill(slot.begin() + obs_dim_, slot.end(), 0.0);
    if (filled_ < t_mem_) ++filled_;
  }

  /// Complete the newest entry once the step's action and reward are known.
  void complete_step(const std::vector<int>& factors, const std::vector<int>& factor_sizes,
                     double reward) {
    if (filled_ == 0) throw std::logic_error("HistoryWindow: no entry to complete");
    auto& slot = slots_[head_];
    int off = obs_dim_;
    for (std::size_t f = 0; f < factors.size(); ++f) {
      slot[off + factors[f]] = 1.0;
      off += factor_sizes[f];
    }
    slot[obs_dim_ + onehot_dim_] = reward;
  }

  const std::vector<double>& newest() const { return slots_[head_]; }

  /// Mean over all t_mem slots (absent entries count as zero vectors).
  void mean_entry(std::vector<double>& out) const {
    out.assign(entry_dim(), 0.0);
    for (const auto& s : slots_)
      for (int i = 0; i < entry_dim(); ++i) out[i] += s[i];
    for (auto& v : out) v /= t_mem_;
  }

 private:
  int obs_dim_ = 0;
  int onehot_dim_ = 0;
  int t_mem_ = 1;
  std::vector<std::vector<double>> slots_;
  int filled_ = 0;
  int head_ = 0;
};

struct PolicyHandle {
  ArchDescriptor arch;
  std::vector<double> params;
  Rng sampler;

  static PolicyHandle init(const ArchDescriptor& arch, std::uint64_t seed) {
    arch.validate();
    PolicyHandle h;
    h.arch = arch;
    h.params.assign(arch.param_count(), 0.0);
    h.sampler = Rng(mix_seed({seed, 0x706f6cULL}));
    Rng init_rng(mix_seed({seed, 0x696e6974ULL}));
    const detail::ParamLayout lay(arch);
    auto fill = [&](int off, int rows, int cols, double scale) {
      for (int i = 0; i < rows * cols; ++i) h.params[off + i] = init_rng.normal() * scale;
    };
    fill(lay.we, arch.embed_dim, arch.entry_dim(), 1.0 / std::sqrt(arch.entry_dim()));
    fill(lay.w1, arch.hidden_dim, arch.trunk_in(), 1.0 / std::sqrt(arch.trunk_in()));
    // head logits scaled down so the initial policy is near uniform
    for (std::size_t f = 0; f < arch.factor_sizes.size(); ++f)
      fill(lay.wf[f], arch.factor_sizes[f], arch.hidden_dim,
           0.01 / std::sqrt(arch.hidden_dim));
    fill(lay.wv, 1, arch.hidden_dim, 1.0 / std::sqrt(arch.hidden_dim));
    return h;
  }
};

struct ForwardResult {
  ActionDistribution dist;
  double value = 0.0;
};

// Cached activations for one forward pass; reused across backward.
struct PolicyWorkspace {
  std::vector<double> obs, mean;  // inputs
  std::vector<double> embed, hidden;
  ActionDistribution dist;
  std::vector<std::vector<char>> clamped;
  double value = 0.0;
};

namespace detail {

inline void softmax_from_logits(const std::vector<double>& logits, std::vector<double>& probs,
                                std::vector<double>& log_probs) {
  double mx = logits[0];
  for (double l : logits) mx = std::max(mx, l);
  double z = 0.0;
  probs.resize(logits.size());
  log_probs.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) z += std::exp(logits[i] - mx);
  const double log_z = std::log(z) + mx;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    log_probs[i] = logits[i] - log_z;
    probs[i] = std::exp(log_probs[i]);
  }
}

}  // namespace detail

/// Forward pass from explicit inputs (current observation + pooled history
/// mean). Pure in (params, inputs); throws on non-finite outputs.
inline ForwardResult policy_forward_inputs(const PolicyHandle& h, const std::vector<double>& obs,
                                           const std::vector<double>& mean,
                                           PolicyWorkspace* ws = nullptr) {
  const ArchDescriptor& a = h.arch;
  if (static_cast<int>(obs.size()) != a.obs_dim ||
      static_cast<int>(mean.size()) != a.entry_dim())
    throw std::invalid_argument("policy_forward: input size mismatch");
  const detail::ParamLayout lay(a);
  const double* P = h.params.data();

  std::vector<double> embed(a.embed_dim);
  for (int i = 0; i < a.embed_dim; ++i) {
    const double* row = P + lay.we + static_cast<std::size_t>(i) * a.entry_dim();
    double acc = P[lay.be + i];
    for (int j = 0; j < a.entry_dim(); ++j) acc += row[j] * mean[j];
    embed[i] = acc;
  }

  std::vector<double> hidden(a.hidden_dim);
  for (int i = 0; i < a.hidden_dim; ++i) {
    const double* row = P + lay.w1 + static_cast<std::size_t>(i) * a.trunk_in();
    double acc = P[lay.b1 + i];
    for (int j = 0; j < a.obs_dim; ++j) acc += row[j] * obs[j];
    for (int j = 0; j < a.embed_dim; ++j) acc += row[a.obs_dim + j] * embed[j];
    hidden[i] = std::tanh(acc);
  }

  ForwardResult res;
  res.dist.probs.resize(a.factor_sizes.size());
  res.dist.log_probs.resize(a.factor_sizes.size());
  std::vector<std::vector<char>> clamped(a.factor_sizes.size());
  std::vector<double> logits;
  for (std::size_t f = 0; f < a.factor_sizes.size(); ++f) {
    const int n = a.factor_sizes[f];
    logits.resize(n);
    clamped[f].assign(n, 0);
    for (int i = 0; i < n; ++i) {
      const double* row = P + lay.wf[f] + static_cast<std::size_t>(i) * a.hidden_dim;
      double acc = P[lay.bf[f] + i];
      for (int j = 0; j < a.hidden_dim; ++j) acc += row[j] * hidden[j];
      if (acc > kLogitClamp) { acc = kLogitClamp; clamped[f][i] = 1; }
      if (acc < -kLogitClamp) { acc = -kLogitClamp; clamped[f][i] = 1; }
      logits[i] = acc;
      if (!std::isfinite(acc))
        throw std::runtime_error("policy_forward: non-finite logit (diverged parameters)");
    }
    detail::softmax_from_logits(logits, res.dist.probs[f], res.dist.log_probs[f]);
  }

  double value = P[lay.bv];
  for (int j = 0; j < a.hidden_dim; ++j) value += P[lay.wv + j] * hidden[j];
  if (!std::isfinite(value))
    throw std::runtime_error("policy_forward: non-finite value (diverged parameters)");
  res.value = value;

  if (ws) {
    ws->obs = obs;
    ws->mean = mean;
    ws->embed = std::move(embed);
    ws->hidden = std::move(hidden);
    ws->dist = res.dist;
    ws->clamped = std::move(clamped);
    ws->value = value;
  }
  return res;
}

/// Forward pass from a history window (the spec-facing entry point).
inline ForwardResult policy_forward(const PolicyHandle& h, const HistoryWindow& history) {
  std::vector<double> mean;
  history.mean_entry(mean);
  std::vector<double> obs(history.newest().begin(), history.newest().begin() + h.arch.obs_dim);
  if (history.length() == 0) obs.assign(h.arch.obs_dim, 0.0);
  return policy_forward_inputs(h, obs, mean);
}

/// Accumulate d(objective)/d(params) for one sample into `grad`, where the
/// per-sample objective is c_logp * log pi(action) + c_value * V + c_entropy * H.
/// Requires the workspace filled by policy_forward_inputs.
inline void policy_backward(const PolicyHandle& h, const PolicyWorkspace& ws,
                            const std::vector<int>& action, double c_logp, double c_value,
                            double c_entropy, std::vector<double>& grad) {
  const ArchDescriptor& a = h.arch;
  if (grad.size() != h.params.size())
    throw std::invalid_argument("policy_backward: gradient buffer size mismatch");
  const detail::ParamLayout lay(a);
  const double* P = h.params.data();
  double* G = grad.data();

  std::vector<double> dhidden(a.hidden_dim, 0.0);
  std::vector<double> dlogits;
  for (std::size_t f = 0; f < a.factor_sizes.size(); ++f) {
    const int n = a.factor_sizes[f];
    const auto& p = ws.dist.probs[f];
    const auto& lp = ws.dist.log_probs[f];
    double hf = 0.0;
    for (int i = 0; i < n; ++i) hf -= p[i] * lp[i];
    dlogits.resize(n);
    for (int i = 0; i < n; ++i) {
      double d = 0.0;
      if (c_logp != 0.0) d += c_logp * ((i == action[f] ? 1.0 : 0.0) - p[i]);
      if (c_entropy != 0.0) d += c_entropy * (-p[i] * (lp[i] + hf));
      if (ws.clamped[f][i]) d = 0.0;
      dlogits[i] = d;
    }
    for (int i = 0; i < n; ++i) {
      const double d = dlogits[i];
      if (d == 0.0) continue;
      const double* row = P + lay.wf[f] + static_cast<std::size_t>(i) * a.hidden_dim;
      double* grow = G + lay.wf[f] + static_cast<std::size_t>(i) * a.hidden_dim;
      for (int j = 0; j < a.hidden_dim; ++j) {
        grow[j] += d * ws.hidden[j];
        dhidden[j] += d * row[j];
      }
      G[lay.bf[f] + i] += d;
    }
  }

  if (c_value != 0.0) {
    for (int j = 0; j < a.hidden_dim; ++j) {
      G[lay.wv + j] += c_value * ws.hidden[j];
      dhidden[j] += c_value * P[lay.wv + j];
    }
    G[lay.bv] += c_value;
  }

  std::vector<double> dembed(a.embed_dim, 0.0);
  for (int i = 0; i < a.hidden_dim; ++i) {
    const double dpre = dhidden[i] * (1.0 - ws.hidden[i] * ws.hidden[i]);
    if (dpre == 0.0) continue;
    const double* row = P + lay.w1 + static_cast<std::size_t>(i) * a.trunk_in();
    double* grow = G + lay.w1 + static_cast<std::size_t>(i) * a.trunk_in();
    for (int j = 0; j < a.obs_dim; ++j) grow[j] += dpre * ws.obs[j];
    for (int j = 0; j < a.embed_dim; ++j) {
      grow[a.obs_dim + j] += dpre * ws.embed[j];
      dembed[j] += dpre * row[a.obs_dim + j];
    }
    G[lay.b1 + i] += dpre;
  }

  for (int i = 0; i < a.embed_dim; ++i) {
    const double d = dembed[i];
    if (d == 0.0) continue;
    double* grow = G + lay.we + static_cast<std::size_t>(i) * a.entry_dim();
    for (int j = 0; j < a.entry_dim(); ++j) grow[j] += d * ws.mean[j];
    G[lay.be + i] += d;
  }
}

struct SampledAction {
  std::vector<int> factors;
  double log_prob = 0.0;
};

/// Sample every factor; the joint log-probability is the sum over factors.
inline SampledAction sample_factors(const ActionDistribution& dist, Rng& rng) {
  SampledAction out;
  out.factors.reserve(dist.probs.size());
  for (std::size_t f = 0; f < dist.probs.size(); ++f) {
    const auto& p = dist.probs[f];
    const double u = rng.uniform();
    double acc = 0.0;
    int pick = static_cast<int>(p.size()) - 1;
    for (std::size_t i = 0; i < p.size(); ++i) {
      acc += p[i];
      if (u < acc) { pick = static_cast<int>(i); break; }
    }
    out.factors.push_back(pick);
    out.log_prob += dist.log_probs[f][pick];
  }
  return out;
}

// ---- serialization: versioned binary blob with an architecture header ----

inline void save_policy(const PolicyHandle& h, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_policy: cannot write " + path);
  const char magic[8] = {'A', 'G', 'S', 'I', 'M', 'P', 'O', 'L'};
  f.write(magic, 8);
  auto w32 = [&](std::int32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); };
  w32(1);  // format version
  w32(h.arch.obs_dim);
  w32(h.arch.t_mem);
  w32(h.arch.embed_dim);
  w32(h.arch.hidden_dim);
  w32(static_cast<std::int32_t>(h.arch.factor_sizes.size()));
  for (int s : h.arch.factor_sizes) w32(s);
  const std::uint64_t n = h.params.size();
  f.write(reinterpret_cast<const char*>(&n), 8);
  f.write(reinterpret_cast<const char*>(h.params.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  if (!f) throw std::runtime_error("save_policy: write failed for " + path);
}

inline PolicyHandle load_policy(const std::string& path, std::uint64_t sampler_seed = 0) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_policy: cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, "AGSIMPOL", 8) != 0)
    throw std::runtime_error("load_policy: bad magic in " + path);
  auto r32 = [&]() {
    std::int32_t v = 0;
    f.read(reinterpret_cast<char*>(&v), 4);
    return v;
  };
  const std::int32_t version = r32();
  if (version != 1) throw std::runtime_error("load_policy: unsupported version");
  PolicyHandle h;
  h.arch.obs_dim = r32();
  h.arch.t_mem = r32();
  h.arch.embed_dim = r32();
  h.arch.hidden_dim = r32();
  const std::int32_t nf = r32();
  for (int i = 0; i < nf; ++i) h.arch.factor_sizes.push_back(r32());
  h.arch.validate();
  std::uint64_t n = 0;
  f.read(reinterpret_cast<char*>(&n), 8);
  if (n != static_cast<std::uint64_t>(h.arch.param_count()))
    throw std::runtime_error("load_policy: parameter count mismatch");
  h.params.resize(n);
  f.read(reinterpret_cast<char*>(h.params.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!f) throw std::runtime_error("load_policy: truncated file " + path);
  h.sampler = Rng(mix_seed({sampler_seed, 0x6c6f6164ULL}));
  return h;
}

}  // namespace agrisim
