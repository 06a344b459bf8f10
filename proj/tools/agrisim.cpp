// Command-line front end: scripted/checkpointed simulation, PPO training with
// optional social learning, parameter sweeps, and the reduced mean-field model.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "agrisim/meanfield.hpp"
#include "agrisim/metrics.hpp"
#include "agrisim/scripted_policies.hpp"
#include "agrisim/sweep.hpp"
#include "agrisim/trainer.hpp"

namespace fs = std::filesystem;
using namespace agrisim;

namespace {

struct GlobalOpts {
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool seed_set = false;

  KVConfig load() const {
    return config_path.empty() ? KVConfig{} : KVConfig::load(config_path);
  }
  std::string out(const std::string& name) const {
    fs::create_directories(out_dir);
    return (fs::path(out_dir) / name).string();
  }
};

PolicyFn policy_from_name(const std::string& name, std::uint64_t seed) {
  if (name == "farmer" || name == "forager" || name == "random")
    return make_named_policy(name, seed);
  // anything else is a checkpoint path
  auto handle = std::make_shared<PolicyHandle>(load_policy(name, seed));
  return [handle](int, const HistoryWindow& h) {
    const ForwardResult fwd = policy_forward(*handle, h);
    return AgentAction::from_factors(sample_factors(fwd.dist, handle->sampler).factors);
  };
}

int cmd_simulate(const GlobalOpts& g, const std::string& policy, int episodes, int agents,
                 bool save_trace) {
  KVConfig kv = g.load();
  EnvConfig env = EnvConfig::from_kv(kv);
  if (g.seed_set) env.rng_seed = g.seed;

  std::ofstream mf(g.out("metrics.csv"), std::ios::binary);
  mf << "episode,seed,mean_return,p1_abundance,p1_last_summer,p3_foraging,watering_events,"
        "p2_removals,movement_rate,neighbourhood_mean\n";
  double total_return = 0.0;
  for (int e = 0; e < episodes; ++e) {
    const std::uint64_t ep_seed = mix_seed({env.rng_seed, static_cast<std::uint64_t>(e)});
    const EpisodeTrace trace =
        run_episode(env, agents, policy_from_name(policy, ep_seed), ep_seed, 8);
    if (save_trace && e == 0) trace.save_csv(g.out("trace.csv"));
    const EpisodeMetrics m = collect_episode_metrics(trace);
    total_return += m.mean_return;
    mf << e << ',' << ep_seed << ',' << fmt_double(m.mean_return) << ','
       << fmt_double(m.p1_abundance) << ',' << fmt_double(m.p1_last_summer) << ','
       << m.p3_foraging << ',' << m.watering_events << ',' << m.p2_removals << ','
       << fmt_double(m.movement_rate) << ',' << fmt_double(m.neighbourhood_mean) << '\n';
  }
  std::printf("simulate: %d episode(s), policy=%s, mean return %.4f\n", episodes, policy.c_str(),
              total_return / episodes);
  std::printf("wrote %s\n", g.out("metrics.csv").c_str());
  return 0;
}

int cmd_train(const GlobalOpts& g, int updates, int agents, bool social, int checkpoint_every) {
  KVConfig kv = g.load();
  TrainerConfig tc = TrainerConfig::from_kv(kv);
  if (updates > 0) tc.updates = updates;
  if (agents > 0) tc.pop.n0 = agents;
  tc.pop.sl_enabled = social;
  if (g.seed_set) tc.seed = g.seed;
  tc.metrics_csv = g.out("train_metrics.csv");
  tc.checkpoint_every = checkpoint_every;
  tc.checkpoint_prefix = g.out("checkpoint");

  Trainer trainer(tc);
  trainer.run();
  for (const auto& e : trainer.population().roster)
    save_policy(e.policy, g.out("policy_final_a" + std::to_string(e.id) + ".policy"));
  if (social) {
    write_events_csv(trainer.events(), g.out("events.csv"));
    write_lineage(trainer.population(), g.out("lineage.txt"));
  }
  std::printf("train: %d update(s), final population %zu%s\n", tc.updates,
              trainer.population().roster.size(), trainer.extinct() ? " (extinct)" : "");
  std::printf("wrote %s\n", tc.metrics_csv.c_str());
  return 0;
}

int cmd_sweep(const GlobalOpts& g, const std::string& spec_path, int threads) {
  KVConfig base = g.load();
  KVConfig spec_kv = spec_path.empty() ? base : KVConfig::load(spec_path);
  SweepSpec spec = SweepSpec::from_kv(spec_kv);
  if (g.seed_set) spec.seed = g.seed;
  const auto rows = run_sweep(spec, base, threads);
  write_sweep_csv(spec, rows, g.out("sweep.csv"));
  int failed = 0;
  for (const auto& r : rows)
    if (!r.error.empty()) ++failed;
  std::printf("sweep: %zu row(s), %d failed\n", rows.size(), failed);
  std::printf("wrote %s\n", g.out("sweep.csv").c_str());
  return 0;
}

int cmd_meanfield(const GlobalOpts& g, double t_end, bool constant_mu, bool print_equilibria) {
  KVConfig kv = g.load();
  mf::MFParams params = mf::MFParams::from_kv(kv);
  mf::IntegratorOptions opt;
  opt.out_dt = kv.get_double("mf.out_dt", 2.0);

  if (print_equilibria) {
    for (const auto& eq : mf::equilibria(params))
      std::printf("equilibrium A=%.6f P1=%.6f P3=%.6f max_re=%.6f %s\n", eq.state.A, eq.state.P1,
                  eq.state.P3, eq.max_real_eig,
                  eq.stability == mf::Stability::Stable
                      ? "stable"
                      : (eq.stability == mf::Stability::Unstable ? "unstable" : "marginal"));
  }

  if (constant_mu) {
    const mf::MFState init = mf::initial_near_foraging(params, params.mu);
    const mf::Trajectory traj = mf::integrate(init, params, t_end, opt);
    mf::write_trajectory_csv(traj, g.out("meanfield.csv"));
    std::printf("meanfield: constant mu=%.4f, t_end=%.1f, final A=%.6f P1=%.6f P3=%.6f\n",
                params.mu, t_end, traj.back().A, traj.back().P1, traj.back().P3);
  } else {
    const mf::ForcingSchedule sched = mf::ForcingSchedule::from_kv(kv);
    const mf::HysteresisResult res = mf::hysteresis_sweep(params, sched, 0.5, opt);
    mf::write_trajectory_csv(res.traj, g.out("meanfield.csv"));
    std::printf("meanfield: triangular mu %.3f -> %.3f -> %.3f over %.0f + %.0f\n", sched.mu_max,
                sched.mu_min, sched.mu_max, sched.t_down, sched.t_up);
    if (res.mu_forward)
      std::printf("  forward transition at mu = %.6f (crossings on down-ramp: %d)\n",
                  *res.mu_forward, res.down_crossings);
    else
      std::printf("  no forward transition detected\n");
    std::printf("  locked_in=%s  P1 peak %.4f, end %.4f, A end %.6f\n",
                res.locked_in ? "true" : "false", res.p1_peak, res.p1_end, res.a_end);
  }
  std::printf("wrote %s\n", g.out("meanfield.csv").c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"agrisim: seasonal grid ecology with learning agents"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand name

  GlobalOpts g;
  app.add_option("--config", g.config_path, "key = value config file");
  app.add_option("--out", g.out_dir, "output directory");
  auto* seed_opt = app.add_option("--seed", g.seed, "seed override");

  auto* sim = app.add_subcommand("simulate", "run scripted or checkpointed policies");
  std::string policy = "farmer";
  int episodes = 1, agents = 1;
  bool save_trace = true;
  sim->add_option("--policy", policy, "farmer | forager | random | <checkpoint path>");
  sim->add_option("--episodes", episodes, "episode count");
  sim->add_option("--agents", agents, "agents per episode");
  sim->add_flag("!--no-trace", save_trace, "skip the per-step trace file");

  auto* tr = app.add_subcommand("train", "decentralized PPO training");
  int updates = 0, tr_agents = 0, checkpoint_every = 0;
  bool social = false;
  tr->add_option("--updates", updates, "number of PPO updates");
  tr->add_option("--agents", tr_agents, "initial population size");
  tr->add_flag("--sl", social, "enable social learning (cloning)");
  tr->add_option("--checkpoint-every", checkpoint_every, "updates between checkpoints");

  auto* sw = app.add_subcommand("sweep", "grid experiment from a sweep spec");
  std::string spec_path;
  int threads = 1;
  sw->add_option("--spec", spec_path, "sweep spec file (defaults to --config)");
  sw->add_option("--threads", threads, "worker threads");

  auto* mfc = app.add_subcommand("meanfield", "reduced model: ramp run or fixed-mu integration");
  double t_end = 1000.0;
  bool constant_mu = false, print_eq = false;
  mfc->add_option("--t-end", t_end, "horizon for --constant-mu runs");
  mfc->add_flag("--constant-mu", constant_mu, "integrate at fixed mu instead of the ramp");
  mfc->add_flag("--equilibria", print_eq, "print boundary equilibria and stability");

  CLI11_PARSE(app, argc, argv);
  g.seed_set = seed_opt->count() > 0;

  try {
    if (sim->parsed()) return cmd_simulate(g, policy, episodes, agents, save_trace);
    if (tr->parsed()) return cmd_train(g, updates, tr_agents, social, checkpoint_every);
    if (sw->parsed()) return cmd_sweep(g, spec_path, threads);
    if (mfc->parsed()) return cmd_meanfield(g, t_end, constant_mu, print_eq);
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 1;
  }
  return 0;
}
