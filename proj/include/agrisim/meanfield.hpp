#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "agrisim/config.hpp"
#include "agrisim/rng.hpp"

namespace agrisim {
namespace mf {

enum class SearchCostForm {
  InverseDensity,  // s(P3) = s_scale / max(P3, floor)
  Linear,          // s(P3) = 1 - P3
  Saturating,      // s(P3) = 1 / (1 + P3)
};

inline const char* to_string(SearchCostForm f) {
  switch (f) {
    case SearchCostForm::InverseDensity: return "inverse_density";
    case SearchCostForm::Linear: return "linear";
    case SearchCostForm::Saturating: return "saturating";
  }
  return "?";
}
inline SearchCostForm search_cost_form_from_string(const std::string& s) {
  if (s == "inverse_density") return SearchCostForm::InverseDensity;
  if (s == "linear") return SearchCostForm::Linear;
  if (s == "saturating") return SearchCostForm::Saturating;
  throw std::invalid_argument("unknown search cost form: " + s);
}

// Reduced (A, P1, P3) model. Defaults are the canonical parameter set used by
// the hysteresis runs; only f1_0 - f2_0 matters for the dynamics, the split is
// reported for payoff output.
struct MFParams {
  double mu = 1.2;      // wild plant turnover
  double eta_F = 1.0;   // forager encounter rate
  double eta_A = 1.4;   // agriculturalist encounter rate
  double kappa = 1.0;   // harvest intensity per encounter
  double delta_f0 = -0.6;
  double v = 0.35;      // niche construction intensity
  double chi = 1.0;     // facilitation strength
  double u = 0.6;       // weeding effort
  double omega = 1.0;   // weeding efficiency
  double c_u = 0.9;
  double c_v = 2.0;
  double c_s = 1.0;
  double b3 = 1.0;      // wild plant benefit, shared by both strategies
  double f2_0 = 1.0;
  double f1_0 = 0.4;    // kept equal to f2_0 + delta_f0

  SearchCostForm s_form = SearchCostForm::InverseDensity;
  double s_scale = 0.5;

  static constexpr double kP3Floor = 1e-9;

  double search_cost(double p3) const {
    switch (s_form) {
      case SearchCostForm::InverseDensity: return s_scale / std::max(p3, kP3Floor);
      case SearchCostForm::Linear: return 1.0 - p3;
      case SearchCostForm::Saturating: return 1.0 / (1.0 + p3);
    }
    return 0.0;
  }

  double encounter_rate(double a) const { return eta_F + (eta_A - eta_F) * a; }
  double fitness_bias(double a) const { return delta_f0 + v * chi * a; }

  void validate() const {
    for (double r : {mu, eta_F, eta_A, kappa, v, chi, u, omega, c_u, c_v, c_s, s_scale})
      if (r < 0.0) throw std::invalid_argument("MFParams: rates and costs must be >= 0");
    if (std::abs((f1_0 - f2_0) - delta_f0) > 1e-12)
      throw std::invalid_argument("MFParams: f1_0 - f2_0 must equal delta_f0");
  }

  void to_kv(KVConfig& kv) const {
    kv.set("mf.mu", mu);
    kv.set("mf.eta_F", eta_F);
    kv.set("mf.eta_A", eta_A);
    kv.set("mf.kappa", kappa);
    kv.set("mf.delta_f0", delta_f0);
    kv.set("mf.v", v);
    kv.set("mf.chi", chi);
    kv.set("mf.u", u);
    kv.set("mf.omega", omega);
    kv.set("mf.c_u", c_u);
    kv.set("mf.c_v", c_v);
    kv.set("mf.c_s", c_s);
    kv.set("mf.b3", b3);
    kv.set("mf.f2_0", f2_0);
    kv.set("mf.s_form", std::string(to_string(s_form)));
    kv.set("mf.s_scale", s_scale);
  }
  static MFParams from_kv(const KVConfig& kv) {
    MFParams p;
    p.mu = kv.get_double("mf.mu", p.mu);
    p.eta_F = kv.get_double("mf.eta_F", p.eta_F);
    p.eta_A = kv.get_double("mf.eta_A", p.eta_A);
    p.kappa = kv.get_double("mf.kappa", p.kappa);
    p.delta_f0 = kv.get_double("mf.delta_f0", p.delta_f0);
    p.v = kv.get_double("mf.v", p.v);
    p.chi = kv.get_double("mf.chi", p.chi);
    p.u = kv.get_double("mf.u", p.u);
    p.omega = kv.get_double("mf.omega", p.omega);
    p.c_u = kv.get_double("mf.c_u", p.c_u);
    p.c_v = kv.get_double("mf.c_v", p.c_v);
    p.c_s = kv.get_double("mf.c_s", p.c_s);
    p.b3 = kv.get_double("mf.b3", p.b3);
    p.f2_0 = kv.get_double("mf.f2_0", p.f2_0);
    p.f1_0 = p.f2_0 + p.delta_f0;
    p.s_form = search_cost_form_from_string(
        kv.get_string("mf.s_form", std::string(to_string(p.s_form))));
    p.s_scale = kv.get_double("mf.s_scale", p.s_scale);
    p.validate();
    return p;
  }
};

struct MFState {
  double A = 0.0;
  double P1 = 0.0;
  double P3 = 0.0;
  double P2() const { return 1.0 - P1 - P3; }

  double simplex_violation() const {
    double v = 0.0;
    v = std::max(v, -A);
    v = std::max(v, A - 1.0);
    v = std::max(v, -P1);
    v = std::max(v, -P3);
    v = std::max(v, P1 + P3 - 1.0);
    return v;
  }
};

struct MFDeriv {
  double dA = 0.0;
  double dP1 = 0.0;
  double dP3 = 0.0;
};

struct Payoffs {
  double pi_A = 0.0;
  double pi_F = 0.0;
};

inline Payoffs mf_payoffs(const MFState& s, const MFParams& p) {
  const double p2 = s.P2();
  Payoffs out;
  out.pi_A = p.f1_0 * s.P1 + p.b3 * s.P3 - p.c_u * p.u * p2 - p.c_v * p.v;
  out.pi_F = p.f2_0 * s.P1 + p.b3 * s.P3 - p.c_s * p.search_cost(s.P3);
  return out;
}

namespace detail {

// Raw right-hand side, callable slightly off the simplex (needed for
// Runge-Kutta stage points and finite-difference Jacobians).
inline MFDeriv rhs(const MFState& s, const MFParams& p) {
  const double p2 = s.P2();
  const double H = p.encounter_rate(s.A);
  const double replacement = p.kappa * H * s.P3 / std::max(1.0 - s.P3, 1e-9);
  MFDeriv d;
  d.dP3 = p.mu * (1.0 - s.P3) - p.kappa * H * s.P3;
  d.dP1 = s.P1 * p2 * p.fitness_bias(s.A) + p.u * p.omega * s.A * p2 - p.mu * s.P1 +
          replacement * s.P1;
  const Payoffs pay = mf_payoffs(s, p);
  d.dA = s.A * (1.0 - s.A) * (pay.pi_A - pay.pi_F);
  return d;
}

}  // namespace detail

/// Vector field of the reduced model. Hard error when the state is off the
/// admissible simplex by more than 1e-6.
inline MFDeriv mf_derivatives(const MFState& s, const MFParams& p) {
  if (s.simplex_violation() > 1e-6)
    throw std::domain_error("mf_derivatives: state off the simplex");
  return detail::rhs(s, p);
}

// Triangular forcing of mu: down-ramp then up-ramp, constant afterwards.
struct ForcingSchedule {
  double mu_max = 1.2;
  double mu_min = 0.8;
  double t_down = 4000.0;
  double t_up = 4000.0;

  double total() const { return t_down + t_up; }
  double mu_at(double t) const {
    if (t <= 0.0) return mu_max;
    if (t < t_down) return mu_max - (mu_max - mu_min) * (t / t_down);
    if (t < t_down + t_up) return mu_min + (mu_max - mu_min) * ((t - t_down) / t_up);
    return mu_max;
  }
  void validate() const {
    if (!(mu_min < mu_max)) throw std::invalid_argument("ForcingSchedule: mu_min must be < mu_max");
    if (!(t_down > 0.0) || !(t_up > 0.0))
      throw std::invalid_argument("ForcingSchedule: ramp durations must be > 0");
  }

  void to_kv(KVConfig& kv) const {
    kv.set("sched.mu_max", mu_max);
    kv.set("sched.mu_min", mu_min);
    kv.set("sched.t_down", t_down);
    kv.set("sched.t_up", t_up);
  }
  static ForcingSchedule from_kv(const KVConfig& kv) {
    ForcingSchedule f;
    f.mu_max = kv.get_double("sched.mu_max", f.mu_max);
    f.mu_min = kv.get_double("sched.mu_min", f.mu_min);
    f.t_down = kv.get_double("sched.t_down", f.t_down);
    f.t_up = kv.get_double("sched.t_up", f.t_up);
    f.validate();
    return f;
  }
};

struct IntegratorOptions {
  double rtol = 1e-8;
  double atol = 1e-12;  // A legitimately passes through ~1e-9; keep atol below that
  double h_init = 1e-3;
  double h_max = 50.0;
  double out_dt = 1.0;  // trajectory sampling cadence
  long max_steps = 200000000L;
};

struct TrajPoint {
  double t = 0.0;
  double mu = 0.0;
  double A = 0.0, P1 = 0.0, P2 = 0.0, P3 = 0.0;
  double pi_A = 0.0, pi_F = 0.0;
};

using Trajectory = std::vector<TrajPoint>;

namespace detail {

using Vec3 = std::array<double, 3>;

inline Vec3 to_vec(const MFState& s) { return {s.A, s.P1, s.P3}; }
inline MFState to_state(const Vec3& y) { return {y[0], y[1], y[2]}; }

inline Vec3 eval(const Vec3& y, double mu, const MFParams& base) {
  MFParams p = base;
  p.mu = mu;
  const MFDeriv d = rhs(to_state(y), p);
  return {d.dA, d.dP1, d.dP3};
}

// Project back onto the simplex, but only when the drift exceeds 1e-9 so that
// legitimately tiny states (A ~ 1e-9 before the transition) are untouched.
inline void project_simplex(Vec3& y) {
  MFState s = to_state(y);
  if (s.simplex_violation() <= 1e-9) return;
  s.A = std::clamp(s.A, 0.0, 1.0);
  s.P1 = std::max(s.P1, 0.0);
  s.P3 = std::clamp(s.P3, 0.0, 1.0);
  const double tot = s.P1 + s.P3;
  if (tot > 1.0) {
    s.P1 /= tot;
    s.P3 /= tot;
  }
  y = to_vec(s);
}

inline Vec3 hermite(const Vec3& y0, const Vec3& f0, const Vec3& y1, const Vec3& f1, double h,
                    double th) {
  const double th2 = th * th, th3 = th2 * th;
  const double h00 = 2 * th3 - 3 * th2 + 1;
  const double h10 = th3 - 2 * th2 + th;
  const double h01 = -2 * th3 + 3 * th2;
  const double h11 = th3 - th2;
  Vec3 out;
  for (int i = 0; i < 3; ++i)
    out[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i];
  return out;
}

// Accepted-step callback: (t0, y0, f0, t1, y1, f1, h).
using StepCallback =
    std::function<void(double, const Vec3&, const Vec3&, double, const Vec3&, const Vec3&)>;

// Dormand-Prince 5(4) with FSAL and a standard step controller. mu_of(t)
// supplies the (possibly forced) turnover parameter. Integrates [t0, t1];
// the caller splits at forcing breakpoints.
inline void dopri5_segment(Vec3& y, double t0, double t1, const MFParams& base,
                           const std::function<double(double)>& mu_of,
                           const IntegratorOptions& opt, long& steps_used,
                           const StepCallback& on_step) {
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                          e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                          e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;

  double t = t0;
  double h = std::min(opt.h_init, t1 - t0);
  Vec3 f1v = eval(y, mu_of(t), base);

  while (t < t1) {
    if (steps_used++ > opt.max_steps)
      throw std::runtime_error("integrate: step budget exhausted at t=" + fmt_double(t));
    h = std::min({h, opt.h_max, t1 - t});
    if (!(h > std::abs(t) * 1e-14 + 1e-14))
      throw std::runtime_error("integrate: step size underflow at t=" + fmt_double(t) + " state=(" +
                               fmt_double(y[0]) + "," + fmt_double(y[1]) + "," + fmt_double(y[2]) +
                               ")");

    Vec3 k1 = f1v, k2, k3, k4, k5, k6, k7, yt;
    for (int i = 0; i < 3; ++i) yt[i] = y[i] + h * a21 * k1[i];
    k2 = eval(yt, mu_of(t + c2 * h), base);
    for (int i = 0; i < 3; ++i) yt[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    k3 = eval(yt, mu_of(t + c3 * h), base);
    for (int i = 0; i < 3; ++i) yt[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    k4 = eval(yt, mu_of(t + c4 * h), base);
    for (int i = 0; i < 3; ++i)
      yt[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    k5 = eval(yt, mu_of(t + c5 * h), base);
    for (int i = 0; i < 3; ++i)
      yt[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    k6 = eval(yt, mu_of(t + h), base);
    Vec3 y_new;
    for (int i = 0; i < 3; ++i)
      y_new[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    k7 = eval(y_new, mu_of(t + h), base);

    double err = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                            e7 * k7[i]);
      const double sc = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(y_new[i]));
      err += (e / sc) * (e / sc);
    }
    err = std::sqrt(err / 3.0);

    if (err <= 1.0) {
      project_simplex(y_new);
      if (on_step) on_step(t, y, k1, t + h, y_new, k7);
      t += h;
      y = y_new;
      f1v = k7;  // FSAL
      const double grow = err == 0.0 ? 5.0 : 0.9 * std::pow(err, -0.2);
      h *= std::clamp(grow, 0.2, 5.0);
    } else {
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
    }
  }
}

inline void run_forced(Vec3& y, const MFParams& base, const std::function<double(double)>& mu_of,
                       const std::vector<double>& breakpoints, double t_end,
                       const IntegratorOptions& opt, const StepCallback& on_step) {
  long steps_used = 0;
  double t0 = 0.0;
  for (double bp : breakpoints) {
    if (bp <= t0 || bp >= t_end) continue;
    dopri5_segment(y, t0, bp, base, mu_of, opt, steps_used, on_step);
    t0 = bp;
  }
  dopri5_segment(y, t0, t_end, base, mu_of, opt, steps_used, on_step);
}

inline TrajPoint make_point(double t, double mu, const Vec3& y, const MFParams& base) {
  MFParams p = base;
  p.mu = mu;
  const MFState s = to_state(y);
  const Payoffs pay = mf_payoffs(s, p);
  return {t, mu, s.A, s.P1, s.P2(), s.P3, pay.pi_A, pay.pi_F};
}

}  // namespace detail

/// Integrate with constant parameters over [0, t_end], sampled every out_dt.
inline Trajectory integrate(const MFState& init, const MFParams& params, double t_end,
                            const IntegratorOptions& opt = {}) {
  params.validate();
  if (init.simplex_violation() > 1e-6)
    throw std::domain_error("integrate: initial state off the simplex");
  detail::Vec3 y = detail::to_vec(init);
  auto mu_of = [&](double) { return params.mu; };
  Trajectory traj;
  traj.push_back(detail::make_point(0.0, params.mu, y, params));
  double next_sample = opt.out_dt;
  auto cb = [&](double t0, const detail::Vec3& y0, const detail::Vec3& f0, double t1,
                const detail::Vec3& y1, const detail::Vec3& f1) {
    while (next_sample <= t1 + 1e-12 && next_sample <= t_end) {
      const double th = (next_sample - t0) / (t1 - t0);
      const detail::Vec3 ys = detail::hermite(y0, f0, y1, f1, t1 - t0, std::clamp(th, 0.0, 1.0));
      traj.push_back(detail::make_point(next_sample, params.mu, ys, params));
      next_sample += opt.out_dt;
    }
  };
  detail::run_forced(y, params, mu_of, {}, t_end, opt, cb);
  if (traj.back().t < t_end - 1e-9) traj.push_back(detail::make_point(t_end, params.mu, y, params));
  return traj;
}

/// Integrate under a triangular mu schedule over [0, max(t_end, schedule end)].
inline Trajectory integrate(const MFState& init, const MFParams& params,
                            const ForcingSchedule& sched, const IntegratorOptions& opt = {}) {
  params.validate();
  sched.validate();
  if (init.simplex_violation() > 1e-6)
    throw std::domain_error("integrate: initial state off the simplex");
  detail::Vec3 y = detail::to_vec(init);
  auto mu_of = [&](double t) { return sched.mu_at(t); };
  const double t_end = sched.total();
  Trajectory traj;
  traj.push_back(detail::make_point(0.0, sched.mu_at(0.0), y, params));
  double next_sample = opt.out_dt;
  auto cb = [&](double t0, const detail::Vec3& y0, const detail::Vec3& f0, double t1,
                const detail::Vec3& y1, const detail::Vec3& f1) {
    while (next_sample <= t1 + 1e-12 && next_sample <= t_end) {
      const double th = (next_sample - t0) / (t1 - t0);
      const detail::Vec3 ys = detail::hermite(y0, f0, y1, f1, t1 - t0, std::clamp(th, 0.0, 1.0));
      traj.push_back(detail::make_point(next_sample, sched.mu_at(next_sample), ys, params));
      next_sample += opt.out_dt;
    }
  };
  detail::run_forced(y, params, mu_of, {sched.t_down}, t_end, opt, cb);
  if (traj.back().t < t_end - 1e-9)
    traj.push_back(detail::make_point(t_end, sched.mu_at(t_end), y, params));
  return traj;
}

/// Canonical "near the pure foraging equilibrium" start for a given mu.
inline MFState initial_near_foraging(const MFParams& p, double mu, double a0 = 0.01,
                                     double p1_0 = 0.01) {
  MFState s;
  s.A = a0;
  s.P1 = p1_0;
  s.P3 = mu / (mu + p.kappa * p.eta_F);
  return s;
}

struct HysteresisResult {
  std::optional<double> mu_forward;  // mu at the first threshold crossing on the down-ramp
  bool locked_in = false;            // A stayed above threshold for the whole up-ramp
  int down_crossings = 0;            // number of threshold crossings during the down-ramp
  double p1_peak = 0.0;
  double p1_at_transition = 0.0;
  double p1_end = 0.0;
  double a_end = 0.0;
  Trajectory traj;
};

/// Run the triangular ramp and detect the forward transition and lock-in.
inline HysteresisResult hysteresis_sweep(const MFParams& params, const ForcingSchedule& sched,
                                         double detection_threshold = 0.5,
                                         const IntegratorOptions& opt = {},
                                         std::optional<MFState> init = std::nullopt) {
  const MFState start = init ? *init : initial_near_foraging(params, sched.mu_at(0.0));
  HysteresisResult res;
  detail::Vec3 y = detail::to_vec(start);
  auto mu_of = [&](double t) { return sched.mu_at(t); };
  const double t_end = sched.total();
  double next_sample = opt.out_dt;
  double min_a_up = 1.0;
  res.traj.push_back(detail::make_point(0.0, sched.mu_at(0.0), y, params));

  auto cb = [&](double t0, const detail::Vec3& y0, const detail::Vec3& f0, double t1,
                const detail::Vec3& y1, const detail::Vec3& f1) {
    const double h = t1 - t0;
    // threshold crossings on the down-ramp
    if (t0 < sched.t_down) {
      const double g0 = y0[0] - detection_threshold;
      const double g1 = y1[0] - detection_threshold;
      if ((g0 <= 0.0 && g1 > 0.0) || (g0 > 0.0 && g1 <= 0.0)) {
        double lo = 0.0, hi = 1.0;
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          const double gm =
              detail::hermite(y0, f0, y1, f1, h, mid)[0] - detection_threshold;
          if ((g0 <= 0.0) == (gm <= 0.0)) lo = mid; else hi = mid;
        }
        const double t_cross = t0 + 0.5 * (lo + hi) * h;
        if (t_cross <= sched.t_down) {
          res.down_crossings += 1;
          if (!res.mu_forward && g1 > 0.0) {
            res.mu_forward = sched.mu_at(t_cross);
            res.p1_at_transition = detail::hermite(y0, f0, y1, f1, h, 0.5 * (lo + hi))[1];
          }
        }
      }
    }
    if (t1 >= sched.t_down) min_a_up = std::min(min_a_up, y1[0]);
    res.p1_peak = std::max(res.p1_peak, y1[1]);
    while (next_sample <= t1 + 1e-12 && next_sample <= t_end) {
      const double th = std::clamp((next_sample - t0) / h, 0.0, 1.0);
      res.traj.push_back(detail::make_point(next_sample, sched.mu_at(next_sample),
                                            detail::hermite(y0, f0, y1, f1, h, th), params));
      next_sample += opt.out_dt;
    }
  };
  detail::run_forced(y, params, mu_of, {sched.t_down}, t_end, opt, cb);
  if (res.traj.back().t < t_end - 1e-9)
    res.traj.push_back(detail::make_point(t_end, sched.mu_at(t_end), y, params));
  res.locked_in = res.mu_forward.has_value() && min_a_up > detection_threshold;
  res.p1_end = y[1];
  res.a_end = y[0];
  return res;
}

// ---- boundary equilibria ----

enum class Stability { Stable, Unstable, Marginal };

struct Equilibrium {
  MFState state;
  double max_real_eig = 0.0;
  Stability stability = Stability::Marginal;
};

namespace detail {

// Real parts of the roots of x^3 + a x^2 + b x + c.
inline std::array<double, 3> cubic_real_parts(double a, double b, double c) {
  const double p = b - a * a / 3.0;
  const double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
  const double shift = -a / 3.0;
  const double disc = 0.25 * q * q + p * p * p / 27.0;
  if (disc > 1e-14) {
    const double sq = std::sqrt(disc);
    const double x1 = std::cbrt(-0.5 * q + sq) + std::cbrt(-0.5 * q - sq);
    return {x1 + shift, -0.5 * x1 + shift, -0.5 * x1 + shift};
  }
  if (std::abs(p) < 1e-14) {
    const double x = std::cbrt(-q);
    return {x + shift, x + shift, x + shift};
  }
  const double r = 2.0 * std::sqrt(-p / 3.0);
  const double arg = std::clamp(3.0 * q / (p * r), -1.0, 1.0);
  const double phi = std::acos(arg);
  std::array<double, 3> xs;
  for (int k = 0; k < 3; ++k)
    xs[k] = r * std::cos(phi / 3.0 - 2.0 * 3.14159265358979323846 * k / 3.0) + shift;
  return xs;
}

inline std::array<double, 3> jacobian_max_eigs(const MFState& s, const MFParams& p) {
  // One-sided steps keep finite differences inside the admissible region at
  // boundary equilibria.
  const double h = 1e-7;
  double J[3][3];
  const Vec3 base = {s.A, s.P1, s.P3};
  for (int j = 0; j < 3; ++j) {
    Vec3 lo = base, hi = base;
    hi[j] += h;
    lo[j] -= h;
    if (to_state(hi).simplex_violation() > 1e-12) hi = base;
    if (to_state(lo).simplex_violation() > 1e-12) lo = base;
    const double hj = hi[j] - lo[j];
    const MFDeriv dhi = rhs(to_state(hi), p);
    const MFDeriv dlo = rhs(to_state(lo), p);
    J[0][j] = (dhi.dA - dlo.dA) / hj;
    J[1][j] = (dhi.dP1 - dlo.dP1) / hj;
    J[2][j] = (dhi.dP3 - dlo.dP3) / hj;
  }
  const double tr = J[0][0] + J[1][1] + J[2][2];
  const double m01 = J[0][0] * J[1][1] - J[0][1] * J[1][0];
  const double m02 = J[0][0] * J[2][2] - J[0][2] * J[2][0];
  const double m12 = J[1][1] * J[2][2] - J[1][2] * J[2][1];
  const double det = J[0][0] * (J[1][1] * J[2][2] - J[1][2] * J[2][1]) -
                     J[0][1] * (J[1][0] * J[2][2] - J[1][2] * J[2][0]) +
                     J[0][2] * (J[1][0] * J[2][1] - J[1][1] * J[2][0]);
  // char poly: l^3 - tr l^2 + (sum minors) l - det
  return cubic_real_parts(-tr, m01 + m02 + m12, -det);
}

}  // namespace detail

/// Boundary equilibria on the A=0 and A=1 branches: solve the planted (P1,P3)
/// subsystem at fixed A, then classify by the numerical Jacobian. `resolution`
/// controls a sign-change scan that backs up the closed-form candidates.
inline std::vector<Equilibrium> equilibria(const MFParams& params, int resolution = 64) {
  params.validate();
  std::vector<Equilibrium> out;
  for (double a : {0.0, 1.0}) {
    const double H = params.encounter_rate(a);
    const double denom = params.mu + params.kappa * H;
    if (!(denom > 0.0)) continue;
    const double p3_star = params.mu / denom;

    std::vector<double> candidates{0.0, 1.0 - p3_star};
    const double bias = params.fitness_bias(a);
    if (std::abs(bias) > 1e-12) {
      const double p1_int = -params.u * params.omega * a / bias;
      if (p1_int > 0.0 && p1_int < 1.0 - p3_star) candidates.push_back(p1_int);
    }
    // A scan of dP1 over [0, 1-P3*] catches roots the closed forms might miss
    // under alternative parameterizations.
    auto dp1_at = [&](double p1) {
      MFParams p = params;
      MFState s{a, p1, p3_star};
      return detail::rhs(s, p).dP1;
    };
    const int n = std::max(resolution, 4);
    double prev = dp1_at(0.0);
    for (int i = 1; i <= n; ++i) {
      const double x = (1.0 - p3_star) * i / n;
      const double cur = dp1_at(x);
      if (prev == 0.0 || (prev < 0.0) != (cur < 0.0)) {
        double lo = (1.0 - p3_star) * (i - 1) / n, hi = x;
        for (int it = 0; it < 80; ++it) {
          const double mid = 0.5 * (lo + hi);
          if ((dp1_at(lo) < 0.0) == (dp1_at(mid) < 0.0)) lo = mid; else hi = mid;
        }
        candidates.push_back(0.5 * (lo + hi));
      }
      prev = cur;
    }

    std::sort(candidates.begin(), candidates.end());
    for (double p1 : candidates) {
      if (!out.empty() && out.back().state.A == a &&
          std::abs(out.back().state.P1 - p1) < 1e-7)
        continue;
      if (std::abs(dp1_at(p1)) > 1e-9) continue;  // candidate must actually be a root
      MFState s{a, p1, p3_star};
      if (s.simplex_violation() > 1e-9) continue;
      Equilibrium eq;
      eq.state = s;
      const auto eigs = detail::jacobian_max_eigs(s, params);
      eq.max_real_eig = std::max({eigs[0], eigs[1], eigs[2]});
      eq.stability = eq.max_real_eig < -1e-6
                         ? Stability::Stable
                         : (eq.max_real_eig > 1e-6 ? Stability::Unstable : Stability::Marginal);
      out.push_back(eq);
    }
  }
  return out;
}

/// CSV columns: t, mu, A, P1, P2, P3, pi_A, pi_F.
inline void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "t,mu,A,P1,P2,P3,pi_A,pi_F\n";
  for (const auto& p : traj)
    f << fmt_double(p.t) << ',' << fmt_double(p.mu) << ',' << fmt_double(p.A) << ','
      << fmt_double(p.P1) << ',' << fmt_double(p.P2) << ',' << fmt_double(p.P3) << ','
      << fmt_double(p.pi_A) << ',' << fmt_double(p.pi_F) << '\n';
}

}  // namespace mf
}  // namespace agrisim
