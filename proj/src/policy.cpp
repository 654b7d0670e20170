#include "epibarrier/policy.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>

#include "epibarrier/integrate.hpp"

namespace epibarrier {

std::string_view to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::Constant: return "constant";
    case PolicyKind::AffineFeedback: return "feedback";
    case PolicyKind::SwitchingLaw: return "switching";
    case PolicyKind::ExtremalBang: return "bang";
  }
  return "?";
}

std::string Policy::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << to_string(kind);
  switch (kind) {
    case PolicyKind::Constant:
      os << ":beta=" << values.beta << ",gamma=" << values.gamma << ",eta=" << values.eta;
      break;
    case PolicyKind::AffineFeedback:
      os << ":gamma=" << values.gamma << ",eta=" << values.eta;
      break;
    case PolicyKind::ExtremalBang:
      os << ":seed=" << seed << ",trial=" << trial;
      break;
    case PolicyKind::SwitchingLaw:
      break;
  }
  return os.str();
}

namespace {

void require_in(const Interval& box, double v, const char* name) {
  if (!std::isfinite(v) || !box.contains(v, 1e-12)) {
    std::ostringstream os;
    os << name << "=" << v << " outside [" << box.lo << ", " << box.hi << "]";
    throw Error(ErrorCode::BadArgument, os.str());
  }
}

// Disturbance channel of an imperfect model.
Channel disturbance_channel(const Scenario& s) { return s.seir() ? Channel::Eta : Channel::Gamma; }

double worst_disturbance(const Scenario& s) { return s.seir() ? s.eta.hi : s.gamma.lo; }

// Upper bound on β and lower bound on γ that the policy can emit.
double beta_upper(const Scenario& s, const Policy& p) {
  return p.kind == PolicyKind::Constant ? p.values.beta : s.beta.hi;
}

double gamma_lower(const Scenario& s, const Policy& p) {
  if (p.kind == PolicyKind::Constant) return p.values.gamma;
  if (p.kind == PolicyKind::AffineFeedback && !s.seir()) return p.values.gamma;
  return s.gamma.lo;
}

bool settled(const Scenario& s, const Policy& p, const StateVec& x) {
  if (!s.seir()) {
    // S + I − c·ln S with c = γ_lower/β_upper is non-increasing under every input the
    // policy can emit, which bounds all future values of I.
    const double c = gamma_lower(s, p) / beta_upper(s, p);
    if (x.S() <= c) return true;
    return x.I() + (x.S() - c) - c * std::log(x.S() / c) <= s.i_max;
  }
  if (x.sum() <= s.i_max) return true;
  return beta_upper(s, p) * x.S() <= gamma_lower(s, p) && x.E() + x.I() <= s.i_max;
}

}  // namespace

Policy constant_policy(const Scenario& s, InputVec values) {
  Policy p;
  p.kind = PolicyKind::Constant;
  require_in(s.beta, values.beta, "beta");
  switch (s.variant) {
    case ModelVariant::SirPerfect:
      values.gamma = s.gamma.lo;
      values.eta = 0.0;
      break;
    case ModelVariant::SeirPerfect:
      require_in(s.gamma, values.gamma, "gamma");
      values.eta = s.eta.lo;
      break;
    case ModelVariant::SirImperfect:
      require_in(s.gamma, values.gamma, "gamma");
      values.eta = 0.0;
      break;
    case ModelVariant::SeirImperfect:
      require_in(s.gamma, values.gamma, "gamma");
      require_in(s.eta, values.eta, "eta");
      break;
  }
  p.values = values;
  return p;
}

Policy feedback_policy(const Scenario& s, std::optional<double> disturbance) {
  Policy p;
  p.kind = PolicyKind::AffineFeedback;
  if (s.imperfect()) {
    const double d = disturbance.value_or(worst_disturbance(s));
    const Channel c = disturbance_channel(s);
    require_in(channel_bounds(s, c), d, c == Channel::Eta ? "eta" : "gamma");
    set_channel(p.values, c, d);
  } else if (disturbance) {
    throw Error(ErrorCode::BadArgument, "perfect models have no disturbance");
  }
  if (s.variant == ModelVariant::SirPerfect) p.values.gamma = s.gamma.lo;
  if (s.variant == ModelVariant::SeirPerfect) p.values.eta = s.eta.lo;
  return p;
}

Policy switching_policy(const ComputedSet& admissible, const ComputedSet& mrpi) {
  if (admissible.kind != SetKind::Admissible || mrpi.kind != SetKind::Mrpi) {
    throw Error(ErrorCode::BadSetKind, "switching law needs an admissible and an MRPI set");
  }
  Policy p;
  p.kind = PolicyKind::SwitchingLaw;
  p.admissible = &admissible;
  p.mrpi = &mrpi;
  return p;
}

std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32)};
  return std::mt19937_64(seq);
}

Policy extremal_bang_policy(const Scenario& s, double t_end, std::uint64_t seed, std::uint64_t trial, int segments) {
  Policy p;
  p.kind = PolicyKind::ExtremalBang;
  p.seed = seed;
  p.trial = trial;
  auto rng = trial_rng(seed, trial);
  std::uniform_real_distribution<double> when(0.0, std::max(t_end, 0.0));
  std::bernoulli_distribution coin(0.5);
  std::vector<double> starts{0.0};
  for (int i = 1; i < std::max(segments, 1); ++i) starts.push_back(when(rng));
  std::sort(starts.begin(), starts.end());
  for (double t0 : starts) {
    BangSegment seg{t0, {}};
    for (Channel c : active_channels(s.variant)) {
      const Interval& b = channel_bounds(s, c);
      set_channel(seg.value, c, coin(rng) ? b.hi : b.lo);
    }
    p.segments.push_back(seg);
  }
  return p;
}

std::vector<Policy> corner_policies(const Scenario& s) {
  const auto channels = active_channels(s.variant);
  std::vector<Policy> out;
  const std::size_t n = std::size_t{1} << channels.size();
  for (std::size_t mask = 0; mask < n; ++mask) {
    Policy p;
    p.kind = PolicyKind::ExtremalBang;
    BangSegment seg{0.0, {}};
    for (std::size_t j = 0; j < channels.size(); ++j) {
      const Interval& b = channel_bounds(s, channels[j]);
      set_channel(seg.value, channels[j], (mask >> j) & 1U ? b.hi : b.lo);
    }
    p.segments.push_back(seg);
    out.push_back(p);
  }
  return out;
}

InputVec switching_law(const StateVec& x, const ComputedSet& admissible, const ComputedSet& mrpi, const Scenario& s) {
  InputVec u;
  u.gamma = s.gamma.lo;
  const Membership in_a = membership(admissible, x);
  if (in_a.verdict == Verdict::Inside) {
    u.beta = s.beta.hi;
    return u;
  }
  const Membership in_m = membership(mrpi, x);
  if (in_m.verdict == Verdict::Inside) {
    u.beta = s.beta.hi;
    return u;
  }
  if (in_a.verdict == Verdict::Boundary) {
    const double eps = admissible.tolerances.boundary_layer_eps;
    const bool on_usable = admissible.usable && std::abs(x.I() - s.i_max) <= eps &&
                           x.S() <= admissible.usable->s_hi + eps;
    if (on_usable) {
      // Hold İ = 0; with S ≈ 0 infection dies out under any β.
      u.beta = x.S() < 1e-9 ? s.beta.hi : s.beta.clamp(s.gamma.lo / x.S());
      return u;
    }
  }
  u.beta = s.beta.lo;
  return u;
}

InputVec policy_input(const Scenario& s, const Policy& p, double t, const StateVec& x) {
  switch (p.kind) {
    case PolicyKind::Constant: return p.values;
    case PolicyKind::AffineFeedback: {
      InputVec u = p.values;
      u.beta = beta_feedback_saturated(x.I(), s);
      if (s.seir()) u.gamma = gamma_feedback_saturated(x.I(), s);
      return u;
    }
    case PolicyKind::SwitchingLaw:
      if (s.variant != ModelVariant::SirPerfect || p.admissible == nullptr || p.mrpi == nullptr) {
        throw Error(ErrorCode::BadArgument, "the switching law applies to the perfect SIR model");
      }
      return switching_law(x, *p.admissible, *p.mrpi, s);
    case PolicyKind::ExtremalBang: {
      auto it = std::upper_bound(p.segments.begin(), p.segments.end(), t,
                                 [](double v, const BangSegment& seg) { return v < seg.t_start; });
      const InputVec free = it == p.segments.begin() ? p.segments.front().value : std::prev(it)->value;
      return effective_input(s, x, free);
    }
  }
  throw Error(ErrorCode::BadArgument, "unknown policy");
}

namespace {

template <std::size_t D>
Trajectory run(const Scenario& s, const Policy& p, const StateVec& x0, double t_end, const Tolerances& tol,
               const SimOptions& opt) {
  using Y = OdeVec<D>;
  const bool held = p.kind == PolicyKind::SwitchingLaw || p.kind == PolicyKind::ExtremalBang;
  InputVec u_held;
  auto to_state = [](const Y& y) { return StateVec::from_span(std::span<const double>(y.data(), D)); };
  auto rhs = [&](double t, const Y& y) {
    const StateVec x = to_state(y);
    const InputVec u = held ? u_held : policy_input(s, p, t, x);
    const StateVec dx = state_rhs(s.variant, x, u);
    Y out{};
    for (std::size_t i = 0; i < D; ++i) out[i] = dx[i];
    return out;
  };
  const double cap = s.i_max + tol.geom_tol;
  auto above_cap = [cap](double, const Y& y) { return y[D - 1] - cap; };

  Trajectory tr;
  Y y{};
  for (std::size_t i = 0; i < D; ++i) y[i] = x0[i];
  double t = 0.0;
  tr.max_I = x0.I();
  tr.samples.push_back({t, x0, policy_input(s, p, t, x0)});
  if (x0.I() > cap) {
    tr.breached = true;
    tr.first_breach_time = 0.0;
    if (opt.stop_on_breach) return tr;
  }
  const double h = tol.step_h;
  const long steps = static_cast<long>(std::ceil(t_end / h - 1e-9));
  for (long k = 1; k <= steps; ++k) {
    const double step = k == steps ? t_end - t : h;
    if (held) u_held = policy_input(s, p, t, to_state(y));
    const Y next = rk4_step<D>(rhs, t, y, step);
    const double t_next = k == steps ? t_end : t + step;
    tr.max_I = std::max(tr.max_I, next[D - 1]);
    bool stop = false;
    if (!tr.breached && next[D - 1] > cap) {
      tr.breached = true;
      tr.first_breach_time = refine_event<D>(rhs, above_cap, [](Y&) {}, t, y, step, tol.event_time_tol).first;
      stop = opt.stop_on_breach;
    }
    y = next;
    t = t_next;
    const StateVec x = to_state(y);
    if (!stop && opt.stop_when_settled && settled(s, p, x)) stop = true;
    if (stop || k == steps || (opt.record_every > 0 && k % opt.record_every == 0)) {
      tr.samples.push_back({t, x, policy_input(s, p, t, x)});
    }
    if (stop) break;
  }
  return tr;
}

Policy with_disturbance(const Scenario& s, Policy p, double d) {
  set_channel(p.values, disturbance_channel(s), d);
  return p;
}

void require_monte_carlo(const Scenario& s, const Policy& base) {
  if (!s.imperfect()) throw Error(ErrorCode::BadArgument, "Monte Carlo sweeps need an imperfect model");
  if (base.kind != PolicyKind::AffineFeedback && base.kind != PolicyKind::Constant) {
    throw Error(ErrorCode::BadArgument, "Monte Carlo sweeps take a constant or feedback policy");
  }
}

}  // namespace

Trajectory simulate(const Scenario& s, const Policy& p, const StateVec& x0, double t_end, const Tolerances& tol,
                    const SimOptions& opt) {
  if (!(t_end >= 0.0) || t_end > 10000.0) throw Error(ErrorCode::BadArgument, "t_end must lie in [0, 10000]");
  if (x0.dim() != s.dim() || !in_simplex(x0, tol.geom_tol)) throw Error(ErrorCode::BadState, "x0 outside the simplex");
  return s.seir() ? run<3>(s, p, x0, t_end, tol, opt) : run<2>(s, p, x0, t_end, tol, opt);
}

double monte_carlo_draw(const Scenario& s, std::uint64_t seed, std::uint64_t trial) {
  const Interval& b = channel_bounds(s, disturbance_channel(s));
  auto rng = trial_rng(seed, trial);
  return std::uniform_real_distribution<double>(b.lo, b.hi)(rng);
}

std::vector<Trajectory> monte_carlo(const Scenario& s, const StateVec& x0, const Policy& base, int n_trials,
                                    std::uint64_t seed, double t_end, const Tolerances& tol) {
  require_monte_carlo(s, base);
  const int n = std::max(n_trials, 0);
  std::vector<Trajectory> out(n);
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      out[i] = simulate(s, with_disturbance(s, base, monte_carlo_draw(s, seed, i)), x0, t_end, tol);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<Trajectory> monte_carlo_serial(const Scenario& s, const StateVec& x0, const Policy& base, int n_trials,
                                           std::uint64_t seed, double t_end, const Tolerances& tol) {
  require_monte_carlo(s, base);
  std::vector<Trajectory> out;
  for (int i = 0; i < n_trials; ++i) {
    out.push_back(simulate(s, with_disturbance(s, base, monte_carlo_draw(s, seed, i)), x0, t_end, tol));
  }
  return out;
}

OracleReport membership_oracle(const Scenario& s, SetKind k, const SetPair& sets, const StateVec& point,
                               int n_trials, std::uint64_t seed, const Tolerances& tol, double t_end) {
  const ComputedSet* set = k == SetKind::Admissible ? sets.admissible : sets.mrpi;
  if (set == nullptr) throw Error(ErrorCode::BadArgument, "oracle needs the set being checked");
  OracleReport rep;
  rep.point = point;
  rep.claimed = membership(*set, point);
  const Verdict v = rep.claimed.verdict;
  rep.evaluated = v == Verdict::Inside || v == Verdict::Outside;
  if (!rep.evaluated) return rep;

  SimOptions opt;
  opt.stop_on_breach = true;
  opt.stop_when_settled = true;
  opt.record_every = 100;
  auto attempt = [&](const Policy& p, std::uint64_t trial) {
    ++rep.n_trials;
    Trajectory tr = simulate(s, p, point, t_end, tol, opt);
    return std::pair<bool, Counterexample>{tr.breached, Counterexample{p.describe(), seed, trial, std::move(tr)}};
  };

  if (k == SetKind::Admissible) {
    std::vector<Policy> candidates;
    InputVec slow;
    slow.beta = s.beta.lo;
    slow.gamma = s.gamma.hi;
    candidates.push_back(constant_policy(s, slow));
    if (s.variant == ModelVariant::SirPerfect && sets.admissible && sets.mrpi) {
      candidates.push_back(switching_policy(*sets.admissible, *sets.mrpi));
    }
    std::optional<Counterexample> survivor;
    Counterexample last;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      auto [breached, ce] = attempt(candidates[i], i);
      if (!breached) {
        survivor = std::move(ce);
        break;
      }
      last = std::move(ce);
    }
    if (v == Verdict::Inside) {
      rep.agree = survivor.has_value();
      if (!rep.agree) rep.counterexample = std::move(last);
    } else {
      rep.agree = !survivor.has_value();
      if (!rep.agree) rep.counterexample = std::move(survivor);
    }
    return rep;
  }

  std::vector<Policy> candidates = corner_policies(s);
  for (int i = 0; i < n_trials; ++i) candidates.push_back(extremal_bang_policy(s, t_end, seed, i));
  std::optional<Counterexample> breach;
  Counterexample last;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    auto [breached, ce] = attempt(candidates[i], candidates[i].segments.size() == 1 ? i : candidates[i].trial);
    if (breached) {
      breach = std::move(ce);
      break;
    }
    last = std::move(ce);
  }
  if (v == Verdict::Inside) {
    rep.agree = !breach.has_value();
    if (!rep.agree) rep.counterexample = std::move(breach);
  } else {
    rep.agree = breach.has_value();
    if (!rep.agree) rep.counterexample = std::move(last);
  }
  return rep;
}

namespace {

std::vector<StateVec> grid_points(const Scenario& s, int n) {
  if (s.seir()) throw Error(ErrorCode::BadArgument, "grid oracle is two-dimensional; use sampled points for SEIR");
  std::vector<StateVec> pts;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const StateVec x = StateVec::sir((i + 0.5) / n, (j + 0.5) * s.i_max / n);
      if (x.sum() <= 1.0) pts.push_back(x);
    }
  }
  return pts;
}

std::uint64_t cell_seed(std::uint64_t seed, std::size_t cell) {
  auto rng = trial_rng(seed, cell);
  return rng();
}

}  // namespace

std::vector<GridCell> oracle_grid(const Scenario& s, SetKind k, const SetPair& sets, int n, int n_trials,
                                  std::uint64_t seed, const Tolerances& tol, double t_end) {
  const auto pts = grid_points(s, n);
  std::vector<GridCell> out(pts.size());
  std::vector<std::exception_ptr> errors(pts.size());
  const long m = static_cast<long>(pts.size());
#pragma omp parallel for schedule(dynamic)
  for (long c = 0; c < m; ++c) {
    try {
      out[c] = {pts[c], membership_oracle(s, k, sets, pts[c], n_trials, cell_seed(seed, c), tol, t_end)};
    } catch (...) {
      errors[c] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<GridCell> oracle_grid_serial(const Scenario& s, SetKind k, const SetPair& sets, int n, int n_trials,
                                         std::uint64_t seed, const Tolerances& tol, double t_end) {
  const auto pts = grid_points(s, n);
  std::vector<GridCell> out;
  for (std::size_t c = 0; c < pts.size(); ++c) {
    out.push_back({pts[c], membership_oracle(s, k, sets, pts[c], n_trials, cell_seed(seed, c), tol, t_end)});
  }
  return out;
}

}  // namespace epibarrier
