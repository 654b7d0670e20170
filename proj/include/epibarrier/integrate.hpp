#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "epibarrier/core.hpp"
#include "epibarrier/models.hpp"

namespace epibarrier {

enum class EventKind { SignChange, DomainExit, IFloor, Horizon };

std::string_view to_string(EventKind k);

/// Faces of the constrained simplex G_Π.
enum class Face { None = -1, Cap = 0, SZero = 1, EZero = 2, IZero = 3, SimplexSum = 4 };

std::string_view to_string(Face f);

struct EventSpec {
  EventKind kind = EventKind::Horizon;
  int id = -1;  // channel index for SignChange, Face for DomainExit
  bool refine = true;
};

/// One recorded sample of a barrier integration.
struct StepRecord {
  double t = 0.0;
  StateVec state;
  AdjointVec adjoint;
  InputVec input;
  std::array<double, 3> switch_values{};
  bool switch_flag = false;
};

template <std::size_t N>
using OdeVec = std::array<double, N>;

/// Classic fourth-order Runge–Kutta step of signed size h. Throws NONFINITE.
template <std::size_t N, class Rhs>
OdeVec<N> rk4_step(Rhs&& rhs, double t, const OdeVec<N>& y, double h) {
  OdeVec<N> k1 = rhs(t, y);
  OdeVec<N> tmp;
  for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
  OdeVec<N> k2 = rhs(t + 0.5 * h, tmp);
  for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
  OdeVec<N> k3 = rhs(t + 0.5 * h, tmp);
  for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * k3[i];
  OdeVec<N> k4 = rhs(t + h, tmp);
  OdeVec<N> out;
  for (std::size_t i = 0; i < N; ++i) {
    out[i] = y[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    if (!std::isfinite(out[i])) throw Error(ErrorCode::Nonfinite, "non-finite value in RK4 step");
  }
  return out;
}

/// Localises, by bisection on the step fraction, the first time in (t, t + h] at which
/// `trigger(t, y) > 0`, given that it holds at t + h and not at t. The returned point is
/// on the triggered side, within `time_tol` of the crossing.
template <std::size_t N, class Rhs, class Trigger, class Project>
std::pair<double, OdeVec<N>> refine_event(Rhs&& rhs, Trigger&& trigger, Project&& project, double t,
                                          const OdeVec<N>& y, double h, double time_tol) {
  double lo = 0.0;
  double hi = 1.0;
  OdeVec<N> y_hi = rk4_step<N>(rhs, t, y, h);
  project(y_hi);
  while ((hi - lo) * std::abs(h) > time_tol) {
    const double mid = 0.5 * (lo + hi);
    OdeVec<N> y_mid = rk4_step<N>(rhs, t, y, mid * h);
    project(y_mid);
    if (trigger(t + mid * h, y_mid) > 0.0) {
      hi = mid;
      y_hi = y_mid;
    } else {
      lo = mid;
    }
  }
  return {t + hi * h, y_hi};
}

template <std::size_t N>
struct EventFunction {
  EventSpec spec;
  /// Event fires when this becomes positive.
  std::function<double(double, const OdeVec<N>&)> g;
  /// For SignChange events: the underlying switching functional, used to detect
  /// singular arcs.
  std::function<double(const OdeVec<N>&)> sigma;
};

struct IntegrateOptions {
  double h = 1e-3;        // signed step; negative integrates backward
  double t_span = 1000.0; // HORIZON fires after |t - t0| reaches this
  double event_time_tol = 1e-10;
  int record_every = 10;
  double sigma_tol = 1e-12;
  int singular_steps = 50;
};

template <std::size_t N>
struct Sample {
  double t;
  OdeVec<N> y;
};

template <std::size_t N>
struct IntegrateResult {
  std::vector<Sample<N>> samples;
  EventSpec terminal;
  double t_end = 0.0;
  OdeVec<N> y_end{};
};

/// Steps from (t0, y0) until the first event fires, recording every `record_every`
/// steps plus the start and the event point. Events are checked in list order; among
/// events triggered within the same step the earliest localised one wins.
template <std::size_t N, class Rhs, class Project>
IntegrateResult<N> integrate_until(Rhs&& rhs, const std::vector<EventFunction<N>>& events, const OdeVec<N>& y0,
                                   double t0, const IntegrateOptions& opt, Project&& project) {
  if (opt.h == 0.0) throw Error(ErrorCode::BadArgument, "step must be non-zero");
  for (double v : y0) {
    if (!std::isfinite(v)) throw Error(ErrorCode::Nonfinite, "non-finite initial value");
  }
  IntegrateResult<N> out;
  out.samples.push_back({t0, y0});

  // Already triggered at the start.
  for (const auto& ev : events) {
    if (ev.spec.kind != EventKind::SignChange && ev.g(t0, y0) > 0.0) {
      out.terminal = ev.spec;
      out.t_end = t0;
      out.y_end = y0;
      return out;
    }
  }

  std::vector<int> near_zero(events.size(), 0);
  OdeVec<N> y = y0;
  double t = t0;
  long step = 0;
  const long max_steps = static_cast<long>(std::ceil(opt.t_span / std::abs(opt.h) - 1e-9));

  while (true) {
    const double h = (step + 1 >= max_steps) ? (t0 + opt.h * max_steps - t) : opt.h;
    OdeVec<N> y_next = rk4_step<N>(rhs, t, y, h);
    project(y_next);
    const double t_next = (step + 1 >= max_steps) ? t0 + opt.h * max_steps : t + h;

    std::optional<std::size_t> fired;
    double best_t = 0.0;
    OdeVec<N> best_y{};
    for (std::size_t k = 0; k < events.size(); ++k) {
      const auto& ev = events[k];
      if (ev.g(t_next, y_next) <= 0.0) continue;
      double te = t_next;
      OdeVec<N> ye = y_next;
      if (ev.spec.refine) {
        std::tie(te, ye) = refine_event<N>(rhs, ev.g, project, t, y, h, opt.event_time_tol);
      }
      if (!fired || std::abs(te - t) < std::abs(best_t - t)) {
        fired = k;
        best_t = te;
        best_y = ye;
      }
    }
    if (fired) {
      out.samples.push_back({best_t, best_y});
      out.terminal = events[*fired].spec;
      out.t_end = best_t;
      out.y_end = best_y;
      return out;
    }

    for (std::size_t k = 0; k < events.size(); ++k) {
      if (!events[k].sigma) continue;
      if (std::abs(events[k].sigma(y_next)) <= opt.sigma_tol) {
        if (++near_zero[k] > opt.singular_steps) {
          throw Error(ErrorCode::SingularArc, "switching functional vanishes on an interval");
        }
      } else {
        near_zero[k] = 0;
      }
    }

    y = y_next;
    t = t_next;
    ++step;
    if (step >= max_steps) {
      out.samples.push_back({t, y});
      out.terminal = {EventKind::Horizon, -1, false};
      out.t_end = t;
      out.y_end = y;
      return out;
    }
    if (opt.record_every > 0 && step % opt.record_every == 0) out.samples.push_back({t, y});
  }
}

template <std::size_t N, class Rhs>
IntegrateResult<N> integrate_until(Rhs&& rhs, const std::vector<EventFunction<N>>& events, const OdeVec<N>& y0,
                                   double t0, const IntegrateOptions& opt) {
  return integrate_until<N>(std::forward<Rhs>(rhs), events, y0, t0, opt, [](OdeVec<N>&) {});
}

}  // namespace epibarrier
