#include "epibarrier/barrier.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

namespace epibarrier {

namespace {

constexpr double kZero = 1e-12;

std::size_t channel_index(Channel c) { return static_cast<std::size_t>(c); }

// Per-channel choice of the upper bound, indexed by Channel.
using Choice = std::array<bool, 3>;

Choice decide(const Scenario& s, SetKind k, const StateVec& x, const AdjointVec& lambda) {
  const auto channels = active_channels(s.variant);
  Choice upper{};
  std::array<bool, 3> decided{};
  InputVec free;
  for (Channel c : channels) {
    const double sigma = switch_value(s.variant, k, c, lambda).value;
    const auto j = channel_index(c);
    if (std::abs(sigma) > kZero) {
      upper[j] = (sigma > 0.0) == takes_upper_when_positive(s.variant, k, c);
      decided[j] = true;
      set_channel(free, c, upper[j] ? channel_bounds(s, c).hi : channel_bounds(s, c).lo);
    } else {
      set_channel(free, c, channel_bounds(s, c).mid());
    }
  }
  const AdjointVec ldot = adjoint_rhs(s, x, lambda, effective_input(s, x, free));
  for (Channel c : channels) {
    const auto j = channel_index(c);
    if (decided[j]) continue;
    const double sdot = switch_value(s.variant, k, c, ldot).value;
    if (std::abs(sdot) <= kZero) {
      throw Error(ErrorCode::SingularArc, "switching functional and its derivative both vanish");
    }
    // Backward in time σ(t̄ − τ) ≈ −τ·σ̇, so the relevant sign is −sign(σ̇).
    upper[j] = (sdot < 0.0) == takes_upper_when_positive(s.variant, k, c);
  }
  return upper;
}

InputVec input_for(const Scenario& s, const StateVec& x, const Choice& upper) {
  InputVec free;
  for (Channel c : active_channels(s.variant)) {
    const Interval& b = channel_bounds(s, c);
    set_channel(free, c, upper[channel_index(c)] ? b.hi : b.lo);
  }
  return effective_input(s, x, free);
}

template <std::size_t D>
StateVec state_of(const OdeVec<2 * D>& y) {
  return StateVec::from_span(std::span<const double>(y.data(), D));
}

template <std::size_t D>
AdjointVec adjoint_of(const OdeVec<2 * D>& y) {
  return AdjointVec(std::span<const double>(y.data() + D, D));
}

template <std::size_t D>
BarrierCurve trace(const Scenario& s, SetKind k, const StateVec& z, const Tolerances& tol, double h,
                   int record_every) {
  constexpr std::size_t N = 2 * D;
  using Y = OdeVec<N>;
  const auto channels = active_channels(s.variant);

  BarrierCurve curve;
  curve.kind = k;
  curve.tangent_point = z;
  curve.step_h = h;

  const AdjointVec lambda0 = AdjointVec::cap_normal(D);
  Choice upper = decide(s, k, z, lambda0);

  Y y{};
  for (std::size_t i = 0; i < D; ++i) {
    y[i] = z[i];
    y[D + i] = lambda0[i];
  }

  auto rhs = [&](double, const Y& v) {
    const StateVec x = state_of<D>(v);
    const AdjointVec l = adjoint_of<D>(v);
    const InputVec u = input_for(s, x, upper);
    const StateVec dx = state_rhs(s.variant, x, u);
    const AdjointVec dl = adjoint_rhs(s, x, l, u);
    Y out{};
    for (std::size_t i = 0; i < D; ++i) {
      out[i] = dx[i];
      out[D + i] = dl[i];
    }
    return out;
  };
  auto project = [](Y& v) {
    double n = 0.0;
    for (std::size_t i = D; i < N; ++i) n += v[i] * v[i];
    n = std::sqrt(n);
    if (n > 0.0) {
      for (std::size_t i = D; i < N; ++i) v[i] /= n;
    }
  };

  std::vector<EventFunction<N>> events;
  for (Channel c : channels) {
    const auto j = channel_index(c);
    EventFunction<N> ev;
    ev.spec = {EventKind::SignChange, static_cast<int>(j), true};
    ev.sigma = [&s, k, c](const Y& v) { return switch_value(s.variant, k, c, adjoint_of<D>(v)).value; };
    ev.g = [&s, k, c, j, &upper](double, const Y& v) {
      const double sigma = switch_value(s.variant, k, c, adjoint_of<D>(v)).value;
      const bool positive_side = upper[j] == takes_upper_when_positive(s.variant, k, c);
      return positive_side ? -sigma : sigma;
    };
    events.push_back(std::move(ev));
  }
  const double gt = tol.geom_tol;
  const double cap = s.i_max;
  events.push_back({{EventKind::DomainExit, static_cast<int>(Face::Cap), true},
                    [cap, gt](double, const Y& v) { return v[D - 1] - cap - gt; },
                    {}});
  events.push_back({{EventKind::DomainExit, static_cast<int>(Face::SZero), true},
                    [gt](double, const Y& v) { return -v[0] - gt; },
                    {}});
  if constexpr (D == 3) {
    events.push_back({{EventKind::DomainExit, static_cast<int>(Face::EZero), true},
                      [gt](double, const Y& v) { return -v[1] - gt; },
                      {}});
  }
  events.push_back({{EventKind::DomainExit, static_cast<int>(Face::SimplexSum), true},
                    [gt](double, const Y& v) {
                      double sum = 0.0;
                      for (std::size_t i = 0; i < D; ++i) sum += v[i];
                      return sum - 1.0 - gt;
                    },
                    {}});
  const double floor = tol.i_floor;
  events.push_back({{EventKind::IFloor, static_cast<int>(Face::IZero), true},
                    [floor](double, const Y& v) { return floor - v[D - 1]; },
                    {}});

  auto record = [&](double t, const Y& v, bool flag) {
    StepRecord r;
    r.t = t;
    r.state = state_of<D>(v);
    r.adjoint = adjoint_of<D>(v);
    r.input = input_for(s, r.state, upper);
    for (Channel c : channels) r.switch_values[channel_index(c)] = switch_value(s.variant, k, c, r.adjoint).value;
    r.switch_flag = flag;
    curve.samples.push_back(r);
  };

  double t = 0.0;
  bool first = true;
  while (true) {
    IntegrateOptions io;
    io.h = -h;
    io.t_span = tol.t_back_max - std::abs(t);
    io.event_time_tol = tol.event_time_tol;
    io.record_every = record_every;
    if (io.t_span <= 0.0) {
      curve.termination = {EventKind::Horizon, -1, false};
      break;
    }
    const IntegrateResult<N> res = integrate_until<N>(rhs, events, y, t, io, project);
    for (std::size_t i = first ? 0 : 1; i + 1 < res.samples.size(); ++i) {
      record(res.samples[i].t, res.samples[i].y, false);
    }
    first = false;
    const bool switched = res.terminal.kind == EventKind::SignChange;
    record(res.t_end, res.y_end, switched);
    if (!switched) {
      curve.termination = res.terminal;
      break;
    }
    const auto j = static_cast<std::size_t>(res.terminal.id);
    const Channel c = static_cast<Channel>(j);
    const Interval& b = channel_bounds(s, c);
    const double from = upper[j] ? b.hi : b.lo;
    upper[j] = !upper[j];
    const double to = upper[j] ? b.hi : b.lo;
    if (!curve.switches.empty() && std::abs(curve.switches.back().t - res.t_end) <= 10.0 * tol.event_time_tol) {
      curve.truncated = true;
      curve.termination = res.terminal;
      break;
    }
    curve.switches.push_back({res.t_end, c, from, to});
    t = res.t_end;
    y = res.y_end;
  }

  // The located exit point is a hair beyond the face; put it on the face.
  if (curve.termination.kind == EventKind::DomainExit) {
    StateVec& x = curve.samples.back().state;
    switch (static_cast<Face>(curve.termination.id)) {
      case Face::SZero: x[0] = 0.0; break;
      case Face::EZero: x[1] = 0.0; break;
      case Face::SimplexSum: {
        const double sum = x.sum();
        for (std::size_t i = 0; i < D; ++i) x[i] /= sum;
        break;
      }
      default: break;
    }
    curve.samples.back().input = input_for(s, x, upper);
  }

  // Interior samples must sit strictly below the cap and inside the simplex.
  for (std::size_t i = 1; i + 1 < curve.samples.size(); ++i) {
    const StateVec& x = curve.samples[i].state;
    if (!(x.I() < cap) || !in_simplex(x, gt)) {
      throw Error(ErrorCode::InvariantBreach, "barrier sample leaves the constrained region at t = " +
                                                  std::to_string(curve.samples[i].t));
    }
  }
  if (curve.samples.size() == 2 && curve.termination.kind == EventKind::DomainExit &&
      curve.termination.id == static_cast<int>(Face::Cap)) {
    throw Error(ErrorCode::InvariantBreach, "barrier curve leaves through the cap immediately");
  }
  return curve;
}

geometry::Point3 p3(const StateVec& x) { return {x.S(), x.E(), x.I()}; }

}  // namespace

InputVec select_extremal_input(const Scenario& s, SetKind k, const StateVec& x, const AdjointVec& lambda) {
  if (lambda.norm() == 0.0) throw Error(ErrorCode::BadArgument, "adjoint must be non-zero");
  return input_for(s, x, decide(s, k, x, lambda));
}

double hamiltonian(const Scenario& s, const StepRecord& r) {
  const StateVec f = state_rhs(s.variant, r.state, r.input);
  const AdjointVec l = r.adjoint.normalized();
  double h = 0.0;
  for (std::size_t i = 0; i < f.dim(); ++i) h += l[i] * f[i];
  return h;
}

StateVec tangent_state(const TangentSet& t, double z1) {
  if (t.point()) return StateVec::sir(z1, t.i_max);
  return StateVec::seir(z1, t.z2, t.i_max);
}

BarrierCurve compute_barrier_curve(const Scenario& s, SetKind k, const StateVec& tangent_point,
                                   const Tolerances& tol, const CurveOptions& opt) {
  if (!set_kind_valid(s.variant, k)) throw Error(ErrorCode::BadSetKind, "admissible sets need a controllable input");
  if (tangent_point.dim() != s.dim()) throw Error(ErrorCode::BadState, "tangent point has the wrong dimension");
  const double h = opt.h > 0.0 ? opt.h : tol.step_h;
  auto run = [&](double step, int every) {
    return s.seir() ? trace<3>(s, k, tangent_point, tol, step, every)
                    : trace<2>(s, k, tangent_point, tol, step, every);
  };
  try {
    return run(h, opt.record_every);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::InvariantBreach || !opt.retry) throw;
  }
  return run(h / 10.0, opt.record_every * 10);
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Inside: return "INSIDE";
    case Verdict::Outside: return "OUTSIDE";
    case Verdict::Boundary: return "BOUNDARY";
    case Verdict::Unknown: return "UNKNOWN";
  }
  return "?";
}

Verdict parse_verdict(std::string_view s) {
  if (s == "INSIDE") return Verdict::Inside;
  if (s == "OUTSIDE") return Verdict::Outside;
  if (s == "BOUNDARY") return Verdict::Boundary;
  if (s == "UNKNOWN") return Verdict::Unknown;
  throw Error(ErrorCode::BadArgument, "unknown verdict: " + std::string(s));
}

geometry::BoundaryPolygon sir_boundary(const Scenario& s, const BarrierCurve& c, double geom_tol) {
  using geometry::Point2;
  using geometry::Portion;
  std::vector<Point2> v;
  std::vector<Portion> tags;
  const StateVec& end = c.samples.back().state;
  v.push_back({0.0, 0.0});
  tags.push_back(Portion::Face);
  if (c.termination.kind == EventKind::DomainExit && c.termination.id == static_cast<int>(Face::SimplexSum)) {
    v.push_back({1.0, 0.0});
    tags.push_back(Portion::Face);
  } else {
    v.push_back({end.S(), 0.0});
    tags.push_back(Portion::Face);
  }
  std::vector<Point2> chain;
  for (auto it = c.samples.rbegin(); it != c.samples.rend(); ++it) chain.push_back({it->state.S(), it->state.I()});
  for (std::size_t i : geometry::simplify_polyline(chain, 0.1 * geom_tol)) {
    v.push_back(chain[i]);
    tags.push_back(Portion::Barrier);
  }
  // The last barrier vertex is the tangent point; the edge after it is the usable part.
  tags.back() = Portion::Usable;
  v.push_back({0.0, s.i_max});
  tags.push_back(Portion::Face);
  return geometry::BoundaryPolygon(std::move(v), std::move(tags));
}

std::vector<StateVec> resample_arc_length(const std::vector<StepRecord>& samples, int nodes) {
  std::vector<StateVec> out;
  if (samples.empty() || nodes <= 0) return out;
  std::vector<double> cum(samples.size(), 0.0);
  for (std::size_t i = 1; i < samples.size(); ++i) {
    double d2 = 0.0;
    for (std::size_t c = 0; c < samples[i].state.dim(); ++c) {
      const double d = samples[i].state[c] - samples[i - 1].state[c];
      d2 += d * d;
    }
    cum[i] = cum[i - 1] + std::sqrt(d2);
  }
  const double total = cum.back();
  std::size_t seg = 1;
  for (int n = 0; n < nodes; ++n) {
    const double target = nodes == 1 ? 0.0 : total * n / (nodes - 1);
    while (seg + 1 < cum.size() && cum[seg] < target) ++seg;
    if (samples.size() == 1 || total == 0.0) {
      out.push_back(samples.front().state);
      continue;
    }
    const double len = cum[seg] - cum[seg - 1];
    const double w = len > 0.0 ? std::clamp((target - cum[seg - 1]) / len, 0.0, 1.0) : 1.0;
    StateVec x = samples[seg - 1].state;
    for (std::size_t c = 0; c < x.dim(); ++c) x[c] = (1.0 - w) * samples[seg - 1].state[c] + w * samples[seg].state[c];
    out.push_back(x);
  }
  return out;
}

geometry::TriMesh seir_mesh(const std::vector<BarrierCurve>& curves, int nodes) {
  geometry::TriMesh mesh;
  for (const auto& c : curves) {
    for (const StateVec& x : resample_arc_length(c.samples, nodes)) mesh.vertices.push_back(p3(x));
  }
  const auto m = static_cast<std::uint32_t>(nodes);
  auto area2 = [&](std::uint32_t a, std::uint32_t b, std::uint32_t c) {
    const auto& A = mesh.vertices[a];
    const auto& B = mesh.vertices[b];
    const auto& C = mesh.vertices[c];
    const double ux = B.x - A.x, uy = B.y - A.y, uz = B.z - A.z;
    const double vx = C.x - A.x, vy = C.y - A.y, vz = C.z - A.z;
    const double cx = uy * vz - uz * vy, cy = uz * vx - ux * vz, cz = ux * vy - uy * vx;
    return cx * cx + cy * cy + cz * cz;
  };
  for (std::uint32_t i = 0; i + 1 < curves.size(); ++i) {
    for (std::uint32_t j = 0; j + 1 < m; ++j) {
      const std::uint32_t a = i * m + j, b = (i + 1) * m + j, c = (i + 1) * m + j + 1, d = i * m + j + 1;
      if (area2(a, b, c) > 1e-40) mesh.triangles.push_back({a, b, c});
      if (area2(a, c, d) > 1e-40) mesh.triangles.push_back({a, c, d});
    }
  }
  return mesh;
}

std::vector<SpecialSegment> special_segments(const Scenario& s, const BarrierCurve* sir_curve) {
  std::vector<SpecialSegment> out;
  if (!s.seir()) {
    out.push_back({"equilibria I=0", {StateVec::sir(0.0, 0.0), StateVec::sir(1.0, 0.0)}});
    out.push_back({"face S=0", {StateVec::sir(0.0, 0.0), StateVec::sir(0.0, s.i_max)}});
    if (sir_curve != nullptr && !sir_curve->samples.empty()) {
      const StateVec& end = sir_curve->samples.back().state;
      if (sir_curve->termination.kind != EventKind::DomainExit ||
          sir_curve->termination.id != static_cast<int>(Face::SimplexSum)) {
        out.push_back({"equilibria beyond barrier end", {StateVec::sir(end.S(), 0.0), StateVec::sir(1.0, 0.0)}});
      }
    }
  } else {
    out.push_back({"equilibria E=0,I=0", {StateVec::seir(0.0, 0.0, 0.0), StateVec::seir(1.0, 0.0, 0.0)}});
    out.push_back({"face S=0,E=0", {StateVec::seir(0.0, 0.0, 0.0), StateVec::seir(0.0, 0.0, s.i_max)}});
  }
  return out;
}

namespace {

ComputedSet assemble(const Scenario& s, SetKind k, const Tolerances& tol, const AssembleOptions& opt) {
  if (!set_kind_valid(s.variant, k)) throw Error(ErrorCode::BadSetKind, "admissible sets need a controllable input");
  ComputedSet set;
  set.kind = k;
  set.scenario = s;
  set.tolerances = tol;
  set.classification = classify(s);
  if (set.classification.trivial(k)) {
    set.trivial = true;
    return set;
  }
  set.usable = usable_part(s, k);
  set.tangent = tangent_set(s, k);
  const TangentSet& ts = *set.tangent;

  if (!s.seir()) {
    set.abscissas = {ts.z1_lo};
    set.curves.push_back(compute_barrier_curve(s, k, tangent_state(ts, ts.z1_lo), tol));
    set.boundary = sir_boundary(s, set.curves.front(), tol.geom_tol);
    set.special_segments = special_segments(s, &set.curves.front());
    return set;
  }

  const int n = std::max(opt.n_curves, 1);
  // Uniform over [lo, hi).
  for (int i = 0; i < n; ++i) set.abscissas.push_back(ts.z1_lo + (ts.z1_hi - ts.z1_lo) * i / n);
  set.curves.resize(n);
  std::vector<std::exception_ptr> errors(n);
  if (opt.parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
      try {
        set.curves[i] = compute_barrier_curve(s, k, tangent_state(ts, set.abscissas[i]), tol);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    for (int i = 0; i < n; ++i) {
      try {
        set.curves[i] = compute_barrier_curve(s, k, tangent_state(ts, set.abscissas[i]), tol);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  set.mesh_nodes = static_cast<std::size_t>(opt.mesh_nodes);
  set.mesh = geometry::MeshIndex(seir_mesh(set.curves, opt.mesh_nodes));
  set.special_segments = special_segments(s, nullptr);
  return set;
}

// Distance from x to the usable part, a convex polygon in the plane I = I_max.
double usable_distance(const UsablePart& u, const StateVec& x) {
  using geometry::Point2;
  const double di = x.I() - u.i_max;
  if (u.dim == 2) {
    return geometry::segment_distance({x.S(), x.I()}, {0.0, u.i_max}, {u.s_hi, u.i_max});
  }
  const double top = 1.0 - u.i_max;
  std::vector<Point2> poly;
  if (u.e_coeff < top) {
    poly = {{0.0, 0.0}, {top, 0.0}, {top - u.e_coeff, u.e_coeff}, {0.0, u.e_coeff}};
  } else {
    poly = {{0.0, 0.0}, {top, 0.0}, {0.0, top}};
  }
  const Point2 p{x.S(), x.E()};
  bool inside = true;
  double d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point2 a = poly[i], b = poly[(i + 1) % poly.size()];
    if ((b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x) < 0.0) inside = false;
    d2 = std::min(d2, geometry::segment_distance(p, a, b));
  }
  const double planar = inside ? 0.0 : d2;
  return std::hypot(planar, di);
}

}  // namespace

ComputedSet assemble_set(const Scenario& s, SetKind k, const Tolerances& tol, const AssembleOptions& opt) {
  return assemble(s, k, tol, opt);
}

ComputedSet assemble_set_serial(const Scenario& s, SetKind k, const Tolerances& tol, AssembleOptions opt) {
  opt.parallel = false;
  return assemble(s, k, tol, opt);
}

Membership membership(const ComputedSet& set, const StateVec& x) {
  Membership m;
  if (set.trivial) {
    m.verdict = Verdict::Inside;
    m.distance_estimate = std::numeric_limits<double>::infinity();
    return m;
  }
  const double eps = set.tolerances.boundary_layer_eps;
  if (!set.scenario.seir()) {
    const geometry::Point2 p{x.S(), x.I()};
    const auto near = set.boundary.nearest(p);
    m.distance_estimate = near.distance;
    m.nearest = near.portion;
    if (near.distance <= eps) {
      m.verdict = Verdict::Boundary;
    } else {
      m.verdict = set.boundary.contains(p) ? Verdict::Inside : Verdict::Outside;
    }
    return m;
  }

  const geometry::Point3 p = p3(x);
  const double d_mesh = set.mesh.distance(p);
  const double d_usable = set.usable ? usable_distance(*set.usable, x) : std::numeric_limits<double>::infinity();
  m.distance_estimate = std::min(d_mesh, d_usable);
  m.nearest = d_mesh <= d_usable ? geometry::Portion::Barrier : geometry::Portion::Usable;
  if (m.distance_estimate <= eps) {
    m.verdict = Verdict::Boundary;
    return m;
  }
  // Parity of crossings between x and a reference point deep in the corner S, E, I ≈ 0,
  // which lies in every proper set. Both ends are in the simplex below the cap, so only
  // the barrier surface can be crossed.
  const double delta = std::min(1e-3, set.scenario.i_max / 10.0);
  static constexpr std::array<geometry::Point3, 4> kJitter{
      {{0.0, 0.0, 0.0}, {0.37, 0.61, 0.23}, {0.71, 0.13, 0.52}, {0.19, 0.83, 0.44}}};
  for (const auto& j : kJitter) {
    const geometry::Point3 ref{delta * (1.0 + j.x), delta * (1.0 + j.y), delta * (1.0 + j.z)};
    const auto parity = set.mesh.crossings(p, ref, 1e-7);
    if (parity.ambiguous) continue;
    m.verdict = parity.hits % 2 == 0 ? Verdict::Inside : Verdict::Outside;
    return m;
  }
  m.verdict = Verdict::Unknown;
  return m;
}

}  // namespace epibarrier
