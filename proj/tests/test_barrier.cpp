#include <doctest.h>

#include <cmath>
#include <random>

#include "epibarrier/barrier.hpp"
#include "epibarrier/policy.hpp"
#include "support.hpp"

using namespace epibarrier;
using testing::error_of;

namespace {

const ComputedSet& sir_set(SetKind k) {
  static const ComputedSet a = assemble_set(testing::sir_perfect(0.02), SetKind::Admissible, Tolerances{});
  static const ComputedSet m = assemble_set(testing::sir_perfect(0.02), SetKind::Mrpi, Tolerances{});
  return k == SetKind::Admissible ? a : m;
}

const ComputedSet& seir_set(int which) {
  static const ComputedSet pa = assemble_set(testing::seir_perfect(0.3), SetKind::Admissible, Tolerances{});
  static const ComputedSet pm = assemble_set(testing::seir_perfect(0.3), SetKind::Mrpi, Tolerances{});
  static const ComputedSet p4 = assemble_set(testing::seir_perfect(0.4), SetKind::Mrpi, Tolerances{});
  static const ComputedSet im = assemble_set(testing::seir_imperfect(), SetKind::Mrpi, Tolerances{});
  switch (which) {
    case 0: return pa;
    case 1: return pm;
    case 2: return p4;
    default: return im;
  }
}

// First integral of the SIR flow at constant β: S + I − (γ/β)·ln S.
double sir_first_integral(const StateVec& x, double beta, double gamma) {
  return x.S() + x.I() - (gamma / beta) * std::log(x.S());
}

void check_curve_invariants(const Scenario& s, const BarrierCurve& c, const Tolerances& tol) {
  REQUIRE(c.samples.size() >= 2);
  const StepRecord& first = c.samples.front();
  CHECK(first.t == 0.0);
  for (std::size_t i = 0; i + 1 < s.dim(); ++i) CHECK(first.adjoint[i] == 0.0);
  CHECK(first.adjoint[s.dim() - 1] == 1.0);
  CHECK(std::abs(lie_derivative_g(s.variant, c.tangent_point, first.input)) <= 1e-8);
  double prev_t = 1.0;
  for (std::size_t i = 0; i < c.samples.size(); ++i) {
    const StepRecord& r = c.samples[i];
    CHECK(r.t < prev_t);
    prev_t = r.t;
    CHECK(std::abs(hamiltonian(s, r)) <= tol.ham_tol);
    CHECK(std::abs(r.adjoint.norm() - 1.0) <= 1e-12);
    CHECK(in_simplex(r.state, tol.geom_tol));
    if (i > 0 && i + 1 < c.samples.size()) CHECK(r.state.I() < s.i_max);
    for (Channel ch : active_channels(s.variant)) {
      const double v = channel_value(r.input, ch);
      const Interval& b = channel_bounds(s, ch);
      CHECK((v == b.lo || v == b.hi));
    }
  }
  for (std::size_t i = 1; i < c.switches.size(); ++i) {
    CHECK(std::abs(c.switches[i].t - c.switches[i - 1].t) > 10 * tol.event_time_tol);
  }
  CHECK(c.termination.kind != EventKind::SignChange);
}

}  // namespace

TEST_SUITE("barrier") {

TEST_CASE("extremal input selection") {
  const Scenario s = testing::sir_perfect(0.02);
  const StateVec z = StateVec::sir(0.5 / 0.6, 0.02);
  CHECK(select_extremal_input(s, SetKind::Admissible, z, AdjointVec::cap_normal(2)).beta == 0.6);
  CHECK(select_extremal_input(s, SetKind::Mrpi, StateVec::sir(0.625, 0.02), AdjointVec::cap_normal(2)).beta == 0.8);

  const Scenario e = testing::seir_perfect(0.3);
  const InputVec m = select_extremal_input(e, SetKind::Mrpi, StateVec::seir(0.1, 0.3, 0.3), AdjointVec::cap_normal(3));
  CHECK(m.gamma == e.gamma.lo);
  CHECK(m.beta == e.beta.hi);
  const InputVec a =
      select_extremal_input(e, SetKind::Admissible, StateVec::seir(0.1, 0.5, 0.3), AdjointVec::cap_normal(3));
  CHECK(a.gamma == e.gamma.hi);
  CHECK(a.beta == e.beta.lo);

  const Scenario i = testing::seir_imperfect();
  CHECK(select_extremal_input(i, SetKind::Mrpi, StateVec::seir(0.2, 1.0 / 6.0, 0.1), AdjointVec::cap_normal(3)).eta ==
        i.eta.hi);
  const Scenario si = testing::sir_imperfect();
  CHECK(select_extremal_input(si, SetKind::Mrpi, StateVec::sir(0.5, 0.2), AdjointVec::cap_normal(2)).gamma ==
        si.gamma.lo);

  const double zero[] = {0.0, 0.0};
  CHECK(error_of([&] { select_extremal_input(s, SetKind::Admissible, z, AdjointVec(zero)); }) ==
        ErrorCode::BadArgument);
}

TEST_CASE("SIR barriers are saturated and follow the constant-rate first integral") {
  const Scenario s = testing::sir_perfect(0.02);
  const Tolerances tol;
  for (SetKind k : {SetKind::Admissible, SetKind::Mrpi}) {
    CAPTURE(to_string(k));
    const BarrierCurve& c = sir_set(k).curves.at(0);
    check_curve_invariants(s, c, tol);
    const double beta = k == SetKind::Admissible ? s.beta.lo : s.beta.hi;
    CHECK(c.switches.empty());
    const double v0 = sir_first_integral(c.tangent_point, beta, 0.5);
    for (const auto& r : c.samples) {
      CHECK(r.input.beta == beta);
      CHECK(std::abs(sir_first_integral(r.state, beta, 0.5) - v0) <= 1e-9);
    }
    CHECK((c.termination.kind == EventKind::DomainExit || c.termination.kind == EventKind::IFloor));
  }
  CHECK(std::abs(sir_set(SetKind::Admissible).curves[0].tangent_point.S() - 0.5 / 0.6) <= 1e-12);
  CHECK(std::abs(sir_set(SetKind::Mrpi).curves[0].tangent_point.S() - 0.625) <= 1e-12);
}

TEST_CASE("imperfect SIR barrier keeps the recovery rate at its minimum") {
  const Scenario s = testing::sir_imperfect();
  const ComputedSet set = assemble_set(s, SetKind::Mrpi, Tolerances{});
  REQUIRE(set.curves.size() == 1);
  check_curve_invariants(s, set.curves[0], set.tolerances);
  for (const auto& r : set.curves[0].samples) {
    CHECK(r.input.gamma == s.gamma.lo);
    CHECK(r.input.beta == doctest::Approx(beta_feedback_saturated(r.state.I(), s)).epsilon(1e-15));
  }
}

TEST_CASE("SEIR barrier curves") {
  for (int which = 0; which < 4; ++which) {
    const ComputedSet& set = seir_set(which);
    CAPTURE(which);
    CHECK(set.curves.size() == 30);
    CHECK(set.abscissas.front() == set.tangent->z1_lo);
    for (const auto& c : set.curves) {
      check_curve_invariants(set.scenario, c, set.tolerances);
      CHECK(c.termination.kind != EventKind::Horizon);
      CHECK(c.tangent_point.E() == set.tangent->z2);
    }
    CHECK_FALSE(set.mesh.empty());
  }
}

TEST_CASE("imperfect SEIR: some curve switches the latency rate once, max to min") {
  const ComputedSet& set = seir_set(3);
  int single = 0;
  for (const auto& c : set.curves) {
    if (c.switches.size() == 1 && c.switches[0].channel == Channel::Eta &&
        c.switches[0].from == set.scenario.eta.hi && c.switches[0].to == set.scenario.eta.lo) {
      ++single;
    }
  }
  CHECK(single >= 1);
}

TEST_CASE("SIR boundary polygon is closed and simple") {
  for (SetKind k : {SetKind::Admissible, SetKind::Mrpi}) {
    const ComputedSet& set = sir_set(k);
    const auto& v = set.boundary.vertices();
    const auto& tags = set.boundary.tags();
    REQUIRE(v.size() >= 5);
    CHECK_FALSE(set.boundary.self_intersects());
    const BarrierCurve& c = set.curves[0];
    const StateVec& end = c.samples.back().state;
    // chain starts at the curve's far end and finishes at the tangent point
    CHECK(std::hypot(v[2].x - end.S(), v[2].y - end.I()) <= set.tolerances.geom_tol);
    const std::size_t last = v.size() - 2;
    CHECK(std::hypot(v[last].x - c.tangent_point.S(), v[last].y - c.tangent_point.I()) <= set.tolerances.geom_tol);
    CHECK(tags[last] == geometry::Portion::Usable);
    CHECK(v.back().x == 0.0);
    CHECK(v.back().y == set.scenario.i_max);
    CHECK(v.front().x == 0.0);
    CHECK(v.front().y == 0.0);
    // the closing vertices lie on simplex faces
    CHECK(v[1].y == 0.0);
    const bool on_face = end.I() <= set.tolerances.i_floor + set.tolerances.geom_tol ||
                         std::abs(end.S() + end.I() - 1.0) <= set.tolerances.geom_tol;
    CHECK(on_face);
    const double sum_gap = std::abs(end.S() + end.I() - 1.0);
    CHECK((sum_gap <= 1e-9 || end.I() < 1e-6));
  }
}

TEST_CASE("membership of the worked-example state") {
  const Membership a = membership(sir_set(SetKind::Admissible), StateVec::sir(0.8, 0.012));
  CHECK(a.verdict == Verdict::Inside);
  CHECK(a.distance_estimate > 1e-3);
  const Membership m = membership(sir_set(SetKind::Mrpi), StateVec::sir(0.8, 0.012));
  CHECK(m.verdict == Verdict::Outside);
  CHECK(membership(sir_set(SetKind::Mrpi), StateVec::sir(0.3, 0.01)).verdict == Verdict::Inside);
  const Membership on = membership(sir_set(SetKind::Admissible), StateVec::sir(0.5, 0.02));
  CHECK(on.verdict == Verdict::Boundary);
  CHECK(on.nearest == geometry::Portion::Usable);
  CHECK(membership(sir_set(SetKind::Admissible), StateVec::sir(0.97, 0.019)).verdict == Verdict::Outside);
}

TEST_CASE("trivial sets") {
  const ComputedSet set = assemble_set(testing::sir_perfect(0.4), SetKind::Mrpi, Tolerances{});
  CHECK(set.trivial);
  CHECK(set.curves.empty());
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const double s = u(rng), y = u(rng) * 0.4;
    if (s + y > 1.0) continue;
    CHECK(membership(set, StateVec::sir(s, y)).verdict == Verdict::Inside);
  }
  CHECK(assemble_set(testing::seir_perfect(0.4), SetKind::Admissible, Tolerances{}).trivial);
  CHECK(error_of([] { assemble_set(testing::sir_imperfect(), SetKind::Admissible, Tolerances{}); }) ==
        ErrorCode::BadSetKind);
}

TEST_CASE("barrier separation: offsets across the admissible barrier") {
  const ComputedSet& set = sir_set(SetKind::Admissible);
  const Scenario& s = set.scenario;
  const Tolerances& tol = set.tolerances;
  const BarrierCurve& c = set.curves[0];
  const double eps = tol.boundary_layer_eps;
  const Policy slow = constant_policy(s, {s.beta.lo, 0.5, 0.0});
  const Policy fast = constant_policy(s, {s.beta.hi, 0.5, 0.0});
  int tested = 0;
  for (std::size_t i = c.samples.size() / 10; i + 1 < c.samples.size(); i += c.samples.size() / 10) {
    const StateVec x = c.samples[i].state;
    const StateVec f = state_rhs(s.variant, x, c.samples[i].input);
    const double n = std::hypot(f.S(), f.I());
    // normal pointing to larger I
    double nx = -f.I() / n, ny = f.S() / n;
    if (ny < 0) nx = -nx, ny = -ny;
    const StateVec in = StateVec::sir(x.S() - eps * nx, x.I() - eps * ny);
    const StateVec out = StateVec::sir(x.S() + eps * nx, x.I() + eps * ny);
    if (!in_simplex(out, 0.0) || out.I() >= s.i_max) continue;
    ++tested;
    CHECK_FALSE(simulate(s, slow, in, 500.0, tol).breached);
    CHECK(simulate(s, slow, out, 500.0, tol).breached);
    CHECK(simulate(s, fast, out, 500.0, tol).breached);
  }
  CHECK(tested >= 5);
}

TEST_CASE("SEIR mesh consistency") {
  for (int which = 0; which < 4; ++which) {
    const ComputedSet& set = seir_set(which);
    CAPTURE(which);
    const auto& mesh = set.mesh.mesh();
    const double d = 2 * set.tolerances.boundary_layer_eps;
    int probes = 0, right = 0, unknown = 0;
    for (std::size_t t = 0; t < mesh.triangles.size(); t += 7) {
      const auto& tri = mesh.triangles[t];
      const auto a = mesh.vertices[tri[0]], b = mesh.vertices[tri[1]], c = mesh.vertices[tri[2]];
      const double ux = b.x - a.x, uy = b.y - a.y, uz = b.z - a.z;
      const double vx = c.x - a.x, vy = c.y - a.y, vz = c.z - a.z;
      double nx = uy * vz - uz * vy, ny = uz * vx - ux * vz, nz = ux * vy - uy * vx;
      const double nn = std::sqrt(nx * nx + ny * ny + nz * nz);
      if (nn == 0.0) continue;
      nx /= nn, ny /= nn, nz /= nn;
      if (nz < 0) nx = -nx, ny = -ny, nz = -nz;
      const double mx = (a.x + b.x + c.x) / 3, my = (a.y + b.y + c.y) / 3, mz = (a.z + b.z + c.z) / 3;
      const StateVec in = StateVec::seir(mx - d * nx, my - d * ny, mz - d * nz);
      const StateVec out = StateVec::seir(mx + d * nx, my + d * ny, mz + d * nz);
      for (const auto& [x, want] : {std::pair{in, Verdict::Inside}, std::pair{out, Verdict::Outside}}) {
        if (!in_simplex(x, 0.0) || x.I() >= set.scenario.i_max) continue;
        const Membership m = membership(set, x);
        if (m.verdict == Verdict::Boundary) continue;
        ++probes;
        if (m.verdict == want) ++right;
        if (m.verdict == Verdict::Unknown) ++unknown;
      }
    }
    CHECK(probes > 100);
    CHECK(static_cast<double>(right) / probes >= 0.95);
    // definite wrong verdicts only occur where the mesh folds between neighbouring curves
    // with different termination faces
    CHECK(probes - right - unknown <= probes / 100);
  }
}

namespace {

// Max pointwise distance between arc-length resamplings of curves traced at successive
// step sizes. Records are taken every `spacing` days so successive runs share sample times.
std::vector<double> refinement_gaps(const std::vector<double>& hs, double spacing, bool retry) {
  const Scenario s = testing::sir_perfect(0.02);
  const StateVec z = StateVec::sir(0.5 / 0.6, 0.02);
  std::vector<std::vector<StateVec>> grids;
  for (double h : hs) {
    CurveOptions opt;
    opt.h = h;
    opt.record_every = static_cast<int>(std::lround(spacing / h));
    opt.retry = retry;
    grids.push_back(resample_arc_length(compute_barrier_curve(s, SetKind::Admissible, z, Tolerances{}, opt).samples, 400));
  }
  std::vector<double> gaps;
  for (std::size_t g = 1; g < grids.size(); ++g) {
    double d = 0.0;
    for (std::size_t i = 0; i < grids[g].size(); ++i) {
      d = std::max(d, std::hypot(grids[g][i].S() - grids[g - 1][i].S(), grids[g][i].I() - grids[g - 1][i].I()));
    }
    gaps.push_back(d);
  }
  return gaps;
}

}  // namespace

TEST_CASE("barrier curves converge at fourth order in the step size") {
  const auto coarse = refinement_gaps({0.2, 0.1, 0.05}, 0.4, false);
  MESSAGE("coarse gaps ", coarse[0], " ", coarse[1]);
  CHECK(coarse[0] / coarse[1] >= 8.0);
  CHECK(coarse[0] / coarse[1] <= 32.0);
  // at the default step the truncation error is already below roundoff
  const auto fine = refinement_gaps({1e-3, 5e-4, 2.5e-4}, 0.01, true);
  MESSAGE("fine gaps ", fine[0], " ", fine[1]);
  CHECK(fine[0] <= 1e-12);
  CHECK(fine[1] <= 1e-12);
}

TEST_CASE("arc-length resampling") {
  std::vector<StepRecord> line(11);
  for (int i = 0; i <= 10; ++i) line[i].state = StateVec::sir(i * 0.1, 0.0);
  const auto r = resample_arc_length(line, 5);
  REQUIRE(r.size() == 5);
  for (int i = 0; i < 5; ++i) CHECK(r[i].S() == doctest::Approx(i * 0.25));
}

TEST_CASE("parallel assembly matches the serial reference") {
  const Tolerances tol;
  AssembleOptions opt;
  opt.n_curves = 12;
  const Scenario s = testing::seir_imperfect();
  const ComputedSet par = assemble_set(s, SetKind::Mrpi, tol, opt);
  const ComputedSet ser = assemble_set_serial(s, SetKind::Mrpi, tol, opt);
  REQUIRE(par.curves.size() == ser.curves.size());
  for (std::size_t c = 0; c < par.curves.size(); ++c) {
    REQUIRE(par.curves[c].samples.size() == ser.curves[c].samples.size());
    for (std::size_t i = 0; i < par.curves[c].samples.size(); ++i) {
      for (std::size_t k = 0; k < s.dim(); ++k) {
        CHECK(par.curves[c].samples[i].state[k] == ser.curves[c].samples[i].state[k]);
      }
    }
  }
  CHECK(par.mesh.mesh().triangles.size() == ser.mesh.mesh().triangles.size());
}

}  // TEST_SUITE
