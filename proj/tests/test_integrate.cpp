#include <doctest.h>

#include <cmath>

#include "epibarrier/integrate.hpp"
#include "support.hpp"

using namespace epibarrier;
using testing::error_of;

TEST_SUITE("integrate") {

TEST_CASE("RK4 on trivial and linear problems") {
  const auto zero = [](double, const OdeVec<2>&) { return OdeVec<2>{0.0, 0.0}; };
  const OdeVec<2> y{0.3, -2.0};
  CHECK(rk4_step<2>(zero, 0.0, y, 0.1) == y);

  const auto decay = [](double, const OdeVec<1>& v) { return OdeVec<1>{-v[0]}; };
  const OdeVec<1> y1 = rk4_step<1>(decay, 0.0, {1.0}, 1e-3);
  CHECK(std::abs(y1[0] - std::exp(-1e-3)) <= 1e-15);

  const auto blow = [](double, const OdeVec<1>&) { return OdeVec<1>{std::numeric_limits<double>::infinity()}; };
  CHECK(error_of([&] { rk4_step<1>(blow, 0.0, {1.0}, 1e-3); }) == ErrorCode::Nonfinite);
}

TEST_CASE("RK4 converges at fourth order") {
  const auto f = [](double t, const OdeVec<1>& v) { return OdeVec<1>{std::cos(t) * v[0]}; };
  auto run = [&](double h) {
    OdeVec<1> y{1.0};
    const int n = static_cast<int>(std::lround(2.0 / h));
    for (int i = 0; i < n; ++i) y = rk4_step<1>(f, i * h, y, h);
    return std::abs(y[0] - std::exp(std::sin(2.0)));
  };
  const double e1 = run(0.1);
  const double e2 = run(0.05);
  CHECK(e1 / e2 > 14.0);
  CHECK(e1 / e2 < 18.0);
}

TEST_CASE("SIR forward step keeps the simplex sum non-increasing") {
  const auto rhs = [](double, const OdeVec<2>& v) {
    const StateVec d = sir_rhs(StateVec::sir(v[0], v[1]), 0.8, 0.5);
    return OdeVec<2>{d.S(), d.I()};
  };
  OdeVec<2> y{0.8, 0.012};
  for (int i = 0; i < 20000; ++i) {
    const OdeVec<2> next = rk4_step<2>(rhs, 0.0, y, 1e-3);
    CHECK(next[0] + next[1] <= y[0] + y[1] + 1e-15);
    CHECK(next[1] >= 0.0);
    y = next;
  }
}

TEST_CASE("sign-change event is located to the time tolerance") {
  const auto clock = [](double, const OdeVec<1>&) { return OdeVec<1>{1.0}; };
  EventFunction<1> ev{{EventKind::SignChange, 0, true}, [](double, const OdeVec<1>& y) { return y[0]; },
                      [](const OdeVec<1>& y) { return y[0]; }};
  IntegrateOptions opt;
  opt.h = 1e-3;
  opt.t_span = 10.0;
  const auto r = integrate_until<1>(clock, {ev}, OdeVec<1>{-0.3337}, 0.0, opt);
  CHECK(r.terminal.kind == EventKind::SignChange);
  CHECK(std::abs(r.t_end - 0.3337) <= 1e-10);
  CHECK(r.y_end[0] > 0.0);
  // bracketing: the functional changes sign across the event within the tolerance
  CHECK(r.y_end[0] - 1e-10 <= 0.0);
}

TEST_CASE("an already-triggered face ends immediately") {
  const auto still = [](double, const OdeVec<2>&) { return OdeVec<2>{0.0, 0.0}; };
  EventFunction<2> floor_ev{{EventKind::IFloor, 3, true}, [](double, const OdeVec<2>& y) { return 1e-9 - y[1]; }, {}};
  const auto r = integrate_until<2>(still, {floor_ev}, OdeVec<2>{0.5, 0.0}, 0.0, IntegrateOptions{});
  CHECK(r.terminal.kind == EventKind::IFloor);
  CHECK(r.t_end == 0.0);
  CHECK(r.samples.size() == 1);
}

TEST_CASE("horizon terminates at the span and records on schedule") {
  const auto decay = [](double, const OdeVec<1>& v) { return OdeVec<1>{-v[0]}; };
  IntegrateOptions opt;
  opt.h = -1e-2;
  opt.t_span = 1.0;
  opt.record_every = 10;
  const auto r = integrate_until<1>(decay, {}, OdeVec<1>{1.0}, 0.0, opt);
  CHECK(r.terminal.kind == EventKind::Horizon);
  CHECK(r.t_end == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(std::abs(r.y_end[0] - std::exp(1.0)) < 1e-9);
  CHECK(r.samples.size() == 11);
}

TEST_CASE("persistent zero functional raises SINGULAR_ARC") {
  const auto still = [](double, const OdeVec<1>&) { return OdeVec<1>{0.0}; };
  EventFunction<1> ev{{EventKind::SignChange, 0, true}, [](double, const OdeVec<1>&) { return -1.0; },
                      [](const OdeVec<1>&) { return 0.0; }};
  CHECK(error_of([&] { integrate_until<1>(still, {ev}, OdeVec<1>{0.0}, 0.0, IntegrateOptions{}); }) ==
        ErrorCode::SingularArc);
}

TEST_CASE("forward then backward returns to the start") {
  const auto rhs = [](double, const OdeVec<2>& v) {
    const StateVec d = sir_rhs(StateVec::sir(v[0], v[1]), 0.7, 0.5);
    return OdeVec<2>{d.S(), d.I()};
  };
  IntegrateOptions fwd;
  fwd.h = 1e-3;
  fwd.t_span = 10.0;
  const OdeVec<2> y0{0.8, 0.05};
  const auto a = integrate_until<2>(rhs, {}, y0, 0.0, fwd);
  IntegrateOptions back = fwd;
  back.h = -1e-3;
  const auto b = integrate_until<2>(rhs, {}, a.y_end, a.t_end, back);
  CHECK(std::abs(b.y_end[0] - y0[0]) <= 1e-8);
  CHECK(std::abs(b.y_end[1] - y0[1]) <= 1e-8);
}

TEST_CASE("integration is deterministic") {
  const auto rhs = [](double, const OdeVec<2>& v) {
    const StateVec d = sir_rhs(StateVec::sir(v[0], v[1]), 0.7, 0.5);
    return OdeVec<2>{d.S(), d.I()};
  };
  IntegrateOptions opt;
  opt.t_span = 5.0;
  const auto a = integrate_until<2>(rhs, {}, OdeVec<2>{0.8, 0.05}, 0.0, opt);
  const auto b = integrate_until<2>(rhs, {}, OdeVec<2>{0.8, 0.05}, 0.0, opt);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].t == b.samples[i].t);
    CHECK(a.samples[i].y == b.samples[i].y);
  }
}

TEST_CASE("zero step is rejected") {
  IntegrateOptions opt;
  opt.h = 0.0;
  const auto still = [](double, const OdeVec<1>&) { return OdeVec<1>{0.0}; };
  CHECK(error_of([&] { integrate_until<1>(still, {}, OdeVec<1>{0.0}, 0.0, opt); }) == ErrorCode::BadArgument);
}

}  // TEST_SUITE
