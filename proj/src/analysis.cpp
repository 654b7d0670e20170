#include "epibarrier/analysis.hpp"

#include <algorithm>

namespace epibarrier {

std::string_view to_string(ClassTag t) {
  switch (t) {
    case ClassTag::AllEqualG: return "ALL_EQUAL_G";
    case ClassTag::MrpiProper: return "MRPI_PROPER";
    case ClassTag::BothProper: return "BOTH_PROPER";
    case ClassTag::MEqualG: return "M_EQUAL_G";
    case ClassTag::MProper: return "M_PROPER";
  }
  return "?";
}

bool Classification::trivial(SetKind k) const {
  switch (tag) {
    case ClassTag::AllEqualG: return true;
    case ClassTag::MrpiProper: return k == SetKind::Admissible;
    case ClassTag::BothProper: return false;
    case ClassTag::MEqualG: return true;
    case ClassTag::MProper: return false;
  }
  return false;
}

Classification classify(const Scenario& s) {
  const double cap = s.i_max;
  switch (s.variant) {
    case ModelVariant::SirPerfect: {
      const double bound = s.gamma.lo / (1.0 - cap);
      Classification c{ClassTag::BothProper,
                       {{"beta_max vs gamma/(1-i_max)", s.beta.hi, bound},
                        {"beta_min vs gamma/(1-i_max)", s.beta.lo, bound}}};
      if (s.beta.hi <= bound) c.tag = ClassTag::AllEqualG;
      else if (s.beta.lo <= bound) c.tag = ClassTag::MrpiProper;
      return c;
    }
    case ModelVariant::SirImperfect: {
      const double bound = s.gamma.lo / (1.0 - cap);
      Classification c{ClassTag::MProper, {{"beta_min vs gamma_min/(1-i_max)", s.beta.lo, bound}}};
      if (s.beta.lo <= bound) c.tag = ClassTag::MEqualG;
      return c;
    }
    case ModelVariant::SeirPerfect: {
      const double eta = s.eta.lo;
      const double at_gmin = eta * (1.0 - cap) - s.gamma.lo * cap;
      const double at_gmax = eta * (1.0 - cap) - s.gamma.hi * cap;
      Classification c{ClassTag::BothProper,
                       {{"eta(1-i_max) - gamma_min*i_max vs 0", at_gmin, 0.0},
                        {"eta(1-i_max) - gamma_max*i_max vs 0", at_gmax, 0.0}}};
      if (at_gmin <= 0.0) c.tag = ClassTag::AllEqualG;
      else if (at_gmax <= 0.0) c.tag = ClassTag::MrpiProper;
      return c;
    }
    case ModelVariant::SeirImperfect: {
      const double lhs = s.eta.hi * (1.0 - cap) - s.gamma.hi * cap;
      Classification c{ClassTag::MProper, {{"eta_max(1-i_max) - gamma_max*i_max vs 0", lhs, 0.0}}};
      if (lhs <= 0.0) c.tag = ClassTag::MEqualG;
      return c;
    }
  }
  throw Error(ErrorCode::BadArgument, "unknown variant");
}

double UsablePart::e_cap(double s) const { return std::min(e_coeff, 1.0 - s - i_max); }

bool UsablePart::contains(double s, double e, double tol) const {
  if (s < -tol || s > s_hi + tol) return false;
  if (dim == 2) return true;
  return e >= -tol && e <= e_cap(s) + tol;
}

namespace {

void require_kind(const Scenario& s, SetKind k) {
  if (!set_kind_valid(s.variant, k)) {
    throw Error(ErrorCode::BadSetKind, "admissible sets are undefined for " + std::string(to_string(s.variant)));
  }
}

// Contact rate in force at the cap for the extremal barrier input.
double beta_at_cap(const Scenario& s, SetKind k) {
  if (s.imperfect()) return s.beta.lo;  // β̂(I_max) = β_min
  return k == SetKind::Admissible ? s.beta.lo : s.beta.hi;
}

// (γ*, η*) in force at the cap for SEIR: the E value where L_f g = 0 is (γ*/η*)·I_max.
std::pair<double, double> seir_cap_rates(const Scenario& s, SetKind k) {
  if (s.variant == ModelVariant::SeirImperfect) return {s.gamma.hi, s.eta.hi};
  return {k == SetKind::Admissible ? s.gamma.hi : s.gamma.lo, s.eta.lo};
}

}  // namespace

UsablePart usable_part(const Scenario& s, SetKind k) {
  require_kind(s, k);
  UsablePart u{k, s.dim(), s.i_max, 0.0, 0.0};
  if (!s.seir()) {
    // gamma.lo is the known γ (perfect) or the worst-case γ_min (imperfect).
    u.s_hi = std::min(s.gamma.lo / beta_at_cap(s, k), 1.0 - s.i_max);
  } else {
    const auto [g, e] = seir_cap_rates(s, k);
    u.s_hi = 1.0 - s.i_max;
    u.e_coeff = (g / e) * s.i_max;
  }
  return u;
}

TangentSet tangent_set(const Scenario& s, SetKind k) {
  require_kind(s, k);
  TangentSet t{k, s.dim(), s.i_max, 0.0, 0.0, 0.0, 0.0};
  if (!s.seir()) {
    const double beta = beta_at_cap(s, k);
    const double z1 = s.gamma.lo / beta;
    if (z1 + s.i_max > 1.0) throw Error(ErrorCode::EmptyTangent, "tangent point lies outside the simplex");
    t.z1_lo = t.z1_hi = z1;
    // d/dt(β S I − γ I) at İ = 0 reduces to β·Ṡ·I = −β² S I².
    t.second_derivative = -beta * beta * z1 * s.i_max * s.i_max;
  } else {
    const auto [g, e] = seir_cap_rates(s, k);
    t.z2 = (g / e) * s.i_max;
    t.z1_hi = 1.0 - t.z2 - s.i_max;
    if (t.z1_hi < 0.0) throw Error(ErrorCode::EmptyTangent, "tangent segment is empty");
  }
  return backward_filter(s, k, t);
}

TangentSet backward_filter(const Scenario& s, SetKind k, const TangentSet& t) {
  TangentSet out = t;
  if (!s.seir()) {
    if (!(t.second_derivative < 0.0)) {
      throw Error(ErrorCode::EmptyTangent, "barrier curve does not evolve backward into I < I_max");
    }
    return out;
  }
  // One-sided second derivative of g at the tangent point is η*·I_max·(β*·z1 − γ*),
  // negative exactly when z1 < γ*/β*.
  double gamma_star = 0.0;
  double beta_star = 0.0;
  if (s.variant == ModelVariant::SeirImperfect || k == SetKind::Admissible) {
    gamma_star = s.gamma.hi;
    beta_star = s.beta.lo;
  } else {
    gamma_star = s.gamma.lo;
    beta_star = s.beta.hi;
  }
  out.z1_lo = std::max(0.0, t.z1_lo);
  out.z1_hi = std::min({t.z1_hi, gamma_star / beta_star, 1.0 - t.z2 - s.i_max});
  if (out.z1_hi < out.z1_lo) throw Error(ErrorCode::EmptyTangent, "filtered tangent segment is empty");
  return out;
}

}  // namespace epibarrier
