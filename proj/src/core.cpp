#include "epibarrier/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace epibarrier {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::RejectBounds: return "REJECT_BOUNDS";
    case ErrorCode::RejectCap: return "REJECT_CAP";
    case ErrorCode::RejectFields: return "REJECT_FIELDS";
    case ErrorCode::RejectTolerances: return "REJECT_TOLERANCES";
    case ErrorCode::BadState: return "BAD_STATE";
    case ErrorCode::BadArgument: return "BAD_ARGUMENT";
    case ErrorCode::Domain: return "DOMAIN";
    case ErrorCode::BadChannel: return "BAD_CHANNEL";
    case ErrorCode::BadSetKind: return "BAD_SET_KIND";
    case ErrorCode::Nonfinite: return "NONFINITE";
    case ErrorCode::SingularArc: return "SINGULAR_ARC";
    case ErrorCode::EmptyTangent: return "EMPTY_TANGENT";
    case ErrorCode::InvariantBreach: return "INVARIANT_BREACH";
  }
  return "UNKNOWN";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

std::string_view to_string(ModelVariant v) {
  switch (v) {
    case ModelVariant::SirPerfect: return "SIR_PERFECT";
    case ModelVariant::SeirPerfect: return "SEIR_PERFECT";
    case ModelVariant::SirImperfect: return "SIR_IMPERFECT";
    case ModelVariant::SeirImperfect: return "SEIR_IMPERFECT";
  }
  return "?";
}

ModelVariant parse_variant(std::string_view s) {
  for (auto v : {ModelVariant::SirPerfect, ModelVariant::SeirPerfect, ModelVariant::SirImperfect,
                 ModelVariant::SeirImperfect}) {
    if (to_string(v) == s) return v;
  }
  throw Error(ErrorCode::RejectFields, "unknown variant '" + std::string(s) + "'");
}

std::string_view to_string(SetKind k) { return k == SetKind::Admissible ? "admissible" : "mrpi"; }

SetKind parse_set_kind(std::string_view s) {
  if (s == "admissible") return SetKind::Admissible;
  if (s == "mrpi") return SetKind::Mrpi;
  throw Error(ErrorCode::BadArgument, "set kind must be 'admissible' or 'mrpi'");
}

// ---- tolerances ----

void Tolerances::validate() const {
  const double vals[] = {geom_tol, ham_tol, event_time_tol, boundary_layer_eps, i_floor, step_h, t_back_max};
  for (double v : vals) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::RejectTolerances, "tolerances must be finite and strictly positive");
    }
  }
  if (!(event_time_tol < step_h)) {
    throw Error(ErrorCode::RejectTolerances, "event_time_tol must be smaller than step_h");
  }
}

void set_tolerance(Tolerances& tol, std::string_view key, double value) {
  if (key == "geom_tol") tol.geom_tol = value;
  else if (key == "ham_tol") tol.ham_tol = value;
  else if (key == "event_time_tol") tol.event_time_tol = value;
  else if (key == "boundary_layer_eps") tol.boundary_layer_eps = value;
  else if (key == "i_floor") tol.i_floor = value;
  else if (key == "step_h") tol.step_h = value;
  else if (key == "t_back_max") tol.t_back_max = value;
  else throw Error(ErrorCode::RejectTolerances, "unknown tolerance '" + std::string(key) + "'");
}

Tolerances parse_tolerances(const nlohmann::json& doc) {
  Tolerances tol;
  if (doc.is_null()) return tol;
  if (!doc.is_object()) throw Error(ErrorCode::RejectTolerances, "tolerances must be an object");
  for (const auto& [key, val] : doc.items()) {
    if (!val.is_number()) throw Error(ErrorCode::RejectTolerances, "tolerance '" + key + "' is not a number");
    set_tolerance(tol, key, val.get<double>());
  }
  tol.validate();
  return tol;
}

nlohmann::json to_json(const Tolerances& tol) {
  return {{"geom_tol", tol.geom_tol},
          {"ham_tol", tol.ham_tol},
          {"event_time_tol", tol.event_time_tol},
          {"boundary_layer_eps", tol.boundary_layer_eps},
          {"i_floor", tol.i_floor},
          {"step_h", tol.step_h},
          {"t_back_max", tol.t_back_max}};
}

// ---- state vectors ----

StateVec StateVec::from_span(std::span<const double> c) {
  if (c.size() == 2) return sir(c[0], c[1]);
  if (c.size() == 3) return seir(c[0], c[1], c[2]);
  throw Error(ErrorCode::BadState, "state must have 2 or 3 components");
}

double StateVec::sum() const {
  double s = 0.0;
  for (std::size_t k = 0; k < dim_; ++k) s += c_[k];
  return s;
}

AdjointVec::AdjointVec(std::span<const double> c) : dim_(c.size()) {
  if (dim_ < 2 || dim_ > 3) throw Error(ErrorCode::BadArgument, "adjoint must have 2 or 3 components");
  std::copy(c.begin(), c.end(), c_.begin());
}

AdjointVec AdjointVec::cap_normal(std::size_t dim) {
  std::array<double, 3> c{};
  c[dim - 1] = 1.0;
  return AdjointVec(std::span<const double>(c.data(), dim));
}

double AdjointVec::norm() const {
  double s = 0.0;
  for (std::size_t k = 0; k < dim_; ++k) s += c_[k] * c_[k];
  return std::sqrt(s);
}

AdjointVec AdjointVec::normalized() const {
  AdjointVec out = *this;
  const double n = norm();
  if (n > 0.0) {
    for (std::size_t k = 0; k < dim_; ++k) out.c_[k] /= n;
  }
  return out;
}

bool in_simplex(const StateVec& x, double geom_tol) {
  for (double c : x.components()) {
    if (!std::isfinite(c) || c < -geom_tol) return false;
  }
  return x.sum() <= 1.0 + geom_tol;
}

StateVec make_state(ModelVariant v, std::span<const double> c, double geom_tol) {
  if (c.size() != state_dim(v)) {
    throw Error(ErrorCode::BadState, "expected " + std::to_string(state_dim(v)) + " state components for " +
                                         std::string(to_string(v)));
  }
  StateVec x = StateVec::from_span(c);
  if (!in_simplex(x, geom_tol)) throw Error(ErrorCode::BadState, "state outside the simplex");
  return x;
}

double reconstruct_removed(const StateVec& x) { return std::clamp(1.0 - x.sum(), 0.0, 1.0); }

// ---- scenario validation ----

namespace {

struct RateField {
  bool present = false;
  bool is_interval = false;
};

RateField inspect(const nlohmann::json& raw, const char* key) {
  RateField f;
  auto it = raw.find(key);
  if (it == raw.end()) return f;
  f.present = true;
  if (it->is_number()) return f;
  if (it->is_array() && it->size() == 2 && (*it)[0].is_number() && (*it)[1].is_number()) {
    f.is_interval = true;
    return f;
  }
  throw Error(ErrorCode::RejectFields, std::string("field '") + key + "' must be a number or [lo, hi]");
}

Interval read_rate(const nlohmann::json& raw, const char* key) {
  const auto& v = raw.at(key);
  if (v.is_number()) {
    double x = v.get<double>();
    return {x, x};
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

}  // namespace

Scenario validate_scenario(const nlohmann::json& raw) {
  if (!raw.is_object()) throw Error(ErrorCode::RejectFields, "scenario must be a JSON object");

  static const std::set<std::string> known = {"variant", "beta", "gamma", "eta", "i_max", "tolerances"};
  for (const auto& [key, _] : raw.items()) {
    if (!known.count(key)) throw Error(ErrorCode::RejectFields, "unexpected field '" + key + "'");
  }
  auto variant_it = raw.find("variant");
  if (variant_it == raw.end() || !variant_it->is_string()) {
    throw Error(ErrorCode::RejectFields, "missing 'variant'");
  }
  Scenario s;
  s.variant = parse_variant(variant_it->get<std::string>());

  auto cap_it = raw.find("i_max");
  if (cap_it == raw.end() || !cap_it->is_number()) throw Error(ErrorCode::RejectFields, "missing numeric 'i_max'");

  const RateField beta = inspect(raw, "beta");
  const RateField gamma = inspect(raw, "gamma");
  const RateField eta = inspect(raw, "eta");

  if (!beta.present || !beta.is_interval) throw Error(ErrorCode::RejectFields, "'beta' must be [lo, hi]");
  if (!gamma.present) throw Error(ErrorCode::RejectFields, "missing 'gamma'");
  const bool gamma_scalar = s.variant == ModelVariant::SirPerfect;
  if (gamma.is_interval == gamma_scalar) {
    throw Error(ErrorCode::RejectFields,
                gamma_scalar ? "'gamma' must be a number for SIR_PERFECT" : "'gamma' must be [lo, hi]");
  }
  if (s.seir()) {
    if (!eta.present) throw Error(ErrorCode::RejectFields, "missing 'eta'");
    const bool eta_scalar = s.variant == ModelVariant::SeirPerfect;
    if (eta.is_interval == eta_scalar) {
      throw Error(ErrorCode::RejectFields,
                  eta_scalar ? "'eta' must be a number for SEIR_PERFECT" : "'eta' must be [lo, hi]");
    }
  } else if (eta.present) {
    throw Error(ErrorCode::RejectFields, "'eta' is not a field of SIR variants");
  }

  s.beta = read_rate(raw, "beta");
  s.gamma = read_rate(raw, "gamma");
  if (s.seir()) s.eta = read_rate(raw, "eta");
  s.i_max = cap_it->get<double>();

  auto check = [](const Interval& r, const char* name) {
    if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || !(r.lo > 0.0) || !(r.lo <= r.hi)) {
      throw Error(ErrorCode::RejectBounds, std::string("'") + name + "' must satisfy 0 < lo <= hi");
    }
  };
  check(s.beta, "beta");
  check(s.gamma, "gamma");
  if (s.seir()) check(s.eta, "eta");

  if (!(s.i_max > 0.0 && s.i_max < 1.0)) throw Error(ErrorCode::RejectCap, "i_max must lie in (0, 1)");
  return s;
}

nlohmann::json to_json(const Scenario& s) {
  auto rate = [](const Interval& r, bool scalar) -> nlohmann::json {
    if (scalar) return r.lo;
    return nlohmann::json::array({r.lo, r.hi});
  };
  nlohmann::json j;
  j["variant"] = std::string(to_string(s.variant));
  j["beta"] = rate(s.beta, false);
  j["gamma"] = rate(s.gamma, s.variant == ModelVariant::SirPerfect);
  if (s.seir()) j["eta"] = rate(s.eta, s.variant == ModelVariant::SeirPerfect);
  j["i_max"] = s.i_max;
  return j;
}

}  // namespace epibarrier
