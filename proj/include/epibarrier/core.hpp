#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

namespace epibarrier {

enum class ErrorCode {
  RejectBounds,
  RejectCap,
  RejectFields,
  RejectTolerances,
  BadState,
  BadArgument,
  Domain,
  BadChannel,
  BadSetKind,
  Nonfinite,
  SingularArc,
  EmptyTangent,
  InvariantBreach,
};

/// Stable upper-case token for an error code, e.g. "REJECT_BOUNDS".
std::string_view error_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

enum class ModelVariant { SirPerfect, SeirPerfect, SirImperfect, SeirImperfect };

std::string_view to_string(ModelVariant v);
ModelVariant parse_variant(std::string_view s);

constexpr bool is_seir(ModelVariant v) {
  return v == ModelVariant::SeirPerfect || v == ModelVariant::SeirImperfect;
}
constexpr bool is_imperfect(ModelVariant v) {
  return v == ModelVariant::SirImperfect || v == ModelVariant::SeirImperfect;
}
constexpr std::size_t state_dim(ModelVariant v) { return is_seir(v) ? 3 : 2; }

enum class SetKind { Admissible, Mrpi };

std::string_view to_string(SetKind k);
SetKind parse_set_kind(std::string_view s);

/// Admissible sets need a controllable input; imperfect models only have disturbances.
constexpr bool set_kind_valid(ModelVariant v, SetKind k) {
  return !(is_imperfect(v) && k == SetKind::Admissible);
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double mid() const { return 0.5 * (lo + hi); }
  double width() const { return hi - lo; }
  bool contains(double x, double tol = 0.0) const { return x >= lo - tol && x <= hi + tol; }
  double clamp(double x) const { return x < lo ? lo : (x > hi ? hi : x); }
};

/// Model parameters and the infection cap. A known rate is stored as a degenerate
/// interval (lo == hi), so γ for SIR_PERFECT reads the same through gamma.lo/gamma.hi.
struct Scenario {
  ModelVariant variant = ModelVariant::SirPerfect;
  Interval beta;
  Interval gamma;
  Interval eta;  // unused for SIR variants
  double i_max = 0.0;

  std::size_t dim() const { return state_dim(variant); }
  bool seir() const { return is_seir(variant); }
  bool imperfect() const { return is_imperfect(variant); }
};

struct Tolerances {
  double geom_tol = 1e-9;
  double ham_tol = 1e-6;
  double event_time_tol = 1e-10;
  double boundary_layer_eps = 1e-3;
  double i_floor = 1e-9;
  double step_h = 1e-3;
  double t_back_max = 1000.0;

  /// Throws REJECT_TOLERANCES unless all fields are positive and event_time_tol < step_h.
  void validate() const;
};

/// Applies `key=value` style overrides; unknown keys raise REJECT_TOLERANCES.
void set_tolerance(Tolerances& tol, std::string_view key, double value);
Tolerances parse_tolerances(const nlohmann::json& doc);
nlohmann::json to_json(const Tolerances& tol);

/// Reduced compartment state: (S, I) for SIR, (S, E, I) for SEIR.
class StateVec {
 public:
  StateVec() = default;
  static StateVec sir(double s, double i) { return StateVec({s, i, 0.0}, 2); }
  static StateVec seir(double s, double e, double i) { return StateVec({s, e, i}, 3); }
  static StateVec from_span(std::span<const double> c);

  std::size_t dim() const { return dim_; }
  double S() const { return c_[0]; }
  double E() const { return dim_ == 3 ? c_[1] : 0.0; }
  double I() const { return c_[dim_ - 1]; }
  double operator[](std::size_t k) const { return c_[k]; }
  double& operator[](std::size_t k) { return c_[k]; }
  std::span<const double> components() const { return {c_.data(), dim_}; }
  double sum() const;

 private:
  StateVec(std::array<double, 3> c, std::size_t dim) : c_(c), dim_(dim) {}
  std::array<double, 3> c_{};
  std::size_t dim_ = 2;
};

class AdjointVec {
 public:
  AdjointVec() = default;
  explicit AdjointVec(std::span<const double> c);
  /// The terminal adjoint Dg = (0,...,0,1) for g = I - I_max.
  static AdjointVec cap_normal(std::size_t dim);

  std::size_t dim() const { return dim_; }
  double operator[](std::size_t k) const { return c_[k]; }
  double& operator[](std::size_t k) { return c_[k]; }
  std::span<const double> components() const { return {c_.data(), dim_}; }
  double norm() const;
  AdjointVec normalized() const;

 private:
  std::array<double, 3> c_{};
  std::size_t dim_ = 2;
};

bool in_simplex(const StateVec& x, double geom_tol);

/// Builds a state for the variant's dimension, rejecting (BAD_STATE) points outside the
/// reduced simplex by more than geom_tol.
StateVec make_state(ModelVariant v, std::span<const double> c, double geom_tol);

/// R = 1 - sum of the reduced components, clamped to [0, 1].
double reconstruct_removed(const StateVec& x);

/// Parses a scenario document. Every document yields a Scenario or exactly one of
/// REJECT_FIELDS, REJECT_BOUNDS, REJECT_CAP (checked in that order).
Scenario validate_scenario(const nlohmann::json& raw);
nlohmann::json to_json(const Scenario& s);

}  // namespace epibarrier
