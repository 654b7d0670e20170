#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "epibarrier/barrier.hpp"
#include "epibarrier/core.hpp"
#include "epibarrier/models.hpp"

namespace epibarrier {

enum class PolicyKind { Constant, AffineFeedback, SwitchingLaw, ExtremalBang };

std::string_view to_string(PolicyKind k);

struct BangSegment {
  double t_start;
  InputVec value;  // free channels only
};

/// Input policy. Switching-law policies refer to sets owned by the caller, which must
/// outlive every simulation using them.
struct Policy {
  PolicyKind kind = PolicyKind::Constant;
  /// Constant: every rate. AffineFeedback: the disturbance (γ for SIR, η for SEIR).
  InputVec values;
  const ComputedSet* admissible = nullptr;
  const ComputedSet* mrpi = nullptr;
  std::vector<BangSegment> segments;
  std::uint64_t seed = 0;
  std::uint64_t trial = 0;

  std::string describe() const;
};

/// Rejects (BAD_ARGUMENT) values outside the scenario box. Known rates are filled in.
Policy constant_policy(const Scenario& s, InputVec values);
/// β̂(I) (and γ̂(I) for SEIR) with a constant disturbance; defaults to the worst case
/// (γ_min for SIR, η_max for SEIR).
Policy feedback_policy(const Scenario& s, std::optional<double> disturbance = std::nullopt);
Policy switching_policy(const ComputedSet& admissible, const ComputedSet& mrpi);
/// Random piecewise-constant signal over the free channels, values at the box corners.
Policy extremal_bang_policy(const Scenario& s, double t_end, std::uint64_t seed, std::uint64_t trial,
                            int segments = 8);
/// Constant policies at every corner of the free-channel box.
std::vector<Policy> corner_policies(const Scenario& s);

/// Generator for trial `trial` of a seeded run; independent of evaluation order.
std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t trial);

/// Set-based law for the perfect SIR model: β_max inside either set, β_min on the barrier
/// or outside, γ/S (clamped) on the usable part.
InputVec switching_law(const StateVec& x, const ComputedSet& admissible, const ComputedSet& mrpi,
                       const Scenario& s);

InputVec policy_input(const Scenario& s, const Policy& p, double t, const StateVec& x);

struct TrajectorySample {
  double t;
  StateVec state;
  InputVec input;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  bool breached = false;
  double max_I = 0.0;
  std::optional<double> first_breach_time;
};

struct SimOptions {
  int record_every = 10;
  bool stop_on_breach = false;
  /// Stop once the cap can no longer be reached under the policy's input range.
  bool stop_when_settled = false;
};

/// Forward RK4 at tolerances.step_h. Constant and feedback inputs are evaluated inside
/// every stage; switching-law and bang inputs are held over each step.
Trajectory simulate(const Scenario& s, const Policy& p, const StateVec& x0, double t_end, const Tolerances& tol,
                    const SimOptions& opt = {});

/// n trials with the disturbance drawn once per trial, uniformly over its interval.
std::vector<Trajectory> monte_carlo(const Scenario& s, const StateVec& x0, const Policy& base, int n_trials,
                                    std::uint64_t seed, double t_end, const Tolerances& tol);
std::vector<Trajectory> monte_carlo_serial(const Scenario& s, const StateVec& x0, const Policy& base, int n_trials,
                                           std::uint64_t seed, double t_end, const Tolerances& tol);
/// The disturbance value used by trial `trial`.
double monte_carlo_draw(const Scenario& s, std::uint64_t seed, std::uint64_t trial);

struct SetPair {
  const ComputedSet* admissible = nullptr;
  const ComputedSet* mrpi = nullptr;
};

struct Counterexample {
  std::string policy;
  std::uint64_t seed = 0;
  std::uint64_t trial = 0;
  Trajectory trajectory;
};

struct OracleReport {
  StateVec point;
  Membership claimed;
  int n_trials = 0;  // simulations actually run
  bool agree = true;
  /// False for BOUNDARY/UNKNOWN claims, which the oracle does not judge.
  bool evaluated = false;
  std::optional<Counterexample> counterexample;
};

/// Brute-force check of the claimed verdict by forward simulation.
/// MRPI: corner constants and n_trials bang signals; INSIDE agrees iff nothing breaches.
/// Admissible: constant β_min (β_min, γ_max for SEIR) and, for SIR, the switching law;
/// INSIDE agrees iff one of them avoids breach, OUTSIDE iff all breach.
OracleReport membership_oracle(const Scenario& s, SetKind k, const SetPair& sets, const StateVec& point,
                               int n_trials, std::uint64_t seed, const Tolerances& tol, double t_end = 500.0);

struct GridCell {
  StateVec point;
  OracleReport report;
};

/// Cell-centred n×n grid over S ∈ [0, 1], I ∈ [0, I_max]; cells outside the simplex are
/// skipped. SIR only.
std::vector<GridCell> oracle_grid(const Scenario& s, SetKind k, const SetPair& sets, int n, int n_trials,
                                  std::uint64_t seed, const Tolerances& tol, double t_end = 500.0);
std::vector<GridCell> oracle_grid_serial(const Scenario& s, SetKind k, const SetPair& sets, int n, int n_trials,
                                         std::uint64_t seed, const Tolerances& tol, double t_end = 500.0);

}  // namespace epibarrier
