#pragma once

#include <string_view>
#include <vector>

#include "epibarrier/core.hpp"

namespace epibarrier {

/// Effective rates acting on the state. For imperfect variants beta (and, for SEIR,
/// gamma) carry the feedback values; the disturbance sits in its own field.
struct InputVec {
  double beta = 0.0;
  double gamma = 0.0;
  double eta = 0.0;
};

enum class Channel { Beta, Gamma, Eta };

std::string_view to_string(Channel c);

/// Channels that are free inputs (controls or disturbances) for the variant.
std::vector<Channel> active_channels(ModelVariant v);

/// Rates that appear as CSV columns: free inputs plus feedback-driven rates.
std::vector<Channel> reported_channels(ModelVariant v);

double channel_value(const InputVec& u, Channel c);
void set_channel(InputVec& u, Channel c, double value);
const Interval& channel_bounds(const Scenario& s, Channel c);

StateVec sir_rhs(const StateVec& x, double beta, double gamma);
StateVec seir_rhs(const StateVec& x, double beta, double gamma, double eta);
StateVec state_rhs(ModelVariant v, const StateVec& x, const InputVec& u);

/// β̂(I) = β_min·I/I_max + β_max·(1 − I/I_max). Throws DOMAIN outside [0, I_max] (± geom_tol).
double beta_feedback(double i, const Scenario& s, double geom_tol = 1e-9);
/// γ̂(I) = γ_min·(1 − I/I_max) + γ_max·I/I_max.
double gamma_feedback(double i, const Scenario& s, double geom_tol = 1e-9);

/// Feedback laws with I clamped into [0, I_max]; emitted rates stay in the box.
double beta_feedback_saturated(double i, const Scenario& s);
double gamma_feedback_saturated(double i, const Scenario& s);

/// d(β̂(I)·I)/dI and d(γ̂(I)·I)/dI.
double alpha_of_I(double i, const Scenario& s);
double delta_of_I(double i, const Scenario& s);

/// Completes an input for the variant at state x: imperfect variants get their
/// feedback rates from x, perfect variants get the known rate (γ or η). Free channels
/// are taken from `free`.
InputVec effective_input(const Scenario& s, const StateVec& x, const InputVec& free);

/// λ̇ = A(x, u) λ with A = −(∂f/∂x)ᵀ, written out per variant.
AdjointVec adjoint_rhs(const Scenario& s, const StateVec& x, const AdjointVec& lambda, const InputVec& u);

enum class SwitchTag { SigmaBeta, SigmaGammaSir, SigmaGammaSeir, SigmaEta };

struct SwitchFunctional {
  SwitchTag tag;
  double value;
};

/// σ_β = λ2 − λ1, σ_γ = λ2 (SIR) or λ3 (SEIR), σ_η = λ3 − λ2. Throws BAD_CHANNEL when the
/// channel is not a free input of the variant, BAD_SET_KIND for admissible sets of
/// imperfect variants.
SwitchFunctional switch_value(ModelVariant v, SetKind k, Channel c, const AdjointVec& lambda);

/// Which end of the channel interval is extremal while σ > 0.
bool takes_upper_when_positive(ModelVariant v, SetKind k, Channel c);

/// L_f g for g = I − I_max, i.e. İ.
double lie_derivative_g(ModelVariant v, const StateVec& x, const InputVec& u);

}  // namespace epibarrier
