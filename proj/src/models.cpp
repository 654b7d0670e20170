#include "epibarrier/models.hpp"

#include <algorithm>

namespace epibarrier {

std::string_view to_string(Channel c) {
  switch (c) {
    case Channel::Beta: return "beta";
    case Channel::Gamma: return "gamma";
    case Channel::Eta: return "eta";
  }
  return "?";
}

std::vector<Channel> active_channels(ModelVariant v) {
  switch (v) {
    case ModelVariant::SirPerfect: return {Channel::Beta};
    case ModelVariant::SeirPerfect: return {Channel::Beta, Channel::Gamma};
    case ModelVariant::SirImperfect: return {Channel::Gamma};
    case ModelVariant::SeirImperfect: return {Channel::Eta};
  }
  return {};
}

std::vector<Channel> reported_channels(ModelVariant v) {
  switch (v) {
    case ModelVariant::SirPerfect: return {Channel::Beta};
    case ModelVariant::SeirPerfect: return {Channel::Beta, Channel::Gamma};
    case ModelVariant::SirImperfect: return {Channel::Beta, Channel::Gamma};
    case ModelVariant::SeirImperfect: return {Channel::Beta, Channel::Gamma, Channel::Eta};
  }
  return {};
}

double channel_value(const InputVec& u, Channel c) {
  switch (c) {
    case Channel::Beta: return u.beta;
    case Channel::Gamma: return u.gamma;
    case Channel::Eta: return u.eta;
  }
  return 0.0;
}

void set_channel(InputVec& u, Channel c, double value) {
  switch (c) {
    case Channel::Beta: u.beta = value; break;
    case Channel::Gamma: u.gamma = value; break;
    case Channel::Eta: u.eta = value; break;
  }
}

const Interval& channel_bounds(const Scenario& s, Channel c) {
  switch (c) {
    case Channel::Beta: return s.beta;
    case Channel::Gamma: return s.gamma;
    case Channel::Eta: return s.eta;
  }
  return s.beta;
}

StateVec sir_rhs(const StateVec& x, double beta, double gamma) {
  const double infection = beta * x.S() * x.I();
  return StateVec::sir(-infection, infection - gamma * x.I());
}

StateVec seir_rhs(const StateVec& x, double beta, double gamma, double eta) {
  const double infection = beta * x.S() * x.I();
  const double onset = eta * x.E();
  return StateVec::seir(-infection, infection - onset, onset - gamma * x.I());
}

StateVec state_rhs(ModelVariant v, const StateVec& x, const InputVec& u) {
  return is_seir(v) ? seir_rhs(x, u.beta, u.gamma, u.eta) : sir_rhs(x, u.beta, u.gamma);
}

namespace {

void check_feedback_domain(double i, const Scenario& s, double geom_tol) {
  if (!s.imperfect()) throw Error(ErrorCode::Domain, "feedback laws apply to imperfect variants only");
  if (i < -geom_tol || i > s.i_max + geom_tol) throw Error(ErrorCode::Domain, "I outside [0, i_max]");
}

}  // namespace

double beta_feedback(double i, const Scenario& s, double geom_tol) {
  check_feedback_domain(i, s, geom_tol);
  const double r = i / s.i_max;
  return s.beta.lo * r + s.beta.hi * (1.0 - r);
}

double gamma_feedback(double i, const Scenario& s, double geom_tol) {
  check_feedback_domain(i, s, geom_tol);
  const double r = i / s.i_max;
  return s.gamma.lo * (1.0 - r) + s.gamma.hi * r;
}

double beta_feedback_saturated(double i, const Scenario& s) {
  const double r = std::clamp(i / s.i_max, 0.0, 1.0);
  return s.beta.lo * r + s.beta.hi * (1.0 - r);
}

double gamma_feedback_saturated(double i, const Scenario& s) {
  const double r = std::clamp(i / s.i_max, 0.0, 1.0);
  return s.gamma.lo * (1.0 - r) + s.gamma.hi * r;
}

double alpha_of_I(double i, const Scenario& s) {
  return 2.0 * ((s.beta.lo - s.beta.hi) / s.i_max) * i + s.beta.hi;
}

double delta_of_I(double i, const Scenario& s) {
  return 2.0 * ((s.gamma.hi - s.gamma.lo) / s.i_max) * i + s.gamma.lo;
}

InputVec effective_input(const Scenario& s, const StateVec& x, const InputVec& free) {
  InputVec u = free;
  switch (s.variant) {
    case ModelVariant::SirPerfect:
      u.gamma = s.gamma.lo;
      break;
    case ModelVariant::SeirPerfect:
      u.eta = s.eta.lo;
      break;
    case ModelVariant::SirImperfect:
      u.beta = beta_feedback_saturated(x.I(), s);
      break;
    case ModelVariant::SeirImperfect:
      u.beta = beta_feedback_saturated(x.I(), s);
      u.gamma = gamma_feedback_saturated(x.I(), s);
      break;
  }
  return u;
}

AdjointVec adjoint_rhs(const Scenario& s, const StateVec& x, const AdjointVec& lambda, const InputVec& u) {
  // Row-by-row products of the adjoint matrices, equal to −(∂f/∂x)ᵀ.
  const double S = x.S();
  const double I = x.I();
  const double l1 = lambda[0];
  const double l2 = lambda[1];
  switch (s.variant) {
    case ModelVariant::SirPerfect: {
      const double b = u.beta;
      const double g = u.gamma;
      const double d[2] = {b * I * l1 - b * I * l2, b * S * l1 + (-b * S + g) * l2};
      return AdjointVec(d);
    }
    case ModelVariant::SirImperfect: {
      const double bh = u.beta;
      const double a = alpha_of_I(I, s);
      const double g = u.gamma;
      const double d[2] = {bh * I * l1 - bh * I * l2, a * S * l1 + (-a * S + g) * l2};
      return AdjointVec(d);
    }
    case ModelVariant::SeirPerfect: {
      const double l3 = lambda[2];
      const double b = u.beta;
      const double g = u.gamma;
      const double e = u.eta;
      const double d[3] = {b * I * l1 - b * I * l2, e * l2 - e * l3, b * S * l1 - b * S * l2 + g * l3};
      return AdjointVec(d);
    }
    case ModelVariant::SeirImperfect: {
      const double l3 = lambda[2];
      const double bh = u.beta;
      const double e = u.eta;
      const double a = alpha_of_I(I, s);
      const double dl = delta_of_I(I, s);
      const double d[3] = {bh * I * l1 - bh * I * l2, e * l2 - e * l3, a * S * l1 - a * S * l2 + dl * l3};
      return AdjointVec(d);
    }
  }
  return lambda;
}

SwitchFunctional switch_value(ModelVariant v, SetKind k, Channel c, const AdjointVec& lambda) {
  if (!set_kind_valid(v, k)) throw Error(ErrorCode::BadSetKind, "admissible sets need a controllable input");
  const auto channels = active_channels(v);
  if (std::find(channels.begin(), channels.end(), c) == channels.end()) {
    throw Error(ErrorCode::BadChannel,
                std::string(to_string(c)) + " is not a free input of " + std::string(to_string(v)));
  }
  switch (c) {
    case Channel::Beta: return {SwitchTag::SigmaBeta, lambda[1] - lambda[0]};
    case Channel::Gamma:
      return is_seir(v) ? SwitchFunctional{SwitchTag::SigmaGammaSeir, lambda[2]}
                        : SwitchFunctional{SwitchTag::SigmaGammaSir, lambda[1]};
    case Channel::Eta: return {SwitchTag::SigmaEta, lambda[2] - lambda[1]};
  }
  throw Error(ErrorCode::BadChannel, "unknown channel");
}

bool takes_upper_when_positive(ModelVariant v, SetKind k, Channel c) {
  // Admissible barriers minimise the Hamiltonian, MRPI barriers maximise it. With
  // H = β·SI·σ_β + ... − γ·I·σ_γ + η·E·σ_η, rates entering with a plus sign take their
  // upper bound under maximisation when σ > 0; γ enters with a minus sign.
  const bool maximise = k == SetKind::Mrpi;
  switch (c) {
    case Channel::Beta: return maximise;
    case Channel::Gamma: return !maximise;
    case Channel::Eta: return maximise;
  }
  (void)v;
  return maximise;
}

double lie_derivative_g(ModelVariant v, const StateVec& x, const InputVec& u) {
  if (is_seir(v)) return u.eta * x.E() - u.gamma * x.I();
  return u.beta * x.S() * x.I() - u.gamma * x.I();
}

}  // namespace epibarrier
