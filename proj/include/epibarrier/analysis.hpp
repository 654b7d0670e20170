#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "epibarrier/core.hpp"

namespace epibarrier {

enum class ClassTag { AllEqualG, MrpiProper, BothProper, MEqualG, MProper };

std::string_view to_string(ClassTag t);

/// One evaluated side-by-side comparison, "lhs <op> rhs".
struct Witness {
  std::string name;
  double lhs;
  double rhs;
};

struct Classification {
  ClassTag tag;
  std::vector<Witness> witnesses;

  /// True when the set of this kind equals the whole constrained state space.
  bool trivial(SetKind k) const;
};

/// Closed-form triviality test: SIR compares β_max / β_min against γ/(1 − I_max); SEIR
/// evaluates η(1 − I_max) − γ·I_max at γ_min and γ_max (η_max, γ_max for imperfect).
Classification classify(const Scenario& s);

/// Usable part on the face I = I_max. SIR: S ∈ [0, s_hi]. SEIR: S ∈ [0, 1 − I_max] and
/// E ∈ [0, E_cap(S)] with E_cap(S) = min(e_coeff, 1 − S − I_max).
struct UsablePart {
  SetKind kind;
  std::size_t dim;
  double i_max;
  double s_hi;     // SIR upper bound on S; SEIR: 1 − I_max
  double e_coeff;  // SEIR only: (γ*/η*)·I_max

  double e_cap(double s) const;
  bool contains(double s, double e, double tol) const;
};

UsablePart usable_part(const Scenario& s, SetKind k);

/// SIR: a single point (z1, I_max). SEIR: the segment z1 ∈ [z1_lo, z1_hi] at E = z2.
struct TangentSet {
  SetKind kind;
  std::size_t dim;
  double i_max;
  double z1_lo;
  double z1_hi;
  double z2;  // SEIR fixed E value
  double second_derivative;  // SIR: one-sided d²g/dt² at the point, must be < 0

  bool point() const { return dim == 2; }
};

/// Ultimate-tangency points, already restricted by backward_filter. Throws EMPTY_TANGENT
/// when no point of the cap face qualifies (the set is then all of G_Π).
TangentSet tangent_set(const Scenario& s, SetKind k);

/// Restricts z1 to the part whose barrier curves evolve backward into I < I_max.
TangentSet backward_filter(const Scenario& s, SetKind k, const TangentSet& t);

}  // namespace epibarrier
