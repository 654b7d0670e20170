#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "epibarrier/analysis.hpp"
#include "epibarrier/core.hpp"
#include "epibarrier/geometry.hpp"
#include "epibarrier/integrate.hpp"
#include "epibarrier/models.hpp"

namespace epibarrier {

struct SwitchEvent {
  double t;
  Channel channel;
  double from;  // value held on the tangent side
  double to;
};

struct BarrierCurve {
  SetKind kind = SetKind::Admissible;
  StateVec tangent_point;
  /// Ordered by decreasing t, starting at t = 0 on the cap.
  std::vector<StepRecord> samples;
  EventSpec termination;
  std::vector<SwitchEvent> switches;
  /// Set when two switches fell closer than 10·event_time_tol and the curve was cut there.
  bool truncated = false;
  double step_h = 0.0;
};

/// Extremal input for backward integration from (x, λ). A switching functional that is
/// exactly zero is resolved by the sign of its time derivative (backward side).
/// Throws SINGULAR_ARC when both are below 1e-12.
InputVec select_extremal_input(const Scenario& s, SetKind k, const StateVec& x, const AdjointVec& lambda);

/// λ̂ᵀ f(x, ū) with λ̂ the unit adjoint.
double hamiltonian(const Scenario& s, const StepRecord& r);

struct CurveOptions {
  double h = 0.0;         // 0 uses tolerances.step_h
  int record_every = 10;
  bool retry = true;      // one retry at h/10 on INVARIANT_BREACH
};

BarrierCurve compute_barrier_curve(const Scenario& s, SetKind k, const StateVec& tangent_point,
                                   const Tolerances& tol, const CurveOptions& opt = {});

StateVec tangent_state(const TangentSet& t, double z1);

/// Analytic pieces of the boundary: equilibrium lines and face segments.
struct SpecialSegment {
  std::string label;
  std::vector<StateVec> points;
};

enum class Verdict { Inside, Outside, Boundary, Unknown };

std::string_view to_string(Verdict v);
Verdict parse_verdict(std::string_view s);

struct Membership {
  Verdict verdict = Verdict::Unknown;
  double distance_estimate = 0.0;
  /// Boundary portion closest to the query (Barrier or Usable).
  geometry::Portion nearest = geometry::Portion::Face;
};

struct ComputedSet {
  SetKind kind = SetKind::Admissible;
  Scenario scenario;
  Tolerances tolerances;
  Classification classification;
  bool trivial = false;
  std::optional<UsablePart> usable;
  std::optional<TangentSet> tangent;
  std::vector<double> abscissas;  // z1 of each curve's tangent point
  std::vector<BarrierCurve> curves;
  std::vector<SpecialSegment> special_segments;
  geometry::BoundaryPolygon boundary;  // SIR
  geometry::MeshIndex mesh;            // SEIR barrier surface
  std::size_t mesh_nodes = 0;          // nodes per curve in the mesh
};

struct AssembleOptions {
  int n_curves = 30;     // SEIR only
  int mesh_nodes = 200;  // SEIR only
  bool parallel = true;
};

/// Trivial sets come back with no curves. SIR sets carry one curve and a closed boundary
/// polygon; SEIR sets carry n_curves curves and a triangulated surface.
ComputedSet assemble_set(const Scenario& s, SetKind k, const Tolerances& tol, const AssembleOptions& opt = {});
/// Single-threaded reference for assemble_set.
ComputedSet assemble_set_serial(const Scenario& s, SetKind k, const Tolerances& tol, AssembleOptions opt = {});

/// Builds the SIR boundary polygon from a barrier curve. The barrier chain is simplified
/// to within geom_tol/10 of the samples.
geometry::BoundaryPolygon sir_boundary(const Scenario& s, const BarrierCurve& c, double geom_tol);
/// Resamples curves to `nodes` arc-length nodes and joins neighbours with triangles.
geometry::TriMesh seir_mesh(const std::vector<BarrierCurve>& curves, int nodes);
std::vector<SpecialSegment> special_segments(const Scenario& s, const BarrierCurve* sir_curve);

/// Arc-length resampling of a curve's states.
std::vector<StateVec> resample_arc_length(const std::vector<StepRecord>& samples, int nodes);

Membership membership(const ComputedSet& set, const StateVec& x);

}  // namespace epibarrier
