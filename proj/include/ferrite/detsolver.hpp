#pragma once

#include <vector>

#include "ferrite/field.hpp"
#include "ferrite/geometry.hpp"
#include "ferrite/xslib.hpp"

namespace ferrite {

struct SolverSettings {
  double tolerance = 1.0e-5;  // cellwise max relative scalar-flux change
  int max_iterations = 2000;  // per-group sweep cap
  AngularQuadrature quadrature;
  void validate() const;
};

struct SolveDiagnostics {
  int iterations = 0;              // total sweeps over all groups
  double final_residual = 0.0;     // worst last-iteration residual over groups
  std::vector<double> residuals;   // per-sweep history, groups concatenated
  double leakage = 0.0;            // boundary loss, per unit source
  double absorption = 0.0;
};

// Multigroup 2-D diamond-difference discrete ordinates with source iteration.
// Group-sequential: one downward (forward) or upward (adjoint) pass with
// within-group iteration; no upscatter outside thermal self-scatter.
FluxField solve_forward(const MGLibrary& lib, const Geometry2D& geom, const FixedSource& q,
                        const SolverSettings& settings, SolveDiagnostics* diag = nullptr);

// Transposed scattering transfer, reversed group order, reversed sweep
// directions; same spatial machinery.
FluxField solve_adjoint(const MGLibrary& lib, const Geometry2D& geom, const FixedSource& q_adj,
                        const SolverSettings& settings, SolveDiagnostics* diag = nullptr);

}  // namespace ferrite
