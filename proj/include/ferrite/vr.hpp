#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "ferrite/field.hpp"
#include "ferrite/geometry.hpp"

namespace ferrite {

enum class VrMode { cadis, fwcadis_cell_group, fwcadis_cell_integrated };
std::string to_string(VrMode m);
VrMode vr_mode_from(const std::string& s);

struct ResonanceFactorSettings {
  bool enabled = false;
  double exponent = 1.0;       // M
  double ratio_clamp_lo = 1e-3;
  double ratio_clamp_hi = 1e3;
};

struct AdjointSourceSpec {
  VrMode mode = VrMode::fwcadis_cell_group;
  std::string detector_region = "detector";        // CADIS mode
  Eigen::ArrayXd response_weights;                 // per group; CADIS + cell_integrated
  double flux_floor = 1e-30;                       // eps_phi
  ResonanceFactorSettings resonance_factor;
  void validate() const;
};

// FW-CADIS adjoint source from a converged forward flux (Eq.-8 style).
FixedSource fwcadis_adjoint_source(const FluxField& phi, const AdjointSourceSpec& spec);

// CADIS adjoint source: detector-region response, cell-wise forward-flux
// weighted when use_forward_flux (the response weights always apply).
FixedSource cadis_adjoint_source(const FluxField& phi, const Geometry2D& geom,
                                 const AdjointSourceSpec& spec, bool use_forward_flux = true);

struct ResonanceFactorResult {
  FixedSource source;
  long clipped_cells = 0;  // ratio^M landed outside the clamp
};

// q_dag = clip((phi_res/phi_dilute)^M) * q_fwc, applied globally.
ResonanceFactorResult resonance_factor_source(const FluxField& phi_res,
                                              const FluxField& phi_dilute, double exponent,
                                              const FixedSource& q_fwc,
                                              const ResonanceFactorSettings& clamp,
                                              double flux_floor = 1e-30);

struct ImportanceMap {
  Eigen::ArrayXXd imp;  // phi_dag / R, cell x group
  double normalization = 0.0;  // R = <q, phi_dag>
  std::string geometry_hash, library_hash;
  std::string mode_label;
  double exponent = 0.0;
};

// imp = phi_dag / <q, phi_dag> with q the true forward source.
ImportanceMap build_importance(const FluxField& phi_adj, const FixedSource& q,
                               const Geometry2D& geom);

struct WeightWindow {
  double lo = 0.0, center = 0.0, hi = 0.0;
  bool enabled = false;
};

struct WeightWindowMap {
  std::vector<WeightWindow> windows;  // cell-major, coarse-group-minor
  int n_cells = 0, n_groups = 0;      // coarse groups
  double ratio = 10.0;                // rho = hi/lo
  std::vector<int> fine_to_coarse;    // fine group -> coarse group
  std::string geometry_hash, importance_hash;

  const WeightWindow& at(int cell, int coarse_group) const {
    return windows[cell * n_groups + coarse_group];
  }
  const WeightWindow& at_fine(int cell, int fine_group) const {
    return windows[cell * n_groups + fine_to_coarse[fine_group]];
  }
};

struct WindowCaps {
  double center_lo = 1e-12;
  double center_hi = 1e12;
};

WeightWindowMap build_weight_windows(const ImportanceMap& map, double ratio,
                                     const WindowCaps& caps = {}, double flux_floor = 1e-30);

struct BiasedSource {
  struct Bin {
    int cell = 0;
    int group = 0;
    double probability = 0.0;  // sampling probability of the bin
    double born_weight = 1.0;
    double true_mass = 0.0;    // q V / total, the unbiased bin mass
  };
  std::vector<Bin> bins;
  std::vector<double> cdf;  // cumulative probabilities, same order as bins
  std::string geometry_hash;

  void finalize();  // builds the cdf, checks normalization
};

// Consistent source biasing: sampling density q phi_dag / R, born weight
// R / phi_dag. R must be <q, phi_dag> over the same mesh.
BiasedSource bias_source(const FixedSource& q, const FluxField& phi_adj, double normalization,
                         const Geometry2D& geom);

// Analog sampling of the true source, unit born weights.
BiasedSource analog_source(const FixedSource& q, const Geometry2D& geom);

// Artifact files, bit-exact round trip.
std::string serialize_importance(const ImportanceMap& m);
ImportanceMap parse_importance(const std::string& text);
void write_importance(const ImportanceMap& m, const std::string& path);
ImportanceMap read_importance(const std::string& path);
std::string importance_hash(const ImportanceMap& m);

std::string serialize_weight_windows(const WeightWindowMap& m);
WeightWindowMap parse_weight_windows(const std::string& text);
void write_weight_windows(const WeightWindowMap& m, const std::string& path);
WeightWindowMap read_weight_windows(const std::string& path);
std::string weight_window_hash(const WeightWindowMap& m);

std::string serialize_biased_source(const BiasedSource& s);
BiasedSource parse_biased_source(const std::string& text);
void write_biased_source(const BiasedSource& s, const std::string& path);
BiasedSource read_biased_source(const std::string& path);

}  // namespace ferrite
