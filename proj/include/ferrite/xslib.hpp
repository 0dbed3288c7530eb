#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "ferrite/energy.hpp"

namespace ferrite {

struct Resonance {
  double center_ev = 0.0;
  double width_ev = 0.0;       // full width Gamma
  double peak_barns = 0.0;     // added total cross section at the peak
  double capture_fraction = 0.0;
};

// Synthetic pointwise model: flat potential scattering, 1/v capture, and
// Lorentzian resonances split between scatter and capture.
struct ResonanceNuclide {
  std::string id;
  double mass_number = 1.0;
  double potential_barns = 0.0;
  double thermal_capture_barns = 0.0;  // 1/v amplitude at energy::reference_ev
  std::vector<Resonance> resonances;

  // Slowing-down parameter alpha = ((A-1)/(A+1))^2.
  double alpha() const {
    const double r = (mass_number - 1.0) / (mass_number + 1.0);
    return r * r;
  }
  void validate() const;
};

struct PointwiseXs {
  double total = 0.0;
  double scatter = 0.0;
  double absorb = 0.0;
};

PointwiseXs eval_pointwise(const ResonanceNuclide& n, double e_ev);

struct MaterialComposition {
  struct Component {
    std::string nuclide_id;
    double number_density = 0.0;  // atoms / (barn cm)
  };
  std::string id;
  std::vector<Component> components;
  double chord_length_cm = 1.0e4;  // 10 000 cm == the infinitely dilute sentinel
  void validate() const;
};

double chord_length(double volume_cm3, double surface_cm2);
constexpr double infinite_dilute_chord_cm = 1.0e4;
constexpr double dilute_sigma0_barns = 1.0e10;

enum class LibraryMode { dilute, res, fine };
std::string to_string(LibraryMode m);
LibraryMode library_mode_from(const std::string& s);

// Macroscopic multigroup data for one material: totals, absorption, and the
// group-to-group scattering transfer matrix, all in 1/cm.
struct MaterialXs {
  std::string id;
  Eigen::ArrayXd sigma_t;
  Eigen::ArrayXd sigma_a;
  Eigen::MatrixXd transfer;  // transfer(g, g') = Sigma_s, g -> g'
};

struct MGLibrary {
  EnergyGroupStructure groups;
  LibraryMode mode = LibraryMode::dilute;
  std::vector<ResonanceNuclide> nuclides;
  std::vector<MaterialXs> materials;

  const MaterialXs& material(const std::string& id) const;
  int material_index(const std::string& id) const;

  // Hash of the serialized body; set on write/read.
  std::string hash;
};

// Quadrature controls for the condensation integrals.
struct CondenseOptions {
  int min_points_per_group = 400;
  int points_per_width = 40;     // grid points per resonance full width
  double wing_widths = 40.0;     // a resonance influences groups within this many widths
  bool use_escape = true;        // include 1/(N l) in the background cross section
};

// Lethargy quadrature grid for one group, refined to resolve every resonance
// that reaches into it. Returned as energies, highest first.
Eigen::ArrayXd build_group_grid(const EnergyGroupStructure& groups, int g,
                                const std::vector<Resonance>& resonances,
                                const CondenseOptions& opt);

struct DiluteGroupXs {
  Eigen::ArrayXd total, scatter, absorb;  // barns, per group
};

// Eq.-style flux-weighted condensation with W(u) = spectrum.
DiluteGroupXs infinitely_dilute_mg(const ResonanceNuclide& n, const EnergyGroupStructure& groups,
                                   const WeightSpectrum& spectrum,
                                   const CondenseOptions& opt = {});

// Background cross section per group for nuclide j of a material, given the
// per-nuclide per-group totals of all components (barns).
Eigen::ArrayXd background_xs(const MaterialComposition& material, int j,
                             const std::vector<Eigen::ArrayXd>& component_totals_barns,
                             bool use_escape);

struct BondarenkoFactors {
  double f_total = 1.0, f_scatter = 1.0, f_absorb = 1.0;
  bool degenerate = false;  // infinite-dilute value was zero; f pinned to 1
};

BondarenkoFactors bondarenko_factor(const ResonanceNuclide& n, const EnergyGroupStructure& groups,
                                    int g, double sigma0_barns, const WeightSpectrum& spectrum,
                                    const CondenseOptions& opt = {});

MGLibrary build_library(const std::vector<ResonanceNuclide>& nuclides,
                        const std::vector<MaterialComposition>& materials,
                        const EnergyGroupStructure& groups, const WeightSpectrum& spectrum,
                        LibraryMode mode, const CondenseOptions& opt = {});

// Structured-text library file; bit-exact round trip, content hash in header.
std::string library_hash(const MGLibrary& lib);
std::string serialize_library(const MGLibrary& lib);
MGLibrary parse_library(const std::string& text);
void write_library(const MGLibrary& lib, const std::string& path);
MGLibrary read_library(const std::string& path);

}  // namespace ferrite
