#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "ferrite/error.hpp"

namespace ferrite {

namespace energy {
// Global evaluation range for pointwise cross sections (eV).
constexpr double min_ev = 1.0e-4;
constexpr double max_ev = 2.5e7;
// Reference energy for 1/v capture.
constexpr double reference_ev = 0.0253;
}  // namespace energy

// Lethargy is measured down from the top edge of a structure, u = ln(e_top/E).
inline double lethargy_of(double e_top, double e) { return std::log(e_top / e); }
inline double energy_of(double e_top, double u) { return e_top * std::exp(-u); }

// Group edges in eV, strictly decreasing; group 0 is the highest-energy group
// and the single thermal group is the last one.
class EnergyGroupStructure {
 public:
  EnergyGroupStructure() = default;
  EnergyGroupStructure(Eigen::ArrayXd bounds, int thermal_index);

  int n_groups() const { return static_cast<int>(bounds_.size()) - 1; }
  double upper(int g) const { return bounds_[g]; }
  double lower(int g) const { return bounds_[g + 1]; }
  double top() const { return bounds_[0]; }
  double bottom() const { return bounds_[n_groups()]; }
  int thermal_index() const { return thermal_index_; }
  double thermal_cutoff_ev() const { return bounds_[thermal_index_]; }
  bool is_thermal(int g) const { return g == thermal_index_; }
  double width_lethargy(int g) const { return std::log(upper(g) / lower(g)); }
  const Eigen::ArrayXd& bounds() const { return bounds_; }

  // Group containing energy e; edges resolve to the higher-energy group.
  int group_of(double e) const;

  // Per-group weights w_g = 1 for nonthermal groups, 0 for the thermal group.
  Eigen::ArrayXd nonthermal_weights() const;

 private:
  Eigen::ArrayXd bounds_;
  int thermal_index_ = 0;
};

// n_groups-1 equal-lethargy nonthermal groups over [cutoff, e_max] plus one
// thermal group down to e_min.
EnergyGroupStructure make_equal_lethargy_structure(int n_groups, double e_max_ev,
                                                   double cutoff_ev, double e_min_ev);

// Coarse structure whose nonthermal edges are a subset of the fine structure's,
// so the two nest exactly.
EnergyGroupStructure make_nested_coarse(const EnergyGroupStructure& fine, int n_coarse);

// fine group index -> coarse group index (requires nested structures).
std::vector<int> map_fine_to_coarse(const EnergyGroupStructure& fine,
                                    const EnergyGroupStructure& coarse);

// Infinite-medium weighting flux per unit lethargy: fission-like shape at high
// energy, constant (1/E in energy) through the slowing-down range, flat in
// energy below the thermal cutoff.
class WeightSpectrum {
 public:
  enum class Segment { fission, slowing_down, thermal };

  static WeightSpectrum standard(double fission_break_ev = 1.0e5,
                                 double fission_temperature_ev = 1.4e6,
                                 double thermal_cutoff_ev = 0.625);

  double value(double e_ev) const;
  Segment segment_of(double e_ev) const;

  double fission_break_ev() const { return fission_break_ev_; }
  double thermal_cutoff_ev() const { return thermal_cutoff_ev_; }

 private:
  double fission_break_ev_ = 1.0e5;
  double fission_temperature_ev_ = 1.4e6;
  double thermal_cutoff_ev_ = 0.625;
};

// Fission emission spectrum integrated over a group structure, normalized to
// sum to 1 over the nonthermal groups.
Eigen::ArrayXd fission_spectrum_by_group(const EnergyGroupStructure& groups,
                                         double temperature_ev = 1.4e6);

}  // namespace ferrite
