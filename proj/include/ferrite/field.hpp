#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ferrite/geometry.hpp"

namespace ferrite {

// Cell x group scalar field. Rows are cells (iz*nx+ix), columns groups.
struct FluxField {
  Eigen::ArrayXXd values;
  bool adjoint = false;
  std::string geometry_hash;
  std::string library_hash;
  int iterations = 0;
  double final_residual = 0.0;

  int n_cells() const { return static_cast<int>(values.rows()); }
  int n_groups() const { return static_cast<int>(values.cols()); }
};

// Emission density per cell x group (particles / cm^3 per unit time).
struct FixedSource {
  Eigen::ArrayXXd density;

  int n_cells() const { return static_cast<int>(density.rows()); }
  int n_groups() const { return static_cast<int>(density.cols()); }
  void validate() const;
  bool is_zero() const;

  // Total emission, Sum q V.
  double total(const Geometry2D& geom) const;
  // Scaled so the total emission is one particle.
  FixedSource normalized(const Geometry2D& geom) const;
};

// Uniform fission-spectrum emission over a named region.
FixedSource make_region_source(const Geometry2D& geom, const std::string& region,
                               const Eigen::ArrayXd& spectrum_by_group);

// Volume- and group-weighted inner product, fixed summation order
// (cell-major, group-minor) for reproducibility.
double inner_product(const Eigen::ArrayXXd& a, const Eigen::ArrayXXd& b,
                     const Eigen::ArrayXd& volumes);
double inner_product(const FluxField& a, const FixedSource& b, const Geometry2D& geom);

// R = Sum_{cells in region} Sum_g w_g phi V.
double response(const FluxField& flux, const Eigen::ArrayXd& group_weights,
                const std::vector<int>& region, const Geometry2D& geom);

// Flux file: header with provenance plus one record per cell x group.
std::string serialize_flux(const FluxField& f);
FluxField parse_flux(const std::string& text);
void write_flux(const FluxField& f, const std::string& path);
FluxField read_flux(const std::string& path);
std::string flux_hash(const FluxField& f);

}  // namespace ferrite
