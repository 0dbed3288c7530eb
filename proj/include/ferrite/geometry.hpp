#pragma once

#include <Eigen/Dense>
#include <array>
#include <map>
#include <string>
#include <vector>

#include "ferrite/error.hpp"

namespace ferrite {

enum class Bc { vacuum, reflective };

enum Side { side_xlo = 0, side_xhi = 1, side_zlo = 2, side_zhi = 3 };

// 2-D x-z Cartesian mesh with a material id per cell and named cell regions.
// Cell index = iz * nx + ix; cell "volume" is the x-z area per cm of y.
class Geometry2D {
 public:
  Geometry2D() = default;
  Geometry2D(Eigen::ArrayXd x_edges, Eigen::ArrayXd z_edges, std::vector<int> material_of_cell,
             std::vector<std::string> material_names, std::array<Bc, 4> bc,
             std::map<std::string, std::vector<int>> regions);

  int nx() const { return static_cast<int>(x_edges_.size()) - 1; }
  int nz() const { return static_cast<int>(z_edges_.size()) - 1; }
  int n_cells() const { return nx() * nz(); }
  int cell_index(int ix, int iz) const { return iz * nx() + ix; }
  int ix_of(int cell) const { return cell % nx(); }
  int iz_of(int cell) const { return cell / nx(); }
  double dx(int ix) const { return x_edges_[ix + 1] - x_edges_[ix]; }
  double dz(int iz) const { return z_edges_[iz + 1] - z_edges_[iz]; }
  const Eigen::ArrayXd& x_edges() const { return x_edges_; }
  const Eigen::ArrayXd& z_edges() const { return z_edges_; }
  int material_at(int cell) const { return material_of_cell_[cell]; }
  const std::vector<std::string>& material_names() const { return material_names_; }
  Bc bc(Side s) const { return bc_[s]; }

  const Eigen::ArrayXd& volumes() const { return volumes_; }
  double total_volume() const { return volumes_.sum(); }

  const std::vector<int>& region(const std::string& name) const;
  bool has_region(const std::string& name) const { return regions_.count(name) > 0; }
  const std::map<std::string, std::vector<int>>& regions() const { return regions_; }

  std::string hash() const;  // content hash over edges, materials, bcs, regions

 private:
  Eigen::ArrayXd x_edges_, z_edges_;
  std::vector<int> material_of_cell_;
  std::vector<std::string> material_names_;
  std::array<Bc, 4> bc_{Bc::vacuum, Bc::vacuum, Bc::vacuum, Bc::vacuum};
  std::map<std::string, std::vector<int>> regions_;
  Eigen::ArrayXd volumes_;
};

struct GeometryConfig {
  double x_max_cm = 53.0;
  double z_max_cm = 140.0;
  double pitch_cm = 1.0;
  // refined band in x (paper-style mesh tightening around the plate)
  double refine_x_lo_cm = 24.0;
  double refine_x_hi_cm = 29.0;
  double refine_pitch_cm = 0.25;

  // z-layers bottom to top: [z_lo, z_hi) -> material name
  struct Layer {
    double z_lo_cm, z_hi_cm;
    std::string material;
  };
  std::vector<Layer> layers = {{0.0, 15.0, "source_mix"},
                               {15.0, 30.0, "steel"},
                               {30.0, 130.0, "water"},
                               {130.0, 140.0, "air"}};

  bool plate_enabled = true;
  double plate_x_lo_cm = 25.0, plate_x_hi_cm = 28.0;
  double plate_z_lo_cm = 30.0, plate_z_hi_cm = 130.0;
  std::string plate_material = "plate";

  // source region: all x over the first layer by default
  double source_z_lo_cm = 0.0, source_z_hi_cm = 15.0;
  // exit/detector region after the plate
  double exit_z_lo_cm = 130.0, exit_z_hi_cm = 132.0;
  // centerline band through the plate
  double centerline_x_lo_cm = 26.0, centerline_x_hi_cm = 27.0;

  std::array<Bc, 4> bc{Bc::vacuum, Bc::vacuum, Bc::vacuum, Bc::vacuum};
};

Geometry2D build_geometry(const GeometryConfig& cfg);

// Degenerate single-cell mesh with reflective sides, for infinite-medium tests.
Geometry2D make_infinite_medium_cell(const std::string& material, double side_cm = 1.0);

// Uniform rectangular mesh with one material everywhere.
Geometry2D make_uniform_box(int nx, int nz, double dx_cm, double dz_cm,
                            const std::string& material, std::array<Bc, 4> bc);

// Echo file: cell counts and region sizes, for golden-file checks.
std::string geometry_echo(const Geometry2D& g);

// Product Gauss-Legendre (polar cosine) x uniform azimuthal ordinate set.
struct Ordinate {
  double mu;   // x-direction cosine
  double xi;   // z-direction cosine
  double eta;  // y cosine implied by normalization
  double w;
};

struct AngularQuadrature {
  std::vector<Ordinate> ordinates;
  int n_polar = 0, n_azim = 0;
  // index of the ordinate mirrored in mu (x) or xi (z), for reflective faces
  std::vector<int> mirror_mu, mirror_xi;
};

AngularQuadrature build_quadrature(int n_polar, int n_azim);

}  // namespace ferrite
