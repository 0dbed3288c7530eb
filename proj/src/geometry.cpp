#include "ferrite/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ferrite/hash.hpp"
#include "ferrite/text_io.hpp"

namespace ferrite {

Geometry2D::Geometry2D(Eigen::ArrayXd x_edges, Eigen::ArrayXd z_edges,
                       std::vector<int> material_of_cell, std::vector<std::string> material_names,
                       std::array<Bc, 4> bc, std::map<std::string, std::vector<int>> regions)
    : x_edges_(std::move(x_edges)),
      z_edges_(std::move(z_edges)),
      material_of_cell_(std::move(material_of_cell)),
      material_names_(std::move(material_names)),
      bc_(bc),
      regions_(std::move(regions)) {
  for (int i = 0; i + 1 < x_edges_.size(); ++i)
    if (!(x_edges_[i] < x_edges_[i + 1])) throw ConfigError("x edges must be increasing");
  for (int i = 0; i + 1 < z_edges_.size(); ++i)
    if (!(z_edges_[i] < z_edges_[i + 1])) throw ConfigError("z edges must be increasing");
  if (static_cast<int>(material_of_cell_.size()) != n_cells())
    throw ConfigError("material map size does not match the mesh");
  for (int m : material_of_cell_)
    if (m < 0 || m >= static_cast<int>(material_names_.size()))
      throw ConfigError("cell with invalid material id");
  for (const auto& [name, cells] : regions_)
    for (int c : cells)
      if (c < 0 || c >= n_cells())
        throw ConfigError("region " + name + " references a cell outside the mesh");
  volumes_.resize(n_cells());
  for (int iz = 0; iz < nz(); ++iz)
    for (int ix = 0; ix < nx(); ++ix) volumes_[cell_index(ix, iz)] = dx(ix) * dz(iz);
}

const std::vector<int>& Geometry2D::region(const std::string& name) const {
  auto it = regions_.find(name);
  if (it == regions_.end()) throw ConfigError("geometry has no region '" + name + "'");
  return it->second;
}

std::string Geometry2D::hash() const {
  std::ostringstream s;
  s << "geom ";
  for (int i = 0; i < x_edges_.size(); ++i) s << fmt_double(x_edges_[i]) << ' ';
  s << "| ";
  for (int i = 0; i < z_edges_.size(); ++i) s << fmt_double(z_edges_[i]) << ' ';
  s << "| ";
  for (int m : material_of_cell_) s << m << ' ';
  for (const auto& n : material_names_) s << n << ' ';
  for (Bc b : bc_) s << (b == Bc::vacuum ? 'v' : 'r');
  for (const auto& [name, cells] : regions_) {
    s << '|' << name << ':';
    for (int c : cells) s << c << ' ';
  }
  return content_hash(s.str());
}

namespace {

void append_edges(std::vector<double>& edges, double a, double b, double pitch,
                  const char* what) {
  const int n = static_cast<int>(std::lround((b - a) / pitch));
  if (n < 1 || std::abs(a + n * pitch - b) > 1e-9 * std::max(1.0, std::abs(b)))
    throw ConfigError(std::string(what) + ": extent is not a whole number of cells");
  for (int i = 1; i <= n; ++i) edges.push_back(a + (b - a) * i / n);
}

int edge_index(const Eigen::ArrayXd& edges, double v, const char* what) {
  for (int i = 0; i < edges.size(); ++i)
    if (std::abs(edges[i] - v) <= 1e-9 * std::max(1.0, std::abs(v))) return i;
  throw ConfigError(std::string(what) + " boundary does not conform to a cell edge");
}

}  // namespace

Geometry2D build_geometry(const GeometryConfig& cfg) {
  std::vector<double> xe{0.0};
  const bool refined = cfg.refine_x_hi_cm > cfg.refine_x_lo_cm &&
                       cfg.refine_pitch_cm > 0.0 && cfg.refine_pitch_cm < cfg.pitch_cm;
  if (refined) {
    append_edges(xe, 0.0, cfg.refine_x_lo_cm, cfg.pitch_cm, "x mesh");
    append_edges(xe, cfg.refine_x_lo_cm, cfg.refine_x_hi_cm, cfg.refine_pitch_cm, "refined x band");
    append_edges(xe, cfg.refine_x_hi_cm, cfg.x_max_cm, cfg.pitch_cm, "x mesh");
  } else {
    append_edges(xe, 0.0, cfg.x_max_cm, cfg.pitch_cm, "x mesh");
  }

  if (cfg.layers.empty()) throw ConfigError("geometry needs at least one z layer");
  std::vector<double> ze{0.0};
  double z_cursor = 0.0;
  for (const auto& layer : cfg.layers) {
    if (std::abs(layer.z_lo_cm - z_cursor) > 1e-9)
      throw ConfigError("z layers must be contiguous and non-overlapping");
    append_edges(ze, layer.z_lo_cm, layer.z_hi_cm, cfg.pitch_cm, "z layer");
    z_cursor = layer.z_hi_cm;
  }
  if (std::abs(z_cursor - cfg.z_max_cm) > 1e-9)
    throw ConfigError("z layers do not cover the full z extent");

  Eigen::ArrayXd x_edges = Eigen::Map<Eigen::ArrayXd>(xe.data(), xe.size());
  Eigen::ArrayXd z_edges = Eigen::Map<Eigen::ArrayXd>(ze.data(), ze.size());
  const int nx = static_cast<int>(x_edges.size()) - 1;
  const int nz = static_cast<int>(z_edges.size()) - 1;

  std::vector<std::string> names;
  auto name_id = [&](const std::string& n) {
    for (size_t i = 0; i < names.size(); ++i)
      if (names[i] == n) return static_cast<int>(i);
    names.push_back(n);
    return static_cast<int>(names.size()) - 1;
  };
  for (const auto& layer : cfg.layers) name_id(layer.material);

  if (cfg.plate_enabled) {
    edge_index(x_edges, cfg.plate_x_lo_cm, "plate x");
    edge_index(x_edges, cfg.plate_x_hi_cm, "plate x");
    edge_index(z_edges, cfg.plate_z_lo_cm, "plate z");
    edge_index(z_edges, cfg.plate_z_hi_cm, "plate z");
  }

  std::vector<int> mat(nx * nz, -1);
  for (int iz = 0; iz < nz; ++iz) {
    const double zc = 0.5 * (z_edges[iz] + z_edges[iz + 1]);
    int layer_mat = -1;
    for (const auto& layer : cfg.layers)
      if (zc >= layer.z_lo_cm && zc < layer.z_hi_cm) layer_mat = name_id(layer.material);
    if (layer_mat < 0) throw ConfigError("z cell not covered by any layer");
    for (int ix = 0; ix < nx; ++ix) {
      const double xc = 0.5 * (x_edges[ix] + x_edges[ix + 1]);
      int m = layer_mat;
      if (cfg.plate_enabled && xc > cfg.plate_x_lo_cm && xc < cfg.plate_x_hi_cm &&
          zc > cfg.plate_z_lo_cm && zc < cfg.plate_z_hi_cm)
        m = name_id(cfg.plate_material);
      mat[iz * nx + ix] = m;
    }
  }

  auto box_region = [&](double x0, double x1, double z0, double z1) {
    std::vector<int> cells;
    for (int iz = 0; iz < nz; ++iz) {
      const double zc = 0.5 * (z_edges[iz] + z_edges[iz + 1]);
      if (zc <= z0 || zc >= z1) continue;
      for (int ix = 0; ix < nx; ++ix) {
        const double xc = 0.5 * (x_edges[ix] + x_edges[ix + 1]);
        if (xc > x0 && xc < x1) cells.push_back(iz * nx + ix);
      }
    }
    return cells;
  };

  std::map<std::string, std::vector<int>> regions;
  regions["source"] = box_region(0.0, cfg.x_max_cm, cfg.source_z_lo_cm, cfg.source_z_hi_cm);
  regions["plate"] =
      box_region(cfg.plate_x_lo_cm, cfg.plate_x_hi_cm, cfg.plate_z_lo_cm, cfg.plate_z_hi_cm);
  regions["exit"] =
      box_region(cfg.plate_x_lo_cm, cfg.plate_x_hi_cm, cfg.exit_z_lo_cm, cfg.exit_z_hi_cm);
  regions["detector"] = regions["exit"];
  regions["centerline"] =
      box_region(cfg.centerline_x_lo_cm, cfg.centerline_x_hi_cm, 0.0, cfg.z_max_cm);

  return Geometry2D(std::move(x_edges), std::move(z_edges), std::move(mat), std::move(names),
                    cfg.bc, std::move(regions));
}

Geometry2D make_infinite_medium_cell(const std::string& material, double side_cm) {
  Eigen::ArrayXd xe(2), ze(2);
  xe << 0.0, side_cm;
  ze << 0.0, side_cm;
  std::map<std::string, std::vector<int>> regions;
  regions["all"] = {0};
  return Geometry2D(xe, ze, {0}, {material},
                    {Bc::reflective, Bc::reflective, Bc::reflective, Bc::reflective},
                    std::move(regions));
}

Geometry2D make_uniform_box(int nx, int nz, double dx_cm, double dz_cm,
                            const std::string& material, std::array<Bc, 4> bc) {
  Eigen::ArrayXd xe(nx + 1), ze(nz + 1);
  for (int i = 0; i <= nx; ++i) xe[i] = dx_cm * i;
  for (int i = 0; i <= nz; ++i) ze[i] = dz_cm * i;
  std::vector<int> mat(nx * nz, 0);
  std::map<std::string, std::vector<int>> regions;
  std::vector<int> all(nx * nz);
  for (int i = 0; i < nx * nz; ++i) all[i] = i;
  regions["all"] = std::move(all);
  return Geometry2D(xe, ze, std::move(mat), {material}, bc, std::move(regions));
}

std::string geometry_echo(const Geometry2D& g) {
  std::ostringstream out;
  out << "ferrite geometry echo 1\n";
  out << "hash " << g.hash() << "\n";
  out << "nx " << g.nx() << " nz " << g.nz() << " cells " << g.n_cells() << "\n";
  out << "x_range " << fmt_double(g.x_edges()[0]) << ' '
      << fmt_double(g.x_edges()[g.x_edges().size() - 1]) << "\n";
  out << "z_range " << fmt_double(g.z_edges()[0]) << ' '
      << fmt_double(g.z_edges()[g.z_edges().size() - 1]) << "\n";
  std::vector<int> counts(g.material_names().size(), 0);
  for (int c = 0; c < g.n_cells(); ++c) counts[g.material_at(c)]++;
  for (size_t m = 0; m < counts.size(); ++m)
    out << "material " << g.material_names()[m] << " cells " << counts[m] << "\n";
  for (const auto& [name, cells] : g.regions())
    out << "region " << name << " cells " << cells.size() << "\n";
  const char* bc_names[4] = {"xlo", "xhi", "zlo", "zhi"};
  for (int s = 0; s < 4; ++s)
    out << "bc " << bc_names[s] << ' '
        << (g.bc(static_cast<Side>(s)) == Bc::vacuum ? "vacuum" : "reflective") << "\n";
  return out.str();
}

namespace {

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double xi = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = xi;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * xi * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (xi * p1 - p0) / (xi * xi - 1.0);
      const double dx = p1 / dp;
      xi -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    x[i] = -xi;
    x[n - 1 - i] = xi;
    const double wi = 2.0 / ((1.0 - xi * xi) * dp * dp);
    w[i] = wi;
    w[n - 1 - i] = wi;
  }
}

}  // namespace

AngularQuadrature build_quadrature(int n_polar, int n_azim) {
  if (n_polar < 2 || n_polar % 2 != 0)
    throw ConfigError("quadrature needs an even polar count >= 2");
  if (n_azim < 2) throw ConfigError("quadrature needs an azimuthal count >= 2");

  std::vector<double> xi, wp;
  gauss_legendre(n_polar, xi, wp);

  AngularQuadrature q;
  q.n_polar = n_polar;
  q.n_azim = n_azim;
  const int n_ord = 2 * n_polar * n_azim;
  q.ordinates.reserve(n_ord);
  for (int l = 0; l < n_polar; ++l) {
    const double sin_theta = std::sqrt(std::max(0.0, 1.0 - xi[l] * xi[l]));
    for (int k = 0; k < n_azim; ++k) {
      const double omega = M_PI * (k + 0.5) / n_azim;
      for (int s = 0; s < 2; ++s) {
        Ordinate o;
        o.xi = xi[l];
        o.mu = sin_theta * std::cos(omega);
        o.eta = (s == 0 ? 1.0 : -1.0) * sin_theta * std::sin(omega);
        o.w = wp[l] / (4.0 * n_azim);
        q.ordinates.push_back(o);
      }
    }
  }

  auto index_of = [&](int l, int k, int s) { return (l * n_azim + k) * 2 + s; };
  q.mirror_mu.resize(n_ord);
  q.mirror_xi.resize(n_ord);
  for (int l = 0; l < n_polar; ++l)
    for (int k = 0; k < n_azim; ++k)
      for (int s = 0; s < 2; ++s) {
        q.mirror_mu[index_of(l, k, s)] = index_of(l, n_azim - 1 - k, s);
        q.mirror_xi[index_of(l, k, s)] = index_of(n_polar - 1 - l, k, s);
      }
  return q;
}

}  // namespace ferrite
