#include "ferrite/detsolver.hpp"

#include <algorithm>
#include <cmath>

namespace ferrite {

namespace {

constexpr double flux_floor = 1.0e-30;

struct CellXs {
  std::vector<int> lib_material_of_cell;  // geometry material -> library slot, per cell
};

CellXs map_materials(const MGLibrary& lib, const Geometry2D& geom) {
  CellXs m;
  std::vector<int> name_to_lib(geom.material_names().size());
  for (size_t i = 0; i < geom.material_names().size(); ++i)
    name_to_lib[i] = lib.material_index(geom.material_names()[i]);
  m.lib_material_of_cell.resize(geom.n_cells());
  for (int c = 0; c < geom.n_cells(); ++c)
    m.lib_material_of_cell[c] = name_to_lib[geom.material_at(c)];
  return m;
}

struct SweepWorkspace {
  // outgoing boundary angular fluxes, per ordinate, current group
  Eigen::ArrayXXd face_xlo, face_xhi;  // nz x n_ord
  Eigen::ArrayXXd face_zlo, face_zhi;  // nx x n_ord
};

// One transport sweep of every ordinate for one group. Returns the new scalar
// flux; accumulates vacuum leakage of this sweep into *leakage.
Eigen::ArrayXd sweep_group(const Geometry2D& geom, const AngularQuadrature& quad,
                           const Eigen::ArrayXd& sigma_t_cell, const Eigen::ArrayXd& source_cell,
                           bool reverse_directions, SweepWorkspace& ws, double* leakage) {
  const int nx = geom.nx(), nz = geom.nz();
  const int n_ord = static_cast<int>(quad.ordinates.size());
  Eigen::ArrayXd phi = Eigen::ArrayXd::Zero(geom.n_cells());
  double leak = 0.0;

  Eigen::ArrayXXd new_xlo(nz, n_ord), new_xhi(nz, n_ord), new_zlo(nx, n_ord), new_zhi(nx, n_ord);
  std::vector<double> psi_z(nx);

  for (int o = 0; o < n_ord; ++o) {
    const Ordinate& ord = quad.ordinates[o];
    const double mu = reverse_directions ? -ord.mu : ord.mu;
    const double xi = reverse_directions ? -ord.xi : ord.xi;
    const double w = ord.w;
    const int sx = mu > 0.0 ? 1 : -1;
    const int sz = xi > 0.0 ? 1 : -1;
    const double amu = std::abs(mu), axi = std::abs(xi);

    // incoming z-face flux for the first row
    const Side z_in_side = sz > 0 ? side_zlo : side_zhi;
    auto& z_in_store = sz > 0 ? ws.face_zlo : ws.face_zhi;
    const int z_mirror = quad.mirror_xi[o];
    for (int ix = 0; ix < nx; ++ix)
      psi_z[ix] = geom.bc(z_in_side) == Bc::reflective ? z_in_store(ix, z_mirror) : 0.0;

    const Side x_in_side = sx > 0 ? side_xlo : side_xhi;
    auto& x_in_store = sx > 0 ? ws.face_xlo : ws.face_xhi;
    const int x_mirror = quad.mirror_mu[o];

    const int iz0 = sz > 0 ? 0 : nz - 1;
    const int ix0 = sx > 0 ? 0 : nx - 1;
    for (int jz = 0; jz < nz; ++jz) {
      const int iz = iz0 + sz * jz;
      const double b = axi / geom.dz(iz);
      double psi_x = geom.bc(x_in_side) == Bc::reflective ? x_in_store(iz, x_mirror) : 0.0;
      for (int jx = 0; jx < nx; ++jx) {
        const int ix = ix0 + sx * jx;
        const int cell = iz * nx + ix;
        const double a = amu / geom.dx(ix);
        const double st = sigma_t_cell[cell];
        const double s = source_cell[cell];

        double psi_c = (s + 2.0 * a * psi_x + 2.0 * b * psi_z[ix]) / (st + 2.0 * a + 2.0 * b);
        double out_x = 2.0 * psi_c - psi_x;
        double out_z = 2.0 * psi_c - psi_z[ix];
        // set-to-zero negative-flux fixup with rebalance
        if (out_x < 0.0 && out_z < 0.0) {
          psi_c = (s + a * psi_x + b * psi_z[ix]) / st;
          out_x = out_z = 0.0;
        } else if (out_x < 0.0) {
          psi_c = (s + a * psi_x + 2.0 * b * psi_z[ix]) / (st + 2.0 * b);
          out_x = 0.0;
          out_z = 2.0 * psi_c - psi_z[ix];
          if (out_z < 0.0) {
            psi_c = (s + a * psi_x + b * psi_z[ix]) / st;
            out_z = 0.0;
          }
        } else if (out_z < 0.0) {
          psi_c = (s + 2.0 * a * psi_x + b * psi_z[ix]) / (st + 2.0 * a);
          out_z = 0.0;
          out_x = 2.0 * psi_c - psi_x;
          if (out_x < 0.0) {
            psi_c = (s + a * psi_x + b * psi_z[ix]) / st;
            out_x = 0.0;
          }
        }

        phi[cell] += w * psi_c;
        psi_x = out_x;
        psi_z[ix] = out_z;
      }
      // outgoing x-face of this row
      if (sx > 0)
        new_xhi(iz, o) = psi_x;
      else
        new_xlo(iz, o) = psi_x;
      const Side x_out_side = sx > 0 ? side_xhi : side_xlo;
      if (geom.bc(x_out_side) == Bc::vacuum) leak += w * amu * psi_x * geom.dz(iz);
    }
    for (int ix = 0; ix < nx; ++ix) {
      if (sz > 0)
        new_zhi(ix, o) = psi_z[ix];
      else
        new_zlo(ix, o) = psi_z[ix];
      const Side z_out_side = sz > 0 ? side_zhi : side_zlo;
      if (geom.bc(z_out_side) == Bc::vacuum) leak += w * axi * psi_z[ix] * geom.dx(ix);
    }
    // incoming faces of this ordinate stay as previously stored
    for (int iz = 0; iz < nz; ++iz) {
      if (sx > 0)
        new_xlo(iz, o) = ws.face_xlo(iz, o);
      else
        new_xhi(iz, o) = ws.face_xhi(iz, o);
    }
    for (int ix = 0; ix < nx; ++ix) {
      if (sz > 0)
        new_zlo(ix, o) = ws.face_zlo(ix, o);
      else
        new_zhi(ix, o) = ws.face_zhi(ix, o);
    }
  }

  ws.face_xlo = new_xlo;
  ws.face_xhi = new_xhi;
  ws.face_zlo = new_zlo;
  ws.face_zhi = new_zhi;
  if (leakage) *leakage = leak;
  return phi;
}

FluxField solve_transport(const MGLibrary& lib, const Geometry2D& geom, const FixedSource& q,
                          const SolverSettings& settings, bool adjoint, SolveDiagnostics* diag) {
  settings.validate();
  q.validate();
  const int ng = lib.groups.n_groups();
  if (q.n_groups() != ng) throw ConfigError("source group count does not match the library");
  if (q.n_cells() != geom.n_cells()) throw ConfigError("source cell count does not match the mesh");
  const CellXs cx = map_materials(lib, geom);
  const AngularQuadrature& quad = settings.quadrature;
  if (quad.ordinates.empty()) throw ConfigError("solver settings carry no quadrature");

  Eigen::ArrayXXd phi = Eigen::ArrayXXd::Zero(geom.n_cells(), ng);
  SolveDiagnostics local;
  SolveDiagnostics& d = diag ? *diag : local;
  d = SolveDiagnostics{};

  if (q.is_zero()) {  // linearity: zero source, zero flux
    FluxField out;
    out.values = phi;
    out.adjoint = adjoint;
    out.geometry_hash = geom.hash();
    out.library_hash = lib.hash.empty() ? library_hash(lib) : lib.hash;
    return out;
  }

  // transfer(g_from, g_to) with the adjoint using the transpose
  auto transfer = [&](int mat, int g_from, int g_to) {
    const auto& t = lib.materials[mat].transfer;
    return adjoint ? t(g_to, g_from) : t(g_from, g_to);
  };

  Eigen::ArrayXd sigma_t_cell(geom.n_cells()), self_scatter(geom.n_cells());
  Eigen::ArrayXd s_ext(geom.n_cells()), s_tot(geom.n_cells());
  double group_leak = 0.0;

  for (int step = 0; step < ng; ++step) {
    const int g = adjoint ? ng - 1 - step : step;
    for (int c = 0; c < geom.n_cells(); ++c) {
      const int m = cx.lib_material_of_cell[c];
      sigma_t_cell[c] = lib.materials[m].sigma_t[g];
      self_scatter[c] = transfer(m, g, g);
      double s = q.density(c, g);
      for (int gp = 0; gp < ng; ++gp) {
        if (gp == g) continue;
        const double t = transfer(m, gp, g);
        if (t != 0.0) s += t * phi(c, gp);
      }
      s_ext[c] = s;
    }

    SweepWorkspace ws;
    ws.face_xlo = Eigen::ArrayXXd::Zero(geom.nz(), quad.ordinates.size());
    ws.face_xhi = ws.face_xlo;
    ws.face_zlo = Eigen::ArrayXXd::Zero(geom.nx(), quad.ordinates.size());
    ws.face_zhi = ws.face_zlo;

    double residual = 0.0;
    int it = 0;
    for (it = 0; it < settings.max_iterations; ++it) {
      for (int c = 0; c < geom.n_cells(); ++c)
        s_tot[c] = s_ext[c] + self_scatter[c] * phi(c, g);
      Eigen::ArrayXd phi_new =
          sweep_group(geom, quad, sigma_t_cell, s_tot, adjoint, ws, &group_leak);
      residual = 0.0;
      for (int c = 0; c < geom.n_cells(); ++c) {
        const double den = std::max(phi_new[c], flux_floor);
        residual = std::max(residual, std::abs(phi_new[c] - phi(c, g)) / den);
      }
      phi.col(g) = phi_new;
      d.residuals.push_back(residual);
      ++d.iterations;
      if (residual < settings.tolerance) break;
    }
    if (residual >= settings.tolerance)
      throw SolverError("group " + std::to_string(g) + " did not converge in " +
                            std::to_string(settings.max_iterations) + " iterations",
                        residual);
    d.final_residual = std::max(d.final_residual, residual);
    d.leakage += group_leak;
  }

  for (int c = 0; c < geom.n_cells(); ++c) {
    const int m = cx.lib_material_of_cell[c];
    for (int g = 0; g < ng; ++g)
      d.absorption += lib.materials[m].sigma_a[g] * phi(c, g) * geom.volumes()[c];
  }

  FluxField out;
  out.values = phi;
  out.adjoint = adjoint;
  out.geometry_hash = geom.hash();
  out.library_hash = lib.hash.empty() ? library_hash(lib) : lib.hash;
  out.iterations = d.iterations;
  out.final_residual = d.final_residual;
  return out;
}

}  // namespace

void SolverSettings::validate() const {
  if (!(tolerance > 0.0 && tolerance < 1.0))
    throw ConfigError("solver tolerance must be in (0, 1)");
  if (max_iterations < 1) throw ConfigError("solver needs max_iterations >= 1");
}

FluxField solve_forward(const MGLibrary& lib, const Geometry2D& geom, const FixedSource& q,
                        const SolverSettings& settings, SolveDiagnostics* diag) {
  return solve_transport(lib, geom, q, settings, false, diag);
}

FluxField solve_adjoint(const MGLibrary& lib, const Geometry2D& geom, const FixedSource& q_adj,
                        const SolverSettings& settings, SolveDiagnostics* diag) {
  return solve_transport(lib, geom, q_adj, settings, true, diag);
}

}  // namespace ferrite
