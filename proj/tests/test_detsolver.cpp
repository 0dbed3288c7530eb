#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ferrite/detsolver.hpp"
#include "oracles.hpp"

using namespace ferrite;

namespace {

// 1-group homogeneous library built directly (no condensation involved).
MGLibrary one_group_lib(const std::string& material, double sigma_t, double sigma_s) {
  MGLibrary lib;
  Eigen::ArrayXd bounds(3);
  bounds << 1e6, 1.0, 1e-2;
  lib.groups = EnergyGroupStructure(bounds, 1);
  // two groups exist structurally; put all physics in group 0 and make the
  // thermal group a copy so 1-group tests can ignore it
  MaterialXs m;
  m.id = material;
  m.sigma_t = Eigen::ArrayXd::Constant(2, sigma_t);
  m.sigma_a = Eigen::ArrayXd::Constant(2, sigma_t - sigma_s);
  m.transfer = Eigen::MatrixXd::Zero(2, 2);
  m.transfer(0, 0) = sigma_s;
  m.transfer(1, 1) = sigma_s;
  lib.materials.push_back(m);
  return lib;
}

MGLibrary three_group_lib(const std::string& material) {
  MGLibrary lib;
  Eigen::ArrayXd bounds(4);
  bounds << 1e6, 1e3, 1.0, 1e-2;
  lib.groups = EnergyGroupStructure(bounds, 2);
  MaterialXs m;
  m.id = material;
  m.sigma_t.resize(3);
  m.sigma_a.resize(3);
  m.transfer = Eigen::MatrixXd::Zero(3, 3);
  m.sigma_t << 0.30, 0.32, 0.36;
  // downscatter-only with thermal self-scatter
  m.transfer(0, 0) = 0.10;
  m.transfer(0, 1) = 0.12;
  m.transfer(0, 2) = 0.03;
  m.transfer(1, 1) = 0.11;
  m.transfer(1, 2) = 0.13;
  m.transfer(2, 2) = 0.20;
  for (int g = 0; g < 3; ++g) m.sigma_a[g] = m.sigma_t[g] - m.transfer.row(g).sum();
  lib.materials.push_back(m);
  return lib;
}

SolverSettings settings(double tol = 1e-6, int np = 4, int na = 4) {
  SolverSettings s;
  s.tolerance = tol;
  s.max_iterations = 5000;
  s.quadrature = build_quadrature(np, na);
  return s;
}

FixedSource zero_source(const Geometry2D& g, int ng) {
  FixedSource q;
  q.density = Eigen::ArrayXXd::Zero(g.n_cells(), ng);
  return q;
}

}  // namespace

TEST_CASE("zero source gives zero flux") {
  const auto lib = one_group_lib("m", 1.0, 0.5);
  const auto geom = make_uniform_box(4, 4, 1.0, 1.0, "m",
                                     {Bc::vacuum, Bc::vacuum, Bc::vacuum, Bc::vacuum});
  const auto phi = solve_forward(lib, geom, zero_source(geom, 2), settings());
  CHECK((phi.values == 0.0).all());
  const auto adj = solve_adjoint(lib, geom, zero_source(geom, 2), settings());
  CHECK((adj.values == 0.0).all());
}

TEST_CASE("infinite-medium balance: phi = S / sigma_a") {
  const auto lib = one_group_lib("m", 1.0, 0.6);
  const auto geom = make_infinite_medium_cell("m");
  FixedSource q = zero_source(geom, 2);
  q.density(0, 0) = 2.0;
  const auto phi = solve_forward(lib, geom, q, settings(1e-9));
  CHECK(phi.values(0, 0) == doctest::Approx(2.0 / 0.4).epsilon(1e-6));
}

TEST_CASE("pure absorber attenuation follows the analytic oracle") {
  // 1-D column (reflective x walls, vacuum z), isotropic source in the first
  // 0.1 mfp cell. Deep in the slab the transport decay approaches
  // exp(-sigma_t z); cell values are checked against the plane-source
  // quadrature oracle E1(sigma z)/2.
  const double sigma = 1.0;
  const auto lib = one_group_lib("abs", sigma, 0.0);
  const auto geom = make_uniform_box(1, 300, 1.0, 0.1, "abs",
                                     {Bc::reflective, Bc::reflective, Bc::vacuum, Bc::vacuum});
  FixedSource q = zero_source(geom, 2);
  q.density(0, 0) = 1.0;
  const auto phi = solve_forward(lib, geom, q, settings(1e-11, 32, 2));

  // asymptotic slope within 5% of sigma_t per decade
  const int c1 = 250, c2 = 295;
  const double slope = std::log(phi.values(c1, 0) / phi.values(c2, 0)) / (0.1 * (c2 - c1));
  CHECK(slope == doctest::Approx(sigma).epsilon(0.05));

  // cell-average flux against the quadrature oracle, away from the source cell
  for (int c : {10, 20, 40, 80, 150, 250}) {
    const double dist = 0.1 * c;  // source cell center to this cell center
    const double expect = 0.1 * oracle::plane_source_flux(sigma * dist);
    CHECK(phi.values(c, 0) == doctest::Approx(expect).epsilon(0.25));
  }
}

TEST_CASE("duality on an 8x8 3-group fixture") {
  const auto lib = three_group_lib("m");
  const auto geom = make_uniform_box(8, 8, 1.0, 1.0, "m",
                                     {Bc::vacuum, Bc::vacuum, Bc::vacuum, Bc::vacuum});
  auto s = settings(1e-8);

  FixedSource q = zero_source(geom, 3);
  for (int c = 0; c < geom.n_cells(); ++c) q.density(c, 0) = 1.0 + 0.01 * c;
  FixedSource q_adj = zero_source(geom, 3);
  // detector-ish corner response over the two nonthermal groups
  for (int iz = 5; iz < 8; ++iz)
    for (int ix = 5; ix < 8; ++ix) {
      q_adj.density(geom.cell_index(ix, iz), 0) = 1.0;
      q_adj.density(geom.cell_index(ix, iz), 1) = 1.0;
    }

  const auto phi = solve_forward(lib, geom, q, s);
  const auto psi = solve_adjoint(lib, geom, q_adj, s);
  const double lhs = inner_product(psi, q, geom);       // <q, phi_dag>
  const double rhs = inner_product(phi, q_adj, geom);   // <q_dag, phi>
  CHECK(std::abs(lhs - rhs) / lhs < 1e-4);
}

TEST_CASE("self-adjoint symmetric problem: adjoint equals forward") {
  const auto lib = one_group_lib("m", 0.8, 0.4);
  const auto geom = make_uniform_box(6, 6, 1.0, 1.0, "m",
                                     {Bc::vacuum, Bc::vacuum, Bc::vacuum, Bc::vacuum});
  FixedSource q = zero_source(geom, 2);
  for (int iz = 2; iz < 4; ++iz)
    for (int ix = 2; ix < 4; ++ix) q.density(geom.cell_index(ix, iz), 0) = 1.0;
  const auto s = settings(1e-9);
  const auto phi = solve_forward(lib, geom, q, s);
  const auto psi = solve_adjoint(lib, geom, q, s);
  for (int c = 0; c < geom.n_cells(); ++c)
    CHECK(psi.values(c, 0) == doctest::Approx(phi.values(c, 0)).epsilon(1e-6));
}

TEST_CASE("linearity: doubling the source doubles the flux") {
  const auto lib = three_group_lib("m");
  const auto geom = make_uniform_box(5, 7, 1.0, 1.0, "m",
                                     {Bc::vacuum, Bc::vacuum, Bc::vacuum, Bc::vacuum});
  FixedSource q = zero_source(geom, 3);
  for (int c = 0; c < geom.n_cells(); ++c) q.density(c, 0) = 0.5 + 0.02 * (c % 5);
  FixedSource q2;
  q2.density = 2.0 * q.density;
  const auto s = settings(1e-7);
  const auto phi1 = solve_forward(lib, geom, q, s);
  const auto phi2 = solve_forward(lib, geom, q2, s);
  for (int c = 0; c < geom.n_cells(); ++c)
    for (int g = 0; g < 3; ++g) {
      if (phi1.values(c, g) == 0.0) continue;
      CHECK(std::abs(phi2.values(c, g) - 2.0 * phi1.values(c, g)) <=
            1e-12 * phi2.values(c, g));
    }
}

TEST_CASE("global balance: leakage + absorption = source") {
  const auto lib = three_group_lib("m");
  const auto geom = make_uniform_box(10, 12, 1.0, 1.0, "m",
                                     {Bc::vacuum, Bc::vacuum, Bc::vacuum, Bc::vacuum});
  FixedSource q = zero_source(geom, 3);
  for (int c = 0; c < geom.n_cells(); ++c) q.density(c, 0) = 1.0;
  const double total = q.total(geom);
  SolveDiagnostics diag;
  const double tol = 1e-7;
  auto s = settings(tol);
  solve_forward(lib, geom, q, s, &diag);
  CHECK(std::abs(diag.leakage + diag.absorption - total) <= 10.0 * tol * total);
}

TEST_CASE("residual sequence is non-increasing after the first three sweeps") {
  const auto lib = one_group_lib("m", 1.0, 0.85);
  const auto geom = make_uniform_box(10, 10, 0.5, 0.5, "m",
                                     {Bc::vacuum, Bc::vacuum, Bc::vacuum, Bc::vacuum});
  FixedSource q = zero_source(geom, 2);
  for (int c = 0; c < geom.n_cells(); ++c) q.density(c, 0) = 1.0;
  SolveDiagnostics diag;
  solve_forward(lib, geom, q, settings(1e-9), &diag);
  // group 0 history: all but the trailing thermal-group entry
  for (size_t i = 3; i + 1 < diag.residuals.size(); ++i) {
    if (diag.residuals[i] == 0.0) break;  // thermal group converges instantly
    CHECK(diag.residuals[i] <= diag.residuals[i - 1] * (1.0 + 1e-12));
  }
}

TEST_CASE("non-convergence carries the last residual") {
  const auto lib = one_group_lib("m", 1.0, 0.999);
  const auto geom = make_uniform_box(8, 8, 2.0, 2.0, "m",
                                     {Bc::reflective, Bc::reflective, Bc::vacuum, Bc::vacuum});
  FixedSource q = zero_source(geom, 2);
  q.density(0, 0) = 1.0;
  SolverSettings s = settings(1e-12);
  s.max_iterations = 3;
  try {
    solve_forward(lib, geom, q, s);
    CHECK(false);
  } catch (const SolverError& e) {
    CHECK(e.last_residual > 0.0);
  }
}

TEST_CASE("group count mismatch is a configuration error") {
  const auto lib = three_group_lib("m");
  const auto geom = make_uniform_box(2, 2, 1.0, 1.0, "m",
                                     {Bc::vacuum, Bc::vacuum, Bc::vacuum, Bc::vacuum});
  CHECK_THROWS_AS(solve_forward(lib, geom, zero_source(geom, 2), settings()), ConfigError);
}

TEST_CASE("inner product: symmetry, counting, naive-summation oracle") {
  const auto geom = make_uniform_box(3, 4, 1.5, 0.5, "m",
                                     {Bc::vacuum, Bc::vacuum, Bc::vacuum, Bc::vacuum});
  const int nc = geom.n_cells(), ng = 3;
  Eigen::ArrayXXd a(nc, ng), b(nc, ng);
  for (int c = 0; c < nc; ++c)
    for (int g = 0; g < ng; ++g) {
      a(c, g) = std::sin(0.7 * c + g) + 2.0;
      b(c, g) = std::cos(0.3 * c) + 1.5 + 0.1 * g;
    }
  const double ab = inner_product(a, b, geom.volumes());
  const double ba = inner_product(b, a, geom.volumes());
  CHECK(ab == ba);  // bitwise for the fixed order

  double naive = 0.0;
  for (int c = 0; c < nc; ++c)
    for (int g = 0; g < ng; ++g) naive += a(c, g) * b(c, g) * geom.volumes()[c];
  CHECK(ab == doctest::Approx(naive).epsilon(1e-12));

  const Eigen::ArrayXXd ones = Eigen::ArrayXXd::Ones(nc, ng);
  CHECK(inner_product(ones, ones, geom.volumes()) ==
        doctest::Approx(geom.total_volume() * ng).epsilon(1e-12));

  Eigen::ArrayXXd bad(nc, 2);
  CHECK_THROWS_AS(inner_product(a, bad, geom.volumes()), Error);
}

TEST_CASE("response over regions") {
  const auto geom = make_uniform_box(2, 2, 1.0, 1.0, "m",
                                     {Bc::vacuum, Bc::vacuum, Bc::vacuum, Bc::vacuum});
  FluxField flux;
  flux.values.resize(4, 3);
  flux.values << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12;
  Eigen::ArrayXd w_all = Eigen::ArrayXd::Ones(3);
  const std::vector<int> all = {0, 1, 2, 3};
  CHECK(response(flux, w_all, all, geom) == doctest::Approx(78.0));
  Eigen::ArrayXd w_zero = Eigen::ArrayXd::Zero(3);
  CHECK(response(flux, w_zero, all, geom) == 0.0);
  // nonthermal weights on a 2x2 fixture against a hand sum
  Eigen::ArrayXd w_nt(3);
  w_nt << 1, 1, 0;
  const std::vector<int> region = {1, 2};
  CHECK(response(flux, w_nt, region, geom) == doctest::Approx(4.0 + 5.0 + 7.0 + 8.0));
  CHECK_THROWS_AS(response(flux, w_nt, {}, geom), Error);
}

TEST_CASE("flux file round trip") {
  FluxField f;
  f.values.resize(3, 2);
  f.values << 0.1, 0.2, 0.3, 1e-30, 5e7, 0.0;
  f.adjoint = true;
  f.geometry_hash = "abc123";
  f.library_hash = "def456";
  f.iterations = 42;
  f.final_residual = 3.25e-9;
  const std::string text = serialize_flux(f);
  const FluxField g = parse_flux(text);
  CHECK(serialize_flux(g) == text);
  CHECK(g.adjoint);
  CHECK(g.values(2, 0) == 5e7);
  std::string bad = text;
  bad[bad.size() - 3] ^= 1;
  CHECK_THROWS_AS(parse_flux(bad), IoError);
}
