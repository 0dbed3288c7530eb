#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "ferrite/geometry.hpp"

using namespace ferrite;

TEST_CASE("quadrature invariants") {
  for (auto [np, na] : {std::pair{2, 2}, std::pair{4, 4}, std::pair{6, 4}, std::pair{8, 8}}) {
    const auto q = build_quadrature(np, na);
    CHECK(static_cast<int>(q.ordinates.size()) == 2 * np * na);
    double sw = 0.0, swmu = 0.0, swxi = 0.0, swmu2 = 0.0;
    for (const auto& o : q.ordinates) {
      sw += o.w;
      swmu += o.w * o.mu;
      swxi += o.w * o.xi;
      swmu2 += o.w * o.mu * o.mu;
      CHECK(std::abs(o.mu * o.mu + o.eta * o.eta + o.xi * o.xi - 1.0) < 1e-12);
    }
    CHECK(std::abs(sw - 1.0) < 1e-14);
    CHECK(std::abs(swmu) < 1e-14);
    CHECK(std::abs(swxi) < 1e-14);
    CHECK(std::abs(swmu2 - 1.0 / 3.0) < 1e-12);
    // mirror maps really mirror
    for (size_t i = 0; i < q.ordinates.size(); ++i) {
      CHECK(q.ordinates[q.mirror_mu[i]].mu == doctest::Approx(-q.ordinates[i].mu).epsilon(1e-14));
      CHECK(q.ordinates[q.mirror_mu[i]].xi == q.ordinates[i].xi);
      CHECK(q.ordinates[q.mirror_xi[i]].xi == doctest::Approx(-q.ordinates[i].xi).epsilon(1e-14));
    }
  }
  CHECK_THROWS_AS(build_quadrature(3, 4), ConfigError);
  CHECK_THROWS_AS(build_quadrature(4, 1), ConfigError);
}

TEST_CASE("quadrature counting example") {
  const auto q = build_quadrature(4, 4);
  CHECK(q.ordinates.size() == 32);
  int eta_pos = 0;
  for (const auto& o : q.ordinates)
    if (o.eta > 0) ++eta_pos;
  CHECK(eta_pos == 16);  // 16 per hemisphere, mirrored
}

namespace {

GeometryConfig default_cfg(bool plate) {
  GeometryConfig cfg;
  cfg.plate_enabled = plate;
  return cfg;
}

}  // namespace

TEST_CASE("default benchmark geometry") {
  const auto g = build_geometry(default_cfg(true));
  // 24 + 20 + 24 cells in x, 140 in z
  CHECK(g.nx() == 68);
  CHECK(g.nz() == 140);
  CHECK(g.total_volume() == doctest::Approx(53.0 * 140.0));

  // plate region holds exactly the cells with 25 <= x <= 28, 30 <= z <= 130
  const std::string plate_name = "plate";
  std::set<int> in_plate(g.region("plate").begin(), g.region("plate").end());
  for (int c = 0; c < g.n_cells(); ++c) {
    const double xm = 0.5 * (g.x_edges()[g.ix_of(c)] + g.x_edges()[g.ix_of(c) + 1]);
    const double zm = 0.5 * (g.z_edges()[g.iz_of(c)] + g.z_edges()[g.iz_of(c) + 1]);
    const bool inside = xm > 25.0 && xm < 28.0 && zm > 30.0 && zm < 130.0;
    CHECK(in_plate.count(c) == (inside ? 1u : 0u));
    if (inside) CHECK(g.material_names()[g.material_at(c)] == plate_name);
  }
  CHECK(g.region("plate").size() == 12u * 100u);  // 12 columns of 0.25 cm x 100 rows

  // exit region: 2 cm after the plate
  CHECK(g.region("exit").size() == 12u * 2u);
  CHECK(g.has_region("detector"));
  CHECK(g.region("detector") == g.region("exit"));

  // source, plate, exit regions are disjoint
  std::set<int> src(g.region("source").begin(), g.region("source").end());
  std::set<int> ext(g.region("exit").begin(), g.region("exit").end());
  for (int c : g.region("plate")) {
    CHECK(src.count(c) == 0);
    CHECK(ext.count(c) == 0);
  }
  for (int c : ext) CHECK(src.count(c) == 0);
}

TEST_CASE("no-plate variant carries the water material in the plate box") {
  const auto g = build_geometry(default_cfg(false));
  for (int c : g.region("plate"))
    CHECK(g.material_names()[g.material_at(c)] == "water");
  // region boxes survive without the plate material
  CHECK(g.region("plate").size() == 12u * 100u);
}

TEST_CASE("plate edges must conform to the mesh") {
  auto cfg = default_cfg(true);
  cfg.plate_x_lo_cm = 25.1;  // not on a 0.25 cm edge
  CHECK_THROWS_AS(build_geometry(cfg), ConfigError);
  auto cfg2 = default_cfg(true);
  cfg2.layers[1].z_hi_cm = 29.5;  // overlapping/misaligned layers
  CHECK_THROWS_AS(build_geometry(cfg2), ConfigError);
}

TEST_CASE("single-cell reflective fixture") {
  const auto g = make_infinite_medium_cell("fuel");
  CHECK(g.n_cells() == 1);
  for (int s = 0; s < 4; ++s) CHECK(g.bc(static_cast<Side>(s)) == Bc::reflective);
  CHECK(g.region("all").size() == 1);
}

TEST_CASE("geometry echo and hash stability") {
  const auto a = build_geometry(default_cfg(true));
  const auto b = build_geometry(default_cfg(true));
  CHECK(a.hash() == b.hash());
  const auto c = build_geometry(default_cfg(false));
  CHECK(a.hash() != c.hash());
  const std::string echo = geometry_echo(a);
  CHECK(echo.find("nx 68 nz 140 cells 9520") != std::string::npos);
  CHECK(echo.find("region plate cells 1200") != std::string::npos);
}
