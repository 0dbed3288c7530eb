#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ferrite/xslib.hpp"
#include "oracles.hpp"

using namespace ferrite;

namespace {

ResonanceNuclide plain_nuclide(double pot, double cap = 0.0) {
  ResonanceNuclide n;
  n.id = "plain";
  n.mass_number = 16;
  n.potential_barns = pot;
  n.thermal_capture_barns = cap;
  return n;
}

ResonanceNuclide one_resonance_nuclide() {
  ResonanceNuclide n;
  n.id = "oneres";
  n.mass_number = 56;
  n.potential_barns = 5.0;
  n.resonances.push_back({1.0e4, 50.0, 500.0, 0.0});
  return n;
}

ResonanceNuclide ironlike() {
  ResonanceNuclide n;
  n.id = "ironlike";
  n.mass_number = 56;
  n.potential_barns = 3.0;
  n.thermal_capture_barns = 2.56;
  n.resonances = {{1.2e3, 2.5e2, 1.2e3, 0.35}, {3.5e3, 7.0e2, 1.0e3, 0.35},
                  {1.0e4, 2.0e3, 8.0e2, 0.30}, {2.8e4, 5.5e3, 6.0e2, 0.30},
                  {8.0e4, 1.6e4, 4.5e2, 0.30}, {2.3e5, 4.5e4, 3.0e2, 0.25},
                  {6.5e5, 1.2e5, 2.0e2, 0.25}};
  return n;
}

oracle::Nuc to_oracle(const ResonanceNuclide& n) {
  oracle::Nuc o;
  o.pot = n.potential_barns;
  o.cap = n.thermal_capture_barns;
  for (const auto& r : n.resonances) o.resonances.push_back({r.center_ev, r.width_ev,
                                                             r.peak_barns, r.capture_fraction});
  return o;
}

}  // namespace

TEST_CASE("pointwise: flat nuclide") {
  const auto n = plain_nuclide(3.0);
  for (double e : {1.0, 1e3, 1e6}) {
    const auto xs = eval_pointwise(n, e);
    CHECK(xs.total == 3.0);
    CHECK(xs.scatter == 3.0);
    CHECK(xs.absorb == 0.0);
  }
}

TEST_CASE("pointwise: Lorentzian peak and half width") {
  ResonanceNuclide n = plain_nuclide(3.0);
  n.resonances.push_back({1e4, 100.0, 700.0, 1.0});
  const auto at_peak = eval_pointwise(n, 1e4);
  CHECK(at_peak.total == doctest::Approx(3.0 + 700.0).epsilon(1e-12));
  const auto at_half_lo = eval_pointwise(n, 1e4 - 50.0);
  const auto at_half_hi = eval_pointwise(n, 1e4 + 50.0);
  CHECK(at_half_lo.absorb == doctest::Approx(350.0).epsilon(1e-12));
  CHECK(at_half_hi.absorb == doctest::Approx(350.0).epsilon(1e-12));
}

TEST_CASE("pointwise: total = scatter + absorb, range errors") {
  auto n = ironlike();
  for (double e : {1.0, 100.0, 1.2e3, 5.0e4, 1.0e7}) {
    const auto xs = eval_pointwise(n, e);
    CHECK(xs.total == xs.scatter + xs.absorb);
    CHECK(xs.total > 0.0);
  }
  CHECK_THROWS_AS(eval_pointwise(n, 1e-6), Error);
  CHECK_THROWS_AS(eval_pointwise(n, 1e9), Error);
}

TEST_CASE("slowing-down parameter") {
  auto n = plain_nuclide(1.0);
  n.mass_number = 1.0;
  CHECK(n.alpha() == 0.0);
  n.mass_number = 56.0;
  CHECK(n.alpha() == doctest::Approx(std::pow(55.0 / 57.0, 2)));
  CHECK(n.alpha() < 1.0);
}

TEST_CASE("dilute condensation: constant cross section") {
  const auto n = plain_nuclide(7.5);
  const auto g = make_equal_lethargy_structure(8, 1e6, 1.0, 1e-2);
  const auto d = infinitely_dilute_mg(n, g, WeightSpectrum::standard());
  for (int i = 0; i < 8; ++i) {
    CHECK(d.scatter[i] == doctest::Approx(7.5).epsilon(1e-13));
    CHECK(d.total[i] == doctest::Approx(7.5).epsilon(1e-13));
  }
}

TEST_CASE("dilute condensation: resonance inside group vs brute-force oracle") {
  const auto n = one_resonance_nuclide();
  // group [5e3, 2e4] in the slowing-down range (flat weight) holds the
  // resonance and its wings entirely
  Eigen::ArrayXd bounds(4);
  bounds << 2.0e4, 5.0e3, 1.0e2, 1e-2;
  const EnergyGroupStructure g(bounds, 2);
  const auto d = infinitely_dilute_mg(n, g, WeightSpectrum::standard());
  const double expect =
      oracle::dilute_group_xs(to_oracle(n), oracle::Reaction::total, 5.0e3, 2.0e4);
  CHECK(std::abs(d.total[0] - expect) / expect < 5e-5);  // 4 significant digits
}

TEST_CASE("dilute condensation: resonance outside the group") {
  const auto n = one_resonance_nuclide();
  Eigen::ArrayXd bounds(4);
  bounds << 1.0e6, 3.0e5, 1.0e2, 1e-2;  // group 0 far above the resonance
  const EnergyGroupStructure g(bounds, 2);
  const auto d = infinitely_dilute_mg(n, g, WeightSpectrum::standard());
  CHECK(d.total[0] == doctest::Approx(5.0).epsilon(1e-3));
}

TEST_CASE("background cross section") {
  MaterialComposition single;
  single.id = "pure";
  single.components = {{"a", 0.05}};
  std::vector<Eigen::ArrayXd> totals = {Eigen::ArrayXd::Constant(3, 11.0)};
  const auto s0 = background_xs(single, 0, totals, false);
  for (int i = 0; i < 3; ++i) CHECK(s0[i] == 0.0);  // empty sum

  // escape term magnitude at the default chord length
  MaterialComposition iron;
  iron.id = "iron";
  iron.components = {{"fe", 0.0848}};
  iron.chord_length_cm = 1.0e4;
  const auto esc = background_xs(iron, 0, {Eigen::ArrayXd::Constant(1, 0.0)}, true);
  CHECK(esc[0] == doctest::Approx(1.0 / (0.0848 * 1.0e4)).epsilon(1e-12));
  CHECK(esc[0] < 1.2e-3);

  // two-nuclide mix, direct arithmetic oracle
  MaterialComposition mix;
  mix.id = "mix";
  mix.components = {{"fe", 0.0848}, {"h", 0.0669}};
  std::vector<Eigen::ArrayXd> t2 = {Eigen::ArrayXd::Constant(1, 7.0),
                                    Eigen::ArrayXd::Constant(1, 20.0)};
  const auto s2 = background_xs(mix, 0, t2, false);
  CHECK(s2[0] == doctest::Approx(20.0 * 0.0669 / 0.0848).epsilon(1e-12));
  CHECK(s2[0] == doctest::Approx(15.78).epsilon(1e-3));
}

TEST_CASE("bondarenko factors: dilute limit and flat limit") {
  const auto n = one_resonance_nuclide();
  Eigen::ArrayXd bounds(4);
  bounds << 2.0e4, 5.0e3, 1.0e2, 1e-2;
  const EnergyGroupStructure g(bounds, 2);
  const auto w = WeightSpectrum::standard();

  const auto f_dilute = bondarenko_factor(n, g, 0, dilute_sigma0_barns, w);
  CHECK(std::abs(f_dilute.f_total - 1.0) < 1e-6);
  CHECK(std::abs(f_dilute.f_scatter - 1.0) < 1e-6);

  // no resonance, flat sigma_t: the weighting cancels exactly
  const auto flat = plain_nuclide(9.0);
  const auto f_flat = bondarenko_factor(flat, g, 0, 25.0, w);
  CHECK(f_flat.f_total == doctest::Approx(1.0).epsilon(1e-13));
  // zero absorption: f pinned to 1 and flagged
  CHECK(f_flat.f_absorb == 1.0);
  CHECK(f_flat.degenerate);
}

TEST_CASE("bondarenko factor vs brute-force oracle at sigma0 = 10 b") {
  const auto n = one_resonance_nuclide();
  Eigen::ArrayXd bounds(4);
  bounds << 2.0e4, 5.0e3, 1.0e2, 1e-2;
  const EnergyGroupStructure g(bounds, 2);
  const auto f = bondarenko_factor(n, g, 0, 10.0, WeightSpectrum::standard());
  const double expect = oracle::bondarenko_f(to_oracle(n), oracle::Reaction::total, 10.0,
                                             5.0e3, 2.0e4);
  CHECK(std::abs(f.f_total - expect) / expect < 5e-5);
  CHECK(f.f_total < 1.0);  // self-shielding pulls the resonance group down
}

TEST_CASE("bondarenko factor approaches 1 monotonically in sigma0") {
  const auto n = ironlike();
  const auto g = make_equal_lethargy_structure(27, 2e7, 0.625, 1e-3);
  const auto w = WeightSpectrum::standard();
  // a group holding the 28 keV resonance
  const int gr = g.group_of(2.8e4);
  double prev_dist = 2.0;
  for (double s0 : {1.0, 10.0, 100.0, 1000.0, 10000.0}) {
    const auto f = bondarenko_factor(n, g, gr, s0, w);
    const double dist = std::abs(f.f_total - 1.0);
    CHECK(dist < prev_dist);
    prev_dist = dist;
  }
}

TEST_CASE("chord length") {
  CHECK(chord_length(15000.0, 10900.0) == doctest::Approx(5.5046).epsilon(1e-4));
  // infinite slab limit: 4 t A / (2 A) -> 2 t
  CHECK(chord_length(3.0 * 1e8, 2.0 * 1e8) == doctest::Approx(6.0));
  // cube of side a
  const double a = 4.0;
  CHECK(chord_length(a * a * a, 6.0 * a * a) == doctest::Approx(2.0 * a / 3.0));
  CHECK_THROWS_AS(chord_length(0.0, 1.0), Error);
}

namespace {

std::vector<ResonanceNuclide> bench_nuclides() {
  ResonanceNuclide h;
  h.id = "hydrogen";
  h.mass_number = 1;
  h.potential_barns = 20.0;
  h.thermal_capture_barns = 1.0;
  ResonanceNuclide o = plain_nuclide(4.0, 0.1);
  o.id = "oxygenlike";
  return {h, o, ironlike()};
}

std::vector<MaterialComposition> bench_materials() {
  MaterialComposition water{"water", {{"hydrogen", 0.00669}, {"oxygenlike", 0.00334}}, 1e4};
  MaterialComposition plate{"plate", {{"ironlike", 0.00848}}, 5.5046};
  return {water, plate};
}

void check_balance(const MGLibrary& lib) {
  for (const auto& m : lib.materials)
    for (int g = 0; g < lib.groups.n_groups(); ++g) {
      const double row = m.transfer.row(g).sum();
      const double lhs = row + m.sigma_a[g];
      CHECK(std::abs(lhs - m.sigma_t[g]) <= 1e-10 * m.sigma_t[g]);
      CHECK(m.sigma_t[g] > 0.0);
      CHECK(std::isfinite(row));
      // no upscatter outside thermal self-scatter
      for (int gp = 0; gp < g; ++gp) CHECK(m.transfer(g, gp) == 0.0);
    }
}

}  // namespace

TEST_CASE("build_library: balance, modes, dilute limit") {
  const auto nucs = bench_nuclides();
  const auto mats = bench_materials();
  const auto groups = make_equal_lethargy_structure(27, 2e7, 0.625, 1e-3);
  const auto w = WeightSpectrum::standard();

  const auto lib_res = build_library(nucs, mats, groups, w, LibraryMode::res);
  const auto lib_dil = build_library(nucs, mats, groups, w, LibraryMode::dilute);
  check_balance(lib_res);
  check_balance(lib_dil);

  // dilute mode equals the infinitely dilute condensation
  const auto d_fe = infinitely_dilute_mg(nucs[2], groups, w);
  const auto& plate = lib_dil.material("plate");
  for (int g = 0; g < groups.n_groups(); ++g) {
    CHECK(plate.sigma_t[g] ==
          doctest::Approx(0.00848 * d_fe.total[g]).epsilon(1e-6));
  }

  // shielded entry = f x dilute entry by construction
  const auto& plate_res = lib_res.material("plate");
  MaterialComposition pm = mats[1];
  std::vector<Eigen::ArrayXd> totals = {d_fe.total};
  const auto s0 = background_xs(pm, 0, totals, true);
  for (int g : {5, 10, 15, 20}) {
    const auto f = bondarenko_factor(nucs[2], groups, g, s0[g], w);
    CHECK(plate_res.sigma_t[g] ==
          doctest::Approx(0.00848 * f.f_total * d_fe.total[g]).epsilon(1e-12));
  }

  // resonance groups get shielded below the dilute value in the plate
  const int gr = groups.group_of(2.8e4);
  CHECK(plate_res.sigma_t[gr] < plate.sigma_t[gr]);
}

TEST_CASE("build_library: escape term vanishes at the dilute chord") {
  const auto nucs = bench_nuclides();
  auto mats = bench_materials();
  mats[1].chord_length_cm = 1e4;  // spec default chord
  const auto groups = make_equal_lethargy_structure(27, 2e7, 0.625, 1e-3);
  const auto w = WeightSpectrum::standard();
  CondenseOptions with_escape;
  CondenseOptions no_escape;
  no_escape.use_escape = false;
  const auto a = build_library(nucs, mats, groups, w, LibraryMode::res, with_escape);
  const auto b = build_library(nucs, mats, groups, w, LibraryMode::res, no_escape);
  for (int g = 0; g < groups.n_groups(); ++g) {
    const double pa = a.material("plate").sigma_t[g];
    const double pb = b.material("plate").sigma_t[g];
    CHECK(std::abs(pa - pb) <= 1e-3 * pb);
  }
}

TEST_CASE("build_library: determinism and exact round trip") {
  const auto nucs = bench_nuclides();
  const auto mats = bench_materials();
  const auto groups = make_equal_lethargy_structure(12, 2e7, 0.625, 1e-3);
  const auto w = WeightSpectrum::standard();
  const auto lib1 = build_library(nucs, mats, groups, w, LibraryMode::res);
  const auto lib2 = build_library(nucs, mats, groups, w, LibraryMode::res);
  const std::string s1 = serialize_library(lib1);
  CHECK(s1 == serialize_library(lib2));

  const MGLibrary parsed = parse_library(s1);
  CHECK(serialize_library(parsed) == s1);
  CHECK(parsed.hash == library_hash(lib1));

  // tampering trips the hash check
  std::string bad = s1;
  bad[s1.size() - 2] = bad[s1.size() - 2] == '1' ? '2' : '1';
  CHECK_THROWS_AS(parse_library(bad), IoError);

  CHECK_THROWS_AS(
      build_library(nucs, {MaterialComposition{"x", {{"missing", 1.0}}, 1e4}}, groups, w,
                    LibraryMode::res),
      ConfigError);
}

TEST_CASE("build_library: fine library condenses back onto the coarse one") {
  const auto nucs = bench_nuclides();
  const auto mats = bench_materials();
  const auto fine_groups = make_equal_lethargy_structure(240, 2e7, 0.625, 1e-3);
  const auto coarse_groups = make_nested_coarse(fine_groups, 27);
  const auto w = WeightSpectrum::standard();
  const auto fine = build_library(nucs, mats, fine_groups, w, LibraryMode::fine);
  const auto coarse = build_library(nucs, mats, coarse_groups, w, LibraryMode::res);
  check_balance(fine);

  const auto map = map_fine_to_coarse(fine_groups, coarse_groups);
  // per-fine-group flux weights: plain spectrum for the smooth water mix,
  // the shielded spectrum for the resonance plate ("where flux weights match")
  auto group_weight = [&](const std::string& mat_id, int g) {
    const double e_hi = fine_groups.upper(g), e_lo = fine_groups.lower(g);
    if (mat_id == "water") {
      const double e_mid = std::sqrt(e_hi * e_lo);
      return w.value(e_mid) * fine_groups.width_lethargy(g);
    }
    const double sigma0 = 1.0 / (0.00848 * 5.5046);  // escape-only background
    double acc = 0.0;
    const int pts = 64;
    const double du = std::log(e_hi / e_lo) / pts;
    for (int i = 0; i <= pts; ++i) {
      const double e = e_hi * std::exp(-du * i);
      const double coef = (i == 0 || i == pts) ? 0.5 : 1.0;
      acc += coef * w.value(e) / (eval_pointwise(ironlike(), e).total + sigma0);
    }
    return acc * du;
  };
  for (const auto& mat : fine.materials) {
    const auto& cm = coarse.material(mat.id);
    Eigen::ArrayXd num = Eigen::ArrayXd::Zero(27), den = Eigen::ArrayXd::Zero(27);
    for (int g = 0; g < 240; ++g) {
      const double wgt = group_weight(mat.id, g);
      num[map[g]] += wgt * mat.sigma_t[g];
      den[map[g]] += wgt;
    }
    for (int G = 0; G < 27; ++G) {
      const double condensed = num[G] / den[G];
      CHECK(std::abs(condensed - cm.sigma_t[G]) <= 0.02 * cm.sigma_t[G]);
    }
  }
}
