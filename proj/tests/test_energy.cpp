#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ferrite/energy.hpp"

using namespace ferrite;

TEST_CASE("equal-lethargy structure basics") {
  const auto g = make_equal_lethargy_structure(27, 2e7, 0.625, 1e-3);
  CHECK(g.n_groups() == 27);
  CHECK(g.thermal_index() == 26);
  CHECK(g.upper(0) == doctest::Approx(2e7));
  CHECK(g.lower(25) == doctest::Approx(0.625));
  CHECK(g.lower(26) == doctest::Approx(1e-3));
  for (int i = 0; i <= 26; ++i) CHECK(g.bounds()[i] > g.bounds()[i + 1]);
  // nonthermal groups share one lethargy width
  const double w0 = g.width_lethargy(0);
  for (int gg = 1; gg < 26; ++gg) CHECK(g.width_lethargy(gg) == doctest::Approx(w0));
}

TEST_CASE("group_of resolves edges to the higher-energy group") {
  const auto g = make_equal_lethargy_structure(5, 1e6, 1.0, 1e-2);
  CHECK(g.group_of(1e6) == 0);
  CHECK(g.group_of(g.lower(1) * 1.0000001) == 1);
  CHECK(g.group_of(0.5) == 4);
  CHECK_THROWS_AS(g.group_of(2e6), Error);
}

TEST_CASE("structure validation") {
  Eigen::ArrayXd bad(3);
  bad << 1.0, 2.0, 0.5;
  CHECK_THROWS_AS(EnergyGroupStructure(bad, 1), ConfigError);
  Eigen::ArrayXd ok(3);
  ok << 10.0, 1.0, 0.1;
  CHECK_THROWS_AS(EnergyGroupStructure(ok, 0), ConfigError);  // thermal must be last
  CHECK_NOTHROW(EnergyGroupStructure(ok, 1));
}

TEST_CASE("nested coarse structure shares fine edges") {
  const auto fine = make_equal_lethargy_structure(240, 2e7, 0.625, 1e-3);
  const auto coarse = make_nested_coarse(fine, 27);
  CHECK(coarse.n_groups() == 27);
  for (int j = 0; j <= 26; ++j) {
    bool found = false;
    for (int i = 0; i <= 240 && !found; ++i)
      if (fine.bounds()[i] == coarse.bounds()[j]) found = true;
    CHECK(found);
  }
  const auto map = map_fine_to_coarse(fine, coarse);
  CHECK(map.size() == 240);
  CHECK(map.front() == 0);
  CHECK(map[239] == 26);
  for (size_t i = 1; i < map.size(); ++i) CHECK(map[i] >= map[i - 1]);
}

TEST_CASE("weight spectrum segments") {
  const auto w = WeightSpectrum::standard();
  CHECK(w.segment_of(5e5) == WeightSpectrum::Segment::fission);
  CHECK(w.segment_of(1e3) == WeightSpectrum::Segment::slowing_down);
  CHECK(w.segment_of(0.1) == WeightSpectrum::Segment::thermal);
  // positive over the full range, continuous at the fission break
  CHECK(w.value(1e5) == doctest::Approx(1.0));
  CHECK(w.value(1e5 * 1.000001) == doctest::Approx(1.0).epsilon(1e-4));
  for (double e : {1e-3, 0.2, 0.625, 10.0, 1e4, 1e5, 2e6, 1.9e7}) CHECK(w.value(e) > 0.0);
}

TEST_CASE("fission spectrum normalized over nonthermal groups") {
  const auto g = make_equal_lethargy_structure(27, 2e7, 0.625, 1e-3);
  const auto chi = fission_spectrum_by_group(g);
  CHECK(chi.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(chi[g.thermal_index()] == 0.0);
  // emission peaks in the MeV range
  int peak = 0;
  for (int i = 0; i < 27; ++i)
    if (chi[i] > chi[peak]) peak = i;
  CHECK(g.upper(peak) > 5e5);
  CHECK(g.lower(peak) < 8e6);
}
