#include "ferrite/energy.hpp"

#include <algorithm>

namespace ferrite {

EnergyGroupStructure::EnergyGroupStructure(Eigen::ArrayXd bounds, int thermal_index)
    : bounds_(std::move(bounds)), thermal_index_(thermal_index) {
  if (bounds_.size() < 3) throw ConfigError("group structure needs at least 2 groups");
  for (int i = 0; i + 1 < bounds_.size(); ++i)
    if (!(bounds_[i] > bounds_[i + 1]))
      throw ConfigError("group bounds must be strictly decreasing");
  if (thermal_index_ != n_groups() - 1)
    throw ConfigError("the single thermal group must be the lowest-energy group");
  if (bottom() < energy::min_ev || top() > energy::max_ev)
    throw ConfigError("group structure exceeds the global energy range");
}

int EnergyGroupStructure::group_of(double e) const {
  if (e > top() || e < bottom()) throw Error("energy outside group structure");
  // bounds_ decreasing: first group g with lower(g) <= e.
  int lo = 0, hi = n_groups() - 1;
  while (lo < hi) {
    int mid = (lo + hi) / 2;
    if (e >= bounds_[mid + 1])
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

Eigen::ArrayXd EnergyGroupStructure::nonthermal_weights() const {
  Eigen::ArrayXd w = Eigen::ArrayXd::Ones(n_groups());
  w[thermal_index_] = 0.0;
  return w;
}

EnergyGroupStructure make_equal_lethargy_structure(int n_groups, double e_max_ev,
                                                   double cutoff_ev, double e_min_ev) {
  if (n_groups < 2) throw ConfigError("need at least 2 groups");
  const int nt = n_groups - 1;
  Eigen::ArrayXd bounds(n_groups + 1);
  const double span = std::log(e_max_ev / cutoff_ev);
  for (int k = 0; k <= nt; ++k) bounds[k] = e_max_ev * std::exp(-span * k / nt);
  bounds[nt] = cutoff_ev;  // exact edge at the thermal cutoff
  bounds[n_groups] = e_min_ev;
  return EnergyGroupStructure(std::move(bounds), n_groups - 1);
}

EnergyGroupStructure make_nested_coarse(const EnergyGroupStructure& fine, int n_coarse) {
  const int fine_nt = fine.n_groups() - 1;
  const int coarse_nt = n_coarse - 1;
  if (coarse_nt < 1 || coarse_nt > fine_nt)
    throw ConfigError("coarse structure must have between 2 and fine-count groups");
  Eigen::ArrayXd bounds(n_coarse + 1);
  for (int j = 0; j <= coarse_nt; ++j) {
    int idx = static_cast<int>(std::lround(static_cast<double>(j) * fine_nt / coarse_nt));
    bounds[j] = fine.bounds()[idx];
  }
  bounds[n_coarse] = fine.bottom();
  return EnergyGroupStructure(std::move(bounds), n_coarse - 1);
}

std::vector<int> map_fine_to_coarse(const EnergyGroupStructure& fine,
                                    const EnergyGroupStructure& coarse) {
  std::vector<int> map(fine.n_groups());
  for (int g = 0; g < fine.n_groups(); ++g) {
    const double mid = std::sqrt(fine.upper(g) * fine.lower(g));
    map[g] = coarse.group_of(std::min(std::max(mid, coarse.bottom()), coarse.top()));
  }
  if (map[fine.n_groups() - 1] != coarse.n_groups() - 1)
    throw ConfigError("fine thermal group does not map onto the coarse thermal group");
  return map;
}

WeightSpectrum WeightSpectrum::standard(double fission_break_ev, double fission_temperature_ev,
                                        double thermal_cutoff_ev) {
  WeightSpectrum s;
  s.fission_break_ev_ = fission_break_ev;
  s.fission_temperature_ev_ = fission_temperature_ev;
  s.thermal_cutoff_ev_ = thermal_cutoff_ev;
  return s;
}

WeightSpectrum::Segment WeightSpectrum::segment_of(double e_ev) const {
  if (e_ev >= fission_break_ev_) return Segment::fission;
  if (e_ev >= thermal_cutoff_ev_) return Segment::slowing_down;
  return Segment::thermal;
}

double WeightSpectrum::value(double e_ev) const {
  if (e_ev <= 0.0) throw Error("weight spectrum evaluated at nonpositive energy");
  switch (segment_of(e_ev)) {
    case Segment::fission:
      // E^{3/2} exp(-E/T) per lethargy, scaled to 1 at the break so the
      // spectrum is continuous into the slowing-down segment.
      return std::pow(e_ev / fission_break_ev_, 1.5) *
             std::exp(-(e_ev - fission_break_ev_) / fission_temperature_ev_);
    case Segment::slowing_down:
      return 1.0;  // 1/E flux in energy is flat per lethargy
    case Segment::thermal:
      return e_ev / thermal_cutoff_ev_;  // flat in energy
  }
  return 0.0;
}

Eigen::ArrayXd fission_spectrum_by_group(const EnergyGroupStructure& groups,
                                         double temperature_ev) {
  // Maxwellian-like chi(E) ~ sqrt(E) exp(-E/T), integrated per group with a
  // fixed subgrid; zero emission in the thermal group.
  Eigen::ArrayXd chi = Eigen::ArrayXd::Zero(groups.n_groups());
  constexpr int pts = 256;
  for (int g = 0; g < groups.n_groups(); ++g) {
    if (groups.is_thermal(g)) continue;
    const double ulo = 0.0, uhi = std::log(groups.upper(g) / groups.lower(g));
    double acc = 0.0;
    for (int i = 0; i < pts; ++i) {
      const double u0 = ulo + (uhi - ulo) * i / pts;
      const double u1 = ulo + (uhi - ulo) * (i + 1) / pts;
      const double e0 = groups.upper(g) * std::exp(-u0);
      const double e1 = groups.upper(g) * std::exp(-u1);
      auto f = [&](double e) { return std::sqrt(e) * std::exp(-e / temperature_ev) * e; };
      acc += 0.5 * (f(e0) + f(e1)) * (u1 - u0);  // chi(E) E du = chi(E) dE
    }
    chi[g] = acc;
  }
  const double total = chi.sum();
  if (total <= 0.0) throw ConfigError("fission spectrum integrates to zero");
  return chi / total;
}

}  // namespace ferrite
