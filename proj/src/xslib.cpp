#include "ferrite/xslib.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ferrite/hash.hpp"
#include "ferrite/text_io.hpp"

namespace ferrite {

void ResonanceNuclide::validate() const {
  if (id.empty()) throw ConfigError("nuclide without id");
  if (mass_number < 1.0) throw ConfigError("nuclide " + id + ": mass number must be >= 1");
  if (potential_barns <= 0.0) throw ConfigError("nuclide " + id + ": sigma_pot must be > 0");
  if (thermal_capture_barns < 0.0) throw ConfigError("nuclide " + id + ": capture must be >= 0");
  for (const auto& r : resonances) {
    if (r.width_ev <= 0.0 || r.peak_barns <= 0.0)
      throw ConfigError("nuclide " + id + ": resonance width and peak must be > 0");
    if (r.capture_fraction < 0.0 || r.capture_fraction > 1.0)
      throw ConfigError("nuclide " + id + ": capture fraction outside [0,1]");
  }
}

void MaterialComposition::validate() const {
  if (components.empty()) throw ConfigError("material " + id + " has no components");
  for (const auto& c : components)
    if (c.number_density <= 0.0)
      throw ConfigError("material " + id + ": number densities must be > 0");
  if (chord_length_cm <= 0.0) throw ConfigError("material " + id + ": chord length must be > 0");
}

PointwiseXs eval_pointwise(const ResonanceNuclide& n, double e_ev) {
  if (e_ev < energy::min_ev || e_ev > energy::max_ev)
    throw Error("pointwise evaluation outside the global energy range");
  PointwiseXs xs;
  xs.scatter = n.potential_barns;
  xs.absorb = n.thermal_capture_barns * std::sqrt(energy::reference_ev / e_ev);
  for (const auto& r : n.resonances) {
    const double half = 0.5 * r.width_ev;
    const double de = e_ev - r.center_ev;
    const double lorentz = r.peak_barns * half * half / (de * de + half * half);
    xs.scatter += (1.0 - r.capture_fraction) * lorentz;
    xs.absorb += r.capture_fraction * lorentz;
  }
  xs.total = xs.scatter + xs.absorb;
  return xs;
}

double chord_length(double volume_cm3, double surface_cm2) {
  if (volume_cm3 <= 0.0 || surface_cm2 <= 0.0)
    throw Error("chord length needs positive volume and surface");
  return 4.0 * volume_cm3 / surface_cm2;
}

std::string to_string(LibraryMode m) {
  switch (m) {
    case LibraryMode::dilute: return "dilute";
    case LibraryMode::res: return "res";
    case LibraryMode::fine: return "fine";
  }
  return "dilute";
}

LibraryMode library_mode_from(const std::string& s) {
  if (s == "dilute") return LibraryMode::dilute;
  if (s == "res") return LibraryMode::res;
  if (s == "fine") return LibraryMode::fine;
  throw ConfigError("unknown library mode '" + s + "'");
}

const MaterialXs& MGLibrary::material(const std::string& id) const {
  return materials[material_index(id)];
}

int MGLibrary::material_index(const std::string& id) const {
  for (size_t i = 0; i < materials.size(); ++i)
    if (materials[i].id == id) return static_cast<int>(i);
  throw ConfigError("library has no material '" + id + "'");
}

Eigen::ArrayXd build_group_grid(const EnergyGroupStructure& groups, int g,
                                const std::vector<Resonance>& resonances,
                                const CondenseOptions& opt) {
  const double e_hi = groups.upper(g);
  const double e_lo = groups.lower(g);
  const double width = std::log(e_hi / e_lo);
  double du = width / opt.min_points_per_group;
  for (const auto& r : resonances) {
    const double reach = opt.wing_widths * r.width_ev;
    if (r.center_ev + reach < e_lo || r.center_ev - reach > e_hi) continue;
    du = std::min(du, (r.width_ev / r.center_ev) / opt.points_per_width);
  }
  const int n = std::max(2, static_cast<int>(std::ceil(width / du)));
  Eigen::ArrayXd e(n + 1);
  for (int i = 0; i <= n; ++i) e[i] = e_hi * std::exp(-width * i / n);
  e[n] = e_lo;
  return e;
}

namespace {

// Trapezoid on the uniform lethargy grid; constant spacing cancels in the
// ratios so only the endpoint halving matters.
double trapz(const Eigen::ArrayXd& f) {
  const int n = static_cast<int>(f.size());
  double acc = 0.5 * (f[0] + f[n - 1]);
  for (int i = 1; i + 1 < n; ++i) acc += f[i];
  return acc;
}

struct GridTables {
  Eigen::ArrayXd e, w_inf, sig_t, sig_s, sig_a;
};

GridTables tabulate(const ResonanceNuclide& n, const Eigen::ArrayXd& grid,
                    const WeightSpectrum& spectrum) {
  GridTables t;
  const int m = static_cast<int>(grid.size());
  t.e = grid;
  t.w_inf.resize(m);
  t.sig_t.resize(m);
  t.sig_s.resize(m);
  t.sig_a.resize(m);
  for (int i = 0; i < m; ++i) {
    const PointwiseXs xs = eval_pointwise(n, grid[i]);
    t.w_inf[i] = spectrum.value(grid[i]);
    t.sig_t[i] = xs.total;
    t.sig_s[i] = xs.scatter;
    t.sig_a[i] = xs.absorb;
  }
  return t;
}

struct GroupAverages {
  double total = 0.0, scatter = 0.0, absorb = 0.0;
};

GroupAverages averages_with_weight(const GridTables& t, const Eigen::ArrayXd& w) {
  const double denom = trapz(w);
  if (denom <= 0.0) throw ConfigError("condensation weight integrates to zero in a group");
  GroupAverages a;
  a.total = trapz((t.sig_t * w).eval()) / denom;
  a.scatter = trapz((t.sig_s * w).eval()) / denom;
  a.absorb = trapz((t.sig_a * w).eval()) / denom;
  return a;
}

}  // namespace

DiluteGroupXs infinitely_dilute_mg(const ResonanceNuclide& n, const EnergyGroupStructure& groups,
                                   const WeightSpectrum& spectrum, const CondenseOptions& opt) {
  n.validate();
  const int ng = groups.n_groups();
  DiluteGroupXs out;
  out.total.resize(ng);
  out.scatter.resize(ng);
  out.absorb.resize(ng);
  for (int g = 0; g < ng; ++g) {
    const auto grid = build_group_grid(groups, g, n.resonances, opt);
    const auto t = tabulate(n, grid, spectrum);
    const auto a = averages_with_weight(t, t.w_inf);
    out.total[g] = a.total;
    out.scatter[g] = a.scatter;
    out.absorb[g] = a.absorb;
  }
  return out;
}

Eigen::ArrayXd background_xs(const MaterialComposition& material, int j,
                             const std::vector<Eigen::ArrayXd>& component_totals_barns,
                             bool use_escape) {
  material.validate();
  if (j < 0 || j >= static_cast<int>(material.components.size()))
    throw ConfigError("background_xs: component index out of range");
  const double nj = material.components[j].number_density;
  Eigen::ArrayXd sigma0 = Eigen::ArrayXd::Zero(component_totals_barns.empty()
                                                   ? 0
                                                   : component_totals_barns[0].size());
  for (size_t m = 0; m < material.components.size(); ++m) {
    if (static_cast<int>(m) == j) continue;
    sigma0 += component_totals_barns[m] * (material.components[m].number_density / nj);
  }
  if (use_escape) sigma0 += 1.0 / (nj * material.chord_length_cm);
  return sigma0;
}

BondarenkoFactors bondarenko_factor(const ResonanceNuclide& n, const EnergyGroupStructure& groups,
                                    int g, double sigma0_barns, const WeightSpectrum& spectrum,
                                    const CondenseOptions& opt) {
  if (sigma0_barns < 0.0) throw Error("bondarenko_factor: sigma0 must be >= 0");
  const auto grid = build_group_grid(groups, g, n.resonances, opt);
  const auto t = tabulate(n, grid, spectrum);
  const auto dilute = averages_with_weight(t, t.w_inf);
  const Eigen::ArrayXd w_shield = t.w_inf / (t.sig_t + sigma0_barns);
  const auto shielded = averages_with_weight(t, w_shield);

  BondarenkoFactors f;
  auto ratio = [&](double num, double den) {
    if (den <= 0.0) {
      f.degenerate = true;
      return 1.0;
    }
    return num / den;
  };
  f.f_total = ratio(shielded.total, dilute.total);
  f.f_scatter = ratio(shielded.scatter, dilute.scatter);
  f.f_absorb = ratio(shielded.absorb, dilute.absorb);
  return f;
}

namespace {

// Fraction of the isotropic-in-CM elastic kernel P(E->E') = 1/((1-alpha)E) on
// [alpha E, E] landing in each destination group. Scatters below the structure
// bottom collect in the thermal group, which is also a pure self-scatterer.
void transfer_fractions(const EnergyGroupStructure& groups, int g_src, double e, double alpha,
                        std::vector<double>& frac) {
  const int ng = groups.n_groups();
  std::fill(frac.begin(), frac.end(), 0.0);
  if (groups.is_thermal(g_src)) {
    frac[g_src] = 1.0;
    return;
  }
  const double e_min = alpha * e;
  const double span = e - e_min;
  if (span <= 0.0) {  // alpha == 1 limit: no energy loss
    frac[g_src] = 1.0;
    return;
  }
  for (int gp = g_src; gp < ng; ++gp) {
    const double hi = std::min(e, groups.upper(gp));
    const double lo = std::max(e_min, groups.lower(gp));
    if (hi > lo) frac[gp] += (hi - lo) / span;
    if (groups.lower(gp) <= e_min) break;
  }
  if (e_min < groups.bottom()) frac[ng - 1] += (groups.bottom() - e_min) / span;
}

struct MicroGroupXs {
  Eigen::ArrayXd total, scatter, absorb;  // shielded, barns
  Eigen::MatrixXd transfer;               // shielded scatter rows, barns
  Eigen::ArrayXd f_total;                 // diagnostics
};

MicroGroupXs condense_nuclide(const ResonanceNuclide& n, const EnergyGroupStructure& groups,
                              const WeightSpectrum& spectrum, const Eigen::ArrayXd& sigma0,
                              const CondenseOptions& opt) {
  const int ng = groups.n_groups();
  MicroGroupXs out;
  out.total.resize(ng);
  out.scatter.resize(ng);
  out.absorb.resize(ng);
  out.f_total.resize(ng);
  out.transfer = Eigen::MatrixXd::Zero(ng, ng);
  const double alpha = n.alpha();
  std::vector<double> frac(ng);

  for (int g = 0; g < ng; ++g) {
    const auto grid = build_group_grid(groups, g, n.resonances, opt);
    const auto t = tabulate(n, grid, spectrum);
    const auto dilute = averages_with_weight(t, t.w_inf);
    const Eigen::ArrayXd w = t.w_inf / (t.sig_t + sigma0[g]);
    const auto shielded = averages_with_weight(t, w);
    out.total[g] = shielded.total;
    out.scatter[g] = shielded.scatter;
    out.absorb[g] = shielded.absorb;
    out.f_total[g] = dilute.total > 0.0 ? shielded.total / dilute.total : 1.0;

    // Transfer row condensed with the same weight so the row sums to the
    // shielded scattering cross section.
    const double denom = trapz(w);
    const int m = static_cast<int>(grid.size());
    Eigen::MatrixXd row = Eigen::MatrixXd::Zero(1, ng);
    for (int i = 0; i < m; ++i) {
      transfer_fractions(groups, g, grid[i], alpha, frac);
      const double coef = (i == 0 || i == m - 1) ? 0.5 : 1.0;
      const double sw = coef * t.sig_s[i] * w[i];
      for (int gp = g; gp < ng; ++gp)
        if (frac[gp] != 0.0) row(0, gp) += sw * frac[gp];
    }
    out.transfer.row(g) = row.row(0) / denom;
  }
  return out;
}

}  // namespace

MGLibrary build_library(const std::vector<ResonanceNuclide>& nuclides,
                        const std::vector<MaterialComposition>& materials,
                        const EnergyGroupStructure& groups, const WeightSpectrum& spectrum,
                        LibraryMode mode, const CondenseOptions& opt) {
  MGLibrary lib;
  lib.groups = groups;
  lib.mode = mode;
  lib.nuclides = nuclides;
  const int ng = groups.n_groups();

  auto nuclide_index = [&](const std::string& id) -> int {
    for (size_t i = 0; i < nuclides.size(); ++i)
      if (nuclides[i].id == id) return static_cast<int>(i);
    throw ConfigError("material references unknown nuclide '" + id + "'");
  };

  // Infinitely dilute totals per nuclide feed the Eq.-11 backgrounds.
  std::vector<DiluteGroupXs> dilute(nuclides.size());
  for (size_t i = 0; i < nuclides.size(); ++i)
    dilute[i] = infinitely_dilute_mg(nuclides[i], groups, spectrum, opt);

  for (const auto& mat : materials) {
    mat.validate();
    MaterialXs mx;
    mx.id = mat.id;
    mx.sigma_t = Eigen::ArrayXd::Zero(ng);
    mx.sigma_a = Eigen::ArrayXd::Zero(ng);
    mx.transfer = Eigen::MatrixXd::Zero(ng, ng);

    std::vector<Eigen::ArrayXd> component_totals;
    component_totals.reserve(mat.components.size());
    for (const auto& c : mat.components)
      component_totals.push_back(dilute[nuclide_index(c.nuclide_id)].total);

    for (size_t j = 0; j < mat.components.size(); ++j) {
      const auto& comp = mat.components[j];
      const int ni = nuclide_index(comp.nuclide_id);
      Eigen::ArrayXd sigma0;
      if (mode == LibraryMode::dilute)
        sigma0 = Eigen::ArrayXd::Constant(ng, dilute_sigma0_barns);
      else
        sigma0 = background_xs(mat, static_cast<int>(j), component_totals, opt.use_escape);
      const MicroGroupXs micro =
          condense_nuclide(nuclides[ni], groups, spectrum, sigma0, opt);
      mx.sigma_t += comp.number_density * micro.total;
      mx.sigma_a += comp.number_density * micro.absorb;
      mx.transfer += comp.number_density * micro.transfer;
    }
    lib.materials.push_back(std::move(mx));
  }
  return lib;
}

std::string library_hash(const MGLibrary& lib) {
  const std::string text = serialize_library(lib);
  const size_t pos = text.find("hash ") + 5;
  return text.substr(pos, 16);
}

std::string serialize_library(const MGLibrary& lib) {
  std::ostringstream body;
  const int ng = lib.groups.n_groups();
  body << "mode " << to_string(lib.mode) << "\n";
  body << "groups " << ng << " thermal " << lib.groups.thermal_index() << "\n";
  body << "bounds";
  for (int i = 0; i <= ng; ++i) body << ' ' << fmt_double(lib.groups.bounds()[i]);
  body << "\n";
  body << "nuclides " << lib.nuclides.size() << "\n";
  for (const auto& n : lib.nuclides) {
    body << "nuclide " << n.id << ' ' << fmt_double(n.mass_number) << ' '
         << fmt_double(n.potential_barns) << ' ' << fmt_double(n.thermal_capture_barns) << ' '
         << n.resonances.size() << "\n";
    for (const auto& r : n.resonances)
      body << "res " << fmt_double(r.center_ev) << ' ' << fmt_double(r.width_ev) << ' '
           << fmt_double(r.peak_barns) << ' ' << fmt_double(r.capture_fraction) << "\n";
  }
  body << "materials " << lib.materials.size() << "\n";
  for (const auto& m : lib.materials) {
    body << "material " << m.id << "\n";
    for (int g = 0; g < ng; ++g) {
      body << "xs " << g << ' ' << fmt_double(m.sigma_t[g]) << ' ' << fmt_double(m.sigma_a[g]);
      int count = 0;
      for (int gp = 0; gp < ng; ++gp)
        if (m.transfer(g, gp) != 0.0) ++count;
      body << ' ' << count;
      for (int gp = 0; gp < ng; ++gp)
        if (m.transfer(g, gp) != 0.0) body << ' ' << gp << ' ' << fmt_double(m.transfer(g, gp));
      body << "\n";
    }
  }
  const std::string b = body.str();
  return "ferrite xslib 1\nhash " + content_hash(b) + "\n" + b;
}

MGLibrary parse_library(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "ferrite xslib 1")
    throw IoError("not a ferrite xslib file");
  if (!std::getline(in, line) || line.rfind("hash ", 0) != 0)
    throw IoError("missing library hash line");
  const std::string declared = line.substr(5);
  std::string body(std::istreambuf_iterator<char>(in), {});
  if (content_hash(body) != declared) throw IoError("library hash mismatch (stale or corrupt)");

  MGLibrary lib;
  lib.hash = declared;
  std::istringstream bs(body);
  auto next = [&](const char* what) {
    if (!std::getline(bs, line)) throw IoError(std::string("library truncated before ") + what);
    return split_ws(line);
  };

  auto f0 = next("mode");
  lib.mode = library_mode_from(std::string(f0.at(1)));
  auto f1 = next("groups");
  const int ng = static_cast<int>(parse_int(f1.at(1)));
  const int thermal = static_cast<int>(parse_int(f1.at(3)));
  auto f2 = next("bounds");
  Eigen::ArrayXd bounds(ng + 1);
  for (int i = 0; i <= ng; ++i) bounds[i] = parse_double(f2.at(1 + i));
  lib.groups = EnergyGroupStructure(std::move(bounds), thermal);

  auto f3 = next("nuclides");
  const int nn = static_cast<int>(parse_int(f3.at(1)));
  for (int i = 0; i < nn; ++i) {
    auto fn = next("nuclide");
    ResonanceNuclide n;
    n.id = std::string(fn.at(1));
    n.mass_number = parse_double(fn.at(2));
    n.potential_barns = parse_double(fn.at(3));
    n.thermal_capture_barns = parse_double(fn.at(4));
    const int nres = static_cast<int>(parse_int(fn.at(5)));
    for (int r = 0; r < nres; ++r) {
      auto fr = next("res");
      n.resonances.push_back({parse_double(fr.at(1)), parse_double(fr.at(2)),
                              parse_double(fr.at(3)), parse_double(fr.at(4))});
    }
    lib.nuclides.push_back(std::move(n));
  }

  auto f4 = next("materials");
  const int nm = static_cast<int>(parse_int(f4.at(1)));
  for (int m = 0; m < nm; ++m) {
    auto fm = next("material");
    MaterialXs mx;
    mx.id = std::string(fm.at(1));
    mx.sigma_t.resize(ng);
    mx.sigma_a.resize(ng);
    mx.transfer = Eigen::MatrixXd::Zero(ng, ng);
    for (int g = 0; g < ng; ++g) {
      auto fx = next("xs");
      if (parse_int(fx.at(1)) != g) throw IoError("library xs records out of order");
      mx.sigma_t[g] = parse_double(fx.at(2));
      mx.sigma_a[g] = parse_double(fx.at(3));
      const int count = static_cast<int>(parse_int(fx.at(4)));
      for (int k = 0; k < count; ++k) {
        const int gp = static_cast<int>(parse_int(fx.at(5 + 2 * k)));
        mx.transfer(g, gp) = parse_double(fx.at(6 + 2 * k));
      }
    }
    lib.materials.push_back(std::move(mx));
  }
  return lib;
}

void write_library(const MGLibrary& lib, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << serialize_library(lib);
}

MGLibrary read_library(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string text(std::istreambuf_iterator<char>(in), {});
  return parse_library(text);
}

}  // namespace ferrite
