#include "ferrite/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "ferrite/hash.hpp"
#include "ferrite/text_io.hpp"

namespace ferrite {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

}  // namespace

ConfigText ConfigText::parse(const std::string& text) {
  ConfigText cfg;
  cfg.raw_ = text;
  std::istringstream in(text);
  std::string line;
  Section* current = nullptr;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(line_no) + ": unterminated section header");
      const std::string name = trim(line.substr(1, line.size() - 2));
      current = nullptr;
      for (auto& s : cfg.sections_)
        if (s.name == name) current = &s;  // reopened sections extend in place
      if (!current) {
        cfg.sections_.push_back({name, {}});
        current = &cfg.sections_.back();
      }
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    if (!current) throw ConfigError("line " + std::to_string(line_no) + ": entry before a section");
    current->entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

ConfigText ConfigText::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::string text(std::istreambuf_iterator<char>(in), {});
  return parse(text);
}

bool ConfigText::has_section(const std::string& name) const {
  for (const auto& s : sections_)
    if (s.name == name) return true;
  return false;
}

const ConfigText::Section& ConfigText::section(const std::string& name) const {
  for (const auto& s : sections_)
    if (s.name == name) return s;
  throw ConfigError("missing [" + name + "] section");
}

std::vector<const ConfigText::Section*> ConfigText::sections_with_prefix(
    const std::string& prefix) const {
  std::vector<const Section*> out;
  for (const auto& s : sections_)
    if (s.name.rfind(prefix, 0) == 0) out.push_back(&s);
  return out;
}

std::string ConfigText::get(const std::string& section_name, const std::string& key) const {
  const auto& s = section(section_name);
  const std::string* found = nullptr;  // last occurrence wins
  for (const auto& [k, v] : s.entries)
    if (k == key) found = &v;
  if (!found) throw ConfigError("missing key '" + key + "' in [" + section_name + "]");
  return *found;
}

std::string ConfigText::get_or(const std::string& section_name, const std::string& key,
                               const std::string& fallback) const {
  if (!has_section(section_name)) return fallback;
  const std::string* found = nullptr;
  for (const auto& [k, v] : section(section_name).entries)
    if (k == key) found = &v;
  return found ? *found : fallback;
}

double ConfigText::get_double(const std::string& s, const std::string& k) const {
  return parse_double(get(s, k));
}

double ConfigText::get_double_or(const std::string& s, const std::string& k,
                                 double fallback) const {
  const std::string v = get_or(s, k, "");
  return v.empty() ? fallback : parse_double(v);
}

std::int64_t ConfigText::get_int_or(const std::string& s, const std::string& k,
                                    std::int64_t fallback) const {
  const std::string v = get_or(s, k, "");
  if (v.empty()) return fallback;
  // allow scientific notation for big counts
  const double d = parse_double(v);
  return static_cast<std::int64_t>(d);
}

bool ConfigText::get_flag_or(const std::string& s, const std::string& k, bool fallback) const {
  const std::string v = get_or(s, k, "");
  if (v.empty()) return fallback;
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw ConfigError("flag '" + k + "' must be on/off");
}

std::vector<std::string> ConfigText::get_all(const std::string& section_name,
                                             const std::string& key) const {
  std::vector<std::string> out;
  if (!has_section(section_name)) return out;
  for (const auto& [k, v] : section(section_name).entries)
    if (k == key) out.push_back(v);
  return out;
}

namespace {

Bc bc_from(const std::string& s) {
  if (s == "vacuum") return Bc::vacuum;
  if (s == "reflective") return Bc::reflective;
  throw ConfigError("boundary condition must be vacuum or reflective, got '" + s + "'");
}

}  // namespace

RunConfig RunConfig::from_text(const std::string& text) {
  const ConfigText c = ConfigText::parse(text);
  RunConfig r;
  r.raw_text = text;
  r.config_hash = content_hash(text);
  r.tag = c.get_or("run", "tag", "run");
  r.out_dir = c.get_or("run", "out_dir", "runs/" + r.tag);

  const int fine_count = static_cast<int>(c.get_int_or("groups", "fine", 240));
  const int coarse_count = static_cast<int>(c.get_int_or("groups", "coarse", 27));
  const double e_max = c.get_double_or("groups", "e_max_ev", 2.0e7);
  const double cutoff = c.get_double_or("groups", "thermal_cutoff_ev", 0.625);
  const double e_min = c.get_double_or("groups", "e_min_ev", 1.0e-3);
  r.fine_groups = make_equal_lethargy_structure(fine_count, e_max, cutoff, e_min);
  r.coarse_groups = make_nested_coarse(r.fine_groups, coarse_count);

  r.spectrum = WeightSpectrum::standard(c.get_double_or("spectrum", "fission_break_ev", 1.0e5),
                                        c.get_double_or("spectrum", "fission_temperature_ev", 1.4e6),
                                        cutoff);
  r.source_temperature_ev = c.get_double_or("spectrum", "source_temperature_ev", 1.4e6);

  r.condense.min_points_per_group =
      static_cast<int>(c.get_int_or("condense", "min_points_per_group", 400));
  r.condense.points_per_width = static_cast<int>(c.get_int_or("condense", "points_per_width", 40));
  r.condense.wing_widths = c.get_double_or("condense", "wing_widths", 40.0);
  r.condense.use_escape = c.get_flag_or("condense", "use_escape", true);

  for (const auto* sec : c.sections_with_prefix("nuclide.")) {
    ResonanceNuclide n;
    n.id = sec->name.substr(8);
    for (const auto& [k, v] : sec->entries) {
      if (k == "mass_number") n.mass_number = parse_double(v);
      else if (k == "sigma_pot_barns") n.potential_barns = parse_double(v);
      else if (k == "sigma_cap_thermal_barns") n.thermal_capture_barns = parse_double(v);
      else if (k == "resonance") {
        auto f = split_ws(v);
        if (f.size() != 4)
          throw ConfigError("nuclide " + n.id + ": resonance needs E gamma peak capture_fraction");
        n.resonances.push_back(
            {parse_double(f[0]), parse_double(f[1]), parse_double(f[2]), parse_double(f[3])});
      } else {
        throw ConfigError("nuclide " + n.id + ": unknown key '" + k + "'");
      }
    }
    n.validate();
    r.nuclides.push_back(std::move(n));
  }
  if (r.nuclides.empty()) throw ConfigError("no [nuclide.*] sections");

  // geometry first; material chords may derive from the plate box
  auto& g = r.geometry;
  g.x_max_cm = c.get_double_or("geometry", "x_max_cm", 53.0);
  g.z_max_cm = c.get_double_or("geometry", "z_max_cm", 140.0);
  g.pitch_cm = c.get_double_or("geometry", "pitch_cm", 1.0);
  g.refine_x_lo_cm = c.get_double_or("geometry", "refine_x_lo_cm", 24.0);
  g.refine_x_hi_cm = c.get_double_or("geometry", "refine_x_hi_cm", 29.0);
  g.refine_pitch_cm = c.get_double_or("geometry", "refine_pitch_cm", 0.25);
  const auto layer_lines = c.get_all("geometry", "layer");
  if (!layer_lines.empty()) {
    g.layers.clear();
    for (const auto& l : layer_lines) {
      auto f = split_ws(l);
      if (f.size() != 3) throw ConfigError("layer needs: z_lo z_hi material");
      g.layers.push_back({parse_double(f[0]), parse_double(f[1]), std::string(f[2])});
    }
  }
  g.plate_enabled = c.get_flag_or("geometry", "plate", true);
  g.plate_material = c.get_or("geometry", "plate_material", "plate");
  g.plate_x_lo_cm = c.get_double_or("geometry", "plate_x_lo_cm", 25.0);
  g.plate_x_hi_cm = c.get_double_or("geometry", "plate_x_hi_cm", 28.0);
  g.plate_z_lo_cm = c.get_double_or("geometry", "plate_z_lo_cm", 30.0);
  g.plate_z_hi_cm = c.get_double_or("geometry", "plate_z_hi_cm", 130.0);
  g.source_z_lo_cm = c.get_double_or("geometry", "source_z_lo_cm", 0.0);
  g.source_z_hi_cm = c.get_double_or("geometry", "source_z_hi_cm", 15.0);
  g.exit_z_lo_cm = c.get_double_or("geometry", "exit_z_lo_cm", 130.0);
  g.exit_z_hi_cm = c.get_double_or("geometry", "exit_z_hi_cm", 132.0);
  g.centerline_x_lo_cm = c.get_double_or("geometry", "centerline_x_lo_cm", 26.0);
  g.centerline_x_hi_cm = c.get_double_or("geometry", "centerline_x_hi_cm", 27.0);
  const std::string bc_line = c.get_or("geometry", "bc", "vacuum vacuum vacuum vacuum");
  {
    auto f = split_ws(bc_line);
    if (f.size() != 4) throw ConfigError("bc needs four entries: xlo xhi zlo zhi");
    for (int i = 0; i < 4; ++i) g.bc[i] = bc_from(std::string(f[i]));
  }

  const double y_extent = c.get_double_or("geometry", "y_extent_cm", 50.0);
  for (const auto* sec : c.sections_with_prefix("material.")) {
    MaterialComposition m;
    m.id = sec->name.substr(9);
    for (const auto& [k, v] : sec->entries) {
      if (k == "component") {
        auto f = split_ws(v);
        if (f.size() != 2) throw ConfigError("material " + m.id + ": component needs 'id N'");
        m.components.push_back({std::string(f[0]), parse_double(f[1])});
      } else if (k == "chord_cm") {
        if (v == "dilute") {
          m.chord_length_cm = infinite_dilute_chord_cm;
        } else if (v == "auto") {
          // paper-style 4V/S of the plate box with the implied y extent
          const double tx = g.plate_x_hi_cm - g.plate_x_lo_cm;
          const double tz = g.plate_z_hi_cm - g.plate_z_lo_cm;
          const double vol = tx * y_extent * tz;
          const double surf = 2.0 * (tx * y_extent + tx * tz + y_extent * tz);
          m.chord_length_cm = chord_length(vol, surf);
        } else {
          m.chord_length_cm = parse_double(v);
        }
      } else {
        throw ConfigError("material " + m.id + ": unknown key '" + k + "'");
      }
    }
    m.validate();
    r.materials.push_back(std::move(m));
  }
  if (r.materials.empty()) throw ConfigError("no [material.*] sections");

  r.solver.tolerance = c.get_double_or("solver", "tolerance", 1.0e-5);
  r.solver.max_iterations = static_cast<int>(c.get_int_or("solver", "max_iterations", 2000));
  r.solver.quadrature =
      build_quadrature(static_cast<int>(c.get_int_or("solver", "n_polar", 6)),
                       static_cast<int>(c.get_int_or("solver", "n_azim", 4)));

  r.vr.mode = vr_mode_from(c.get_or("vr", "mode", "fwcadis_cell_group"));
  r.vr.detector_region = c.get_or("vr", "detector_region", "detector");
  const std::string resp = c.get_or("vr", "response", "nonthermal");
  if (resp == "nonthermal")
    r.vr.response_weights = r.coarse_groups.nonthermal_weights();
  else if (resp == "unity")
    r.vr.response_weights = Eigen::ArrayXd::Ones(r.coarse_groups.n_groups());
  else
    throw ConfigError("vr response must be nonthermal or unity");
  r.vr.flux_floor = c.get_double_or("vr", "flux_floor", 1.0e-30);
  r.vr.resonance_factor.enabled = c.get_flag_or("vr", "resfac", false);
  r.vr.resonance_factor.exponent = c.get_double_or("vr", "M", 1.0);
  r.vr.resonance_factor.ratio_clamp_lo = c.get_double_or("vr", "clamp_lo", 1.0e-3);
  r.vr.resonance_factor.ratio_clamp_hi = c.get_double_or("vr", "clamp_hi", 1.0e3);
  r.vr.validate();
  r.cadis_flux_weighting = c.get_or("vr", "cadis_weighting", "flux") == "flux";
  r.window_ratio = c.get_double_or("vr", "rho", 10.0);
  r.window_caps.center_lo = c.get_double_or("vr", "window_cap_lo", 1.0e-12);
  r.window_caps.center_hi = c.get_double_or("vr", "window_cap_hi", 1.0e12);

  r.mc.histories = static_cast<std::uint64_t>(c.get_int_or("mc", "histories", 1000000));
  r.mc.seed = static_cast<std::uint64_t>(c.get_int_or("mc", "seed", 1));
  r.mc.workers = static_cast<int>(c.get_int_or("mc", "workers", 2));
  if (r.mc.workers < 1) throw ConfigError("mc workers must be >= 1");

  return r;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::string text(std::istreambuf_iterator<char>(in), {});
  return from_text(text);
}

std::string default_benchmark_config(bool plate) {
  std::string cfg = R"([run]
tag = plate-base

[groups]
coarse = 27
fine = 240
e_max_ev = 2e7
thermal_cutoff_ev = 0.625
e_min_ev = 1e-3

[nuclide.hydrogen]
mass_number = 1
sigma_pot_barns = 20
sigma_cap_thermal_barns = 1.0

[nuclide.oxygenlike]
mass_number = 16
sigma_pot_barns = 4
sigma_cap_thermal_barns = 0.1

[nuclide.ironlike]
mass_number = 56
sigma_pot_barns = 3
sigma_cap_thermal_barns = 2.56
resonance = 1.2e3  2.5e2  1.2e3  0.35
resonance = 3.5e3  7.0e2  1.0e3  0.35
resonance = 1.0e4  2.0e3  8.0e2  0.30
resonance = 2.8e4  5.5e3  6.0e2  0.30
resonance = 8.0e4  1.6e4  4.5e2  0.30
resonance = 2.3e5  4.5e4  3.0e2  0.25
resonance = 6.5e5  1.2e5  2.0e2  0.25

[material.water]
component = hydrogen 0.00669
component = oxygenlike 0.00334
chord_cm = dilute

[material.source_mix]
component = hydrogen 0.00446
component = oxygenlike 0.00223
component = ironlike 0.0008
chord_cm = dilute

[material.steel]
component = ironlike 0.00848
chord_cm = dilute

[material.plate]
component = ironlike 0.00848
chord_cm = auto

[material.air]
component = oxygenlike 5e-5
chord_cm = dilute

[geometry]
x_max_cm = 53
z_max_cm = 140
pitch_cm = 1
refine_x_lo_cm = 24
refine_x_hi_cm = 29
refine_pitch_cm = 0.25
layer = 0 15 source_mix
layer = 15 30 steel
layer = 30 130 water
layer = 130 140 air
plate_material = plate
plate_x_lo_cm = 25
plate_x_hi_cm = 28
plate_z_lo_cm = 30
plate_z_hi_cm = 130
exit_z_lo_cm = 130
exit_z_hi_cm = 132
centerline_x_lo_cm = 26
centerline_x_hi_cm = 27
y_extent_cm = 50

[solver]
tolerance = 1e-5
max_iterations = 2000
n_polar = 6
n_azim = 4

[vr]
mode = fwcadis_cell_group
resfac = off
M = 1.0
clamp_lo = 1e-3
clamp_hi = 1e3
rho = 10

[mc]
histories = 1e6
seed = 1
workers = 2
)";
  if (!plate) cfg += "\n[run]\ntag = noplate-base\n\n[geometry]\nplate = off\n";
  return cfg;
}

}  // namespace ferrite
