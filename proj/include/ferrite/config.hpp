#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ferrite/detsolver.hpp"
#include "ferrite/energy.hpp"
#include "ferrite/geometry.hpp"
#include "ferrite/vr.hpp"
#include "ferrite/xslib.hpp"

namespace ferrite {

// Sectioned key-value text: [section] or [section.name] headers, `key = value`
// lines, repeated keys append, '#' comments. Section and key order preserved.
class ConfigText {
 public:
  struct Section {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;
  };

  static ConfigText parse(const std::string& text);
  static ConfigText load(const std::string& path);

  bool has_section(const std::string& name) const;
  const Section& section(const std::string& name) const;
  std::vector<const Section*> sections_with_prefix(const std::string& prefix) const;

  // single-valued getters; throw when required and missing
  std::string get(const std::string& section, const std::string& key) const;
  std::string get_or(const std::string& section, const std::string& key,
                     const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double_or(const std::string& section, const std::string& key, double fallback) const;
  std::int64_t get_int_or(const std::string& section, const std::string& key,
                          std::int64_t fallback) const;
  bool get_flag_or(const std::string& section, const std::string& key, bool fallback) const;
  std::vector<std::string> get_all(const std::string& section, const std::string& key) const;

  const std::string& raw() const { return raw_; }

 private:
  std::vector<Section> sections_;
  std::string raw_;
};

struct McRunSettings {
  std::uint64_t histories = 1000000;
  std::uint64_t seed = 1;
  int workers = 2;
};

// Fully resolved run description assembled from a config file.
struct RunConfig {
  std::string tag;
  std::string out_dir;

  std::vector<ResonanceNuclide> nuclides;
  std::vector<MaterialComposition> materials;
  WeightSpectrum spectrum;
  CondenseOptions condense;

  EnergyGroupStructure fine_groups;
  EnergyGroupStructure coarse_groups;

  GeometryConfig geometry;
  double source_temperature_ev = 1.4e6;

  SolverSettings solver;  // quadrature attached

  AdjointSourceSpec vr;   // response weights resolved against coarse groups
  bool cadis_flux_weighting = true;
  double window_ratio = 10.0;
  WindowCaps window_caps;

  McRunSettings mc;

  std::string config_hash;  // hash of the raw config text
  std::string raw_text;

  static RunConfig from_text(const std::string& text);
  static RunConfig from_file(const std::string& path);
};

// Built-in benchmark configs (plate and no-plate variants).
std::string default_benchmark_config(bool plate);

}  // namespace ferrite
