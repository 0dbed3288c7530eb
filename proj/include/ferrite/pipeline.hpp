#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ferrite/config.hpp"
#include "ferrite/mc.hpp"

namespace ferrite {

struct PipelineOverrides {
  std::optional<double> exponent;  // --M (also turns the resonance factor on)
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> histories;
  std::optional<int> workers;
  std::optional<std::string> out_dir;
  bool analog = false;  // skip VR, run the analog source without windows
};

// One Table-style row: global-region statistics of a completed run.
struct ReportRow {
  std::string label;
  double exponent = -1.0;  // M; -1 for runs without the resonance factor
  std::uint64_t histories = 0;
  double cpu_hours = 0.0;
  double r_max = 0.0, r_avg = 0.0, r_min = 0.0;
  double fom_min = 0.0, fom_avg = 0.0, fom_max = 0.0;
};

std::string report_csv_header();
std::string report_csv_line(const ReportRow& r);

struct PipelineArtifacts {
  std::string dir;
  ReportRow row;
  TallySet tally;
  TallyStatistics stats;
  ImportanceMap importance;   // empty for analog runs
  WeightWindowMap windows;    // empty for analog runs
  long resfac_clipped = 0;
};

// Shared front half of the pipeline: libraries, geometry, true source, and
// the forward solves (dilute only when the resonance factor is on).
struct PipelineContext {
  RunConfig cfg;
  Geometry2D geom;
  FixedSource q_true;  // normalized to one source particle
  MGLibrary coarse_res, coarse_dilute, fine;
  FluxField phi_res, phi_dilute;
  bool has_dilute = false;
};

PipelineContext prepare_shared(const RunConfig& cfg, const std::string& dir,
                               bool force_dilute = false);

// Stages 4-8 for one VR setting, reusing the shared context.
PipelineArtifacts run_vr_and_mc(const PipelineContext& ctx, const RunConfig& cfg,
                                const std::string& dir);

PipelineArtifacts run_pipeline(const RunConfig& base_cfg, const PipelineOverrides& ov = {});

struct SweepResult {
  std::vector<ReportRow> rows;  // sorted by M; failed runs carry a FAILED label
  std::string dir;
};

SweepResult sweep_m(const RunConfig& base_cfg, const std::vector<double>& m_list,
                    const PipelineOverrides& ov = {});

// Side-by-side report plus centerline 95CI-RE ratio map. The config rebuilds
// the geometry; every run directory must match its hash.
void compare_cases(const RunConfig& cfg, const std::vector<std::string>& dirs,
                   const std::string& out_csv);

double read_timing_cpu_hours(const std::string& path);

}  // namespace ferrite
