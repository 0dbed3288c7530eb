#include "ferrite/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ferrite/detsolver.hpp"
#include "ferrite/text_io.hpp"

namespace fs = std::filesystem;

namespace ferrite {

namespace {

[[noreturn]] void stage_fail(int number, const std::string& name, const std::exception& e) {
  throw Error("stage (" + std::to_string(number) + ") " + name + ": " + e.what());
}

RunConfig apply_overrides(const RunConfig& base, const PipelineOverrides& ov) {
  RunConfig cfg = base;
  if (ov.exponent) {
    cfg.vr.resonance_factor.enabled = true;
    cfg.vr.resonance_factor.exponent = *ov.exponent;
  }
  if (ov.seed) cfg.mc.seed = *ov.seed;
  if (ov.histories) cfg.mc.histories = *ov.histories;
  if (ov.workers) cfg.mc.workers = *ov.workers;
  if (ov.out_dir) cfg.out_dir = *ov.out_dir;
  return cfg;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
}

std::string effective_config_echo(const RunConfig& cfg, const PipelineOverrides& ov) {
  std::ostringstream s;
  s << cfg.raw_text;
  s << "\n# effective overrides\n[effective]\n";
  s << "resfac = " << (cfg.vr.resonance_factor.enabled ? "on" : "off") << "\n";
  s << "M = " << fmt_double(cfg.vr.resonance_factor.exponent) << "\n";
  s << "seed = " << cfg.mc.seed << "\n";
  s << "histories = " << cfg.mc.histories << "\n";
  s << "analog = " << (ov.analog ? "on" : "off") << "\n";
  return s.str();
}

std::string run_label(const RunConfig& cfg, bool analog) {
  if (analog) return cfg.tag + ":analog";
  std::string label = cfg.tag + ":" + to_string(cfg.vr.mode);
  if (cfg.vr.resonance_factor.enabled)
    label += ":resfac_M=" + fmt_double(cfg.vr.resonance_factor.exponent);
  return label;
}

ReportRow row_from(const std::string& label, const RunConfig& cfg, const TallyStatistics& stats) {
  ReportRow row;
  row.label = label;
  row.exponent = cfg.vr.resonance_factor.enabled ? cfg.vr.resonance_factor.exponent : -1.0;
  row.histories = stats.histories;
  row.cpu_hours = stats.cpu_hours;
  for (const auto& r : stats.regions)
    if (r.name == "global") {
      row.r_max = r.r_max;
      row.r_avg = r.r_avg;
      row.r_min = r.r_min;
      row.fom_min = r.fom_min;
      row.fom_avg = r.fom_avg;
      row.fom_max = r.fom_max;
    }
  return row;
}

// FixedSource persisted through the flux container for provenance.
void write_source_as_flux(const FixedSource& q, const Geometry2D& geom,
                          const std::string& lib_hash, const std::string& path) {
  FluxField f;
  f.values = q.density;
  f.adjoint = true;
  f.geometry_hash = geom.hash();
  f.library_hash = lib_hash;
  write_flux(f, path);
}

}  // namespace

std::string report_csv_header() {
  return "label,M,histories,cpu_hours,max_re95,avg_re95,min_re95,fom_min,fom_avg,fom_max";
}

std::string report_csv_line(const ReportRow& r) {
  std::ostringstream s;
  s << r.label << ',' << fmt_double(r.exponent) << ',' << r.histories << ','
    << fmt_double(r.cpu_hours) << ',' << fmt_double(r.r_max) << ',' << fmt_double(r.r_avg) << ','
    << fmt_double(r.r_min) << ',' << fmt_double(r.fom_min) << ',' << fmt_double(r.fom_avg) << ','
    << fmt_double(r.fom_max);
  return s.str();
}

PipelineContext prepare_shared(const RunConfig& cfg, const std::string& dir, bool force_dilute) {
  PipelineContext ctx;
  ctx.cfg = cfg;
  fs::create_directories(dir);

  try {
    ctx.coarse_res = build_library(cfg.nuclides, cfg.materials, cfg.coarse_groups, cfg.spectrum,
                                   LibraryMode::res, cfg.condense);
    ctx.coarse_res.hash = library_hash(ctx.coarse_res);
    write_library(ctx.coarse_res, dir + "/coarse_res.xslib");
    ctx.fine = build_library(cfg.nuclides, cfg.materials, cfg.fine_groups, cfg.spectrum,
                             LibraryMode::fine, cfg.condense);
    ctx.fine.hash = library_hash(ctx.fine);
    write_library(ctx.fine, dir + "/fine.xslib");
    ctx.has_dilute = force_dilute || cfg.vr.resonance_factor.enabled;
    if (ctx.has_dilute) {
      ctx.coarse_dilute = build_library(cfg.nuclides, cfg.materials, cfg.coarse_groups,
                                        cfg.spectrum, LibraryMode::dilute, cfg.condense);
      ctx.coarse_dilute.hash = library_hash(ctx.coarse_dilute);
      write_library(ctx.coarse_dilute, dir + "/coarse_dilute.xslib");
    }
  } catch (const std::exception& e) {
    stage_fail(1, "build libraries", e);
  }

  try {
    ctx.geom = build_geometry(cfg.geometry);
    write_text(dir + "/geometry.echo", geometry_echo(ctx.geom));
    const Eigen::ArrayXd chi =
        fission_spectrum_by_group(cfg.coarse_groups, cfg.source_temperature_ev);
    ctx.q_true = make_region_source(ctx.geom, "source", chi).normalized(ctx.geom);
  } catch (const std::exception& e) {
    stage_fail(1, "geometry and source", e);
  }

  try {
    ctx.phi_res = solve_forward(ctx.coarse_res, ctx.geom, ctx.q_true, cfg.solver);
    write_flux(ctx.phi_res, dir + "/forward_res.flux");
  } catch (const std::exception& e) {
    stage_fail(2, "forward solve (res)", e);
  }

  if (ctx.has_dilute) {
    try {
      ctx.phi_dilute = solve_forward(ctx.coarse_dilute, ctx.geom, ctx.q_true, cfg.solver);
      write_flux(ctx.phi_dilute, dir + "/forward_dilute.flux");
    } catch (const std::exception& e) {
      stage_fail(3, "forward solve (dilute)", e);
    }
  }
  return ctx;
}

PipelineArtifacts run_vr_and_mc(const PipelineContext& ctx, const RunConfig& cfg,
                                const std::string& dir) {
  fs::create_directories(dir);
  PipelineArtifacts art;
  art.dir = dir;

  FixedSource q_adj;
  try {
    if (cfg.vr.mode == VrMode::cadis)
      q_adj = cadis_adjoint_source(ctx.phi_res, ctx.geom, cfg.vr, cfg.cadis_flux_weighting);
    else
      q_adj = fwcadis_adjoint_source(ctx.phi_res, cfg.vr);
    if (cfg.vr.resonance_factor.enabled) {
      if (!ctx.has_dilute) throw Error("resonance factor needs the dilute forward flux");
      ResonanceFactorResult rf = resonance_factor_source(
          ctx.phi_res, ctx.phi_dilute, cfg.vr.resonance_factor.exponent, q_adj,
          cfg.vr.resonance_factor, cfg.vr.flux_floor);
      q_adj = std::move(rf.source);
      art.resfac_clipped = rf.clipped_cells;
    }
    write_source_as_flux(q_adj, ctx.geom, ctx.coarse_res.hash, dir + "/adjoint_source.flux");
  } catch (const std::exception& e) {
    stage_fail(4, "adjoint source", e);
  }

  FluxField phi_adj;
  try {
    phi_adj = solve_adjoint(ctx.coarse_res, ctx.geom, q_adj, cfg.solver);
    write_flux(phi_adj, dir + "/adjoint.flux");
  } catch (const std::exception& e) {
    stage_fail(5, "adjoint solve", e);
  }

  BiasedSource biased;
  try {
    art.importance = build_importance(phi_adj, ctx.q_true, ctx.geom);
    art.importance.mode_label = to_string(cfg.vr.mode) +
                                (cfg.vr.resonance_factor.enabled ? "+resfac" : "");
    art.importance.exponent =
        cfg.vr.resonance_factor.enabled ? cfg.vr.resonance_factor.exponent : 0.0;
    write_importance(art.importance, dir + "/importance.imp");

    art.windows = build_weight_windows(art.importance, cfg.window_ratio, cfg.window_caps,
                                       cfg.vr.flux_floor);
    art.windows.fine_to_coarse = map_fine_to_coarse(cfg.fine_groups, cfg.coarse_groups);
    write_weight_windows(art.windows, dir + "/windows.ww");

    biased = bias_source(ctx.q_true, phi_adj, art.importance.normalization, ctx.geom);
    write_biased_source(biased, dir + "/biased.src");

    std::ostringstream echo;
    echo << "mode " << art.importance.mode_label << "\n";
    echo << "M " << fmt_double(art.importance.exponent) << "\n";
    echo << "normalization " << fmt_double(art.importance.normalization) << "\n";
    echo << "resfac_clipped " << art.resfac_clipped << "\n";
    write_text(dir + "/vr.echo", echo.str());
  } catch (const std::exception& e) {
    stage_fail(6, "vr products", e);
  }

  try {
    if (art.windows.geometry_hash != ctx.geom.hash() ||
        biased.geometry_hash != ctx.geom.hash())
      throw Error("stale geometry hash between vr products and the mesh");
    McSettings mcs;
    mcs.histories = cfg.mc.histories;
    mcs.seed = cfg.mc.seed;
    mcs.workers = cfg.mc.workers;
    art.tally =
        run_histories(ctx.fine, ctx.geom, biased, &art.windows, cfg.coarse_groups, mcs);
    write_tally(art.tally, ctx.geom, dir + "/run.tally");
    write_timing_sidecar(art.tally, ctx.geom, dir + "/run.tally.timing");
  } catch (const std::exception& e) {
    stage_fail(7, "mc run", e);
  }

  try {
    art.stats = compute_statistics(art.tally, ctx.geom);
    art.row = row_from(run_label(cfg, false), cfg, art.stats);
    std::ostringstream csv;
    csv << report_csv_header() << "\n" << report_csv_line(art.row) << "\n";
    for (const auto& r : art.stats.regions) {
      if (r.name == "global") continue;
      ReportRow rr = art.row;
      rr.label += ":" + r.name;
      rr.r_max = r.r_max;
      rr.r_avg = r.r_avg;
      rr.r_min = r.r_min;
      rr.fom_min = r.fom_min;
      rr.fom_avg = r.fom_avg;
      rr.fom_max = r.fom_max;
      csv << report_csv_line(rr) << "\n";
    }
    write_text(dir + "/report.csv", csv.str());
  } catch (const std::exception& e) {
    stage_fail(8, "statistics and report", e);
  }
  return art;
}

namespace {

PipelineArtifacts run_analog(const PipelineContext& ctx, const RunConfig& cfg,
                             const std::string& dir) {
  PipelineArtifacts art;
  art.dir = dir;
  try {
    const BiasedSource src = analog_source(ctx.q_true, ctx.geom);
    write_biased_source(src, dir + "/biased.src");
    McSettings mcs;
    mcs.histories = cfg.mc.histories;
    mcs.seed = cfg.mc.seed;
    mcs.workers = cfg.mc.workers;
    art.tally = run_histories(ctx.fine, ctx.geom, src, nullptr, cfg.coarse_groups, mcs);
    write_tally(art.tally, ctx.geom, dir + "/run.tally");
    write_timing_sidecar(art.tally, ctx.geom, dir + "/run.tally.timing");
  } catch (const std::exception& e) {
    stage_fail(7, "mc run (analog)", e);
  }
  try {
    art.stats = compute_statistics(art.tally, ctx.geom);
    art.row = row_from(run_label(cfg, true), cfg, art.stats);
    std::ostringstream csv;
    csv << report_csv_header() << "\n" << report_csv_line(art.row) << "\n";
    write_text(dir + "/report.csv", csv.str());
  } catch (const std::exception& e) {
    stage_fail(8, "statistics and report", e);
  }
  return art;
}

}  // namespace

PipelineArtifacts run_pipeline(const RunConfig& base_cfg, const PipelineOverrides& ov) {
  const RunConfig cfg = apply_overrides(base_cfg, ov);
  const std::string dir = cfg.out_dir;
  fs::create_directories(dir);
  write_text(dir + "/config.echo", effective_config_echo(cfg, ov));
  if (ov.analog) {
    PipelineContext ctx = prepare_shared(cfg, dir);
    return run_analog(ctx, cfg, dir);
  }
  PipelineContext ctx = prepare_shared(cfg, dir);
  return run_vr_and_mc(ctx, cfg, dir);
}

SweepResult sweep_m(const RunConfig& base_cfg, const std::vector<double>& m_list,
                    const PipelineOverrides& ov) {
  if (m_list.empty()) throw Error("sweep needs a non-empty M list");
  for (double m : m_list)
    if (m < 0.0) throw Error("sweep M values must be >= 0");

  RunConfig cfg = apply_overrides(base_cfg, ov);
  cfg.vr.resonance_factor.enabled = true;
  SweepResult result;
  result.dir = cfg.out_dir;
  fs::create_directories(result.dir);
  write_text(result.dir + "/config.echo", effective_config_echo(cfg, ov));

  // libraries and both forward solves are shared across the sweep
  PipelineContext ctx = prepare_shared(cfg, result.dir, /*force_dilute=*/true);

  std::vector<double> sorted_m = m_list;
  std::sort(sorted_m.begin(), sorted_m.end());
  for (double m : sorted_m) {
    RunConfig mc_cfg = cfg;
    mc_cfg.vr.resonance_factor.exponent = m;
    const std::string mdir = result.dir + "/M_" + fmt_double(m);
    try {
      PipelineArtifacts art = run_vr_and_mc(ctx, mc_cfg, mdir);
      result.rows.push_back(art.row);
    } catch (const std::exception& e) {
      ReportRow failed;
      failed.label = mc_cfg.tag + ":resfac_M=" + fmt_double(m) + ":FAILED(" + e.what() + ")";
      failed.exponent = m;
      result.rows.push_back(failed);
    }
  }

  std::ostringstream csv;
  csv << report_csv_header() << "\n";
  for (const auto& r : result.rows) csv << report_csv_line(r) << "\n";
  write_text(result.dir + "/sweep_report.csv", csv.str());

  // Rank tables, best to worst per metric.
  struct Metric {
    const char* name;
    bool descending;
    double ReportRow::*field;
  };
  const Metric metrics[] = {{"max_re95", false, &ReportRow::r_max},
                            {"fom_min", true, &ReportRow::fom_min},
                            {"fom_avg", true, &ReportRow::fom_avg},
                            {"fom_max", true, &ReportRow::fom_max}};
  std::ostringstream rank;
  rank << "metric,rank,M,value\n";
  for (const auto& metric : metrics) {
    std::vector<const ReportRow*> ok;
    for (const auto& r : result.rows)
      if (r.histories > 0) ok.push_back(&r);
    std::stable_sort(ok.begin(), ok.end(), [&](const ReportRow* a, const ReportRow* b) {
      return metric.descending ? (a->*metric.field > b->*metric.field)
                               : (a->*metric.field < b->*metric.field);
    });
    for (size_t i = 0; i < ok.size(); ++i)
      rank << metric.name << ',' << (i + 1) << ',' << fmt_double(ok[i]->exponent) << ','
           << fmt_double(ok[i]->*metric.field) << "\n";
  }
  write_text(result.dir + "/rank_tables.csv", rank.str());
  return result;
}

double read_timing_cpu_hours(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open timing sidecar " + path);
  std::string line;
  if (!std::getline(in, line) || line != "ferrite tally timing 1")
    throw IoError("not a timing sidecar: " + path);
  while (std::getline(in, line)) {
    auto f = split_ws(line);
    if (f.size() >= 2 && f[0] == "cpu_hours") return parse_double(f[1]);
  }
  throw IoError("timing sidecar without cpu_hours: " + path);
}

void compare_cases(const RunConfig& cfg, const std::vector<std::string>& dirs,
                   const std::string& out_csv) {
  if (dirs.size() < 2) throw Error("compare needs at least 2 run directories");
  const Geometry2D geom = build_geometry(cfg.geometry);
  const std::string geom_hash = geom.hash();

  struct Case {
    std::string dir;
    TallySet tally;
    TallyStatistics stats;
  };
  std::vector<Case> cases;
  for (const auto& d : dirs) {
    Case c;
    c.dir = d;
    c.tally = read_tally(d + "/run.tally");
    if (c.tally.geometry_hash != geom_hash)
      throw Error("geometry hash mismatch in " + d + " (different benchmark?)");
    c.tally.cpu_hours = read_timing_cpu_hours(d + "/run.tally.timing");
    c.stats = compute_statistics(c.tally, geom);
    cases.push_back(std::move(c));
  }

  std::ostringstream csv;
  csv << report_csv_header() << "\n";
  for (const auto& c : cases) {
    ReportRow row;
    row.label = c.dir;
    row.histories = c.stats.histories;
    row.cpu_hours = c.stats.cpu_hours;
    for (const auto& r : c.stats.regions)
      if (r.name == "global") {
        row.r_max = r.r_max;
        row.r_avg = r.r_avg;
        row.r_min = r.r_min;
        row.fom_min = r.fom_min;
        row.fom_avg = r.fom_avg;
        row.fom_max = r.fom_max;
      }
    csv << report_csv_line(row) << "\n";
  }

  // centerline 95CI-RE ratio map, first case as the reference
  csv << "\ncell,x_mid,z_mid";
  for (const auto& c : cases) csv << ",re95[" << c.dir << "]";
  for (size_t i = 1; i < cases.size(); ++i) csv << ",ratio[" << cases[i].dir << "]";
  csv << "\n";
  for (int cell : geom.region("centerline")) {
    const double xm = 0.5 * (geom.x_edges()[geom.ix_of(cell)] +
                             geom.x_edges()[geom.ix_of(cell) + 1]);
    const double zm = 0.5 * (geom.z_edges()[geom.iz_of(cell)] +
                             geom.z_edges()[geom.iz_of(cell) + 1]);
    csv << cell << ',' << fmt_double(xm) << ',' << fmt_double(zm);
    for (const auto& c : cases) csv << ',' << fmt_double(c.stats.nt_re95[cell]);
    const double ref = cases[0].stats.nt_re95[cell];
    for (size_t i = 1; i < cases.size(); ++i) {
      const double v = cases[i].stats.nt_re95[cell];
      csv << ',' << fmt_double(ref > 0.0 ? v / ref : (v == ref ? 1.0 : 0.0));
    }
    csv << "\n";
  }
  write_text(out_csv, csv.str());
}

}  // namespace ferrite
