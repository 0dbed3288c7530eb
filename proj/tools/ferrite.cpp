// ferrite: hybrid deterministic / Monte Carlo variance-reduction workbench.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "ferrite/detsolver.hpp"
#include "ferrite/pipeline.hpp"
#include "ferrite/text_io.hpp"

namespace fs = std::filesystem;
using namespace ferrite;

namespace {

std::vector<double> parse_m_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(parse_double(tok));
  }
  return out;
}

void check_hash(const std::string& what, const std::string& got, const std::string& expected) {
  if (got != expected)
    throw Error(what + ": stale hash (" + got + " vs expected " + expected + ")");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hybrid SN/MC variance-reduction workbench"};
  app.require_subcommand(1);

  std::string config_path, out_path, lib_path, forward_path, forward_dilute_path;
  std::string adjoint_path, src_path, ww_path;
  std::vector<std::string> dirs;
  std::string m_list_text;
  double m_value = -1.0;
  std::int64_t histories = -1, seed = -1;
  int workers = -1;
  bool analog = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "run config file")->required();
    cmd->add_option("--out", out_path, "output path");
  };
  auto add_overrides = [&](CLI::App* cmd) {
    cmd->add_option("--M", m_value, "resonance factor exponent (enables the correction)");
    cmd->add_option("--seed", seed, "MC seed");
    cmd->add_option("--histories", histories, "MC history count");
    cmd->add_option("--workers", workers, "MC worker threads");
  };

  auto* cmd_xsgen = app.add_subcommand("xsgen", "build the multigroup libraries");
  add_common(cmd_xsgen);

  auto* cmd_fwd = app.add_subcommand("det-forward", "forward discrete-ordinates solve");
  add_common(cmd_fwd);
  cmd_fwd->add_option("--lib", lib_path, "library file")->required();

  auto* cmd_adj = app.add_subcommand("det-adjoint", "adjoint solve with the VR adjoint source");
  add_common(cmd_adj);
  cmd_adj->add_option("--lib", lib_path, "library file")->required();
  cmd_adj->add_option("--forward", forward_path, "forward flux (res library)")->required();
  cmd_adj->add_option("--forward-dilute", forward_dilute_path, "forward flux (dilute library)");
  cmd_adj->add_option("--M", m_value, "resonance factor exponent");

  auto* cmd_vr = app.add_subcommand("build-vr", "importance map, windows, biased source");
  add_common(cmd_vr);
  cmd_vr->add_option("--adjoint", adjoint_path, "adjoint flux file")->required();

  auto* cmd_mc = app.add_subcommand("mc-run", "Monte Carlo transport");
  add_common(cmd_mc);
  cmd_mc->add_option("--lib", lib_path, "fine library file")->required();
  cmd_mc->add_option("--src", src_path, "biased source file");
  cmd_mc->add_option("--ww", ww_path, "weight-window file");
  cmd_mc->add_flag("--analog", analog, "analog run from the true source, no windows");
  add_overrides(cmd_mc);

  auto* cmd_pipe = app.add_subcommand("pipeline", "full VR pipeline");
  add_common(cmd_pipe);
  add_overrides(cmd_pipe);
  cmd_pipe->add_flag("--analog", analog, "analog MC instead of the VR chain");

  auto* cmd_sweep = app.add_subcommand("sweep-m", "M-parameter sweep");
  add_common(cmd_sweep);
  cmd_sweep->add_option("--M", m_list_text, "comma-separated M values")->required();
  add_overrides(cmd_sweep);

  auto* cmd_cmp = app.add_subcommand("compare", "side-by-side report for completed runs");
  add_common(cmd_cmp);
  cmd_cmp->add_option("dirs", dirs, "run directories")->expected(-2);

  CLI11_PARSE(app, argc, argv);

  try {
    const RunConfig cfg = RunConfig::from_file(config_path);
    PipelineOverrides ov;
    if (m_value >= 0.0 && !cmd_sweep->parsed()) ov.exponent = m_value;
    if (seed >= 0) ov.seed = static_cast<std::uint64_t>(seed);
    if (histories >= 0) ov.histories = static_cast<std::uint64_t>(histories);
    if (workers > 0) ov.workers = workers;
    if (!out_path.empty()) ov.out_dir = out_path;
    ov.analog = analog;

    if (cmd_xsgen->parsed()) {
      const std::string dir = out_path.empty() ? cfg.out_dir : out_path;
      fs::create_directories(dir);
      MGLibrary res = build_library(cfg.nuclides, cfg.materials, cfg.coarse_groups, cfg.spectrum,
                                    LibraryMode::res, cfg.condense);
      write_library(res, dir + "/coarse_res.xslib");
      MGLibrary dil = build_library(cfg.nuclides, cfg.materials, cfg.coarse_groups, cfg.spectrum,
                                    LibraryMode::dilute, cfg.condense);
      write_library(dil, dir + "/coarse_dilute.xslib");
      MGLibrary fine = build_library(cfg.nuclides, cfg.materials, cfg.fine_groups, cfg.spectrum,
                                     LibraryMode::fine, cfg.condense);
      write_library(fine, dir + "/fine.xslib");
      std::cout << "wrote libraries to " << dir << "\n";
      return 0;
    }

    if (cmd_fwd->parsed()) {
      if (out_path.empty()) throw Error("det-forward needs --out");
      const MGLibrary lib = read_library(lib_path);
      const Geometry2D geom = build_geometry(cfg.geometry);
      const Eigen::ArrayXd chi =
          fission_spectrum_by_group(lib.groups, cfg.source_temperature_ev);
      const FixedSource q = make_region_source(geom, "source", chi).normalized(geom);
      const FluxField phi = solve_forward(lib, geom, q, cfg.solver);
      write_flux(phi, out_path);
      std::cout << "forward solve: " << phi.iterations << " sweeps, residual "
                << phi.final_residual << "\n";
      return 0;
    }

    if (cmd_adj->parsed()) {
      if (out_path.empty()) throw Error("det-adjoint needs --out");
      const MGLibrary lib = read_library(lib_path);
      const Geometry2D geom = build_geometry(cfg.geometry);
      const FluxField phi_res = read_flux(forward_path);
      check_hash("forward flux geometry", phi_res.geometry_hash, geom.hash());
      check_hash("forward flux library", phi_res.library_hash, lib.hash);
      RunConfig eff = cfg;
      if (m_value >= 0.0) {
        eff.vr.resonance_factor.enabled = true;
        eff.vr.resonance_factor.exponent = m_value;
      }
      FixedSource q_adj = eff.vr.mode == VrMode::cadis
                              ? cadis_adjoint_source(phi_res, geom, eff.vr,
                                                     eff.cadis_flux_weighting)
                              : fwcadis_adjoint_source(phi_res, eff.vr);
      if (eff.vr.resonance_factor.enabled) {
        if (forward_dilute_path.empty())
          throw Error("resonance factor needs --forward-dilute");
        const FluxField phi_dil = read_flux(forward_dilute_path);
        check_hash("dilute flux geometry", phi_dil.geometry_hash, geom.hash());
        q_adj = resonance_factor_source(phi_res, phi_dil, eff.vr.resonance_factor.exponent,
                                        q_adj, eff.vr.resonance_factor, eff.vr.flux_floor)
                    .source;
      }
      const FluxField phi_adj = solve_adjoint(lib, geom, q_adj, cfg.solver);
      write_flux(phi_adj, out_path);
      std::cout << "adjoint solve: " << phi_adj.iterations << " sweeps, residual "
                << phi_adj.final_residual << "\n";
      return 0;
    }

    if (cmd_vr->parsed()) {
      if (out_path.empty()) throw Error("build-vr needs --out");
      fs::create_directories(out_path);
      const Geometry2D geom = build_geometry(cfg.geometry);
      const FluxField phi_adj = read_flux(adjoint_path);
      check_hash("adjoint flux geometry", phi_adj.geometry_hash, geom.hash());
      const Eigen::ArrayXd chi =
          fission_spectrum_by_group(cfg.coarse_groups, cfg.source_temperature_ev);
      const FixedSource q = make_region_source(geom, "source", chi).normalized(geom);
      ImportanceMap imp = build_importance(phi_adj, q, geom);
      imp.mode_label = to_string(cfg.vr.mode);
      write_importance(imp, out_path + std::string("/importance.imp"));
      WeightWindowMap ww =
          build_weight_windows(imp, cfg.window_ratio, cfg.window_caps, cfg.vr.flux_floor);
      ww.fine_to_coarse = map_fine_to_coarse(cfg.fine_groups, cfg.coarse_groups);
      write_weight_windows(ww, out_path + std::string("/windows.ww"));
      const BiasedSource src = bias_source(q, phi_adj, imp.normalization, geom);
      write_biased_source(src, out_path + std::string("/biased.src"));
      std::cout << "wrote vr products to " << out_path << " (R = " << imp.normalization << ")\n";
      return 0;
    }

    if (cmd_mc->parsed()) {
      if (out_path.empty()) throw Error("mc-run needs --out");
      const MGLibrary fine = read_library(lib_path);
      const Geometry2D geom = build_geometry(cfg.geometry);
      McSettings mcs;
      mcs.histories = ov.histories.value_or(cfg.mc.histories);
      mcs.seed = ov.seed.value_or(cfg.mc.seed);
      mcs.workers = ov.workers.value_or(cfg.mc.workers);
      TallySet tally;
      if (analog) {
        const Eigen::ArrayXd chi =
            fission_spectrum_by_group(cfg.coarse_groups, cfg.source_temperature_ev);
        const FixedSource q = make_region_source(geom, "source", chi).normalized(geom);
        tally = run_histories(fine, geom, analog_source(q, geom), nullptr, cfg.coarse_groups,
                              mcs);
      } else {
        if (src_path.empty()) throw Error("mc-run needs --src (or --analog)");
        const BiasedSource src = read_biased_source(src_path);
        check_hash("biased source geometry", src.geometry_hash, geom.hash());
        if (ww_path.empty()) {
          tally = run_histories(fine, geom, src, nullptr, cfg.coarse_groups, mcs);
        } else {
          const WeightWindowMap ww = read_weight_windows(ww_path);
          check_hash("weight-window geometry", ww.geometry_hash, geom.hash());
          tally = run_histories(fine, geom, src, &ww, cfg.coarse_groups, mcs);
        }
      }
      write_tally(tally, geom, out_path);
      write_timing_sidecar(tally, geom, out_path + std::string(".timing"));
      std::cout << "mc-run: " << tally.histories << " histories, " << tally.cpu_hours
                << " cpu-h\n";
      return 0;
    }

    if (cmd_pipe->parsed()) {
      const PipelineArtifacts art = run_pipeline(cfg, ov);
      std::cout << report_csv_header() << "\n" << report_csv_line(art.row) << "\n";
      std::cout << "artifacts in " << art.dir << "\n";
      return 0;
    }

    if (cmd_sweep->parsed()) {
      const std::vector<double> ms = parse_m_list(m_list_text);
      const SweepResult sweep = sweep_m(cfg, ms, ov);
      std::cout << report_csv_header() << "\n";
      for (const auto& r : sweep.rows) std::cout << report_csv_line(r) << "\n";
      std::cout << "sweep artifacts in " << sweep.dir << "\n";
      return 0;
    }

    if (cmd_cmp->parsed()) {
      if (out_path.empty()) throw Error("compare needs --out");
      compare_cases(cfg, dirs, out_path);
      std::cout << "comparison written to " << out_path << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "ferrite: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
