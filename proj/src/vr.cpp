#include "ferrite/vr.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ferrite/hash.hpp"
#include "ferrite/text_io.hpp"

namespace ferrite {

std::string to_string(VrMode m) {
  switch (m) {
    case VrMode::cadis: return "cadis";
    case VrMode::fwcadis_cell_group: return "fwcadis_cell_group";
    case VrMode::fwcadis_cell_integrated: return "fwcadis_cell_integrated";
  }
  return "fwcadis_cell_group";
}

VrMode vr_mode_from(const std::string& s) {
  if (s == "cadis") return VrMode::cadis;
  if (s == "fwcadis_cell_group") return VrMode::fwcadis_cell_group;
  if (s == "fwcadis_cell_integrated") return VrMode::fwcadis_cell_integrated;
  throw ConfigError("unknown vr mode '" + s + "'");
}

void AdjointSourceSpec::validate() const {
  if (flux_floor <= 0.0) throw ConfigError("vr flux floor must be > 0");
  if (resonance_factor.exponent < 0.0) throw ConfigError("resonance factor M must be >= 0");
  if (!(resonance_factor.ratio_clamp_lo <= 1.0 && 1.0 <= resonance_factor.ratio_clamp_hi))
    throw ConfigError("resonance factor clamp must bracket 1");
}

FixedSource fwcadis_adjoint_source(const FluxField& phi, const AdjointSourceSpec& spec) {
  spec.validate();
  if ((phi.values == 0.0).all()) throw Error("fwcadis source from an all-zero forward flux");
  FixedSource q;
  q.density.resize(phi.n_cells(), phi.n_groups());
  if (spec.mode == VrMode::fwcadis_cell_group) {
    for (int c = 0; c < phi.n_cells(); ++c)
      for (int g = 0; g < phi.n_groups(); ++g)
        q.density(c, g) = 1.0 / std::max(phi.values(c, g), spec.flux_floor);
  } else if (spec.mode == VrMode::fwcadis_cell_integrated) {
    if (spec.response_weights.size() != phi.n_groups())
      throw ConfigError("cell_integrated mode needs per-group response weights");
    for (int c = 0; c < phi.n_cells(); ++c) {
      double weighted = 0.0;
      for (int g = 0; g < phi.n_groups(); ++g)
        weighted += spec.response_weights[g] * phi.values(c, g);
      const double inv = 1.0 / std::max(weighted, spec.flux_floor);
      for (int g = 0; g < phi.n_groups(); ++g)
        q.density(c, g) = spec.response_weights[g] * inv;
    }
  } else {
    throw ConfigError("fwcadis_adjoint_source called with CADIS mode");
  }
  return q;
}

FixedSource cadis_adjoint_source(const FluxField& phi, const Geometry2D& geom,
                                 const AdjointSourceSpec& spec, bool use_forward_flux) {
  spec.validate();
  if (spec.response_weights.size() != phi.n_groups())
    throw ConfigError("cadis mode needs per-group response weights");
  FixedSource q;
  q.density = Eigen::ArrayXXd::Zero(phi.n_cells(), phi.n_groups());
  for (int c : geom.region(spec.detector_region))
    for (int g = 0; g < phi.n_groups(); ++g)
      q.density(c, g) =
          spec.response_weights[g] * (use_forward_flux ? phi.values(c, g) : 1.0);
  if (q.is_zero()) throw Error("cadis adjoint source is zero over the detector region");
  return q;
}

ResonanceFactorResult resonance_factor_source(const FluxField& phi_res,
                                              const FluxField& phi_dilute, double exponent,
                                              const FixedSource& q_fwc,
                                              const ResonanceFactorSettings& clamp,
                                              double flux_floor) {
  if (phi_res.n_cells() != phi_dilute.n_cells() || phi_res.n_groups() != phi_dilute.n_groups() ||
      phi_res.n_cells() != q_fwc.n_cells() || phi_res.n_groups() != q_fwc.n_groups())
    throw Error("resonance_factor_source: shape mismatch");
  if (exponent < 0.0) throw Error("resonance factor exponent must be >= 0");

  ResonanceFactorResult out;
  out.source.density.resize(q_fwc.n_cells(), q_fwc.n_groups());
  for (int c = 0; c < q_fwc.n_cells(); ++c)
    for (int g = 0; g < q_fwc.n_groups(); ++g) {
      const double ratio =
          phi_res.values(c, g) / std::max(phi_dilute.values(c, g), flux_floor);
      double factor = std::pow(ratio, exponent);
      if (factor < clamp.ratio_clamp_lo) {
        factor = clamp.ratio_clamp_lo;
        ++out.clipped_cells;
      } else if (factor > clamp.ratio_clamp_hi) {
        factor = clamp.ratio_clamp_hi;
        ++out.clipped_cells;
      }
      out.source.density(c, g) = factor * q_fwc.density(c, g);
    }
  return out;
}

ImportanceMap build_importance(const FluxField& phi_adj, const FixedSource& q,
                               const Geometry2D& geom) {
  const double r = inner_product(phi_adj, q, geom);
  if (!(r > 0.0)) throw Error("importance normalization <q, phi_dag> must be > 0");
  ImportanceMap m;
  m.imp = phi_adj.values / r;
  m.normalization = r;
  m.geometry_hash = phi_adj.geometry_hash;
  m.library_hash = phi_adj.library_hash;
  return m;
}

WeightWindowMap build_weight_windows(const ImportanceMap& map, double ratio,
                                     const WindowCaps& caps, double flux_floor) {
  if (!(ratio > 1.0)) throw Error("window ratio must be > 1");
  WeightWindowMap ww;
  ww.n_cells = static_cast<int>(map.imp.rows());
  ww.n_groups = static_cast<int>(map.imp.cols());
  ww.ratio = ratio;
  ww.geometry_hash = map.geometry_hash;
  ww.importance_hash = importance_hash(map);
  ww.windows.resize(static_cast<size_t>(ww.n_cells) * ww.n_groups);
  const double half = std::sqrt(ratio);
  for (int c = 0; c < ww.n_cells; ++c)
    for (int g = 0; g < ww.n_groups; ++g) {
      WeightWindow w;
      const double phi_dag = map.imp(c, g) * map.normalization;
      if (phi_dag > flux_floor) {
        // clamp the center first so the band invariant survives the caps
        double center = map.normalization / phi_dag;
        center = std::clamp(center, caps.center_lo, caps.center_hi);
        w.center = center;
        w.lo = center / half;
        w.hi = center * half;
        w.enabled = true;
      }
      ww.windows[static_cast<size_t>(c) * ww.n_groups + g] = w;
    }
  // identity mapping until a fine structure is attached
  ww.fine_to_coarse.resize(ww.n_groups);
  for (int g = 0; g < ww.n_groups; ++g) ww.fine_to_coarse[g] = g;
  return ww;
}

namespace {

struct KahanSum {
  double acc = 0.0, comp = 0.0;
  void add(double v) {
    const double y = v - comp;
    const double t = acc + y;
    comp = (t - acc) - y;
    acc = t;
  }
};

}  // namespace

void BiasedSource::finalize() {
  cdf.resize(bins.size());
  KahanSum sum;
  for (size_t i = 0; i < bins.size(); ++i) {
    sum.add(bins[i].probability);
    cdf[i] = sum.acc;
  }
  if (bins.empty() || std::abs(sum.acc - 1.0) > 1e-12)
    throw Error("biased source probabilities do not sum to 1");
  cdf.back() = 1.0;
}

BiasedSource bias_source(const FixedSource& q, const FluxField& phi_adj, double normalization,
                         const Geometry2D& geom) {
  if (q.n_cells() != phi_adj.n_cells() || q.n_groups() != phi_adj.n_groups())
    throw Error("bias_source: shape mismatch");
  if (!(normalization > 0.0)) throw Error("bias_source: normalization must be > 0");
  const double total = q.total(geom);
  if (!(total > 0.0)) throw Error("bias_source: empty source");

  BiasedSource out;
  out.geometry_hash = phi_adj.geometry_hash;
  KahanSum r_norm;  // <q_norm, phi_dag> accumulated over the source support
  for (int c = 0; c < q.n_cells(); ++c)
    for (int g = 0; g < q.n_groups(); ++g) {
      const double mass = q.density(c, g) * geom.volumes()[c];
      if (mass <= 0.0) continue;
      const double phi_dag = phi_adj.values(c, g);
      if (!(phi_dag > 0.0))
        throw Error("bias_source: importance map does not cover the source (zero adjoint flux "
                    "in a source cell)");
      BiasedSource::Bin b;
      b.cell = c;
      b.group = g;
      b.true_mass = mass / total;
      b.probability = b.true_mass * phi_dag;  // un-normalized for now
      out.bins.push_back(b);
      r_norm.add(b.probability);
    }
  if (std::abs(normalization / total - r_norm.acc) > 1e-9 * r_norm.acc)
    throw Error("bias_source: normalization does not match <q, phi_dag> (stale inputs)");
  for (auto& b : out.bins) {
    const double phi_dag = phi_adj.values(b.cell, b.group);
    b.probability /= r_norm.acc;
    b.born_weight = r_norm.acc / phi_dag;  // R / phi_dag in source-normalized units
  }
  out.finalize();
  return out;
}

BiasedSource analog_source(const FixedSource& q, const Geometry2D& geom) {
  BiasedSource out;
  out.geometry_hash = geom.hash();
  KahanSum total;
  for (int c = 0; c < q.n_cells(); ++c)
    for (int g = 0; g < q.n_groups(); ++g) {
      const double mass = q.density(c, g) * geom.volumes()[c];
      if (mass <= 0.0) continue;
      BiasedSource::Bin b;
      b.cell = c;
      b.group = g;
      b.probability = mass;  // un-normalized for now
      b.born_weight = 1.0;
      out.bins.push_back(b);
      total.add(mass);
    }
  if (!(total.acc > 0.0)) throw Error("analog_source: empty source");
  for (auto& b : out.bins) {
    b.probability /= total.acc;
    b.true_mass = b.probability;
  }
  out.finalize();
  return out;
}

// ---------------------------------------------------------------------------
// serialization

std::string serialize_importance(const ImportanceMap& m) {
  std::ostringstream body;
  body << "geometry " << m.geometry_hash << "\n";
  body << "library " << m.library_hash << "\n";
  body << "mode " << (m.mode_label.empty() ? "unlabeled" : m.mode_label) << " M "
       << fmt_double(m.exponent) << "\n";
  body << "normalization " << fmt_double(m.normalization) << "\n";
  body << "cells " << m.imp.rows() << " groups " << m.imp.cols() << "\n";
  for (int c = 0; c < m.imp.rows(); ++c) {
    body << "imp " << c;
    for (int g = 0; g < m.imp.cols(); ++g) body << ' ' << fmt_double(m.imp(c, g));
    body << "\n";
  }
  const std::string b = body.str();
  return "ferrite importance 1\nhash " + content_hash(b) + "\n" + b;
}

ImportanceMap parse_importance(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "ferrite importance 1")
    throw IoError("not a ferrite importance file");
  if (!std::getline(in, line) || line.rfind("hash ", 0) != 0) throw IoError("missing hash");
  const std::string declared = line.substr(5);
  std::string body(std::istreambuf_iterator<char>(in), {});
  if (content_hash(body) != declared) throw IoError("importance hash mismatch");

  ImportanceMap m;
  std::istringstream bs(body);
  auto next = [&](const char* what) {
    if (!std::getline(bs, line)) throw IoError(std::string("importance truncated at ") + what);
    return split_ws(line);
  };
  m.geometry_hash = std::string(next("geometry").at(1));
  m.library_hash = std::string(next("library").at(1));
  auto fm = next("mode");
  m.mode_label = std::string(fm.at(1));
  m.exponent = parse_double(fm.at(3));
  m.normalization = parse_double(next("normalization").at(1));
  auto fc = next("cells");
  const int nc = static_cast<int>(parse_int(fc.at(1)));
  const int ng = static_cast<int>(parse_int(fc.at(3)));
  m.imp.resize(nc, ng);
  for (int c = 0; c < nc; ++c) {
    auto fr = next("imp");
    for (int g = 0; g < ng; ++g) m.imp(c, g) = parse_double(fr.at(2 + g));
  }
  return m;
}

void write_importance(const ImportanceMap& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << serialize_importance(m);
}

ImportanceMap read_importance(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string text(std::istreambuf_iterator<char>(in), {});
  return parse_importance(text);
}

std::string importance_hash(const ImportanceMap& m) {
  const std::string text = serialize_importance(m);
  const size_t pos = text.find("hash ") + 5;
  return text.substr(pos, 16);
}

std::string serialize_weight_windows(const WeightWindowMap& m) {
  std::ostringstream body;
  body << "geometry " << m.geometry_hash << "\n";
  body << "importance " << m.importance_hash << "\n";
  body << "cells " << m.n_cells << " groups " << m.n_groups << " ratio " << fmt_double(m.ratio)
       << "\n";
  body << "fine_map " << m.fine_to_coarse.size();
  for (int g : m.fine_to_coarse) body << ' ' << g;
  body << "\n";
  for (int c = 0; c < m.n_cells; ++c)
    for (int g = 0; g < m.n_groups; ++g) {
      const auto& w = m.at(c, g);
      body << "ww " << c << ' ' << g << ' ';
      if (w.enabled)
        body << fmt_double(w.lo) << ' ' << fmt_double(w.center) << ' ' << fmt_double(w.hi);
      else
        body << "disabled";
      body << "\n";
    }
  const std::string b = body.str();
  return "ferrite weight-windows 1\nhash " + content_hash(b) + "\n" + b;
}

WeightWindowMap parse_weight_windows(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "ferrite weight-windows 1")
    throw IoError("not a ferrite weight-window file");
  if (!std::getline(in, line) || line.rfind("hash ", 0) != 0) throw IoError("missing hash");
  const std::string declared = line.substr(5);
  std::string body(std::istreambuf_iterator<char>(in), {});
  if (content_hash(body) != declared) throw IoError("weight-window hash mismatch");

  WeightWindowMap m;
  std::istringstream bs(body);
  auto next = [&](const char* what) {
    if (!std::getline(bs, line)) throw IoError(std::string("ww file truncated at ") + what);
    return split_ws(line);
  };
  m.geometry_hash = std::string(next("geometry").at(1));
  m.importance_hash = std::string(next("importance").at(1));
  auto fc = next("cells");
  m.n_cells = static_cast<int>(parse_int(fc.at(1)));
  m.n_groups = static_cast<int>(parse_int(fc.at(3)));
  m.ratio = parse_double(fc.at(5));
  auto ff = next("fine_map");
  const int nf = static_cast<int>(parse_int(ff.at(1)));
  m.fine_to_coarse.resize(nf);
  for (int g = 0; g < nf; ++g) m.fine_to_coarse[g] = static_cast<int>(parse_int(ff.at(2 + g)));
  m.windows.resize(static_cast<size_t>(m.n_cells) * m.n_groups);
  for (int c = 0; c < m.n_cells; ++c)
    for (int g = 0; g < m.n_groups; ++g) {
      auto fr = next("ww");
      WeightWindow w;
      if (std::string(fr.at(3)) != "disabled") {
        w.lo = parse_double(fr.at(3));
        w.center = parse_double(fr.at(4));
        w.hi = parse_double(fr.at(5));
        w.enabled = true;
      }
      m.windows[static_cast<size_t>(c) * m.n_groups + g] = w;
    }
  return m;
}

void write_weight_windows(const WeightWindowMap& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << serialize_weight_windows(m);
}

WeightWindowMap read_weight_windows(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string text(std::istreambuf_iterator<char>(in), {});
  return parse_weight_windows(text);
}

std::string weight_window_hash(const WeightWindowMap& m) {
  const std::string text = serialize_weight_windows(m);
  const size_t pos = text.find("hash ") + 5;
  return text.substr(pos, 16);
}

std::string serialize_biased_source(const BiasedSource& s) {
  std::ostringstream body;
  body << "geometry " << s.geometry_hash << "\n";
  body << "bins " << s.bins.size() << "\n";
  for (size_t i = 0; i < s.bins.size(); ++i) {
    const auto& b = s.bins[i];
    body << "bin " << b.cell << ' ' << b.group << ' ' << fmt_double(b.probability) << ' '
         << fmt_double(b.born_weight) << ' ' << fmt_double(b.true_mass) << ' '
         << fmt_double(s.cdf[i]) << "\n";
  }
  const std::string b = body.str();
  return "ferrite biased-source 1\nhash " + content_hash(b) + "\n" + b;
}

BiasedSource parse_biased_source(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "ferrite biased-source 1")
    throw IoError("not a ferrite biased-source file");
  if (!std::getline(in, line) || line.rfind("hash ", 0) != 0) throw IoError("missing hash");
  const std::string declared = line.substr(5);
  std::string body(std::istreambuf_iterator<char>(in), {});
  if (content_hash(body) != declared) throw IoError("biased-source hash mismatch");

  BiasedSource s;
  std::istringstream bs(body);
  auto next = [&](const char* what) {
    if (!std::getline(bs, line)) throw IoError(std::string("source file truncated at ") + what);
    return split_ws(line);
  };
  s.geometry_hash = std::string(next("geometry").at(1));
  const int n = static_cast<int>(parse_int(next("bins").at(1)));
  s.bins.resize(n);
  s.cdf.resize(n);
  for (int i = 0; i < n; ++i) {
    auto fr = next("bin");
    s.bins[i].cell = static_cast<int>(parse_int(fr.at(1)));
    s.bins[i].group = static_cast<int>(parse_int(fr.at(2)));
    s.bins[i].probability = parse_double(fr.at(3));
    s.bins[i].born_weight = parse_double(fr.at(4));
    s.bins[i].true_mass = parse_double(fr.at(5));
    s.cdf[i] = parse_double(fr.at(6));
  }
  return s;
}

void write_biased_source(const BiasedSource& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << serialize_biased_source(s);
}

BiasedSource read_biased_source(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string text(std::istreambuf_iterator<char>(in), {});
  return parse_biased_source(text);
}

}  // namespace ferrite
