#include "ferrite/field.hpp"

#include <fstream>
#include <sstream>

#include "ferrite/hash.hpp"
#include "ferrite/text_io.hpp"

namespace ferrite {

void FixedSource::validate() const {
  if (!density.isFinite().all()) throw Error("source contains non-finite entries");
  if ((density < 0.0).any()) throw Error("source contains negative entries");
}

bool FixedSource::is_zero() const { return (density == 0.0).all(); }

double FixedSource::total(const Geometry2D& geom) const {
  double acc = 0.0;
  for (int c = 0; c < n_cells(); ++c)
    for (int g = 0; g < n_groups(); ++g) acc += density(c, g) * geom.volumes()[c];
  return acc;
}

FixedSource FixedSource::normalized(const Geometry2D& geom) const {
  const double t = total(geom);
  if (t <= 0.0) throw Error("cannot normalize a zero source");
  FixedSource out;
  out.density = density / t;
  return out;
}

FixedSource make_region_source(const Geometry2D& geom, const std::string& region,
                               const Eigen::ArrayXd& spectrum_by_group) {
  FixedSource q;
  q.density = Eigen::ArrayXXd::Zero(geom.n_cells(), spectrum_by_group.size());
  for (int c : geom.region(region))
    for (int g = 0; g < spectrum_by_group.size(); ++g) q.density(c, g) = spectrum_by_group[g];
  q.validate();
  return q;
}

double inner_product(const Eigen::ArrayXXd& a, const Eigen::ArrayXXd& b,
                     const Eigen::ArrayXd& volumes) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != volumes.size())
    throw Error("inner_product: shape mismatch");
  double acc = 0.0;
  for (int c = 0; c < a.rows(); ++c) {
    const double v = volumes[c];
    for (int g = 0; g < a.cols(); ++g) acc += a(c, g) * b(c, g) * v;
  }
  return acc;
}

double inner_product(const FluxField& a, const FixedSource& b, const Geometry2D& geom) {
  return inner_product(a.values, b.density, geom.volumes());
}

double response(const FluxField& flux, const Eigen::ArrayXd& group_weights,
                const std::vector<int>& region, const Geometry2D& geom) {
  if (region.empty()) throw Error("response over an empty region");
  if (group_weights.size() != flux.n_groups()) throw Error("response: weight count mismatch");
  double acc = 0.0;
  for (int c : region) {
    const double v = geom.volumes()[c];
    for (int g = 0; g < flux.n_groups(); ++g) acc += group_weights[g] * flux.values(c, g) * v;
  }
  return acc;
}

std::string serialize_flux(const FluxField& f) {
  std::ostringstream body;
  body << "tag " << (f.adjoint ? "adjoint" : "forward") << "\n";
  body << "geometry " << f.geometry_hash << "\n";
  body << "library " << f.library_hash << "\n";
  body << "cells " << f.n_cells() << " groups " << f.n_groups() << "\n";
  body << "iterations " << f.iterations << " residual " << fmt_double(f.final_residual) << "\n";
  for (int c = 0; c < f.n_cells(); ++c) {
    body << "phi " << c;
    for (int g = 0; g < f.n_groups(); ++g) body << ' ' << fmt_double(f.values(c, g));
    body << "\n";
  }
  const std::string b = body.str();
  return "ferrite flux 1\nhash " + content_hash(b) + "\n" + b;
}

FluxField parse_flux(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "ferrite flux 1") throw IoError("not a ferrite flux file");
  if (!std::getline(in, line) || line.rfind("hash ", 0) != 0) throw IoError("missing flux hash");
  const std::string declared = line.substr(5);
  std::string body(std::istreambuf_iterator<char>(in), {});
  if (content_hash(body) != declared) throw IoError("flux hash mismatch (stale or corrupt)");

  FluxField f;
  std::istringstream bs(body);
  auto next = [&](const char* what) {
    if (!std::getline(bs, line)) throw IoError(std::string("flux file truncated before ") + what);
    return split_ws(line);
  };
  f.adjoint = std::string(next("tag").at(1)) == "adjoint";
  f.geometry_hash = std::string(next("geometry").at(1));
  f.library_hash = std::string(next("library").at(1));
  auto fc = next("cells");
  const int nc = static_cast<int>(parse_int(fc.at(1)));
  const int ng = static_cast<int>(parse_int(fc.at(3)));
  auto fi = next("iterations");
  f.iterations = static_cast<int>(parse_int(fi.at(1)));
  f.final_residual = parse_double(fi.at(3));
  f.values.resize(nc, ng);
  for (int c = 0; c < nc; ++c) {
    auto fr = next("phi");
    if (parse_int(fr.at(1)) != c) throw IoError("flux records out of order");
    for (int g = 0; g < ng; ++g) f.values(c, g) = parse_double(fr.at(2 + g));
  }
  return f;
}

void write_flux(const FluxField& f, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << serialize_flux(f);
}

FluxField read_flux(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string text(std::istreambuf_iterator<char>(in), {});
  return parse_flux(text);
}

std::string flux_hash(const FluxField& f) {
  const std::string text = serialize_flux(f);
  const size_t pos = text.find("hash ") + 5;
  return text.substr(pos, 16);
}

}  // namespace ferrite
