#include "ferrite/mc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>
#include <thread>

#include "ferrite/hash.hpp"
#include "ferrite/text_io.hpp"

namespace ferrite {

void TallySet::merge(const TallySet& other) {
  if (other.n_cells != n_cells || other.n_groups != n_groups)
    throw Error("tally merge: shape mismatch");
  sum += other.sum;
  sum_sq += other.sum_sq;
  nt_sum += other.nt_sum;
  nt_sum_sq += other.nt_sum_sq;
  histories += other.histories;
  cpu_hours += other.cpu_hours;
}

WwAction weight_window_check(double weight, const WeightWindow& window) {
  WwAction a;
  if (!window.enabled || (weight >= window.lo && weight <= window.hi)) return a;
  if (weight > window.hi) {
    a.kind = WwAction::split;
    a.split_count =
        std::min<long>(static_cast<long>(std::ceil(weight / window.center)), ww_split_cap);
    a.child_weight = weight / a.split_count;
  } else {
    a.kind = WwAction::roulette;
    a.survival_probability = weight / window.center;
    a.survivor_weight = window.center;
  }
  return a;
}

int sample_scatter(const MaterialXs& material, int group, RngStream& rng) {
  const int ng = static_cast<int>(material.sigma_t.size());
  double row_sum = 0.0;
  for (int gp = 0; gp < ng; ++gp) row_sum += material.transfer(group, gp);
  if (!(row_sum > 0.0)) throw Error("sample_scatter: zero scattering row (should have absorbed)");
  const double target = rng.next_double() * row_sum;
  double acc = 0.0;
  for (int gp = 0; gp < ng; ++gp) {
    acc += material.transfer(group, gp);
    if (target < acc) return gp;
  }
  return ng - 1;
}

namespace {

double thread_cpu_seconds() {
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return ts.tv_sec + 1e-9 * ts.tv_nsec;
}

struct McMaterial {
  Eigen::ArrayXd sigma_t;
  Eigen::ArrayXd p_abs;
  std::vector<std::vector<double>> row_cdf;  // per group, over destinations [g .. ng-1]
};

McMaterial prepare_material(const MaterialXs& m) {
  const int ng = static_cast<int>(m.sigma_t.size());
  McMaterial out;
  out.sigma_t = m.sigma_t;
  out.p_abs.resize(ng);
  out.row_cdf.resize(ng);
  for (int g = 0; g < ng; ++g) {
    if (!(m.sigma_t[g] > 0.0)) throw Error("mc: material " + m.id + " has nonpositive total");
    double row_sum = 0.0;
    for (int gp = g; gp < ng; ++gp) row_sum += m.transfer(g, gp);
    if (row_sum > 0.0) {
      out.p_abs[g] = m.sigma_a[g] / m.sigma_t[g];
      auto& cdf = out.row_cdf[g];
      cdf.resize(ng - g);
      double acc = 0.0;
      for (int gp = g; gp < ng; ++gp) {
        acc += m.transfer(g, gp) / row_sum;
        cdf[gp - g] = acc;
      }
      cdf.back() = 1.0;
    } else {
      out.p_abs[g] = 1.0;  // nothing to scatter into: force capture
    }
  }
  return out;
}

struct TransportState {
  Particle p;
  int ix = 0, iz = 0;
};

struct HistoryBuffer {
  std::vector<double> score;  // cell * (gc + 1); last column = nonthermal sum
  std::vector<int> touched;
  int stride = 0;

  void init(int n_cells, int gc) {
    stride = gc + 1;
    score.assign(static_cast<size_t>(n_cells) * stride, 0.0);
    touched.clear();
  }
  void add(int cell, int col, double v) {
    const size_t idx = static_cast<size_t>(cell) * stride + col;
    if (score[idx] == 0.0 && v != 0.0) touched.push_back(static_cast<int>(idx));
    score[idx] += v;
  }
};

struct Engine {
  const Geometry2D& geom;
  const BiasedSource& src;
  const WeightWindowMap* ww;
  const std::vector<McMaterial>& materials;
  const std::vector<int>& mat_of_cell;   // cell -> materials index
  const std::vector<int>& fine_to_coarse;
  int fine_thermal = 0;
  int gc = 0;  // coarse group count
  std::uint64_t seed = 0;

  void sample_isotropic(RngStream& rng, Particle& p) const {
    const double cz = 2.0 * rng.next_double() - 1.0;
    const double phi = 2.0 * M_PI * rng.next_double();
    const double s = std::sqrt(std::max(0.0, 1.0 - cz * cz));
    p.ux = s * std::cos(phi);
    p.uy = s * std::sin(phi);
    p.uz = cz;
  }

  // Applies the window at the particle's current cell; returns false when the
  // particle was rouletted away. Split siblings go on the bank.
  bool apply_window(TransportState& t, std::vector<TransportState>& bank, RngStream& rng) const {
    if (!ww) return true;
    const int cell = t.iz * geom.nx() + t.ix;
    const WeightWindow& win = ww->at_fine(cell, t.p.group);
    const WwAction a = weight_window_check(t.p.weight, win);
    switch (a.kind) {
      case WwAction::pass:
        return true;
      case WwAction::split: {
        t.p.weight = a.child_weight;
        for (int i = 1; i < a.split_count; ++i) bank.push_back(t);
        return true;
      }
      case WwAction::roulette: {
        if (rng.next_double() < a.survival_probability) {
          t.p.weight = a.survivor_weight;
          return true;
        }
        return false;
      }
    }
    return true;
  }

  void run_history(std::uint64_t h, HistoryBuffer& buf,
                   std::vector<TransportState>& bank) const {
    RngStream rng(seed, h);

    // source sampling
    const double u = rng.next_double();
    const size_t bin_idx =
        std::upper_bound(src.cdf.begin(), src.cdf.end(), u) - src.cdf.begin();
    const auto& bin = src.bins[std::min(bin_idx, src.bins.size() - 1)];

    TransportState t;
    t.ix = geom.ix_of(bin.cell);
    t.iz = geom.iz_of(bin.cell);
    t.p.x = geom.x_edges()[t.ix] + rng.next_double() * geom.dx(t.ix);
    t.p.z = geom.z_edges()[t.iz] + rng.next_double() * geom.dz(t.iz);
    sample_isotropic(rng, t.p);
    t.p.group = bin.group;
    t.p.weight = bin.born_weight;

    bank.clear();
    if (apply_window(t, bank, rng)) bank.push_back(t);  // birth check

    while (!bank.empty()) {
      TransportState cur = bank.back();
      bank.pop_back();
      transport(cur, bank, rng, buf);
    }
  }

  void transport(TransportState& t, std::vector<TransportState>& bank, RngStream& rng,
                 HistoryBuffer& buf) const {
    const auto& xe = geom.x_edges();
    const auto& ze = geom.z_edges();
    const int nx = geom.nx(), nz = geom.nz();
    constexpr double tiny = 1e-12;
    constexpr double huge_d = 1e30;

    while (true) {
      const int cell = t.iz * nx + t.ix;
      const McMaterial& mat = materials[mat_of_cell[cell]];
      const int g = t.p.group;
      const double sig_t = mat.sigma_t[g];
      const double d_coll = -std::log(rng.next_open_double()) / sig_t;

      double d_bx = huge_d, d_bz = huge_d;
      int step_x = 0, step_z = 0;
      if (t.p.ux > tiny) {
        d_bx = (xe[t.ix + 1] - t.p.x) / t.p.ux;
        step_x = 1;
      } else if (t.p.ux < -tiny) {
        d_bx = (xe[t.ix] - t.p.x) / t.p.ux;
        step_x = -1;
      }
      if (t.p.uz > tiny) {
        d_bz = (ze[t.iz + 1] - t.p.z) / t.p.uz;
        step_z = 1;
      } else if (t.p.uz < -tiny) {
        d_bz = (ze[t.iz] - t.p.z) / t.p.uz;
        step_z = -1;
      }
      d_bx = std::max(d_bx, 0.0);
      d_bz = std::max(d_bz, 0.0);
      const double d_bound = std::min(d_bx, d_bz);
      const double d = std::min(d_coll, d_bound);

      // track-length score, collapsed to the coarse structure
      const int cg = fine_to_coarse[g];
      buf.add(cell, cg, d * t.p.weight);
      if (g != fine_thermal) buf.add(cell, gc, d * t.p.weight);

      if (d_coll < d_bound) {
        t.p.x += d_coll * t.p.ux;
        t.p.z += d_coll * t.p.uz;
        if (rng.next_double() < mat.p_abs[g]) return;  // analog capture
        const auto& cdf = mat.row_cdf[g];
        const double us = rng.next_double();
        const size_t k = std::upper_bound(cdf.begin(), cdf.end(), us) - cdf.begin();
        t.p.group = g + static_cast<int>(std::min(k, cdf.size() - 1));
        sample_isotropic(rng, t.p);
        if (!apply_window(t, bank, rng)) return;  // post-collision check
      } else if (d_bx <= d_bz) {
        t.p.z += d_bx * t.p.uz;
        if (step_x > 0) {
          t.p.x = xe[t.ix + 1];
          if (t.ix + 1 >= nx) {
            if (geom.bc(side_xhi) == Bc::vacuum) return;
            t.p.ux = -t.p.ux;
          } else {
            ++t.ix;
            if (!apply_window(t, bank, rng)) return;  // cell-entry check
          }
        } else {
          t.p.x = xe[t.ix];
          if (t.ix == 0) {
            if (geom.bc(side_xlo) == Bc::vacuum) return;
            t.p.ux = -t.p.ux;
          } else {
            --t.ix;
            if (!apply_window(t, bank, rng)) return;
          }
        }
      } else {
        t.p.x += d_bz * t.p.ux;
        if (step_z > 0) {
          t.p.z = ze[t.iz + 1];
          if (t.iz + 1 >= nz) {
            if (geom.bc(side_zhi) == Bc::vacuum) return;
            t.p.uz = -t.p.uz;
          } else {
            ++t.iz;
            if (!apply_window(t, bank, rng)) return;
          }
        } else {
          t.p.z = ze[t.iz];
          if (t.iz == 0) {
            if (geom.bc(side_zlo) == Bc::vacuum) return;
            t.p.uz = -t.p.uz;
          } else {
            --t.iz;
            if (!apply_window(t, bank, rng)) return;
          }
        }
      }
    }
  }
};

}  // namespace

TallySet run_histories(const MGLibrary& fine_lib, const Geometry2D& geom, const BiasedSource& src,
                       const WeightWindowMap* ww, const EnergyGroupStructure& coarse,
                       const McSettings& settings) {
  if (settings.histories == 0) throw Error("mc: history count must be > 0");
  if (src.bins.empty()) throw Error("mc: empty source");
  const int gc = coarse.n_groups();
  const std::vector<int> fine_to_coarse = map_fine_to_coarse(fine_lib.groups, coarse);
  if (ww) {
    if (ww->n_groups != gc) throw Error("mc: weight-window group count mismatch");
    if (ww->fine_to_coarse != fine_to_coarse)
      throw Error("mc: weight-window fine-group mapping mismatch");
    for (const auto& b : src.bins)
      if (!ww->at_fine(b.cell, b.group).enabled)
        throw Error("mc: source cell without an enabled weight window");
  }

  std::vector<McMaterial> materials;
  std::vector<int> name_to_mat(geom.material_names().size());
  for (size_t i = 0; i < geom.material_names().size(); ++i) {
    name_to_mat[i] = static_cast<int>(materials.size());
    materials.push_back(prepare_material(fine_lib.material(geom.material_names()[i])));
  }
  std::vector<int> mat_of_cell(geom.n_cells());
  for (int c = 0; c < geom.n_cells(); ++c) mat_of_cell[c] = name_to_mat[geom.material_at(c)];

  Engine engine{geom,        src,
                ww,          materials,
                mat_of_cell, fine_to_coarse,
                fine_lib.groups.thermal_index(),
                gc,          settings.seed};

  auto make_empty = [&] {
    TallySet t;
    t.n_cells = geom.n_cells();
    t.n_groups = gc;
    t.sum = Eigen::ArrayXXd::Zero(t.n_cells, gc);
    t.sum_sq = Eigen::ArrayXXd::Zero(t.n_cells, gc);
    t.nt_sum = Eigen::ArrayXd::Zero(t.n_cells);
    t.nt_sum_sq = Eigen::ArrayXd::Zero(t.n_cells);
    t.seed = settings.seed;
    t.geometry_hash = geom.hash();
    t.library_hash = fine_lib.hash.empty() ? library_hash(fine_lib) : fine_lib.hash;
    t.ww_hash = ww ? weight_window_hash(*ww) : std::string("none");
    return t;
  };

  const int n_stripes = McSettings::stripes;
  std::vector<TallySet> stripe_tallies(n_stripes);
  for (auto& t : stripe_tallies) t = make_empty();

  std::atomic<int> next_stripe{0};
  auto worker = [&]() {
    HistoryBuffer buf;
    std::vector<TransportState> bank;
    int s;
    while ((s = next_stripe.fetch_add(1)) < n_stripes) {
      const double t0 = thread_cpu_seconds();
      TallySet& tally = stripe_tallies[s];
      const std::uint64_t h0 = settings.histories * s / n_stripes;
      const std::uint64_t h1 = settings.histories * (s + 1) / n_stripes;
      for (std::uint64_t h = h0; h < h1; ++h) {
        buf.init(geom.n_cells(), gc);
        engine.run_history(h, buf, bank);
        for (int idx : buf.touched) {
          const double v = buf.score[idx];
          const int cell = idx / (gc + 1);
          const int col = idx % (gc + 1);
          if (col < gc) {
            tally.sum(cell, col) += v;
            tally.sum_sq(cell, col) += v * v;
          } else {
            tally.nt_sum[cell] += v;
            tally.nt_sum_sq[cell] += v * v;
          }
        }
      }
      tally.histories += h1 - h0;
      tally.cpu_hours += (thread_cpu_seconds() - t0) / 3600.0;
    }
  };

  const int n_threads = std::max(1, std::min(settings.workers, n_stripes));
  std::vector<std::thread> threads;
  threads.reserve(n_threads);
  for (int i = 0; i < n_threads; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();

  TallySet total = make_empty();
  for (const auto& s : stripe_tallies) total.merge(s);
  if (!total.sum.isFinite().all() || !total.sum_sq.isFinite().all())
    throw Error("mc: non-finite tally scores");
  return total;
}

double figure_of_merit(double cpu_hours, double re95) {
  if (re95 <= 0.0 || cpu_hours <= 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / (cpu_hours * re95 * re95);
}

RegionSummary summarize_region(const std::string& name, const Eigen::ArrayXd& nt_mean,
                               const Eigen::ArrayXd& nt_re95, const std::vector<int>& cells,
                               double cpu_hours) {
  RegionSummary r;
  r.name = name;
  double sum_re = 0.0;
  r.r_min = std::numeric_limits<double>::infinity();
  for (int c : cells) {
    if (!(nt_mean[c] > 0.0)) continue;
    ++r.cells;
    const double re = nt_re95[c];
    r.r_max = std::max(r.r_max, re);
    r.r_min = std::min(r.r_min, re);
    sum_re += re;
  }
  if (r.cells == 0) {
    r.r_min = 0.0;
    return r;
  }
  r.r_avg = sum_re / r.cells;
  r.fom_min = figure_of_merit(cpu_hours, r.r_max);
  r.fom_avg = figure_of_merit(cpu_hours, r.r_avg);
  r.fom_max = figure_of_merit(cpu_hours, r.r_min);
  return r;
}

TallyStatistics compute_statistics(const TallySet& tally, const Geometry2D& geom) {
  if (tally.histories < 2) throw Error("statistics need at least 2 histories");
  const double n = static_cast<double>(tally.histories);
  TallyStatistics s;
  s.cpu_hours = tally.cpu_hours;
  s.histories = tally.histories;

  auto relative_error = [&](double sum, double sum_sq, double mean) {
    if (!(mean > 0.0)) return 0.0;  // flagged via zero_mean_cells
    const double var_mean = std::max(0.0, (sum_sq / n - mean * mean) / (n - 1.0));
    return std::sqrt(var_mean) / mean;
  };

  s.mean = tally.sum / n;
  s.re.resize(tally.n_cells, tally.n_groups);
  for (int c = 0; c < tally.n_cells; ++c)
    for (int g = 0; g < tally.n_groups; ++g) {
      s.re(c, g) = relative_error(tally.sum(c, g), tally.sum_sq(c, g), s.mean(c, g));
      if (!(s.mean(c, g) > 0.0)) ++s.zero_mean_cells;
    }
  s.re95 = 1.96 * s.re;

  s.nt_mean = tally.nt_sum / n;
  s.nt_re95.resize(tally.n_cells);
  for (int c = 0; c < tally.n_cells; ++c)
    s.nt_re95[c] =
        1.96 * relative_error(tally.nt_sum[c], tally.nt_sum_sq[c], s.nt_mean[c]);

  std::vector<int> all(tally.n_cells);
  for (int c = 0; c < tally.n_cells; ++c) all[c] = c;
  s.regions.push_back(summarize_region("global", s.nt_mean, s.nt_re95, all, tally.cpu_hours));
  for (const auto& [name, cells] : geom.regions())
    s.regions.push_back(summarize_region(name, s.nt_mean, s.nt_re95, cells, tally.cpu_hours));
  return s;
}

std::string serialize_tally(const TallySet& t, const Geometry2D& geom) {
  std::ostringstream body;
  body << "seed " << t.seed << " histories " << t.histories << "\n";
  body << "geometry " << t.geometry_hash << "\n";
  body << "library " << t.library_hash << "\n";
  body << "ww " << t.ww_hash << "\n";
  body << "cells " << t.n_cells << " groups " << t.n_groups << "\n";

  TallyStatistics s;
  const bool with_stats = t.histories >= 2;
  if (with_stats) s = compute_statistics(t, geom);

  for (int c = 0; c < t.n_cells; ++c)
    for (int g = 0; g < t.n_groups; ++g) {
      if (t.sum(c, g) == 0.0) continue;
      body << "cg " << c << ' ' << g << ' ' << fmt_double(t.sum(c, g)) << ' '
           << fmt_double(t.sum_sq(c, g));
      if (with_stats)
        body << ' ' << fmt_double(s.mean(c, g)) << ' ' << fmt_double(s.re(c, g)) << ' '
             << fmt_double(s.re95(c, g));
      body << "\n";
    }
  for (int c = 0; c < t.n_cells; ++c) {
    if (t.nt_sum[c] == 0.0) continue;
    body << "nt " << c << ' ' << fmt_double(t.nt_sum[c]) << ' ' << fmt_double(t.nt_sum_sq[c]);
    if (with_stats)
      body << ' ' << fmt_double(s.nt_mean[c]) << ' ' << fmt_double(s.nt_re95[c]);
    body << "\n";
  }
  if (with_stats)
    for (const auto& r : s.regions)
      body << "region " << r.name << " cells " << r.cells << " r_max " << fmt_double(r.r_max)
           << " r_avg " << fmt_double(r.r_avg) << " r_min " << fmt_double(r.r_min) << "\n";
  const std::string b = body.str();
  return "ferrite tally 1\nhash " + content_hash(b) + "\n" + b;
}

TallySet parse_tally(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "ferrite tally 1")
    throw IoError("not a ferrite tally file");
  if (!std::getline(in, line) || line.rfind("hash ", 0) != 0) throw IoError("missing hash");
  const std::string declared = line.substr(5);
  std::string body(std::istreambuf_iterator<char>(in), {});
  if (content_hash(body) != declared) throw IoError("tally hash mismatch");

  TallySet t;
  std::istringstream bs(body);
  auto next = [&](const char* what) {
    if (!std::getline(bs, line)) throw IoError(std::string("tally truncated at ") + what);
    return split_ws(line);
  };
  auto f0 = next("seed");
  t.seed = static_cast<std::uint64_t>(parse_int(f0.at(1)));
  t.histories = static_cast<std::uint64_t>(parse_int(f0.at(3)));
  t.geometry_hash = std::string(next("geometry").at(1));
  t.library_hash = std::string(next("library").at(1));
  t.ww_hash = std::string(next("ww").at(1));
  auto fc = next("cells");
  t.n_cells = static_cast<int>(parse_int(fc.at(1)));
  t.n_groups = static_cast<int>(parse_int(fc.at(3)));
  t.sum = Eigen::ArrayXXd::Zero(t.n_cells, t.n_groups);
  t.sum_sq = Eigen::ArrayXXd::Zero(t.n_cells, t.n_groups);
  t.nt_sum = Eigen::ArrayXd::Zero(t.n_cells);
  t.nt_sum_sq = Eigen::ArrayXd::Zero(t.n_cells);
  while (std::getline(bs, line)) {
    auto f = split_ws(line);
    if (f.empty()) continue;
    if (f[0] == "cg") {
      const int c = static_cast<int>(parse_int(f.at(1)));
      const int g = static_cast<int>(parse_int(f.at(2)));
      t.sum(c, g) = parse_double(f.at(3));
      t.sum_sq(c, g) = parse_double(f.at(4));
    } else if (f[0] == "nt") {
      const int c = static_cast<int>(parse_int(f.at(1)));
      t.nt_sum[c] = parse_double(f.at(2));
      t.nt_sum_sq[c] = parse_double(f.at(3));
    } else if (f[0] == "region") {
      // derived; recomputed on write
    } else {
      throw IoError("unknown tally record '" + std::string(f[0]) + "'");
    }
  }
  return t;
}

void write_tally(const TallySet& t, const Geometry2D& geom, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << serialize_tally(t, geom);
}

TallySet read_tally(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string text(std::istreambuf_iterator<char>(in), {});
  return parse_tally(text);
}

std::string tally_hash(const TallySet& t, const Geometry2D& geom) {
  const std::string text = serialize_tally(t, geom);
  const size_t pos = text.find("hash ") + 5;
  return text.substr(pos, 16);
}

void write_timing_sidecar(const TallySet& t, const Geometry2D& geom, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "ferrite tally timing 1\n";
  out << "cpu_hours " << fmt_double(t.cpu_hours) << "\n";
  if (t.histories >= 2) {
    const TallyStatistics s = compute_statistics(t, geom);
    for (const auto& r : s.regions)
      out << "region " << r.name << " fom_min " << fmt_double(r.fom_min) << " fom_avg "
          << fmt_double(r.fom_avg) << " fom_max " << fmt_double(r.fom_max) << "\n";
  }
}

}  // namespace ferrite
