#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ferrite/field.hpp"
#include "ferrite/geometry.hpp"
#include "ferrite/rng.hpp"
#include "ferrite/vr.hpp"
#include "ferrite/xslib.hpp"

namespace ferrite {

struct Particle {
  double x = 0.0, z = 0.0;
  double ux = 0.0, uy = 0.0, uz = 1.0;  // full 3-D unit vector
  int group = 0;                        // fine group
  double weight = 1.0;
};

// Per-cell x coarse-group history-score accumulators plus a per-cell
// nonthermal-sum column that region statistics run on.
struct TallySet {
  int n_cells = 0;
  int n_groups = 0;  // coarse groups
  Eigen::ArrayXXd sum, sum_sq;          // cell x coarse group
  Eigen::ArrayXd nt_sum, nt_sum_sq;     // per-cell nonthermal score
  std::uint64_t histories = 0;
  double cpu_hours = 0.0;               // measured MC phase only; not serialized
  std::uint64_t seed = 0;
  std::string geometry_hash, library_hash, ww_hash;

  void merge(const TallySet& other);  // sums accumulators, adds histories
};

struct WwAction {
  enum Kind { pass, split, roulette } kind = pass;
  int split_count = 1;
  double child_weight = 0.0;
  double survival_probability = 1.0;
  double survivor_weight = 0.0;
};

constexpr int ww_split_cap = 1000;

// Pure decision: what a weight w does against a window. Expected post-action
// weight equals w for both branches.
WwAction weight_window_check(double weight, const WeightWindow& window);

// Samples an outgoing fine group from a material's transfer row.
int sample_scatter(const MaterialXs& material, int group, RngStream& rng);

struct McSettings {
  std::uint64_t histories = 0;
  std::uint64_t seed = 1;
  int workers = 1;
  // Fixed stripe count; summation order (and thus the result bits) depends on
  // it but never on the worker count.
  static constexpr int stripes = 16;
};

// Fine-group analog-capture Monte Carlo with track-length tallies collapsed
// onto the coarse structure; weight windows applied at cell entry and after
// collisions when present.
TallySet run_histories(const MGLibrary& fine_lib, const Geometry2D& geom, const BiasedSource& src,
                       const WeightWindowMap* ww, const EnergyGroupStructure& coarse,
                       const McSettings& settings);

struct RegionSummary {
  std::string name;
  int cells = 0;          // cells with a nonzero mean entering the statistics
  double r_max = 0.0;     // max 95CI RE over the region
  double r_avg = 0.0;     // mean 95CI RE
  double r_min = 0.0;
  double fom_min = 0.0;   // 1/(t r_max^2)
  double fom_avg = 0.0;   // 1/(t r_avg^2)
  double fom_max = 0.0;   // 1/(t r_min^2)
};

struct TallyStatistics {
  Eigen::ArrayXXd mean, re, re95;   // cell x coarse group
  Eigen::ArrayXd nt_mean, nt_re95;  // per-cell nonthermal column
  std::vector<RegionSummary> regions;
  double cpu_hours = 0.0;
  std::uint64_t histories = 0;
  long zero_mean_cells = 0;  // RE pinned to 0 there, flagged
};

// 1/(t R^2); +inf sentinel when the relative error is zero.
double figure_of_merit(double cpu_hours, double re95);

RegionSummary summarize_region(const std::string& name, const Eigen::ArrayXd& nt_mean,
                               const Eigen::ArrayXd& nt_re95, const std::vector<int>& cells,
                               double cpu_hours);

// Means, relative errors (1 sigma and 95CI), and per-region FOM aggregates.
TallyStatistics compute_statistics(const TallySet& tally, const Geometry2D& geom);

// Deterministic tally file (seed, N, hashes, records, region R stats). The
// measured time and FOMs go to a separate timing sidecar because they are not
// reproducible across runs.
std::string serialize_tally(const TallySet& t, const Geometry2D& geom);
TallySet parse_tally(const std::string& text);
void write_tally(const TallySet& t, const Geometry2D& geom, const std::string& path);
TallySet read_tally(const std::string& path);
std::string tally_hash(const TallySet& t, const Geometry2D& geom);
void write_timing_sidecar(const TallySet& t, const Geometry2D& geom, const std::string& path);

}  // namespace ferrite
