#pragma once

// Independent test oracles. Everything here reimplements the math from
// scratch (its own pointwise model, its own weighting shape, brute-force
// quadrature) so the checks stay independent of the library implementation.

#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

struct Res {
  double er, gamma, peak, cf;
};

struct Nuc {
  double pot = 0.0;
  double cap = 0.0;  // 1/v amplitude at 0.0253 eV
  std::vector<Res> resonances;
};

inline double sig_scatter(const Nuc& n, double e) {
  double s = n.pot;
  for (const auto& r : n.resonances) {
    const double h = 0.5 * r.gamma;
    s += (1.0 - r.cf) * r.peak * h * h / ((e - r.er) * (e - r.er) + h * h);
  }
  return s;
}

inline double sig_absorb(const Nuc& n, double e) {
  double s = n.cap * std::sqrt(0.0253 / e);
  for (const auto& r : n.resonances) {
    const double h = 0.5 * r.gamma;
    s += r.cf * r.peak * h * h / ((e - r.er) * (e - r.er) + h * h);
  }
  return s;
}

inline double sig_total(const Nuc& n, double e) { return sig_scatter(n, e) + sig_absorb(n, e); }

// Three-segment weighting flux per lethargy, mirrored from the artifact's
// declared shape but written independently.
inline double weight_flux(double e, double break_ev = 1.0e5, double temp_ev = 1.4e6,
                          double cutoff_ev = 0.625) {
  if (e >= break_ev) return std::pow(e / break_ev, 1.5) * std::exp(-(e - break_ev) / temp_ev);
  if (e >= cutoff_ev) return 1.0;
  return e / cutoff_ev;
}

// Brute-force trapezoid in lethargy over [e_lo, e_hi] with n points.
inline double integrate_lethargy(const std::function<double(double)>& f, double e_lo, double e_hi,
                                 long n = 1000000) {
  const double width = std::log(e_hi / e_lo);
  double acc = 0.5 * (f(e_hi) + f(e_lo));
  for (long i = 1; i < n; ++i) acc += f(e_hi * std::exp(-width * i / n));
  return acc * width / n;
}

enum class Reaction { total, scatter, absorb };

inline double sig_of(const Nuc& n, Reaction x, double e) {
  switch (x) {
    case Reaction::total: return sig_total(n, e);
    case Reaction::scatter: return sig_scatter(n, e);
    case Reaction::absorb: return sig_absorb(n, e);
  }
  return 0.0;
}

inline double dilute_group_xs(const Nuc& n, Reaction x, double e_lo, double e_hi,
                              long pts = 1000000) {
  const double num = integrate_lethargy(
      [&](double e) { return sig_of(n, x, e) * weight_flux(e); }, e_lo, e_hi, pts);
  const double den = integrate_lethargy([&](double e) { return weight_flux(e); }, e_lo, e_hi, pts);
  return num / den;
}

inline double bondarenko_f(const Nuc& n, Reaction x, double sigma0, double e_lo, double e_hi,
                           long pts = 1000000) {
  const double num = integrate_lethargy(
      [&](double e) { return sig_of(n, x, e) * weight_flux(e) / (sig_total(n, e) + sigma0); },
      e_lo, e_hi, pts);
  const double den = integrate_lethargy(
      [&](double e) { return weight_flux(e) / (sig_total(n, e) + sigma0); }, e_lo, e_hi, pts);
  return (num / den) / dilute_group_xs(n, x, e_lo, e_hi, pts);
}

// Plane isotropic-source attenuation in a pure absorber:
// phi(z) = E1(sigma z)/2 per unit source, by quadrature over mu.
inline double plane_source_flux(double sigma_z, long n = 200000) {
  double acc = 0.0;
  for (long i = 0; i < n; ++i) {
    const double mu = (i + 0.5) / n;
    acc += std::exp(-sigma_z / mu) / mu;
  }
  return 0.5 * acc / n;
}

}  // namespace oracle
