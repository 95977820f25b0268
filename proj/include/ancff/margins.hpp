// Copyright 2026 The ancff Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef ANCFF_MARGINS_HPP
#define ANCFF_MARGINS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "ancff/design.hpp"
#include "ancff/spectral.hpp"
#include "ancff/types.hpp"

namespace ancff {

/// Nyquist analysis of the open loop W B_x. The contour between adjacent bins
/// is the straight chord joining them.
struct StabilityReport {
  ComplexVector open_loop;
  RealVector constraint;  // |L|^2 - |L + 2 rho|^2 per bin
  double rho = 0.8;
  double gain_margin = std::numeric_limits<double>::infinity();  // +inf: no phase crossover
  std::optional<double> phase_margin_deg;                        // empty: no gain crossover
  std::optional<double> phase_crossover_hz;
  std::optional<double> gain_crossover_hz;
  int encirclements = 0;  // net winding of the closed contour around -1
  double min_real = 0.0;  // min_k Re(W B_x)
  std::vector<std::size_t> violation_bins;  // bins with Re(W B_x) <= -rho

  bool satisfies_constraint() const { return violation_bins.empty(); }
};

namespace detail {

inline double chord_frequency(const FrequencyGrid& grid, std::size_t k, double t) {
  return grid.frequency_hz(k) + t * (grid.frequency_hz(k + 1) - grid.frequency_hz(k));
}

// Signed crossings of the closed contour with the ray {Re < -1, Im = 0}.
inline int winding_about_nyquist_point(const ComplexVector& half) {
  std::vector<Complex> contour(half.begin(), half.end());
  for (std::size_t k = half.size() - 1; k-- > 1;) contour.push_back(std::conj(half[k]));
  int winding = 0;
  const std::size_t m = contour.size();
  for (std::size_t i = 0; i < m; ++i) {
    const Complex a = contour[i] + 1.0;
    const Complex b = contour[(i + 1) % m] + 1.0;
    // half-open rule on Im so that vertices are counted once
    const bool up = a.imag() < 0.0 && b.imag() >= 0.0;
    const bool down = a.imag() >= 0.0 && b.imag() < 0.0;
    if (!up && !down) continue;
    const double t = a.imag() / (a.imag() - b.imag());
    const double re = a.real() + t * (b.real() - a.real());
    if (re < 0.0) winding += up ? 1 : -1;
  }
  return winding;
}

}  // namespace detail

inline StabilityReport compute_margins(std::span<const Complex> open_loop, const FrequencyGrid& grid, double rho) {
  if (open_loop.size() != grid.bins()) throw std::invalid_argument("compute_margins: open loop not on grid");
  StabilityReport rep;
  rep.rho = rho;
  rep.open_loop.assign(open_loop.begin(), open_loop.end());
  const ComplexVector& L = rep.open_loop;
  const std::size_t bins = L.size();
  rep.constraint.resize(bins);
  rep.min_real = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < bins; ++k) {
    rep.constraint[k] = std::norm(L[k]) - std::norm(L[k] + 2.0 * rho);
    rep.min_real = std::min(rep.min_real, L[k].real());
    if (!(L[k].real() > -rho)) rep.violation_bins.push_back(k);
  }

  // Phase crossovers: the contour meets the negative real axis.
  double worst_gain = 0.0;
  auto phase_cross = [&](double re, double hz) {
    if (re < 0.0 && -re > worst_gain) {
      worst_gain = -re;
      rep.phase_crossover_hz = hz;
    }
  };
  for (std::size_t k = 0; k < bins; ++k)
    if (L[k].imag() == 0.0) phase_cross(L[k].real(), grid.frequency_hz(k));
  for (std::size_t k = 0; k + 1 < bins; ++k) {
    const Complex a = L[k], b = L[k + 1];
    if ((a.imag() < 0.0 && b.imag() > 0.0) || (a.imag() > 0.0 && b.imag() < 0.0)) {
      const double t = a.imag() / (a.imag() - b.imag());
      phase_cross(a.real() + t * (b.real() - a.real()), detail::chord_frequency(grid, k, t));
    }
  }
  if (worst_gain > 0.0) rep.gain_margin = 1.0 / worst_gain;

  // Gain crossovers: |a + t (b - a)| = 1 for t in [0, 1].
  double worst_phase = std::numeric_limits<double>::infinity();
  auto gain_cross = [&](Complex v, double hz) {
    const double pm = 180.0 - std::fabs(std::arg(v)) * 180.0 / M_PI;
    if (pm < worst_phase) {
      worst_phase = pm;
      rep.gain_crossover_hz = hz;
    }
  };
  for (std::size_t k = 0; k + 1 < bins; ++k) {
    const Complex a = L[k], d = L[k + 1] - L[k];
    const double qa = std::norm(d);
    const double qb = 2.0 * (std::conj(a) * d).real();
    const double qc = std::norm(a) - 1.0;
    if (qa == 0.0) {
      if (qc == 0.0) gain_cross(a, grid.frequency_hz(k));
      continue;
    }
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc < 0.0) continue;
    const double sq = std::sqrt(disc);
    for (double t : {(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)})
      if (t >= 0.0 && t <= 1.0) gain_cross(a + t * d, detail::chord_frequency(grid, k, t));
  }
  if (std::isfinite(worst_phase)) rep.phase_margin_deg = worst_phase;

  rep.encirclements = detail::winding_about_nyquist_point(L);
  return rep;
}

inline StabilityReport compute_margins(std::span<const double> w, std::span<const Complex> B_nominal,
                                       const FrequencyGrid& grid, double rho) {
  if (B_nominal.size() != grid.bins()) throw std::invalid_argument("compute_margins: B_x not on grid");
  const ComplexVector W = fir_frequency_response(w, grid);
  ComplexVector L(grid.bins());
  for (std::size_t k = 0; k < L.size(); ++k) L[k] = W[k] * B_nominal[k];
  return compute_margins(L, grid, rho);
}

}  // namespace ancff

#endif  // ANCFF_MARGINS_HPP
