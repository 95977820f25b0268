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

#ifndef ANCFF_SPECTRAL_HPP
#define ANCFF_SPECTRAL_HPP

// Correlogram-based (cross-)power spectral estimation on a one-sided DFT grid.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "ancff/fft.hpp"
#include "ancff/types.hpp"

namespace ancff {

/// Bins whose PSD is below this fraction of the PSD maximum are "unexcited".
inline constexpr double kUnexcitedFloor = 1e-12;

/// Lag sequence phi(tau), tau = -lag_max .. +lag_max.
struct CorrelationEstimate {
  RealVector values;
  std::size_t lag_max = 0;

  double at(long tau) const { return values[static_cast<std::size_t>(tau + static_cast<long>(lag_max))]; }
};

struct SpectralEstimate {
  RealVector phi_xx;
  ComplexVector phi_dx;
  RealVector phi_dd;
  FrequencyGrid grid;
  int repetition_id = 0;
  /// Biased autocorrelation of x at lag zero (mean power of x).
  double xx_lag0 = 0.0;

  std::size_t bins() const { return phi_xx.size(); }
};

namespace detail {

// Direct summation is exact and cheap for short records; long records go through the FFT.
inline constexpr std::size_t kDirectCorrelationWork = std::size_t{1} << 22;

inline RealVector correlation_direct(std::span<const double> a, std::span<const double> b,
                                     std::size_t tau_max) {
  const long n = static_cast<long>(a.size());
  const long lmax = static_cast<long>(tau_max);
  RealVector out(2 * tau_max + 1, 0.0);
  for (long tau = -lmax; tau <= lmax; ++tau) {
    const long lo = std::max(0L, -tau);
    const long hi = std::min(n, n - tau);
    double acc = 0.0;
    for (long i = lo; i < hi; ++i) acc += a[static_cast<std::size_t>(i + tau)] * b[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(tau + lmax)] = acc / static_cast<double>(n);
  }
  return out;
}

inline RealVector correlation_fft(std::span<const double> a, std::span<const double> b,
                                  std::size_t tau_max) {
  const std::size_t n = a.size();
  const std::size_t m = fft::next_pow2(n + tau_max + 1);
  const ComplexVector fa = fft::forward_real(a, m);
  const ComplexVector fb = fft::forward_real(b, m);
  ComplexVector prod(m);
  for (std::size_t i = 0; i < m; ++i) prod[i] = fa[i] * std::conj(fb[i]);
  const ComplexVector c = fft::inverse(prod);
  RealVector out(2 * tau_max + 1, 0.0);
  const long lmax = static_cast<long>(tau_max);
  for (long tau = -lmax; tau <= lmax; ++tau) {
    const std::size_t idx = tau >= 0 ? static_cast<std::size_t>(tau) : m - static_cast<std::size_t>(-tau);
    out[static_cast<std::size_t>(tau + lmax)] = c[idx].real() / static_cast<double>(n);
  }
  return out;
}

}  // namespace detail

/// Biased correlation phi(tau) = (1/N) sum_n a(n+tau) b(n), samples outside [0, N) are zero.
inline CorrelationEstimate biased_correlation(std::span<const double> a, std::span<const double> b,
                                              std::size_t tau_max) {
  if (a.size() != b.size()) throw std::invalid_argument("biased_correlation: length mismatch");
  if (a.empty()) throw std::invalid_argument("biased_correlation: empty signal");
  if (tau_max >= a.size()) throw std::invalid_argument("biased_correlation: tau_max must be < N");
  CorrelationEstimate est;
  est.lag_max = tau_max;
  if (a.size() * (2 * tau_max + 1) <= detail::kDirectCorrelationWork)
    est.values = detail::correlation_direct(a, b, tau_max);
  else
    est.values = detail::correlation_fft(a, b, tau_max);
  return est;
}

/// Correlogram: lag 0 at index 0, negative lags wrapped to the end of the DFT buffer.
inline ComplexVector correlation_to_spectrum(const CorrelationEstimate& corr, const FrequencyGrid& grid) {
  const std::size_t len = grid.dft_length();
  if (corr.values.size() != 2 * corr.lag_max + 1)
    throw std::invalid_argument("correlation_to_spectrum: malformed correlation");
  if (corr.values.size() > len)
    throw std::invalid_argument("correlation_to_spectrum: correlation longer than DFT buffer");
  ComplexVector buf(len, Complex(0.0, 0.0));
  const long lmax = static_cast<long>(corr.lag_max);
  for (long tau = -lmax; tau <= lmax; ++tau) {
    const std::size_t idx = tau >= 0 ? static_cast<std::size_t>(tau) : len - static_cast<std::size_t>(-tau);
    buf[idx] = corr.at(tau);
  }
  ComplexVector full = fft::forward(buf);
  full.resize(grid.bins());
  return full;
}

/// W(Omega_k) = sum_m w[m] e^{-j Omega_k m} on bins 0 .. L/2.
inline ComplexVector fir_frequency_response(std::span<const double> w, const FrequencyGrid& grid) {
  if (w.size() > grid.dft_length())
    throw std::invalid_argument("fir_frequency_response: filter longer than DFT buffer");
  ComplexVector full = fft::forward_real(w, grid.dft_length());
  full.resize(grid.bins());
  return full;
}

inline double max_of(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  return m;
}

/// Mask of bins whose PSD exceeds kUnexcitedFloor times the maximum.
inline std::vector<bool> excited_bins(std::span<const double> psd) {
  const double floor = kUnexcitedFloor * max_of(psd);
  std::vector<bool> mask(psd.size());
  for (std::size_t k = 0; k < psd.size(); ++k) mask[k] = psd[k] > floor && psd[k] > 0.0;
  return mask;
}

/// Magnitude-squared coherence; zero where either PSD is unexcited.
inline RealVector coherence(const SpectralEstimate& s) {
  const auto ex = excited_bins(s.phi_xx);
  const auto ed = excited_bins(s.phi_dd);
  RealVector g(s.bins(), 0.0);
  for (std::size_t k = 0; k < s.bins(); ++k)
    if (ex[k] && ed[k]) g[k] = std::norm(s.phi_dx[k]) / (s.phi_xx[k] * s.phi_dd[k]);
  return g;
}

/// Estimates Phi_xx, Phi_dx and Phi_dd from one calibration record. The lag span
/// is +-(secondary_length + filter_length - 1).
inline SpectralEstimate estimate_spectra(std::span<const double> x, std::span<const double> d,
                                         std::size_t secondary_length, std::size_t filter_length,
                                         const FrequencyGrid& grid, int repetition_id = 0) {
  if (x.size() != d.size()) throw std::invalid_argument("estimate_spectra: length mismatch");
  if (secondary_length == 0 || filter_length == 0)
    throw std::invalid_argument("estimate_spectra: lengths must be >= 1");
  const std::size_t tau_max = secondary_length + filter_length - 1;
  if (x.size() < 2 * tau_max || x.size() <= tau_max)
    throw std::invalid_argument("estimate_spectra: record shorter than 2 * tau_max samples");

  const CorrelationEstimate cxx = biased_correlation(x, x, tau_max);
  const CorrelationEstimate cdd = biased_correlation(d, d, tau_max);
  const CorrelationEstimate cdx = biased_correlation(d, x, tau_max);

  SpectralEstimate est;
  est.grid = grid;
  est.repetition_id = repetition_id;
  est.xx_lag0 = cxx.at(0);
  const ComplexVector sxx = correlation_to_spectrum(cxx, grid);
  const ComplexVector sdd = correlation_to_spectrum(cdd, grid);
  est.phi_dx = correlation_to_spectrum(cdx, grid);
  est.phi_xx.resize(grid.bins());
  est.phi_dd.resize(grid.bins());
  for (std::size_t k = 0; k < grid.bins(); ++k) {
    est.phi_xx[k] = std::max(0.0, sxx[k].real());
    est.phi_dd[k] = std::max(0.0, sdd[k].real());
  }
  // A rectangular lag window does not guarantee Cauchy-Schwarz per bin; shrink
  // |Phi_dx| onto the coherence-one boundary where it is exceeded.
  for (std::size_t k = 0; k < grid.bins(); ++k) {
    const double bound = est.phi_xx[k] * est.phi_dd[k];
    const double mag2 = std::norm(est.phi_dx[k]);
    if (bound <= 0.0)
      est.phi_dx[k] = Complex(0.0, 0.0);
    else if (mag2 > bound)
      est.phi_dx[k] *= std::sqrt(bound / mag2);
  }
  return est;
}

}  // namespace ancff

#endif  // ANCFF_SPECTRAL_HPP
