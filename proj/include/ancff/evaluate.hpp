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

#ifndef ANCFF_EVALUATE_HPP
#define ANCFF_EVALUATE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ancff/acoustic_scene.hpp"
#include "ancff/design.hpp"
#include "ancff/spectral.hpp"
#include "ancff/types.hpp"

namespace ancff {

struct EvaluationBand {
  double f_low = 100.0;
  double f_high = 4000.0;

  /// k_low: first bin at or above f_low; k_high: last bin at or below f_high.
  std::pair<std::size_t, std::size_t> bins(const FrequencyGrid& grid) const {
    if (!(f_low >= 0.0 && f_low < f_high && f_high <= grid.sample_rate() / 2.0 + 1e-9))
      throw std::invalid_argument("EvaluationBand: need 0 <= f_low < f_high <= fs/2");
    return band_bins(grid, f_low, f_high);
  }

  bool operator==(const EvaluationBand&) const = default;
};

/// Predicted PSD at the ear drum with the controller running. Unexcited
/// reference bins carry no control signal, so there Phi_ee = Phi_dd.
inline RealVector closed_loop_psd(std::span<const double> w, const SpectralEstimate& spectra,
                                  const AcousticPathSet& paths) {
  const FrequencyGrid& grid = spectra.grid;
  const ComplexVector W = fir_frequency_response(w, grid);
  const ComplexVector S = fir_frequency_response(paths.secondary.samples, grid);
  const ComplexVector B = fir_frequency_response(paths.feedback.samples, grid);
  const auto ex = excited_bins(spectra.phi_xx);
  const auto ed = excited_bins(spectra.phi_dd);
  RealVector out(grid.bins());
  for (std::size_t k = 0; k < grid.bins(); ++k) {
    const Complex D = 1.0 + W[k] * B[k];
    if (std::abs(D) < kSingularFloor)
      throw SingularityError("closed_loop_psd: closed loop singular at " +
                             std::to_string(grid.frequency_hz(k)) + " Hz", k);
    if (!ex[k]) {
      out[k] = spectra.phi_dd[k];
      continue;
    }
    const double phi_xx = spectra.phi_xx[k];
    const double phi_dd = spectra.phi_dd[k];
    const Complex target = spectra.phi_dx[k] / phi_xx;
    const double coh = ed[k] ? std::clamp(std::norm(spectra.phi_dx[k]) / (phi_dd * phi_xx), 0.0, 1.0) : 0.0;
    out[k] = (1.0 - coh) * phi_dd + std::norm(target - W[k] / D * S[k]) * phi_xx;
  }
  return out;
}

/// Mean PSD over bins k_low .. k_high inclusive.
inline double band_power(std::span<const double> psd, const EvaluationBand& band, const FrequencyGrid& grid) {
  const auto [lo, hi] = band.bins(grid);
  if (hi >= psd.size() || lo > hi) throw std::invalid_argument("band_power: empty band");
  double acc = 0.0;
  for (std::size_t k = lo; k <= hi; ++k) acc += psd[k];
  return acc / static_cast<double>(hi - lo + 1);
}

inline double attenuation_db(double p_on, double p_off) {
  if (!(p_off > 0.0)) throw std::domain_error("attenuation: silent baseline (P_off = 0)");
  return 10.0 * std::log10(p_on / p_off);
}

/// Band-limited attenuation in dB; negative values mean the noise is reduced.
inline double attenuation(std::span<const double> w, const SpectralEstimate& spectra, const AcousticPathSet& paths,
                          const EvaluationBand& band) {
  const RealVector ee = closed_loop_psd(w, spectra, paths);
  return attenuation_db(band_power(ee, band, spectra.grid), band_power(spectra.phi_dd, band, spectra.grid));
}

struct FrequencyProfile {
  RealVector frequency_hz;
  RealVector phi_dd;
  RealVector phi_ee;
  RealVector attenuation_db;  // NaN where Phi_dd is below the numeric floor
};

inline FrequencyProfile frequency_profile(std::span<const double> w, const SpectralEstimate& spectra,
                                          const AcousticPathSet& paths) {
  FrequencyProfile fp;
  fp.phi_ee = closed_loop_psd(w, spectra, paths);
  fp.phi_dd = spectra.phi_dd;
  const auto ed = excited_bins(spectra.phi_dd);
  for (std::size_t k = 0; k < spectra.bins(); ++k) {
    fp.frequency_hz.push_back(spectra.grid.frequency_hz(k));
    fp.attenuation_db.push_back(ed[k] ? 10.0 * std::log10(fp.phi_ee[k] / fp.phi_dd[k])
                                      : std::numeric_limits<double>::quiet_NaN());
  }
  return fp;
}

// ---------------------------------------------------------------------------
// DoA sweeps

struct SweepSettings {
  double resolution_deg = 7.5;
  EvaluationBand band;
  double duration_s = 4.0;
  std::uint64_t seed = 0;
  std::size_t secondary_length = 712;  // L_s, sets the correlation lag span
  std::size_t dft_length = 8192;
};

struct DoaAttenuation {
  Doa doa;
  double attenuation_db = 0.0;
  double p_on = 0.0;
  double p_off = 0.0;
};

struct AttenuationProfile {
  std::vector<DoaAttenuation> per_doa;
  std::string controller_id;
  int repetition_id = 0;
  std::string field_kind = "single_doa";
  std::uint64_t seed = 0;
  EvaluationBand band;

  const DoaAttenuation& at(const Doa& doa) const {
    for (const auto& e : per_doa)
      if (e.doa.matches(doa)) return e;
    throw std::out_of_range("AttenuationProfile: DoA " + std::to_string(doa.degrees()) + " not evaluated");
  }
};

inline bool on_resolution_grid(const Doa& doa, double resolution_deg) {
  const double q = doa.degrees() / resolution_deg;
  return std::fabs(q - std::round(q)) < 1e-6;
}

/// Evaluates one DoA: single-source record, spectral estimate, band attenuation.
inline DoaAttenuation evaluate_doa(std::span<const double> w, const AcousticPathSet& paths, std::size_t doa_index,
                                   const SweepSettings& s) {
  const DoaPaths& dp = paths.doa_paths.at(doa_index);
  const FrequencyGrid grid(s.dft_length, paths.sample_rate);
  const std::size_t n = static_cast<std::size_t>(std::llround(s.duration_s * paths.sample_rate));
  const IncidentSignals sig = simulate_source(dp, source_seed(s.seed, doa_index), n);
  const SpectralEstimate est = estimate_spectra(sig.x, sig.d, s.secondary_length, w.size(), grid, paths.repetition_id);
  const RealVector ee = closed_loop_psd(w, est, paths);
  DoaAttenuation r;
  r.doa = dp.doa;
  r.p_on = band_power(ee, s.band, grid);
  r.p_off = band_power(est.phi_dd, s.band, grid);
  r.attenuation_db = attenuation_db(r.p_on, r.p_off);
  return r;
}

/// Attenuation for a single source at each DoA of the resolution grid, excited
/// one after the other with per-DoA seeds derived from `settings.seed`.
inline AttenuationProfile doa_sweep(std::span<const double> w, const AcousticPathSet& paths,
                                    const SweepSettings& settings, std::string controller_id = "w") {
  AttenuationProfile prof;
  prof.controller_id = std::move(controller_id);
  prof.repetition_id = paths.repetition_id;
  prof.seed = settings.seed;
  prof.band = settings.band;
  for (const Doa& doa : doa_grid(settings.resolution_deg)) {
    const auto idx = paths.find(doa);
    if (!idx)
      throw std::out_of_range("doa_sweep: DoA " + std::to_string(doa.degrees()) + " deg missing in repetition " +
                              std::to_string(paths.repetition_id));
    prof.per_doa.push_back(evaluate_doa(w, paths, *idx, settings));
  }
  return prof;
}

// ---------------------------------------------------------------------------
// Reinsertion

struct NamedDesign {
  std::string id;
  RealVector w;
  std::vector<int> repetitions_used;
};

struct ReinsertionTable {
  int held_out = 0;
  std::vector<std::string> controller_ids;
  std::vector<AttenuationProfile> profiles;  // one per controller, on the held-out repetition

  /// A(reference) - A(candidate) at a DoA; positive means the candidate attenuates more.
  double improvement(std::size_t reference, std::size_t candidate, const Doa& doa) const {
    return profiles.at(reference).at(doa).attenuation_db - profiles.at(candidate).at(doa).attenuation_db;
  }
};

inline ReinsertionTable reinsertion_experiment(std::span<const NamedDesign> designs,
                                               std::span<const AcousticPathSet> paths_all, int held_out,
                                               const SweepSettings& settings) {
  const AcousticPathSet* target = nullptr;
  for (const auto& p : paths_all)
    if (p.repetition_id == held_out) target = &p;
  if (!target) throw std::invalid_argument("reinsertion_experiment: held-out repetition " +
                                           std::to_string(held_out) + " missing");
  if (designs.empty()) throw std::invalid_argument("reinsertion_experiment: no designs");
  for (const auto& d : designs)
    if (std::find(d.repetitions_used.begin(), d.repetitions_used.end(), held_out) != d.repetitions_used.end())
      throw std::invalid_argument("reinsertion_experiment: design '" + d.id + "' was computed with the held-out repetition");

  ReinsertionTable table;
  table.held_out = held_out;
  for (const auto& d : designs) {
    table.controller_ids.push_back(d.id);
    table.profiles.push_back(doa_sweep(d.w, *target, settings, d.id));
  }
  return table;
}

// ---------------------------------------------------------------------------
// Time-domain closed loop

/// Runs the controller sample by sample: m = x - B_x * u, u = w * m, e = d - S * u.
/// B_x must have zero direct term (at least one sample of acoustic delay).
inline RealVector simulate_closed_loop(std::span<const double> w, const AcousticPathSet& paths,
                                       std::span<const double> x, std::span<const double> d) {
  if (x.size() != d.size()) throw std::invalid_argument("simulate_closed_loop: length mismatch");
  const RealVector& b = paths.feedback.samples;
  const RealVector& s = paths.secondary.samples;
  if (!b.empty() && b[0] != 0.0)
    throw std::invalid_argument("simulate_closed_loop: feedback path needs one sample of delay");
  const std::size_t n = x.size();
  RealVector m(n, 0.0), u(n, 0.0), e(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double fb = 0.0;
    for (std::size_t j = 1; j < b.size() && j <= t; ++j) fb += b[j] * u[t - j];
    m[t] = x[t] - fb;
    double acc = 0.0;
    for (std::size_t j = 0; j < w.size() && j <= t; ++j) acc += w[j] * m[t - j];
    u[t] = acc;
  }
  for (std::size_t t = 0; t < n; ++t) {
    double acc = 0.0;
    for (std::size_t j = 0; j < s.size() && j <= t; ++j) acc += s[j] * u[t - j];
    e[t] = d[t] - acc;
  }
  return e;
}

}  // namespace ancff

#endif  // ANCFF_EVALUATE_HPP
