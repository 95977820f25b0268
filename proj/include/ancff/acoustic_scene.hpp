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

#ifndef ANCFF_ACOUSTIC_SCENE_HPP
#define ANCFF_ACOUSTIC_SCENE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ancff/types.hpp"

namespace ancff {

/// Azimuth in the horizontal plane, degrees in [0, 360). 270 is the device
/// (ipsilateral) side, 90 the opposite (contralateral) side.
class Doa {
 public:
  Doa() = default;
  explicit Doa(double azimuth_deg) : azimuth_(normalize(azimuth_deg)) {}

  double degrees() const { return azimuth_; }
  double radians() const { return azimuth_ * M_PI / 180.0; }

  /// Angular distance from the ipsilateral pole scaled to [0, 1]: 0 at 270, 1 at 90 degrees.
  double contralaterality() const {
    const double d = std::fabs(azimuth_ - 270.0);
    return std::min(d, 360.0 - d) / 180.0;
  }
  bool ipsilateral_half() const { return contralaterality() <= 0.5 + 1e-12; }

  bool matches(const Doa& other, double tol = 1e-6) const {
    double diff = std::fabs(azimuth_ - other.azimuth_);
    return std::min(diff, 360.0 - diff) <= tol;
  }

  static double normalize(double deg) {
    double a = std::fmod(deg, 360.0);
    if (a < 0.0) a += 360.0;
    if (a >= 360.0 - 1e-9) a = 0.0;
    return a;
  }

  bool operator==(const Doa&) const = default;

 private:
  double azimuth_ = 0.0;
};

inline constexpr double kIpsilateralDeg = 270.0;
inline constexpr double kContralateralDeg = 90.0;

/// DoAs 0, res, 2 res, ... below 360 degrees.
inline std::vector<Doa> doa_grid(double resolution_deg) {
  if (!(resolution_deg > 0.0) || resolution_deg > 360.0)
    throw std::invalid_argument("doa_grid: resolution must be in (0, 360]");
  std::vector<Doa> grid;
  for (std::size_t i = 0;; ++i) {
    const double az = static_cast<double>(i) * resolution_deg;
    if (az >= 360.0 - 1e-9) break;
    grid.emplace_back(az);
  }
  return grid;
}

struct DoaPaths {
  Doa doa;
  ImpulseResponse h_x;  // source -> external microphone
  ImpulseResponse h_d;  // source -> ear drum

  bool operator==(const DoaPaths&) const = default;
};

/// Impulse responses of one measurement repetition (one headphone insertion).
struct AcousticPathSet {
  int repetition_id = 0;
  std::vector<DoaPaths> doa_paths;
  ImpulseResponse secondary;  // loudspeaker -> ear drum, S
  ImpulseResponse feedback;   // loudspeaker -> external microphone, B_x
  double sample_rate = 44100.0;

  std::optional<std::size_t> find(const Doa& doa) const {
    for (std::size_t i = 0; i < doa_paths.size(); ++i)
      if (doa_paths[i].doa.matches(doa)) return i;
    return std::nullopt;
  }

  const DoaPaths& at(const Doa& doa) const {
    auto idx = find(doa);
    if (!idx) {
      std::ostringstream os;
      os << "repetition " << repetition_id << ": no paths for DoA " << doa.degrees() << " deg";
      throw std::out_of_range(os.str());
    }
    return doa_paths[*idx];
  }

  void validate() const {
    if (!(sample_rate > 0.0)) throw std::invalid_argument("AcousticPathSet: sample_rate must be > 0");
    if (doa_paths.empty()) throw std::invalid_argument("AcousticPathSet: no DoA paths");
    auto check = [&](const ImpulseResponse& ir, const std::string& name) {
      ir.validate(name);
      if (ir.sample_rate != sample_rate)
        throw std::invalid_argument("AcousticPathSet: " + name + " sample rate differs from the set");
    };
    check(secondary, "S");
    check(feedback, "B_x");
    for (const auto& p : doa_paths) {
      const std::string tag = " (DoA " + std::to_string(p.doa.degrees()) + ")";
      check(p.h_x, "h_x" + tag);
      check(p.h_d, "h_d" + tag);
    }
  }

  bool operator==(const AcousticPathSet&) const = default;
};

enum class FieldKind { diffuse, single_doa };

struct NoiseFieldSpec {
  FieldKind kind = FieldKind::diffuse;
  Doa doa{kIpsilateralDeg};  // single_doa only
  double duration_s = 4.0;
  double sample_rate = 44100.0;
  std::uint64_t seed = 0;
  double amplitude = 1.0;  // source standard deviation

  static NoiseFieldSpec diffuse_field(double duration_s, double fs, std::uint64_t seed) {
    return {FieldKind::diffuse, Doa{}, duration_s, fs, seed, 1.0};
  }
  static NoiseFieldSpec single(Doa doa, double duration_s, double fs, std::uint64_t seed) {
    return {FieldKind::single_doa, doa, duration_s, fs, seed, 1.0};
  }

  std::size_t samples() const {
    return static_cast<std::size_t>(std::llround(duration_s * sample_rate));
  }
};

struct IncidentSignals {
  RealVector x;  // external microphone, without loudspeaker contribution
  RealVector d;  // ear drum, without loudspeaker contribution
};

/// splitmix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return mix_seed(mix_seed(master) ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

inline RealVector white_noise(std::size_t n, std::uint64_t seed, double stddev = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  RealVector out(n);
  for (auto& v : out) v = stddev * dist(gen);
  return out;
}

/// Full linear convolution h * s truncated to the first `length` samples.
inline RealVector convolve_truncated(std::span<const double> h, std::span<const double> s,
                                     std::size_t length) {
  RealVector y(length, 0.0);
  for (std::size_t j = 0; j < h.size() && j < length; ++j) {
    const double hj = h[j];
    if (hj == 0.0) continue;
    const std::size_t count = std::min(s.size(), length - j);
    double* out = y.data() + j;
    for (std::size_t n = 0; n < count; ++n) out[n] += hj * s[n];
  }
  return y;
}

inline RealVector convolve_full(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  return convolve_truncated(a, b, a.size() + b.size() - 1);
}

/// Signals of a single source at one DoA, source drawn from `seed`.
inline IncidentSignals simulate_source(const DoaPaths& paths, std::uint64_t seed, std::size_t n,
                                       double amplitude = 1.0) {
  const RealVector s = white_noise(n, seed, amplitude);
  return {convolve_truncated(paths.h_x.samples, s, n), convolve_truncated(paths.h_d.samples, s, n)};
}

/// Seed of the source located at `doa_index` of the path set.
inline std::uint64_t source_seed(std::uint64_t field_seed, std::size_t doa_index) {
  return derive_seed(field_seed, doa_index);
}

inline IncidentSignals simulate_incident(const AcousticPathSet& paths, const NoiseFieldSpec& field) {
  if (!(field.duration_s > 0.0)) throw std::invalid_argument("simulate_incident: duration must be > 0");
  if (field.sample_rate != paths.sample_rate)
    throw std::invalid_argument("simulate_incident: field sample rate differs from path set");
  if (paths.doa_paths.empty()) throw std::invalid_argument("simulate_incident: path set has no DoAs");
  const std::size_t n = field.samples();
  if (n == 0) throw std::invalid_argument("simulate_incident: zero-length record");

  auto check_paths = [](const DoaPaths& p) {
    if (p.h_x.samples.empty() || p.h_d.samples.empty())
      throw std::invalid_argument("simulate_incident: zero-length path at DoA " +
                                  std::to_string(p.doa.degrees()));
  };

  if (field.kind == FieldKind::single_doa) {
    const auto idx = paths.find(field.doa);
    if (!idx)
      throw std::out_of_range("simulate_incident: DoA " + std::to_string(field.doa.degrees()) +
                              " deg missing in repetition " + std::to_string(paths.repetition_id));
    check_paths(paths.doa_paths[*idx]);
    return simulate_source(paths.doa_paths[*idx], source_seed(field.seed, *idx), n, field.amplitude);
  }

  IncidentSignals total{RealVector(n, 0.0), RealVector(n, 0.0)};
  for (std::size_t i = 0; i < paths.doa_paths.size(); ++i) {
    check_paths(paths.doa_paths[i]);
    const IncidentSignals part = simulate_source(paths.doa_paths[i], source_seed(field.seed, i), n, field.amplitude);
    for (std::size_t t = 0; t < n; ++t) {
      total.x[t] += part.x[t];
      total.d[t] += part.d[t];
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Synthetic scenes

/// Parameters of the synthetic head/headphone model. Delays are in samples.
struct SyntheticSceneConfig {
  double sample_rate = 44100.0;
  int repetitions = 7;
  double doa_resolution_deg = 7.5;
  std::uint64_t seed = 1;

  std::size_t path_length = 128;
  std::size_t secondary_length = 32;

  double source_delay = 16.0;         // h_x bulk delay on the ipsilateral pole
  double source_decay = 0.5;          // decaying-exponential colouring kernel
  std::size_t source_kernel_length = 16;
  double contra_delay = 6.0;          // extra h_x delay at the contralateral pole
  double max_shadow_db = 12.0;        // head-shadow attenuation at the contralateral pole
  double causality_margin = 6.0;      // h_d lag behind h_x on the ipsilateral pole
  double contra_advance = 5.0;        // margin lost at the contralateral pole
  double passive_pole = 0.7;          // one-pole passive-attenuation lowpass
  double passive_gain = 0.5;

  double secondary_delay = 2.0;
  double secondary_decay = 0.4;
  double secondary_gain = 1.0;
  double leakage = 0.5;               // B_x = leakage * S

  double perturbation = 0.2;          // relative gain variation across reinsertions
  int delay_jitter = 1;               // +- samples on h_d and S across reinsertions
  double reseat_offset = 2.0;         // systematic h_d delay of reinsertions vs. the calibration fit

  bool operator==(const SyntheticSceneConfig&) const = default;

  void validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
      throw ConfigError("synthetic." + field + ": " + why);
    };
    if (!(sample_rate > 0.0)) fail("sample_rate", "must be > 0");
    if (repetitions < 1) fail("repetitions", "must be >= 1");
    if (!(doa_resolution_deg > 0.0) || doa_resolution_deg > 360.0) fail("doa_resolution_deg", "must be in (0, 360]");
    if (path_length < 1) fail("path_length", "must be >= 1");
    if (secondary_length < 1) fail("secondary_length", "must be >= 1");
    if (source_delay < 0.0) fail("source_delay", "must be >= 0");
    if (source_decay < 0.0 || source_decay >= 1.0) fail("source_decay", "must be in [0, 1)");
    if (source_kernel_length < 1) fail("source_kernel_length", "must be >= 1");
    if (contra_delay < 0.0) fail("contra_delay", "must be >= 0");
    if (max_shadow_db < 0.0) fail("max_shadow_db", "must be >= 0");
    if (causality_margin < 0.0) fail("causality_margin", "must be >= 0");
    if (passive_pole < 0.0 || passive_pole >= 1.0) fail("passive_pole", "must be in [0, 1)");
    if (secondary_delay < 1.0) fail("secondary_delay", "must be >= 1 sample");
    if (secondary_decay < 0.0 || secondary_decay >= 1.0) fail("secondary_decay", "must be in [0, 1)");
    if (!(secondary_gain > 0.0)) fail("secondary_gain", "must be > 0");
    if (leakage < 0.0) fail("leakage", "must be >= 0");
    if (!(perturbation >= 0.0 && perturbation < 1.0)) fail("perturbation", "must be in [0, 1)");
    if (delay_jitter < 0) fail("delay_jitter", "must be >= 0");
    if (!std::isfinite(reseat_offset)) fail("reseat_offset", "must be finite");
  }
};

/// Hann-windowed sinc approximating a delay of `delay` samples; integer delays are exact impulses.
inline RealVector fractional_delay(double delay, std::size_t length, int half_width = 8) {
  RealVector h(length, 0.0);
  const double rounded = std::round(delay);
  if (std::fabs(delay - rounded) < 1e-9) {
    if (rounded >= 0.0 && rounded < static_cast<double>(length)) h[static_cast<std::size_t>(rounded)] = 1.0;
    return h;
  }
  const long lo = static_cast<long>(std::floor(delay)) - half_width + 1;
  const long hi = static_cast<long>(std::floor(delay)) + half_width;
  for (long n = std::max(0L, lo); n <= hi && n < static_cast<long>(length); ++n) {
    const double t = static_cast<double>(n) - delay;
    const double sinc = std::sin(M_PI * t) / (M_PI * t);
    const double window = 0.5 * (1.0 + std::cos(M_PI * t / half_width));
    h[static_cast<std::size_t>(n)] = sinc * window;
  }
  return h;
}

inline RealVector exponential_kernel(double decay, std::size_t length, double scale = 1.0) {
  RealVector k(length);
  double v = scale;
  for (auto& s : k) {
    s = v;
    v *= decay;
  }
  return k;
}

namespace detail {

struct Reinsertion {
  double gain_d = 1.0;
  double gain_s = 1.0;
  double shift_d = 0.0;
  int jitter_s = 0;
};

inline Reinsertion draw_reinsertion(const SyntheticSceneConfig& c, int repetition) {
  Reinsertion r;
  if (repetition == 0 || c.perturbation == 0.0) return r;
  std::mt19937_64 gen(derive_seed(c.seed, 0x5eed0000ULL + static_cast<std::uint64_t>(repetition)));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_int_distribution<int> jitter(-c.delay_jitter, c.delay_jitter);
  r.gain_d = 1.0 + c.perturbation * unit(gen);
  r.gain_s = 1.0 + c.perturbation * unit(gen);
  r.shift_d = c.reseat_offset + jitter(gen);
  r.jitter_s = jitter(gen);
  return r;
}

inline RealVector truncate(RealVector v, std::size_t n) {
  v.resize(n, 0.0);
  return v;
}

}  // namespace detail

/// Builds R deterministic path sets. Repetition 0 is the nominal insertion; the
/// others perturb the gain and delay of h_d and S. Non-causal configurations
/// are reported through `warnings`.
inline std::vector<AcousticPathSet> synthesize_scene(const SyntheticSceneConfig& c,
                                                     std::vector<std::string>* warnings = nullptr) {
  c.validate();
  const std::vector<Doa> grid = doa_grid(c.doa_resolution_deg);
  const RealVector source_kernel = exponential_kernel(c.source_decay, c.source_kernel_length);
  RealVector passive = exponential_kernel(c.passive_pole, 32, 1.0 - c.passive_pole);
  for (auto& v : passive) v *= c.passive_gain;
  const RealVector secondary_kernel = exponential_kernel(c.secondary_decay, c.secondary_length);

  std::vector<AcousticPathSet> sets;
  for (int r = 0; r < c.repetitions; ++r) {
    const detail::Reinsertion ri = detail::draw_reinsertion(c, r);
    AcousticPathSet set;
    set.repetition_id = r;
    set.sample_rate = c.sample_rate;

    const double s_delay = std::max(1.0, c.secondary_delay + ri.jitter_s);
    RealVector s = detail::truncate(
        convolve_full(fractional_delay(s_delay, c.secondary_length), secondary_kernel), c.secondary_length);
    for (auto& v : s) v *= c.secondary_gain * ri.gain_s;
    RealVector b = s;
    for (auto& v : b) v *= c.leakage;
    set.secondary = {std::move(s), c.sample_rate};
    set.feedback = {std::move(b), c.sample_rate};

    bool warned = false;
    for (const Doa& doa : grid) {
      const double side = doa.contralaterality();
      const double gain = std::pow(10.0, -c.max_shadow_db * side / 20.0);
      const double dx = c.source_delay + c.contra_delay * side;
      const double dd = dx + c.causality_margin - c.contra_advance * side + ri.shift_d;

      RealVector hx = detail::truncate(
          convolve_full(fractional_delay(dx, c.path_length), source_kernel), c.path_length);
      RealVector hd = detail::truncate(
          convolve_full(convolve_full(fractional_delay(dd, c.path_length), source_kernel), passive),
          c.path_length);
      for (auto& v : hx) v *= gain;
      for (auto& v : hd) v *= gain * ri.gain_d;
      set.doa_paths.push_back({doa, {std::move(hx), c.sample_rate}, {std::move(hd), c.sample_rate}});

      if (warnings && !warned && doa.ipsilateral_half() && dd - dx < s_delay) {
        std::ostringstream os;
        os << "repetition " << r << ": ear-drum path at DoA " << doa.degrees()
           << " deg arrives before the secondary path can respond (non-causal)";
        warnings->push_back(os.str());
        warned = true;
      }
    }
    sets.push_back(std::move(set));
  }
  return sets;
}

}  // namespace ancff

#endif  // ANCFF_ACOUSTIC_SCENE_HPP
