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

#ifndef ANCFF_TYPES_HPP
#define ANCFF_TYPES_HPP

#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ancff {

using Complex = std::complex<double>;
using RealVector = std::vector<double>;
using ComplexVector = std::vector<Complex>;

// Error hierarchy. Each class maps to a distinct CLI exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Dataset archive problem; names the repetition / DoA involved when known.
class IngestionError : public Error {
 public:
  explicit IngestionError(const std::string& what, std::optional<int> repetition = std::nullopt,
                          std::optional<double> doa_deg = std::nullopt)
      : Error(what), repetition_(repetition), doa_deg_(doa_deg) {}
  std::optional<int> repetition() const { return repetition_; }
  std::optional<double> doa_deg() const { return doa_deg_; }

 private:
  std::optional<int> repetition_;
  std::optional<double> doa_deg_;
};

/// Raised when |1 + W B_x| vanishes at a bin, i.e. the closed loop is singular.
class SingularityError : public Error {
 public:
  SingularityError(const std::string& what, std::size_t bin)
      : Error(what), bin_(bin) {}
  std::size_t bin() const { return bin_; }

 private:
  std::size_t bin_;
};

/// Sampled impulse response of one acoustic path.
struct ImpulseResponse {
  RealVector samples;
  double sample_rate = 44100.0;

  std::size_t size() const { return samples.size(); }

  void validate(const std::string& name = "impulse response") const {
    if (samples.empty()) throw std::invalid_argument(name + ": empty");
    if (!(sample_rate > 0.0)) throw std::invalid_argument(name + ": sample_rate must be > 0");
    for (double v : samples)
      if (!std::isfinite(v)) throw std::invalid_argument(name + ": non-finite sample");
  }

  bool operator==(const ImpulseResponse&) const = default;
};

/// One-sided DFT grid: bins k = 0 .. L/2 at normalized frequency 2 pi k / L.
class FrequencyGrid {
 public:
  FrequencyGrid() = default;
  FrequencyGrid(std::size_t dft_length, double sample_rate)
      : dft_length_(dft_length), sample_rate_(sample_rate) {
    if (dft_length_ < 2 || dft_length_ % 2 != 0)
      throw std::invalid_argument("FrequencyGrid: dft_length must be a positive even integer");
    if (!(sample_rate_ > 0.0)) throw std::invalid_argument("FrequencyGrid: sample_rate must be > 0");
  }

  std::size_t dft_length() const { return dft_length_; }
  double sample_rate() const { return sample_rate_; }
  std::size_t bins() const { return dft_length_ / 2 + 1; }

  double omega(std::size_t k) const {
    return 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(dft_length_);
  }
  double frequency_hz(std::size_t k) const {
    return sample_rate_ * static_cast<double>(k) / static_cast<double>(dft_length_);
  }

  bool operator==(const FrequencyGrid&) const = default;

 private:
  std::size_t dft_length_ = 0;
  double sample_rate_ = 0.0;
};

}  // namespace ancff

#endif  // ANCFF_TYPES_HPP
