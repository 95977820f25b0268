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

#ifndef ANCFF_FFT_HPP
#define ANCFF_FFT_HPP

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "ancff/types.hpp"

namespace ancff::fft {

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// Forward DFT, X[k] = sum_n x[n] e^{-j 2 pi k n / N}.
inline ComplexVector forward(const ComplexVector& in) {
  Eigen::FFT<double> engine;
  ComplexVector out;
  engine.fwd(out, in);
  return out;
}

/// Inverse DFT including the 1/N factor.
inline ComplexVector inverse(const ComplexVector& in) {
  Eigen::FFT<double> engine;
  ComplexVector out;
  engine.inv(out, in);
  return out;
}

/// Zero-pads a real sequence to `length` and transforms it.
inline ComplexVector forward_real(std::span<const double> x, std::size_t length) {
  ComplexVector buf(length, Complex(0.0, 0.0));
  for (std::size_t i = 0; i < x.size() && i < length; ++i) buf[i] = x[i];
  return forward(buf);
}

}  // namespace ancff::fft

#endif  // ANCFF_FFT_HPP
