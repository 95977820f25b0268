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

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "ancff/design.hpp"
#include "ancff/margins.hpp"
#include "test_support.hpp"

namespace ancff {
namespace {

ComplexVector open_loop(const FrequencyGrid& grid, auto&& fn) {
  ComplexVector L(grid.bins());
  for (std::size_t k = 0; k < L.size(); ++k) L[k] = fn(grid.omega(k));
  return L;
}

TEST(Margins, ZeroLoopHasInfiniteGainMargin) {
  const FrequencyGrid grid(64, 1000.0);
  const auto m = compute_margins(ComplexVector(grid.bins()), grid, 0.8);
  EXPECT_TRUE(std::isinf(m.gain_margin));
  EXPECT_FALSE(m.phase_margin_deg.has_value());
  EXPECT_EQ(m.encirclements, 0);
  EXPECT_TRUE(m.satisfies_constraint());
}

TEST(Margins, DelayedHalfGainCrossesAtMinusHalf) {
  // 0.5 e^{-j 10 Omega} first reaches -180 degrees at Omega = pi / 10, which is bin L / 20.
  const FrequencyGrid grid(200, 1000.0);
  const auto m = compute_margins(open_loop(grid, [](double w) { return 0.5 * std::polar(1.0, -10.0 * w); }), grid, 0.8);
  EXPECT_NEAR(m.gain_margin, 2.0, 1e-12);
  EXPECT_FALSE(m.phase_margin_deg.has_value());
  EXPECT_EQ(m.encirclements, 0);
  EXPECT_TRUE(m.satisfies_constraint());
}

TEST(Margins, PhaseMarginOfDecayingDelay) {
  // |L| = 2 (1 - Omega / pi) is one at Omega = pi / 2 where the phase is -90 degrees.
  const FrequencyGrid grid(256, 1000.0);
  const auto m = compute_margins(
      open_loop(grid, [](double w) { return 2.0 * (1.0 - w / M_PI) * std::polar(1.0, -w); }), grid, 0.8);
  ASSERT_TRUE(m.phase_margin_deg.has_value());
  EXPECT_NEAR(*m.phase_margin_deg, 90.0, 1e-6);
  EXPECT_NEAR(*m.gain_crossover_hz, 250.0, 1e-6);
}

TEST(Margins, LoopAroundMinusOneIsFlagged) {
  const FrequencyGrid grid(200, 1000.0);
  const auto m = compute_margins(open_loop(grid, [](double w) { return 2.0 * std::polar(1.0, -10.0 * w); }), grid, 0.8);
  EXPECT_NE(m.encirclements, 0);
  EXPECT_FALSE(m.satisfies_constraint());
  EXPECT_NEAR(m.gain_margin, 0.5, 1e-12);
  for (std::size_t k : m.violation_bins) EXPECT_LE(m.open_loop[k].real(), -0.8);
}

TEST(Margins, ConstraintVectorMatchesDesignModule) {
  std::mt19937_64 gen(1);
  const FrequencyGrid grid(64, 1000.0);
  const auto w = testing::random_taps(gen, 8, 0.5);
  const auto b = testing::random_taps(gen, 8, 0.5);
  const auto B = fir_frequency_response(b, grid);
  const auto m = compute_margins(w, B, grid, 0.7);
  const auto c = stability_constraint(w, B, 0.7);
  for (std::size_t k = 0; k < c.size(); ++k) EXPECT_NEAR(m.constraint[k], c[k], 1e-12);
}

TEST(Margins, FeasibleDesignsRespectTheBounds) {
  const double rho = 0.8;
  for (unsigned seed = 0; seed < 8; ++seed) {
    std::mt19937_64 gen(50 + seed);
    const auto inst = testing::random_instance(gen, 256, 2, 1.0 + 2.0 * seed);
    DesignConfig cfg;
    cfg.filter_length = 24;
    cfg.dft_length = 256;
    cfg.rho = rho;
    cfg.repetitions_used = {0, 1};
    const auto d = optimize(inst.spectra, inst.paths, cfg);
    ASSERT_TRUE(d.feasible);
    const FrequencyGrid grid(256, 1000.0);
    const auto m = compute_margins(
        d.w, fir_frequency_response(inst.paths[static_cast<std::size_t>(d.r0)].feedback.samples, grid), grid, rho);
    EXPECT_TRUE(m.satisfies_constraint());
    EXPECT_EQ(m.encirclements, 0);
    EXPECT_GE(m.gain_margin, 1.0 / rho - 1e-6);
    if (m.phase_margin_deg) {
      EXPECT_GE(*m.phase_margin_deg, std::acos(rho) * 180.0 / M_PI - 1e-6);
    }
  }
}

TEST(Margins, ScalingAFeasibleDesignUpEventuallyViolates) {
  std::mt19937_64 gen(60);
  const auto inst = testing::random_instance(gen, 128, 1, 6.0);
  DesignConfig cfg;
  cfg.filter_length = 16;
  cfg.dft_length = 128;
  const auto d = optimize(inst.spectra, inst.paths, cfg);
  const FrequencyGrid grid(128, 1000.0);
  const auto B = fir_frequency_response(inst.paths[0].feedback.samples, grid);
  ASSERT_TRUE(compute_margins(d.w, B, grid, 0.8).satisfies_constraint());
  RealVector w = d.w;
  bool violated = false;
  for (int i = 0; i < 20 && !violated; ++i) {
    for (auto& v : w) v *= 2.0;
    violated = !compute_margins(w, B, grid, 0.8).satisfies_constraint();
  }
  EXPECT_TRUE(violated);
}

}  // namespace
}  // namespace ancff
