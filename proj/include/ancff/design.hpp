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

#ifndef ANCFF_DESIGN_HPP
#define ANCFF_DESIGN_HPP

// Fixed feedforward controller design: multi-repetition frequency-domain least
// squares with a Tikhonov term, subject to the per-bin vertical-boundary
// stability constraint Re(W B_x) > -rho on the nominal repetition.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "ancff/acoustic_scene.hpp"
#include "ancff/fft.hpp"
#include "ancff/spectral.hpp"
#include "ancff/types.hpp"

namespace ancff {

/// |1 + W B_x| below this value is treated as a singular closed loop.
inline constexpr double kSingularFloor = 1e-9;

enum class InitKind { zero, wiener };

struct SolverOptions {
  double tolerance = 1e-10;        // relative duality-gap / decrement target
  int max_iterations = 500;        // total Newton iterations
  double feasibility_margin = 1e-3;  // epsilon_feas on Re(W B_x) + rho

  bool operator==(const SolverOptions&) const = default;
};

struct DesignConfig {
  std::size_t filter_length = 512;
  std::size_t dft_length = 8192;
  double beta_relative = 0.01;
  double rho = 0.8;
  double r0_band_low_hz = 100.0;
  double r0_band_high_hz = 12000.0;
  std::vector<int> repetitions_used;  // empty: every repetition supplied
  std::optional<int> nominal_repetition;
  bool constrain_all_repetitions = false;
  std::size_t constraint_bin_stride = 1;
  InitKind init = InitKind::zero;
  SolverOptions solver;

  void validate() const {
    if (filter_length < 1) throw ConfigError("design.filter_length: must be >= 1");
    if (dft_length < 2 || dft_length % 2 != 0) throw ConfigError("design.dft_length: must be even and >= 2");
    if (filter_length > dft_length) throw ConfigError("design.filter_length: exceeds dft_length");
    if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("design.rho: must be in (0, 1)");
    if (!(beta_relative >= 0.0)) throw ConfigError("design.beta_relative: must be >= 0");
    if (!(solver.feasibility_margin > 0.0)) throw ConfigError("design.solver.feasibility_margin: must be > 0");
    if (solver.feasibility_margin >= rho) throw ConfigError("design.solver.feasibility_margin: must be < rho");
    if (!(solver.tolerance > 0.0)) throw ConfigError("design.solver.tolerance: must be > 0");
    if (solver.max_iterations < 1) throw ConfigError("design.solver.max_iterations: must be >= 1");
    if (constraint_bin_stride < 1) throw ConfigError("design.constraint_bin_stride: must be >= 1");
    if (!(r0_band_low_hz >= 0.0 && r0_band_low_hz < r0_band_high_hz))
      throw ConfigError("design.r0_band: need 0 <= low < high");
  }

  bool operator==(const DesignConfig&) const = default;
};

struct DesignDiagnostics {
  int iterations = 0;
  int outer_iterations = 0;
  bool converged = false;
  bool improved = false;
  double stationarity = 0.0;          // final Newton decrement / 2, relative to the starting cost
  double kkt_gradient = 0.0;          // |grad f - sum (t/s) a|_inf at the final barrier weight
  double min_constraint_margin = 0.0;  // min_k Re(W B_x(r0)) + rho
  int rejected_steps = 0;
  int singular_steps = 0;
  std::string message;
};

struct ControllerDesign {
  RealVector w;
  DesignConfig config;
  int r0 = 0;
  double beta = 0.0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  RealVector cost_trace;  // best feasible cost after each iteration
  bool feasible = false;
  DesignDiagnostics diagnostics;
};

// ---------------------------------------------------------------------------
// Nominal repetition

/// Bins k with f_low <= f_k <= f_high.
inline std::pair<std::size_t, std::size_t> band_bins(const FrequencyGrid& grid, double f_low, double f_high) {
  const double scale = static_cast<double>(grid.dft_length()) / grid.sample_rate();
  const double lo = std::ceil(f_low * scale - 1e-9);
  const double hi = std::floor(f_high * scale + 1e-9);
  const double last = static_cast<double>(grid.bins() - 1);
  if (lo > hi || lo > last || hi < 0.0) throw std::invalid_argument("band contains no DFT bins");
  return {static_cast<std::size_t>(std::max(0.0, lo)), static_cast<std::size_t>(std::min(hi, last))};
}

/// Picks the repetition whose secondary path has the smallest worst-case
/// multiplicative deviation from all others inside the band; ties go to the lowest id.
inline int select_nominal_repetition(std::span<const AcousticPathSet> paths, const FrequencyGrid& grid,
                                     double f_low, double f_high) {
  if (paths.empty()) throw std::invalid_argument("select_nominal_repetition: no repetitions");
  if (f_high > grid.sample_rate() / 2.0 + 1e-9)
    throw std::invalid_argument("select_nominal_repetition: band exceeds Nyquist");
  if (paths.size() == 1) return paths.front().repetition_id;
  const auto [k_lo, k_hi] = band_bins(grid, f_low, f_high);

  std::vector<ComplexVector> responses;
  for (const auto& p : paths) responses.push_back(fir_frequency_response(p.secondary.samples, grid));

  int best_id = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < paths.size(); ++c) {
    double peak = 0.0;
    for (const auto& v : responses[c]) peak = std::max(peak, std::abs(v));
    double worst = 0.0;
    for (std::size_t k = k_lo; k <= k_hi; ++k) {
      const double mag = std::abs(responses[c][k]);
      if (!(mag > 1e-12 * peak) || mag == 0.0) {
        std::ostringstream os;
        os << "select_nominal_repetition: |S| vanishes at " << grid.frequency_hz(k) << " Hz in repetition "
           << paths[c].repetition_id;
        throw std::domain_error(os.str());
      }
      for (std::size_t r = 0; r < paths.size(); ++r)
        if (r != c) worst = std::max(worst, std::abs(responses[r][k] - responses[c][k]) / mag);
    }
    const int id = paths[c].repetition_id;
    if (worst < best || (worst == best && id < best_id)) {
      best = worst;
      best_id = id;
    }
  }
  return best_id;
}

// ---------------------------------------------------------------------------
// Problem data on the DFT grid

struct RepetitionTerms {
  int id = 0;
  ComplexVector target;  // Phi_dx / Phi_xx (zero where unexcited)
  RealVector weight;     // Phi_xx (zero where unexcited)
  ComplexVector secondary;
  ComplexVector feedback;
};

struct ConstraintRow {
  std::size_t bin = 0;
  Complex feedback;  // B_x at this bin
};

struct DesignProblem {
  FrequencyGrid grid;
  std::size_t filter_length = 0;
  double beta = 0.0;
  double rho = 0.8;
  double margin = 1e-3;
  int r0 = 0;
  std::vector<RepetitionTerms> reps;
  std::vector<ConstraintRow> constraints;
  ComplexVector nominal_feedback;
};

namespace detail {

template <typename T>
const T& by_repetition(std::span<const T> items, int id, const char* what) {
  for (const auto& it : items)
    if (it.repetition_id == id) return it;
  throw std::invalid_argument(std::string("design: no ") + what + " for repetition " + std::to_string(id));
}

}  // namespace detail

inline std::vector<int> repetitions_of(std::span<const AcousticPathSet> paths, const DesignConfig& config) {
  if (!config.repetitions_used.empty()) return config.repetitions_used;
  std::vector<int> ids;
  for (const auto& p : paths) ids.push_back(p.repetition_id);
  return ids;
}

/// Resolves r0 (explicit or selected) and tabulates every quantity the cost needs.
inline DesignProblem make_problem(std::span<const SpectralEstimate> spectra, std::span<const AcousticPathSet> paths,
                                  const DesignConfig& config) {
  config.validate();
  const std::vector<int> used = repetitions_of(paths, config);
  if (used.empty()) throw std::invalid_argument("design: no repetitions selected");

  std::vector<AcousticPathSet> used_paths;
  for (int id : used) used_paths.push_back(detail::by_repetition(paths, id, "paths"));
  const SpectralEstimate& first = detail::by_repetition(spectra, used.front(), "spectra");
  const FrequencyGrid grid = first.grid;
  if (grid.dft_length() != config.dft_length)
    throw std::invalid_argument("design: spectra grid does not match dft_length");

  DesignProblem prob;
  prob.grid = grid;
  prob.filter_length = config.filter_length;
  prob.rho = config.rho;
  prob.margin = config.solver.feasibility_margin;
  if (config.nominal_repetition) {
    if (std::find(used.begin(), used.end(), *config.nominal_repetition) == used.end())
      throw std::invalid_argument("design: nominal repetition is not among the repetitions used");
    prob.r0 = *config.nominal_repetition;
  } else {
    prob.r0 = select_nominal_repetition(used_paths, grid, config.r0_band_low_hz,
                                        std::min(config.r0_band_high_hz, grid.sample_rate() / 2.0));
  }
  prob.beta = config.beta_relative * detail::by_repetition(spectra, prob.r0, "spectra").xx_lag0;

  for (std::size_t i = 0; i < used.size(); ++i) {
    const SpectralEstimate& s = detail::by_repetition(spectra, used[i], "spectra");
    if (!(s.grid == grid)) throw std::invalid_argument("design: spectra on different grids");
    RepetitionTerms t;
    t.id = used[i];
    t.secondary = fir_frequency_response(used_paths[i].secondary.samples, grid);
    t.feedback = fir_frequency_response(used_paths[i].feedback.samples, grid);
    t.target.assign(grid.bins(), Complex(0.0, 0.0));
    t.weight.assign(grid.bins(), 0.0);
    const auto excited = excited_bins(s.phi_xx);
    for (std::size_t k = 0; k < grid.bins(); ++k) {
      if (!excited[k]) continue;
      t.target[k] = s.phi_dx[k] / s.phi_xx[k];
      t.weight[k] = s.phi_xx[k];
    }
    if (t.id == prob.r0) prob.nominal_feedback = t.feedback;
    prob.reps.push_back(std::move(t));
  }

  const std::size_t last = grid.bins() - 1;
  for (const auto& t : prob.reps) {
    if (!config.constrain_all_repetitions && t.id != prob.r0) continue;
    for (std::size_t k = 0; k <= last; ++k) {
      if (k % config.constraint_bin_stride != 0 && k != last) continue;
      if (t.feedback[k] == Complex(0.0, 0.0)) continue;
      prob.constraints.push_back({k, t.feedback[k]});
    }
  }
  return prob;
}

// ---------------------------------------------------------------------------
// Objective, gradient, Hessian

struct ObjectiveEval {
  double value = 0.0;  // +inf when the closed loop is singular or the barrier is violated
  RealVector gradient;
  Eigen::MatrixXd hessian;
};

namespace detail {

// Real parts of sum_k z_k e^{-j Omega_k q}, q = 0 .. count - 1 (wrapping modulo L).
inline RealVector grid_cosine_sums(const ComplexVector& z_half, std::size_t dft_length, std::size_t count) {
  ComplexVector buf(dft_length, Complex(0.0, 0.0));
  std::copy(z_half.begin(), z_half.end(), buf.begin());
  const ComplexVector out = fft::forward(buf);
  RealVector r(count);
  for (std::size_t q = 0; q < count; ++q) r[q] = out[q % dft_length].real();
  return r;
}

struct EvalOptions {
  bool gradient = false;
  bool hessian = false;
  bool ignore_feedback = false;
  double barrier = 0.0;  // log-barrier weight t; 0 disables the barrier
};

inline ObjectiveEval evaluate_objective(const DesignProblem& p, std::span<const double> w, const EvalOptions& opt) {
  if (w.size() != p.filter_length) throw std::invalid_argument("design: coefficient vector has wrong length");
  const std::size_t bins = p.grid.bins();
  const std::size_t len = p.grid.dft_length();
  const ComplexVector W = fir_frequency_response(w, p.grid);
  const double reps = static_cast<double>(p.reps.size());
  const double inf = std::numeric_limits<double>::infinity();

  ObjectiveEval ev;
  ComplexVector z(bins, Complex(0.0, 0.0));
  RealVector toeplitz(bins, 0.0);
  ComplexVector hankel(bins, Complex(0.0, 0.0));

  double value = 0.0;
  for (const auto& t : p.reps) {
    for (std::size_t k = 0; k < bins; ++k) {
      const Complex B = opt.ignore_feedback ? Complex(0.0, 0.0) : t.feedback[k];
      const Complex D = 1.0 + W[k] * B;
      if (std::abs(D) < kSingularFloor) {
        if (opt.gradient || opt.hessian)
          throw SingularityError("design: closed loop singular at bin " + std::to_string(k), k);
        ev.value = inf;
        return ev;
      }
      if (t.weight[k] == 0.0) continue;
      const Complex G1 = 1.0 / (D * D);
      const Complex e = t.target[k] - W[k] / D * t.secondary[k];
      value += t.weight[k] * std::norm(e);
      if (opt.gradient) z[k] += -2.0 * t.weight[k] * std::conj(e) * t.secondary[k] * G1;
      if (opt.hessian) {
        toeplitz[k] += 2.0 * t.weight[k] * std::norm(t.secondary[k]) * std::norm(G1);
        hankel[k] += 4.0 * t.weight[k] * std::conj(e) * t.secondary[k] * B / (D * D * D);
      }
    }
  }
  for (std::size_t k = 0; k < bins; ++k) {
    value += p.beta * reps * std::norm(W[k]);
    if (opt.gradient) z[k] += 2.0 * p.beta * reps * std::conj(W[k]);
    if (opt.hessian) toeplitz[k] += 2.0 * p.beta * reps;
  }

  if (opt.barrier > 0.0) {
    const double tb = opt.barrier;
    for (const auto& row : p.constraints) {
      const double s = (W[row.bin] * row.feedback).real() + p.rho - p.margin;
      if (!(s > 0.0)) {
        ev.value = inf;
        return ev;
      }
      value -= tb * std::log(s);
      if (opt.gradient) z[row.bin] += -tb * row.feedback / s;
      if (opt.hessian) {
        toeplitz[row.bin] += 0.5 * tb * std::norm(row.feedback) / (s * s);
        hankel[row.bin] += 0.5 * tb * row.feedback * row.feedback / (s * s);
      }
    }
  }

  ev.value = value;
  const std::size_t n = p.filter_length;
  if (opt.gradient) ev.gradient = grid_cosine_sums(z, len, n);
  if (opt.hessian) {
    ComplexVector tz(bins);
    for (std::size_t k = 0; k < bins; ++k) tz[k] = toeplitz[k];
    const RealVector tc = grid_cosine_sums(tz, len, n);
    const RealVector hc = grid_cosine_sums(hankel, len, 2 * n - 1);
    ev.hessian.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t m = 0; m < n; ++m)
      for (std::size_t q = 0; q < n; ++q)
        ev.hessian(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(q)) =
            tc[m > q ? m - q : q - m] + hc[m + q];
  }
  return ev;
}

}  // namespace detail

/// Regularized multi-repetition cost; +inf if 1 + W B_x vanishes at any bin.
inline double cost(const DesignProblem& problem, std::span<const double> w) {
  return detail::evaluate_objective(problem, w, {}).value;
}

/// Exact gradient of `cost` with respect to the filter taps.
inline RealVector cost_gradient(const DesignProblem& problem, std::span<const double> w) {
  detail::EvalOptions opt;
  opt.gradient = true;
  return detail::evaluate_objective(problem, w, opt).gradient;
}

/// Exact Hessian of `cost`.
inline Eigen::MatrixXd cost_hessian(const DesignProblem& problem, std::span<const double> w) {
  detail::EvalOptions opt;
  opt.hessian = true;
  return detail::evaluate_objective(problem, w, opt).hessian;
}

inline double cost(std::span<const double> w, std::span<const SpectralEstimate> spectra,
                   std::span<const AcousticPathSet> paths, const DesignConfig& config) {
  return cost(make_problem(spectra, paths, config), w);
}

inline RealVector cost_gradient(std::span<const double> w, std::span<const SpectralEstimate> spectra,
                                std::span<const AcousticPathSet> paths, const DesignConfig& config) {
  return cost_gradient(make_problem(spectra, paths, config), w);
}

// ---------------------------------------------------------------------------
// Stability constraint

/// c_k = |W B|^2 - |W B + 2 rho|^2; the design is feasible when every c_k < 0.
inline RealVector stability_constraint(std::span<const Complex> W, std::span<const Complex> B_nominal, double rho) {
  if (W.size() != B_nominal.size()) throw std::invalid_argument("stability_constraint: size mismatch");
  RealVector c(W.size());
  for (std::size_t k = 0; k < W.size(); ++k) {
    const Complex v = W[k] * B_nominal[k];
    c[k] = std::norm(v) - std::norm(v + 2.0 * rho);
  }
  return c;
}

inline RealVector stability_constraint(std::span<const double> w, std::span<const Complex> B_nominal, double rho) {
  if (B_nominal.size() < 2) throw std::invalid_argument("stability_constraint: grid too small");
  const FrequencyGrid grid(2 * (B_nominal.size() - 1), 1.0);
  const ComplexVector W = fir_frequency_response(w, grid);
  return stability_constraint(W, B_nominal, rho);
}

/// min_k Re(W B) + rho over the nominal feedback response.
inline double constraint_margin(const DesignProblem& p, std::span<const double> w) {
  const ComplexVector W = fir_frequency_response(w, p.grid);
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < W.size(); ++k) m = std::min(m, (W[k] * p.nominal_feedback[k]).real() + p.rho);
  return m;
}

// ---------------------------------------------------------------------------
// Optimizer

namespace detail {

// Largest fraction of the barrier rows' slack usable along `dir`.
inline double max_feasible_step(const DesignProblem& p, const ComplexVector& W, const ComplexVector& Wdir) {
  double step = std::numeric_limits<double>::infinity();
  for (const auto& row : p.constraints) {
    const double s = (W[row.bin] * row.feedback).real() + p.rho - p.margin;
    const double ds = (Wdir[row.bin] * row.feedback).real();
    if (ds < 0.0) step = std::min(step, -s / ds);
  }
  return step;
}

// Shrinks w toward zero until every barrier row keeps at least `keep` of rho - margin.
inline RealVector scale_into_interior(const DesignProblem& p, RealVector w, double keep = 0.1) {
  const ComplexVector W = fir_frequency_response(w, p.grid);
  double scale = 1.0;
  const double slack = p.rho - p.margin;
  for (const auto& row : p.constraints) {
    const double re = (W[row.bin] * row.feedback).real();
    if (re < 0.0) scale = std::min(scale, (1.0 - keep) * slack / -re);
  }
  for (auto& v : w) v *= scale;
  return w;
}

inline Eigen::VectorXd to_eigen(std::span<const double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Solves (H + lambda I) d = -g with the smallest lambda (from a geometric ladder) giving a
// positive definite matrix.
inline Eigen::VectorXd modified_newton_direction(const Eigen::MatrixXd& H, const Eigen::VectorXd& g) {
  const double scale = std::max(H.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  double lambda = 0.0;
  for (int attempt = 0; attempt < 60; ++attempt) {
    Eigen::MatrixXd M = H;
    if (lambda > 0.0) M.diagonal().array() += lambda;
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    if (llt.info() == Eigen::Success) {
      Eigen::VectorXd d = llt.solve(-g);
      if (d.allFinite() && d.dot(g) < 0.0) return d;
    }
    lambda = lambda == 0.0 ? 1e-12 * scale : lambda * 10.0;
  }
  return -g / scale;
}

}  // namespace detail

/// Minimizer of the cost with the feedback term removed (a linear least-squares problem).
inline RealVector feedforward_wiener(const DesignProblem& p) {
  detail::EvalOptions opt;
  opt.gradient = true;
  opt.hessian = true;
  opt.ignore_feedback = true;
  const RealVector zero(p.filter_length, 0.0);
  const ObjectiveEval ev = detail::evaluate_objective(p, zero, opt);
  const Eigen::VectorXd d = detail::modified_newton_direction(ev.hessian, detail::to_eigen(ev.gradient));
  return RealVector(d.data(), d.data() + d.size());
}

/// Log-barrier interior-point method with modified Newton steps. Every iterate
/// strictly satisfies Re(W B_x) + rho > feasibility_margin on the constrained rows.
inline ControllerDesign optimize(const DesignProblem& p, const DesignConfig& config,
                                 std::optional<RealVector> w_init = std::nullopt) {
  ControllerDesign out;
  out.config = config;
  out.r0 = p.r0;
  out.beta = p.beta;
  const std::size_t n = p.filter_length;
  const SolverOptions& so = config.solver;

  RealVector start;
  if (w_init) {
    if (w_init->size() != n) throw std::invalid_argument("optimize: w_init has wrong length");
    start = *w_init;
  } else if (config.init == InitKind::wiener) {
    start = feedforward_wiener(p);
  } else {
    start.assign(n, 0.0);
  }
  if (!p.constraints.empty()) {
    const ComplexVector W0 = fir_frequency_response(start, p.grid);
    bool interior = true;
    for (const auto& row : p.constraints)
      if (!((W0[row.bin] * row.feedback).real() + p.rho - p.margin > 0.0)) interior = false;
    if (!interior || config.init == InitKind::wiener) start = detail::scale_into_interior(p, start);
  }

  const RealVector zero(n, 0.0);
  // A start that is singular on a non-nominal repetition falls back to the zero filter.
  if (!std::isfinite(cost(p, start))) start = zero;
  out.initial_cost = cost(p, start);
  const double f_scale = std::max(out.initial_cost, std::numeric_limits<double>::min());

  RealVector w = start;
  RealVector best = w;
  double best_cost = cost(p, w);
  out.cost_trace.push_back(best_cost);

  const double rows = static_cast<double>(p.constraints.size());
  double t = rows > 0.0 ? 1e-2 * f_scale / rows : 0.0;
  const double t_final = rows > 0.0 ? so.tolerance * f_scale / rows : 0.0;

  int iterations = 0;
  bool hit_limit = false;
  bool last_inner_converged = false;
  double stationarity = 0.0;
  double kkt_gradient = 0.0;

  while (true) {
    ++out.diagnostics.outer_iterations;
    last_inner_converged = false;
    detail::EvalOptions opt;
    opt.gradient = true;
    opt.hessian = true;
    opt.barrier = t;
    while (iterations < so.max_iterations) {
      const ObjectiveEval ev = detail::evaluate_objective(p, w, opt);
      const Eigen::VectorXd g = detail::to_eigen(ev.gradient);
      const Eigen::VectorXd dir = detail::modified_newton_direction(ev.hessian, g);
      const double decrement = -g.dot(dir);
      stationarity = std::max(0.0, 0.5 * decrement) / f_scale;
      kkt_gradient = g.cwiseAbs().maxCoeff();
      if (!(decrement > 0.0) || stationarity <= so.tolerance) {
        last_inner_converged = true;
        break;
      }
      ++iterations;

      const RealVector dvec(dir.data(), dir.data() + dir.size());
      const ComplexVector Wdir = fir_frequency_response(dvec, p.grid);
      const ComplexVector W = fir_frequency_response(w, p.grid);
      double step = std::min(1.0, 0.99 * detail::max_feasible_step(p, W, Wdir));
      detail::EvalOptions value_only;
      value_only.barrier = t;
      bool accepted = false;
      RealVector trial(n);
      for (int ls = 0; ls < 60; ++ls) {
        for (std::size_t i = 0; i < n; ++i) trial[i] = w[i] + step * dvec[i];
        const double phi = detail::evaluate_objective(p, trial, value_only).value;
        if (!std::isfinite(phi)) {
          ++out.diagnostics.singular_steps;
        } else if (phi <= ev.value - 1e-4 * step * decrement) {
          accepted = true;
          break;
        }
        ++out.diagnostics.rejected_steps;
        step *= 0.5;
      }
      if (!accepted) {
        last_inner_converged = true;  // stalled at working precision
        break;
      }
      w = trial;
      const double f = cost(p, w);
      if (f < best_cost) {
        best_cost = f;
        best = w;
      }
      out.cost_trace.push_back(best_cost);
    }
    if (iterations >= so.max_iterations && !last_inner_converged) {
      hit_limit = true;
      break;
    }
    if (rows == 0.0 || t <= t_final) break;
    t = std::max(t * 0.1, t_final);
  }

  out.diagnostics.iterations = iterations;
  out.diagnostics.stationarity = stationarity;
  out.diagnostics.kkt_gradient = kkt_gradient;
  out.diagnostics.converged = !hit_limit;
  out.diagnostics.message = hit_limit ? "maximum iterations reached" : "converged";

  if (best_cost < out.initial_cost) {
    out.w = best;
    out.final_cost = best_cost;
    out.diagnostics.improved = true;
  } else {
    out.w = start;
    out.final_cost = out.initial_cost;
    out.diagnostics.improved = false;
    if (!hit_limit) out.diagnostics.message = "no feasible improvement found";
  }
  out.diagnostics.min_constraint_margin = constraint_margin(p, out.w);

  const ComplexVector Wf = fir_frequency_response(out.w, p.grid);
  bool feasible = true;
  for (const auto& row : p.constraints)
    if (!((Wf[row.bin] * row.feedback).real() + p.rho >= p.margin)) feasible = false;
  out.feasible = feasible;
  return out;
}

inline ControllerDesign optimize(std::span<const SpectralEstimate> spectra, std::span<const AcousticPathSet> paths,
                                 const DesignConfig& config, std::optional<RealVector> w_init = std::nullopt) {
  return optimize(make_problem(spectra, paths, config), config, std::move(w_init));
}

}  // namespace ancff

#endif  // ANCFF_DESIGN_HPP
