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

#ifndef ANCFF_COMMANDS_HPP
#define ANCFF_COMMANDS_HPP

// The four experiment commands behind the ancff executable. Each takes a
// validated ExperimentConfig, writes its artifacts under config.out_dir and
// returns a process exit code.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ancff/acoustic_scene.hpp"
#include "ancff/design.hpp"
#include "ancff/evaluate.hpp"
#include "ancff/experiment.hpp"
#include "ancff/margins.hpp"
#include "ancff/scene_io.hpp"
#include "ancff/text_io.hpp"
#include "ancff/wav.hpp"

namespace ancff {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitIngestion = 3,
  kExitInfeasible = 4,
  kExitSingular = 5,
};

/// A controller loaded from disk together with what its sidecar says about it.
struct StoredController {
  NamedDesign design;
  std::optional<int> r0;
};

namespace detail {

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline nlohmann::ordered_json number_or_string(double v) {
  if (std::isfinite(v)) return v;
  return text::format_double(v);
}

inline nlohmann::ordered_json margins_json(const StabilityReport& m, const FrequencyGrid& grid) {
  nlohmann::ordered_json j;
  j["rho"] = m.rho;
  j["gain_margin"] = number_or_string(m.gain_margin);
  j["phase_margin_deg"] = m.phase_margin_deg ? nlohmann::ordered_json(*m.phase_margin_deg) : nlohmann::ordered_json("undefined");
  j["phase_crossover_hz"] = m.phase_crossover_hz ? nlohmann::ordered_json(*m.phase_crossover_hz) : nlohmann::ordered_json();
  j["gain_crossover_hz"] = m.gain_crossover_hz ? nlohmann::ordered_json(*m.gain_crossover_hz) : nlohmann::ordered_json();
  j["encirclements"] = m.encirclements;
  j["min_real"] = m.min_real;
  j["satisfies_constraint"] = m.satisfies_constraint();
  nlohmann::ordered_json bins = nlohmann::ordered_json::array();
  for (std::size_t k : m.violation_bins) bins.push_back(grid.frequency_hz(k));
  j["violation_hz"] = bins;
  return j;
}

inline std::string describe_margins(const StabilityReport& m) {
  std::ostringstream os;
  os << "GM " << (std::isinf(m.gain_margin) ? std::string("inf") : text::format_double(m.gain_margin))
     << ", PM " << (m.phase_margin_deg ? text::format_double(*m.phase_margin_deg) + " deg" : std::string("undefined"))
     << ", encirclements " << m.encirclements << ", min Re(W B_x) " << text::format_double(m.min_real);
  if (!m.satisfies_constraint()) os << ", VIOLATED at " << m.violation_bins.size() << " bins";
  return os.str();
}

inline std::string controller_name(const FieldChoice& field, std::size_t repetitions) {
  return "w_" + field.tag() + (repetitions > 1 ? "_ri" : "");
}

inline void prepare_out(const ExperimentConfig& c) {
  std::error_code ec;
  std::filesystem::create_directories(c.out_dir, ec);
  if (ec || !std::filesystem::is_directory(c.out_dir))
    throw ConfigError("out: cannot create output directory " + c.out_dir);
}

inline std::string out_path(const ExperimentConfig& c, const std::string& name) {
  return (std::filesystem::path(c.out_dir) / name).string();
}

inline const AcousticPathSet& repetition(const std::vector<AcousticPathSet>& scene, int id, const std::string& field) {
  for (const auto& s : scene)
    if (s.repetition_id == id) return s;
  throw ConfigError(field + ": repetition " + std::to_string(id) + " not in scene");
}

inline SweepSettings sweep_settings(const ExperimentConfig& c) {
  SweepSettings s;
  s.resolution_deg = c.doa_resolution_deg;
  s.band = c.band;
  s.duration_s = c.duration_s;
  s.seed = c.evaluation_seed;
  s.secondary_length = c.secondary_length;
  s.dft_length = c.design.dft_length;
  return s;
}

inline NoiseFieldSpec field_spec(const FieldChoice& f, double duration_s, double fs, std::uint64_t seed) {
  if (f.kind == FieldKind::diffuse) return NoiseFieldSpec::diffuse_field(duration_s, fs, seed);
  return NoiseFieldSpec::single(Doa(f.doa_deg), duration_s, fs, seed);
}

}  // namespace detail

/// Ingests the configured archive, or synthesizes the scene when none is given.
inline std::vector<AcousticPathSet> load_scene(const ExperimentConfig& c, std::ostream& log) {
  if (!c.archive.empty()) return ingest_scene(c.archive);
  std::vector<std::string> warnings;
  auto scene = synthesize_scene(c.synthetic, &warnings);
  for (const auto& w : warnings) log << "warning: " << w << "\n";
  return scene;
}

/// Spectral estimates for the calibration field, one per requested repetition.
/// Each repetition gets its own noise realization derived from the seed.
inline std::vector<SpectralEstimate> calibration_spectra(const ExperimentConfig& c,
                                                         const std::vector<AcousticPathSet>& scene,
                                                         const std::vector<int>& reps) {
  std::vector<SpectralEstimate> out;
  for (int r : reps) {
    const AcousticPathSet& p = detail::repetition(scene, r, "design.repetitions_used");
    const FrequencyGrid grid(c.design.dft_length, p.sample_rate);
    const auto field = detail::field_spec(c.field, c.duration_s, p.sample_rate,
                                          derive_seed(c.seed, static_cast<std::uint64_t>(r)));
    const IncidentSignals sig = simulate_incident(p, field);
    out.push_back(estimate_spectra(sig.x, sig.d, c.secondary_length, c.design.filter_length, grid, r));
  }
  return out;
}

inline StoredController load_controller(const std::string& path) {
  namespace fs = std::filesystem;
  const fs::path p(path);
  if (!fs::exists(p)) throw IngestionError("controller file not found: " + path);
  StoredController sc;
  if (p.extension() == ".json") {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text::read_file(path));
      sc.design.id = j.at("id").get<std::string>();
      sc.design.w = text::read_column_csv((p.parent_path() / j.at("coefficients_csv").get<std::string>()).string());
      sc.design.repetitions_used = j.at("repetitions_used").get<std::vector<int>>();
      sc.r0 = j.at("r0").get<int>();
    } catch (const nlohmann::json::exception& e) {
      throw IngestionError("controller sidecar " + path + ": " + e.what());
    }
  } else if (p.extension() == ".wav") {
    sc.design.id = p.stem().string();
    sc.design.w = wav::read(path).samples;
  } else {
    sc.design.id = p.stem().string();
    sc.design.w = text::read_column_csv(path);
  }
  if (sc.design.w.empty()) throw IngestionError("controller " + path + " has no coefficients");
  return sc;
}

// ---------------------------------------------------------------------------

inline int cmd_synth(const ExperimentConfig& c, std::ostream& log) {
  if (!c.archive.empty()) throw ConfigError("scene.archive: synth writes a new archive; leave the source empty");
  c.validate();
  detail::prepare_out(c);
  const auto scene = load_scene(c, log);
  const std::filesystem::path dir = std::filesystem::path(c.out_dir) / "scene";
  export_scene(scene, dir, c.archive_encoding);
  log << "scene: " << dir.string() << "\n"
      << "  repetitions " << scene.size() << ", DoAs per repetition " << scene.front().doa_paths.size()
      << " (" << text::format_double(c.synthetic.doa_resolution_deg) << " deg grid), fs "
      << text::format_double(scene.front().sample_rate) << " Hz\n"
      << "  path lengths: h " << scene.front().doa_paths.front().h_x.samples.size() << ", S "
      << scene.front().secondary.samples.size() << ", B_x " << scene.front().feedback.samples.size() << "\n";
  std::ostringstream hex;
  hex << std::hex << std::setw(16) << std::setfill('0') << archive_checksum(dir);
  log << "  checksum " << hex.str() << "\n";
  return kExitOk;
}

inline int cmd_design(const ExperimentConfig& c, std::ostream& log) {
  c.validate();
  detail::prepare_out(c);
  const auto scene = load_scene(c, log);
  std::vector<int> reps = c.design.repetitions_used;
  if (reps.empty())
    for (const auto& s : scene) reps.push_back(s.repetition_id);
  for (int r : reps) (void)detail::repetition(scene, r, "design.repetitions_used");

  const auto spectra = calibration_spectra(c, scene, reps);
  DesignConfig dc = c.design;
  dc.repetitions_used = reps;
  const ControllerDesign d = optimize(spectra, scene, dc);

  const std::string name = detail::controller_name(c.field, reps.size());
  const AcousticPathSet& nominal = detail::repetition(scene, d.r0, "design.nominal_repetition");
  const FrequencyGrid grid(dc.dft_length, nominal.sample_rate);
  const StabilityReport m =
      compute_margins(d.w, fir_frequency_response(nominal.feedback.samples, grid), grid, dc.rho);

  text::write_file(detail::out_path(c, name + ".csv"), text::column_csv(d.w));
  wav::write_float32(detail::out_path(c, name + ".wav"), d.w, static_cast<std::uint32_t>(nominal.sample_rate));

  nlohmann::ordered_json j;
  j["id"] = name;
  j["created_utc"] = detail::utc_timestamp();
  j["coefficients_csv"] = name + ".csv";
  j["coefficients_wav"] = name + ".wav";
  j["field"] = c.field.str();
  j["repetitions_used"] = reps;
  j["r0"] = d.r0;
  j["beta"] = d.beta;
  j["initial_cost"] = d.initial_cost;
  j["final_cost"] = d.final_cost;
  j["feasible"] = d.feasible;
  j["diagnostics"] = {{"iterations", d.diagnostics.iterations},
                      {"outer_iterations", d.diagnostics.outer_iterations},
                      {"converged", d.diagnostics.converged},
                      {"improved", d.diagnostics.improved},
                      {"stationarity", d.diagnostics.stationarity},
                      {"kkt_gradient", d.diagnostics.kkt_gradient},
                      {"min_constraint_margin", d.diagnostics.min_constraint_margin},
                      {"rejected_steps", d.diagnostics.rejected_steps},
                      {"singular_steps", d.diagnostics.singular_steps},
                      {"message", d.diagnostics.message}};
  j["margins"] = detail::margins_json(m, grid);
  j["cost_trace"] = d.cost_trace;
  j["config"] = to_json(c);
  text::write_file(detail::out_path(c, name + ".json"), j.dump(2) + "\n");

  log << name << ": field " << c.field.str() << ", " << reps.size() << " repetition(s), r0 = " << d.r0 << "\n"
      << "  cost " << text::format_double(d.initial_cost) << " -> " << text::format_double(d.final_cost) << " in "
      << d.diagnostics.iterations << " iterations (" << d.diagnostics.message << ")\n"
      << "  " << detail::describe_margins(m) << "\n"
      << "  wrote " << detail::out_path(c, name + ".{csv,wav,json}") << "\n";
  if (!d.feasible) {
    log << "error: design does not satisfy the stability constraint\n";
    return kExitInfeasible;
  }
  return kExitOk;
}

namespace detail {

inline std::string profile_csv(const AttenuationProfile& p) {
  std::string out = "doa_deg,attenuation_db,p_on,p_off\n";
  for (const auto& e : p.per_doa)
    out += text::format_double(e.doa.degrees()) + "," + text::format_double(e.attenuation_db) + "," +
           text::format_double(e.p_on) + "," + text::format_double(e.p_off) + "\n";
  return out;
}

inline std::string frequency_csv(const FrequencyProfile& f) {
  std::string out = "freq_hz,phi_dd,phi_ee,attenuation_db\n";
  for (std::size_t k = 0; k < f.frequency_hz.size(); ++k) {
    out += text::format_double(f.frequency_hz[k]) + "," + text::format_double(f.phi_dd[k]) + "," +
           text::format_double(f.phi_ee[k]) + ",";
    if (!std::isnan(f.attenuation_db[k])) out += text::format_double(f.attenuation_db[k]);
    out += "\n";
  }
  return out;
}

inline std::string fixed(double v, int digits = 2) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

inline void summarize_profile(std::ostream& os, const AttenuationProfile& p) {
  const auto best = std::min_element(p.per_doa.begin(), p.per_doa.end(),
                                     [](const auto& a, const auto& b) { return a.attenuation_db < b.attenuation_db; });
  const auto worst = std::max_element(p.per_doa.begin(), p.per_doa.end(),
                                      [](const auto& a, const auto& b) { return a.attenuation_db < b.attenuation_db; });
  os << p.controller_id << " on repetition " << p.repetition_id << ": best " << fixed(best->attenuation_db)
     << " dB at " << fixed(best->doa.degrees(), 1) << " deg, worst " << fixed(worst->attenuation_db) << " dB at "
     << fixed(worst->doa.degrees(), 1) << " deg";
  for (double deg : {kIpsilateralDeg, kContralateralDeg}) {
    for (const auto& e : p.per_doa)
      if (e.doa.matches(Doa(deg))) os << ", " << fixed(deg, 0) << " deg: " << fixed(e.attenuation_db) << " dB";
  }
  os << "\n";
}

}  // namespace detail

inline int cmd_evaluate(const ExperimentConfig& c, std::ostream& log) {
  c.validate();
  if (c.controllers.empty()) throw ConfigError("evaluation.controllers: no controller files given");
  detail::prepare_out(c);
  const auto scene = load_scene(c, log);
  std::vector<StoredController> stored;
  for (const auto& path : c.controllers) stored.push_back(load_controller(path));
  const SweepSettings settings = detail::sweep_settings(c);

  std::ostringstream summary;
  summary << "plan " << to_string(c.plan) << ", band " << text::format_double(c.band.f_low) << "-"
          << text::format_double(c.band.f_high) << " Hz\n";
  bool violated = false;

  auto margin_line = [&](const StoredController& sc, const AcousticPathSet& p) {
    const FrequencyGrid grid(c.design.dft_length, p.sample_rate);
    const auto m = compute_margins(sc.design.w, fir_frequency_response(p.feedback.samples, grid), grid, c.design.rho);
    violated = violated || !m.satisfies_constraint();
    summary << "  margins on repetition " << p.repetition_id << ": " << detail::describe_margins(m) << "\n";
  };

  switch (c.plan) {
    case EvaluationPlan::sweep: {
      const AcousticPathSet& p = detail::repetition(scene, c.evaluation_repetition, "evaluation.repetition");
      for (const auto& sc : stored) {
        const auto prof = doa_sweep(sc.design.w, p, settings, sc.design.id);
        const std::string file = sc.design.id + "_sweep_rep" + std::to_string(p.repetition_id) + ".csv";
        text::write_file(detail::out_path(c, file), detail::profile_csv(prof));
        detail::summarize_profile(summary, prof);
        margin_line(sc, p);
        summary << "  wrote " << file << "\n";
      }
      break;
    }
    case EvaluationPlan::reinsertion: {
      std::vector<NamedDesign> designs;
      for (const auto& sc : stored) designs.push_back(sc.design);
      for (const auto& d : designs)
        if (std::find(d.repetitions_used.begin(), d.repetitions_used.end(), c.held_out) != d.repetitions_used.end())
          throw ConfigError("evaluation.held_out: controller '" + d.id + "' was designed with repetition " +
                            std::to_string(c.held_out));
      const ReinsertionTable t = reinsertion_experiment(designs, scene, c.held_out, settings);
      std::string csv = "doa_deg";
      for (const auto& id : t.controller_ids) csv += "," + id;
      csv += "\n";
      for (std::size_t i = 0; i < t.profiles.front().per_doa.size(); ++i) {
        csv += text::format_double(t.profiles.front().per_doa[i].doa.degrees());
        for (const auto& p : t.profiles) csv += "," + text::format_double(p.per_doa[i].attenuation_db);
        csv += "\n";
      }
      const std::string file = "reinsertion_rep" + std::to_string(c.held_out) + ".csv";
      text::write_file(detail::out_path(c, file), csv);
      const AcousticPathSet& held = detail::repetition(scene, c.held_out, "evaluation.held_out");
      for (std::size_t i = 0; i < t.profiles.size(); ++i) {
        detail::summarize_profile(summary, t.profiles[i]);
        margin_line(stored[i], held);
      }
      for (std::size_t i = 1; i < t.profiles.size(); ++i)
        for (double deg : {kIpsilateralDeg, kContralateralDeg})
          summary << t.controller_ids[i] << " vs " << t.controller_ids[0] << " at " << detail::fixed(deg, 0)
                  << " deg: " << detail::fixed(t.improvement(0, i, Doa(deg))) << " dB improvement\n";
      summary << "wrote " << file << "\n";
      break;
    }
    case EvaluationPlan::frequency: {
      const AcousticPathSet& p = detail::repetition(scene, c.evaluation_repetition, "evaluation.repetition");
      const FrequencyGrid grid(c.design.dft_length, p.sample_rate);
      const auto field = detail::field_spec(c.evaluation_field, c.duration_s, p.sample_rate, c.evaluation_seed);
      const IncidentSignals sig = simulate_incident(p, field);
      for (const auto& sc : stored) {
        const auto est = estimate_spectra(sig.x, sig.d, c.secondary_length, sc.design.w.size(), grid, p.repetition_id);
        const auto fp = frequency_profile(sc.design.w, est, p);
        const std::string file = sc.design.id + "_frequency_rep" + std::to_string(p.repetition_id) + ".csv";
        text::write_file(detail::out_path(c, file), detail::frequency_csv(fp));
        summary << sc.design.id << " (" << c.evaluation_field.str() << " field, repetition " << p.repetition_id
                << "): band attenuation " << detail::fixed(attenuation_db(band_power(fp.phi_ee, c.band, grid),
                                                                          band_power(fp.phi_dd, c.band, grid)))
                << " dB\n";
        margin_line(sc, p);
        summary << "  wrote " << file << "\n";
      }
      break;
    }
  }
  if (violated) summary << "warning: at least one controller violates the stability constraint\n";
  text::write_file(detail::out_path(c, "summary_" + to_string(c.plan) + ".txt"), summary.str());
  log << summary.str();
  return kExitOk;
}

inline int cmd_margins(const ExperimentConfig& c, std::ostream& log) {
  c.validate();
  if (c.controllers.empty()) throw ConfigError("evaluation.controllers: no controller files given");
  detail::prepare_out(c);
  const auto scene = load_scene(c, log);
  bool violated = false;
  for (const auto& path : c.controllers) {
    const StoredController sc = load_controller(path);
    const int r = sc.r0.value_or(c.evaluation_repetition);
    const AcousticPathSet& p = detail::repetition(scene, r, "evaluation.repetition");
    const FrequencyGrid grid(c.design.dft_length, p.sample_rate);
    const StabilityReport m =
        compute_margins(sc.design.w, fir_frequency_response(p.feedback.samples, grid), grid, c.design.rho);
    nlohmann::ordered_json j = detail::margins_json(m, grid);
    j["id"] = sc.design.id;
    j["repetition"] = r;
    j["created_utc"] = detail::utc_timestamp();
    text::write_file(detail::out_path(c, sc.design.id + "_margins.json"), j.dump(2) + "\n");
    log << sc.design.id << " (repetition " << r << "): " << detail::describe_margins(m) << "\n";
    if (!m.satisfies_constraint()) {
      violated = true;
      log << "  violation at";
      for (std::size_t k : m.violation_bins) log << " " << detail::fixed(grid.frequency_hz(k), 1);
      log << " Hz\n";
    }
  }
  return violated ? kExitInfeasible : kExitOk;
}

/// Runs `fn` and maps the library's error types onto exit codes.
template <typename Fn>
int run_guarded(Fn&& fn, std::ostream& err) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IngestionError& e) {
    err << "ingestion error: " << e.what() << "\n";
    return kExitIngestion;
  } catch (const SingularityError& e) {
    err << "singular closed loop: " << e.what() << "\n";
    return kExitSingular;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace ancff

#endif  // ANCFF_COMMANDS_HPP
