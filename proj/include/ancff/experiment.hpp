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

#ifndef ANCFF_EXPERIMENT_HPP
#define ANCFF_EXPERIMENT_HPP

// Declarative experiment configuration (JSON) shared by all CLI subcommands.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "ancff/acoustic_scene.hpp"
#include "ancff/design.hpp"
#include "ancff/evaluate.hpp"
#include "ancff/scene_io.hpp"
#include "ancff/types.hpp"

namespace ancff {

/// Calibration / evaluation noise field as named on the command line:
/// "diffuse", "ipsi", "contra" or "doa:<degrees>".
struct FieldChoice {
  FieldKind kind = FieldKind::diffuse;
  double doa_deg = kIpsilateralDeg;

  static FieldChoice parse(const std::string& s) {
    if (s == "diffuse" || s == "diff") return {FieldKind::diffuse, kIpsilateralDeg};
    if (s == "ipsi") return {FieldKind::single_doa, kIpsilateralDeg};
    if (s == "contra") return {FieldKind::single_doa, kContralateralDeg};
    if (s.rfind("doa:", 0) == 0) {
      try {
        std::size_t used = 0;
        const double deg = std::stod(s.substr(4), &used);
        if (used != s.size() - 4) throw std::invalid_argument(s);
        return {FieldKind::single_doa, Doa::normalize(deg)};
      } catch (const std::exception&) {
        throw ConfigError("field: cannot parse DoA in '" + s + "'");
      }
    }
    throw ConfigError("field: expected diffuse, ipsi, contra or doa:<deg>, got '" + s + "'");
  }

  std::string str() const {
    if (kind == FieldKind::diffuse) return "diffuse";
    if (Doa(doa_deg).matches(Doa(kIpsilateralDeg))) return "ipsi";
    if (Doa(doa_deg).matches(Doa(kContralateralDeg))) return "contra";
    return "doa:" + text::format_double(doa_deg);
  }

  /// Short tag used in controller names: diff, ipsi, contra, doa<deg>.
  std::string tag() const {
    const std::string s = str();
    if (s == "diffuse") return "diff";
    if (s.rfind("doa:", 0) == 0) return "doa" + s.substr(4);
    return s;
  }

  std::optional<Doa> calibration_doa() const {
    if (kind == FieldKind::diffuse) return std::nullopt;
    return Doa(doa_deg);
  }

  bool operator==(const FieldChoice&) const = default;
};

enum class EvaluationPlan { sweep, reinsertion, frequency };

inline std::string to_string(EvaluationPlan p) {
  switch (p) {
    case EvaluationPlan::sweep: return "sweep";
    case EvaluationPlan::reinsertion: return "reinsertion";
    case EvaluationPlan::frequency: return "frequency";
  }
  return "sweep";
}

inline EvaluationPlan parse_plan(const std::string& s) {
  if (s == "sweep") return EvaluationPlan::sweep;
  if (s == "reinsertion") return EvaluationPlan::reinsertion;
  if (s == "frequency") return EvaluationPlan::frequency;
  throw ConfigError("evaluation.plan: expected sweep, reinsertion or frequency, got '" + s + "'");
}

struct ExperimentConfig {
  std::string preset = "paper";

  // scene
  std::string archive;  // empty: synthesize
  SyntheticSceneConfig synthetic;
  IrEncoding archive_encoding = IrEncoding::csv;

  // calibration
  FieldChoice field{FieldKind::diffuse, kIpsilateralDeg};
  double duration_s = 4.0;
  std::size_t secondary_length = 712;  // L_s
  std::uint64_t seed = 0;

  DesignConfig design;

  // evaluation
  EvaluationPlan plan = EvaluationPlan::sweep;
  EvaluationBand band;
  double doa_resolution_deg = 7.5;
  int evaluation_repetition = 0;
  int held_out = 6;
  FieldChoice evaluation_field{FieldKind::diffuse, kIpsilateralDeg};
  std::uint64_t evaluation_seed = 1;
  std::vector<std::string> controllers;

  std::string out_dir = "out";

  bool operator==(const ExperimentConfig&) const = default;

  std::size_t lag_max() const { return secondary_length + design.filter_length - 1; }

  void validate() const {
    synthetic.validate();
    design.validate();
    if (!(duration_s > 0.0)) throw ConfigError("calibration.duration_s: must be > 0");
    if (secondary_length < 1) throw ConfigError("calibration.secondary_length: must be >= 1");
    if (2 * lag_max() + 1 > design.dft_length)
      throw ConfigError("calibration.secondary_length: correlation span 2 (L_s + L_w - 1) + 1 exceeds dft_length");
    const double fs = archive.empty() ? synthetic.sample_rate : 0.0;
    if (fs > 0.0 && static_cast<double>(2 * lag_max()) > duration_s * fs)
      throw ConfigError("calibration.duration_s: record shorter than twice the correlation lag span");
    if (!(band.f_low >= 0.0 && band.f_low < band.f_high)) throw ConfigError("evaluation.band: need 0 <= f_low < f_high");
    if (fs > 0.0 && band.f_high > fs / 2.0) throw ConfigError("evaluation.band.f_high: above Nyquist");
    if (!(doa_resolution_deg > 0.0 && doa_resolution_deg <= 360.0))
      throw ConfigError("evaluation.doa_resolution_deg: must be in (0, 360]");
    if (out_dir.empty()) throw ConfigError("out: output directory must be set");
  }
};

/// Parameter set of a named preset. "paper" mirrors the published setup,
/// "fast" shrinks the DFT and filter for desk-scale runs.
inline ExperimentConfig preset_config(const std::string& name) {
  ExperimentConfig c;
  c.preset = name;
  if (name == "paper") return c;
  if (name == "fast") {
    c.design.dft_length = 1024;
    c.design.filter_length = 64;
    c.secondary_length = 128;
    c.duration_s = 2.0;
    return c;
  }
  throw ConfigError("preset: expected paper or fast, got '" + name + "'");
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::ordered_json to_json(const SyntheticSceneConfig& s) {
  nlohmann::ordered_json j;
  j["sample_rate"] = s.sample_rate;
  j["repetitions"] = s.repetitions;
  j["doa_resolution_deg"] = s.doa_resolution_deg;
  j["seed"] = s.seed;
  j["path_length"] = s.path_length;
  j["secondary_length"] = s.secondary_length;
  j["source_delay"] = s.source_delay;
  j["source_decay"] = s.source_decay;
  j["source_kernel_length"] = s.source_kernel_length;
  j["contra_delay"] = s.contra_delay;
  j["max_shadow_db"] = s.max_shadow_db;
  j["causality_margin"] = s.causality_margin;
  j["contra_advance"] = s.contra_advance;
  j["passive_pole"] = s.passive_pole;
  j["passive_gain"] = s.passive_gain;
  j["secondary_delay"] = s.secondary_delay;
  j["secondary_decay"] = s.secondary_decay;
  j["secondary_gain"] = s.secondary_gain;
  j["leakage"] = s.leakage;
  j["perturbation"] = s.perturbation;
  j["delay_jitter"] = s.delay_jitter;
  j["reseat_offset"] = s.reseat_offset;
  return j;
}

inline nlohmann::ordered_json to_json(const DesignConfig& d) {
  nlohmann::ordered_json j;
  j["filter_length"] = d.filter_length;
  j["dft_length"] = d.dft_length;
  j["beta_relative"] = d.beta_relative;
  j["rho"] = d.rho;
  j["r0_band_hz"] = {d.r0_band_low_hz, d.r0_band_high_hz};
  j["repetitions_used"] = d.repetitions_used;
  j["nominal_repetition"] = d.nominal_repetition ? nlohmann::ordered_json(*d.nominal_repetition) : nlohmann::ordered_json();
  j["constrain_all_repetitions"] = d.constrain_all_repetitions;
  j["constraint_bin_stride"] = d.constraint_bin_stride;
  j["init"] = d.init == InitKind::zero ? "zero" : "wiener";
  j["solver"] = {{"tolerance", d.solver.tolerance},
                 {"max_iterations", d.solver.max_iterations},
                 {"feasibility_margin", d.solver.feasibility_margin}};
  return j;
}

inline nlohmann::ordered_json to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["preset"] = c.preset;
  j["scene"] = {{"archive", c.archive}, {"encoding", to_string(c.archive_encoding)}, {"synthetic", to_json(c.synthetic)}};
  j["calibration"] = {{"field", c.field.str()},
                      {"duration_s", c.duration_s},
                      {"secondary_length", c.secondary_length},
                      {"seed", c.seed}};
  j["design"] = to_json(c.design);
  j["evaluation"] = {{"plan", to_string(c.plan)},
                     {"band_hz", {c.band.f_low, c.band.f_high}},
                     {"doa_resolution_deg", c.doa_resolution_deg},
                     {"repetition", c.evaluation_repetition},
                     {"held_out", c.held_out},
                     {"field", c.evaluation_field.str()},
                     {"seed", c.evaluation_seed},
                     {"controllers", c.controllers}};
  j["out"] = c.out_dir;
  return j;
}

namespace detail {

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& dst, const std::string& path) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + "." + key + ": " + e.what());
  }
}

inline void check_keys(const nlohmann::json& j, std::initializer_list<const char*> keys, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) throw ConfigError(path + ": unknown field '" + it.key() + "'");
  }
}

inline void read_pair(const nlohmann::json& j, const char* key, double& a, double& b, const std::string& path) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ConfigError(path + "." + key + ": expected [low, high]");
  a = v[0].get<double>();
  b = v[1].get<double>();
}

}  // namespace detail

inline void merge_json(const nlohmann::json& j, SyntheticSceneConfig& s) {
  const std::string p = "scene.synthetic";
  detail::check_keys(j, {"sample_rate", "repetitions", "doa_resolution_deg", "seed", "path_length", "secondary_length",
                         "source_delay", "source_decay", "source_kernel_length", "contra_delay", "max_shadow_db",
                         "causality_margin", "contra_advance", "passive_pole", "passive_gain", "secondary_delay",
                         "secondary_decay", "secondary_gain", "leakage", "perturbation", "delay_jitter", "reseat_offset"},
                     p);
  detail::read_opt(j, "sample_rate", s.sample_rate, p);
  detail::read_opt(j, "repetitions", s.repetitions, p);
  detail::read_opt(j, "doa_resolution_deg", s.doa_resolution_deg, p);
  detail::read_opt(j, "seed", s.seed, p);
  detail::read_opt(j, "path_length", s.path_length, p);
  detail::read_opt(j, "secondary_length", s.secondary_length, p);
  detail::read_opt(j, "source_delay", s.source_delay, p);
  detail::read_opt(j, "source_decay", s.source_decay, p);
  detail::read_opt(j, "source_kernel_length", s.source_kernel_length, p);
  detail::read_opt(j, "contra_delay", s.contra_delay, p);
  detail::read_opt(j, "max_shadow_db", s.max_shadow_db, p);
  detail::read_opt(j, "causality_margin", s.causality_margin, p);
  detail::read_opt(j, "contra_advance", s.contra_advance, p);
  detail::read_opt(j, "passive_pole", s.passive_pole, p);
  detail::read_opt(j, "passive_gain", s.passive_gain, p);
  detail::read_opt(j, "secondary_delay", s.secondary_delay, p);
  detail::read_opt(j, "secondary_decay", s.secondary_decay, p);
  detail::read_opt(j, "secondary_gain", s.secondary_gain, p);
  detail::read_opt(j, "leakage", s.leakage, p);
  detail::read_opt(j, "perturbation", s.perturbation, p);
  detail::read_opt(j, "delay_jitter", s.delay_jitter, p);
  detail::read_opt(j, "reseat_offset", s.reseat_offset, p);
}

inline void merge_json(const nlohmann::json& j, DesignConfig& d) {
  const std::string p = "design";
  detail::check_keys(j, {"filter_length", "dft_length", "beta_relative", "rho", "r0_band_hz", "repetitions_used",
                         "nominal_repetition", "constrain_all_repetitions", "constraint_bin_stride", "init", "solver"},
                     p);
  detail::read_opt(j, "filter_length", d.filter_length, p);
  detail::read_opt(j, "dft_length", d.dft_length, p);
  detail::read_opt(j, "beta_relative", d.beta_relative, p);
  detail::read_opt(j, "rho", d.rho, p);
  detail::read_pair(j, "r0_band_hz", d.r0_band_low_hz, d.r0_band_high_hz, p);
  detail::read_opt(j, "repetitions_used", d.repetitions_used, p);
  if (j.contains("nominal_repetition")) {
    if (j.at("nominal_repetition").is_null())
      d.nominal_repetition.reset();
    else {
      int v = 0;
      detail::read_opt(j, "nominal_repetition", v, p);
      d.nominal_repetition = v;
    }
  }
  detail::read_opt(j, "constrain_all_repetitions", d.constrain_all_repetitions, p);
  detail::read_opt(j, "constraint_bin_stride", d.constraint_bin_stride, p);
  if (j.contains("init")) {
    std::string s;
    detail::read_opt(j, "init", s, p);
    if (s == "zero") d.init = InitKind::zero;
    else if (s == "wiener") d.init = InitKind::wiener;
    else throw ConfigError("design.init: expected zero or wiener, got '" + s + "'");
  }
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    detail::check_keys(s, {"tolerance", "max_iterations", "feasibility_margin"}, p + ".solver");
    detail::read_opt(s, "tolerance", d.solver.tolerance, p + ".solver");
    detail::read_opt(s, "max_iterations", d.solver.max_iterations, p + ".solver");
    detail::read_opt(s, "feasibility_margin", d.solver.feasibility_margin, p + ".solver");
  }
}

/// Overlays the fields present in `j` onto `c`; unknown keys are rejected.
inline void merge_json(const nlohmann::json& j, ExperimentConfig& c) {
  detail::check_keys(j, {"preset", "scene", "calibration", "design", "evaluation", "out"}, "config");
  detail::read_opt(j, "preset", c.preset, "config");
  detail::read_opt(j, "out", c.out_dir, "config");
  if (j.contains("scene")) {
    const auto& s = j.at("scene");
    detail::check_keys(s, {"archive", "encoding", "synthetic"}, "scene");
    detail::read_opt(s, "archive", c.archive, "scene");
    if (s.contains("encoding")) {
      std::string e;
      detail::read_opt(s, "encoding", e, "scene");
      c.archive_encoding = parse_encoding(e);
    }
    if (s.contains("synthetic")) merge_json(s.at("synthetic"), c.synthetic);
  }
  if (j.contains("calibration")) {
    const auto& s = j.at("calibration");
    detail::check_keys(s, {"field", "duration_s", "secondary_length", "seed"}, "calibration");
    if (s.contains("field")) {
      std::string f;
      detail::read_opt(s, "field", f, "calibration");
      c.field = FieldChoice::parse(f);
    }
    detail::read_opt(s, "duration_s", c.duration_s, "calibration");
    detail::read_opt(s, "secondary_length", c.secondary_length, "calibration");
    detail::read_opt(s, "seed", c.seed, "calibration");
  }
  if (j.contains("design")) merge_json(j.at("design"), c.design);
  if (j.contains("evaluation")) {
    const auto& s = j.at("evaluation");
    detail::check_keys(s, {"plan", "band_hz", "doa_resolution_deg", "repetition", "held_out", "field", "seed", "controllers"},
                       "evaluation");
    if (s.contains("plan")) {
      std::string pl;
      detail::read_opt(s, "plan", pl, "evaluation");
      c.plan = parse_plan(pl);
    }
    detail::read_pair(s, "band_hz", c.band.f_low, c.band.f_high, "evaluation");
    detail::read_opt(s, "doa_resolution_deg", c.doa_resolution_deg, "evaluation");
    detail::read_opt(s, "repetition", c.evaluation_repetition, "evaluation");
    detail::read_opt(s, "held_out", c.held_out, "evaluation");
    if (s.contains("field")) {
      std::string f;
      detail::read_opt(s, "field", f, "evaluation");
      c.evaluation_field = FieldChoice::parse(f);
    }
    detail::read_opt(s, "seed", c.evaluation_seed, "evaluation");
    detail::read_opt(s, "controllers", c.controllers, "evaluation");
  }
}

/// Preset defaults (the file's "preset", unless `preset_override` is given) overlaid with the file.
inline ExperimentConfig config_from_json(const nlohmann::json& j, const std::string& preset_override = "") {
  std::string preset = preset_override;
  if (preset.empty()) preset = j.is_object() && j.contains("preset") && j.at("preset").is_string()
                                   ? j.at("preset").get<std::string>() : "paper";
  ExperimentConfig c = preset_config(preset);
  merge_json(j, c);
  c.preset = preset;
  return c;
}

/// Sets a dotted key ("design.rho") in a JSON document; the value is parsed as
/// JSON when possible and taken as a string otherwise.
inline void apply_override(nlohmann::json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "': expected key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::exception&) {
    value = raw;
  }
  nlohmann::json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override '" + assignment + "': empty key component");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      break;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

inline ExperimentConfig load_config_file(const std::string& path, const std::string& preset_override = "") {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text::read_file(path));
  } catch (const IngestionError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  return config_from_json(j, preset_override);
}

}  // namespace ancff

#endif  // ANCFF_EXPERIMENT_HPP
