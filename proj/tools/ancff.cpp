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

// ancff: synthesize scenes, design constrained feedforward controllers and
// evaluate them. See README.md for a worked example.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ancff/commands.hpp"

namespace {

struct Options {
  std::string config_path;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string archive;
  std::string field;
  std::string plan;
  std::string repetitions;
  std::optional<int> held_out;
  std::optional<int> repetition;
  std::vector<std::string> controllers;
  std::vector<std::string> overrides;
  bool print_config = false;
};

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const std::string tok = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    const auto dash = tok.find('-', 1);
    try {
      if (dash != std::string::npos) {
        const int a = std::stoi(tok.substr(0, dash));
        const int b = std::stoi(tok.substr(dash + 1));
        for (int r = a; r <= b; ++r) out.push_back(r);
      } else {
        out.push_back(std::stoi(tok));
      }
    } catch (const std::exception&) {
      throw ancff::ConfigError("repetitions: cannot parse '" + s + "' (use e.g. 0 or 0-5 or 0,2,4)");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

ancff::ExperimentConfig build_config(const Options& o) {
  nlohmann::json j = nlohmann::json::object();
  if (!o.config_path.empty()) {
    try {
      j = nlohmann::json::parse(ancff::text::read_file(o.config_path));
    } catch (const ancff::IngestionError& e) {
      throw ancff::ConfigError(std::string("config: ") + e.what());
    } catch (const nlohmann::json::exception& e) {
      throw ancff::ConfigError("config " + o.config_path + ": " + e.what());
    }
  }
  if (o.seed) {
    ancff::apply_override(j, "calibration.seed=" + std::to_string(*o.seed));
    ancff::apply_override(j, "scene.synthetic.seed=" + std::to_string(*o.seed));
  }
  if (!o.out.empty()) j["out"] = o.out;
  if (!o.archive.empty()) ancff::apply_override(j, "scene.archive=" + nlohmann::json(o.archive).dump());
  if (!o.field.empty()) j["calibration"]["field"] = o.field;
  if (!o.plan.empty()) j["evaluation"]["plan"] = o.plan;
  if (!o.repetitions.empty()) j["design"]["repetitions_used"] = parse_int_list(o.repetitions);
  if (o.held_out) j["evaluation"]["held_out"] = *o.held_out;
  if (o.repetition) j["evaluation"]["repetition"] = *o.repetition;
  if (!o.controllers.empty()) j["evaluation"]["controllers"] = o.controllers;
  for (const auto& s : o.overrides) ancff::apply_override(j, s);
  return ancff::config_from_json(j, o.preset);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained feedforward ANC filter design"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON experiment configuration");
    sub->add_option("--preset", o.preset, "parameter preset")->check(CLI::IsMember({"paper", "fast"}));
    sub->add_option("--seed", o.seed, "master seed (scene and calibration noise)");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--set", o.overrides, "override a config field, e.g. design.rho=0.7 (repeatable)");
    sub->add_flag("--print-config", o.print_config, "print the resolved configuration and exit");
  };
  auto add_scene = [&](CLI::App* sub) {
    sub->add_option("--archive", o.archive, "scene archive directory (default: synthesize)");
  };
  auto add_controllers = [&](CLI::App* sub) {
    sub->add_option("--controller", o.controllers, "controller sidecar (.json), .csv or .wav (repeatable)");
    sub->add_option("--repetition", o.repetition, "repetition to evaluate on");
  };

  CLI::App* synth = app.add_subcommand("synth", "write a synthetic scene archive");
  add_common(synth);
  CLI::App* design = app.add_subcommand("design", "optimize a controller for a calibration field");
  add_common(design);
  add_scene(design);
  design->add_option("--field", o.field, "diffuse, ipsi, contra or doa:<deg>");
  design->add_option("--repetitions", o.repetitions, "repetitions to design on, e.g. 0 or 0-5");
  CLI::App* evaluate = app.add_subcommand("evaluate", "evaluate controllers");
  add_common(evaluate);
  add_scene(evaluate);
  add_controllers(evaluate);
  evaluate->add_option("--plan", o.plan, "sweep, reinsertion or frequency");
  evaluate->add_option("--held-out", o.held_out, "held-out repetition for the reinsertion plan");
  evaluate->add_option("--field", o.field, "calibration field (used for naming only)");
  CLI::App* margins = app.add_subcommand("margins", "stability margins of controllers");
  add_common(margins);
  add_scene(margins);
  add_controllers(margins);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : ancff::kExitConfig;
  }

  return ancff::run_guarded(
      [&]() -> int {
        const ancff::ExperimentConfig cfg = build_config(o);
        if (o.print_config) {
          std::cout << ancff::to_json(cfg).dump(2) << "\n";
          return ancff::kExitOk;
        }
        if (synth->parsed()) return ancff::cmd_synth(cfg, std::cout);
        if (design->parsed()) return ancff::cmd_design(cfg, std::cout);
        if (evaluate->parsed()) return ancff::cmd_evaluate(cfg, std::cout);
        return ancff::cmd_margins(cfg, std::cout);
      },
      std::cerr);
}
