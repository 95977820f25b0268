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

#ifndef ANCFF_SCENE_IO_HPP
#define ANCFF_SCENE_IO_HPP

// Dataset archive: a directory holding manifest.json plus one impulse-response
// file per (repetition, role[, DoA]). See docs/archive-format.md.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "ancff/acoustic_scene.hpp"
#include "ancff/text_io.hpp"
#include "ancff/types.hpp"
#include "ancff/wav.hpp"

namespace ancff {

inline constexpr const char* kArchiveFormat = "ancff-scene";
inline constexpr int kArchiveVersion = 1;
inline constexpr const char* kManifestName = "manifest.json";

enum class IrEncoding { csv, wav };

inline std::string to_string(IrEncoding e) { return e == IrEncoding::csv ? "csv" : "wav"; }

inline IrEncoding parse_encoding(const std::string& s) {
  if (s == "csv") return IrEncoding::csv;
  if (s == "wav") return IrEncoding::wav;
  throw ConfigError("unknown impulse-response encoding '" + s + "' (expected csv or wav)");
}

/// rep03/h_x_doa270.000.csv, rep03/S.csv, ...
inline std::string archive_file_name(int repetition, const std::string& role, std::optional<double> doa_deg,
                                     IrEncoding enc) {
  char buf[96];
  if (doa_deg)
    std::snprintf(buf, sizeof(buf), "rep%02d/%s_doa%07.3f.%s", repetition, role.c_str(), *doa_deg,
                  to_string(enc).c_str());
  else
    std::snprintf(buf, sizeof(buf), "rep%02d/%s.%s", repetition, role.c_str(), to_string(enc).c_str());
  return buf;
}

namespace detail {

inline void write_ir(const std::filesystem::path& file, const ImpulseResponse& ir, IrEncoding enc) {
  std::filesystem::create_directories(file.parent_path());
  if (enc == IrEncoding::csv)
    text::write_file(file.string(), text::column_csv(ir.samples));
  else
    wav::write_float32(file.string(), ir.samples, static_cast<std::uint32_t>(std::lround(ir.sample_rate)));
}

inline bool all_zero(const ImpulseResponse& ir) {
  return std::all_of(ir.samples.begin(), ir.samples.end(), [](double v) { return v == 0.0; });
}

}  // namespace detail

/// Writes `sets` below `dir` and returns the manifest path. CSV keeps full double precision.
inline std::filesystem::path export_scene(const std::vector<AcousticPathSet>& sets, const std::filesystem::path& dir,
                                          IrEncoding enc = IrEncoding::csv) {
  if (sets.empty()) throw std::invalid_argument("export_scene: no repetitions");
  for (const auto& s : sets) s.validate();
  const double fs = sets.front().sample_rate;
  const bool has_feedback = std::any_of(sets.begin(), sets.end(), [](const auto& s) { return !detail::all_zero(s.feedback); });

  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  auto add = [&](int rep, const std::string& role, std::optional<double> doa, const ImpulseResponse& ir) {
    const std::string rel = archive_file_name(rep, role, doa, enc);
    detail::write_ir(dir / rel, ir, enc);
    nlohmann::ordered_json e;
    e["repetition"] = rep;
    e["role"] = role;
    if (doa) e["doa_deg"] = *doa;
    e["path"] = rel;
    files.push_back(e);
  };
  std::filesystem::create_directories(dir);
  std::vector<int> ids;
  for (const auto& s : sets) {
    if (s.sample_rate != fs) throw std::invalid_argument("export_scene: mixed sample rates");
    ids.push_back(s.repetition_id);
    add(s.repetition_id, "S", std::nullopt, s.secondary);
    if (has_feedback) add(s.repetition_id, "B_x", std::nullopt, s.feedback);
    for (const auto& p : s.doa_paths) {
      add(s.repetition_id, "h_x", p.doa.degrees(), p.h_x);
      add(s.repetition_id, "h_d", p.doa.degrees(), p.h_d);
    }
  }
  nlohmann::ordered_json grid = nlohmann::ordered_json::array();
  for (const auto& p : sets.front().doa_paths) grid.push_back(p.doa.degrees());

  nlohmann::ordered_json m;
  m["format"] = kArchiveFormat;
  m["version"] = kArchiveVersion;
  m["sample_rate"] = fs;
  m["encoding"] = to_string(enc);
  m["doa_grid_deg"] = grid;
  m["repetitions"] = ids;
  m["has_feedback"] = has_feedback;
  m["has_inner_mic"] = false;
  m["files"] = files;
  const auto manifest = dir / kManifestName;
  text::write_file(manifest.string(), m.dump(2) + "\n");
  return manifest;
}

/// Loads and validates an archive (directory or manifest path).
inline std::vector<AcousticPathSet> ingest_scene(const std::filesystem::path& archive) {
  namespace fs = std::filesystem;
  const fs::path manifest_path = fs::is_directory(archive) ? archive / kManifestName : archive;
  if (!fs::exists(manifest_path)) throw IngestionError("missing manifest: " + manifest_path.string());
  const fs::path root = manifest_path.parent_path();

  nlohmann::json m;
  try {
    m = nlohmann::json::parse(text::read_file(manifest_path.string()));
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError("manifest " + manifest_path.string() + ": " + e.what());
  }

  double fs_hz = 0.0;
  std::vector<double> grid_deg;
  std::vector<int> ids;
  bool has_feedback = false;
  try {
    if (m.value("format", std::string()) != kArchiveFormat)
      throw IngestionError("manifest: format must be '" + std::string(kArchiveFormat) + "'");
    if (m.at("version").get<int>() != kArchiveVersion)
      throw IngestionError("manifest: unsupported version " + m.at("version").dump());
    fs_hz = m.at("sample_rate").get<double>();
    grid_deg = m.at("doa_grid_deg").get<std::vector<double>>();
    ids = m.at("repetitions").get<std::vector<int>>();
    has_feedback = m.value("has_feedback", true);
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError(std::string("manifest: ") + e.what());
  }
  if (!(fs_hz > 0.0)) throw IngestionError("manifest: sample_rate must be > 0");
  if (grid_deg.empty()) throw IngestionError("manifest: empty DoA grid");
  if (ids.empty()) throw IngestionError("manifest: no repetitions");
  if (std::set<int>(ids.begin(), ids.end()).size() != ids.size())
    throw IngestionError("manifest: duplicate repetition ids");

  // (repetition, role, doa index or -1) -> relative path
  std::map<std::tuple<int, std::string, int>, std::string> table;
  auto doa_index = [&](double deg) -> int {
    const Doa d(deg);
    for (std::size_t i = 0; i < grid_deg.size(); ++i)
      if (Doa(grid_deg[i]).matches(d)) return static_cast<int>(i);
    return -1;
  };
  try {
    for (const auto& e : m.at("files")) {
      const int rep = e.at("repetition").get<int>();
      const std::string role = e.at("role").get<std::string>();
      const std::string rel = e.at("path").get<std::string>();
      if (std::find(ids.begin(), ids.end(), rep) == ids.end())
        throw IngestionError("manifest: file " + rel + " refers to undeclared repetition " + std::to_string(rep), rep);
      if (role == "inner") continue;  // reserved, not consumed
      int idx = -1;
      if (role == "h_x" || role == "h_d") {
        const double deg = e.at("doa_deg").get<double>();
        idx = doa_index(deg);
        if (idx < 0)
          throw IngestionError("manifest: repetition " + std::to_string(rep) + " DoA " + text::format_double(deg) +
                                   " deg is not on the declared grid",
                               rep, deg);
      } else if (role != "S" && role != "B_x") {
        throw IngestionError("manifest: unknown role '" + role + "'", rep);
      }
      if (!table.emplace(std::make_tuple(rep, role, idx), rel).second)
        throw IngestionError("manifest: duplicate entry for repetition " + std::to_string(rep) + " role " + role, rep);
    }
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError(std::string("manifest files: ") + e.what());
  }

  auto load = [&](int rep, const std::string& role, int idx) -> ImpulseResponse {
    const std::optional<double> doa = idx >= 0 ? std::optional<double>(grid_deg[static_cast<std::size_t>(idx)]) : std::nullopt;
    std::string label = "repetition " + std::to_string(rep) + " role " + role;
    if (doa) label += " DoA " + text::format_double(*doa) + " deg";
    const auto it = table.find({rep, role, idx});
    if (it == table.end()) throw IngestionError(label + ": not listed in manifest (DoA coverage mismatch)", rep, doa);
    const fs::path file = root / it->second;
    if (!fs::exists(file)) throw IngestionError(label + ": file not found: " + file.string(), rep, doa);
    ImpulseResponse ir;
    ir.sample_rate = fs_hz;
    try {
      if (file.extension() == ".wav") {
        const wav::Audio a = wav::read(file.string());
        if (std::fabs(static_cast<double>(a.sample_rate) - fs_hz) > 0.5)
          throw IngestionError(label + ": sample rate " + std::to_string(a.sample_rate) + " differs from manifest", rep, doa);
        ir.samples = a.samples;
      } else {
        ir.samples = text::read_column_csv(file.string());
      }
    } catch (const IngestionError& e) {
      if (e.repetition()) throw;
      throw IngestionError(label + ": " + e.what(), rep, doa);
    }
    if (ir.samples.empty()) throw IngestionError(label + ": empty impulse response", rep, doa);
    for (double v : ir.samples)
      if (!std::isfinite(v)) throw IngestionError(label + ": non-finite sample", rep, doa);
    return ir;
  };

  std::vector<AcousticPathSet> sets;
  for (int rep : ids) {
    AcousticPathSet s;
    s.repetition_id = rep;
    s.sample_rate = fs_hz;
    s.secondary = load(rep, "S", -1);
    s.feedback = has_feedback ? load(rep, "B_x", -1) : ImpulseResponse{{0.0}, fs_hz};
    for (std::size_t i = 0; i < grid_deg.size(); ++i) {
      DoaPaths p;
      p.doa = Doa(grid_deg[i]);
      p.h_x = load(rep, "h_x", static_cast<int>(i));
      p.h_d = load(rep, "h_d", static_cast<int>(i));
      s.doa_paths.push_back(std::move(p));
    }
    s.validate();
    sets.push_back(std::move(s));
  }
  return sets;
}

/// FNV-1a over the manifest and every listed file, in manifest order.
inline std::uint64_t archive_checksum(const std::filesystem::path& archive) {
  const std::filesystem::path manifest = std::filesystem::is_directory(archive) ? archive / kManifestName : archive;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&](const std::string& bytes) {
    for (unsigned char c : bytes) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  const std::string m = text::read_file(manifest.string());
  feed(m);
  const nlohmann::json parsed = nlohmann::json::parse(m);
  for (const auto& e : parsed.at("files"))
    feed(text::read_file((manifest.parent_path() / e.at("path").get<std::string>()).string()));
  return h;
}

}  // namespace ancff

#endif  // ANCFF_SCENE_IO_HPP
