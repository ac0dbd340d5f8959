// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "mtsfm/archive.hpp"

#include <algorithm>
#include <ctime>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

namespace mtsfm {

namespace {

using Json = nlohmann::ordered_json;

// Line of the first `"key"` after the first `"section"`; 0 if not found.
int line_of(const std::string& text, const std::string& section, const std::string& key) {
  std::size_t from = 0;
  if (!section.empty()) {
    from = text.find('"' + section + '"');
    if (from == std::string::npos) {
      return 0;
    }
  }
  const std::size_t at = key.empty() ? from : text.find('"' + key + '"', from);
  if (at == std::string::npos) {
    return 0;
  }
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(at), '\n'));
}

struct Field {
  const char* section;
  const char* key;
  std::function<void(const Json&, SynthesisConfig&)> read;
  std::function<Json(const SynthesisConfig&)> write;
};

template <typename T>
T as_integer(const Json& v) {
  if (!v.is_number_integer()) {
    throw InvalidArgument("expected an integer");
  }
  if (v.is_number_unsigned()) {
    return static_cast<T>(v.get<std::uint64_t>());
  }
  return static_cast<T>(v.get<std::int64_t>());
}

double as_number(const Json& v) {
  if (!v.is_number()) {
    throw InvalidArgument("expected a number");
  }
  return v.get<double>();
}

bool as_bool(const Json& v) {
  if (!v.is_boolean()) {
    throw InvalidArgument("expected true or false");
  }
  return v.get<bool>();
}

const char* to_string(TemplateNormalization n) {
  return n == TemplateNormalization::radiated_power ? "radiated_power" : "array_size";
}

TemplateNormalization as_normalization(const Json& v) {
  if (v == "radiated_power") {
    return TemplateNormalization::radiated_power;
  }
  if (v == "array_size") {
    return TemplateNormalization::array_size;
  }
  throw InvalidArgument("expected \"radiated_power\" or \"array_size\"");
}

#define MTSFM_INT(section, key, member)                                                           \
  Field {                                                                                         \
    section, key, [](const Json& v, SynthesisConfig& c) { c.member = as_integer<decltype(c.member)>(v); }, \
        [](const SynthesisConfig& c) { return Json(c.member); }                                   \
  }
#define MTSFM_REAL(section, key, member)                                                   \
  Field {                                                                                  \
    section, key, [](const Json& v, SynthesisConfig& c) { c.member = as_number(v); },     \
        [](const SynthesisConfig& c) { return Json(c.member); }                            \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      MTSFM_INT("array", "elements", elements),
      MTSFM_INT("waveform", "harmonics", harmonics),
      MTSFM_REAL("waveform", "duration", duration),
      MTSFM_REAL("waveform", "time_bandwidth", time_bandwidth),
      MTSFM_REAL("constraint", "delta", delta),
      MTSFM_INT("campaign", "trials", trials),
      Field{"campaign", "rng_seed",
            [](const Json& v, SynthesisConfig& c) {
              if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
                throw InvalidArgument("expected a non-negative integer");
              }
              c.rng_seed = v.get<std::uint64_t>();
            },
            [](const SynthesisConfig& c) { return Json(c.rng_seed); }},
      MTSFM_REAL("campaign", "perturbation_variance", perturbation_variance),
      Field{"campaign", "redraw_base_row",
            [](const Json& v, SynthesisConfig& c) { c.redraw_base_row = as_bool(v); },
            [](const SynthesisConfig& c) { return Json(c.redraw_base_row); }},
      MTSFM_INT("beampattern", "grid_points", grid_points),
      MTSFM_REAL("beampattern", "passband_halfwidth", passband_halfwidth),
      MTSFM_REAL("beampattern", "pslr_guard", pslr_guard),
      Field{"beampattern", "template_normalization",
            [](const Json& v, SynthesisConfig& c) { c.template_normalization = as_normalization(v); },
            [](const SynthesisConfig& c) { return Json(to_string(c.template_normalization)); }},
      MTSFM_INT("solver", "max_iterations", solver.max_iterations),
      MTSFM_INT("solver", "max_outer_iterations", solver.max_outer_iterations),
      MTSFM_INT("solver", "history", solver.history),
      MTSFM_REAL("solver", "objective_tolerance", solver.objective_tolerance),
      MTSFM_REAL("solver", "constraint_tolerance", solver.constraint_tolerance),
      MTSFM_REAL("solver", "step_tolerance", solver.step_tolerance),
      MTSFM_REAL("solver", "gradient_tolerance", solver.gradient_tolerance),
      MTSFM_INT("solver", "quadrature_points", quadrature_points),
  };
  return table;
}

#undef MTSFM_INT
#undef MTSFM_REAL

const Field* find_field(const std::string& section, const std::string& key) {
  for (const Field& f : fields()) {
    if (section == f.section && key == f.key) {
      return &f;
    }
  }
  return nullptr;
}

bool known_section(const std::string& section) {
  for (const Field& f : fields()) {
    if (section == f.section) {
      return true;
    }
  }
  return false;
}

Json config_json(const SynthesisConfig& config) {
  Json out = Json::object();
  for (const Field& f : fields()) {
    out[f.section][f.key] = f.write(config);
  }
  return out;
}

SynthesisConfig config_from_json(const Json& doc, const std::string& text) {
  if (!doc.is_object()) {
    throw ConfigError("config must be an object of sections", 1);
  }
  SynthesisConfig config;
  for (const auto& [section, body] : doc.items()) {
    if (section == "format_version") {
      if (!body.is_number_integer() || body.get<std::int64_t>() != kArchiveFormatVersion) {
        throw ConfigError("unsupported format_version", line_of(text, "", section));
      }
      continue;
    }
    if (!known_section(section)) {
      throw ConfigError("unknown section \"" + section + "\"", line_of(text, "", section));
    }
    if (!body.is_object()) {
      throw ConfigError("section \"" + section + "\" must be an object", line_of(text, "", section));
    }
    for (const auto& [key, value] : body.items()) {
      const Field* f = find_field(section, key);
      if (f == nullptr) {
        throw ConfigError("unknown key " + section + "." + key, line_of(text, section, key));
      }
      try {
        f->read(value, config);
      } catch (const InvalidArgument& e) {
        throw ConfigError(section + "." + key + ": " + e.what(), line_of(text, section, key));
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError(section + "." + key + ": " + e.what(), line_of(text, section, key));
      }
    }
  }
  try {
    config.validate();
  } catch (const InvalidArgument& e) {
    // Message starts with "config: section.key".
    const std::string msg = e.what();
    const std::size_t start = msg.find(' ') + 1;
    const std::string name = msg.substr(start, msg.find(' ', start) - start);
    const std::size_t dot = name.find('.');
    int line = 0;
    if (dot != std::string::npos && doc.contains(name.substr(0, dot)) &&
        doc[name.substr(0, dot)].contains(name.substr(dot + 1))) {
      line = line_of(text, name.substr(0, dot), name.substr(dot + 1));
    }
    throw ConfigError(msg, line);
  }
  return config;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Json matrix_json(const ModulationIndexSet<double>& idx) {
  if (idx.elements() == 0) {
    return nullptr;
  }
  Json rows = Json::array();
  for (Index m = 0; m < idx.elements(); ++m) {
    Json row = Json::array();
    for (Index k = 0; k < idx.harmonics(); ++k) {
      row.push_back(idx.alpha()(m, k));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

ModulationIndexSet<double> matrix_from_json(const Json& rows, double duration) {
  if (rows.is_null()) {
    return {};
  }
  if (!rows.is_array() || rows.empty() || !rows[0].is_array()) {
    throw ArchiveError("archive: index matrix must be a non-empty array of rows");
  }
  Matrix<double> alpha(static_cast<Index>(rows.size()), static_cast<Index>(rows[0].size()));
  for (Index m = 0; m < alpha.rows(); ++m) {
    const Json& row = rows[static_cast<std::size_t>(m)];
    if (!row.is_array() || static_cast<Index>(row.size()) != alpha.cols()) {
      throw ArchiveError("archive: ragged index matrix");
    }
    for (Index k = 0; k < alpha.cols(); ++k) {
      alpha(m, k) = row[static_cast<std::size_t>(k)].get<double>();
    }
  }
  return ModulationIndexSet<double>(std::move(alpha), duration);
}

Json trial_json(const TrialResult& t) {
  Json out;
  out["trial"] = t.trial;
  out["trial_seed"] = t.trial_seed;
  out["status"] = t.failed ? "failed" : "ok";
  if (t.failed) {
    out["error"] = t.error;
    return out;
  }
  out["converged"] = t.converged;
  out["stop_reason"] = t.stop_reason;
  out["iterations"] = t.iterations;
  out["initial_objective"] = t.initial_objective;
  out["final_objective"] = t.final_objective;
  out["pslr_db"] = t.pslr_db;
  out["constraint_residuals"] = t.constraint_residuals;
  out["objective_trace"] = t.objective_trace;
  out["initial_indices"] = matrix_json(t.initial_indices);
  out["final_indices"] = matrix_json(t.final_indices);
  return out;
}

TrialResult trial_from_json(const Json& j, double duration) {
  TrialResult t;
  t.trial = j.at("trial").get<int>();
  t.trial_seed = j.at("trial_seed").get<std::uint64_t>();
  const std::string status = j.at("status").get<std::string>();
  if (status == "failed") {
    t.failed = true;
    t.error = j.value("error", std::string());
    return t;
  }
  if (status != "ok") {
    throw ArchiveError("archive: trial " + std::to_string(t.trial) + " has unknown status " + status);
  }
  t.converged = j.at("converged").get<bool>();
  t.stop_reason = j.at("stop_reason").get<std::string>();
  t.iterations = j.at("iterations").get<int>();
  t.initial_objective = j.at("initial_objective").get<double>();
  t.final_objective = j.at("final_objective").get<double>();
  t.pslr_db = j.at("pslr_db").get<double>();
  t.constraint_residuals = j.at("constraint_residuals").get<std::vector<double>>();
  t.objective_trace = j.at("objective_trace").get<std::vector<double>>();
  t.initial_indices = matrix_from_json(j.at("initial_indices"), duration);
  t.final_indices = matrix_from_json(j.at("final_indices"), duration);
  return t;
}

}  // namespace

SynthesisConfig parse_config(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t at = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    const int line =
        1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(at), '\n'));
    const std::size_t bol = text.rfind('\n', at == 0 ? 0 : at - 1);
    const std::size_t column = bol == std::string::npos ? at + 1 : at - bol;
    throw ConfigError("column " + std::to_string(column) + ": syntax error", line);
  }
  return config_from_json(doc, text);
}

SynthesisConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

std::string config_to_text(const SynthesisConfig& config) {
  Json doc;
  doc["format_version"] = kArchiveFormatVersion;
  const Json body = config_json(config);
  for (const auto& [k, v] : body.items()) {
    doc[k] = v;
  }
  return doc.dump(2) + "\n";
}

std::string archive_to_text(const RunArchive& archive) {
  Json doc;
  doc["format"] = kArchiveFormat;
  doc["format_version"] = archive.format_version;
  doc["created_utc"] = archive.created_utc;
  doc["config"] = config_json(archive.config);

  const CampaignSummary& s = archive.summary;
  Json summary;
  summary["trials"] = s.trials.size();
  summary["failed_trials"] = s.failed_trials;
  summary["converged_trials"] = s.converged_trials;
  if (s.trials.size() > static_cast<std::size_t>(s.failed_trials)) {
    summary["median_pslr_db"] = s.median_pslr_db;
    summary["min_pslr_db"] = s.min_pslr_db;
    summary["max_pslr_db"] = s.max_pslr_db;
    summary["best_trial"] = s.best_trial;
  } else {
    summary["median_pslr_db"] = nullptr;
    summary["min_pslr_db"] = nullptr;
    summary["max_pslr_db"] = nullptr;
    summary["best_trial"] = nullptr;
  }
  doc["summary"] = summary;

  Json trials = Json::array();
  for (const TrialResult& t : s.trials) {
    trials.push_back(trial_json(t));
  }
  doc["trials"] = std::move(trials);
  return doc.dump(1) + "\n";
}

RunArchive archive_from_text(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ArchiveError(std::string("archive: ") + e.what());
  }
  try {
    if (!doc.is_object() || doc.value("format", std::string()) != kArchiveFormat) {
      throw ArchiveError("archive: not an mtsfm run archive");
    }
    RunArchive a;
    a.format_version = doc.at("format_version").get<int>();
    if (a.format_version < 1 || a.format_version > kArchiveFormatVersion) {
      throw ArchiveError("archive: unsupported format_version " + std::to_string(a.format_version));
    }
    a.created_utc = doc.at("created_utc").get<std::string>();
    try {
      a.config = config_from_json(doc.at("config"), std::string());
    } catch (const ConfigError& e) {
      throw ArchiveError(std::string("archive: config snapshot: ") + e.what());
    }
    const Json& summary = doc.at("summary");
    for (const Json& t : doc.at("trials")) {
      a.summary.trials.push_back(trial_from_json(t, a.config.duration));
    }
    a.summary.failed_trials = summary.at("failed_trials").get<int>();
    a.summary.converged_trials = summary.at("converged_trials").get<int>();
    if (!summary.at("median_pslr_db").is_null()) {
      a.summary.median_pslr_db = summary.at("median_pslr_db").get<double>();
      a.summary.min_pslr_db = summary.at("min_pslr_db").get<double>();
      a.summary.max_pslr_db = summary.at("max_pslr_db").get<double>();
      a.summary.best_trial = summary.at("best_trial").get<int>();
    }
    if (summary.at("trials").get<std::size_t>() != a.summary.trials.size()) {
      throw ArchiveError("archive: summary trial count does not match the trial records");
    }
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw ArchiveError(std::string("archive: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ArchiveError(std::string("archive: ") + e.what());
  }
}

void write_archive(const std::string& path, const RunArchive& archive) {
  const std::string text = archive_to_text(archive);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write " + path);
  }
  out << text;
  if (!out.flush()) {
    throw std::runtime_error("write failed: " + path);
  }
}

RunArchive read_archive(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::runtime_error& e) {
    throw ArchiveError(e.what());
  }
  return archive_from_text(text);
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace mtsfm
