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

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mtsfm/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Synthesize and analyze MTSFM waveform sets for MIMO beampattern design"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::uint64_t seed = 0;
  int jobs = 0;
  std::string output;
  app.add_option("--config", config_path, "Config document (JSON)");
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed, overrides the config");
  app.add_option("--jobs", jobs, "Concurrent trials (0: all cores)")->check(CLI::NonNegativeNumber);
  app.add_option("--output", output, "Output file (synth, eval, report) or directory (analyze)");

  auto* synth = app.add_subcommand("synth", "Run a synthesis campaign and write a run archive");

  std::string archive;
  std::string trial = "best";
  auto* eval = app.add_subcommand("eval", "Re-evaluate an archive and export a beampattern CSV");
  eval->add_option("archive", archive, "Run archive")->required();
  eval->add_option("--trial", trial, "Trial id or \"best\"");

  mtsfm::Index waveform = 0;
  bool initial = false;
  auto* analyze = app.add_subcommand("analyze", "Export spectrum, spectrogram, AAF and ACF of one waveform");
  analyze->add_option("archive", archive, "Run archive")->required();
  analyze->add_option("--trial", trial, "Trial id or \"best\"");
  analyze->add_option("--waveform", waveform, "Waveform (element) index");
  analyze->add_flag("--initial", initial, "Use the initial instead of the optimized indices");

  auto* report = app.add_subcommand("report", "Print per-trial table and campaign statistics");
  report->add_option("archive", archive, "Run archive")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return mtsfm::kExitUsage;
  }

  if (synth->parsed()) {
    mtsfm::SynthOptions o;
    o.config_path = config_path;
    if (!output.empty()) {
      o.output_path = output;
    }
    if (seed_opt->count() > 0) {
      o.seed = seed;
    }
    o.jobs = jobs;
    return mtsfm::cmd_synth(o, std::cout, std::cerr);
  }
  if (eval->parsed()) {
    mtsfm::EvalOptions o;
    o.archive_path = archive;
    o.trial = trial;
    if (!output.empty()) {
      o.output_path = output;
    }
    return mtsfm::cmd_eval(o, std::cout, std::cerr);
  }
  if (analyze->parsed()) {
    mtsfm::AnalyzeOptions o;
    o.archive_path = archive;
    o.trial = trial;
    o.waveform = waveform;
    o.initial = initial;
    if (!output.empty()) {
      o.output_dir = output;
    }
    return mtsfm::cmd_analyze(o, std::cout, std::cerr);
  }
  mtsfm::ReportOptions o;
  o.archive_path = archive;
  o.output_path = output;
  return mtsfm::cmd_report(o, std::cout, std::cerr);
}
