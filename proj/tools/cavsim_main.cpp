// Copyright 2026 The cavsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cavsim/config.hpp"
#include "cavsim/simulation.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitInvariant = 3;

std::ofstream open_out(const fs::path& p)
{
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

bool invariants_hold(const cavsim::SummaryMetrics& m)
{
  return m.trust_bound_violations == 0 && m.overtakes_of_visible_real == 0;
}

int do_simulate(const std::string& config, std::optional<std::uint64_t> seed,
                const std::string& scheme, const std::string& mitigation, const std::string& out)
{
  auto cfg = cavsim::load_scenario(config);
  if (seed) cfg.seed = *seed;
  if (!scheme.empty()) cfg.scheme = cavsim::scheme_from_string(scheme);
  if (!mitigation.empty()) cfg.mitigation = mitigation == "on";
  cfg.validate();
  fs::create_directories(out);
  auto trace = open_out(fs::path(out) / "trace.csv");
  auto events = open_out(fs::path(out) / "events.jsonl");
  cavsim::Simulation sim(cfg);
  const auto m = sim.run({&trace, &events});
  auto summary = open_out(fs::path(out) / "summary.json");
  summary << cavsim::summary_to_json(m) << '\n';
  auto resolved = open_out(fs::path(out) / "config.json");
  resolved << cavsim::to_json(cfg) << '\n';
  std::cout << cavsim::summary_to_json(m) << '\n';
  if (!invariants_hold(m)) {
    std::cerr << "invariant violated, see summary.json\n";
    return kExitInvariant;
  }
  return 0;
}

std::vector<double> parse_values(const std::string& text)
{
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size())
      throw cavsim::ConfigError("--values: cannot parse '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw cavsim::ConfigError("--values: empty list");
  return out;
}

int do_sweep(const std::string& config, const std::string& axis, const std::string& values,
             std::vector<std::uint64_t> seed_list, const std::string& out)
{
  const auto cfg = cavsim::load_scenario(config);
  if (seed_list.empty()) seed_list.push_back(cfg.seed);
  const auto rows = cavsim::sweep(cfg, axis, parse_values(values), seed_list);
  fs::create_directories(out);
  auto os = open_out(fs::path(out) / "sweep.csv");
  cavsim::write_sweep_csv(rows, os);
  cavsim::write_sweep_csv(rows, std::cout);
  for (const auto& r : rows)
    if (!invariants_hold(r.metrics)) return kExitInvariant;
  return 0;
}

int do_report(const std::string& in)
{
  const fs::path dir(in);
  bool any = false;
  if (fs::exists(dir / "summary.json")) {
    std::ifstream is(dir / "summary.json");
    const auto j = nlohmann::ordered_json::parse(is);
    for (const auto& [k, v] : j.items()) std::cout << k << ": " << v.dump() << '\n';
    any = true;
  }
  if (fs::exists(dir / "sweep.csv")) {
    std::ifstream is(dir / "sweep.csv");
    std::cout << is.rdbuf();
    any = true;
  }
  if (!any) throw cavsim::ConfigError("report: no summary.json or sweep.csv in " + in);
  return 0;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Signal-free intersection simulator with trust-aware coordination"};
  app.require_subcommand(1);

  std::string config, scheme, mitigation, out = "out", axis, values, in;
  std::optional<std::uint64_t> seed;
  std::vector<std::uint64_t> seeds;

  auto* sim = app.add_subcommand("simulate", "Run one scenario");
  sim->add_option("--config", config, "Scenario JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--seed", seed, "Override the scenario seed");
  sim->add_option("--scheme", scheme, "fifo | trust | lane | both")
      ->check(CLI::IsMember({"fifo", "trust", "lane", "both"}));
  sim->add_option("--mitigation", mitigation, "on | off")->check(CLI::IsMember({"on", "off"}));
  sim->add_option("--out", out, "Output directory");

  auto* sw = app.add_subcommand("sweep", "Repeat a scenario over an axis and seeds");
  sw->add_option("--config", config, "Scenario JSON")->required()->check(CLI::ExistingFile);
  sw->add_option("--axis", axis, "fake_fraction | uncooperative")
      ->required()
      ->check(CLI::IsMember({"fake_fraction", "uncooperative"}));
  sw->add_option("--values", values, "Comma separated values")->required();
  sw->add_option("--seeds", seeds, "Comma separated seeds, default the scenario seed")
      ->delimiter(',');
  sw->add_option("--out", out, "Output directory");

  auto* rep = app.add_subcommand("report", "Print a summary or sweep table");
  rep->add_option("--in", in, "Run output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*sim) return do_simulate(config, seed, scheme, mitigation, out);
    if (*sw) return do_sweep(config, axis, values, seeds, out);
    return do_report(in);
  } catch (const cavsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
