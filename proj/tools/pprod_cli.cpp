// pprod: run scenarios, verify the bundled suite, inspect schedules, compute geometry.
//
// Exit codes: 0 all checks pass, 1 a checker failed, 2 configuration or input error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "pprod/pprod.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

void print_report(const pprod::VerifyReport& rep) {
  for (const auto& e : rep.entries)
    std::printf("%-7s %-48s measured=%-14.6g threshold=%-14.6g %s\n", pprod::to_string(e.status), e.name.c_str(),
                e.measured, e.threshold, e.detail.c_str());
  std::printf("%s: %zu checks\n", rep.all_passed() ? "PASS" : "FAIL", rep.entries.size());
}

// A schedule descriptor is inline JSON, a descriptor file, or a scenario file with a "schedule" field.
pprod::Schedule parse_descriptor(const std::string& arg) {
  json j;
  try {
    if (!arg.empty() && (arg.front() == '{' || arg.front() == '[')) {
      j = json::parse(arg);
    } else {
      std::ifstream in(arg);
      if (!in) throw pprod::ConfigError("", "cannot open " + arg);
      j = json::parse(in);
    }
  } catch (const json::parse_error& e) {
    throw pprod::ConfigError("", e.what());
  }
  if (j.is_object() && j.contains("schedule")) return pprod::schedule_from_json(j.at("schedule"), "/schedule");
  return pprod::schedule_from_json(j);
}

int cmd_schedule_inspect(const std::string& descriptor, pprod::Index n) {
  const auto s = parse_descriptor(descriptor);
  const auto p = pprod::profile(s, n);
  std::cout << "# sigma\nn,label\n";
  for (pprod::Index i = 1; i <= n; ++i) std::cout << i << ',' << s(i) << '\n';
  std::cout << "# profile\nlabel,occurrences,gap_index,class\n";
  for (const auto& [label, occ] : p.occurrences)
    std::cout << label << ',' << occ.size() << ',' << p.gap_index.at(label) << ','
              << (p.gamma_f.count(label) ? "finite" : "infinite") << '\n';
  std::cout << "# markers\nindex,k\n";
  for (std::size_t i = 0; i < p.markers.size(); ++i) std::cout << i + 1 << ',' << p.markers[i] << '\n';
  if (p.heuristic) std::cout << "# note: finite/infinite split inferred from the prefix\n";
  return 0;
}

int cmd_geometry(const std::string& what, const std::string& path) {
  const auto cfg = pprod::load_config(path);
  if (cfg.schedule_only()) throw pprod::ConfigError("/subspaces", "geometry needs subspaces");
  std::vector<pprod::Subspace> subs;
  for (const auto& spec : cfg.subspaces) subs.push_back(pprod::build_subspace(spec, cfg.ambient_dim));
  const pprod::GeometryCfg g = cfg.checkers.geometry.value_or(pprod::GeometryCfg{});
  json out;
  if (what == "cb") {
    out = pprod::to_json_value(pprod::friedrichs_cb(subs));
  } else {
    out["inclination"] = pprod::to_json_value(pprod::inclination(subs, g.grid_resolution, g.restarts, g.seed));
    try {
      out["inner_inclination"] =
          pprod::to_json_value(pprod::inner_inclination(subs, g.grid_resolution, g.restarts, g.seed));
    } catch (const pprod::PreconditionViolated& e) {
      out["inner_inclination"] = {{"error", e.what()}};
    }
  }
  std::cout << out.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Products of orthogonal projections: scenarios, checks and geometry"};
  app.require_subcommand(1);

  std::string out_dir;
  app.add_option("--out", out_dir, "Output directory (overrides PPROD_OUT_DIR and the config)");

  auto* run = app.add_subcommand("run", "Run one scenario config");
  std::string config_path;
  run->add_option("config", config_path, "Scenario JSON")->required();

  auto* verify = app.add_subcommand("verify", "Run every bundled scenario");
  std::string scenario_dir = pprod::default_scenario_dir().string();
  bool negative = false;
  verify->add_option("--scenarios", scenario_dir, "Scenario directory");
  verify->add_flag("--negative-controls", negative, "Run the checkers on corrupted fixtures instead");

  auto* schedule = app.add_subcommand("schedule", "Schedule tools");
  schedule->require_subcommand(1);
  auto* inspect = schedule->add_subcommand("inspect", "Print sigma prefix, profile and markers as CSV");
  std::string descriptor;
  pprod::Index n_prefix = 100;
  inspect->add_option("descriptor", descriptor, "Inline JSON or path to a descriptor/scenario file")->required();
  inspect->add_option("--n", n_prefix, "Prefix length")->check(CLI::PositiveNumber);

  auto* geometry = app.add_subcommand("geometry", "Angle and inclination of a scenario's subspaces");
  std::string geo_what, geo_path;
  geometry->add_option("quantity", geo_what, "cb or incl")->required()->check(CLI::IsMember({"cb", "incl"}));
  geometry->add_option("config", geo_path, "Scenario JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  const std::optional<fs::path> out = out_dir.empty() ? std::nullopt : std::optional<fs::path>(out_dir);
  try {
    if (*run) {
      const auto res = pprod::run_scenario(pprod::load_config(config_path), out);
      print_report(res.report);
      return res.report.all_passed() ? 0 : kExitFail;
    }
    if (*verify) {
      const auto rep = negative ? pprod::run_negative_controls(fs::path(scenario_dir) / "fixtures")
                                : pprod::verify_all(scenario_dir, out);
      print_report(rep);
      return rep.all_passed() ? 0 : kExitFail;
    }
    if (*inspect) return cmd_schedule_inspect(descriptor, n_prefix);
    if (*geometry) return cmd_geometry(geo_what, geo_path);
  } catch (const pprod::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kExitConfig;
  } catch (const pprod::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
