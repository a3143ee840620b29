#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "pprod/pprod.hpp"

using namespace pprod;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = PPROD_SCENARIO_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json minimal_json() {
  return json::parse(R"({
    "id": "minimal",
    "ambient_dim": 2,
    "subspaces": [{"kind": "coordinate_span", "indices": [1]}, {"kind": "coordinate_span", "indices": [2]}],
    "schedule": {"rule": "cyclic", "r": 2},
    "x0": {"kind": "ones"}
  })");
}

std::string config_error_path(const json& j) {
  try {
    config_from_json(j);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<no error>";
}

// sigma for base word (1,2), insertions 3, 4, ... at 3, 9, 27, ...: written out directly.
Label tail_family_sigma(Index n) {
  Index markers_upto = 0;
  for (Index p = 3; p <= n; p *= 3) {
    ++markers_upto;
    if (p == n) return static_cast<Label>(2 + markers_upto);
  }
  return ((n - markers_upto) % 2 == 1) ? 1 : 2;
}

// Dense projection matrices for the truncated construction in R^d.
Matrix tail_family_matrix(long d, Label label) {
  Matrix p = Matrix::Zero(d, d);
  if (label == 1) {
    for (long i = 0; i < d; i += 2) p(i, i) = 1.0;
  } else if (label == 2) {
    for (long i = 0; i + 1 < d; i += 2) p.block(i, i, 2, 2).setConstant(0.5);
  } else {
    const long t = label - 2;
    for (long j = t; 3 * j <= d; ++j) p(3 * j - 1, 3 * j - 1) = 1.0;
  }
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PPROD_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(LoadConfig, BundledTailFamily) {
  const auto cfg = load_config(kScenarios / "example_2_16.json");
  EXPECT_EQ(cfg.ambient_dim, 60);
  EXPECT_EQ(cfg.subspaces.size(), 2u);
  ASSERT_TRUE(cfg.tail.has_value());
  EXPECT_TRUE(std::holds_alternative<Tail3j>(cfg.tail->generator));
  EXPECT_TRUE(std::holds_alternative<PseudoComposerRule>(cfg.schedule.rule()));
  EXPECT_EQ(cfg.schedule.finite_labels(), (std::vector<Label>{1, 2}));
  EXPECT_FALSE(cfg.anchor.empty());
}

TEST(LoadConfig, MinimalConfigLoads) {
  const auto cfg = config_from_json(minimal_json());
  EXPECT_EQ(cfg.ambient_dim, 2);
  EXPECT_FALSE(cfg.schedule_only());
}

TEST(LoadConfig, ErrorsNameTheField) {
  auto j = minimal_json();
  j["subspaces"][0] = json::parse(R"({"kind": "line_angle", "theta": 0.3})");
  j["ambient_dim"] = 3;
  j["subspaces"][1] = json::parse(R"({"kind": "coordinate_span", "indices": [2]})");
  EXPECT_EQ(config_error_path(j), "/subspaces/0");

  j = minimal_json();
  j["subspaces"][1]["kind"] = "hexagon";
  EXPECT_EQ(config_error_path(j), "/subspaces/1/kind");

  j = minimal_json();
  j["schedule"]["r"] = 3;
  EXPECT_EQ(config_error_path(j), "/schedule");

  j = minimal_json();
  j["subspaces"][1]["indices"] = {5};
  EXPECT_EQ(config_error_path(j), "/subspaces/1/indices/0");

  j = minimal_json();
  j["x0"] = json::parse(R"({"kind": "explicit", "coords": [1, 2, 3]})");
  EXPECT_EQ(config_error_path(j), "/x0/coords");

  j = minimal_json();
  j["checkers"] = json::parse(R"({"sakia": true})");
  EXPECT_EQ(config_error_path(j), "/checkers/sakia");

  j = minimal_json();
  j.erase("x0");
  EXPECT_EQ(config_error_path(j), "/x0");

  j = minimal_json();
  j["iteration"] = json::parse(R"({"n_max": "many"})");
  EXPECT_EQ(config_error_path(j), "/iteration/n_max");

  EXPECT_THROW(load_config(kScenarios / "does_not_exist.json"), ConfigError);
}

TEST(LoadConfig, RoundTripEveryBundledScenario) {
  for (const auto& e : fs::directory_iterator(kScenarios)) {
    if (e.path().extension() != ".json") continue;
    const auto cfg = load_config(e.path());
    EXPECT_EQ(config_from_json(write_config(cfg)), cfg) << e.path();
    EXPECT_EQ(config_from_json(json::parse(write_config(cfg).dump())), cfg) << e.path();
  }
  const auto min = config_from_json(minimal_json());
  EXPECT_EQ(config_from_json(write_config(min)), min);
}

TEST(Builders, Tail3jGeneratorMatchesDenseOracle) {
  auto cfg = load_config(kScenarios / "example_2_16.json");
  cfg.ambient_dim = 12;
  const auto fam = build_family(cfg);
  for (Label l = 1; l <= 8; ++l)
    EXPECT_LT((fam.at(l).matrix() - tail_family_matrix(12, l)).cwiseAbs().maxCoeff(), 1e-15) << "label " << l;
  EXPECT_TRUE(fam.monotone_decreasing());
  EXPECT_TRUE(fam.at(2 + 5).source().is_zero());
}

TEST(TailFamily, DenseOracleAtD12PerStep) {
  auto cfg = load_config(kScenarios / "example_2_16.json");
  cfg.ambient_dim = 12;
  for (Index n = 1; n <= 200; ++n) ASSERT_EQ(cfg.schedule(n), tail_family_sigma(n)) << n;
  const auto fam = build_family(cfg);
  const Vector x0 = build_x0(*cfg.x0, 12);
  EXPECT_NEAR(x0.norm(), 1.0, 1e-15);
  IterateOptions o;
  o.n_max = 300;
  o.stop_tol = -1;
  o.keep_iterates = true;
  const auto tr = iterate(fam, cfg.schedule, x0, o);
  Vector y = Vector::Ones(12) / std::sqrt(12.0);
  for (Index n = 1; n <= 300; ++n) {
    y = tail_family_matrix(12, tail_family_sigma(n)) * y;
    ASSERT_LT((*tr.iterate(n) - y).norm(), 1e-12) << "step " << n;
    ASSERT_NEAR(tr.step(n).dist_to_limit, y.norm(), 1e-12);
  }
  EXPECT_EQ(tr.limit->dim(), 0);
}

TEST(RunScenario, TailFamilyAllPass) {
  const auto res = run_scenario(load_config(kScenarios / "example_2_16.json"), std::nullopt, false);
  EXPECT_TRUE(res.report.all_passed()) << to_json_value(res.report).dump(2);
  ASSERT_TRUE(res.trace.has_value());
  EXPECT_LE(res.trace->steps.back().dist_to_limit, 1e-6);
  for (Index n = 1; n <= res.trace->length(); ++n) EXPECT_LE(res.trace->norm_at(n), res.trace->norm_at(n - 1) + 1e-15);
  ASSERT_NE(res.report.find("marker_residual"), nullptr);
  EXPECT_EQ(res.report.find("marker_residual")->status, CheckStatus::pass);
}

TEST(RunScenario, VonNeumannRate) {
  const auto res = run_scenario(load_config(kScenarios / "von_neumann_45deg.json"), std::nullopt, false);
  EXPECT_TRUE(res.report.all_passed()) << to_json_value(res.report).dump(2);
  const auto* rate = res.report.find("two_subspace_rate");
  ASSERT_NE(rate, nullptr);
  EXPECT_LE(rate->measured, 1.1);
  for (Index n = 1; n <= 20; ++n)
    EXPECT_NEAR(res.trace->step(2 * n).dist_to_limit / std::pow(0.5, static_cast<double>(n)), 1.0, 0.1);
}

TEST(RunScenario, TernaryInsertionScheduleOnly) {
  const auto cfg = load_config(kScenarios / "example_2_4_meta.json");
  EXPECT_TRUE(cfg.schedule_only());
  const auto res = run_scenario(cfg, std::nullopt, false);
  EXPECT_FALSE(res.trace.has_value());
  EXPECT_TRUE(res.report.all_passed());
  EXPECT_EQ(res.report.find("schedule_markers")->detail, "3 9 27 81 ");
}

TEST(RunScenario, EveryEnabledCheckerAppearsOnce) {
  const auto cfg = load_config(kScenarios / "von_neumann_45deg.json");
  const auto res = run_scenario(cfg, std::nullopt, false);
  std::set<std::string> names;
  for (const auto& e : res.report.entries) {
    EXPECT_TRUE(names.insert(e.name).second) << "duplicate " << e.name;
    EXPECT_FALSE(e.anchor.empty()) << e.name;
  }
  EXPECT_EQ(names.count("sakai_bound"), 1u);
  EXPECT_EQ(names.count("halperin_power"), 1u);
}

TEST(RunScenario, ArtifactsAreDeterministic) {
  const auto cfg = load_config(kScenarios / "sakai_cyclic3.json");
  const fs::path a = fs::temp_directory_path() / "pprod_det_a", b = fs::temp_directory_path() / "pprod_det_b";
  run_scenario(cfg, a);
  run_scenario(cfg, b);
  for (const char* f : {"sakai_cyclic3.trace.csv", "sakai_cyclic3.summary.json"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  const auto trace = read_trace_csv(*std::make_unique<std::ifstream>(a / "sakai_cyclic3.trace.csv"));
  EXPECT_EQ(trace.length(), 200);
  const auto summary = json::parse(slurp(a / "sakai_cyclic3.summary.json"));
  EXPECT_EQ(summary.at("scenario"), "sakai_cyclic3");
  EXPECT_TRUE(summary.contains("final_dist_to_limit"));
  EXPECT_EQ(summary.at("steps"), 200);
}

TEST(RunScenario, CheckerPreconditionBecomesFailure) {
  auto j = minimal_json();
  j["checkers"] = json::parse(R"({"sakai": {"b": 1, "n": 10}})");
  const auto res = run_scenario(config_from_json(j), std::nullopt, false);
  ASSERT_EQ(res.report.entries.size(), 1u);
  EXPECT_EQ(res.report.entries[0].status, CheckStatus::fail);
  EXPECT_NE(res.report.entries[0].detail.find("quasi-periodic"), std::string::npos);
}

TEST(VerifyAll, BundledSuitePassesAndCoversEveryChecker) {
  const auto rep = verify_all(kScenarios, std::nullopt, false);
  EXPECT_TRUE(rep.all_passed()) << to_json_value(rep).dump(2);
  std::set<std::string> checks;
  for (const auto& e : rep.entries) checks.insert(e.name.substr(e.name.find('/') + 1));
  for (const char* name : {"step_identity", "norm_limit", "vanishing_differences", "marker_residual", "block_bound",
                           "weak_trace", "sakai_bound", "three_point", "halperin_power", "strong_hypotheses",
                           "subsequence_principle", "final_distance", "two_subspace_rate", "schedule_gap_index",
                           "schedule_markers", "quasi_periodic", "pseudo_periodic", "friedrichs_cb", "closed_sum",
                           "inclination", "inner_inclination"})
    EXPECT_EQ(checks.count(name), 1u) << name;
}

TEST(VerifyAll, DeterministicReports) {
  const auto a = to_json_value(verify_all(kScenarios, std::nullopt, false)).dump();
  const auto b = to_json_value(verify_all(kScenarios, std::nullopt, false)).dump();
  EXPECT_EQ(a, b);
}

TEST(NegativeControls, EveryCheckerFails) {
  const auto rep = run_negative_controls(kScenarios / "fixtures");
  EXPECT_GE(rep.entries.size(), 9u);
  for (const auto& e : rep.entries) {
    EXPECT_EQ(e.status, CheckStatus::fail) << e.name;
    EXPECT_EQ(e.detail.find("config error"), std::string::npos) << e.name << ": " << e.detail;
  }
  EXPECT_FALSE(rep.all_passed());
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run_cli("verify"), 0);
  EXPECT_EQ(run_cli("verify --negative-controls"), 1);
  EXPECT_EQ(run_cli("run " + (kScenarios / "lines_geometry.json").string()), 0);
  EXPECT_EQ(run_cli("run " + (kScenarios / "does_not_exist.json").string()), 2);
  EXPECT_EQ(run_cli("schedule inspect '{\"rule\":\"cyclic\",\"r\":3}' --n 12"), 0);
  EXPECT_EQ(run_cli("schedule inspect '{\"rule\":\"cyclic\"}' --n 12"), 2);
  EXPECT_EQ(run_cli("geometry cb " + (kScenarios / "lines_geometry.json").string()), 0);
  EXPECT_EQ(run_cli("geometry incl " + (kScenarios / "lines_geometry.json").string()), 0);
  EXPECT_EQ(run_cli("frobnicate"), 2);
}

TEST(Cli, FailingCheckerExitsOne) {
  auto j = minimal_json();
  j["checkers"] = json::parse(R"({"final_distance": {"max": 1e-3}})");
  j["iteration"] = json::parse(R"({"n_max": 1, "stop_tol": -1})");
  const fs::path p = fs::temp_directory_path() / "pprod_failing.json";
  std::ofstream(p) << j.dump();
  EXPECT_EQ(run_cli("run " + p.string()), 1);
}
