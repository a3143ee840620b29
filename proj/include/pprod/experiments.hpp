#pragma once

// JSON-configured scenarios: build subspaces, schedule and start vector, run the
// iteration, evaluate the enabled checkers, and emit trace CSV + summary JSON.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "pprod/error.hpp"
#include "pprod/geometry.hpp"
#include "pprod/hilbert.hpp"
#include "pprod/iteration.hpp"
#include "pprod/random.hpp"
#include "pprod/schedules.hpp"

namespace pprod {

using nlohmann::json;

// ---- subspace generators ----

struct BasisSpec {
  std::vector<std::vector<double>> vectors;  // spanning set, orthonormalized on build
  bool operator==(const BasisSpec&) const = default;
};

/// span{e_i : i in indices}, 1-based; `parity` ("odd"/"even") selects all such i <= d instead.
struct CoordinateSpan {
  std::vector<long> indices;
  std::string parity;
  bool operator==(const CoordinateSpan&) const = default;
};

/// span{(e_{2k-1} + e_{2k}) / 2 : k}, d even.
struct PairAverage {
  bool operator==(const PairAverage&) const = default;
};

/// span{(cos theta, sin theta)} in R^2.
struct LineAngle {
  double theta = 0.0;
  bool operator==(const LineAngle&) const = default;
};

/// span of `dim` seeded Gaussian vectors.
struct RandomSpan {
  long dim = 1;
  std::uint64_t seed = 0;
  bool operator==(const RandomSpan&) const = default;
};

using SubspaceSpec = std::variant<BasisSpec, CoordinateSpan, PairAverage, LineAngle, RandomSpan>;

/// Label r + t maps to span{e_{3j} : j >= t} (truncated to d); {0} once 3t > d.
struct Tail3j {
  bool operator==(const Tail3j&) const = default;
};

/// Explicit tail r+1, r+2, ...; the last entry repeats.
struct TailList {
  std::vector<SubspaceSpec> subspaces;
  bool operator==(const TailList&) const = default;
};

struct TailConfig {
  std::variant<Tail3j, TailList> generator = Tail3j{};
  bool monotone = true;
  bool operator==(const TailConfig&) const = default;
};

struct BasisX0 {
  long index = 1;
  bool operator==(const BasisX0&) const = default;
};
struct OnesX0 {
  bool normalize = true;
  bool operator==(const OnesX0&) const = default;
};
struct RandomX0 {
  std::uint64_t seed = 0;
  bool normalize = false;
  bool operator==(const RandomX0&) const = default;
};
struct ExplicitX0 {
  std::vector<double> coords;
  bool operator==(const ExplicitX0&) const = default;
};
using X0Spec = std::variant<BasisX0, OnesX0, RandomX0, ExplicitX0>;

struct IterationParams {
  Index n_max = 1'000'000;
  double stop_tol = 1e-10;
  bool keep_iterates = false;
  Index window = 64;
  bool operator==(const IterationParams&) const = default;
};

// ---- checker toggles ----

struct NormLimitCfg {
  bool strong = false;
  double limit_tol = 1e-6;
  double cauchy_tol = 1e-10;
  bool operator==(const NormLimitCfg&) const = default;
};
struct VanishingCfg {
  Index k = 1;
  Index window = 16;
  double ratio = 1e-3;
  bool operator==(const VanishingCfg&) const = default;
};
struct BlockBoundCfg {
  Index max_span = 256;
  bool operator==(const BlockBoundCfg&) const = default;
};
struct WeakTraceCfg {
  std::vector<std::vector<double>> probes;  // empty: standard basis
  Index tail = 10;
  double tol = 1e-6;
  bool operator==(const WeakTraceCfg&) const = default;
};
struct SakaiCfg {
  std::optional<Index> b;  // default: the schedule's window metadata
  Index n = 200;
  bool operator==(const SakaiCfg&) const = default;
};
struct ThreePointCfg {
  int samples = 1000;
  std::uint64_t seed = 0;
  bool operator==(const ThreePointCfg&) const = default;
};
struct HalperinCfg {
  Index n = 10;
  bool operator==(const HalperinCfg&) const = default;
};
struct FinalDistanceCfg {
  double max = 1e-6;
  bool operator==(const FinalDistanceCfg&) const = default;
};
struct TwoSubspaceRateCfg {
  Index n = 20;
  double factor = 1.1;
  bool operator==(const TwoSubspaceRateCfg&) const = default;
};
struct QuasiExpect {
  int r = 1;
  Index m = 1;
  bool expect = true;
  bool operator==(const QuasiExpect&) const = default;
};
struct PseudoExpect {
  int r = 1;
  bool expect = true;
  bool operator==(const PseudoExpect&) const = default;
};
struct ScheduleProfileCfg {
  Index n = 100;
  std::map<Label, Index> gap_index;      // expected values for the listed labels
  std::optional<std::vector<Index>> markers;
  std::optional<QuasiExpect> quasi;
  std::optional<PseudoExpect> pseudo;
  bool operator==(const ScheduleProfileCfg&) const = default;
};
struct GeometryCfg {
  long grid_resolution = 4096;
  int restarts = 4;
  std::uint64_t seed = 0;
  std::optional<double> expect_cb;
  double cb_tol = 1e-12;
  std::optional<double> expect_inner;
  double inner_tol = 1e-6;
  std::optional<std::pair<double, double>> inclination_range;
  bool operator==(const GeometryCfg&) const = default;
};

struct CheckerConfig {
  bool step_identity = false;
  std::optional<NormLimitCfg> norm_limit;
  std::optional<VanishingCfg> vanishing_differences;
  bool marker_residual = false;
  std::optional<BlockBoundCfg> block_bound;
  std::optional<WeakTraceCfg> weak_trace;
  std::optional<SakaiCfg> sakai;
  std::optional<ThreePointCfg> three_point;
  std::optional<HalperinCfg> halperin;
  bool strong_hypotheses = false;
  bool subsequence = false;
  std::optional<FinalDistanceCfg> final_distance;
  std::optional<TwoSubspaceRateCfg> two_subspace_rate;
  std::optional<ScheduleProfileCfg> schedule_profile;
  std::optional<GeometryCfg> geometry;
  bool operator==(const CheckerConfig&) const = default;
};

struct OutputConfig {
  std::string dir = "out";
  bool write_trace = true;
  bool operator==(const OutputConfig&) const = default;
};

struct ScenarioConfig {
  std::string id;
  std::string anchor;
  long ambient_dim = 0;                  // 0 for schedule-only scenarios
  std::vector<SubspaceSpec> subspaces;   // labels 1..r; empty for schedule-only scenarios
  std::optional<TailConfig> tail;
  Schedule schedule = Schedule::cyclic(1);
  std::optional<X0Spec> x0;
  IterationParams iteration;
  CheckerConfig checkers;
  OutputConfig output;

  bool schedule_only() const { return subspaces.empty(); }
  bool operator==(const ScenarioConfig&) const = default;
};

// ---- reports ----

enum class CheckStatus { pass, fail, skipped };

inline const char* to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
    default: return "skipped";
  }
}

struct VerifyEntry {
  std::string name;
  CheckStatus status = CheckStatus::skipped;
  double measured = 0.0;
  double threshold = 0.0;
  std::string anchor;
  std::string detail;
};

struct VerifyReport {
  std::vector<VerifyEntry> entries;

  bool all_passed() const {
    return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.status != CheckStatus::fail; });
  }
  const VerifyEntry* find(const std::string& name) const {
    for (const auto& e : entries)
      if (e.name == name) return &e;
    return nullptr;
  }
};

/// Property each checker evaluates, carried into reports.
inline std::string check_anchor(const std::string& name) {
  static const std::map<std::string, std::string> anchors = {
      {"step_identity", "||T_{n-1}x||^2 - ||T_n x||^2 = ||T_{n-1}x - T_n x||^2"},
      {"norm_limit", "||T_n x|| nonincreasing and convergent (to ||Px|| in strong mode)"},
      {"vanishing_differences", "lim ||T_{n-k}x - T_n x|| = 0"},
      {"marker_residual", "||(I-P_{r+1})T_{k_n-1}x||^2 <= ||T_{k_n-1}x||^2 - ||T_{k_n}x||^2"},
      {"block_bound", "||T_j x - T_i x||^2 <= M(||T_i x||^2 - ||T_j x||^2) inside marker blocks"},
      {"weak_trace", "<T_n x, y> -> <Px, y> for every probe y"},
      {"sakai_bound", "||T_n x - T_m x||^2 <= ((b-1)(b-2)+3) sum_{k=m}^{n-1} ||T_{k+1}x - T_k x||^2"},
      {"three_point", "||x-y||^2 <= ||x-Qy||^2 + ||x-Qx||^2 + 2||y-Qy||^2"},
      {"halperin_power", "(P_r...P_1)^n x equals the cyclic product at step rn"},
      {"strong_hypotheses", "cb(M_1..M_r) < 1 and finite intersection equals full intersection"},
      {"subsequence_principle", "weak convergence + strongly convergent subsequence => strong convergence"},
      {"final_distance", "T_n x -> Px in norm"},
      {"two_subspace_rate", "two lines: ||T_{2n}x - Px|| = cos^{2n}(theta) ||x||"},
      {"schedule_gap_index", "I(sigma,j) = sup_n (l_n - l_{n-1}), l_0 = 0"},
      {"schedule_markers", "marker positions k_n carry infinite-gap labels"},
      {"quasi_periodic", "every length-m window contains exactly the labels 1..r"},
      {"pseudo_periodic", "finite-gap labels are 1..r and marker gaps increase"},
      {"friedrichs_cb", "cb = ||P_r...P_1 P_{M^perp}||"},
      {"closed_sum", "cb < 1 iff the sum of complements is closed"},
      {"inclination", "inf_{x not in M} max_j dist(x;M_j)/dist(x;M)"},
      {"inner_inclination", "min_i inf_{x in M_i minus M} max_j dist(x;M_j)/dist(x;M)"},
  };
  const auto it = anchors.find(name);
  return it == anchors.end() ? std::string() : it->second;
}

inline VerifyEntry to_entry(const CheckReport& r) {
  return {r.name, r.passed ? CheckStatus::pass : CheckStatus::fail, r.measured, r.threshold, check_anchor(r.name),
          r.detail};
}

inline json to_json_value(const VerifyEntry& e) {
  auto finite_or_null = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  return {{"name", e.name},
          {"status", to_string(e.status)},
          {"measured", finite_or_null(e.measured)},
          {"threshold", finite_or_null(e.threshold)},
          {"anchor", e.anchor},
          {"detail", e.detail}};
}

inline json to_json_value(const VerifyReport& r) {
  json checks = json::array();
  for (const auto& e : r.entries) checks.push_back(to_json_value(e));
  return {{"passed", r.all_passed()}, {"checks", std::move(checks)}};
}

// ---- config (de)serialization ----

namespace detail {

inline json spec_to_json(const SubspaceSpec& spec) {
  return std::visit(
      [](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, BasisSpec>) return {{"kind", "basis"}, {"vectors", s.vectors}};
        else if constexpr (std::is_same_v<T, CoordinateSpan>) {
          json j = {{"kind", "coordinate_span"}};
          if (!s.parity.empty()) j["parity"] = s.parity;
          else j["indices"] = s.indices;
          return j;
        } else if constexpr (std::is_same_v<T, PairAverage>) return {{"kind", "pair_average"}};
        else if constexpr (std::is_same_v<T, LineAngle>) return {{"kind", "line_angle"}, {"theta", s.theta}};
        else return {{"kind", "random_span"}, {"dim", s.dim}, {"seed", s.seed}};
      },
      spec);
}

inline SubspaceSpec spec_from_json(const json& j, const std::string& path) {
  const auto kind = get_field<std::string>(j, "kind", path);
  if (kind == "basis") return BasisSpec{get_field<std::vector<std::vector<double>>>(j, "vectors", path)};
  if (kind == "coordinate_span") {
    CoordinateSpan c;
    c.parity = get_field_or<std::string>(j, "parity", path, "");
    if (!c.parity.empty() && c.parity != "odd" && c.parity != "even")
      throw ConfigError(path + "/parity", "must be \"odd\" or \"even\"");
    if (c.parity.empty()) c.indices = get_field<std::vector<long>>(j, "indices", path);
    return c;
  }
  if (kind == "pair_average") return PairAverage{};
  if (kind == "line_angle") return LineAngle{get_field<double>(j, "theta", path)};
  if (kind == "random_span")
    return RandomSpan{get_field<long>(j, "dim", path), get_field_or<std::uint64_t>(j, "seed", path, 0)};
  throw ConfigError(path + "/kind", "unknown subspace generator '" + kind + "'");
}

inline json x0_to_json(const X0Spec& x) {
  return std::visit(
      [](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, BasisX0>) return {{"kind", "basis"}, {"index", s.index}};
        else if constexpr (std::is_same_v<T, OnesX0>) return {{"kind", "ones"}, {"normalize", s.normalize}};
        else if constexpr (std::is_same_v<T, RandomX0>)
          return {{"kind", "seeded_random"}, {"seed", s.seed}, {"normalize", s.normalize}};
        else return {{"kind", "explicit"}, {"coords", s.coords}};
      },
      x);
}

inline X0Spec x0_from_json(const json& j, const std::string& path) {
  const auto kind = get_field<std::string>(j, "kind", path);
  if (kind == "basis") return BasisX0{get_field<long>(j, "index", path)};
  if (kind == "ones") return OnesX0{get_field_or<bool>(j, "normalize", path, true)};
  if (kind == "seeded_random")
    return RandomX0{get_field_or<std::uint64_t>(j, "seed", path, 0), get_field_or<bool>(j, "normalize", path, false)};
  if (kind == "explicit") return ExplicitX0{get_field<std::vector<double>>(j, "coords", path)};
  throw ConfigError(path + "/kind", "unknown x0 kind '" + kind + "'");
}

inline json checkers_to_json(const CheckerConfig& c) {
  json j = json::object();
  if (c.step_identity) j["step_identity"] = true;
  if (c.norm_limit) j["norm_limit"] = {{"strong", c.norm_limit->strong},
                               {"limit_tol", c.norm_limit->limit_tol},
                               {"cauchy_tol", c.norm_limit->cauchy_tol}};
  if (c.vanishing_differences)
    j["vanishing_differences"] = {{"k", c.vanishing_differences->k},
                                  {"window", c.vanishing_differences->window},
                                  {"ratio", c.vanishing_differences->ratio}};
  if (c.marker_residual) j["marker_residual"] = true;
  if (c.block_bound) j["block_bound"] = {{"max_span", c.block_bound->max_span}};
  if (c.weak_trace) {
    j["weak_trace"] = {{"tail", c.weak_trace->tail}, {"tol", c.weak_trace->tol}};
    if (c.weak_trace->probes.empty()) j["weak_trace"]["probes"] = "basis";
    else j["weak_trace"]["probes"] = c.weak_trace->probes;
  }
  if (c.sakai) {
    j["sakai"] = {{"n", c.sakai->n}};
    if (c.sakai->b) j["sakai"]["b"] = *c.sakai->b;
  }
  if (c.three_point) j["three_point"] = {{"samples", c.three_point->samples}, {"seed", c.three_point->seed}};
  if (c.halperin) j["halperin"] = {{"n", c.halperin->n}};
  if (c.strong_hypotheses) j["strong_hypotheses"] = true;
  if (c.subsequence) j["subsequence"] = true;
  if (c.final_distance) j["final_distance"] = {{"max", c.final_distance->max}};
  if (c.two_subspace_rate)
    j["two_subspace_rate"] = {{"n", c.two_subspace_rate->n}, {"factor", c.two_subspace_rate->factor}};
  if (c.schedule_profile) {
    const auto& p = *c.schedule_profile;
    json sp = {{"n", p.n}};
    if (!p.gap_index.empty()) {
      json g = json::object();
      for (const auto& [label, v] : p.gap_index) g[std::to_string(label)] = v;
      sp["gap_index"] = g;
    }
    if (p.markers) sp["markers"] = *p.markers;
    if (p.quasi) sp["quasi_periodic"] = {{"r", p.quasi->r}, {"m", p.quasi->m}, {"expect", p.quasi->expect}};
    if (p.pseudo) sp["pseudo_periodic"] = {{"r", p.pseudo->r}, {"expect", p.pseudo->expect}};
    j["schedule_profile"] = sp;
  }
  if (c.geometry) {
    const auto& g = *c.geometry;
    json gj = {{"grid_resolution", g.grid_resolution}, {"restarts", g.restarts}, {"seed", g.seed},
               {"cb_tol", g.cb_tol}, {"inner_tol", g.inner_tol}};
    if (g.expect_cb) gj["expect_cb"] = *g.expect_cb;
    if (g.expect_inner) gj["expect_inner"] = *g.expect_inner;
    if (g.inclination_range) gj["inclination_range"] = {g.inclination_range->first, g.inclination_range->second};
    j["geometry"] = gj;
  }
  return j;
}

inline CheckerConfig checkers_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  static const std::vector<std::string> known = {
      "step_identity", "norm_limit", "vanishing_differences", "marker_residual", "block_bound",
      "weak_trace",    "sakai",      "three_point",           "halperin",        "strong_hypotheses",
      "subsequence",   "final_distance", "two_subspace_rate",  "schedule_profile", "geometry"};
  for (const auto& [key, value] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError(path + "/" + key, "unknown checker");

  CheckerConfig c;
  c.step_identity = get_field_or<bool>(j, "step_identity", path, false);
  c.marker_residual = get_field_or<bool>(j, "marker_residual", path, false);
  c.strong_hypotheses = get_field_or<bool>(j, "strong_hypotheses", path, false);
  c.subsequence = get_field_or<bool>(j, "subsequence", path, false);
  auto sub = [&](const char* key) { return path + "/" + key; };
  if (j.contains("norm_limit")) {
    const auto& v = j.at("norm_limit");
    c.norm_limit = NormLimitCfg{get_field_or<bool>(v, "strong", sub("norm_limit"), false),
                                get_field_or<double>(v, "limit_tol", sub("norm_limit"), 1e-6),
                                get_field_or<double>(v, "cauchy_tol", sub("norm_limit"), 1e-10)};
  }
  if (j.contains("vanishing_differences")) {
    const auto& v = j.at("vanishing_differences");
    const auto p = sub("vanishing_differences");
    c.vanishing_differences = VanishingCfg{get_field_or<Index>(v, "k", p, 1), get_field_or<Index>(v, "window", p, 16),
                                           get_field_or<double>(v, "ratio", p, 1e-3)};
  }
  if (j.contains("block_bound"))
    c.block_bound = BlockBoundCfg{get_field_or<Index>(j.at("block_bound"), "max_span", sub("block_bound"), 256)};
  if (j.contains("weak_trace")) {
    const auto& v = j.at("weak_trace");
    const auto p = sub("weak_trace");
    WeakTraceCfg w;
    w.tail = get_field_or<Index>(v, "tail", p, 10);
    w.tol = get_field_or<double>(v, "tol", p, 1e-6);
    if (v.contains("probes") && !(v.at("probes").is_string() && v.at("probes") == "basis"))
      w.probes = get_field<std::vector<std::vector<double>>>(v, "probes", p);
    c.weak_trace = w;
  }
  if (j.contains("sakai")) {
    const auto& v = j.at("sakai");
    SakaiCfg s;
    s.n = get_field_or<Index>(v, "n", sub("sakai"), 200);
    if (v.contains("b")) s.b = get_field<Index>(v, "b", sub("sakai"));
    c.sakai = s;
  }
  if (j.contains("three_point")) {
    const auto& v = j.at("three_point");
    c.three_point = ThreePointCfg{get_field_or<int>(v, "samples", sub("three_point"), 1000),
                                  get_field_or<std::uint64_t>(v, "seed", sub("three_point"), 0)};
  }
  if (j.contains("halperin")) c.halperin = HalperinCfg{get_field_or<Index>(j.at("halperin"), "n", sub("halperin"), 10)};
  if (j.contains("final_distance"))
    c.final_distance = FinalDistanceCfg{get_field_or<double>(j.at("final_distance"), "max", sub("final_distance"), 1e-6)};
  if (j.contains("two_subspace_rate")) {
    const auto& v = j.at("two_subspace_rate");
    c.two_subspace_rate = TwoSubspaceRateCfg{get_field_or<Index>(v, "n", sub("two_subspace_rate"), 20),
                                             get_field_or<double>(v, "factor", sub("two_subspace_rate"), 1.1)};
  }
  if (j.contains("schedule_profile")) {
    const auto& v = j.at("schedule_profile");
    const auto p = sub("schedule_profile");
    ScheduleProfileCfg s;
    s.n = get_field_or<Index>(v, "n", p, 100);
    if (v.contains("gap_index")) {
      const auto& g = v.at("gap_index");
      if (!g.is_object()) throw ConfigError(p + "/gap_index", "expected an object label -> value");
      for (const auto& [key, val] : g.items()) {
        Label label = 0;
        try {
          label = std::stoi(key);
        } catch (const std::exception&) {
          throw ConfigError(p + "/gap_index/" + key, "label keys must be integers");
        }
        s.gap_index[label] = get_as<Index>(val, p + "/gap_index/" + key);
      }
    }
    if (v.contains("markers")) s.markers = get_field<std::vector<Index>>(v, "markers", p);
    if (v.contains("quasi_periodic")) {
      const auto& q = v.at("quasi_periodic");
      const auto qp = p + "/quasi_periodic";
      s.quasi = QuasiExpect{get_field<int>(q, "r", qp), get_field<Index>(q, "m", qp), get_field_or<bool>(q, "expect", qp, true)};
    }
    if (v.contains("pseudo_periodic")) {
      const auto& q = v.at("pseudo_periodic");
      const auto qp = p + "/pseudo_periodic";
      s.pseudo = PseudoExpect{get_field<int>(q, "r", qp), get_field_or<bool>(q, "expect", qp, true)};
    }
    c.schedule_profile = s;
  }
  if (j.contains("geometry")) {
    const auto& v = j.at("geometry");
    const auto p = sub("geometry");
    GeometryCfg g;
    g.grid_resolution = get_field_or<long>(v, "grid_resolution", p, 4096);
    g.restarts = get_field_or<int>(v, "restarts", p, 4);
    g.seed = get_field_or<std::uint64_t>(v, "seed", p, 0);
    g.cb_tol = get_field_or<double>(v, "cb_tol", p, 1e-12);
    g.inner_tol = get_field_or<double>(v, "inner_tol", p, 1e-6);
    if (v.contains("expect_cb")) g.expect_cb = get_field<double>(v, "expect_cb", p);
    if (v.contains("expect_inner")) g.expect_inner = get_field<double>(v, "expect_inner", p);
    if (v.contains("inclination_range")) {
      const auto r = get_field<std::vector<double>>(v, "inclination_range", p);
      if (r.size() != 2) throw ConfigError(p + "/inclination_range", "expected [lo, hi]");
      g.inclination_range = std::make_pair(r[0], r[1]);
    }
    c.geometry = g;
  }
  return c;
}

}  // namespace detail

inline json write_config(const ScenarioConfig& cfg) {
  json j = {{"id", cfg.id}, {"anchor", cfg.anchor}, {"schedule", to_json_value(cfg.schedule)}};
  if (!cfg.schedule_only()) {
    j["ambient_dim"] = cfg.ambient_dim;
    json subs = json::array();
    for (const auto& s : cfg.subspaces) subs.push_back(detail::spec_to_json(s));
    j["subspaces"] = subs;
  }
  if (cfg.tail) {
    json t = std::visit(
        [](const auto& g) -> json {
          using T = std::decay_t<decltype(g)>;
          if constexpr (std::is_same_v<T, Tail3j>) return {{"kind", "tail_3j"}};
          else {
            json list = json::array();
            for (const auto& s : g.subspaces) list.push_back(detail::spec_to_json(s));
            return {{"kind", "list"}, {"subspaces", list}};
          }
        },
        cfg.tail->generator);
    t["monotone"] = cfg.tail->monotone;
    j["tail"] = t;
  }
  if (cfg.x0) j["x0"] = detail::x0_to_json(*cfg.x0);
  j["iteration"] = {{"n_max", cfg.iteration.n_max},
                    {"stop_tol", cfg.iteration.stop_tol},
                    {"keep_iterates", cfg.iteration.keep_iterates},
                    {"window", cfg.iteration.window}};
  j["checkers"] = detail::checkers_to_json(cfg.checkers);
  j["output"] = {{"dir", cfg.output.dir}, {"write_trace", cfg.output.write_trace}};
  return j;
}

namespace detail {

inline void validate_spec(const SubspaceSpec& spec, long d, const std::string& path) {
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, BasisSpec>) {
          for (std::size_t i = 0; i < s.vectors.size(); ++i)
            if (static_cast<long>(s.vectors[i].size()) != d)
              throw ConfigError(path + "/vectors/" + std::to_string(i), "vector length differs from ambient_dim");
        } else if constexpr (std::is_same_v<T, CoordinateSpan>) {
          for (std::size_t i = 0; i < s.indices.size(); ++i)
            if (s.indices[i] < 1 || s.indices[i] > d)
              throw ConfigError(path + "/indices/" + std::to_string(i), "coordinate index outside 1..ambient_dim");
        } else if constexpr (std::is_same_v<T, PairAverage>) {
          if (d % 2 != 0) throw ConfigError(path, "pair_average needs an even ambient_dim");
        } else if constexpr (std::is_same_v<T, LineAngle>) {
          if (d != 2) throw ConfigError(path, "line_angle generator requires ambient_dim = 2");
        } else {
          if (s.dim < 0 || s.dim > d) throw ConfigError(path + "/dim", "need 0 <= dim <= ambient_dim");
        }
      },
      spec);
}

inline void validate_config(const ScenarioConfig& cfg) {
  if (cfg.id.empty()) throw ConfigError("/id", "must be a nonempty string");
  const auto finite = cfg.schedule.finite_labels();
  const auto tail = cfg.schedule.tail_range();
  if (cfg.schedule_only()) {
    const auto& c = cfg.checkers;
    if (c.step_identity || c.norm_limit || c.vanishing_differences || c.marker_residual || c.block_bound ||
        c.weak_trace || c.sakai || c.halperin || c.strong_hypotheses || c.subsequence || c.final_distance ||
        c.two_subspace_rate || c.geometry)
      throw ConfigError("/checkers", "schedule-only scenario (no subspaces) supports only schedule_profile and three_point");
    if (c.three_point && cfg.ambient_dim <= 0) throw ConfigError("/ambient_dim", "three_point needs ambient_dim");
    return;
  }
  const long d = cfg.ambient_dim;
  if (d <= 0) throw ConfigError("/ambient_dim", "must be a positive integer");
  for (std::size_t i = 0; i < cfg.subspaces.size(); ++i)
    validate_spec(cfg.subspaces[i], d, "/subspaces/" + std::to_string(i));
  const auto r = static_cast<Label>(cfg.subspaces.size());
  auto check_label = [&](Label l) {
    if (l < 1 || (l > r && !cfg.tail))
      throw ConfigError("/schedule", "label " + std::to_string(l) + " has no subspace spec");
  };
  if (finite) for (Label l : *finite) check_label(l);
  else
    for (Index n = 1; n <= cfg.schedule.length().value_or(0); ++n) check_label(cfg.schedule(n));
  if (tail) {
    check_label(tail->first);
    if (tail->first <= r) throw ConfigError("/schedule", "insertion labels must exceed the finite part 1.." + std::to_string(r));
  }
  if (cfg.tail) {
    if (const auto* list = std::get_if<TailList>(&cfg.tail->generator)) {
      if (list->subspaces.empty()) throw ConfigError("/tail/subspaces", "must be nonempty");
      for (std::size_t i = 0; i < list->subspaces.size(); ++i)
        validate_spec(list->subspaces[i], d, "/tail/subspaces/" + std::to_string(i));
    } else if (d < 3) {
      throw ConfigError("/tail", "tail_3j needs ambient_dim >= 3");
    }
  }
  if (!cfg.x0) throw ConfigError("/x0", "missing required field");
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, BasisX0>) {
          if (x.index < 1 || x.index > d) throw ConfigError("/x0/index", "outside 1..ambient_dim");
        } else if constexpr (std::is_same_v<T, ExplicitX0>) {
          if (static_cast<long>(x.coords.size()) != d) throw ConfigError("/x0/coords", "length differs from ambient_dim");
        }
      },
      *cfg.x0);
  if (cfg.iteration.n_max < 1) throw ConfigError("/iteration/n_max", "must be >= 1");
  if (cfg.checkers.weak_trace)
    for (std::size_t i = 0; i < cfg.checkers.weak_trace->probes.size(); ++i)
      if (static_cast<long>(cfg.checkers.weak_trace->probes[i].size()) != d)
        throw ConfigError("/checkers/weak_trace/probes/" + std::to_string(i), "length differs from ambient_dim");
  if (cfg.checkers.two_subspace_rate && r != 2)
    throw ConfigError("/checkers/two_subspace_rate", "needs exactly two subspaces");
  if (cfg.checkers.marker_residual && !cfg.tail) throw ConfigError("/checkers/marker_residual", "needs a tail");
}

}  // namespace detail

inline ScenarioConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("", "top level must be an object");
  static const std::vector<std::string> known = {"id", "anchor", "ambient_dim", "subspaces", "tail", "schedule",
                                                 "x0", "iteration", "checkers", "output"};
  for (const auto& [key, value] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end()) throw ConfigError("/" + key, "unknown field");

  ScenarioConfig cfg;
  cfg.id = detail::get_field<std::string>(j, "id", "");
  cfg.anchor = detail::get_field_or<std::string>(j, "anchor", "", "");
  cfg.schedule = schedule_from_json(detail::field(j, "schedule", ""), "/schedule");
  cfg.ambient_dim = detail::get_field_or<long>(j, "ambient_dim", "", 0);
  if (j.contains("subspaces")) {
    const auto& subs = j.at("subspaces");
    if (!subs.is_array()) throw ConfigError("/subspaces", "expected an array");
    for (std::size_t i = 0; i < subs.size(); ++i)
      cfg.subspaces.push_back(detail::spec_from_json(subs[i], "/subspaces/" + std::to_string(i)));
  }
  if (j.contains("tail")) {
    const auto& t = j.at("tail");
    TailConfig tc;
    const auto kind = detail::get_field<std::string>(t, "kind", "/tail");
    if (kind == "tail_3j") {
      tc.generator = Tail3j{};
    } else if (kind == "list") {
      TailList list;
      const auto& subs = detail::field(t, "subspaces", "/tail");
      if (!subs.is_array()) throw ConfigError("/tail/subspaces", "expected an array");
      for (std::size_t i = 0; i < subs.size(); ++i)
        list.subspaces.push_back(detail::spec_from_json(subs[i], "/tail/subspaces/" + std::to_string(i)));
      tc.generator = std::move(list);
    } else {
      throw ConfigError("/tail/kind", "unknown tail generator '" + kind + "'");
    }
    tc.monotone = detail::get_field_or<bool>(t, "monotone", "/tail", true);
    cfg.tail = std::move(tc);
  }
  if (j.contains("x0")) cfg.x0 = detail::x0_from_json(j.at("x0"), "/x0");
  if (j.contains("iteration")) {
    const auto& it = j.at("iteration");
    cfg.iteration.n_max = detail::get_field_or<Index>(it, "n_max", "/iteration", cfg.iteration.n_max);
    cfg.iteration.stop_tol = detail::get_field_or<double>(it, "stop_tol", "/iteration", cfg.iteration.stop_tol);
    cfg.iteration.keep_iterates = detail::get_field_or<bool>(it, "keep_iterates", "/iteration", false);
    cfg.iteration.window = detail::get_field_or<Index>(it, "window", "/iteration", cfg.iteration.window);
  }
  if (j.contains("checkers")) cfg.checkers = detail::checkers_from_json(j.at("checkers"), "/checkers");
  if (j.contains("output")) {
    const auto& o = j.at("output");
    cfg.output.dir = detail::get_field_or<std::string>(o, "dir", "/output", cfg.output.dir);
    cfg.output.write_trace = detail::get_field_or<bool>(o, "write_trace", "/output", true);
  }
  detail::validate_config(cfg);
  return cfg;
}

inline ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

// ---- builders ----

inline Subspace build_subspace(const SubspaceSpec& spec, long d) {
  return std::visit(
      [d](const auto& s) -> Subspace {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, BasisSpec>) {
          Matrix cols(d, static_cast<long>(s.vectors.size()));
          for (std::size_t j = 0; j < s.vectors.size(); ++j)
            for (long i = 0; i < d; ++i) cols(i, static_cast<long>(j)) = s.vectors[j][static_cast<std::size_t>(i)];
          return orthonormalize(cols);
        } else if constexpr (std::is_same_v<T, CoordinateSpan>) {
          std::vector<long> idx = s.indices;
          if (!s.parity.empty()) {
            idx.clear();
            for (long i = (s.parity == "odd" ? 1 : 2); i <= d; i += 2) idx.push_back(i);
          }
          Matrix cols = Matrix::Zero(d, static_cast<long>(idx.size()));
          for (std::size_t j = 0; j < idx.size(); ++j) cols(idx[j] - 1, static_cast<long>(j)) = 1.0;
          return orthonormalize(cols);
        } else if constexpr (std::is_same_v<T, PairAverage>) {
          Matrix cols = Matrix::Zero(d, d / 2);
          for (long k = 0; k < d / 2; ++k) cols(2 * k, k) = cols(2 * k + 1, k) = 0.5;
          return orthonormalize(cols);
        } else if constexpr (std::is_same_v<T, LineAngle>) {
          Matrix q(2, 1);
          q << std::cos(s.theta), std::sin(s.theta);
          return Subspace(q);
        } else {
          return random_subspace(d, s.dim, s.seed);
        }
      },
      spec);
}

inline Subspace tail_3j_subspace(long d, long offset) {
  std::vector<long> idx;
  for (long j = std::max(offset, 1L); 3 * j <= d; ++j) idx.push_back(3 * j);
  Matrix cols = Matrix::Zero(d, static_cast<long>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) cols(idx[k] - 1, static_cast<long>(k)) = 1.0;
  return orthonormalize(cols);
}

inline ProjectorFamily build_family(const ScenarioConfig& cfg) {
  const long d = cfg.ambient_dim;
  std::vector<Projector> finite;
  for (const auto& s : cfg.subspaces) finite.emplace_back(build_subspace(s, d));
  if (!cfg.tail) return ProjectorFamily(std::move(finite));
  const TailOrder order = cfg.tail->monotone ? TailOrder::monotone_decreasing : TailOrder::unordered;
  std::vector<Projector> tail;
  if (std::holds_alternative<Tail3j>(cfg.tail->generator)) {
    // offsets 1 .. d/3 + 1; the last one is {0} and stands for every later label
    for (long t = 1; t <= d / 3 + 1; ++t) tail.emplace_back(tail_3j_subspace(d, t));
  } else {
    for (const auto& s : std::get<TailList>(cfg.tail->generator).subspaces) tail.emplace_back(build_subspace(s, d));
  }
  return ProjectorFamily(std::move(finite), std::move(tail), order);
}

inline Vector build_x0(const X0Spec& spec, long d) {
  return std::visit(
      [d](const auto& s) -> Vector {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, BasisX0>) {
          return Vector::Unit(d, s.index - 1);
        } else if constexpr (std::is_same_v<T, OnesX0>) {
          Vector v = Vector::Ones(d);
          return s.normalize ? Vector(v / v.norm()) : v;
        } else if constexpr (std::is_same_v<T, RandomX0>) {
          SplitMix64 rng(s.seed);
          Vector v = random_gaussian_vector(d, rng);
          return s.normalize ? Vector(v / v.norm()) : v;
        } else {
          return Eigen::Map<const Vector>(s.coords.data(), static_cast<long>(s.coords.size()));
        }
      },
      spec);
}

inline IterateOptions iterate_options(const ScenarioConfig& cfg) {
  IterateOptions o;
  o.n_max = cfg.iteration.n_max;
  o.stop_tol = cfg.iteration.stop_tol;
  o.keep_iterates = cfg.iteration.keep_iterates;
  o.window = cfg.iteration.window;
  return o;
}

// ---- running ----

struct ScenarioResult {
  std::optional<IterationTrace> trace;
  VerifyReport report;
  json summary;
};

namespace detail {

inline void add_guarded(VerifyReport& rep, const std::string& name, const std::function<VerifyEntry()>& fn) {
  try {
    rep.entries.push_back(fn());
  } catch (const Error& e) {
    rep.entries.push_back({name, CheckStatus::fail, 0.0, 0.0, check_anchor(name), e.what()});
  }
}

inline VerifyEntry make_entry(const std::string& name, bool ok, double measured, double threshold,
                              std::string detail = {}) {
  return {name, ok ? CheckStatus::pass : CheckStatus::fail, measured, threshold, check_anchor(name),
          std::move(detail)};
}

inline void run_schedule_checks(const ScenarioConfig& cfg, VerifyReport& rep) {
  const auto& sp = *cfg.checkers.schedule_profile;
  const auto& s = cfg.schedule;
  add_guarded(rep, "schedule_gap_index", [&] {
    const auto p = profile(s, sp.n);
    double mismatches = 0;
    std::ostringstream d;
    for (const auto& [label, expected] : sp.gap_index) {
      const auto it = p.gap_index.find(label);
      const Index got = it == p.gap_index.end() ? -1 : it->second;
      d << label << "->" << got << " ";
      if (got != expected) ++mismatches;
    }
    return make_entry("schedule_gap_index", mismatches == 0, mismatches, 0, d.str());
  });
  if (sp.markers)
    add_guarded(rep, "schedule_markers", [&] {
      const auto p = profile(s, sp.n);
      std::ostringstream d;
      for (Index k : p.markers) d << k << " ";
      return make_entry("schedule_markers", p.markers == *sp.markers,
                        static_cast<double>(p.markers.size()), static_cast<double>(sp.markers->size()), d.str());
    });
  if (sp.quasi)
    add_guarded(rep, "quasi_periodic", [&] {
      const bool got = is_quasi_periodic(s, sp.quasi->r, sp.quasi->m, sp.n);
      return make_entry("quasi_periodic", got == sp.quasi->expect, got, sp.quasi->expect,
                        std::string("quasi-periodic: ") + (got ? "true" : "false"));
    });
  if (sp.pseudo)
    add_guarded(rep, "pseudo_periodic", [&] {
      const auto c = classify_pseudo_periodic(s, sp.pseudo->r, sp.n);
      std::string d = std::string("pseudo-periodic: ") + (c.pseudo_periodic ? "true" : "false");
      if (c.degenerate_quasi_periodic) d += " (degenerate: quasi-periodic)";
      if (c.heuristic) d += " (prefix heuristic)";
      return make_entry("pseudo_periodic", c.pseudo_periodic == sp.pseudo->expect, c.pseudo_periodic,
                        sp.pseudo->expect, d);
    });
}

inline void run_three_point(const ThreePointCfg& tp, long d, VerifyReport& rep) {
  add_guarded(rep, "three_point", [&] {
    SplitMix64 rng(tp.seed);
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < tp.samples; ++i) {
      const long k = static_cast<long>(rng.below(static_cast<std::uint64_t>(d) + 1));
      const Projector q(random_subspace(d, k, rng.next()));
      const Vector x = random_gaussian_vector(d, rng);
      const Vector y = random_gaussian_vector(d, rng);
      worst = std::min(worst, check_three_point(q, x, y).measured);
    }
    const double threshold = -1e-10;
    return make_entry("three_point", worst >= threshold, worst, threshold,
                      std::to_string(tp.samples) + " seeded (Q,x,y) triples; measured = min slack");
  });
}

inline void run_geometry_checks(const GeometryCfg& g, const std::vector<Subspace>& subs, VerifyReport& rep) {
  add_guarded(rep, "friedrichs_cb", [&] {
    const auto a = friedrichs_cb(subs);
    const bool ok = !g.expect_cb || std::abs(a.cb - *g.expect_cb) <= g.cb_tol;
    return make_entry("friedrichs_cb", ok, a.cb, g.expect_cb.value_or(1.0), "tol " + std::to_string(g.cb_tol));
  });
  add_guarded(rep, "closed_sum", [&] {
    const double margin = closed_sum_margin(subs);
    return make_entry("closed_sum", closed_sum_criterion(subs), margin, kClosedSumMargin, "measured = 1 - cb");
  });
  add_guarded(rep, "inclination", [&] {
    const auto e = inclination(subs, g.grid_resolution, g.restarts, g.seed);
    bool ok = e.value_lower <= e.value_upper;
    if (g.inclination_range) ok = ok && e.value_upper >= g.inclination_range->first && e.value_upper <= g.inclination_range->second;
    return make_entry("inclination", ok, e.value_upper,
                      g.inclination_range ? g.inclination_range->second : e.value_upper,
                      "lower " + std::to_string(e.value_lower) + ", grid " + std::to_string(e.grid_resolution));
  });
  add_guarded(rep, "inner_inclination", [&] {
    const auto e = inner_inclination(subs, g.grid_resolution, g.restarts, g.seed);
    const bool ok = !g.expect_inner || std::abs(e.value_upper - *g.expect_inner) <= g.inner_tol;
    return make_entry("inner_inclination", ok, e.value_upper, g.expect_inner.value_or(e.value_upper),
                      "lower " + std::to_string(e.value_lower));
  });
}

inline std::vector<Vector> probe_vectors(const WeakTraceCfg& w, long d) {
  std::vector<Vector> probes;
  if (w.probes.empty())
    for (long i = 0; i < d; ++i) probes.push_back(Vector::Unit(d, i));
  else
    for (const auto& p : w.probes) probes.push_back(Eigen::Map<const Vector>(p.data(), d));
  return probes;
}

inline std::string output_dir(const ScenarioConfig& cfg, const std::optional<std::filesystem::path>& override_dir) {
  if (override_dir) return override_dir->string();
  if (const char* env = std::getenv("PPROD_OUT_DIR"); env && *env) return env;
  return cfg.output.dir;
}

}  // namespace detail

/// Run one scenario. Artifacts go to `out_dir` (else $PPROD_OUT_DIR, else the config's
/// output.dir) unless `write` is false.
inline ScenarioResult run_scenario(const ScenarioConfig& cfg, std::optional<std::filesystem::path> out_dir = std::nullopt,
                                   bool write = true) {
  ScenarioResult res;
  auto& rep = res.report;
  const auto& ck = cfg.checkers;
  json summary = {{"scenario", cfg.id}, {"anchor", cfg.anchor}};

  if (cfg.schedule_only()) {
    if (ck.schedule_profile) detail::run_schedule_checks(cfg, rep);
    if (ck.three_point) detail::run_three_point(*ck.three_point, cfg.ambient_dim, rep);
  } else {
    const long d = cfg.ambient_dim;
    const ProjectorFamily family = build_family(cfg);
    const Vector x0 = build_x0(*cfg.x0, d);
    const IterateOptions opt = iterate_options(cfg);
    IterationTrace tr = iterate(family, cfg.schedule, x0, opt);
    const auto markers = profile(cfg.schedule, tr.length()).markers;
    const double weak_scale = std::max(1e-300, tr.x0_norm);
    bool weak_ok = false;

    if (ck.schedule_profile) detail::run_schedule_checks(cfg, rep);
    if (ck.step_identity) detail::add_guarded(rep, "step_identity", [&] { return to_entry(check_step_identity(tr)); });
    if (ck.norm_limit)
      detail::add_guarded(rep, "norm_limit", [&] {
        NormLimitOptions o;
        o.strong = ck.norm_limit->strong;
        o.limit_tol = ck.norm_limit->limit_tol;
        o.cauchy_tol = ck.norm_limit->cauchy_tol;
        return to_entry(check_norm_limit_consistency(tr, o));
      });
    if (ck.vanishing_differences)
      detail::add_guarded(rep, "vanishing_differences", [&] {
        const auto& v = *ck.vanishing_differences;
        return to_entry(check_vanishing_differences(tr, v.k, v.window, v.ratio));
      });
    if (ck.marker_residual)
      detail::add_guarded(rep, "marker_residual",
                          [&] { return to_entry(check_marker_residual(tr, family, markers)); });
    if (ck.block_bound)
      detail::add_guarded(rep, "block_bound", [&] {
        const double m = static_cast<double>(sakai_constant(cfg.schedule.window()));
        return to_entry(check_block_bound(tr, markers, m, ck.block_bound->max_span));
      });
    if (ck.weak_trace)
      detail::add_guarded(rep, "weak_trace", [&] {
        WeakTraceOptions w{ck.weak_trace->tail, ck.weak_trace->tol};
        auto r = check_weak_trace(family, cfg.schedule, x0, opt, detail::probe_vectors(*ck.weak_trace, d), w);
        weak_ok = r.passed;
        return to_entry(r);
      });
    if (ck.sakai)
      detail::add_guarded(rep, "sakai_bound", [&] {
        return to_entry(check_sakai_all_pairs(tr, ck.sakai->b.value_or(cfg.schedule.window()), ck.sakai->n));
      });
    if (ck.three_point) detail::run_three_point(*ck.three_point, d, rep);
    if (ck.halperin)
      detail::add_guarded(rep, "halperin_power", [&] { return to_entry(check_halperin(family, x0, ck.halperin->n)); });
    if (ck.strong_hypotheses)
      detail::add_guarded(rep, "strong_hypotheses",
                          [&] { return to_entry(check_strong_hypotheses(family, cfg.schedule)); });
    if (ck.subsequence)
      detail::add_guarded(rep, "subsequence_principle",
                          [&] { return to_entry(check_subsequence_principle(tr, markers, weak_ok)); });
    if (ck.final_distance)
      detail::add_guarded(rep, "final_distance", [&] {
        const double dist = tr.steps.back().dist_to_limit / weak_scale;
        return detail::make_entry("final_distance", dist <= ck.final_distance->max, dist, ck.final_distance->max,
                                  "after " + std::to_string(tr.length()) + " steps");
      });
    if (ck.two_subspace_rate)
      detail::add_guarded(rep, "two_subspace_rate", [&] {
        const double c = friedrichs_cb(family.finite_ranges()).cb;
        double worst = 1.0;
        Index used = 0;
        for (Index n = 1; n <= ck.two_subspace_rate->n && 2 * n <= tr.length(); ++n) {
          const double predicted = std::pow(c, static_cast<double>(2 * n)) * tr.x0_norm;
          const double ratio = tr.step(2 * n).dist_to_limit / predicted;
          worst = std::max({worst, ratio, 1.0 / ratio});
          used = n;
        }
        const bool ok = used == ck.two_subspace_rate->n && worst <= ck.two_subspace_rate->factor;
        return detail::make_entry("two_subspace_rate", ok, worst, ck.two_subspace_rate->factor,
                                  "cos(theta)=" + std::to_string(c) + ", n<=" + std::to_string(used));
      });
    if (ck.geometry) detail::run_geometry_checks(*ck.geometry, family.finite_ranges(), rep);

    summary["steps"] = tr.length();
    summary["final_norm"] = tr.steps.back().norm;
    summary["final_dist_to_limit"] = tr.steps.back().dist_to_limit;
    summary["limit_dim"] = tr.limit->dim();
    summary["limit_provenance"] = tr.limit_provenance;
    summary["markers_in_trace"] = markers;
    json rates = json::array();
    for (double r : block_decay_rates(tr, markers)) rates.push_back(r);
    summary["block_decay_rates"] = rates;
    res.trace = std::move(tr);
  }

  const json report = to_json_value(rep);
  summary["checks"] = report["checks"];
  summary["passed"] = report["passed"];
  res.summary = summary;

  if (write) {
    const std::filesystem::path dir = detail::output_dir(cfg, out_dir);
    std::filesystem::create_directories(dir);
    if (res.trace && cfg.output.write_trace) {
      std::ofstream csv(dir / (cfg.id + ".trace.csv"));
      write_trace_csv(*res.trace, csv);
    }
    std::ofstream js(dir / (cfg.id + ".summary.json"));
    js << res.summary.dump(2) << '\n';
  }
  return res;
}

// ---- negative controls ----

struct NegativeControl {
  std::string name;
  std::function<CheckReport()> run;
};

/// Corrupted inputs; every checker listed here must report failure on its fixture.
inline std::vector<NegativeControl> negative_controls(const std::filesystem::path& fixture_dir) {
  std::vector<NegativeControl> out;
  const long d = 4;
  const std::vector<Projector> finite{Projector(random_subspace(d, 3, 101)), Projector(random_subspace(d, 3, 202)),
                                      Projector(random_subspace(d, 2, 303))};
  const ProjectorFamily family(finite);
  SplitMix64 rng(7);
  const Vector x0 = random_gaussian_vector(d, rng);
  IterateOptions opt;
  opt.n_max = 60;
  opt.stop_tol = -1.0;
  opt.keep_iterates = true;

  auto clean = [=] { return iterate(family, Schedule::cyclic(3), x0, opt); };

  out.push_back({"step_identity", [fixture_dir] {
                   std::ifstream in(fixture_dir / "step_identity_corrupted.csv");
                   if (!in) throw ConfigError("", "missing fixture step_identity_corrupted.csv");
                   return check_step_identity(read_trace_csv(in));
                 }});
  out.push_back({"norm_limit", [=] {
                   auto tr = clean();
                   tr.steps[10].norm *= 1.5;
                   return check_norm_limit_consistency(tr);
                 }});
  out.push_back({"sakai_bound", [=] {
                   auto tr = clean();
                   tr.iterates.corrupt(20, *tr.iterate(20) * 3.0 + Vector::Ones(d));
                   return check_sakai_all_pairs(tr, 3, 40);
                 }});
  out.push_back({"vanishing_differences", [=] {
                   auto tr = clean();
                   tr.iterates.corrupt(tr.length() - 2, *tr.iterate(tr.length() - 2) + Vector::Ones(d));
                   return check_vanishing_differences(tr, 1, 8);
                 }});
  out.push_back({"block_bound", [=] {
                   auto tr = clean();
                   tr.iterates.corrupt(5, *tr.iterate(5) + Vector::Ones(d));
                   return check_block_bound(tr, {}, static_cast<double>(sakai_constant(3)));
                 }});
  out.push_back({"marker_residual", [=] {
                   const ProjectorFamily fam({Projector(random_subspace(d, 3, 11)), Projector(random_subspace(d, 3, 12))},
                                             {Projector(random_subspace(d, 2, 13)), Projector(Subspace::zero(d))},
                                             TailOrder::unordered);
                   const auto s = compose_pseudo({1, 2}, SequentialLabels{3}, PowerMarkers{3});
                   IterateOptions o = opt;
                   o.n_max = 30;
                   auto tr = iterate(fam, s, Vector::Ones(d), o);
                   tr.steps[2].norm = tr.steps[1].norm;  // no norm drop at marker 3
                   MarkerResidualOptions mo;
                   mo.require_monotone = false;
                   return check_marker_residual(tr, fam, profile(s, tr.length()).markers, mo);
                 }});
  out.push_back({"three_point", [=] {
                   // "Q" maps y to the midpoint (x+y)/2 and fixes x: not an orthogonal projection
                   const Vector x = Vector::Unit(d, 0), y = Vector::Unit(d, 1);
                   return check_three_point_values(x, y, x, 0.5 * (x + y));
                 }});
  out.push_back({"weak_trace", [=] {
                   IterateOptions o = opt;
                   o.limit_override = Subspace::full(d);  // wrong limit: claims P = I
                   o.limit_note = "corrupted";
                   return check_weak_trace(family, Schedule::cyclic(3), x0, o, {Vector::Unit(d, 0), Vector::Unit(d, 1)});
                 }});
  out.push_back({"halperin_power", [=] { return check_halperin(family, x0, 4, 1); }});
  return out;
}

/// Outcome of each corrupted fixture; a correct build reports every entry as failed.
inline VerifyReport run_negative_controls(const std::filesystem::path& fixture_dir) {
  VerifyReport rep;
  for (const auto& nc : negative_controls(fixture_dir))
    detail::add_guarded(rep, nc.name, [&] {
      auto e = to_entry(nc.run());
      e.name = nc.name;
      e.detail = "negative control: " + e.detail;
      return e;
    });
  for (auto& e : rep.entries) e.name = "negative/" + e.name;
  return rep;
}

inline std::filesystem::path default_scenario_dir() {
#ifdef PPROD_SCENARIO_DIR
  return PPROD_SCENARIO_DIR;
#else
  return "scenarios";
#endif
}

/// Every *.json scenario directly under `dir`, run concurrently and joined in name order.
inline VerifyReport verify_all(const std::filesystem::path& dir, std::optional<std::filesystem::path> out_dir = std::nullopt,
                               bool write = true) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("", "no scenarios found in " + dir.string());

  std::vector<ScenarioConfig> configs;
  for (const auto& f : files) configs.push_back(load_config(f));
  std::vector<std::future<ScenarioResult>> jobs;
  for (const auto& cfg : configs)
    jobs.push_back(std::async(std::launch::async, [&cfg, out_dir, write] { return run_scenario(cfg, out_dir, write); }));

  VerifyReport all;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    auto res = jobs[i].get();
    for (auto& e : res.report.entries) {
      e.name = configs[i].id + "/" + e.name;
      all.entries.push_back(std::move(e));
    }
  }
  return all;
}

}  // namespace pprod
