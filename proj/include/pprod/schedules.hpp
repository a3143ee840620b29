#pragma once

// Index functions sigma: N -> N that select which projection is applied at each
// step, plus their prefix classification (occurrence lists, gap indices, the
// finite-gap / infinite-gap split and the marker positions).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "pprod/error.hpp"
#include "pprod/random.hpp"

namespace pprod {

using Label = int;
using Index = std::int64_t;

// ---- insertion label streams: the labels placed at marker positions ----

struct SequentialLabels {
  Label first = 1;
  bool operator==(const SequentialLabels&) const = default;
};

struct ConstantLabel {
  Label label = 1;
  bool operator==(const ConstantLabel&) const = default;
};

/// Labels first, first+1, ... visited in seeded shuffled rounds. With count == 0
/// round e covers the e+1 labels first..first+e, so the label set is unbounded and
/// every label still recurs in every later round.
struct JitteredCycle {
  Label first = 1;
  int count = 0;
  std::uint64_t seed = 0;
  bool operator==(const JitteredCycle&) const = default;
};

using LabelStream = std::variant<SequentialLabels, ConstantLabel, JitteredCycle>;

namespace detail {

inline std::vector<int> seeded_permutation(int size, std::uint64_t seed) {
  std::vector<int> p(static_cast<std::size_t>(size));
  std::iota(p.begin(), p.end(), 0);
  SplitMix64 rng(seed);
  for (int i = size - 1; i > 0; --i)
    std::swap(p[static_cast<std::size_t>(i)], p[rng.below(static_cast<std::uint64_t>(i) + 1)]);
  return p;
}

}  // namespace detail

/// k-th label of the stream, k >= 1.
inline Label stream_label(const LabelStream& stream, Index k) {
  if (k < 1) throw InvalidArgument("stream_label: k must be >= 1");
  return std::visit(
      [k](const auto& s) -> Label {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, SequentialLabels>) {
          return s.first + static_cast<Label>(k - 1);
        } else if constexpr (std::is_same_v<T, ConstantLabel>) {
          return s.label;
        } else {
          const Index z = k - 1;
          if (s.count > 0) {
            const Index epoch = z / s.count;
            const auto perm = detail::seeded_permutation(s.count, mix_seed(s.seed, static_cast<std::uint64_t>(epoch)));
            return s.first + perm[static_cast<std::size_t>(z % s.count)];
          }
          auto e = static_cast<Index>((std::sqrt(8.0 * static_cast<double>(z) + 1.0) - 1.0) / 2.0);
          while (e * (e + 1) / 2 > z) --e;
          while ((e + 1) * (e + 2) / 2 <= z) ++e;
          const auto perm =
              detail::seeded_permutation(static_cast<int>(e + 1), mix_seed(s.seed, static_cast<std::uint64_t>(e)));
          return s.first + perm[static_cast<std::size_t>(z - e * (e + 1) / 2)];
        }
      },
      stream);
}

struct TailRange {
  Label first = 1;
  std::optional<Label> last;  // empty: unbounded
  bool operator==(const TailRange&) const = default;
};

inline TailRange stream_range(const LabelStream& stream) {
  return std::visit(
      [](const auto& s) -> TailRange {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, SequentialLabels>) return {s.first, std::nullopt};
        else if constexpr (std::is_same_v<T, ConstantLabel>) return {s.label, s.label};
        else if (s.count > 0) return {s.first, s.first + s.count - 1};
        else return {s.first, std::nullopt};
      },
      stream);
}

// ---- marker placement rules ----

/// Markers at base, base^2, base^3, ...
struct PowerMarkers {
  Index base = 3;
  bool operator==(const PowerMarkers&) const = default;
};

/// Gaps first, first+step, first+2 step, ...
struct ArithmeticGaps {
  Index first = 2;
  Index step = 1;
  bool operator==(const ArithmeticGaps&) const = default;
};

/// Finitely many gaps; no markers after the list is exhausted.
struct ListGaps {
  std::vector<Index> gaps;
  bool operator==(const ListGaps&) const = default;
};

using MarkerRule = std::variant<PowerMarkers, ArithmeticGaps, ListGaps>;

/// Marker positions k_1 < k_2 < ... that are <= limit.
inline std::vector<Index> marker_positions(const MarkerRule& rule, Index limit) {
  std::vector<Index> out;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, PowerMarkers>) {
          for (Index p = m.base; p <= limit; p *= m.base) {
            out.push_back(p);
            if (p > limit / m.base) break;
          }
        } else if constexpr (std::is_same_v<T, ArithmeticGaps>) {
          Index k = 0;
          for (Index gap = m.first; k + gap <= limit; gap += m.step) out.push_back(k += gap);
        } else {
          Index k = 0;
          for (Index gap : m.gaps) {
            if (k + gap > limit) break;
            out.push_back(k += gap);
          }
        }
      },
      rule);
  return out;
}

// ---- schedule rules ----

struct CyclicRule {
  int r = 1;
  bool operator==(const CyclicRule&) const = default;
};

/// Finite word repeated forever.
struct PatternRule {
  std::vector<Label> word;
  bool operator==(const PatternRule&) const = default;
};

/// 2 at n = 3k-2, 1 at n = 3k-1, 3 at n = 3k except n = 3^k' where the k'-th
/// label of `tail` is used.
struct Example24Rule {
  LabelStream tail = JitteredCycle{4, 0, 0};
  bool operator==(const Example24Rule&) const = default;
};

/// Base word cycled through, interrupted at marker positions by the insertion stream.
struct PseudoComposerRule {
  std::vector<Label> base;
  LabelStream inserts = SequentialLabels{2};
  MarkerRule markers = PowerMarkers{3};
  bool operator==(const PseudoComposerRule&) const = default;
};

/// A finite prefix. Only n <= prefix.size() is defined.
struct ExplicitRule {
  std::vector<Label> prefix;
  std::optional<Index> window;                     // gap bound for the finite-gap heuristic
  std::optional<std::vector<Label>> finite_labels;  // declared finite-gap set; overrides the heuristic
  bool operator==(const ExplicitRule&) const = default;
};

using ScheduleRule = std::variant<CyclicRule, PatternRule, Example24Rule, PseudoComposerRule, ExplicitRule>;

namespace detail {

inline std::map<Label, Index> cyclic_gap_index(const std::vector<Label>& word) {
  std::map<Label, std::vector<Index>> pos;
  for (std::size_t i = 0; i < word.size(); ++i) pos[word[i]].push_back(static_cast<Index>(i) + 1);
  const auto len = static_cast<Index>(word.size());
  std::map<Label, Index> gaps;
  for (const auto& [label, p] : pos) {
    Index g = p.front();  // leading gap from l_0 = 0
    for (std::size_t i = 1; i < p.size(); ++i) g = std::max(g, p[i] - p[i - 1]);
    g = std::max(g, p.front() + len - p.back());  // wrap-around
    gaps[label] = g;
  }
  return gaps;
}

inline void validate_word(const std::vector<Label>& word, const char* where) {
  if (word.empty()) throw InvalidArgument(std::string(where) + ": empty word");
  const Label r = *std::max_element(word.begin(), word.end());
  std::set<Label> seen(word.begin(), word.end());
  if (*seen.begin() < 1 || static_cast<Label>(seen.size()) != r)
    throw InvalidArgument(std::string(where) + ": word must use exactly the labels 1..r");
}

inline Index word_window(const std::vector<Label>& word) {
  Index m = 0;
  for (const auto& [label, g] : cyclic_gap_index(word)) m = std::max(m, g);
  return m;
}

}  // namespace detail

class Schedule {
 public:
  explicit Schedule(ScheduleRule rule) : rule_(std::move(rule)) { validate(); }

  static Schedule cyclic(int r) { return Schedule(CyclicRule{r}); }
  static Schedule pattern(std::vector<Label> word) { return Schedule(PatternRule{std::move(word)}); }
  static Schedule example24(std::uint64_t seed) { return Schedule(Example24Rule{JitteredCycle{4, 0, seed}}); }
  static Schedule example24(LabelStream tail) { return Schedule(Example24Rule{std::move(tail)}); }
  static Schedule explicit_prefix(std::vector<Label> prefix, std::optional<Index> window = std::nullopt,
                                  std::optional<std::vector<Label>> finite_labels = std::nullopt) {
    return Schedule(ExplicitRule{std::move(prefix), window, std::move(finite_labels)});
  }

  const ScheduleRule& rule() const noexcept { return rule_; }

  /// sigma(n), n >= 1.
  Label operator()(Index n) const {
    if (n < 1) throw InvalidArgument("sigma: n must be >= 1");
    return std::visit([n](const auto& r) { return eval(r, n); }, rule_);
  }

  /// Largest n for which sigma is defined; empty for infinite schedules.
  std::optional<Index> length() const {
    if (const auto* e = std::get_if<ExplicitRule>(&rule_)) return static_cast<Index>(e->prefix.size());
    return std::nullopt;
  }

  /// True when the finite-gap set is known from the rule rather than inferred from a prefix.
  bool classification_exact() const {
    if (const auto* e = std::get_if<ExplicitRule>(&rule_)) return e->finite_labels.has_value();
    return true;
  }

  /// Declared finite-gap labels (empty optional: must be inferred from a prefix).
  std::optional<std::vector<Label>> finite_labels() const {
    return std::visit(
        [](const auto& r) -> std::optional<std::vector<Label>> {
          using T = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<T, CyclicRule>) {
            std::vector<Label> v(static_cast<std::size_t>(r.r));
            std::iota(v.begin(), v.end(), 1);
            return v;
          } else if constexpr (std::is_same_v<T, PatternRule>) {
            return distinct(r.word);
          } else if constexpr (std::is_same_v<T, Example24Rule>) {
            return std::vector<Label>{1, 2, 3};
          } else if constexpr (std::is_same_v<T, PseudoComposerRule>) {
            return distinct(r.base);
          } else {
            return r.finite_labels;
          }
        },
        rule_);
  }

  /// Labels drawn from the insertion stream, if the rule has one.
  std::optional<TailRange> tail_range() const {
    if (const auto* e = std::get_if<Example24Rule>(&rule_)) return stream_range(e->tail);
    if (const auto* p = std::get_if<PseudoComposerRule>(&rule_)) return stream_range(p->inserts);
    return std::nullopt;
  }

  /// Window length m of the quasi-periodic core: the largest gap index among finite-gap labels.
  Index window() const {
    return std::visit(
        [](const auto& r) -> Index {
          using T = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<T, CyclicRule>) return r.r;
          else if constexpr (std::is_same_v<T, PatternRule>) return detail::word_window(r.word);
          else if constexpr (std::is_same_v<T, Example24Rule>) return 6;
          else if constexpr (std::is_same_v<T, PseudoComposerRule>) return detail::word_window(r.base);
          else return r.window.value_or(2 * static_cast<Index>(distinct(r.prefix).size()));
        },
        rule_);
  }

  bool operator==(const Schedule&) const = default;

 private:
  static std::vector<Label> distinct(const std::vector<Label>& w) {
    std::vector<Label> v(w);
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  }

  static Label eval(const CyclicRule& r, Index n) { return static_cast<Label>((n - 1) % r.r) + 1; }
  static Label eval(const PatternRule& r, Index n) {
    return r.word[static_cast<std::size_t>((n - 1) % static_cast<Index>(r.word.size()))];
  }
  static Label eval(const Example24Rule& r, Index n) {
    switch (n % 3) {
      case 1: return 2;
      case 2: return 1;
      default: break;
    }
    Index power = 0;
    Index m = n;
    while (m % 3 == 0) {
      m /= 3;
      ++power;
    }
    return m == 1 ? stream_label(r.tail, power) : 3;
  }
  static Label eval(const PseudoComposerRule& r, Index n) {
    const auto markers = marker_positions(r.markers, n);
    const auto count = static_cast<Index>(markers.size());
    if (!markers.empty() && markers.back() == n) return stream_label(r.inserts, count);
    const Index base_pos = n - count;  // 1-based position within the base stream
    return r.base[static_cast<std::size_t>((base_pos - 1) % static_cast<Index>(r.base.size()))];
  }
  static Label eval(const ExplicitRule& r, Index n) {
    if (n > static_cast<Index>(r.prefix.size()))
      throw InvalidArgument("sigma: explicit schedule defined only up to n = " + std::to_string(r.prefix.size()));
    return r.prefix[static_cast<std::size_t>(n - 1)];
  }

  void validate() const {
    std::visit(
        [](const auto& r) {
          using T = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<T, CyclicRule>) {
            if (r.r < 1) throw InvalidArgument("cyclic: r must be >= 1");
          } else if constexpr (std::is_same_v<T, PatternRule>) {
            detail::validate_word(r.word, "pattern");
          } else if constexpr (std::is_same_v<T, Example24Rule>) {
            if (stream_range(r.tail).first < 4) throw InvalidArgument("example24: tail labels must be >= 4");
          } else if constexpr (std::is_same_v<T, PseudoComposerRule>) {
            validate_composer(r);
          } else {
            if (r.prefix.empty()) throw InvalidArgument("explicit: empty prefix");
            for (Label l : r.prefix)
              if (l < 1) throw InvalidArgument("explicit: labels must be >= 1");
            if (r.window && *r.window < 1) throw InvalidArgument("explicit: window must be >= 1");
          }
        },
        rule_);
  }

  static void validate_composer(const PseudoComposerRule& r) {
    detail::validate_word(r.base, "compose_pseudo base word");
    const Label top = *std::max_element(r.base.begin(), r.base.end());
    if (stream_range(r.inserts).first <= top)
      throw InvalidArgument("compose_pseudo: insertion labels must exceed the base labels 1.." + std::to_string(top));
    std::visit(
        [](const auto& m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, PowerMarkers>) {
            // base 2 gives gaps 2, 2, 4, ... which is not strictly increasing
            if (m.base < 3) throw InvalidArgument("compose_pseudo: power markers need base >= 3");
          } else if constexpr (std::is_same_v<T, ArithmeticGaps>) {
            if (m.first < 1 || m.step < 1) throw InvalidArgument("compose_pseudo: marker gaps must be strictly increasing");
          } else {
            for (std::size_t i = 0; i < m.gaps.size(); ++i)
              if (m.gaps[i] < 1 || (i > 0 && m.gaps[i] <= m.gaps[i - 1]))
                throw InvalidArgument("compose_pseudo: marker gaps must be strictly increasing");
          }
        },
        r.markers);
  }

  ScheduleRule rule_;
};

inline Label sigma(const Schedule& s, Index n) { return s(n); }

/// Interleave a cyclic base word with insertions at k_n = k_{n-1} + gap_n (k_0 = 0).
inline Schedule compose_pseudo(std::vector<Label> base_word, LabelStream insert_labels, MarkerRule marker_gaps) {
  return Schedule(PseudoComposerRule{std::move(base_word), std::move(insert_labels), std::move(marker_gaps)});
}

// ---- prefix classification ----

struct ScheduleProfile {
  Index prefix_len = 0;
  std::map<Label, std::vector<Index>> occurrences;
  std::map<Label, Index> gap_index;  // max over l_n - l_{n-1} with l_0 = 0
  std::set<Label> gamma_f;
  std::set<Label> gamma_inf;
  std::vector<Index> markers;
  bool heuristic = false;  // finite-gap split inferred from the prefix
};

inline ScheduleProfile profile(const Schedule& s, Index n_prefix) {
  if (n_prefix < 1) throw InvalidArgument("profile: N must be >= 1");
  if (const auto len = s.length(); len && n_prefix > *len)
    throw InvalidArgument("profile: N exceeds the explicit prefix length " + std::to_string(*len));
  ScheduleProfile p;
  p.prefix_len = n_prefix;
  std::vector<Label> labels(static_cast<std::size_t>(n_prefix));
  for (Index n = 1; n <= n_prefix; ++n) {
    labels[static_cast<std::size_t>(n - 1)] = s(n);
    p.occurrences[labels[static_cast<std::size_t>(n - 1)]].push_back(n);
  }
  for (const auto& [label, occ] : p.occurrences) {
    Index g = occ.front();
    for (std::size_t i = 1; i < occ.size(); ++i) g = std::max(g, occ[i] - occ[i - 1]);
    p.gap_index[label] = g;
  }

  if (const auto declared = s.finite_labels()) {
    const std::set<Label> finite(declared->begin(), declared->end());
    for (const auto& [label, occ] : p.occurrences) (finite.count(label) ? p.gamma_f : p.gamma_inf).insert(label);
  } else {
    p.heuristic = true;
    const Index window = s.window();
    for (const auto& [label, occ] : p.occurrences) {
      const bool bounded = p.gap_index[label] <= window && n_prefix + 1 - occ.back() <= window;
      (bounded ? p.gamma_f : p.gamma_inf).insert(label);
    }
  }
  for (Index n = 1; n <= n_prefix; ++n)
    if (p.gamma_inf.count(labels[static_cast<std::size_t>(n - 1)])) p.markers.push_back(n);
  return p;
}

/// Every length-m window inside [1..N] contains each of 1..r and nothing else.
inline bool is_quasi_periodic(const Schedule& s, int r, Index m, Index n_prefix) {
  if (r < 1 || m < r) throw InvalidArgument("is_quasi_periodic: need m >= r >= 1");
  if (n_prefix < m) return false;
  std::vector<Index> last(static_cast<std::size_t>(r) + 1, 0);
  for (Index n = 1; n <= n_prefix; ++n) {
    const Label l = s(n);
    if (l < 1 || l > r) return false;
    if (n - last[static_cast<std::size_t>(l)] > m) return false;
    last[static_cast<std::size_t>(l)] = n;
  }
  for (int j = 1; j <= r; ++j)
    if (n_prefix + 1 - last[static_cast<std::size_t>(j)] > m) return false;
  return true;
}

struct PseudoPeriodicity {
  bool pseudo_periodic = false;
  bool degenerate_quasi_periodic = false;  // no markers: the schedule is quasi-periodic
  bool heuristic = false;
  bool finite_set_matches = false;
  bool gaps_increasing = false;
  std::vector<Index> marker_gaps;  // k_n - k_{n-1}, k_0 = 0
};

/// Finite-gap set equals {1..r} on the prefix and marker gaps are strictly increasing.
inline PseudoPeriodicity classify_pseudo_periodic(const Schedule& s, int r, Index n_prefix) {
  if (r < 1) throw InvalidArgument("is_pseudo_periodic: r must be >= 1");
  const ScheduleProfile p = profile(s, n_prefix);
  PseudoPeriodicity out;
  out.heuristic = p.heuristic;
  std::set<Label> expected;
  for (Label j = 1; j <= r; ++j) expected.insert(j);
  out.finite_set_matches = p.gamma_f == expected;
  Index prev = 0;
  out.gaps_increasing = true;
  for (Index k : p.markers) {
    out.marker_gaps.push_back(k - prev);
    prev = k;
  }
  for (std::size_t i = 1; i < out.marker_gaps.size(); ++i)
    if (out.marker_gaps[i] <= out.marker_gaps[i - 1]) out.gaps_increasing = false;
  out.degenerate_quasi_periodic = p.markers.empty();
  out.pseudo_periodic = out.finite_set_matches && out.gaps_increasing;
  return out;
}

inline bool is_pseudo_periodic(const Schedule& s, int r, Index n_prefix) {
  return classify_pseudo_periodic(s, r, n_prefix).pseudo_periodic;
}

// ---- JSON descriptors ----

namespace detail {

inline const nlohmann::json& field(const nlohmann::json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  if (!j.contains(key)) throw ConfigError(path + "/" + key, "missing required field");
  return j.at(key);
}

template <class T>
T get_as(const nlohmann::json& j, const std::string& path) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path, std::string("wrong type: ") + e.what());
  }
}

template <class T>
T get_field(const nlohmann::json& j, const std::string& key, const std::string& path) {
  return get_as<T>(field(j, key, path), path + "/" + key);
}

template <class T>
T get_field_or(const nlohmann::json& j, const std::string& key, const std::string& path, T fallback) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  return j.contains(key) ? get_as<T>(j.at(key), path + "/" + key) : fallback;
}

}  // namespace detail

inline nlohmann::json to_json_value(const LabelStream& stream) {
  return std::visit(
      [](const auto& s) -> nlohmann::json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, SequentialLabels>) return {{"kind", "sequential"}, {"first", s.first}};
        else if constexpr (std::is_same_v<T, ConstantLabel>) return {{"kind", "constant"}, {"label", s.label}};
        else return {{"kind", "jittered_cycle"}, {"first", s.first}, {"count", s.count}, {"seed", s.seed}};
      },
      stream);
}

inline LabelStream label_stream_from_json(const nlohmann::json& j, const std::string& path) {
  const auto kind = detail::get_field<std::string>(j, "kind", path);
  if (kind == "sequential") return SequentialLabels{detail::get_field<Label>(j, "first", path)};
  if (kind == "constant") return ConstantLabel{detail::get_field<Label>(j, "label", path)};
  if (kind == "jittered_cycle")
    return JitteredCycle{detail::get_field<Label>(j, "first", path), detail::get_field_or<int>(j, "count", path, 0),
                         detail::get_field_or<std::uint64_t>(j, "seed", path, 0)};
  throw ConfigError(path + "/kind", "unknown label stream '" + kind + "'");
}

inline nlohmann::json to_json_value(const MarkerRule& rule) {
  return std::visit(
      [](const auto& m) -> nlohmann::json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, PowerMarkers>) return {{"kind", "powers"}, {"base", m.base}};
        else if constexpr (std::is_same_v<T, ArithmeticGaps>)
          return {{"kind", "arithmetic"}, {"first", m.first}, {"step", m.step}};
        else return {{"kind", "list"}, {"gaps", m.gaps}};
      },
      rule);
}

inline MarkerRule marker_rule_from_json(const nlohmann::json& j, const std::string& path) {
  const auto kind = detail::get_field<std::string>(j, "kind", path);
  if (kind == "powers") return PowerMarkers{detail::get_field<Index>(j, "base", path)};
  if (kind == "arithmetic")
    return ArithmeticGaps{detail::get_field<Index>(j, "first", path), detail::get_field<Index>(j, "step", path)};
  if (kind == "list") return ListGaps{detail::get_field<std::vector<Index>>(j, "gaps", path)};
  throw ConfigError(path + "/kind", "unknown marker rule '" + kind + "'");
}

inline nlohmann::json to_json_value(const Schedule& s) {
  return std::visit(
      [](const auto& r) -> nlohmann::json {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, CyclicRule>) {
          return {{"rule", "cyclic"}, {"r", r.r}};
        } else if constexpr (std::is_same_v<T, PatternRule>) {
          return {{"rule", "pattern"}, {"word", r.word}};
        } else if constexpr (std::is_same_v<T, Example24Rule>) {
          return {{"rule", "example24"}, {"stream", to_json_value(r.tail)}};
        } else if constexpr (std::is_same_v<T, PseudoComposerRule>) {
          return {{"rule", "pseudo"},
                  {"base", r.base},
                  {"labels", to_json_value(r.inserts)},
                  {"markers", to_json_value(r.markers)}};
        } else {
          nlohmann::json j = {{"rule", "explicit"}, {"prefix", r.prefix}};
          if (r.window) j["window"] = *r.window;
          if (r.finite_labels) j["finite_labels"] = *r.finite_labels;
          return j;
        }
      },
      s.rule());
}

inline Schedule schedule_from_json(const nlohmann::json& j, const std::string& path = "") {
  const auto rule = detail::get_field<std::string>(j, "rule", path);
  try {
    if (rule == "cyclic") return Schedule::cyclic(detail::get_field<int>(j, "r", path));
    if (rule == "pattern") return Schedule::pattern(detail::get_field<std::vector<Label>>(j, "word", path));
    if (rule == "example24") {
      if (j.contains("stream")) return Schedule::example24(label_stream_from_json(j.at("stream"), path + "/stream"));
      return Schedule::example24(detail::get_field_or<std::uint64_t>(j, "seed", path, 0));
    }
    if (rule == "pseudo")
      return compose_pseudo(detail::get_field<std::vector<Label>>(j, "base", path),
                            label_stream_from_json(detail::field(j, "labels", path), path + "/labels"),
                            marker_rule_from_json(detail::field(j, "markers", path), path + "/markers"));
    if (rule == "explicit") {
      std::optional<Index> window;
      std::optional<std::vector<Label>> finite;
      if (j.contains("window")) window = detail::get_field<Index>(j, "window", path);
      if (j.contains("finite_labels")) finite = detail::get_field<std::vector<Label>>(j, "finite_labels", path);
      return Schedule::explicit_prefix(detail::get_field<std::vector<Label>>(j, "prefix", path), window, finite);
    }
  } catch (const InvalidArgument& e) {
    throw ConfigError(path, e.what());
  }
  throw ConfigError(path + "/rule", "unknown schedule rule '" + rule + "'");
}

}  // namespace pprod
