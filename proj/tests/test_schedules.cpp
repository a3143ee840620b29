#include <gtest/gtest.h>

#include <map>
#include <set>
#include <vector>

#include "pprod/schedules.hpp"

using namespace pprod;

namespace {

std::vector<Label> prefix(const Schedule& s, Index n) {
  std::vector<Label> out;
  for (Index i = 1; i <= n; ++i) out.push_back(s(i));
  return out;
}

// Window-scan oracle: I(sigma, j) is the largest distance from a position t in [0, N)
// to the next occurrence of j after t, over positions where such an occurrence exists.
std::map<Label, Index> window_scan_gap_index(const std::vector<Label>& labels) {
  std::map<Label, Index> out;
  std::set<Label> seen(labels.begin(), labels.end());
  const auto n = static_cast<Index>(labels.size());
  for (Label j : seen) {
    Index best = 0;
    for (Index t = 0; t < n; ++t) {
      Index next = t + 1;
      while (next <= n && labels[static_cast<std::size_t>(next - 1)] != j) ++next;
      if (next <= n) best = std::max(best, next - t);
    }
    out[j] = best;
  }
  return out;
}

bool is_power_of(Index n, Index base) {
  if (n < base) return false;
  while (n % base == 0) n /= base;
  return n == 1;
}

}  // namespace

TEST(Schedule, CyclicPrefix) {
  EXPECT_EQ(prefix(Schedule::cyclic(3), 6), (std::vector<Label>{1, 2, 3, 1, 2, 3}));
  EXPECT_EQ(sigma(Schedule::cyclic(1), 5), 1);
  EXPECT_THROW(Schedule::cyclic(0), InvalidArgument);
  EXPECT_THROW(Schedule::cyclic(2)(0), InvalidArgument);
}

TEST(Profile, CyclicGapIndexIsR) {
  for (int r = 1; r <= 6; ++r) {
    const auto p = profile(Schedule::cyclic(r), 10 * r);
    for (const auto& [label, gap] : p.gap_index) EXPECT_EQ(gap, r);
    EXPECT_TRUE(p.markers.empty());
    EXPECT_FALSE(p.heuristic);
  }
}

TEST(Profile, GapIndexMatchesWindowScanOracle) {
  const std::vector<Schedule> schedules{
      Schedule::cyclic(4),
      Schedule::pattern({1, 2, 3, 3, 2, 1}),
      Schedule::pattern({2, 1, 1, 3}),
      Schedule::example24(1),
      compose_pseudo({1, 2}, SequentialLabels{3}, PowerMarkers{3}),
      compose_pseudo({1, 3, 2}, ConstantLabel{4}, ArithmeticGaps{2, 3}),
  };
  for (const auto& s : schedules) {
    const auto labels = prefix(s, 150);
    EXPECT_EQ(profile(s, 150).gap_index, window_scan_gap_index(labels));
  }
}

TEST(Profile, TernaryInsertionMetadata) {
  const Schedule s = Schedule::example24(1);
  const auto p = profile(s, 100);
  EXPECT_EQ(p.gap_index.at(1), 3);
  EXPECT_EQ(p.gap_index.at(2), 3);
  EXPECT_EQ(p.gap_index.at(3), 6);
  EXPECT_EQ(p.markers, (std::vector<Index>{3, 9, 27, 81}));
  EXPECT_EQ(p.gamma_f, (std::set<Label>{1, 2, 3}));
  EXPECT_EQ(prefix(s, 9), (std::vector<Label>{2, 1, 4, 2, 1, 3, 2, 1, 5}));
}

TEST(Schedule, Example24RuleHoldsForEverySeed) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Schedule s = Schedule::example24(seed);
    for (Index n = 1; n <= 800; ++n) {
      const Label l = s(n);
      if (n % 3 == 1) EXPECT_EQ(l, 2);
      else if (n % 3 == 2) EXPECT_EQ(l, 1);
      else if (is_power_of(n, 3)) EXPECT_GE(l, 4);
      else EXPECT_EQ(l, 3);
    }
  }
}

TEST(LabelStream, JitteredCycleCoversEveryRound) {
  const JitteredCycle bounded{10, 5, 77};
  for (Index epoch = 0; epoch < 20; ++epoch) {
    std::set<Label> seen;
    for (Index k = 1; k <= 5; ++k) seen.insert(stream_label(bounded, epoch * 5 + k));
    EXPECT_EQ(seen, (std::set<Label>{10, 11, 12, 13, 14}));
  }
  // count == 0: round e (length e + 1) is a permutation of first..first+e
  const JitteredCycle unbounded{4, 0, 3};
  Index k = 1;
  for (Index e = 0; e < 15; ++e) {
    std::set<Label> seen;
    for (Index i = 0; i <= e; ++i) seen.insert(stream_label(unbounded, k++));
    std::set<Label> expected;
    for (Index i = 0; i <= e; ++i) expected.insert(static_cast<Label>(4 + i));
    EXPECT_EQ(seen, expected);
  }
  EXPECT_EQ(stream_range(bounded), (TailRange{10, 14}));
  EXPECT_FALSE(stream_range(unbounded).last.has_value());
}

TEST(MarkerRules, Positions) {
  EXPECT_EQ(marker_positions(PowerMarkers{3}, 100), (std::vector<Index>{3, 9, 27, 81}));
  EXPECT_EQ(marker_positions(ArithmeticGaps{2, 1}, 20), (std::vector<Index>{2, 5, 9, 14, 20}));
  EXPECT_EQ(marker_positions(ListGaps{{1, 4, 6}}, 100), (std::vector<Index>{1, 5, 11}));
}

TEST(QuasiPeriodic, Cases) {
  EXPECT_TRUE(is_quasi_periodic(Schedule::cyclic(3), 3, 3, 300));
  EXPECT_TRUE(is_quasi_periodic(Schedule::pattern({1, 2, 3, 3, 2, 1}), 3, 6, 300));
  EXPECT_TRUE(is_quasi_periodic(Schedule::pattern({1, 2, 3, 3, 2, 1}), 3, 5, 300));
  EXPECT_FALSE(is_quasi_periodic(Schedule::pattern({1, 2, 3, 3, 2, 1}), 3, 4, 300));
  EXPECT_FALSE(is_quasi_periodic(Schedule::pattern({1, 2, 1, 2}), 3, 6, 100));
  EXPECT_FALSE(is_quasi_periodic(Schedule::example24(1), 3, 6, 100));
  EXPECT_FALSE(is_quasi_periodic(Schedule::cyclic(3), 3, 3, 2));
  EXPECT_THROW(is_quasi_periodic(Schedule::cyclic(3), 3, 2, 30), InvalidArgument);
}

TEST(QuasiPeriodic, WindowAtLeastMaxGap) {
  // A schedule over 1..r is quasi-periodic with window m exactly when m >= max_j I(sigma, j).
  for (const auto& word : std::vector<std::vector<Label>>{{1, 2, 3}, {1, 2, 3, 3, 2, 1}, {1, 1, 2, 3, 2}, {2, 1, 2, 1, 3}}) {
    const Schedule s = Schedule::pattern(word);
    const auto p = profile(s, 200);
    Index b = 0;
    for (const auto& [label, gap] : p.gap_index) b = std::max(b, gap);
    for (Index m = 3; m <= 8; ++m) EXPECT_EQ(is_quasi_periodic(s, 3, m, 200), m >= b);
  }
}

TEST(PseudoPeriodic, ComposerAndTernaryInsertion) {
  const Schedule s = compose_pseudo({1, 2}, SequentialLabels{3}, PowerMarkers{3});
  const auto c = classify_pseudo_periodic(s, 2, 300);
  EXPECT_TRUE(c.pseudo_periodic);
  EXPECT_FALSE(c.degenerate_quasi_periodic);
  EXPECT_EQ(c.marker_gaps, (std::vector<Index>{3, 6, 18, 54, 162}));
  EXPECT_TRUE(is_pseudo_periodic(Schedule::example24(1), 3, 100));
  EXPECT_FALSE(is_pseudo_periodic(s, 3, 300));
}

TEST(PseudoPeriodic, CyclicIsDegenerateQuasiPeriodic) {
  const auto c = classify_pseudo_periodic(Schedule::cyclic(4), 4, 100);
  EXPECT_TRUE(c.pseudo_periodic);
  EXPECT_TRUE(c.degenerate_quasi_periodic);
}

TEST(PseudoPeriodic, ComposerMarkersCarryInsertLabels) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Schedule s = compose_pseudo({1, 2, 3}, JitteredCycle{4, 3, seed}, ArithmeticGaps{2 + static_cast<Index>(seed % 3), 1});
    const auto p = profile(s, 400);
    const auto expected = marker_positions(ArithmeticGaps{2 + static_cast<Index>(seed % 3), 1}, 400);
    // labels at marker positions are exactly the insert labels
    for (Index k : expected) EXPECT_GE(s(k), 4);
    for (Index n = 1; n <= 400; ++n)
      if (std::find(expected.begin(), expected.end(), n) == expected.end()) EXPECT_LE(s(n), 3);
    EXPECT_EQ(p.markers, expected);
    Index prev = 0, prev_gap = 0;
    for (Index k : p.markers) {
      EXPECT_GT(k - prev, prev_gap);
      prev_gap = k - prev;
      prev = k;
    }
  }
}

TEST(Composer, Validation) {
  EXPECT_THROW(compose_pseudo({1, 2}, SequentialLabels{2}, PowerMarkers{3}), InvalidArgument);
  EXPECT_THROW(compose_pseudo({1, 2}, SequentialLabels{3}, PowerMarkers{2}), InvalidArgument);
  EXPECT_THROW(compose_pseudo({1, 2}, SequentialLabels{3}, ListGaps{{2, 2, 5}}), InvalidArgument);
  EXPECT_THROW(compose_pseudo({1, 3}, SequentialLabels{4}, PowerMarkers{3}), InvalidArgument);
  EXPECT_THROW(Schedule::pattern({}), InvalidArgument);
  EXPECT_THROW(Schedule::example24(LabelStream{SequentialLabels{3}}), InvalidArgument);
}

TEST(ExplicitSchedule, FinitePrefix) {
  const Schedule s = Schedule::explicit_prefix({1, 2, 1, 3});
  EXPECT_EQ(s.length(), 4);
  EXPECT_EQ(s(4), 3);
  EXPECT_THROW(s(5), InvalidArgument);
  EXPECT_THROW(profile(s, 5), InvalidArgument);
  EXPECT_FALSE(s.classification_exact());
  EXPECT_TRUE(profile(s, 4).heuristic);
  const Schedule t = Schedule::explicit_prefix({1, 2, 1, 3}, 3, std::vector<Label>{1, 2, 3});
  EXPECT_TRUE(t.classification_exact());
  EXPECT_EQ(t.window(), 3);
}

TEST(ScheduleJson, RoundTripEveryRule) {
  const std::vector<Schedule> schedules{
      Schedule::cyclic(3),
      Schedule::pattern({1, 2, 3, 3, 2, 1}),
      Schedule::example24(9),
      Schedule::example24(LabelStream{JitteredCycle{4, 5, 2}}),
      compose_pseudo({1, 2}, SequentialLabels{3}, PowerMarkers{3}),
      compose_pseudo({1, 2}, ConstantLabel{7}, ArithmeticGaps{3, 2}),
      compose_pseudo({2, 1}, JitteredCycle{3, 0, 4}, ListGaps{{1, 3, 8}}),
      Schedule::explicit_prefix({1, 2, 2}, 2, std::vector<Label>{1, 2}),
  };
  for (const auto& s : schedules) {
    const auto j = to_json_value(s);
    EXPECT_EQ(schedule_from_json(j), s) << j.dump();
    EXPECT_EQ(schedule_from_json(nlohmann::json::parse(j.dump())), s);
  }
}

TEST(ScheduleJson, ErrorsCarryFieldPath) {
  try {
    schedule_from_json(nlohmann::json::parse(R"({"rule":"cyclic"})"), "/schedule");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), "/schedule/r");
  }
  try {
    schedule_from_json(nlohmann::json::parse(R"({"rule":"pseudo","base":[1,2],"labels":{"kind":"sequential","first":3},"markers":{"kind":"squares"}})"));
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path().rfind("/markers", 0), 0u) << e.path();
  }
  EXPECT_THROW(schedule_from_json(nlohmann::json::parse(R"({"rule":"spiral"})")), ConfigError);
}
