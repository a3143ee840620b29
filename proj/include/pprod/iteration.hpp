#pragma once

// The product iteration T_0 = I, T_n = P_{sigma(n)} T_{n-1}, its trace, and the
// pure checkers that evaluate identities and inequalities along a trace.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pprod/error.hpp"
#include "pprod/geometry.hpp"
#include "pprod/hilbert.hpp"
#include "pprod/schedules.hpp"

namespace pprod {

enum class TailOrder { unordered, monotone_decreasing };

/// Labels 1..r map to `finite`; labels r+1, r+2, ... map to `tail` in order, and
/// every label past the end of `tail` maps to its last entry (the tail has stabilized).
class ProjectorFamily {
 public:
  ProjectorFamily(std::vector<Projector> finite, std::vector<Projector> tail = {},
                  TailOrder order = TailOrder::unordered)
      : finite_(std::move(finite)), tail_(std::move(tail)), order_(order) {
    if (finite_.empty()) throw InvalidArgument("ProjectorFamily: finite part must be nonempty");
    const long d = finite_.front().ambient_dim();
    for (const auto& p : finite_) detail::require_dim("ProjectorFamily", d, p.ambient_dim());
    for (const auto& p : tail_) detail::require_dim("ProjectorFamily tail", d, p.ambient_dim());
    if (order_ == TailOrder::monotone_decreasing)
      for (std::size_t i = 1; i < tail_.size(); ++i)
        if (!projector_leq(tail_[i], tail_[i - 1]))
          throw PreconditionViolated("ProjectorFamily: tail declared monotone but P_" +
                                     std::to_string(finite_.size() + i + 1) + " is not <= P_" +
                                     std::to_string(finite_.size() + i));
  }

  /// Materialize tail labels r+1 .. r+depth from a generator label -> Subspace.
  static ProjectorFamily with_tail(std::vector<Projector> finite, const std::function<Subspace(Label)>& gen,
                                   int depth, TailOrder order) {
    std::vector<Projector> tail;
    const auto r = static_cast<Label>(finite.size());
    for (Label l = r + 1; l <= r + depth; ++l) tail.emplace_back(gen(l));
    return ProjectorFamily(std::move(finite), std::move(tail), order);
  }

  long ambient_dim() const noexcept { return finite_.front().ambient_dim(); }
  int finite_count() const noexcept { return static_cast<int>(finite_.size()); }
  int tail_depth() const noexcept { return static_cast<int>(tail_.size()); }
  bool monotone_decreasing() const noexcept { return order_ == TailOrder::monotone_decreasing; }

  const Projector& at(Label label) const {
    if (label < 1) throw UnknownLabel(label);
    if (label <= finite_count()) return finite_[static_cast<std::size_t>(label - 1)];
    if (tail_.empty()) throw UnknownLabel(label);
    const auto idx = std::min<std::size_t>(static_cast<std::size_t>(label - finite_count() - 1), tail_.size() - 1);
    return tail_[idx];
  }
  const Projector& operator()(Label label) const { return at(label); }

  std::vector<Subspace> finite_ranges() const {
    std::vector<Subspace> out;
    for (const auto& p : finite_) out.push_back(p.source());
    return out;
  }

 private:
  std::vector<Projector> finite_;
  std::vector<Projector> tail_;
  TailOrder order_;
};

struct LimitSpec {
  Subspace subspace;
  std::string provenance;
};

/// Intersection of the ranges of every label the schedule can emit. For an
/// unbounded insertion stream this includes the whole materialized tail, whose
/// last entry stands for all later labels.
inline LimitSpec limit_subspace(const ProjectorFamily& family, const Schedule& s, double tol = kDefaultTol) {
  std::set<Label> labels;
  if (auto f = s.finite_labels()) {
    labels.insert(f->begin(), f->end());
  } else {
    for (Index n = 1; n <= s.length().value_or(0); ++n) labels.insert(s(n));
  }
  std::string tail_note;
  if (auto tail = s.tail_range()) {
    const Label stable = family.finite_count() + std::max(family.tail_depth(), 1);
    const Label last = std::max(tail->first, std::min(tail->last.value_or(stable), stable));
    for (Label l = tail->first; l <= last; ++l) labels.insert(l);
    tail_note = " (tail labels " + std::to_string(tail->first) + ".." + std::to_string(last) +
                (tail->last ? ")" : ", stabilized beyond)");
  }
  std::vector<Subspace> ranges;
  std::ostringstream prov;
  prov << "intersection of ranges of labels {";
  bool first = true;
  for (Label l : labels) {
    ranges.push_back(family.at(l).source());
    prov << (first ? "" : ",") << l;
    first = false;
  }
  prov << "}" << tail_note;
  return {intersect(ranges, tol), prov.str()};
}

struct StepRecord {
  Index n = 0;
  Label label = 0;
  double norm = 0.0;
  double step_residual = 0.0;
  double dist_to_limit = 0.0;
  double identity_gap = 0.0;
  bool operator==(const StepRecord&) const = default;
};

/// First `window` iterates, a ring of the last `window`, and optionally all of them.
class IterateStore {
 public:
  IterateStore(Index window = 64, bool keep_all = false) : window_(std::max<Index>(window, 1)), keep_all_(keep_all) {}

  void push(Index n, const Vector& v) {
    if (keep_all_) all_.push_back(v);
    if (n < window_) head_.push_back(v);
    recent_.emplace_back(n, v);
    if (static_cast<Index>(recent_.size()) > window_) recent_.pop_front();
  }

  std::optional<Vector> get(Index n) const {
    if (n < 0) return std::nullopt;
    if (keep_all_ && n < static_cast<Index>(all_.size())) return all_[static_cast<std::size_t>(n)];
    if (n < static_cast<Index>(head_.size())) return head_[static_cast<std::size_t>(n)];
    if (!recent_.empty() && n >= recent_.front().first && n <= recent_.back().first)
      return recent_[static_cast<std::size_t>(n - recent_.front().first)].second;
    return std::nullopt;
  }

  /// Overwrite a stored iterate (negative-control fixtures).
  void corrupt(Index n, const Vector& v) {
    if (keep_all_ && n < static_cast<Index>(all_.size())) all_[static_cast<std::size_t>(n)] = v;
    if (n < static_cast<Index>(head_.size())) head_[static_cast<std::size_t>(n)] = v;
    for (auto& [k, w] : recent_)
      if (k == n) w = v;
  }

  Index window() const noexcept { return window_; }
  bool keeps_all() const noexcept { return keep_all_; }

 private:
  Index window_;
  bool keep_all_;
  std::vector<Vector> head_;
  std::deque<std::pair<Index, Vector>> recent_;
  std::vector<Vector> all_;
};

struct IterationTrace {
  Vector x0;                          // empty when loaded from CSV
  double x0_norm = 0.0;
  std::optional<Schedule> schedule;
  std::optional<Subspace> limit;
  std::string limit_provenance;
  Vector limit_point;                 // P x0
  std::vector<StepRecord> steps;      // steps[i].n == i + 1
  IterateStore iterates;

  Index length() const noexcept { return static_cast<Index>(steps.size()); }
  const StepRecord& step(Index n) const { return steps.at(static_cast<std::size_t>(n - 1)); }
  double norm_at(Index n) const { return n == 0 ? x0_norm : step(n).norm; }
  std::optional<Vector> iterate(Index n) const { return iterates.get(n); }

  Vector require_iterate(Index n, const char* who) const {
    auto v = iterates.get(n);
    if (!v)
      throw PreconditionViolated(std::string(who) + ": iterate T_" + std::to_string(n) +
                                 " x not stored (enable keep_iterates or enlarge the window)");
    return *v;
  }
};

struct IterateOptions {
  Index n_max = 1'000'000;
  double stop_tol = 1e-10;   // stop once dist_to_limit <= stop_tol; negative disables
  bool keep_iterates = false;
  Index window = 64;
  std::optional<Subspace> limit_override;
  std::string limit_note = "declared";
};

namespace detail {

inline double scale2(double x0_norm) { return std::max(1.0, x0_norm * x0_norm); }

// Shared engine. `observe(n, T_n x)` is called for n = 0, 1, ....
template <class Observer>
IterationTrace run_iteration(const ProjectorFamily& family, const Schedule& s, const Vector& x0,
                             const IterateOptions& opt, Observer&& observe) {
  require_dim("iterate", family.ambient_dim(), x0.size());
  if (!all_finite(x0)) throw NonFiniteInput("iterate");
  if (opt.n_max < 1) throw InvalidArgument("iterate: n_max must be >= 1");

  IterationTrace tr{.x0 = x0,
                    .x0_norm = x0.norm(),
                    .schedule = s,
                    .limit = std::nullopt,
                    .limit_provenance = {},
                    .limit_point = {},
                    .steps = {},
                    .iterates = IterateStore(opt.window, opt.keep_iterates)};
  if (opt.limit_override) {
    detail::require_dim("iterate limit", family.ambient_dim(), opt.limit_override->ambient_dim());
    tr.limit = *opt.limit_override;
    tr.limit_provenance = opt.limit_note;
  } else {
    auto spec = limit_subspace(family, s);
    tr.limit = std::move(spec.subspace);
    tr.limit_provenance = std::move(spec.provenance);
  }
  tr.limit_point = tr.limit->project(x0);

  const Index n_end = std::min(opt.n_max, s.length().value_or(opt.n_max));
  Vector t = x0;
  double prev_norm = tr.x0_norm;
  tr.iterates.push(0, t);
  observe(Index{0}, t);
  tr.steps.reserve(static_cast<std::size_t>(std::min<Index>(n_end, 1 << 20)));
  for (Index n = 1; n <= n_end; ++n) {
    const Label label = s(n);
    Vector next = family.at(label)(t);
    StepRecord rec;
    rec.n = n;
    rec.label = label;
    rec.norm = next.norm();
    rec.step_residual = (next - t).norm();
    rec.dist_to_limit = (next - tr.limit_point).norm();
    rec.identity_gap =
        std::abs(prev_norm * prev_norm - rec.norm * rec.norm - rec.step_residual * rec.step_residual);
    tr.steps.push_back(rec);
    tr.iterates.push(n, next);
    observe(n, next);
    prev_norm = rec.norm;
    t = std::move(next);
    if (rec.dist_to_limit <= opt.stop_tol) break;
  }
  return tr;
}

}  // namespace detail

inline IterationTrace iterate(const ProjectorFamily& family, const Schedule& s, const Vector& x0,
                              const IterateOptions& opt = {}) {
  return detail::run_iteration(family, s, x0, opt, [](Index, const Vector&) {});
}

/// T_1 x, ..., T_{n_end} x recomputed from scratch (no early stop).
inline std::vector<Vector> replay(const ProjectorFamily& family, const Schedule& s, const Vector& x0, Index n_end) {
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(n_end) + 1);
  out.push_back(x0);
  for (Index n = 1; n <= n_end; ++n) out.push_back(family.at(s(n))(out.back()));
  return out;
}

/// (P_r ... P_1)^n x0 through the dense cycle operator.
inline Vector halperin_power(const ProjectorFamily& family, const Vector& x0, Index n) {
  if (n < 0) throw InvalidArgument("halperin_power: n must be >= 0");
  detail::require_dim("halperin_power", family.ambient_dim(), x0.size());
  const long d = family.ambient_dim();
  Matrix cycle = Matrix::Identity(d, d);
  for (Label l = 1; l <= family.finite_count(); ++l) cycle = family.at(l).matrix() * cycle;
  Vector y = x0;
  for (Index i = 0; i < n; ++i) y = cycle * y;
  return y;
}

// ---- checkers ----

struct CheckReport {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
};

/// |‖T_{n-1}x‖² - ‖T_n x‖² - ‖T_n x - T_{n-1}x‖²|, recomputed from the recorded scalars.
inline CheckReport check_step_identity(const IterationTrace& tr) {
  if (tr.steps.empty()) throw PreconditionViolated("check_step_identity: empty trace");
  CheckReport r{.name = "step_identity", .threshold = 1e-9 * detail::scale2(tr.x0_norm)};
  Index worst = 1;
  for (Index n = 1; n <= tr.length(); ++n) {
    const double prev = tr.norm_at(n - 1);
    const auto& s = tr.step(n);
    const double gap = std::abs(prev * prev - s.norm * s.norm - s.step_residual * s.step_residual);
    if (gap > r.measured) {
      r.measured = gap;
      worst = n;
    }
  }
  r.passed = r.measured <= r.threshold;
  r.detail = "max gap at n=" + std::to_string(worst) + " over " + std::to_string(tr.length()) + " steps";
  return r;
}

inline long sakai_constant(Index b) { return (b - 1) * (b - 2) + 3; }

namespace detail {

// r = largest label in sigma(1..n); quasi-periodicity on that prefix with window b.
inline void require_quasi_periodic(const IterationTrace& tr, Index b, Index n, const char* who) {
  if (!tr.schedule) throw PreconditionViolated(std::string(who) + ": trace carries no schedule");
  const Index scope = std::max(n, b);
  if (const auto len = tr.schedule->length(); len && scope > *len)
    throw PreconditionViolated(std::string(who) + ": schedule shorter than the checked scope");
  Label r = 1;
  for (Index k = 1; k <= scope; ++k) r = std::max(r, (*tr.schedule)(k));
  if (b < r || !is_quasi_periodic(*tr.schedule, r, b, scope))
    throw PreconditionViolated(std::string(who) + ": schedule is not quasi-periodic with window b=" +
                               std::to_string(b) + " on [1.." + std::to_string(scope) + "]");
}

}  // namespace detail

/// ‖T_n x - T_m x‖² <= C Σ_{k=m}^{n-1} ‖T_{k+1}x - T_k x‖², C = (b-1)(b-2)+3, one segment.
inline CheckReport check_sakai_bound(const IterationTrace& tr, Index b, Index m, Index n) {
  if (!(n > m && m >= 1)) throw InvalidArgument("check_sakai_bound: need n > m >= 1");
  if (n > tr.length()) throw PreconditionViolated("check_sakai_bound: segment beyond trace");
  detail::require_quasi_periodic(tr, b, n, "check_sakai_bound");
  const double c = static_cast<double>(sakai_constant(b));
  double acc = 0.0;
  for (Index k = m + 1; k <= n; ++k) acc += tr.step(k).step_residual * tr.step(k).step_residual;
  const double lhs = (tr.require_iterate(n, "check_sakai_bound") - tr.require_iterate(m, "check_sakai_bound")).squaredNorm();
  const double rhs = c * acc;
  CheckReport r{.name = "sakai_bound", .measured = rhs - lhs, .threshold = 0.0};
  r.passed = r.measured >= 0.0;
  r.detail = "C=" + std::to_string(sakai_constant(b)) + " segment [" + std::to_string(m) + "," + std::to_string(n) + "]";
  return r;
}

/// Every pair 1 <= m < n <= n_last; measured is the minimum slack.
inline CheckReport check_sakai_all_pairs(const IterationTrace& tr, Index b, Index n_last) {
  n_last = std::min(n_last, tr.length());
  if (n_last < 2) throw PreconditionViolated("check_sakai_bound: trace too short");
  detail::require_quasi_periodic(tr, b, n_last, "check_sakai_bound");
  const double c = static_cast<double>(sakai_constant(b));
  std::vector<Vector> it;
  for (Index k = 0; k <= n_last; ++k) it.push_back(tr.require_iterate(k, "check_sakai_bound"));
  CheckReport r{.name = "sakai_bound", .measured = std::numeric_limits<double>::infinity(), .threshold = 0.0};
  Index wm = 0, wn = 0;
  // Segment sums are accumulated per start m; prefix-sum differences would cancel catastrophically.
  for (Index m = 1; m < n_last; ++m) {
    double acc = 0.0;
    for (Index n = m + 1; n <= n_last; ++n) {
      const double res = tr.step(n).step_residual;
      acc += res * res;
      const double lhs = (it[static_cast<std::size_t>(n)] - it[static_cast<std::size_t>(m)]).squaredNorm();
      const double slack = c * acc - lhs;
      if (slack < r.measured) {
        r.measured = slack;
        wm = m;
        wn = n;
      }
    }
  }
  r.passed = r.measured >= 0.0;
  r.detail = "C=" + std::to_string(sakai_constant(b)) + ", min slack at (m,n)=(" + std::to_string(wm) + "," +
             std::to_string(wn) + ")";
  return r;
}

/// max over the last `window` steps of ‖T_{n-k}x - T_n x‖, compared against the
/// same quantity over the first `window` steps.
inline CheckReport check_vanishing_differences(const IterationTrace& tr, Index k, Index window,
                                               double decay_ratio = 1e-3) {
  if (k < 0 || window < 1) throw InvalidArgument("check_vanishing_differences: need k >= 0, window >= 1");
  if (tr.length() <= window + k)
    throw PreconditionViolated("check_vanishing_differences: trace length must exceed window + k");
  const char* who = "check_vanishing_differences";
  auto diff = [&](Index n) { return (tr.require_iterate(n - k, who) - tr.require_iterate(n, who)).norm(); };
  double head = 0.0, tail = 0.0;
  for (Index n = k; n < k + window; ++n) head = std::max(head, diff(n));
  for (Index n = tr.length() - window + 1; n <= tr.length(); ++n) tail = std::max(tail, diff(n));
  CheckReport r{.name = "vanishing_differences", .measured = tail};
  r.threshold = decay_ratio * head + 1e-12 * std::max(1.0, tr.x0_norm);
  r.passed = tail <= r.threshold;
  r.detail = "k=" + std::to_string(k) + ", first-window max " + std::to_string(head);
  return r;
}

struct MarkerResidualOptions {
  double tol = 1e-9;
  bool require_monotone = true;
};

/// At each marker k: ‖(I - P_{r+1}) T_{k-1}x‖² <= ‖T_{k-1}x‖² - ‖T_k x‖² + tol, and the
/// left side at the last marker does not exceed the one at the first.
inline CheckReport check_marker_residual(const IterationTrace& tr, const ProjectorFamily& family,
                                         const std::vector<Index>& markers, MarkerResidualOptions opt = {}) {
  if (opt.require_monotone && !family.monotone_decreasing())
    throw PreconditionViolated("check_marker_residual: family tail is not monotone decreasing");
  if (!tr.schedule || tr.x0.size() == 0) throw PreconditionViolated("check_marker_residual: trace lacks x0/schedule");
  std::vector<Index> used;
  for (Index k : markers)
    if (k >= 1 && k <= tr.length()) used.push_back(k);
  CheckReport r{.name = "marker_residual", .measured = -std::numeric_limits<double>::infinity(), .threshold = opt.tol};
  if (used.empty()) {
    r.passed = true;
    r.measured = 0.0;
    r.detail = "no markers inside the trace";
    return r;
  }
  const auto it = replay(family, *tr.schedule, tr.x0, used.back());
  const Projector& first_tail = family.at(family.finite_count() + 1);
  std::vector<double> lhs;
  for (Index k : used) {
    const Vector& y = it[static_cast<std::size_t>(k - 1)];
    const double l = first_tail.source().project_complement(y).squaredNorm();
    const double drop = tr.norm_at(k - 1) * tr.norm_at(k - 1) - tr.norm_at(k) * tr.norm_at(k);
    lhs.push_back(l);
    r.measured = std::max(r.measured, l - drop);
  }
  const bool decays = lhs.back() <= lhs.front() + opt.tol;
  r.passed = r.measured <= opt.tol && decays;
  r.detail = std::to_string(used.size()) + " markers; residual^2 first " + std::to_string(lhs.front()) + " last " +
             std::to_string(lhs.back()) + (family.monotone_decreasing() ? "" : "; precondition: tail not monotone");
  return r;
}

inline CheckReport check_three_point_values(const Vector& x, const Vector& y, const Vector& qx, const Vector& qy) {
  const double lhs = (x - y).squaredNorm();
  const double rhs = (x - qy).squaredNorm() + (x - qx).squaredNorm() + 2.0 * (y - qy).squaredNorm();
  CheckReport r{.name = "three_point", .measured = rhs - lhs, .threshold = -1e-10 * std::max({1.0, x.squaredNorm(), y.squaredNorm()})};
  r.passed = r.measured >= r.threshold;
  return r;
}

/// ‖x-y‖² <= ‖x-Qy‖² + ‖x-Qx‖² + 2‖y-Qy‖²; measured is the slack.
inline CheckReport check_three_point(const Projector& q, const Vector& x, const Vector& y) {
  detail::require_dim("check_three_point", q.ambient_dim(), x.size());
  detail::require_dim("check_three_point", q.ambient_dim(), y.size());
  return check_three_point_values(x, y, q(x), q(y));
}

struct WeakTraceOptions {
  Index tail = 10;     // last steps inspected
  double tol = 1e-6;   // relative to ‖x0‖ ‖y‖
};

/// Probe-wise convergence <T_n x, y> -> <P x, y>.
inline CheckReport check_weak_trace(const ProjectorFamily& family, const Schedule& s, const Vector& x0,
                                    const IterateOptions& iter_opt, const std::vector<Vector>& probes,
                                    WeakTraceOptions opt = {}) {
  if (probes.empty()) throw InvalidArgument("check_weak_trace: probes must be nonempty");
  for (const auto& y : probes) detail::require_dim("check_weak_trace", family.ambient_dim(), y.size());
  std::vector<std::vector<double>> series(probes.size());
  const auto tr = detail::run_iteration(family, s, x0, iter_opt, [&](Index n, const Vector& t) {
    if (n == 0) return;
    for (std::size_t i = 0; i < probes.size(); ++i) series[i].push_back(t.dot(probes[i]));
  });
  CheckReport r{.name = "weak_trace", .threshold = opt.tol};
  const auto len = static_cast<Index>(series.front().size());
  const Index from = std::max<Index>(0, len - opt.tail);
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const double target = tr.limit_point.dot(probes[i]);
    const double scale = std::max(1e-300, std::max(1.0, tr.x0_norm) * std::max(1.0, probes[i].norm()));
    for (Index n = from; n < len; ++n)
      r.measured = std::max(r.measured, std::abs(series[i][static_cast<std::size_t>(n)] - target) / scale);
  }
  r.passed = r.measured <= r.threshold;
  r.detail = std::to_string(probes.size()) + " probes, last " + std::to_string(len - from) + " of " +
             std::to_string(len) + " steps";
  return r;
}

struct NormLimitOptions {
  bool strong = false;        // also require lim ‖T_n x‖ = ‖P x‖
  double monotone_tol = 1e-12;
  double cauchy_tol = 1e-10;
  double limit_tol = 1e-6;
};

/// {‖T_n x‖} nonincreasing and settled; in strong mode its limit equals ‖P x‖.
inline CheckReport check_norm_limit_consistency(const IterationTrace& tr, NormLimitOptions opt = {}) {
  if (tr.steps.empty()) throw PreconditionViolated("check_norm_limit_consistency: empty trace");
  CheckReport r{.name = "norm_limit"};
  const double mono_tol = opt.monotone_tol * std::max(1.0, tr.x0_norm);
  double worst_rise = -std::numeric_limits<double>::infinity();
  for (Index n = 1; n <= tr.length(); ++n) worst_rise = std::max(worst_rise, tr.norm_at(n) - tr.norm_at(n - 1));
  const double last_diff = std::abs(tr.norm_at(tr.length()) - tr.norm_at(tr.length() - 1));
  const bool monotone = worst_rise <= mono_tol;
  const bool cauchy = last_diff <= opt.cauchy_tol;
  r.measured = worst_rise;
  r.threshold = mono_tol;
  r.passed = monotone && cauchy;
  std::ostringstream d;
  d << std::setprecision(6) << "max rise " << worst_rise << ", last |diff| " << last_diff;
  if (opt.strong) {
    const double limit_gap = tr.limit_point.size() > 0
                                 ? std::abs(tr.norm_at(tr.length()) - tr.limit_point.norm())
                                 : std::numeric_limits<double>::infinity();
    r.passed = r.passed && limit_gap <= opt.limit_tol;
    d << ", |lim - |Px|| " << limit_gap;
  }
  r.detail = d.str();
  return r;
}

/// Inside each block k_n < i < j < k_{n+1} (k_0 = 0; the last block runs to the
/// trace end): ‖T_j x - T_i x‖² <= M (‖T_i x‖² - ‖T_j x‖²). Pairs with j - i > max_span are skipped.
inline CheckReport check_block_bound(const IterationTrace& tr, const std::vector<Index>& markers, double m_const,
                                     Index max_span = 256) {
  const double tol = 1e-12 * detail::scale2(tr.x0_norm);
  std::vector<Index> cuts{0};
  for (Index k : markers)
    if (k >= 1 && k <= tr.length()) cuts.push_back(k);
  cuts.push_back(tr.length() + 1);
  CheckReport r{.name = "block_bound", .measured = std::numeric_limits<double>::infinity(), .threshold = -tol};
  Index pairs = 0;
  for (std::size_t b = 0; b + 1 < cuts.size(); ++b) {
    const Index lo = cuts[b] + 1, hi = cuts[b + 1] - 1;
    std::vector<Vector> it;
    for (Index i = lo; i <= hi; ++i) it.push_back(tr.require_iterate(i, "check_block_bound"));
    for (Index i = lo; i <= hi; ++i)
      for (Index j = i + 1; j <= std::min(hi, i + max_span); ++j) {
        const double lhs = (it[static_cast<std::size_t>(j - lo)] - it[static_cast<std::size_t>(i - lo)]).squaredNorm();
        const double rhs = m_const * (tr.norm_at(i) * tr.norm_at(i) - tr.norm_at(j) * tr.norm_at(j));
        r.measured = std::min(r.measured, rhs - lhs);
        ++pairs;
      }
  }
  if (pairs == 0) r.measured = 0.0;
  r.passed = r.measured >= r.threshold;
  r.detail = "M=" + std::to_string(m_const) + ", " + std::to_string(cuts.size() - 1) + " blocks, " +
             std::to_string(pairs) + " pairs";
  return r;
}

/// halperin_power(n) against the cyclic iteration at step r n.
inline CheckReport check_halperin(const ProjectorFamily& family, const Vector& x0, Index n, Index step_offset = 0) {
  const Index r = family.finite_count();
  const Vector dense = halperin_power(family, x0, n);
  const auto it = replay(family, Schedule::cyclic(static_cast<int>(r)), x0, r * n + step_offset);
  CheckReport rep{.name = "halperin_power", .threshold = 1e-12 * std::max(1.0, x0.norm())};
  rep.measured = (dense - it.back()).norm();
  rep.passed = rep.measured <= rep.threshold;
  rep.detail = "n=" + std::to_string(n) + ", r=" + std::to_string(r);
  return rep;
}

/// Strong-convergence hypotheses: cb(finite ranges) < 1 and the finite intersection
/// equals the intersection over the whole family.
inline CheckReport check_strong_hypotheses(const ProjectorFamily& family, const Schedule& s) {
  const auto finite = family.finite_ranges();
  const AngleReport angle = friedrichs_cb(finite);
  const Subspace finite_cap = intersect(finite);
  const LimitSpec full = limit_subspace(family, s);
  const bool equal = same_span(finite_cap, full.subspace, 1e-8);
  CheckReport r{.name = "strong_hypotheses", .measured = angle.cb, .threshold = 1.0 - kClosedSumMargin};
  r.passed = angle.cb < r.threshold && equal;
  r.detail = "cb=" + std::to_string(angle.cb) + (equal ? ", intersections agree" : ", intersections differ");
  return r;
}

/// Marker subsequence converges and probes converge => whole trace converges.
inline CheckReport check_subsequence_principle(const IterationTrace& tr, const std::vector<Index>& markers,
                                               bool weak_ok, double tol = 1e-6, Index window = 16) {
  CheckReport r{.name = "subsequence_principle", .threshold = tol};
  if (tr.steps.empty()) throw PreconditionViolated("check_subsequence_principle: empty trace");
  const double scale = std::max(1.0, tr.x0_norm);
  std::optional<double> last_marker_dist;
  for (Index k : markers)
    if (k >= 1 && k <= tr.length()) last_marker_dist = tr.step(k).dist_to_limit / scale;
  double tail = 0.0;
  for (Index n = std::max<Index>(1, tr.length() - window + 1); n <= tr.length(); ++n)
    tail = std::max(tail, tr.step(n).dist_to_limit / scale);
  r.measured = tail;
  const bool antecedent = weak_ok && last_marker_dist && *last_marker_dist <= tol;
  r.passed = !antecedent || tail <= tol;
  r.detail = antecedent ? "marker subsequence and probes converged" : "antecedent not met (vacuous)";
  if (!weak_ok) r.detail += "; weak trace failed";
  return r;
}

/// Geometric per-step decay of dist_to_limit inside each inter-marker block.
inline std::vector<double> block_decay_rates(const IterationTrace& tr, const std::vector<Index>& markers) {
  std::vector<Index> cuts{0};
  for (Index k : markers)
    if (k >= 1 && k <= tr.length()) cuts.push_back(k);
  cuts.push_back(tr.length());
  std::vector<double> rates;
  for (std::size_t b = 0; b + 1 < cuts.size(); ++b) {
    const Index lo = std::max<Index>(cuts[b], 1), hi = cuts[b + 1];
    if (hi <= lo) continue;
    const double a = tr.step(lo).dist_to_limit, z = tr.step(hi).dist_to_limit;
    if (a > 0.0 && z > 0.0) rates.push_back(std::pow(z / a, 1.0 / static_cast<double>(hi - lo)));
  }
  return rates;
}

// ---- trace CSV: n,label,norm,step_residual,dist_to_limit,identity_gap ----
// Row n = 0 carries the initial state (label 0, norm ‖x0‖, dist ‖x0 - P x0‖).

inline void write_trace_csv(const IterationTrace& tr, std::ostream& out) {
  out << "n,label,norm,step_residual,dist_to_limit,identity_gap\n";
  auto num = [&](double v) { out << std::setprecision(17) << v; };
  const double d0 = tr.limit_point.size() ? (tr.x0 - tr.limit_point).norm() : 0.0;
  out << "0,0,";
  num(tr.x0_norm);
  out << ",0,";
  num(d0);
  out << ",0\n";
  for (const auto& s : tr.steps) {
    out << s.n << ',' << s.label << ',';
    num(s.norm);
    out << ',';
    num(s.step_residual);
    out << ',';
    num(s.dist_to_limit);
    out << ',';
    num(s.identity_gap);
    out << '\n';
  }
}

/// Scalars-only trace (no iterates, no schedule).
inline IterationTrace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "n,label,norm,step_residual,dist_to_limit,identity_gap")
    throw InvalidArgument("read_trace_csv: unexpected header");
  IterationTrace tr;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) throw InvalidArgument("read_trace_csv: expected 6 columns in '" + line + "'");
    StepRecord s{std::stoll(cells[0]), std::stoi(cells[1]), std::stod(cells[2]),
                 std::stod(cells[3]),  std::stod(cells[4]), std::stod(cells[5])};
    if (s.n == 0) {
      tr.x0_norm = s.norm;
      continue;
    }
    if (s.n != tr.length() + 1) throw InvalidArgument("read_trace_csv: rows out of order");
    tr.steps.push_back(s);
  }
  return tr;
}

}  // namespace pprod
