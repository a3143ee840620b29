#pragma once

// Finite-dimensional real Hilbert space primitives. Subspaces are kept as tall
// matrices with orthonormal columns; projectors apply Q (Q^T x) and never
// materialize the d x d matrix unless asked to.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pprod/error.hpp"
#include "pprod/random.hpp"

namespace pprod {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kDefaultTol = 1e-10;

namespace detail {

inline bool all_finite(const Matrix& m) { return m.allFinite(); }
inline bool all_finite(const Vector& v) { return v.allFinite(); }

inline void require_dim(const char* where, long expected, long got) {
  if (expected != got) throw DimensionMismatch(where, expected, got);
}

// Slack for orthonormality checks: never tighter than what Gram-Schmidt can deliver.
inline double orthonormality_slack(double tol, long d) {
  return std::max(tol, 64.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(std::max(1L, d)));
}

}  // namespace detail

/// Closed subspace of R^d stored by an orthonormal basis.
class Subspace {
 public:
  /// `basis` columns must be orthonormal within `tol`. A d x 0 matrix is the zero subspace.
  Subspace(Matrix basis, double tol = kDefaultTol) : basis_(std::move(basis)), tol_(tol) {
    if (basis_.rows() <= 0) throw InvalidArgument("Subspace: ambient dimension must be positive");
    if (basis_.cols() > basis_.rows()) throw InvalidArgument("Subspace: more basis vectors than ambient dimension");
    if (!(tol_ >= 0.0) || !std::isfinite(tol_)) throw InvalidArgument("Subspace: tolerance must be finite and >= 0");
    if (!detail::all_finite(basis_)) throw NonFiniteInput("Subspace");
    if (basis_.cols() > 0) {
      const Matrix gram = basis_.transpose() * basis_;
      const double err = (gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
      if (err > detail::orthonormality_slack(tol_, basis_.rows()))
        throw InvalidArgument("Subspace: basis is not orthonormal (max |<q_i,q_j> - delta_ij| = " +
                              std::to_string(err) + ")");
    }
  }

  static Subspace zero(long d, double tol = kDefaultTol) { return Subspace(Matrix(d, 0), tol); }
  static Subspace full(long d, double tol = kDefaultTol) { return Subspace(Matrix::Identity(d, d), tol); }

  long ambient_dim() const noexcept { return basis_.rows(); }
  long dim() const noexcept { return basis_.cols(); }
  double tol() const noexcept { return tol_; }
  const Matrix& basis() const noexcept { return basis_; }
  bool is_zero() const noexcept { return basis_.cols() == 0; }
  bool is_full() const noexcept { return basis_.cols() == basis_.rows(); }

  Vector project(const Vector& x) const {
    detail::require_dim("project", ambient_dim(), x.size());
    if (is_zero()) return Vector::Zero(x.size());
    return basis_ * (basis_.transpose() * x);
  }

  Vector project_complement(const Vector& x) const { return x - project(x); }

  /// Dense Q Q^T.
  Matrix projection_matrix() const { return basis_ * basis_.transpose(); }

 private:
  Matrix basis_;
  double tol_;
};

/// Orthogonal projection onto a Subspace.
class Projector {
 public:
  explicit Projector(Subspace source) : source_(std::move(source)) {}

  const Subspace& source() const noexcept { return source_; }
  long ambient_dim() const noexcept { return source_.ambient_dim(); }

  Vector operator()(const Vector& x) const { return source_.project(x); }
  Vector apply(const Vector& x) const { return source_.project(x); }
  Matrix matrix() const { return source_.projection_matrix(); }

 private:
  Subspace source_;
};

/// Two-pass modified Gram-Schmidt. Vectors whose residual norm is <= tol are dropped.
inline Subspace orthonormalize(const Matrix& columns, double tol = kDefaultTol) {
  if (!(tol > 0.0)) throw InvalidArgument("orthonormalize: tol must be > 0");
  if (!detail::all_finite(columns)) throw NonFiniteInput("orthonormalize");
  const long d = columns.rows();
  Matrix q(d, std::min<long>(d, columns.cols()));
  long k = 0;
  for (long c = 0; c < columns.cols() && k < d; ++c) {
    Vector w = columns.col(c);
    for (int pass = 0; pass < 2; ++pass)
      for (long j = 0; j < k; ++j) w -= q.col(j).dot(w) * q.col(j);
    const double n = w.norm();
    if (n > tol) q.col(k++) = w / n;
  }
  return Subspace(q.leftCols(k), tol);
}

inline Subspace orthonormalize(std::span<const Vector> vectors, double tol = kDefaultTol) {
  if (vectors.empty()) throw InvalidArgument("orthonormalize: empty vector list has no ambient dimension");
  const long d = vectors.front().size();
  Matrix cols(d, static_cast<long>(vectors.size()));
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    detail::require_dim("orthonormalize", d, vectors[i].size());
    cols.col(static_cast<long>(i)) = vectors[i];
  }
  return orthonormalize(cols, tol);
}

inline Vector project(const Projector& p, const Vector& x) { return p(x); }

/// Largest singular value.
inline double operator_norm(const Matrix& a) {
  if (!detail::all_finite(a)) throw NonFiniteInput("operator_norm");
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

inline double distance(const Vector& x, const Subspace& m) {
  detail::require_dim("distance", m.ambient_dim(), x.size());
  return m.project_complement(x).norm();
}

inline bool contains(const Subspace& m, const Vector& x, double tol) { return distance(x, m) <= tol; }

/// range(a) is contained in range(b) within tol.
inline bool is_contained(const Subspace& a, const Subspace& b, double tol) {
  detail::require_dim("is_contained", b.ambient_dim(), a.ambient_dim());
  if (a.is_zero()) return true;
  if (a.dim() > b.dim()) return false;
  const Matrix residual = a.basis() - b.basis() * (b.basis().transpose() * a.basis());
  return operator_norm(residual) <= tol;
}

inline bool same_span(const Subspace& a, const Subspace& b, double tol) {
  return a.dim() == b.dim() && is_contained(a, b, tol) && is_contained(b, a, tol);
}

/// Intersection by repeated pairwise reduction: the part of span(A) left fixed by
/// P_B is the right null space of (I - P_B) A.
inline Subspace intersect(std::span<const Subspace> subspaces, double tol = kDefaultTol) {
  if (subspaces.empty()) throw InvalidArgument("intersect: empty subspace list");
  const long d = subspaces.front().ambient_dim();
  for (const auto& s : subspaces) detail::require_dim("intersect", d, s.ambient_dim());

  Matrix current = subspaces.front().basis();
  for (std::size_t i = 1; i < subspaces.size() && current.cols() > 0; ++i) {
    const Matrix& b = subspaces[i].basis();
    const Matrix residual = current - b * (b.transpose() * current);
    Eigen::JacobiSVD<Matrix> svd(residual, Eigen::ComputeFullV);
    const Vector& s = svd.singularValues();
    long keep = 0;
    for (long j = 0; j < s.size(); ++j)
      if (s(j) > tol) ++keep;
    // Columns of V beyond the numerical rank span the null space.
    current = current * svd.matrixV().rightCols(current.cols() - keep);
  }
  return orthonormalize(current, tol);
}

inline Subspace intersect(std::initializer_list<Subspace> subspaces, double tol = kDefaultTol) {
  return intersect(std::span<const Subspace>(subspaces.begin(), subspaces.size()), tol);
}

inline Subspace complement(const Subspace& m) {
  const long d = m.ambient_dim();
  if (m.is_zero()) return Subspace::full(d, m.tol());
  if (m.is_full()) return Subspace::zero(d, m.tol());
  Eigen::HouseholderQR<Matrix> qr(m.basis());
  const Matrix q = qr.householderQ() * Matrix::Identity(d, d);
  return orthonormalize(Matrix(q.rightCols(d - m.dim())), m.tol());
}

/// P <= Q in the Loewner order, i.e. range(P) within range(Q).
inline bool projector_leq(const Projector& p, const Projector& q) {
  detail::require_dim("projector_leq", q.ambient_dim(), p.ambient_dim());
  return is_contained(p.source(), q.source(), std::max(p.source().tol(), q.source().tol()));
}

// ---- seeded generators (tests, scenarios) ----

inline Vector random_gaussian_vector(long d, SplitMix64& rng) {
  Vector v(d);
  for (long i = 0; i < d; ++i) v(i) = rng.normal();
  return v;
}

inline Vector random_unit_vector(long d, SplitMix64& rng) {
  Vector v = random_gaussian_vector(d, rng);
  while (v.norm() == 0.0) v = random_gaussian_vector(d, rng);
  return v / v.norm();
}

/// Span of k Gaussian vectors; almost surely of dimension k.
inline Subspace random_subspace(long d, long k, std::uint64_t seed, double tol = kDefaultTol) {
  if (k < 0 || k > d) throw InvalidArgument("random_subspace: need 0 <= k <= d");
  SplitMix64 rng(seed);
  Matrix cols(d, k);
  for (long j = 0; j < k; ++j) cols.col(j) = random_gaussian_vector(d, rng);
  return orthonormalize(cols, tol);
}

// ---- JSON: {"ambient_dim": d, "basis": [[...], ...]}, one row per basis vector ----

inline nlohmann::json to_json_value(const Subspace& s) {
  nlohmann::json rows = nlohmann::json::array();
  for (long j = 0; j < s.dim(); ++j) {
    nlohmann::json row = nlohmann::json::array();
    for (long i = 0; i < s.ambient_dim(); ++i) row.push_back(s.basis()(i, j));
    rows.push_back(std::move(row));
  }
  return {{"ambient_dim", s.ambient_dim()}, {"basis", std::move(rows)}};
}

inline Subspace subspace_from_json(const nlohmann::json& j, double tol = kDefaultTol) {
  if (!j.is_object() || !j.contains("ambient_dim") || !j.contains("basis"))
    throw InvalidArgument("subspace JSON needs ambient_dim and basis");
  const long d = j.at("ambient_dim").get<long>();
  if (d <= 0) throw InvalidArgument("subspace JSON: ambient_dim must be positive");
  const auto& rows = j.at("basis");
  Matrix q(d, static_cast<long>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    detail::require_dim("subspace JSON row", d, static_cast<long>(rows[r].size()));
    for (long i = 0; i < d; ++i) q(i, static_cast<long>(r)) = rows[r][static_cast<std::size_t>(i)].get<double>();
  }
  return Subspace(std::move(q), tol);
}

}  // namespace pprod
