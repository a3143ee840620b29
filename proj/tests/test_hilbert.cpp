#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "pprod/hilbert.hpp"

using namespace pprod;

namespace {

// Classical Gram-Schmidt, one column at a time, written independently of the library.
Matrix classical_gram_schmidt(const Matrix& a) {
  Matrix q(a.rows(), a.cols());
  for (long j = 0; j < a.cols(); ++j) {
    Vector v = a.col(j);
    for (long i = 0; i < j; ++i) v -= q.col(i).dot(a.col(j)) * q.col(i);
    q.col(j) = v / v.norm();
  }
  return q;
}

// Intersection oracle: the null space of the stacked complements (I - P_1; ...; I - P_k).
Matrix stacked_null_space(const std::vector<Subspace>& subs, double tol) {
  const long d = subs.front().ambient_dim();
  Matrix stacked(d * static_cast<long>(subs.size()), d);
  for (std::size_t i = 0; i < subs.size(); ++i)
    stacked.middleRows(static_cast<long>(i) * d, d) = Matrix::Identity(d, d) - subs[i].projection_matrix();
  Eigen::JacobiSVD<Matrix> svd(stacked, Eigen::ComputeFullV);
  long rank = 0;
  for (long i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > tol) ++rank;
  return svd.matrixV().rightCols(d - rank);
}

Subspace with_common_part(long d, const Matrix& common, long extra, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Matrix cols(d, common.cols() + extra);
  cols.leftCols(common.cols()) = common;
  for (long j = 0; j < extra; ++j) cols.col(common.cols() + j) = random_gaussian_vector(d, rng);
  return orthonormalize(cols);
}

}  // namespace

TEST(SplitMix64, MatchesReferenceOutputs) {
  SplitMix64 g(0);
  EXPECT_EQ(g.next(), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(g.next(), 0x6E789E6AA1B965F4ULL);
  EXPECT_EQ(g.next(), 0x06C45D188009454FULL);
}

TEST(SplitMix64, UniformAndNormalAreSeedDeterministic) {
  SplitMix64 a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    const double u = a.uniform();
    EXPECT_EQ(u, b.uniform());
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
  EXPECT_EQ(a.normal(), b.normal());
}

TEST(Orthonormalize, AgreesWithClassicalGramSchmidt) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SplitMix64 rng(seed);
    Matrix a(7, 4);
    for (long j = 0; j < 4; ++j) a.col(j) = random_gaussian_vector(7, rng);
    const Subspace s = orthonormalize(a);
    const Matrix q = classical_gram_schmidt(a);
    ASSERT_EQ(s.dim(), 4);
    EXPECT_LT((s.basis() - q).cwiseAbs().maxCoeff(), 1e-10) << "seed " << seed;
  }
}

TEST(Orthonormalize, DropsDependentColumns) {
  Matrix a(3, 3);
  a << 1, 2, 0, 0, 0, 1, 0, 0, 0;
  const Subspace s = orthonormalize(a);
  EXPECT_EQ(s.dim(), 2);
  EXPECT_THROW(orthonormalize(std::span<const Vector>{}), InvalidArgument);
}

TEST(Subspace, RejectsInvalidBases) {
  Matrix not_orthonormal(2, 1);
  not_orthonormal << 1, 1;
  EXPECT_THROW(Subspace{not_orthonormal}, InvalidArgument);
  Matrix nan_basis(2, 1);
  nan_basis << std::nan(""), 0;
  EXPECT_THROW(Subspace{nan_basis}, NonFiniteInput);
  EXPECT_THROW(Subspace{Matrix::Identity(2, 3)}, InvalidArgument);
  EXPECT_THROW(Subspace{Matrix(0, 0)}, InvalidArgument);
}

TEST(Subspace, ProjectionDimensionMismatch) {
  const Subspace s = Subspace::full(3);
  EXPECT_THROW(s.project(Vector::Ones(2)), DimensionMismatch);
}

TEST(Projector, IdempotentSelfAdjointContractive) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const long d = 2 + static_cast<long>(seed % 7);
    const long k = static_cast<long>(seed % static_cast<std::uint64_t>(d + 1));
    const Projector p(random_subspace(d, k, seed));
    SplitMix64 rng(seed * 31);
    const Vector x = random_gaussian_vector(d, rng);
    const Vector y = random_gaussian_vector(d, rng);
    const Vector px = p(x);
    EXPECT_LT((p(px) - px).norm(), 1e-12);
    EXPECT_NEAR(px.dot(y), x.dot(p(y)), 1e-12 * (1 + x.norm() * y.norm()));
    EXPECT_LE(px.norm(), x.norm() + 1e-12);
    // Pythagoras: ||x||^2 = ||Px||^2 + dist(x, M)^2
    EXPECT_NEAR(x.squaredNorm(), px.squaredNorm() + std::pow(distance(x, p.source()), 2), 1e-10);
  }
}

TEST(OperatorNorm, TwoByTwoClosedForm) {
  Matrix a(2, 2);
  a << 3, 0, 0, -1;
  EXPECT_NEAR(operator_norm(a), 3.0, 1e-14);
  // [[1,1],[0,1]]: sigma_max = (1 + sqrt 5) / 2
  a << 1, 1, 0, 1;
  EXPECT_NEAR(operator_norm(a), (1.0 + std::sqrt(5.0)) / 2.0, 1e-14);
  a << 1, std::nan(""), 0, 1;
  EXPECT_THROW(operator_norm(a), NonFiniteInput);
}

TEST(Intersect, MatchesStackedComplementOracle) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const long d = 8;
    const long c = static_cast<long>(seed % 3);
    SplitMix64 rng(seed);
    Matrix common(d, c);
    for (long j = 0; j < c; ++j) common.col(j) = random_gaussian_vector(d, rng);
    std::vector<Subspace> subs;
    for (int i = 0; i < 3; ++i) subs.push_back(with_common_part(d, common, 3, seed * 10 + static_cast<std::uint64_t>(i)));
    const Subspace m = intersect(subs);
    const Matrix oracle = stacked_null_space(subs, 1e-8);
    ASSERT_EQ(m.dim(), oracle.cols()) << "seed " << seed;
    EXPECT_EQ(m.dim(), c);
    if (c > 0) EXPECT_TRUE(same_span(m, Subspace(orthonormalize(oracle).basis()), 1e-8));
  }
}

TEST(Intersect, CoordinateSubspaces) {
  Matrix a = Matrix::Zero(4, 2), b = Matrix::Zero(4, 2);
  a(0, 0) = a(1, 1) = 1;
  b(1, 0) = b(2, 1) = 1;
  const Subspace m = intersect({Subspace(a), Subspace(b)});
  ASSERT_EQ(m.dim(), 1);
  EXPECT_NEAR(std::abs(m.basis()(1, 0)), 1.0, 1e-14);
  EXPECT_THROW(intersect(std::span<const Subspace>{}), InvalidArgument);
  EXPECT_THROW(intersect({Subspace::full(2), Subspace::full(3)}), DimensionMismatch);
}

TEST(Complement, OrthogonalAndDimensionsAdd) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const long d = 6;
    const long k = static_cast<long>(seed % 7);
    const Subspace m = random_subspace(d, k, seed);
    const Subspace c = complement(m);
    EXPECT_EQ(m.dim() + c.dim(), d);
    if (m.dim() > 0 && c.dim() > 0) EXPECT_LT((m.basis().transpose() * c.basis()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ProjectorOrder, ContainmentIsLoewnerOrder) {
  Matrix e1 = Matrix::Zero(3, 1), e12 = Matrix::Zero(3, 2);
  e1(0, 0) = 1;
  e12(0, 0) = e12(1, 1) = 1;
  const Projector p(Subspace{e1}), q(Subspace{e12});
  EXPECT_TRUE(projector_leq(p, q));
  EXPECT_FALSE(projector_leq(q, p));
  // Loewner check by quadratic forms on random vectors
  SplitMix64 rng(5);
  for (int i = 0; i < 20; ++i) {
    const Vector x = random_gaussian_vector(3, rng);
    EXPECT_LE(x.dot(p(x)), x.dot(q(x)) + 1e-14);
  }
}

TEST(SubspaceJson, RoundTrip) {
  const Subspace s = random_subspace(5, 2, 9);
  const Subspace t = subspace_from_json(to_json_value(s));
  EXPECT_EQ(t.ambient_dim(), 5);
  EXPECT_LT((s.basis() - t.basis()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(subspace_from_json(nlohmann::json::object()), InvalidArgument);
}

TEST(RandomSubspace, SameSeedSameBasis) {
  EXPECT_EQ(random_subspace(6, 3, 17).basis(), random_subspace(6, 3, 17).basis());
  EXPECT_THROW(random_subspace(3, 4, 0), InvalidArgument);
}
