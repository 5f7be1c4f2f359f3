#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "gerk/numeric.hpp"

using namespace gerk;

namespace {

// Independent route: power iteration on A^H A.
template <Field S>
double power_norm(const Matrix<S>& A, int iters = 3000) {
  RngStream r(99);
  Vector<S> v = gaussian_vector<S>(A.cols(), r);
  for (int i = 0; i < iters; ++i) {
    v = A.adjoint() * (A * v);
    v /= v.norm();
  }
  return (A * v).norm();
}

// Independent route: pseudoinverse from the eigendecomposition of A^H A.
template <Field S>
Vector<S> eig_pinv_apply(const Matrix<S>& A, const Vector<S>& b) {
  Eigen::SelfAdjointEigenSolver<Matrix<S>> es(A.adjoint() * A);
  const auto& ev = es.eigenvalues();
  const double thr = ev.maxCoeff() * 1e-10;
  Vector<S> rhs = es.eigenvectors().adjoint() * (A.adjoint() * b);
  for (Index i = 0; i < ev.size(); ++i) rhs(i) = ev(i) > thr ? rhs(i) / ev(i) : S(0);
  return es.eigenvectors() * rhs;
}

}  // namespace

template <class S>
class NumericTyped : public ::testing::Test {};
using Fields = ::testing::Types<double, Complex>;
TYPED_TEST_SUITE(NumericTyped, Fields);

TYPED_TEST(NumericTyped, SpectralNormMatchesPowerIteration) {
  using S = TypeParam;
  RngStream r(1);
  for (int rep = 0; rep < 5; ++rep) {
    const Matrix<S> A = gaussian_matrix<S>(12, 7, r);
    EXPECT_NEAR(spectral_norm(A), power_norm<S>(A), 1e-8 * spectral_norm(A));
  }
}

TYPED_TEST(NumericTyped, MakeRankDeficientHasRequestedRankAndSpectrum) {
  using S = TypeParam;
  RngStream r(2);
  const Matrix<S> A = make_rank_deficient<S>(30, 20, 6, 0.5, 3.0, r);
  EXPECT_EQ(numerical_rank(A), 6);
  Eigen::ColPivHouseholderQR<Matrix<S>> qr(A);
  qr.setThreshold(1e-10);
  EXPECT_EQ(qr.rank(), 6);
  const auto sv = singular_values(A);
  EXPECT_LE(sv(0), 3.0 + 1e-10);
  EXPECT_GE(sv(5), 0.5 - 1e-10);
  EXPECT_LT(sv(6), 1e-12);
}

TYPED_TEST(NumericTyped, MakeRankDeficientRejectsBadRank) {
  using S = TypeParam;
  RngStream r(3);
  EXPECT_THROW(make_rank_deficient<S>(5, 4, 4, 1, 2, r), Error);
  EXPECT_THROW(make_rank_deficient<S>(5, 4, 0, 1, 2, r), Error);
  try {
    make_rank_deficient<S>(5, 4, 4, 1, 2, r);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidRank);
  }
}

TYPED_TEST(NumericTyped, PseudoinverseMatchesEigenRoute) {
  using S = TypeParam;
  RngStream r(4);
  for (int rep = 0; rep < 5; ++rep) {
    const Matrix<S> A = make_rank_deficient<S>(15, 9, 4, 0.5, 2.0, r);
    const Vector<S> b = gaussian_vector<S>(15, r);
    const Vector<S> x = svd_pseudoinverse_apply<S>(A, b);
    const Vector<S> y = eig_pinv_apply<S>(A, b);
    EXPECT_LT((x - y).norm(), 1e-8 * (1.0 + y.norm()));
    // Normal equations and row-space membership.
    EXPECT_LT((A.adjoint() * (b - A * x)).norm(), 1e-10 * b.norm());
    EXPECT_LT((x - project_onto_row_space<S>(A, x)).norm(), 1e-10 * x.norm());
  }
}

TEST(Numeric, PseudoinverseOfDiagonal) {
  RealMatrix A = RealMatrix::Zero(3, 2);
  A(0, 0) = 2.0;
  RealVector b(3);
  b << 4.0, 1.0, 5.0;
  const RealVector x = svd_pseudoinverse_apply<double>(A, b);
  EXPECT_NEAR(x(0), 2.0, 1e-15);
  EXPECT_NEAR(x(1), 0.0, 1e-15);
  EXPECT_THROW(svd_pseudoinverse_apply<double>(A, RealVector::Ones(2)), Error);
}

TYPED_TEST(NumericTyped, NullspaceOfAdjointIsOrthonormalComplement) {
  using S = TypeParam;
  RngStream r(5);
  const Matrix<S> A = make_rank_deficient<S>(14, 10, 5, 0.5, 2.0, r);
  const Matrix<S> N = nullspace_basis_adjoint<S>(A);
  ASSERT_EQ(N.rows(), 14);
  ASSERT_EQ(N.cols(), 9);
  EXPECT_LT((A.adjoint() * N).norm(), 1e-12 * 14);
  EXPECT_LT((N.adjoint() * N - Matrix<S>::Identity(9, 9)).norm(), 1e-12 * 14);
}

TEST(Numeric, NullspaceEmptyForFullRowRank) {
  RngStream r(6);
  const RealMatrix A = gaussian_matrix<double>(4, 7, r);
  EXPECT_EQ(nullspace_basis_adjoint<double>(A).cols(), 0);
}

TEST(Numeric, MinPositiveSingular) {
  RealMatrix A = RealMatrix::Zero(3, 3);
  A(0, 0) = 3.0;
  A(1, 1) = 0.25;
  EXPECT_DOUBLE_EQ(min_positive_singular(A), 0.25);
  EXPECT_THROW(min_positive_singular(RealMatrix::Zero(2, 2)), Error);
  EXPECT_EQ(numerical_rank(RealMatrix::Zero(2, 2)), 0);
}

TEST(Numeric, EmbeddingIsHomomorphism) {
  RngStream r(7);
  const ComplexMatrix A = gaussian_matrix<Complex>(5, 3, r);
  const ComplexVector x = gaussian_vector<Complex>(3, r);
  const RealMatrix R = embed_complex_as_real(A);
  EXPECT_LT((R * embed_vec(x) - embed_vec(ComplexVector(A * x))).norm(), 1e-13);
  EXPECT_LT((extract_vec(embed_vec(x)) - x).norm(), 0.0 + 1e-300);
  EXPECT_LT((R.transpose() - embed_complex_as_real(A.adjoint())).norm(), 1e-15);
  EXPECT_THROW(extract_vec(RealVector::Zero(3)), Error);
}

TEST(Numeric, GaussianMatrixDeterministic) {
  RngStream a(8), b(8);
  EXPECT_EQ(gaussian_matrix<double>(4, 4, a), gaussian_matrix<double>(4, 4, b));
}
