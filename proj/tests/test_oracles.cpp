#include <gtest/gtest.h>

#include "gerk/oracles.hpp"

using namespace gerk;

namespace {

// Subgradient optimality for min lambda||x||_1 + 1/2||x||^2 s.t. A x = y:
// there is x* in R(A^T) with x*_j = x_j + lambda sign(x_j) on the support
// and |x*_j| <= lambda off it.
void expect_elastic_net_kkt(const RealMatrix& A, const RealVector& yhat,
                            double lambda, const OracleSolution<double>& sol,
                            double tol) {
  const RealVector& x = sol.value;
  const RealVector& xs = sol.subgradient;
  EXPECT_LT((A * x - yhat).norm(), tol * yhat.norm());
  EXPECT_LT((project_onto_row_space<double>(A, xs) - xs).norm(), tol * (1.0 + xs.norm()));
  for (Index j = 0; j < x.size(); ++j) {
    if (x(j) != 0.0)
      EXPECT_NEAR(xs(j), x(j) + lambda * (x(j) > 0 ? 1.0 : -1.0), tol * (1.0 + lambda));
    else
      EXPECT_LE(std::abs(xs(j)), lambda * (1.0 + tol));
  }
}

}  // namespace

TEST(Oracle, RangeProjectionIsOrthogonal) {
  RngStream r(1);
  const RealMatrix A = make_rank_deficient<double>(12, 8, 3, 0.5, 2.0, r);
  const RealVector b = gaussian_vector<double>(12, r);
  const RealVector y = range_projection_quadratic<double>(A, b);
  EXPECT_LT((A.transpose() * (b - y)).norm(), 1e-12 * b.norm());
  // Independent route: projector from an orthonormal basis of R(A).
  const RealMatrix N = nullspace_basis_adjoint<double>(A);
  EXPECT_LT((y - (b - N * (N.transpose() * b))).norm(), 1e-12 * b.norm());
}

TEST(Oracle, QuadraticMisfitProjectionMatchesSvd) {
  RngStream r(2);
  const ComplexMatrix A = make_rank_deficient<Complex>(10, 6, 3, 0.5, 2.0, r);
  const ComplexVector b = gaussian_vector<Complex>(10, r);
  const auto sol = misfit_projection<Complex>(A, b, QuadraticMisfit{});
  EXPECT_TRUE(sol.converged);
  EXPECT_LT((sol.value - range_projection_quadratic<Complex>(A, b)).norm(), 1e-8 * b.norm());
}

TEST(Oracle, HuberMisfitProjectionStationaryAndModeIndependent) {
  RngStream r(3);
  const RealMatrix A = make_rank_deficient<double>(20, 10, 5, 0.5, 2.0, r);
  RealVector b = A * gaussian_vector<double>(10, r);
  b(4) += 30.0;
  b(11) -= 25.0;
  const MisfitGStar g = HuberQuadMisfit{0.1, 0.01};
  const auto fast = misfit_projection<double>(A, b, g);
  OracleOptions plain;
  plain.accelerated = false;
  plain.tol = 1e-9;
  const auto slow = misfit_projection<double>(A, b, g, plain);
  EXPECT_TRUE(fast.converged);
  EXPECT_LE(fast.residual_norm, 1e-10 * b.norm());
  const RealVector grad = A.transpose() * gstar_gradient<double>(g, RealVector(b - fast.value));
  EXPECT_LE(grad.norm(), 1e-10 * b.norm());
  EXPECT_LT((fast.value - slow.value).norm(), 1e-6 * b.norm());
  // y^ lies in the range of A.
  EXPECT_LT((range_projection_quadratic<double>(A, fast.value) - fast.value).norm(),
            1e-10 * b.norm());
}

TEST(Oracle, QuadraticRegularizerGivesPseudoinverse) {
  RngStream r(4);
  const RealMatrix A = make_rank_deficient<double>(9, 12, 4, 0.5, 2.0, r);
  const RealVector yhat = A * gaussian_vector<double>(12, r);
  const auto sol = constrained_regularizer_min<double>(A, yhat, QuadraticRegularizer{});
  EXPECT_TRUE(sol.converged);
  EXPECT_LT((sol.value - svd_pseudoinverse_apply<double>(A, yhat)).norm(), 1e-8 * sol.value.norm());
}

TEST(Oracle, ElasticNetKkt) {
  RngStream r(5);
  for (double lambda : {0.1, 1.0, 5.0}) {
    const RealMatrix A = make_rank_deficient<double>(10, 14, 6, 0.5, 2.0, r);
    RealVector xp = RealVector::Zero(14);
    xp(2) = 1.5;
    xp(9) = -0.7;
    const RealVector yhat = A * xp;
    const auto sol = constrained_regularizer_min<double>(A, yhat, ElasticNet{lambda});
    ASSERT_TRUE(sol.converged);
    expect_elastic_net_kkt(A, yhat, lambda, sol, 1e-8);
  }
}

TEST(Oracle, ElasticNetIdentityIsExact) {
  const RealMatrix A = RealMatrix::Identity(2, 2);
  RealVector y(2);
  y << 1.0, 0.0;
  const auto sol = constrained_regularizer_min<double>(A, y, ElasticNet{1.0});
  EXPECT_NEAR(sol.value(0), 1.0, 1e-10);
  EXPECT_EQ(sol.value(1), 0.0);
}

TEST(Oracle, ComplexElasticNetAgreesWithGroupEmbedding) {
  RngStream r(6);
  const ComplexMatrix A = make_rank_deficient<Complex>(6, 8, 4, 0.5, 2.0, r);
  const ComplexVector y = A * gaussian_vector<Complex>(8, r);
  const auto c = constrained_regularizer_min<Complex>(A, y, ComplexElasticNet{0.5});
  Groups g;
  for (Index j = 0; j < 8; ++j) g.push_back({j, 8 + j});
  const auto e = constrained_regularizer_min<double>(embed_complex_as_real(A), embed_vec(y),
                                                     GroupElasticNet{0.5, g});
  EXPECT_LT((embed_vec(c.value) - e.value).norm(), 1e-7 * (1.0 + e.value.norm()));
}

TEST(Oracle, RejectsRhsOutsideRange) {
  RngStream r(7);
  const RealMatrix A = make_rank_deficient<double>(8, 6, 3, 0.5, 2.0, r);
  const RealVector y = gaussian_vector<double>(8, r);
  try {
    constrained_regularizer_min<double>(A, y, ElasticNet{1.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidArgument);
  }
}

TEST(Oracle, NotConvergedCarriesBestIterate) {
  RngStream r(8);
  const RealMatrix A = make_rank_deficient<double>(8, 6, 3, 0.01, 2.0, r);
  const RealVector y = A * gaussian_vector<double>(6, r);
  OracleOptions o;
  o.max_iter = 3;
  try {
    constrained_regularizer_min<double>(A, y, ElasticNet{1.0}, o);
    FAIL();
  } catch (const NotConvergedError<double>& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotConverged);
    EXPECT_FALSE(e.best().converged);
    EXPECT_EQ(e.best().value.size(), 6);
  }
}

TEST(Oracle, ZeroRhs) {
  const RealMatrix A = RealMatrix::Ones(3, 2);
  const auto sol = constrained_regularizer_min<double>(A, RealVector::Zero(3), ElasticNet{1.0});
  EXPECT_TRUE(sol.converged);
  EXPECT_EQ(sol.value, RealVector::Zero(2));
}
