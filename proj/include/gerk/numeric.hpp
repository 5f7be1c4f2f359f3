#pragma once

// Field-generic dense linear algebra: SVD-derived quantities with a fixed
// numerical-rank convention, the real embedding of complex systems, and the
// random rank-deficient test matrices used by the experiments.

#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <cstddef>
#include <string>
#include <type_traits>

#include <Eigen/Dense>

#include "gerk/errors.hpp"
#include "gerk/random.hpp"

namespace gerk {

using Index = Eigen::Index;
using Complex = std::complex<double>;

template <class S>
concept Field = std::same_as<S, double> || std::same_as<S, Complex>;

template <class S>
inline constexpr bool is_complex_v = std::is_same_v<S, Complex>;

template <Field S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <Field S>
using RowMatrix =
    Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <Field S>
using Vector = Eigen::Matrix<S, Eigen::Dynamic, 1>;

using RealMatrix = Matrix<double>;
using RealVector = Vector<double>;
using ComplexMatrix = Matrix<Complex>;
using ComplexVector = Vector<Complex>;

enum class FieldKind { Real, Complex };

template <Field S>
constexpr FieldKind field_of() noexcept {
  return is_complex_v<S> ? FieldKind::Complex : FieldKind::Real;
}

inline std::string to_string(FieldKind f) {
  return f == FieldKind::Real ? "real" : "complex";
}

/// Relative factor of the rank decision: sigma <= max(m,n) * sigma_max * 1e-12
/// counts as zero.
inline constexpr double kRankRelTol = 1e-12;

inline double rank_threshold(const Eigen::VectorXd& sv, Index rows,
                             Index cols) {
  if (sv.size() == 0) return 0.0;
  return static_cast<double>(std::max(rows, cols)) * sv.maxCoeff() *
         kRankRelTol;
}

/// Singular values in decreasing order.
template <class Derived>
Eigen::VectorXd singular_values(const Eigen::MatrixBase<Derived>& M) {
  using S = typename Derived::Scalar;
  if (M.size() == 0) return Eigen::VectorXd();
  Eigen::BDCSVD<Matrix<S>> svd(M.eval());
  return svd.singularValues();
}

/// Operator 2-norm (largest singular value). Zero matrix gives 0.
template <class Derived>
double spectral_norm(const Eigen::MatrixBase<Derived>& M) {
  if (M.size() == 0)
    throw Error(ErrorKind::InvalidArgument, "spectral_norm: empty matrix");
  const auto sv = singular_values(M);
  return sv.size() == 0 ? 0.0 : sv(0);
}

template <class Derived>
Index numerical_rank(const Eigen::MatrixBase<Derived>& M) {
  const auto sv = singular_values(M);
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double thr = rank_threshold(sv, M.rows(), M.cols());
  return static_cast<Index>((sv.array() > thr).count());
}

/// Smallest singular value above the rank threshold.
template <class Derived>
double min_positive_singular(const Eigen::MatrixBase<Derived>& M) {
  const auto sv = singular_values(M);
  if (sv.size() == 0 || sv(0) == 0.0)
    throw Error(ErrorKind::ZeroMatrix, "min_positive_singular: zero matrix");
  const double thr = rank_threshold(sv, M.rows(), M.cols());
  double best = sv(0);
  for (Index i = 0; i < sv.size(); ++i)
    if (sv(i) > thr) best = sv(i);
  return best;
}

/// M^+ v through a thin SVD, singular values below the rank threshold
/// treated as zero.
template <Field S>
Vector<S> svd_pseudoinverse_apply(const Matrix<S>& M, const Vector<S>& v) {
  if (v.size() != M.rows())
    throw Error(ErrorKind::DimensionMismatch,
                "svd_pseudoinverse_apply: vector length " +
                    std::to_string(v.size()) + " != rows " +
                    std::to_string(M.rows()));
  if (M.size() == 0) return Vector<S>::Zero(M.cols());
  Eigen::BDCSVD<Matrix<S>> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double thr = rank_threshold(sv, M.rows(), M.cols());
  Vector<S> coeff = svd.matrixU().adjoint() * v;
  for (Index i = 0; i < sv.size(); ++i)
    coeff(i) = (sv(i) > thr && sv(i) > 0.0) ? coeff(i) / sv(i) : S(0);
  return svd.matrixV() * coeff;
}

/// Orthonormal basis of the null space of M^H (= orthogonal complement of
/// the range of M), as columns. An m x 0 result means M has full row rank.
template <Field S>
Matrix<S> nullspace_basis_adjoint(const Matrix<S>& M) {
  const Index m = M.rows();
  if (M.size() == 0) return Matrix<S>::Identity(m, m);
  Eigen::BDCSVD<Matrix<S>> svd(M, Eigen::ComputeFullU);
  const auto& sv = svd.singularValues();
  Index rank = 0;
  if (sv(0) > 0.0) {
    const double thr = rank_threshold(sv, M.rows(), M.cols());
    rank = static_cast<Index>((sv.array() > thr).count());
  }
  return svd.matrixU().rightCols(m - rank);
}

/// Euclidean projection of v onto the range of M^H, i.e. the row space of M.
template <Field S>
Vector<S> project_onto_row_space(const Matrix<S>& M, const Vector<S>& v) {
  if (M.size() == 0) return Vector<S>::Zero(v.size());
  Eigen::BDCSVD<Matrix<S>> svd(M, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double thr = rank_threshold(sv, M.rows(), M.cols());
  const Index r = sv(0) > 0.0 ? (sv.array() > thr).count() : 0;
  const auto V = svd.matrixV().leftCols(r);
  return V * (V.adjoint() * v);
}

// ---------------------------------------------------------------------------
// Real embedding of complex systems
// ---------------------------------------------------------------------------

/// [[Re A, -Im A], [Im A, Re A]] (2m x 2n).
inline RealMatrix embed_complex_as_real(const ComplexMatrix& A) {
  const Index m = A.rows(), n = A.cols();
  RealMatrix R(2 * m, 2 * n);
  R.topLeftCorner(m, n) = A.real();
  R.topRightCorner(m, n) = -A.imag();
  R.bottomLeftCorner(m, n) = A.imag();
  R.bottomRightCorner(m, n) = A.real();
  return R;
}

/// (Re x, Im x) stacked.
inline RealVector embed_vec(const ComplexVector& x) {
  RealVector r(2 * x.size());
  r.head(x.size()) = x.real();
  r.tail(x.size()) = x.imag();
  return r;
}

/// Left inverse of embed_vec.
inline ComplexVector extract_vec(const RealVector& r) {
  if (r.size() % 2 != 0)
    throw Error(ErrorKind::DimensionMismatch,
                "extract_vec: odd-length real vector");
  const Index n = r.size() / 2;
  ComplexVector x(n);
  for (Index j = 0; j < n; ++j) x(j) = Complex(r(j), r(n + j));
  return x;
}

// ---------------------------------------------------------------------------
// Random matrices
// ---------------------------------------------------------------------------

template <Field S>
Matrix<S> gaussian_matrix(Index rows, Index cols, RngStream& rng) {
  Matrix<S> G(rows, cols);
  // Column-major fill order is part of the reproducibility contract.
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) G(i, j) = rng.gaussian<S>();
  return G;
}

template <Field S>
Vector<S> gaussian_vector(Index n, RngStream& rng) {
  Vector<S> v(n);
  for (Index i = 0; i < n; ++i) v(i) = rng.gaussian<S>();
  return v;
}

/// Thin Q factor of a Householder QR.
template <Field S>
Matrix<S> orthonormal_columns(const Matrix<S>& G) {
  Eigen::HouseholderQR<Matrix<S>> qr(G);
  return qr.householderQ() * Matrix<S>::Identity(G.rows(), G.cols());
}

/// A = U diag(sigma) V^H with U (m x r), V (n x r) orthonormal and the r
/// singular values drawn uniformly from [sv_lo, sv_hi]. Draw order: U's
/// Gaussian, V's Gaussian, then the singular values.
template <Field S>
Matrix<S> make_rank_deficient(Index m, Index n, Index r, double sv_lo,
                              double sv_hi, RngStream& rng) {
  if (r < 1 || r >= std::min(m, n))
    throw Error(ErrorKind::InvalidRank,
                "make_rank_deficient: need 1 <= r < min(m, n), got r=" +
                    std::to_string(r));
  if (!(sv_lo > 0.0) || !(sv_lo < sv_hi))
    throw Error(ErrorKind::InvalidArgument,
                "make_rank_deficient: need 0 < sv_lo < sv_hi");
  const Matrix<S> U = orthonormal_columns<S>(gaussian_matrix<S>(m, r, rng));
  const Matrix<S> V = orthonormal_columns<S>(gaussian_matrix<S>(n, r, rng));
  Eigen::VectorXd sigma(r);
  for (Index k = 0; k < r; ++k) sigma(k) = rng.uniform(sv_lo, sv_hi);
  return U * sigma.cast<S>().asDiagonal() * V.adjoint();
}

}  // namespace gerk
