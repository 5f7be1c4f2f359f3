#pragma once

// Explicit global error-bound constant for the elastic-net regularizer,
//
//   gamma(x^) = 1 / s~^2 * (|x^|_min + 2 lambda) / |x^|_min      (x^ != 0)
//   gamma(0)  = 2 n / (s+_min(A))^2
//
// where s~ = min over nonzero column submatrices A_J of their smallest
// positive singular value, and an empirical check of
//
//   D_f^{x*}(x, x^) <= gamma * ||A x - y^||^2   for x* in df(x) ∩ R(A^T).

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "gerk/convex.hpp"
#include "gerk/errors.hpp"
#include "gerk/numeric.hpp"
#include "gerk/random.hpp"

namespace gerk {

inline constexpr Index kDefaultMaxEnumeratedColumns = 15;
/// Entries of x^ at or below this modulus count as zero in |x^|_min.
inline constexpr double kSupportTol = 1e-12;

struct ErrorBoundCertificate {
  double sigma_tilde_min = 0.0;
  double sigma_min_plus = 0.0;
  /// 0 when x^ = 0.
  double xhat_min_abs = 0.0;
  double lambda = 0.0;
  double gamma = 0.0;
  std::uint64_t n_enumerated_subsets = 0;
};

struct SigmaTildeResult {
  double value = 0.0;
  std::uint64_t n_subsets = 0;
};

/// Exhaustive minimum of sigma+_min(A_J) over all nonempty column subsets J
/// with A_J != 0. Refuses matrices wider than `max_cols`.
template <Field S>
SigmaTildeResult sigma_tilde_min_enumerate(
    const Matrix<S>& A, Index max_cols = kDefaultMaxEnumeratedColumns) {
  const Index n = A.cols();
  if (n > max_cols)
    throw Error(ErrorKind::TooManyColumns,
                "sigma_tilde_min: " + std::to_string(n) +
                    " columns exceed the enumeration cap of " +
                    std::to_string(max_cols));
  if (n == 0 || A.rows() == 0)
    throw Error(ErrorKind::ZeroMatrix, "sigma_tilde_min: empty matrix");
  SigmaTildeResult out;
  out.value = std::numeric_limits<double>::infinity();
  std::vector<Index> cols;
  cols.reserve(static_cast<std::size_t>(n));
  const std::uint64_t n_sets = (std::uint64_t{1} << n) - 1;
  for (std::uint64_t mask = 1; mask <= n_sets; ++mask) {
    cols.clear();
    for (Index j = 0; j < n; ++j)
      if (mask & (std::uint64_t{1} << j)) cols.push_back(j);
    const Matrix<S> sub = A(Eigen::all, cols);
    ++out.n_subsets;
    if (sub.isZero(0.0)) continue;
    try {
      out.value = std::min(out.value, min_positive_singular(sub));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::ZeroMatrix) throw;
    }
  }
  if (!std::isfinite(out.value))
    throw Error(ErrorKind::ZeroMatrix, "sigma_tilde_min: zero matrix");
  return out;
}

template <Field S>
double sigma_tilde_min(const Matrix<S>& A,
                       Index max_cols = kDefaultMaxEnumeratedColumns) {
  return sigma_tilde_min_enumerate<S>(A, max_cols).value;
}

template <Field S>
ErrorBoundCertificate gamma_hat(const Matrix<S>& A, const Vector<S>& xhat,
                                double lambda,
                                Index max_cols = kDefaultMaxEnumeratedColumns) {
  if (xhat.size() != A.cols())
    throw Error(ErrorKind::DimensionMismatch, "gamma_hat: x^ length");
  if (!(lambda >= 0.0))
    throw Error(ErrorKind::InvalidArgument, "gamma_hat: lambda must be >= 0");
  const auto st = sigma_tilde_min_enumerate<S>(A, max_cols);
  ErrorBoundCertificate c;
  c.sigma_tilde_min = st.value;
  c.n_enumerated_subsets = st.n_subsets;
  c.sigma_min_plus = min_positive_singular(A);
  c.lambda = lambda;
  double xmin = std::numeric_limits<double>::infinity();
  for (Index j = 0; j < xhat.size(); ++j) {
    const double a = std::abs(xhat(j));
    if (a > kSupportTol) xmin = std::min(xmin, a);
  }
  if (std::isfinite(xmin)) {
    c.xhat_min_abs = xmin;
    c.gamma = (xmin + 2.0 * lambda) /
              (xmin * c.sigma_tilde_min * c.sigma_tilde_min);
  } else {
    c.xhat_min_abs = 0.0;
    c.gamma = 2.0 * static_cast<double>(A.cols()) /
              (c.sigma_min_plus * c.sigma_min_plus);
  }
  if (!(c.sigma_tilde_min > 0.0) || !(c.gamma > 0.0))
    throw Error(ErrorKind::ZeroMatrix, "gamma_hat: degenerate certificate");
  return c;
}

struct ErrorBoundReport {
  std::size_t samples = 0;
  std::size_t violations = 0;
  /// max D / ||A x - y^||^2 over samples with a nonzero residual.
  double max_ratio = 0.0;
  double gamma = 0.0;
};

/// Scales applied in turn to the Gaussian dual samples u.
inline constexpr std::array<double, 3> kErrorBoundSampleScales{0.1, 1.0, 10.0};
/// Slack in the check D <= gamma r^2 + kErrorBoundSlack * (1 + D).
inline constexpr double kErrorBoundSlack = 1e-10;

/// Samples x* = A^T u, x = grad f*(x*) and checks the error bound against
/// the reference solution x^ of min f s.t. A x = y^. Real field; f must be
/// the quadratic or the elastic net.
inline ErrorBoundReport verify_error_bound(const RealMatrix& A,
                                           const RealVector& yhat,
                                           const RegularizerF& f,
                                           const RealVector& xhat, double gamma,
                                           std::size_t n_samples,
                                           RngStream& rng) {
  if (!std::holds_alternative<QuadraticRegularizer>(f) &&
      !std::holds_alternative<ElasticNet>(f))
    throw Error(ErrorKind::InvalidArgument,
                "verify_error_bound: f must be quadratic or elastic net");
  if (yhat.size() != A.rows() || xhat.size() != A.cols())
    throw Error(ErrorKind::DimensionMismatch, "verify_error_bound: sizes");
  validate<double>(f, A.cols());
  const double fit = (A * xhat - yhat).norm();
  if (fit > 1e-8 * yhat.norm())
    throw Error(ErrorKind::OracleMismatch,
                "verify_error_bound: ||A x^ - y^|| = " + std::to_string(fit) +
                    " exceeds 1e-8 ||y^||");
  ErrorBoundReport rep;
  rep.gamma = gamma;
  for (std::size_t s = 0; s < n_samples; ++s) {
    const double scale = kErrorBoundSampleScales[s % kErrorBoundSampleScales.size()];
    const RealVector u = scale * gaussian_vector<double>(A.rows(), rng);
    const RealVector xstar = A.transpose() * u;
    const RealVector x = f_conjugate_gradient<double>(f, xstar);
    const double D = bregman_distance<double>(f, x, xstar, xhat);
    const double r2 = (A * x - yhat).squaredNorm();
    ++rep.samples;
    if (D > gamma * r2 + kErrorBoundSlack * (1.0 + std::abs(D))) ++rep.violations;
    if (r2 > 0.0) {
      rep.max_ratio = std::max(rep.max_ratio, D / r2);
    } else if (D > kErrorBoundSlack) {
      rep.max_ratio = std::numeric_limits<double>::infinity();
    }
  }
  return rep;
}

}  // namespace gerk
