#pragma once

// Slow deterministic full-matrix solvers producing ground truth for tests
// and acceptance checks:
//   y^ = argmin g*(b - y) s.t. y in R(A)
//   x^ = argmin f(x)      s.t. A x = y^
//
// Both iterative oracles run full-gradient steps with constant stepsize
// 1 / (L ||A||^2). By default the steps are accelerated (Nesterov momentum
// with gradient-based restart); `accelerated = false` gives the plain
// iteration.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

#include "gerk/convex.hpp"
#include "gerk/errors.hpp"
#include "gerk/numeric.hpp"

namespace gerk {

template <Field S>
struct OracleSolution {
  Vector<S> value;
  double residual_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  /// For constrained_regularizer_min: the x* = A^H u with
  /// value = grad f*(x*). Empty otherwise.
  Vector<S> subgradient;
};

template <Field S>
class NotConvergedError : public Error {
 public:
  NotConvergedError(const std::string& what, OracleSolution<S> best)
      : Error(ErrorKind::NotConverged, what), best_(std::move(best)) {}
  const OracleSolution<S>& best() const noexcept { return best_; }

 private:
  OracleSolution<S> best_;
};

struct OracleOptions {
  double tol = 1e-10;
  std::size_t max_iter = 1'000'000;
  bool accelerated = true;
};

/// Euclidean projection of b onto R(A): A (A^+ b).
template <Field S>
Vector<S> range_projection_quadratic(const Matrix<S>& A, const Vector<S>& b) {
  return A * svd_pseudoinverse_apply<S>(A, b);
}

/// Minimizes u -> g*(b - A u) and returns y^ = A u^. Converged when
/// ||A^H grad g*(b - A u)|| <= tol * ||b||. residual_norm reports that
/// gradient norm.
template <Field S>
OracleSolution<S> misfit_projection(const Matrix<S>& A, const Vector<S>& b,
                                    const MisfitGStar& g,
                                    const OracleOptions& opt = {}) {
  if (b.size() != A.rows())
    throw Error(ErrorKind::DimensionMismatch, "misfit_projection: rhs length");
  validate(g);
  const double nb = b.norm();
  const double normA = spectral_norm(A);
  OracleSolution<S> sol;
  sol.value = Vector<S>::Zero(A.rows());
  if (nb == 0.0 || normA == 0.0) {
    sol.converged = true;
    return sol;
  }
  const double step = 1.0 / (gradient_lipschitz(g) * normA * normA);

  Vector<S> u = Vector<S>::Zero(A.cols());
  Vector<S> v = u;
  Vector<S> grad_g;
  double theta = 1.0;
  OracleSolution<S> best;
  best.residual_norm = std::numeric_limits<double>::infinity();

  for (std::size_t it = 0;; ++it) {
    // Stationarity measure at the main iterate.
    const Vector<S> Au = A * u;
    gstar_gradient_into<S>(g, Vector<S>(b - Au), grad_g);
    const Vector<S> grad_u = -(A.adjoint() * grad_g);
    const double gnorm = grad_u.norm();
    if (gnorm < best.residual_norm) {
      best.value = Au;
      best.residual_norm = gnorm;
      best.iterations = it;
    }
    if (gnorm <= opt.tol * nb) {
      best.converged = true;
      best.value = Au;
      best.residual_norm = gnorm;
      best.iterations = it;
      return best;
    }
    if (it >= opt.max_iter) break;

    // Gradient of u -> g*(b - A u) at the extrapolated point.
    gstar_gradient_into<S>(g, Vector<S>(b - A * v), grad_g);
    const Vector<S> grad_v = -(A.adjoint() * grad_g);
    Vector<S> u_next = v - step * grad_v;
    if (opt.accelerated) {
      if (std::real(grad_v.dot(Vector<S>(u_next - u))) > 0.0) {
        theta = 1.0;  // restart
        u_next = u - step * grad_u;
        v = u_next;
      } else {
        const double theta_next =
            0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
        v = u_next + ((theta - 1.0) / theta_next) * (u_next - u);
        theta = theta_next;
      }
    } else {
      v = u_next;
    }
    u = std::move(u_next);
  }
  throw NotConvergedError<S>(
      "misfit_projection: no convergence after " +
          std::to_string(opt.max_iter) + " iterations (gradient norm " +
          std::to_string(best.residual_norm) + ")",
      best);
}

/// min f(x) s.t. A x = y^, via x* <- x* - t A^H (A x - y^), x = grad f*(x*),
/// t = 1 / (L_f* ||A||^2), from x* = 0. Converged when
/// ||A x - y^|| <= tol ||y^|| and the last change in x is <= tol * max(1, ||x||).
template <Field S>
OracleSolution<S> constrained_regularizer_min(const Matrix<S>& A,
                                              const Vector<S>& yhat,
                                              const RegularizerF& f,
                                              const OracleOptions& opt = {}) {
  if (yhat.size() != A.rows())
    throw Error(ErrorKind::DimensionMismatch,
                "constrained_regularizer_min: rhs length");
  validate<S>(f, A.cols());
  const double ny = yhat.norm();
  {
    const Vector<S> proj = range_projection_quadratic<S>(A, yhat);
    if ((proj - yhat).norm() > 1e-8 * std::max(ny, 1e-300) && ny > 0.0)
      throw Error(ErrorKind::InvalidArgument,
                  "constrained_regularizer_min: rhs is not in the range of A");
  }
  OracleSolution<S> sol;
  sol.value = Vector<S>::Zero(A.cols());
  sol.subgradient = Vector<S>::Zero(A.cols());
  const double normA = spectral_norm(A);
  if (ny == 0.0 || normA == 0.0) {
    sol.converged = true;
    return sol;
  }
  const double step = 1.0 / (conjugate_lipschitz(f) * normA * normA);

  // Dual variable u in K^m with x* = A^H u.
  Vector<S> u = Vector<S>::Zero(A.rows());
  Vector<S> v = u;
  Vector<S> x = Vector<S>::Zero(A.cols());
  Vector<S> x_prev = x;
  Vector<S> xv;
  double theta = 1.0;
  OracleSolution<S> best;
  best.residual_norm = std::numeric_limits<double>::infinity();

  for (std::size_t it = 0;; ++it) {
    const Vector<S> xstar = A.adjoint() * u;
    f_conjugate_gradient_into<S>(f, xstar, x);
    const double res = (A * x - yhat).norm();
    const double dx = (x - x_prev).norm();
    if (res < best.residual_norm) {
      best.value = x;
      best.subgradient = xstar;
      best.residual_norm = res;
      best.iterations = it;
    }
    if (it > 0 && res <= opt.tol * ny && dx <= opt.tol * std::max(1.0, x.norm())) {
      best.value = x;
      best.subgradient = xstar;
      best.residual_norm = res;
      best.iterations = it;
      best.converged = true;
      return best;
    }
    if (it >= opt.max_iter) break;
    x_prev = x;

    // Dual gradient A grad f*(A^H v) - y^ at the extrapolated point.
    f_conjugate_gradient_into<S>(f, Vector<S>(A.adjoint() * v), xv);
    const Vector<S> grad_v = A * xv - yhat;
    Vector<S> u_next = v - step * grad_v;
    if (opt.accelerated) {
      if (std::real(grad_v.dot(Vector<S>(u_next - u))) > 0.0) {
        theta = 1.0;
        u_next = u - step * Vector<S>(A * x - yhat);
        v = u_next;
      } else {
        const double theta_next =
            0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
        v = u_next + ((theta - 1.0) / theta_next) * (u_next - u);
        theta = theta_next;
      }
    } else {
      v = u_next;
    }
    u = std::move(u_next);
  }
  throw NotConvergedError<S>(
      "constrained_regularizer_min: no convergence after " +
          std::to_string(opt.max_iter) + " iterations (residual " +
          std::to_string(best.residual_norm) + ")",
      best);
}

}  // namespace gerk
