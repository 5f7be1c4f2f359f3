#pragma once

// Strongly convex regularizers f (used through the gradient of their
// conjugate) and smooth strongly convex misfits g* (used through their own
// gradient), plus Bregman distances.
//
// Every regularizer here has the form f = lambda * h + 1/2 ||.||^2 with h a
// norm (or h = 0), so alpha = 1, grad f* is a shrinkage and
// f*(x*) = 1/2 ||grad f*(x*)||^2.
//
// Complex vectors are treated as real vectors of twice the length: inner
// products are Re <x, y>.

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "gerk/errors.hpp"
#include "gerk/numeric.hpp"

namespace gerk {

// ---------------------------------------------------------------------------
// Shrinkage operators
// ---------------------------------------------------------------------------

/// (S_lambda(x))_j = max(|x_j| - lambda, 0) * sign(x_j), sign(0) = 0.
inline RealVector soft_shrinkage(const RealVector& x, double lambda) {
  RealVector out(x.size());
  for (Index j = 0; j < x.size(); ++j) {
    const double a = std::abs(x(j)) - lambda;
    out(j) = a > 0.0 ? std::copysign(a, x(j)) : 0.0;
  }
  return out;
}

/// (S_lambda(x))_j = max(|x_j| - lambda, 0) * x_j / |x_j|, 0 where x_j = 0.
inline ComplexVector complex_shrinkage(const ComplexVector& x, double lambda) {
  ComplexVector out(x.size());
  for (Index j = 0; j < x.size(); ++j) {
    const double mag = std::abs(x(j));
    out(j) = mag > lambda ? x(j) * ((mag - lambda) / mag) : Complex(0.0);
  }
  return out;
}

using Groups = std::vector<std::vector<Index>>;

/// Scales each group x_g by max(0, 1 - lambda / ||x_g||); zero groups stay 0.
template <Field S>
Vector<S> group_shrinkage(const Vector<S>& x, double lambda,
                          const Groups& groups) {
  Vector<S> out = Vector<S>::Zero(x.size());
  for (const auto& g : groups) {
    double sq = 0.0;
    for (Index j : g) sq += std::norm(x(j));
    const double nrm = std::sqrt(sq);
    if (nrm <= lambda) continue;
    const double scale = 1.0 - lambda / nrm;
    for (Index j : g) out(j) = x(j) * scale;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Regularizers f
// ---------------------------------------------------------------------------

/// f = 1/2 ||x||^2.
struct QuadraticRegularizer {};
/// f = lambda ||x||_1 + 1/2 ||x||^2 (real field).
struct ElasticNet {
  double lambda = 0.0;
};
/// f = lambda sum_g ||x_g||_2 + 1/2 ||x||^2; groups partition the coordinates.
struct GroupElasticNet {
  double lambda = 0.0;
  Groups groups;
};
/// f = lambda sum_j |x_j| + 1/2 ||x||^2 with complex moduli (complex field).
struct ComplexElasticNet {
  double lambda = 0.0;
};

using RegularizerF = std::variant<QuadraticRegularizer, ElasticNet,
                                  GroupElasticNet, ComplexElasticNet>;

/// Strong convexity modulus.
inline double alpha(const RegularizerF&) noexcept { return 1.0; }
/// Lipschitz constant of grad f*, 1 / alpha.
inline double conjugate_lipschitz(const RegularizerF& f) noexcept {
  return 1.0 / alpha(f);
}

inline std::string describe(const RegularizerF& f) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, QuadraticRegularizer>)
          return "quadratic";
        else if constexpr (std::is_same_v<T, ElasticNet>)
          return "elastic_net(lambda=" + std::to_string(v.lambda) + ")";
        else if constexpr (std::is_same_v<T, GroupElasticNet>)
          return "group_elastic_net(lambda=" + std::to_string(v.lambda) +
                 ", groups=" + std::to_string(v.groups.size()) + ")";
        else
          return "complex_elastic_net(lambda=" + std::to_string(v.lambda) +
                 ")";
      },
      f);
}

namespace detail {

inline void check_lambda(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw Error(ErrorKind::InvalidArgument, "lambda must be finite and >= 0");
}

inline void check_groups(const Groups& groups, Index n) {
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (const auto& g : groups) {
    if (g.empty()) throw Error(ErrorKind::InvalidArgument, "empty group");
    for (Index j : g) {
      if (j < 0 || j >= n || seen[static_cast<std::size_t>(j)]++)
        throw Error(ErrorKind::InvalidArgument,
                    "groups must partition the coordinates");
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end())
    throw Error(ErrorKind::InvalidArgument,
                "groups must partition the coordinates");
}

template <Field S>
[[noreturn]] void field_mismatch(const char* what) {
  throw Error(ErrorKind::FieldMismatch,
              std::string(what) + " is not defined on the " +
                  to_string(field_of<S>()) + " field");
}

}  // namespace detail

/// Checks parameters of f against a coordinate count n and field S.
template <Field S>
void validate(const RegularizerF& f, Index n) {
  std::visit(
      [n](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ElasticNet>) {
          detail::check_lambda(v.lambda);
          if constexpr (is_complex_v<S>) detail::field_mismatch<S>("ElasticNet");
        } else if constexpr (std::is_same_v<T, GroupElasticNet>) {
          detail::check_lambda(v.lambda);
          detail::check_groups(v.groups, n);
        } else if constexpr (std::is_same_v<T, ComplexElasticNet>) {
          detail::check_lambda(v.lambda);
          if constexpr (!is_complex_v<S>)
            detail::field_mismatch<S>("ComplexElasticNet");
        }
      },
      f);
}

/// out = grad f*(xstar). `out` may not alias `xstar` for group variants.
template <Field S>
void f_conjugate_gradient_into(const RegularizerF& f, const Vector<S>& xstar,
                               Vector<S>& out) {
  out.resize(xstar.size());
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, QuadraticRegularizer>) {
          out = xstar;
        } else if constexpr (std::is_same_v<T, ElasticNet>) {
          if constexpr (is_complex_v<S>) {
            detail::field_mismatch<S>("ElasticNet");
          } else {
            const double lambda = v.lambda;
            for (Index j = 0; j < xstar.size(); ++j) {
              const double a = std::abs(xstar(j)) - lambda;
              out(j) = a > 0.0 ? std::copysign(a, xstar(j)) : 0.0;
            }
          }
        } else if constexpr (std::is_same_v<T, GroupElasticNet>) {
          out = group_shrinkage<S>(xstar, v.lambda, v.groups);
        } else {
          if constexpr (!is_complex_v<S>) {
            detail::field_mismatch<S>("ComplexElasticNet");
          } else {
            const double lambda = v.lambda;
            for (Index j = 0; j < xstar.size(); ++j) {
              const double mag = std::abs(xstar(j));
              out(j) = mag > lambda ? xstar(j) * ((mag - lambda) / mag)
                                    : Complex(0.0);
            }
          }
        }
      },
      f);
}

template <Field S>
Vector<S> f_conjugate_gradient(const RegularizerF& f, const Vector<S>& xstar) {
  Vector<S> out;
  f_conjugate_gradient_into<S>(f, xstar, out);
  return out;
}

template <Field S>
double f_value(const RegularizerF& f, const Vector<S>& x) {
  const double quad = 0.5 * x.squaredNorm();
  return std::visit(
      [&](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, QuadraticRegularizer>) {
          return quad;
        } else if constexpr (std::is_same_v<T, ElasticNet>) {
          if constexpr (is_complex_v<S>) detail::field_mismatch<S>("ElasticNet");
          return v.lambda * x.template lpNorm<1>() + quad;
        } else if constexpr (std::is_same_v<T, GroupElasticNet>) {
          double h = 0.0;
          for (const auto& g : v.groups) {
            double sq = 0.0;
            for (Index j : g) sq += std::norm(x(j));
            h += std::sqrt(sq);
          }
          return v.lambda * h + quad;
        } else {
          if constexpr (!is_complex_v<S>)
            detail::field_mismatch<S>("ComplexElasticNet");
          return v.lambda * x.cwiseAbs().sum() + quad;
        }
      },
      f);
}

/// f*(xstar) = 1/2 ||grad f*(xstar)||^2 for every variant here.
template <Field S>
double f_conjugate_value(const RegularizerF& f, const Vector<S>& xstar) {
  return 0.5 * f_conjugate_gradient<S>(f, xstar).squaredNorm();
}

// ---------------------------------------------------------------------------
// Misfits g*
// ---------------------------------------------------------------------------

/// g*(y) = 1/2 ||y||^2.
struct QuadraticMisfit {};
/// g*(y) = r_eps(y) + tau/2 ||y||^2 with the Huber function r_eps.
struct HuberQuadMisfit {
  double eps = 1.0;
  double tau = 1.0;
};

using MisfitGStar = std::variant<QuadraticMisfit, HuberQuadMisfit>;

inline void validate(const MisfitGStar& g) {
  if (const auto* h = std::get_if<HuberQuadMisfit>(&g)) {
    if (!(h->eps > 0.0) || !(h->tau > 0.0) || !std::isfinite(h->eps) ||
        !std::isfinite(h->tau))
      throw Error(ErrorKind::InvalidArgument,
                  "HuberQuad misfit needs eps > 0 and tau > 0");
  }
}

/// Lipschitz constant of grad g*: 1 for the quadratic, 1/eps + tau for Huber.
inline double gradient_lipschitz(const MisfitGStar& g) {
  if (const auto* h = std::get_if<HuberQuadMisfit>(&g))
    return 1.0 / h->eps + h->tau;
  return 1.0;
}

inline std::string describe(const MisfitGStar& g) {
  if (const auto* h = std::get_if<HuberQuadMisfit>(&g))
    return "huber_quad(eps=" + std::to_string(h->eps) +
           ", tau=" + std::to_string(h->tau) + ")";
  return "quadratic";
}

template <Field S>
void gstar_gradient_into(const MisfitGStar& g, const Vector<S>& y,
                         Vector<S>& out) {
  if (const auto* h = std::get_if<HuberQuadMisfit>(&g)) {
    out.resize(y.size());
    for (Index j = 0; j < y.size(); ++j) {
      const double mag = std::abs(y(j));
      out(j) = y(j) * (1.0 / std::max(h->eps, mag) + h->tau);
    }
  } else {
    out = y;
  }
}

template <Field S>
Vector<S> gstar_gradient(const MisfitGStar& g, const Vector<S>& y) {
  Vector<S> out;
  gstar_gradient_into<S>(g, y, out);
  return out;
}

template <Field S>
double gstar_value(const MisfitGStar& g, const Vector<S>& y) {
  if (const auto* h = std::get_if<HuberQuadMisfit>(&g)) {
    double r = 0.0;
    for (Index j = 0; j < y.size(); ++j) {
      const double mag = std::abs(y(j));
      r += mag > h->eps ? mag - 0.5 * h->eps : mag * mag / (2.0 * h->eps);
    }
    return r + 0.5 * h->tau * y.squaredNorm();
  }
  return 0.5 * y.squaredNorm();
}

// ---------------------------------------------------------------------------
// Bregman distance
// ---------------------------------------------------------------------------

/// Tolerance on ||x - grad f*(xstar)|| for accepting xstar as a subgradient.
inline constexpr double kSubgradientTol = 1e-8;

/// Re <a, b>.
template <Field S>
double real_inner(const Vector<S>& a, const Vector<S>& b) {
  return std::real(a.dot(b));
}

/// D_f^{xstar}(x, y) = f*(xstar) - Re<xstar, y> + f(y), with xstar required
/// to be a subgradient of f at x (checked as x == grad f*(xstar)).
template <Field S>
double bregman_distance(const RegularizerF& f, const Vector<S>& x,
                        const Vector<S>& xstar, const Vector<S>& y) {
  if (x.size() != xstar.size() || x.size() != y.size())
    throw Error(ErrorKind::DimensionMismatch, "bregman_distance: sizes differ");
  const Vector<S> grad = f_conjugate_gradient<S>(f, xstar);
  const double gap = (x - grad).norm();
  if (gap > kSubgradientTol)
    throw Error(ErrorKind::NotASubgradient,
                "bregman_distance: xstar is not a subgradient at x (gap " +
                    std::to_string(gap) + ")");
  return 0.5 * grad.squaredNorm() - real_inner<S>(xstar, y) + f_value<S>(f, y);
}

}  // namespace gerk
