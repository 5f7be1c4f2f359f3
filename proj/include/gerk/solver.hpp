#pragma once

// Generalized extended randomized block Kaczmarz (GERK) iteration.
//
// State: x* (dual iterate), x = grad f*(x*), z*, z = grad g*(z*).
// One step:
//   column block j ~ p~     z* <- z* - t~ A_j A_j^H z,   z = grad g*(z*)
//   row block i ~ p         x* <- x* - t A_i^H (A_i x - b_i + z*_i),
//                           x = grad f*(x*)
// with t~ = 1 / (L_g* ||A_j||^2) and t = 1 / (L_f* ||A_i||^2). Starting
// point x = x* = 0, z* = b. Disabling the z-recursion drops the z*_i term
// (sparse Kaczmarz); quadratic f and g give the extended Kaczmarz method.

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gerk/convex.hpp"
#include "gerk/errors.hpp"
#include "gerk/numeric.hpp"
#include "gerk/partition.hpp"
#include "gerk/random.hpp"

namespace gerk {

enum class ZStepsize { Constant, ResidualAdaptive };

/// Denominator floor of the residual-adaptive z-stepsize.
inline constexpr double kAdaptiveStepFloor = 1e-300;

struct SolverConfig {
  RegularizerF f = QuadraticRegularizer{};
  MisfitGStar g = QuadraticMisfit{};
  /// Empty means single rows / columns with uniform probabilities.
  std::optional<BlockPartition> row_partition;
  std::optional<BlockPartition> col_partition;
  ZStepsize z_stepsize = ZStepsize::Constant;
  bool z_update_enabled = true;
  std::size_t max_iterations = 0;
  /// Zero means "one epoch", i.e. the number of rows of A.
  std::size_t checkpoint_interval = 0;
  std::uint64_t seed = 0;
  /// Stream id for the solver's RngStream.
  std::uint64_t stream = 1;
};

template <Field S>
struct SolverState {
  Vector<S> xstar;
  Vector<S> x;
  Vector<S> zstar;
  Vector<S> z;
  std::size_t k = 0;
  RngStream rng;
};

enum class StopReason { MaxIterations, ToleranceMet };

inline std::string_view to_string(StopReason r) {
  return r == StopReason::MaxIterations ? "max_iterations" : "tolerance_met";
}

template <Field S>
struct SolverReport {
  SolverState<S> state;
  std::size_t iterations = 0;
  double wall_seconds = 0.0;
  StopReason stop_reason = StopReason::MaxIterations;
};

/// Called with a read-only state at k = 0, every checkpoint interval and
/// after the last step. Returning true stops the run (ToleranceMet).
template <Field S>
using CheckpointHook = std::function<bool(const SolverState<S>&)>;

/// Residual-adaptive z-stepsize
///   (1 / L_g*) ||A_j^H z||^2 / ||A_j A_j^H z||^2,
/// falling back to the constant 1 / (L_g* ||A_j||^2) when the denominator is
/// below kAdaptiveStepFloor.
template <Field S>
double residual_adaptive_z_stepsize(const Vector<S>& z, const Matrix<S>& Aj,
                                    double L_g, double block_sq_norm) {
  const Vector<S> v = Aj.adjoint() * z;
  const Vector<S> u = Aj * v;
  const double den = u.squaredNorm();
  if (den <= kAdaptiveStepFloor) return 1.0 / (L_g * block_sq_norm);
  return v.squaredNorm() / (L_g * den);
}

template <Field S>
class GerkSolver {
 public:
  GerkSolver(Matrix<S> A, Vector<S> b, SolverConfig cfg)
      : A_(std::move(A)), b_(std::move(b)), cfg_(std::move(cfg)) {
    if (b_.size() != A_.rows())
      throw Error(ErrorKind::DimensionMismatch,
                  "rhs length " + std::to_string(b_.size()) + " != rows " +
                      std::to_string(A_.rows()));
    if (A_.size() == 0)
      throw Error(ErrorKind::InvalidArgument, "empty system matrix");
    validate<S>(cfg_.f, A_.cols());
    validate(cfg_.g);
    if (!cfg_.row_partition)
      cfg_.row_partition = BlockPartition::singletons(A_, BlockKind::Row);
    if (!cfg_.col_partition)
      cfg_.col_partition = BlockPartition::singletons(A_, BlockKind::Column);
    if (cfg_.row_partition->kind() != BlockKind::Row ||
        cfg_.row_partition->extent() != A_.rows())
      throw Error(ErrorKind::DimensionMismatch,
                  "row partition does not match the rows of A");
    if (cfg_.col_partition->kind() != BlockKind::Column ||
        cfg_.col_partition->extent() != A_.cols())
      throw Error(ErrorKind::DimensionMismatch,
                  "column partition does not match the columns of A");
    if (cfg_.checkpoint_interval == 0)
      cfg_.checkpoint_interval = static_cast<std::size_t>(A_.rows());
    A_rows_ = A_;
    L_f_ = conjugate_lipschitz(cfg_.f);
    L_g_ = gradient_lipschitz(cfg_.g);
  }

  const Matrix<S>& matrix() const noexcept { return A_; }
  const Vector<S>& rhs() const noexcept { return b_; }
  const SolverConfig& config() const noexcept { return cfg_; }
  const BlockPartition& row_blocks() const { return *cfg_.row_partition; }
  const BlockPartition& col_blocks() const { return *cfg_.col_partition; }

  /// x = x* = 0, z* = b, z = grad g*(b), k = 0.
  SolverState<S> initial_state() const {
    SolverState<S> s{Vector<S>::Zero(A_.cols()),
                     Vector<S>::Zero(A_.cols()),
                     b_,
                     Vector<S>(),
                     0,
                     RngStream(cfg_.seed, cfg_.stream)};
    gstar_gradient_into<S>(cfg_.g, s.zstar, s.z);
    return s;
  }

  /// One GERK iteration, in place.
  void step(SolverState<S>& s) const {
    if (cfg_.z_update_enabled) z_step(s);
    x_step(s);
    ++s.k;
  }

  SolverReport<S> run(const CheckpointHook<S>& hook = {}) const {
    return run_from(initial_state(), hook);
  }

  SolverReport<S> run_from(SolverState<S> s,
                           const CheckpointHook<S>& hook = {}) const {
    const auto t0 = std::chrono::steady_clock::now();
    SolverReport<S> rep{};
    rep.stop_reason = StopReason::MaxIterations;
    const std::size_t start = s.k;
    bool stop = hook && hook(s);
    std::size_t since = 0;
    while (!stop && s.k - start < cfg_.max_iterations) {
      step(s);
      if (++since == cfg_.checkpoint_interval) {
        since = 0;
        if (hook) stop = hook(s);
      }
    }
    if (stop) {
      rep.stop_reason = StopReason::ToleranceMet;
    } else if (hook && since != 0) {
      if (hook(s)) rep.stop_reason = StopReason::ToleranceMet;
    }
    rep.iterations = s.k - start;
    rep.wall_seconds = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - t0)
                           .count();
    rep.state = std::move(s);
    return rep;
  }

 private:
  void z_step(SolverState<S>& s) const {
    const auto& cols = *cfg_.col_partition;
    const std::size_t j = cols.sample(s.rng);
    const auto block = cols.block(j);
    if (block.size() == 1) {
      const auto a = A_.col(block[0]);
      const S v = a.dot(s.z);  // a^H z
      const double t = 1.0 / (L_g_ * cols.sq_norm(j));
      // For a single column the adaptive rule reduces to the constant one.
      s.zstar.noalias() -= (t * v) * a;
    } else {
      const Matrix<S> Aj = A_(Eigen::all, std::vector<Index>(block.begin(),
                                                             block.end()));
      const Vector<S> v = Aj.adjoint() * s.z;
      const Vector<S> u = Aj * v;
      double t = 1.0 / (L_g_ * cols.sq_norm(j));
      if (cfg_.z_stepsize == ZStepsize::ResidualAdaptive) {
        const double den = u.squaredNorm();
        if (den > kAdaptiveStepFloor) t = v.squaredNorm() / (L_g_ * den);
      }
      s.zstar.noalias() -= t * u;
    }
    gstar_gradient_into<S>(cfg_.g, s.zstar, s.z);
  }

  void x_step(SolverState<S>& s) const {
    const auto& rows = *cfg_.row_partition;
    const std::size_t i = rows.sample(s.rng);
    const auto block = rows.block(i);
    const double t = 1.0 / (L_f_ * rows.sq_norm(i));
    if (block.size() == 1) {
      const Index r = block[0];
      const auto a = A_rows_.row(r);
      S w = (a * s.x).value() - b_(r);
      if (cfg_.z_update_enabled) w += s.zstar(r);
      s.xstar.noalias() -= (t * w) * a.adjoint();
    } else {
      Vector<S> w(static_cast<Index>(block.size()));
      for (std::size_t q = 0; q < block.size(); ++q) {
        const Index r = block[q];
        w(static_cast<Index>(q)) = (A_rows_.row(r) * s.x).value() - b_(r);
        if (cfg_.z_update_enabled) w(static_cast<Index>(q)) += s.zstar(r);
      }
      for (std::size_t q = 0; q < block.size(); ++q)
        s.xstar.noalias() -=
            (t * w(static_cast<Index>(q))) * A_rows_.row(block[q]).adjoint();
    }
    f_conjugate_gradient_into<S>(cfg_.f, s.xstar, s.x);
  }

  Matrix<S> A_;
  RowMatrix<S> A_rows_;
  Vector<S> b_;
  SolverConfig cfg_;
  double L_f_ = 1.0;
  double L_g_ = 1.0;
};

/// Builds a solver and runs it from the standard starting point.
template <Field S>
SolverReport<S> run(const Matrix<S>& A, const Vector<S>& b,
                    const SolverConfig& cfg,
                    const CheckpointHook<S>& hook = {}) {
  return GerkSolver<S>(A, b, cfg).run(hook);
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

enum class Preset { RK, SRK, REK, GerkAD, GerkBD };

inline std::string_view to_string(Preset p) {
  switch (p) {
    case Preset::RK: return "rk";
    case Preset::SRK: return "srk";
    case Preset::REK: return "rek";
    case Preset::GerkAD: return "gerk_ad";
    case Preset::GerkBD: return "gerk_bd";
  }
  return "?";
}

inline Preset parse_preset(std::string_view name) {
  for (Preset p : {Preset::RK, Preset::SRK, Preset::REK, Preset::GerkAD,
                   Preset::GerkBD})
    if (to_string(p) == name) return p;
  throw Error(ErrorKind::InvalidArgument,
              "unknown preset '" + std::string(name) +
                  "' (expected rk, srk, rek, gerk_ad or gerk_bd)");
}

struct PresetParams {
  std::optional<double> lambda;
  std::optional<double> eps;
  std::optional<double> tau;
};

/// Maps a preset name to (f, g, z on/off).
///   rk      f quadratic,                z off
///   srk     f elastic net(lambda),      z off
///   rek     f quadratic, g quadratic,   z on
///   gerk_ad f elastic net(lambda), g quadratic
///   gerk_bd f elastic net(lambda), g HuberQuad(eps, tau)
/// On the complex field the elastic net is the complex-modulus variant.
inline SolverConfig preset(Preset name, const PresetParams& params,
                           FieldKind field = FieldKind::Real) {
  auto need = [&](const std::optional<double>& v, const char* what) {
    if (!v)
      throw Error(ErrorKind::MissingParameter,
                  std::string("preset ") + std::string(to_string(name)) +
                      " needs " + what);
    return *v;
  };
  auto sparse_f = [&]() -> RegularizerF {
    const double lambda = need(params.lambda, "lambda");
    if (field == FieldKind::Complex) return ComplexElasticNet{lambda};
    return ElasticNet{lambda};
  };
  SolverConfig cfg;
  switch (name) {
    case Preset::RK:
      cfg.f = QuadraticRegularizer{};
      cfg.z_update_enabled = false;
      break;
    case Preset::SRK:
      cfg.f = sparse_f();
      cfg.z_update_enabled = false;
      break;
    case Preset::REK:
      cfg.f = QuadraticRegularizer{};
      cfg.g = QuadraticMisfit{};
      break;
    case Preset::GerkAD:
      cfg.f = sparse_f();
      cfg.g = QuadraticMisfit{};
      break;
    case Preset::GerkBD: {
      cfg.f = sparse_f();
      cfg.g = HuberQuadMisfit{need(params.eps, "eps"), need(params.tau, "tau")};
      break;
    }
  }
  return cfg;
}

inline SolverConfig preset(std::string_view name, const PresetParams& params,
                           FieldKind field = FieldKind::Real) {
  return preset(parse_preset(name), params, field);
}

}  // namespace gerk
