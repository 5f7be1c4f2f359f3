#pragma once

// Experiment harness: random problem families, multi-trial solver runs,
// per-checkpoint metrics, quantile bands and last-iterate sparsity tables.
//
// Experiment (i): A = U S V^H of rank r, planted s-sparse x^, noise drawn
// uniformly on a sphere inside N(A^H) with radius noise_level * ||A x^||.
// Experiment (ii): same A and x^, ceil(n/20) entries of b hit by impulses of
// modulus noise_level * ||A x^||_inf.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "gerk/convex.hpp"
#include "gerk/errors.hpp"
#include "gerk/io.hpp"
#include "gerk/numeric.hpp"
#include "gerk/oracles.hpp"
#include "gerk/random.hpp"
#include "gerk/solver.hpp"

namespace gerk {

enum class NoiseKind { RangeComplement, Impulsive };

inline std::string to_string(NoiseKind k) {
  return k == NoiseKind::RangeComplement ? "range_complement" : "impulsive";
}

struct GeneratorParams {
  Index m = 200;
  Index n = 100;
  Index r = 50;
  Index s = 5;
  double noise_level = 5.0;
  double sv_lo = 0.1;
  double sv_hi = 10.0;
};

template <Field S>
struct ProblemInstance {
  Matrix<S> A;
  Vector<S> b;
  Vector<S> b_hat;
  Vector<S> x_hat;
  NoiseKind noise_kind = NoiseKind::RangeComplement;
  double noise_level = 0.0;

  static constexpr FieldKind field() { return field_of<S>(); }
};

namespace detail {

inline void check_generator(const GeneratorParams& p) {
  if (p.m < 1 || p.n < 1)
    throw Error(ErrorKind::InvalidArgument, "generator: m and n must be >= 1");
  if (p.s < 0 || p.s > p.n)
    throw Error(ErrorKind::InvalidArgument, "generator: need 0 <= s <= n");
  if (!(p.noise_level >= 0.0))
    throw Error(ErrorKind::InvalidArgument, "generator: noise_level >= 0");
}

/// Matrix, then support (without replacement), then Gaussian support values.
template <Field S>
ProblemInstance<S> planted_system(const GeneratorParams& p, RngStream& rng) {
  check_generator(p);
  ProblemInstance<S> inst;
  inst.A = make_rank_deficient<S>(p.m, p.n, p.r, p.sv_lo, p.sv_hi, rng);
  inst.x_hat = Vector<S>::Zero(p.n);
  const auto support = rng.sample_without_replacement(
      static_cast<std::size_t>(p.n), static_cast<std::size_t>(p.s));
  for (std::size_t idx : support)
    inst.x_hat(static_cast<Index>(idx)) = rng.gaussian<S>();
  inst.b_hat = inst.A * inst.x_hat;
  inst.noise_level = p.noise_level;
  return inst;
}

}  // namespace detail

/// Least-squares family: noise N v with N an orthonormal basis of N(A^H)
/// and v uniform on the sphere of radius noise_level * ||b^||.
template <Field S>
ProblemInstance<S> gen_experiment_i(const GeneratorParams& p, RngStream& rng) {
  auto inst = detail::planted_system<S>(p, rng);
  inst.noise_kind = NoiseKind::RangeComplement;
  const Matrix<S> N = nullspace_basis_adjoint<S>(inst.A);
  if (N.cols() == 0)
    throw Error(ErrorKind::DegenerateNullspace,
                "experiment (i): A has full row rank, N(A^H) is trivial");
  Vector<S> v = gaussian_vector<S>(N.cols(), rng);
  const double rho = p.noise_level * inst.b_hat.norm();
  const double nv = v.norm();
  v *= nv > 0.0 ? rho / nv : 0.0;
  inst.b = inst.b_hat + N * v;
  return inst;
}

/// Impulsive family: ceil(n/20) distinct rows of b (drawn from the m rows)
/// receive +-noise_level*||b^||_inf, or (s + i t)/sqrt(2) times that on the
/// complex field.
template <Field S>
ProblemInstance<S> gen_experiment_ii(const GeneratorParams& p, RngStream& rng) {
  auto inst = detail::planted_system<S>(p, rng);
  inst.noise_kind = NoiseKind::Impulsive;
  const Index count = (p.n + 19) / 20;
  if (count > p.m)
    throw Error(ErrorKind::InvalidArgument,
                "experiment (ii): ceil(n/20) corrupted entries exceed m");
  const double amp = p.noise_level * inst.b_hat.cwiseAbs().maxCoeff();
  inst.b = inst.b_hat;
  const auto rows = rng.sample_without_replacement(
      static_cast<std::size_t>(p.m), static_cast<std::size_t>(count));
  for (std::size_t r : rows) {
    if constexpr (is_complex_v<S>) {
      const double s = rng.sign();
      const double t = rng.sign();
      inst.b(static_cast<Index>(r)) += Complex(s, t) * (amp / std::sqrt(2.0));
    } else {
      inst.b(static_cast<Index>(r)) += rng.sign() * amp;
    }
  }
  return inst;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

enum class Metric {
  RelResidual,       // ||A x - b^|| / ||b^||
  RelGradQuadratic,  // ||A^H (b - A x)|| / ||b||
  RelGradMisfit,     // ||A^H grad g*(b - A x)|| / ||b||
  RelError,          // ||x - x^|| / ||x^||
  ZError,            // ||z* - (b - y^)||
  Sparsity,          // #{j : |x_j| > threshold}
};

inline constexpr Metric kAllMetrics[] = {
    Metric::RelResidual, Metric::RelGradQuadratic, Metric::RelGradMisfit,
    Metric::RelError,    Metric::ZError,           Metric::Sparsity};

inline std::string metric_name(Metric m) {
  switch (m) {
    case Metric::RelResidual: return "rel_residual";
    case Metric::RelGradQuadratic: return "rel_grad_quadratic";
    case Metric::RelGradMisfit: return "rel_grad_misfit";
    case Metric::RelError: return "rel_error";
    case Metric::ZError: return "z_error";
    case Metric::Sparsity: return "sparsity";
  }
  return "?";
}

inline constexpr double kDefaultSparsityThreshold = 1e-5;

struct MetricSnapshot {
  std::size_t iteration = 0;
  double rel_residual = 0.0;
  double rel_grad_quadratic = 0.0;
  double rel_grad_misfit = 0.0;
  double rel_error = 0.0;
  std::optional<double> z_error;
  std::size_t sparsity = 0;

  std::optional<double> get(Metric m) const {
    switch (m) {
      case Metric::RelResidual: return rel_residual;
      case Metric::RelGradQuadratic: return rel_grad_quadratic;
      case Metric::RelGradMisfit: return rel_grad_misfit;
      case Metric::RelError: return rel_error;
      case Metric::ZError: return z_error;
      case Metric::Sparsity: return static_cast<double>(sparsity);
    }
    return std::nullopt;
  }
};

using MetricTrace = std::vector<MetricSnapshot>;

/// Number of entries with modulus above `threshold`.
template <Field S>
std::size_t sparsity_count(const Vector<S>& x, double threshold) {
  if (!(threshold > 0.0))
    throw Error(ErrorKind::InvalidArgument, "sparsity threshold must be > 0");
  std::size_t c = 0;
  for (Index j = 0; j < x.size(); ++j)
    if (std::abs(x(j)) > threshold) ++c;
  return c;
}

namespace detail {
inline double safe_ratio(double num, double den) {
  return den > 0.0 ? num / den : num;
}
}  // namespace detail

/// Evaluates the metrics for one instance. `z_target` = b - y^ enables the
/// z_error metric.
template <Field S>
class MetricEvaluator {
 public:
  MetricEvaluator(const ProblemInstance<S>& inst, MisfitGStar misfit,
                  std::optional<Vector<S>> z_target = std::nullopt,
                  double sparsity_threshold = kDefaultSparsityThreshold)
      : inst_(&inst),
        misfit_(std::move(misfit)),
        z_target_(std::move(z_target)),
        threshold_(sparsity_threshold),
        nb_(inst.b.norm()),
        nbhat_(inst.b_hat.norm()),
        nxhat_(inst.x_hat.norm()) {}

  MetricSnapshot operator()(const SolverState<S>& s, bool with_z) const {
    const auto& A = inst_->A;
    MetricSnapshot snap;
    snap.iteration = s.k;
    const Vector<S> Ax = A * s.x;
    snap.rel_residual = detail::safe_ratio((Ax - inst_->b_hat).norm(), nbhat_);
    const Vector<S> r = inst_->b - Ax;
    snap.rel_grad_quadratic = detail::safe_ratio((A.adjoint() * r).norm(), nb_);
    snap.rel_grad_misfit = detail::safe_ratio(
        (A.adjoint() * gstar_gradient<S>(misfit_, r)).norm(), nb_);
    snap.rel_error = detail::safe_ratio((s.x - inst_->x_hat).norm(), nxhat_);
    if (with_z && z_target_) snap.z_error = (s.zstar - *z_target_).norm();
    snap.sparsity = sparsity_count<S>(s.x, threshold_);
    return snap;
  }

 private:
  const ProblemInstance<S>* inst_;
  MisfitGStar misfit_;
  std::optional<Vector<S>> z_target_;
  double threshold_;
  double nb_, nbhat_, nxhat_;
};

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

/// Linear-interpolation quantile (the "type 7" rule) of unsorted data.
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw Error(ErrorKind::InvalidArgument, "quantile: no data");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

struct BandRow {
  std::size_t iteration = 0;
  double min = 0.0, q25 = 0.0, median = 0.0, q75 = 0.0, max = 0.0;
};

struct AggregateBand {
  Metric metric = Metric::RelResidual;
  std::vector<BandRow> rows;
};

/// Per-checkpoint min / quartiles / max across trials. All traces must share
/// the same checkpoints. Returns nullopt when the metric is absent.
inline std::optional<AggregateBand> aggregate(
    const std::vector<MetricTrace>& traces, Metric metric) {
  if (traces.empty()) return std::nullopt;
  const std::size_t n_ck = traces.front().size();
  for (const auto& t : traces)
    if (t.size() != n_ck)
      throw Error(ErrorKind::DimensionMismatch,
                  "aggregate: traces have different checkpoint counts");
  AggregateBand band;
  band.metric = metric;
  std::vector<double> vals(traces.size());
  for (std::size_t c = 0; c < n_ck; ++c) {
    for (std::size_t t = 0; t < traces.size(); ++t) {
      const auto v = traces[t][c].get(metric);
      if (!v) return std::nullopt;
      vals[t] = *v;
    }
    BandRow row;
    row.iteration = traces.front()[c].iteration;
    row.min = *std::min_element(vals.begin(), vals.end());
    row.max = *std::max_element(vals.begin(), vals.end());
    row.q25 = quantile(vals, 0.25);
    row.median = quantile(vals, 0.5);
    row.q75 = quantile(vals, 0.75);
    band.rows.push_back(row);
  }
  return band;
}

// ---------------------------------------------------------------------------
// Trials
// ---------------------------------------------------------------------------

template <Field S>
using InstanceGenerator = std::function<ProblemInstance<S>(RngStream&)>;

struct PresetRun {
  std::string name;
  SolverConfig config;
};

struct TrialOptions {
  std::size_t trials = 1;
  std::size_t iterations = 0;
  /// 0 = one epoch (m iterations).
  std::size_t checkpoint_interval = 0;
  std::uint64_t base_seed = 0;
  unsigned threads = 1;
  /// g* used by the rel_grad_misfit metric.
  MisfitGStar metric_misfit = QuadraticMisfit{};
  double sparsity_threshold = kDefaultSparsityThreshold;
};

/// Stream ids: each trial seed feeds two independent streams.
inline constexpr std::uint64_t kInstanceStream = 0;
inline constexpr std::uint64_t kSolverStream = 1;

template <Field S>
struct TrialRecord {
  MetricTrace trace;
  Vector<S> final_x;
};

template <Field S>
struct PresetResult {
  std::string name;
  std::vector<TrialRecord<S>> trials;
  std::vector<AggregateBand> bands;

  std::vector<std::size_t> final_sparsity() const {
    std::vector<std::size_t> out;
    for (const auto& t : trials) out.push_back(t.trace.back().sparsity);
    return out;
  }
  /// Metric at the last checkpoint, one value per trial.
  std::vector<double> final_values(Metric m) const {
    std::vector<double> out;
    for (const auto& t : trials)
      if (auto v = t.trace.back().get(m)) out.push_back(*v);
    return out;
  }
};

template <Field S>
struct ExperimentResult {
  std::vector<PresetResult<S>> presets;
  double sparsity_threshold = kDefaultSparsityThreshold;

  const PresetResult<S>& preset(const std::string& name) const {
    for (const auto& p : presets)
      if (p.name == name) return p;
    throw Error(ErrorKind::InvalidArgument, "no preset " + name + " in result");
  }
};

/// Trial t draws a fresh instance from stream (base_seed + t, 0) and runs
/// every preset with solver stream (base_seed + t, 1). Trials may run on
/// several threads; results are ordered by trial index and independent of
/// the thread count.
template <Field S>
ExperimentResult<S> run_trials(const InstanceGenerator<S>& generate,
                               const std::vector<PresetRun>& presets,
                               const TrialOptions& opt) {
  if (opt.trials < 1)
    throw Error(ErrorKind::InvalidArgument, "run_trials: need >= 1 trial");
  if (presets.empty())
    throw Error(ErrorKind::InvalidArgument, "run_trials: no presets");

  const std::size_t P = presets.size();
  std::vector<std::vector<TrialRecord<S>>> records(
      P, std::vector<TrialRecord<S>>(opt.trials));
  std::vector<std::exception_ptr> errors(opt.trials);

  auto run_one = [&](std::size_t t) {
    const std::uint64_t seed = opt.base_seed + t;
    RngStream inst_rng(seed, kInstanceStream);
    const ProblemInstance<S> inst = generate(inst_rng);
    std::optional<Vector<S>> z_target;
    for (const auto& p : presets)
      if (p.config.z_update_enabled &&
          std::holds_alternative<QuadraticMisfit>(p.config.g)) {
        z_target = inst.b - range_projection_quadratic<S>(inst.A, inst.b);
        break;
      }
    const MetricEvaluator<S> eval(inst, opt.metric_misfit, z_target,
                                  opt.sparsity_threshold);
    for (std::size_t q = 0; q < P; ++q) {
      SolverConfig cfg = presets[q].config;
      cfg.seed = seed;
      cfg.stream = kSolverStream;
      cfg.max_iterations = opt.iterations;
      cfg.checkpoint_interval = opt.checkpoint_interval;
      const bool with_z = cfg.z_update_enabled &&
                          std::holds_alternative<QuadraticMisfit>(cfg.g);
      const GerkSolver<S> solver(inst.A, inst.b, std::move(cfg));
      TrialRecord<S>& rec = records[q][t];
      auto rep = solver.run([&](const SolverState<S>& s) {
        rec.trace.push_back(eval(s, with_z));
        return false;
      });
      rec.final_x = std::move(rep.state.x);
    }
  };

  const unsigned n_threads = std::max(
      1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(opt.trials)));
  if (n_threads == 1) {
    for (std::size_t t = 0; t < opt.trials; ++t) {
      try {
        run_one(t);
      } catch (...) {
        errors[t] = std::current_exception();
        break;
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n_threads; ++w)
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t t = next.fetch_add(1);
          if (t >= opt.trials) return;
          try {
            run_one(t);
          } catch (...) {
            errors[t] = std::current_exception();
          }
        }
      });
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  ExperimentResult<S> out;
  out.sparsity_threshold = opt.sparsity_threshold;
  for (std::size_t q = 0; q < P; ++q) {
    PresetResult<S> pr;
    pr.name = presets[q].name;
    pr.trials = std::move(records[q]);
    std::vector<MetricTrace> traces;
    for (const auto& r : pr.trials) traces.push_back(r.trace);
    for (Metric m : kAllMetrics)
      if (auto band = aggregate(traces, m)) pr.bands.push_back(std::move(*band));
    out.presets.push_back(std::move(pr));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sparsity tables and CSV output
// ---------------------------------------------------------------------------

struct SparsityRow {
  std::string name;
  double min = 0.0, median = 0.0, max = 0.0;
};

inline SparsityRow sparsity_summary(const std::string& name,
                                    const std::vector<std::size_t>& counts) {
  if (counts.empty())
    throw Error(ErrorKind::InvalidArgument, "sparsity_table: no trials");
  std::vector<double> v(counts.begin(), counts.end());
  return {name, *std::min_element(v.begin(), v.end()), quantile(v, 0.5),
          *std::max_element(v.begin(), v.end())};
}

template <Field S>
std::vector<SparsityRow> sparsity_table(const ExperimentResult<S>& res) {
  std::vector<SparsityRow> rows;
  for (const auto& p : res.presets)
    rows.push_back(sparsity_summary(p.name, p.final_sparsity()));
  return rows;
}

/// "name  min/median/max" lines.
inline std::string format_sparsity_table(const std::vector<SparsityRow>& rows,
                                         double threshold) {
  std::size_t w = 9;
  for (const auto& r : rows) w = std::max(w, r.name.size());
  std::string s = "Sparsity of last iterates (#|x_i| > " +
                  format_double(threshold) + "), min/median/max\n";
  s += "Algorithm" + std::string(w - 9 + 2, ' ') + "Sparsity\n";
  for (const auto& r : rows)
    s += r.name + std::string(w - r.name.size() + 2, ' ') +
         format_double(r.min) + "/" + format_double(r.median) + "/" +
         format_double(r.max) + "\n";
  return s;
}

inline constexpr std::string_view kBandHeader = "# gerk-band v1";
inline constexpr std::string_view kSparsityHeader = "# gerk-sparsity v1";
inline constexpr std::string_view kTrialsHeader = "# gerk-trials v1";

inline std::string format_band_csv(const AggregateBand& band) {
  std::string s(kBandHeader);
  s += " metric=" + metric_name(band.metric) + "\n";
  s += "iteration,min,q25,median,q75,max\n";
  for (const auto& r : band.rows)
    s += std::to_string(r.iteration) + "," + format_double(r.min) + "," +
         format_double(r.q25) + "," + format_double(r.median) + "," +
         format_double(r.q75) + "," + format_double(r.max) + "\n";
  return s;
}

inline std::string format_sparsity_csv(const std::vector<SparsityRow>& rows,
                                       double threshold) {
  std::string s(kSparsityHeader);
  s += " threshold=" + format_double(threshold) + "\n";
  s += "preset,min,median,max\n";
  for (const auto& r : rows)
    s += r.name + "," + format_double(r.min) + "," + format_double(r.median) +
         "," + format_double(r.max) + "\n";
  return s;
}

template <Field S>
std::string format_trials_csv(const PresetResult<S>& p) {
  std::string s(kTrialsHeader);
  s += "\ntrial,final_iteration,sparsity,rel_error,rel_residual\n";
  for (std::size_t t = 0; t < p.trials.size(); ++t) {
    const auto& last = p.trials[t].trace.back();
    s += std::to_string(t) + "," + std::to_string(last.iteration) + "," +
         std::to_string(last.sparsity) + "," + format_double(last.rel_error) +
         "," + format_double(last.rel_residual) + "\n";
  }
  return s;
}

/// Layout under `dir`:
///   <preset>/<metric>.csv   band per metric
///   <preset>/trials.csv     last-iterate record per trial
///   sparsity.csv            min/median/max of last-iterate sparsity
template <Field S>
void write_experiment_outputs(const std::filesystem::path& dir,
                              const ExperimentResult<S>& res) {
  for (const auto& p : res.presets) {
    for (const auto& band : p.bands)
      write_text_atomic(dir / p.name / (metric_name(band.metric) + ".csv"),
                        format_band_csv(band));
    write_text_atomic(dir / p.name / "trials.csv", format_trials_csv(p));
  }
  write_text_atomic(dir / "sparsity.csv",
                    format_sparsity_csv(sparsity_table(res),
                                        res.sparsity_threshold));
}

// ---------------------------------------------------------------------------
// Experiment profiles
// ---------------------------------------------------------------------------

enum class ExperimentKind { LeastSquares, Impulsive };

inline std::string to_string(ExperimentKind k) {
  return k == ExperimentKind::LeastSquares ? "i" : "ii";
}

struct ExperimentSetup {
  ExperimentKind which = ExperimentKind::LeastSquares;
  GeneratorParams gen;
  PresetParams params;
  std::vector<std::string> presets;
  std::size_t trials = 10;
  /// Iteration budget in epochs (multiples of m); required.
  std::optional<std::size_t> epochs;
};

/// CI-sized defaults.
inline ExperimentSetup desk_profile(ExperimentKind which) {
  ExperimentSetup s;
  s.which = which;
  s.gen = GeneratorParams{200, 100, 50, 5, 5.0, 0.1, 10.0};
  s.trials = 10;
  s.epochs = 200;
  if (which == ExperimentKind::LeastSquares) {
    s.params.lambda = 5.0;
    s.presets = {"srk", "rek", "gerk_ad"};
  } else {
    s.params = {10.0, 1e-2, 1e-3};
    s.presets = {"srk", "rek", "gerk_ad", "gerk_bd"};
  }
  return s;
}

/// Published problem sizes. The iteration budget has no published value and
/// must be supplied.
inline ExperimentSetup paper_profile(ExperimentKind which) {
  ExperimentSetup s = desk_profile(which);
  s.gen = GeneratorParams{1000, 500, 250, 25, 5.0, 0.001,
                          which == ExperimentKind::LeastSquares ? 100.0 : 10.0};
  s.trials = 50;
  s.epochs.reset();
  return s;
}

template <Field S>
InstanceGenerator<S> make_generator(ExperimentKind which,
                                    const GeneratorParams& gen) {
  if (which == ExperimentKind::LeastSquares)
    return [gen](RngStream& rng) { return gen_experiment_i<S>(gen, rng); };
  return [gen](RngStream& rng) { return gen_experiment_ii<S>(gen, rng); };
}

/// g* for the rel_grad_misfit metric: quadratic for (i), the Huber misfit
/// of the preset parameters for (ii).
inline MisfitGStar metric_misfit_for(const ExperimentSetup& setup) {
  if (setup.which == ExperimentKind::Impulsive && setup.params.eps &&
      setup.params.tau)
    return HuberQuadMisfit{*setup.params.eps, *setup.params.tau};
  return QuadraticMisfit{};
}

template <Field S>
ExperimentResult<S> run_experiment(const ExperimentSetup& setup,
                                   std::uint64_t base_seed,
                                   std::size_t checkpoint_interval = 0,
                                   unsigned threads = 1) {
  if (!setup.epochs)
    throw Error(ErrorKind::MissingParameter,
                "experiment: iteration budget (epochs) is required");
  std::vector<PresetRun> runs;
  for (const auto& name : setup.presets)
    runs.push_back({name, preset(name, setup.params, field_of<S>())});
  TrialOptions opt;
  opt.trials = setup.trials;
  opt.iterations = *setup.epochs * static_cast<std::size_t>(setup.gen.m);
  opt.checkpoint_interval = checkpoint_interval;
  opt.base_seed = base_seed;
  opt.threads = threads;
  opt.metric_misfit = metric_misfit_for(setup);
  // Validate the generator once up front so degenerate setups fail before
  // any thread starts.
  detail::check_generator(setup.gen);
  return run_trials<S>(make_generator<S>(setup.which, setup.gen), runs, opt);
}

}  // namespace gerk
