// gerk command-line front end.
//
//   gerk solve       --matrix A.mtx --rhs b.csv --preset rek --iterations N --out DIR
//   gerk experiment  --which i|ii --profile desk|paper|custom --out DIR
//   gerk certify     (--matrix A.mtx | --m M --n N --rank R) --lambda L [--xhat x.csv]
//
// Exit codes: 0 ok, 1 invalid configuration, 2 usage / I/O / parse error,
// 3 dimension mismatch, 4 generator degeneracy, 5 enumeration cap exceeded.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "gerk/gerk.hpp"

namespace {

using namespace gerk;
namespace fs = std::filesystem;

int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::Parse:
    case ErrorKind::Io: return 2;
    case ErrorKind::DimensionMismatch: return 3;
    case ErrorKind::DegenerateNullspace:
    case ErrorKind::InvalidRank: return 4;
    case ErrorKind::TooManyColumns: return 5;
    default: return 1;
  }
}

std::string opt_str(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string("unset");
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

struct SolveArgs {
  std::string matrix, rhs, out;
  std::string preset = "rek";
  std::optional<double> lambda, eps, tau;
  std::optional<std::size_t> iterations, epochs;
  std::size_t checkpoint = 0;
  std::uint64_t seed = 0;
  std::string field = "auto";
  std::string z_stepsize = "constant";
  double sparsity_threshold = kDefaultSparsityThreshold;
};

template <Field S>
int solve_impl(const SolveArgs& a, const Matrix<S>& A, const Vector<S>& b) {
  SolverConfig cfg = preset(a.preset, PresetParams{a.lambda, a.eps, a.tau},
                            field_of<S>());
  if (a.iterations && a.epochs)
    throw Error(ErrorKind::InvalidArgument,
                "give either --iterations or --epochs, not both");
  if (!a.iterations && !a.epochs)
    throw Error(ErrorKind::MissingParameter,
                "an iteration budget is required (--iterations or --epochs)");
  cfg.max_iterations =
      a.iterations ? *a.iterations : *a.epochs * static_cast<std::size_t>(A.rows());
  cfg.checkpoint_interval = a.checkpoint;
  cfg.seed = a.seed;
  cfg.stream = kSolverStream;
  cfg.z_stepsize = a.z_stepsize == "residual_adaptive" ? ZStepsize::ResidualAdaptive
                                                       : ZStepsize::Constant;
  const MisfitGStar g = cfg.g;
  const GerkSolver<S> solver(A, b, std::move(cfg));

  const double nb = b.norm();
  std::string metrics = "# gerk-metrics v1 preset=" + a.preset +
                        " field=" + to_string(field_of<S>()) + "\n";
  metrics += "iteration,rel_residual,rel_grad_quadratic,rel_grad_misfit,sparsity\n";
  auto ratio = [nb](double v) { return nb > 0.0 ? v / nb : v; };
  const auto rep = solver.run([&](const SolverState<S>& s) {
    const Vector<S> r = b - A * s.x;
    metrics += std::to_string(s.k) + "," + format_double(ratio(r.norm())) + "," +
               format_double(ratio((A.adjoint() * r).norm())) + "," +
               format_double(ratio((A.adjoint() * gstar_gradient<S>(g, r)).norm())) +
               "," + std::to_string(sparsity_count<S>(s.x, a.sparsity_threshold)) +
               "\n";
    return false;
  });

  const fs::path out(a.out);
  write_vector_csv<S>(out / "solution.csv", rep.state.x);
  write_text_atomic(out / "metrics.csv", metrics);
  const Vector<S> r = b - A * rep.state.x;
  std::cout << "preset=" << a.preset << "\n"
            << "field=" << to_string(field_of<S>()) << "\n"
            << "iterations=" << rep.iterations << "\n"
            << "rel_residual=" << format_double(ratio(r.norm())) << "\n"
            << "rel_grad_quadratic="
            << format_double(ratio((A.adjoint() * r).norm())) << "\n"
            << "solution=" << (out / "solution.csv").string() << "\n"
            << "metrics=" << (out / "metrics.csv").string() << "\n";
  return 0;
}

int cmd_solve(const SolveArgs& a) {
  const MatrixData M = read_matrix_market(a.matrix);
  const VectorData v = read_vector_csv(a.rhs);
  if (v.size() != M.rows())
    throw Error(ErrorKind::DimensionMismatch,
                a.rhs + ": " + std::to_string(v.size()) + " entries, matrix " +
                    a.matrix + " has " + std::to_string(M.rows()) + " rows");
  bool complex = M.field == FieldKind::Complex || v.field == FieldKind::Complex;
  if (a.field == "real" && complex)
    throw Error(ErrorKind::FieldMismatch, "--field real given for complex data");
  if (a.field == "complex") complex = true;
  if (!complex) return solve_impl<double>(a, M.real, v.real);
  const ComplexMatrix A = M.field == FieldKind::Complex
                              ? M.complex
                              : ComplexMatrix(M.real.cast<Complex>());
  const ComplexVector b = v.field == FieldKind::Complex
                              ? v.complex
                              : ComplexVector(v.real.cast<Complex>());
  return solve_impl<Complex>(a, A, b);
}

// ---------------------------------------------------------------------------
// experiment
// ---------------------------------------------------------------------------

struct ExperimentArgs {
  std::string which = "i";
  std::string profile = "desk";
  std::vector<std::string> presets;
  std::optional<Index> m, n, r, s;
  std::optional<double> noise_level, sv_lo, sv_hi;
  std::optional<double> lambda, eps, tau;
  std::optional<std::size_t> trials, epochs;
  std::size_t checkpoint = 0;
  std::uint64_t seed = 0;
  std::string field = "real";
  std::string out;
  unsigned threads = 1;
  bool print_config = false;
};

ExperimentSetup resolve_setup(const ExperimentArgs& a) {
  const ExperimentKind which =
      a.which == "i" ? ExperimentKind::LeastSquares : ExperimentKind::Impulsive;
  ExperimentSetup s = a.profile == "paper" ? paper_profile(which)
                                           : desk_profile(which);
  if (a.profile == "custom") {
    std::vector<std::string> missing;
    if (!a.m) missing.push_back("--m");
    if (!a.n) missing.push_back("--n");
    if (!a.r) missing.push_back("--r");
    if (!a.s) missing.push_back("--s");
    if (!a.noise_level) missing.push_back("--noise-level");
    if (!a.sv_lo) missing.push_back("--sv-lo");
    if (!a.sv_hi) missing.push_back("--sv-hi");
    if (!a.epochs) missing.push_back("--epochs");
    if (!missing.empty()) {
      std::string msg = "profile custom needs";
      for (const auto& f : missing) msg += " " + f;
      throw Error(ErrorKind::MissingParameter, msg);
    }
  }
  if (a.m) s.gen.m = *a.m;
  if (a.n) s.gen.n = *a.n;
  if (a.r) s.gen.r = *a.r;
  if (a.s) s.gen.s = *a.s;
  if (a.noise_level) s.gen.noise_level = *a.noise_level;
  if (a.sv_lo) s.gen.sv_lo = *a.sv_lo;
  if (a.sv_hi) s.gen.sv_hi = *a.sv_hi;
  if (a.lambda) s.params.lambda = *a.lambda;
  if (a.eps) s.params.eps = *a.eps;
  if (a.tau) s.params.tau = *a.tau;
  if (a.trials) s.trials = *a.trials;
  if (a.epochs) s.epochs = *a.epochs;
  if (!a.presets.empty()) s.presets = a.presets;
  return s;
}

std::string format_setup(const ExperimentSetup& s, const ExperimentArgs& a) {
  std::ostringstream o;
  std::string presets;
  for (const auto& p : s.presets) presets += (presets.empty() ? "" : ",") + p;
  o << "which=" << to_string(s.which) << "\n"
    << "profile=" << a.profile << "\n"
    << "field=" << a.field << "\n"
    << "m=" << s.gen.m << "\n"
    << "n=" << s.gen.n << "\n"
    << "r=" << s.gen.r << "\n"
    << "s=" << s.gen.s << "\n"
    << "noise_level=" << format_double(s.gen.noise_level) << "\n"
    << "sv_lo=" << format_double(s.gen.sv_lo) << "\n"
    << "sv_hi=" << format_double(s.gen.sv_hi) << "\n"
    << "lambda=" << opt_str(s.params.lambda) << "\n"
    << "eps=" << opt_str(s.params.eps) << "\n"
    << "tau=" << opt_str(s.params.tau) << "\n"
    << "trials=" << s.trials << "\n"
    << "epochs=" << (s.epochs ? std::to_string(*s.epochs) : "required") << "\n"
    << "checkpoint_interval="
    << (a.checkpoint ? a.checkpoint : static_cast<std::size_t>(s.gen.m)) << "\n"
    << "seed=" << a.seed << "\n"
    << "presets=" << presets << "\n";
  return o.str();
}

template <Field S>
int experiment_impl(const ExperimentSetup& s, const ExperimentArgs& a,
                    const std::string& config_text) {
  const auto res = run_experiment<S>(s, a.seed, a.checkpoint, a.threads);
  const fs::path dir = fs::path(a.out) / ("experiment_" + to_string(s.which) +
                                          "_" + to_string(field_of<S>()));
  write_experiment_outputs<S>(dir, res);
  write_text_atomic(dir / "config.txt", "# gerk-config v1\n" + config_text);

  std::cout << format_sparsity_table(sparsity_table(res), res.sparsity_threshold);
  std::cout << "\nFinal rel_error, min/median/max\n";
  for (const auto& p : res.presets) {
    const auto v = p.final_values(Metric::RelError);
    std::cout << p.name << "  " << format_double(quantile(v, 0.0)) << "/"
              << format_double(quantile(v, 0.5)) << "/"
              << format_double(quantile(v, 1.0)) << "\n";
  }
  std::cout << "\noutput=" << dir.string() << "\n";
  return 0;
}

int cmd_experiment(const ExperimentArgs& a) {
  const ExperimentSetup s = resolve_setup(a);
  const std::string config_text = format_setup(s, a);
  if (a.print_config) {
    std::cout << config_text;
    return 0;
  }
  if (a.out.empty())
    throw Error(ErrorKind::MissingParameter, "--out is required");
  if (!s.epochs)
    throw Error(ErrorKind::MissingParameter,
                "profile " + a.profile +
                    " has no default iteration budget; pass --epochs");
  if (a.field == "complex") return experiment_impl<Complex>(s, a, config_text);
  return experiment_impl<double>(s, a, config_text);
}

// ---------------------------------------------------------------------------
// certify
// ---------------------------------------------------------------------------

struct CertifyArgs {
  std::string matrix, xhat, out;
  Index m = 8, n = 6, rank = 4, support = 2;
  double sv_lo = 0.5, sv_hi = 2.0;
  double lambda = 1.0;
  std::size_t samples = 1000;
  std::uint64_t seed = 0;
  Index max_cols = kDefaultMaxEnumeratedColumns;
};

int cmd_certify(const CertifyArgs& a) {
  RngStream rng(a.seed, kInstanceStream);
  RealMatrix A;
  if (!a.matrix.empty()) {
    const MatrixData M = read_matrix_market(a.matrix);
    if (M.field != FieldKind::Real)
      throw Error(ErrorKind::FieldMismatch,
                  a.matrix + ": certificates are computed for real matrices");
    A = M.real;
  } else if (a.rank < std::min(a.m, a.n)) {
    A = make_rank_deficient<double>(a.m, a.n, a.rank, a.sv_lo, a.sv_hi, rng);
  } else {
    A = gaussian_matrix<double>(a.m, a.n, rng);
  }
  // Refuse before the (slow) oracle runs.
  if (A.cols() > a.max_cols)
    throw Error(ErrorKind::TooManyColumns,
                std::to_string(A.cols()) + " columns exceed the enumeration cap of " +
                    std::to_string(a.max_cols));

  RealVector planted;
  if (!a.xhat.empty()) {
    const VectorData v = read_vector_csv(a.xhat);
    if (v.field != FieldKind::Real)
      throw Error(ErrorKind::FieldMismatch, a.xhat + ": expected a real vector");
    if (v.size() != A.cols())
      throw Error(ErrorKind::DimensionMismatch,
                  a.xhat + ": " + std::to_string(v.size()) +
                      " entries, matrix has " + std::to_string(A.cols()) +
                      " columns");
    planted = v.real;
  } else {
    planted = RealVector::Zero(A.cols());
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(a.support),
                                         static_cast<std::size_t>(A.cols()));
    for (std::size_t j : rng.sample_without_replacement(
             static_cast<std::size_t>(A.cols()), k))
      planted(static_cast<Index>(j)) = rng.normal();
  }

  const RegularizerF f = ElasticNet{a.lambda};
  const RealVector yhat = A * planted;
  OracleOptions oo;
  oo.tol = 1e-12;
  const auto oracle = constrained_regularizer_min<double>(A, yhat, f, oo);
  const auto cert = gamma_hat<double>(A, oracle.value, a.lambda, a.max_cols);
  RngStream sample_rng(a.seed, 2);
  const auto rep = verify_error_bound(A, yhat, f, oracle.value, cert.gamma,
                                      a.samples, sample_rng);

  std::ostringstream o;
  o << "# gerk-certificate v1\n"
    << "rows=" << A.rows() << "\n"
    << "cols=" << A.cols() << "\n"
    << "rank=" << numerical_rank(A) << "\n"
    << "lambda=" << format_double(cert.lambda) << "\n"
    << "sigma_tilde_min=" << format_double(cert.sigma_tilde_min) << "\n"
    << "sigma_min_plus=" << format_double(cert.sigma_min_plus) << "\n"
    << "xhat_min_abs=" << format_double(cert.xhat_min_abs) << "\n"
    << "gamma=" << format_double(cert.gamma) << "\n"
    << "n_enumerated_subsets=" << cert.n_enumerated_subsets << "\n"
    << "oracle_iterations=" << oracle.iterations << "\n"
    << "oracle_residual=" << format_double(oracle.residual_norm) << "\n"
    << "samples=" << rep.samples << "\n"
    << "violations=" << rep.violations << "\n"
    << "max_ratio=" << format_double(rep.max_ratio) << "\n";
  std::cout << o.str();
  if (!a.out.empty()) write_text_atomic(a.out, o.str());
  return rep.violations == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Randomized Kaczmarz solvers (GERK, RK, SRK, REK)"};
  app.set_config("--config", "", "key=value configuration file; flags override it");
  app.require_subcommand(1);

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "Solve A x = b with a preset");
  solve->add_option("--matrix", sa.matrix, "MatrixMarket file")->required();
  solve->add_option("--rhs", sa.rhs, "right-hand side CSV")->required();
  solve->add_option("--out", sa.out, "output directory")->required();
  solve->add_option("--preset", sa.preset)
      ->check(CLI::IsMember({"rk", "srk", "rek", "gerk_ad", "gerk_bd"}));
  solve->add_option("--lambda", sa.lambda, "elastic-net weight");
  solve->add_option("--eps", sa.eps, "Huber threshold");
  solve->add_option("--tau", sa.tau, "quadratic weight of the Huber misfit");
  solve->add_option("--iterations", sa.iterations);
  solve->add_option("--epochs", sa.epochs, "budget in multiples of m");
  solve->add_option("--checkpoint-interval", sa.checkpoint, "0 = one epoch");
  solve->add_option("--seed", sa.seed);
  solve->add_option("--field", sa.field)
      ->check(CLI::IsMember({"auto", "real", "complex"}));
  solve->add_option("--z-stepsize", sa.z_stepsize)
      ->check(CLI::IsMember({"constant", "residual_adaptive"}));
  solve->add_option("--sparsity-threshold", sa.sparsity_threshold);

  ExperimentArgs ea;
  ea.threads = std::max(1u, std::thread::hardware_concurrency());
  auto* exp = app.add_subcommand("experiment", "Run a multi-trial experiment");
  exp->add_option("--which", ea.which)->check(CLI::IsMember({"i", "ii"}));
  exp->add_option("--profile", ea.profile)
      ->check(CLI::IsMember({"desk", "paper", "custom"}));
  exp->add_option("--presets", ea.presets, "comma-separated preset list")
      ->delimiter(',');
  exp->add_option("--m", ea.m);
  exp->add_option("--n", ea.n);
  exp->add_option("--r", ea.r, "rank");
  exp->add_option("--s", ea.s, "support size of the planted solution");
  exp->add_option("--noise-level", ea.noise_level);
  exp->add_option("--sv-lo", ea.sv_lo);
  exp->add_option("--sv-hi", ea.sv_hi);
  exp->add_option("--lambda", ea.lambda);
  exp->add_option("--eps", ea.eps);
  exp->add_option("--tau", ea.tau);
  exp->add_option("--trials", ea.trials);
  exp->add_option("--epochs", ea.epochs, "iteration budget in multiples of m");
  exp->add_option("--checkpoint-interval", ea.checkpoint, "0 = one epoch");
  exp->add_option("--seed", ea.seed, "base seed; trial t uses seed + t");
  exp->add_option("--field", ea.field)->check(CLI::IsMember({"real", "complex"}));
  exp->add_option("--out", ea.out, "output directory");
  exp->add_option("--threads", ea.threads)->check(CLI::PositiveNumber);
  exp->add_flag("--print-config", ea.print_config,
                "print the resolved configuration and exit");

  CertifyArgs ca;
  auto* cert = app.add_subcommand("certify", "Error-bound certificate");
  cert->add_option("--matrix", ca.matrix, "MatrixMarket file (real)");
  cert->add_option("--m", ca.m);
  cert->add_option("--n", ca.n);
  cert->add_option("--rank", ca.rank);
  cert->add_option("--sv-lo", ca.sv_lo);
  cert->add_option("--sv-hi", ca.sv_hi);
  cert->add_option("--support", ca.support, "support size of a random planted x");
  cert->add_option("--xhat", ca.xhat, "planted x as CSV");
  cert->add_option("--lambda", ca.lambda);
  cert->add_option("--samples", ca.samples);
  cert->add_option("--seed", ca.seed);
  cert->add_option("--max-columns", ca.max_cols);
  cert->add_option("--out", ca.out, "write the record to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*solve) return cmd_solve(sa);
    if (*exp) return cmd_experiment(ea);
    if (*cert) return cmd_certify(ca);
  } catch (const gerk::Error& e) {
    std::cerr << "gerk: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "gerk: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
