// schatten_lab command-line front end.
//
// Exit codes: 0 everything passed or the experiment completed, 1 a
// verification failed (reproduction files written where applicable), 2 usage
// error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "schatten_lab/schatten_lab.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace schatten;

constexpr int exit_ok = 0;
constexpr int exit_failed = 1;
constexpr int exit_usage = 2;

class Output {
 public:
  explicit Output(const std::string& path) {
    if (path != "-") {
      file_.open(path);
      if (!file_) throw InvalidInput("cannot open output file '" + path + "'");
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

Matrix load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open matrix file '" + path + "'");
  return read_matrix(in);
}

void emit_json(const std::string& path, const json& doc) {
  Output out(path);
  out.stream() << doc.dump(2) << '\n';
}

// ---------------------------------------------------------------------------

struct VerifyOptions {
  std::string ensemble = "gaussian";
  std::size_t m = 5;
  std::size_t n = 5;
  std::size_t rank = 2;
  bool vary_dims = false;
  std::vector<std::string> gauges{"power:0.5"};
  std::vector<std::string> checks{"main"};
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  double tolerance = default_tolerance;
  unsigned jobs = 1;
  std::string output = "-";
  std::string repro_dir = "repro";
  std::string repro;
  bool failures_only = false;
};

int run_verify(const VerifyOptions& o) {
  if (!o.repro.empty()) {
    std::ifstream in(o.repro);
    if (!in) throw InvalidInput("cannot open repro file '" + o.repro + "'");
    const auto c = read_repro(in);
    const auto r = replay_repro(c);
    std::vector<VerificationReport> reports{r};
    Output out(o.output);
    write_reports_csv(out.stream(), reports);
    std::cerr << r.check_name << ": " << (r.holds ? "holds" : "VIOLATED") << " (slack " << r.slack << ")\n";
    return r.holds ? exit_ok : exit_failed;
  }

  Ensemble ens;
  ens.kind = parse_ensemble_kind(o.ensemble);
  ens.m = o.m;
  ens.n = o.n;
  ens.rank = o.rank;
  ens.seed = o.seed;
  ens.vary_dims = o.vary_dims;
  std::vector<ConcaveGauge> gauges;
  for (const auto& g : o.gauges) gauges.push_back(ConcaveGauge::parse(g));
  CampaignConfig cfg;
  cfg.checks.clear();
  for (const auto& c : o.checks) cfg.checks.push_back(parse_check_kind(c));
  cfg.tolerance = o.tolerance;
  cfg.jobs = o.jobs;
  cfg.repro_dir = o.repro_dir;
  cfg.keep_passing = !o.failures_only;

  const auto result = fuzz_campaign(ens, gauges, o.trials, cfg);
  {
    Output out(o.output);
    write_reports_csv(out.stream(), result.reports);
  }
  for (const auto& [name, s] : result.summary)
    std::cerr << name << ": " << s.passes << " passed, " << s.failures << " failed, min relative slack "
              << s.min_relative_slack << '\n';
  for (const auto& path : result.repro_files)
    std::cerr << "repro: " << path.string() << "  (replay: schatten_lab verify --repro " << path.string() << ")\n";
  return result.failures() == 0 ? exit_ok : exit_failed;
}

// ---------------------------------------------------------------------------

struct AlignOptions {
  std::size_t n = 4;
  std::string gauge = "capped:power:0.5:delta=0.001";
  std::uint64_t seed = 0;
  std::size_t starts = 1;
  int max_iters = 5000;
  double tol_commutator = 1e-6;
  double tolerance = default_tolerance;
  std::string a_path;
  std::string b_path;
  unsigned jobs = 1;
  std::string output = "-";
};

int run_align(const AlignOptions& o) {
  const auto f = ConcaveGauge::parse(o.gauge);
  Matrix a;
  Matrix b;
  if (!o.a_path.empty() || !o.b_path.empty()) {
    if (o.a_path.empty() || o.b_path.empty()) throw InvalidInput("align: --a and --b must be given together");
    a = load_matrix(o.a_path);
    b = load_matrix(o.b_path);
  } else {
    Rng rng(o.seed);
    const Matrix ga = rng.gaussian(o.n, o.n);
    const Matrix gb = rng.gaussian(o.n, o.n);
    a = symmetrize(ga);
    b = symmetrize(gb);
  }
  detail::require(a.is_square() && a.same_shape(b), "align: A and B must be square of equal size");
  detail::require((a - a.transpose()).max_abs() <= 1e-12 * (1.0 + a.max_abs()) &&
                      (b - b.transpose()).max_abs() <= 1e-12 * (1.0 + b.max_abs()),
                  "align: A and B must be symmetric (dilate non-symmetric inputs first)");

  AlignmentConfig cfg;
  cfg.max_iters = o.max_iters;
  cfg.tol_commutator = o.tol_commutator;
  const auto state = align_pair(a, b, f, cfg, o.starts, o.seed, o.jobs);
  const auto spectra = symmetric_pair_spectra(a, b);
  const double lower = perturbation_lhs(singular_values(a), singular_values(b), f);
  const bool lower_ok = verify_lower_bound(state, singular_values(a), singular_values(b), f, o.tolerance);

  json doc;
  doc["schema"] = "schatten-lab v1";
  doc["n"] = a.rows();
  doc["gauge"] = f.spec();
  doc["seed"] = o.seed;
  doc["starts"] = o.starts;
  doc["initial_objective"] = gauge_sum(a - b, f);
  doc["objective"] = state.objective;
  doc["lower_bound"] = lower;
  doc["lower_bound_holds"] = lower_ok;
  doc["commutator_norm"] = state.commutator_norm;
  doc["converged"] = state.converged;
  doc["iterations"] = state.iterations;
  doc["commutes"] = verify_commutation(state, spectra.sigma_a, 1e-5);
  try {
    doc["diagonal"] = verify_diagonal_alignment(state, spectra.sigma_a, spectra.sigma_b, 1e-5);
  } catch (const DistinctnessViolated&) {
    doc["diagonal"] = nullptr;
  }
  doc["trace"] = alignment_trace_json(state);
  emit_json(o.output, doc);
  return lower_ok ? exit_ok : exit_failed;
}

// ---------------------------------------------------------------------------

struct RecoverOptions {
  std::size_t m = 5;
  std::size_t n = 5;
  std::size_t k = 1;
  std::size_t l = 25;
  double p = 0.5;
  double eta = 0.0;
  std::uint64_t seed = 0;
  double success_tol = 1e-3;
  std::string instance;
  std::string save_instance;
  std::string solution;
  std::string output = "-";
};

int run_recover(const RecoverOptions& o) {
  RecoveryInstance inst;
  std::uint64_t seed = o.seed;
  if (!o.instance.empty()) {
    std::ifstream in(o.instance);
    if (!in) throw InvalidInput("cannot open instance file '" + o.instance + "'");
    auto loaded = read_instance(in);
    inst = std::move(loaded.instance);
    seed = loaded.seed;
  } else {
    Rng rng(o.seed);
    const Matrix truth = low_rank_ground_truth(o.m, o.n, o.k, rng);
    inst = make_instance(gaussian_operator(o.m, o.n, o.l, o.seed ^ 0x9e3779b97f4a7c15ULL), truth, o.p, o.eta);
  }
  if (!o.save_instance.empty()) {
    std::ofstream out(o.save_instance);
    write_instance(out, inst, seed);
  }
  const auto result = irls_solve(inst);
  if (!o.solution.empty()) {
    std::ofstream out(o.solution);
    write_matrix(out, result.x);
  }
  json doc;
  doc["schema"] = "schatten-lab v1";
  doc["m"] = inst.op.m;
  doc["n"] = inst.op.n;
  doc["l"] = inst.op.l();
  doc["p"] = inst.p;
  doc["eta"] = inst.eta;
  doc["seed"] = seed;
  doc["iterations"] = result.iterations;
  doc["residual"] = result.residual;
  doc["schatten_p_power"] = schatten_p_power(result.x, inst.p);
  if (inst.ground_truth) {
    const double err = relative_error(result.x, *inst.ground_truth);
    doc["relative_error"] = err;
    doc["success"] = err <= o.success_tol;
  }
  emit_json(o.output, doc);
  return exit_ok;
}

// ---------------------------------------------------------------------------

struct NullspaceOptions {
  std::size_t m = 4;
  std::size_t n = 4;
  std::size_t l = 14;
  std::size_t k = 1;
  double p = 0.5;
  std::size_t trials = 2000;
  std::uint64_t seed = 0;
  std::string witness;
  std::string output = "-";
};

int run_nullspace(const NullspaceOptions& o) {
  const auto op = gaussian_operator(o.m, o.n, o.l, o.seed);
  json doc;
  doc["schema"] = "schatten-lab v1";
  doc["m"] = o.m;
  doc["n"] = o.n;
  doc["l"] = o.l;
  doc["k"] = o.k;
  doc["p"] = o.p;
  doc["seed"] = o.seed;
  NullspaceSample sample;
  try {
    sample = nullspace_condition_sample(op, o.p, o.k, o.trials, o.seed + 1);
  } catch (const EmptyNullspace&) {
    doc["nullspace_dimension"] = 0;
    doc["vacuous"] = true;
    emit_json(o.output, doc);
    return exit_ok;
  }
  doc["nullspace_dimension"] = nullspace_basis(op).size();
  doc["samples"] = sample.samples;
  doc["violations"] = sample.violations;
  doc["min_margin"] = sample.min_margin;
  bool ok = true;
  if (sample.witness) {
    const auto w = failure_witness(*sample.witness, o.p, o.k);
    const auto c = check_witness(w, *sample.witness, op, o.p, o.k);
    ok = c.ok;
    doc["witness"] = {{"margin", nullspace_margin(*sample.witness, o.p, o.k)},
                      {"rank_xbar", c.rank_xbar},
                      {"difference_residual", c.difference_residual},
                      {"measurement_gap", c.measurement_gap},
                      {"objective_xbar", c.objective_xbar},
                      {"objective_xbar_prime", c.objective_prime},
                      {"postconditions_hold", c.ok}};
    if (!o.witness.empty()) {
      std::ofstream out(o.witness);
      out << "# Z, then Xbar, then Xbar_prime\n";
      write_matrix(out, *sample.witness);
      write_matrix(out, w.xbar);
      write_matrix(out, w.xbar_prime);
    }
  }
  emit_json(o.output, doc);
  return ok ? exit_ok : exit_failed;
}

// ---------------------------------------------------------------------------

struct PhaseOptions {
  std::size_t m = 8;
  std::size_t n = 8;
  std::size_t k = 1;
  std::vector<double> p{0.5, 1.0};
  std::vector<std::size_t> l{16, 24, 32, 40, 48};
  std::size_t trials = 25;
  std::uint64_t seed = 0;
  double success_tol = 1e-3;
  unsigned jobs = 1;
  std::string output = "-";
};

int run_phase(const PhaseOptions& o) {
  PhaseConfig cfg;
  cfg.m = o.m;
  cfg.n = o.n;
  cfg.k = o.k;
  cfg.p_list = o.p;
  cfg.l_list = o.l;
  cfg.trials = o.trials;
  cfg.seed = o.seed;
  cfg.success_tol = o.success_tol;
  cfg.jobs = o.jobs;
  const auto rows = phase_transition(cfg);
  Output out(o.output);
  write_phase_csv(out.stream(), rows);
  return exit_ok;
}

// ---------------------------------------------------------------------------

struct RipOptions {
  std::size_t m = 4;
  std::size_t n = 4;
  std::size_t l = 20;
  std::size_t r = 2;
  std::optional<double> p;
  std::size_t trials = 500;
  std::uint64_t seed = 0;
  std::string output = "-";
};

int run_rip(const RipOptions& o) {
  const auto op = gaussian_operator(o.m, o.n, o.l, o.seed);
  json doc;
  doc["schema"] = "schatten-lab v1";
  doc["m"] = o.m;
  doc["n"] = o.n;
  doc["l"] = o.l;
  doc["r"] = o.r;
  doc["trials"] = o.trials;
  doc["seed"] = o.seed;
  const double alpha = rip_estimate(op, o.r, o.trials, o.seed + 1);
  doc["alpha_hat"] = alpha;
  doc["alpha_hat_is_lower_bound"] = true;
  if (o.p) {
    doc["p"] = *o.p;
    doc["beta_hat"] = rip_p_estimate(op, *o.p, o.r, o.trials, o.seed + 2);
    if (alpha > 0.0 && alpha < 1.0) doc["threshold_holds_at_alpha_hat"] = recovery_threshold_check(alpha, *o.p);
  }
  emit_json(o.output, doc);
  return exit_ok;
}

// ---------------------------------------------------------------------------

void add_seed(CLI::App* app, std::uint64_t& seed) {
  app->add_option("--seed", seed, "Seed (falls back to SCHATTEN_LAB_SEED, then 0)")->envname("SCHATTEN_LAB_SEED");
}

void add_output(CLI::App* app, std::string& output, const std::string& what) {
  app->add_option("-o,--output", output, what + " path, '-' for standard output");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"schatten_lab: concave singular-value perturbation toolkit"};
  app.require_subcommand(1);

  VerifyOptions vo;
  auto* verify = app.add_subcommand("verify", "Fuzz the perturbation inequality and companion checks");
  verify->add_option("--ensemble", vo.ensemble, "gaussian | lowrank | psd | symmetric | repeated")
      ->check(CLI::IsMember({"gaussian", "lowrank", "psd", "symmetric", "repeated"}));
  verify->add_option("--m", vo.m, "Rows (maximum rows with --vary-dims)")->check(CLI::Range(1, 64));
  verify->add_option("--n", vo.n, "Columns (maximum columns with --vary-dims)")->check(CLI::Range(1, 64));
  verify->add_option("--rank", vo.rank, "Rank of the lowrank ensemble")->check(CLI::PositiveNumber);
  verify->add_flag("--vary-dims", vo.vary_dims, "Draw dimensions per trial from [1,m] x [1,n]");
  verify->add_option("--gauge", vo.gauges, "Gauge spec, repeatable (power:P, capped:<base>:delta=D, pwl:B:S)");
  verify->add_option("--checks", vo.checks, "main, conjecture, f_lw, mirsky, lidskii_wielandt, symmetric_reduction, "
                                           "local_expansion")
      ->delimiter(',');
  verify->add_option("--trials", vo.trials, "Number of trials")->check(CLI::PositiveNumber);
  add_seed(verify, vo.seed);
  verify->add_option("--tolerance", vo.tolerance, "Relative tolerance")->check(CLI::PositiveNumber);
  verify->add_option("--jobs", vo.jobs, "Worker threads")->check(CLI::PositiveNumber);
  add_output(verify, vo.output, "CSV report");
  verify->add_option("--repro-dir", vo.repro_dir, "Directory for reproduction files");
  verify->add_option("--repro", vo.repro, "Replay a reproduction file instead of fuzzing");
  verify->add_flag("--failures-only", vo.failures_only, "Write only failing rows to the CSV");

  AlignOptions ao;
  auto* align_cmd = app.add_subcommand("align", "Commutator descent over the orthogonal group");
  align_cmd->add_option("--n", ao.n, "Dimension of the seeded symmetric pair")->check(CLI::Range(1, 16));
  align_cmd->add_option("--gauge", ao.gauge, "Well-behaved gauge spec");
  add_seed(align_cmd, ao.seed);
  align_cmd->add_option("--starts", ao.starts, "Multi-start count")->check(CLI::PositiveNumber);
  align_cmd->add_option("--max-iters", ao.max_iters, "Iteration cap")->check(CLI::NonNegativeNumber);
  align_cmd->add_option("--tol", ao.tol_commutator, "Stop when |D|_F falls below this")->check(CLI::PositiveNumber);
  align_cmd->add_option("--tolerance", ao.tolerance, "Relative tolerance of the lower-bound check")
      ->check(CLI::PositiveNumber);
  align_cmd->add_option("--a", ao.a_path, "Symmetric A in matrix text format")->check(CLI::ExistingFile);
  align_cmd->add_option("--b", ao.b_path, "Symmetric B in matrix text format")->check(CLI::ExistingFile);
  align_cmd->add_option("--jobs", ao.jobs, "Worker threads for multi-start")->check(CLI::PositiveNumber);
  add_output(align_cmd, ao.output, "JSON trace");

  RecoverOptions ro;
  auto* recover = app.add_subcommand("recover", "Schatten-p recovery of a seeded low-rank matrix by IRLS");
  recover->add_option("--m", ro.m, "Rows")->check(CLI::Range(1, 64));
  recover->add_option("--n", ro.n, "Columns")->check(CLI::Range(1, 64));
  recover->add_option("--k", ro.k, "Rank of the ground truth")->check(CLI::PositiveNumber);
  recover->add_option("--l", ro.l, "Number of measurements")->check(CLI::PositiveNumber);
  recover->add_option("--p", ro.p, "Schatten exponent in (0, 1]")->check(CLI::Range(0.0, 1.0));
  recover->add_option("--eta", ro.eta, "Residual radius")->check(CLI::NonNegativeNumber);
  add_seed(recover, ro.seed);
  recover->add_option("--success-tol", ro.success_tol, "Relative error counted as success")
      ->check(CLI::PositiveNumber);
  recover->add_option("--instance", ro.instance, "Load the instance from a file")->check(CLI::ExistingFile);
  recover->add_option("--save-instance", ro.save_instance, "Write the instance to a file");
  recover->add_option("--solution", ro.solution, "Write the recovered matrix to a file");
  add_output(recover, ro.output, "JSON summary");

  NullspaceOptions no;
  auto* nullspace = app.add_subcommand("nullspace", "Sample the nullspace condition and build failure witnesses");
  nullspace->add_option("--m", no.m, "Rows")->check(CLI::Range(1, 64));
  nullspace->add_option("--n", no.n, "Columns")->check(CLI::Range(1, 64));
  nullspace->add_option("--l", no.l, "Number of measurements")->check(CLI::PositiveNumber);
  nullspace->add_option("--k", no.k, "Rank level")->check(CLI::PositiveNumber);
  nullspace->add_option("--p", no.p, "Schatten exponent in (0, 1]")->check(CLI::Range(0.0, 1.0));
  nullspace->add_option("--trials", no.trials, "Samples")->check(CLI::PositiveNumber);
  add_seed(nullspace, no.seed);
  nullspace->add_option("--witness", no.witness, "Write Z, Xbar and Xbar_prime to a file");
  add_output(nullspace, no.output, "JSON summary");

  PhaseOptions po;
  auto* phase = app.add_subcommand("phase", "Phase-transition table of IRLS recovery");
  phase->add_option("--m", po.m, "Rows")->check(CLI::Range(1, 64));
  phase->add_option("--n", po.n, "Columns")->check(CLI::Range(1, 64));
  phase->add_option("--k", po.k, "Rank of the ground truth")->check(CLI::PositiveNumber);
  phase->add_option("--p", po.p, "Comma-separated exponents")->delimiter(',')->check(CLI::Range(0.0, 1.0));
  phase->add_option("--l", po.l, "Comma-separated measurement counts")->delimiter(',')->check(CLI::PositiveNumber);
  phase->add_option("--trials", po.trials, "Trials per cell")->check(CLI::PositiveNumber);
  add_seed(phase, po.seed);
  phase->add_option("--success-tol", po.success_tol, "Relative error counted as success")->check(CLI::PositiveNumber);
  phase->add_option("--jobs", po.jobs, "Worker threads")->check(CLI::PositiveNumber);
  add_output(phase, po.output, "CSV table");

  RipOptions rpo;
  auto* rip = app.add_subcommand("rip", "Monte Carlo lower bounds on restricted isometry constants");
  rip->add_option("--m", rpo.m, "Rows")->check(CLI::Range(1, 64));
  rip->add_option("--n", rpo.n, "Columns")->check(CLI::Range(1, 64));
  rip->add_option("--l", rpo.l, "Number of measurements")->check(CLI::PositiveNumber);
  rip->add_option("--r", rpo.r, "Rank")->check(CLI::PositiveNumber);
  rip->add_option("--p", rpo.p, "Also estimate the p-quasi-norm constant")->check(CLI::Range(0.0, 1.0));
  rip->add_option("--trials", rpo.trials, "Samples")->check(CLI::PositiveNumber);
  add_seed(rip, rpo.seed);
  add_output(rip, rpo.output, "JSON summary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_usage;
  }

  try {
    if (*verify) return run_verify(vo);
    if (*align_cmd) return run_align(ao);
    if (*recover) return run_recover(ro);
    if (*nullspace) return run_nullspace(no);
    if (*phase) return run_phase(po);
    if (*rip) return run_rip(rpo);
  } catch (const InvalidInput& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return exit_usage;
  } catch (const NotWellBehaved& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return exit_usage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_failed;
  }
  return exit_usage;
}
