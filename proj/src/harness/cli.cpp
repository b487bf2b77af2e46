#include "tvopt/harness/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "tvopt/harness/report.hpp"
#include "tvopt/harness/scenarios.hpp"
#include "tvopt/harness/suites.hpp"

namespace tvopt::harness {

namespace {

enum class LogLevel { Quiet, Info, Debug };

LogLevel log_level() {
  const char* env = std::getenv("TVOPT_LOG");
  const std::string v = env ? env : "info";
  if (v == "quiet") return LogLevel::Quiet;
  if (v == "debug") return LogLevel::Debug;
  return LogLevel::Info;
}

struct Logger {
  std::ostream& err;
  LogLevel level = log_level();

  void info(const std::string& msg) const {
    if (level != LogLevel::Quiet) err << "[info] " << msg << '\n';
  }
  void debug(const std::string& msg) const {
    if (level == LogLevel::Debug) err << "[debug] " << msg << '\n';
  }
  void warn(const std::string& msg) const {
    if (level != LogLevel::Quiet) err << "[warn] " << msg << '\n';
  }
};

struct CommonOptions {
  std::string config;
  std::string builtin;
  std::optional<double> t;
  std::string xi;
  std::optional<double> step;
  std::optional<double> horizon;
  std::string out_dir;
  std::uint64_t seed = 42;
  bool fd_check = false;
  std::string constants = "paper";
  std::string suite = "all";
};

ScenarioBundle load_bundle(const CommonOptions& o) {
  if (o.config.empty() == o.builtin.empty()) {
    throw Error(ErrorCode::ConfigError, "exactly one of --config or --builtin is required");
  }
  ScenarioBundle b = o.builtin.empty() ? build_scenario(load_config_file(o.config)) : builtin_scenario(o.builtin);
  if (o.horizon) {
    if (!(*o.horizon > 0)) throw Error(ErrorCode::ConfigError, "--horizon must be positive");
    b.scenario.horizon = *o.horizon;
    b.config.horizon = *o.horizon;
  }
  return b;
}

double parameter_time(const CommonOptions& o) {
  if (!o.xi.empty()) {
    if (o.t) throw Error(ErrorCode::ConfigError, "--t and --xi are mutually exclusive");
    if (o.xi.find(',') != std::string::npos) {
      throw Error(ErrorCode::ConfigError, "scenario problems have a scalar parameter; --xi takes one value");
    }
    return parse_double(o.xi);
  }
  return o.t.value_or(0.0);
}

std::string join(const std::vector<int>& idx) {
  std::string s;
  for (std::size_t i = 0; i < idx.size(); ++i) s += (i ? "," : "") + std::to_string(idx[i]);
  return s;
}

void print_matrix(KeyValueRecord& rec, const std::string& key, const Matrix& M) {
  for (Eigen::Index j = 0; j < M.cols(); ++j) {
    rec.set(M.cols() == 1 ? key : key + "[" + std::to_string(j) + "]", Vector(M.col(j)));
  }
}

int cmd_solve(const CommonOptions& o, std::ostream& out, const Logger& log) {
  const ScenarioBundle b = load_bundle(o);
  const double t = parameter_time(o);
  log.info("solving " + b.scenario.name + " at t=" + format_double(t));
  const KKTTriple pt = instantaneous_optimizer(b.scenario, t);
  const ParametrizedNLP prob = scenario_nlp(b.scenario);
  const auto reg = check_regularity(prob, pt);
  const auto cls = classify_active_set(prob, pt);

  KeyValueRecord rec;
  rec.set("scenario", b.scenario.name);
  rec.set("t", t);
  rec.set("x", pt.x);
  rec.set("lambda", pt.lambda);
  rec.set("mu", pt.mu);
  rec.set("active", join(cls.active));
  rec.set("kkt_residual", reg.kkt_residual);
  rec.set("licq", reg.licq);
  rec.set("licq_sigma_min", reg.licq_sigma_min);
  rec.set("ssosc", reg.ssosc);
  rec.set("ssosc_min_eigenvalue", reg.ssosc_min_eigenvalue);
  rec.set("scs", reg.scs);
  rec.set("regular", reg.is_regular_minimizer);
  rec.set("fd_derivatives", reg.fd_derivatives);
  out << rec.serialize();
  return reg.is_regular_minimizer ? kExitOk : kExitSolver;
}

int cmd_jacobian(const CommonOptions& o, std::ostream& out, const Logger& log) {
  const ScenarioBundle b = load_bundle(o);
  const double t = parameter_time(o);
  const ParametrizedNLP prob = scenario_nlp(b.scenario);
  const KKTTriple pt = instantaneous_optimizer(b.scenario, t);
  const auto cls = classify_active_set(prob, pt);

  KeyValueRecord rec;
  rec.set("scenario", b.scenario.name);
  rec.set("t", t);
  rec.set("x", pt.x);
  rec.set("active", join(cls.active));
  rec.set("scs", cls.strict_complementarity());
  if (!cls.strict_complementarity()) {
    log.warn("strict complementarity fails (weakly active: " + join(cls.weakly_active) +
             "); the solution map may not be differentiable, reporting the weakly-active bound");
    const auto deg = degenerate_lipschitz_bounds(prob, pt);
    const KeyValueRecord bound = bound_record(deg.report);
    for (const auto& [k, v] : bound.entries()) rec.set("bound." + k, v);
    out << rec.serialize();
    return kExitOk;
  }
  const auto blocks = assemble_blocks(prob, pt, cls.active);
  const auto J = solution_jacobian(blocks);
  print_matrix(rec, "dx_dt", J.dx_dxi);
  print_matrix(rec, "dlm_dt", J.dlm_full);
  const auto local = local_lipschitz_bounds(blocks);
  const KeyValueRecord bound = bound_record(local);
  for (const auto& [k, v] : bound.entries()) rec.set("bound." + k, v);
  if (o.fd_check) {
    const Matrix fd = fd_jacobian_oracle(prob, pt);
    print_matrix(rec, "fd_dx_dt", fd);
    const double dev = (J.dx_dxi - fd).cwiseAbs().maxCoeff() / std::max(1.0, J.dx_dxi.cwiseAbs().maxCoeff());
    rec.set("fd_max_rel_deviation", dev);
    rec.set("fd_agreement", dev <= 1e-5);
  }
  out << rec.serialize();
  return kExitOk;
}

int cmd_bounds(const CommonOptions& o, std::ostream& out, const Logger& log) {
  const ScenarioBundle b = load_bundle(o);
  const auto mode = parse_constants_mode(o.constants);
  log.info("computing bounds for " + b.scenario.name + " (" + to_string(mode) + " constants)");
  const auto res = scenario_bounds(b, mode);
  KeyValueRecord rec;
  rec.set("scenario", b.scenario.name);
  rec.set("constants_mode", to_string(mode));
  rec.set("formula", res.lipschitz.mode);
  rec.set("ell_t", res.ell_t);
  rec.set("ell_lm", res.lipschitz.ell_lm);
  rec.set("bound", res.bound);
  rec.set("strict_bound", res.strict_bound);
  for (const auto& [k, v] : res.constants) {
    if (k != "ell_t" && k != "bound" && k != "strict_bound") rec.set("constant." + k, v);
  }
  rec.set("omega_source", b.omega_source);
  rec.set("label", res.lipschitz.label);
  out << rec.serialize();
  return kExitOk;
}

int cmd_track(const CommonOptions& o, std::ostream& out, const Logger& log) {
  const ScenarioBundle b = load_bundle(o);
  const auto mode = parse_constants_mode(o.constants);
  const double h = o.step.value_or(b.config.step);
  if (!(h > 0)) throw Error(ErrorCode::ConfigError, "--step must be positive");
  const auto bounds = scenario_bounds(b, mode);
  log.info("tracking " + b.scenario.name + " with h=" + format_double(h) + " over [0, " +
           format_double(b.scenario.horizon) + "]");

  const RunResult run = run_and_certify(b.scenario, b.config.x0, h, bounds.a, bounds.ell_t);
  auto constants = bounds.constants;
  constants.erase("bound");
  constants["step"] = h;
  constants["horizon"] = b.scenario.horizon;
  const RunReport report = make_run_report(b.scenario.name, to_string(mode), run.certificate, constants);
  const std::string text = report.to_record().serialize();

  if (!o.out_dir.empty()) {
    std::filesystem::create_directories(o.out_dir);
    const auto dir = std::filesystem::path(o.out_dir);
    std::ofstream csv(dir / "trajectory.csv");
    std::ofstream rep(dir / "report.txt");
    if (!csv || !rep) throw Error(ErrorCode::ConfigError, "cannot write to '" + o.out_dir + "'");
    write_trajectory_csv(csv, run.trajectory);
    rep << text;
    log.debug("wrote " + (dir / "trajectory.csv").string());
  }
  if (run.certificate.terminated_early) {
    log.info("constraint set became empty after t=" + format_double(run.certificate.feasible_window_end));
  }
  out << text;
  return report.passed ? kExitOk : kExitCertificate;
}

int cmd_verify(const CommonOptions& o, std::ostream& out, const Logger& log) {
  std::vector<std::string> names = o.suite == "all" ? suite_names() : std::vector<std::string>{o.suite};
  bool all_ok = true;
  for (const auto& name : names) {
    log.info("running suite " + name + " (seed " + std::to_string(o.seed) + ")");
    const SuiteResult r = run_suite(name, o.seed);
    KeyValueRecord rec;
    rec.set("suite", r.name);
    rec.set("seed", std::to_string(o.seed));
    rec.set("passed", std::to_string(r.passed));
    rec.set("total", std::to_string(r.total));
    rec.set(r.metric, r.worst);
    for (const auto& [k, v] : r.extra) rec.set(k, v);
    rec.set("status", std::string(r.ok() ? "pass" : "fail"));
    out << rec.serialize();
    all_ok = all_ok && r.ok();
  }
  return all_ok ? kExitOk : kExitCertificate;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::UnknownCase:
    case ErrorCode::MissingConstant:
    case ErrorCode::MissingDerivative:
    case ErrorCode::MissingCertificates:
    case ErrorCode::DimensionMismatch:
      return kExitConfig;
    default:
      return kExitSolver;
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sensitivity bounds and tracking certificates for parametrized programs", "tvopt"};
  app.require_subcommand(1);
  CommonOptions o;

  auto scenario_opts = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Scenario config file (JSON)");
    sub->add_option("--builtin", o.builtin, "Builtin scenario: paper-ex1 | paper-ex2");
    sub->add_option("--horizon", o.horizon, "Override the horizon T");
    sub->add_option("--seed", o.seed, "Seed (echoed; scenario commands are deterministic)");
  };

  auto* solve = app.add_subcommand("solve", "Solve the instance at a fixed time");
  scenario_opts(solve);
  solve->add_option("--t", o.t, "Time / parameter value");
  solve->add_option("--xi", o.xi, "Parameter value (alias of --t)");

  auto* jac = app.add_subcommand("jacobian", "Solution-map Jacobian at a fixed time");
  scenario_opts(jac);
  jac->add_option("--t", o.t, "Time / parameter value");
  jac->add_option("--xi", o.xi, "Parameter value (alias of --t)");
  jac->add_flag("--fd-check", o.fd_check, "Compare against central finite differences");

  auto* bounds = app.add_subcommand("bounds", "Lipschitz and tracking bounds");
  scenario_opts(bounds);
  bounds->add_option("--constants", o.constants, "paper | strict");

  auto* track = app.add_subcommand("track", "Run the flow and certify tracking");
  scenario_opts(track);
  track->add_option("--step", o.step, "Step size h");
  track->add_option("--out", o.out_dir, "Directory for trajectory.csv and report.txt");
  track->add_option("--constants", o.constants, "paper | strict");

  auto* verify = app.add_subcommand("verify", "Seeded property suites");
  verify->add_option("--suite", o.suite, "lemma1 | fd-jacobian | block-inverse | all");
  verify->add_option("--seed", o.seed, "Random seed");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "ConfigError: " << e.what() << '\n';
    return kExitConfig;
  }

  const Logger log{err};
  try {
    if (solve->parsed()) return cmd_solve(o, out, log);
    if (jac->parsed()) return cmd_jacobian(o, out, log);
    if (bounds->parsed()) return cmd_bounds(o, out, log);
    if (track->parsed()) return cmd_track(o, out, log);
    return cmd_verify(o, out, log);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitSolver;
  }
}

}  // namespace tvopt::harness
