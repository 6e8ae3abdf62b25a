#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>

#include "jil/fit.hpp"
#include "jil/io.hpp"
#include "jil/policy.hpp"
#include "jil/sim.hpp"
#include "jil/tuning.hpp"

namespace {

using namespace jil;

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidPenalty:
    case ErrorKind::BadFoldCount:
    case ErrorKind::BadSpec:
    case ErrorKind::GridTooLarge:
      return kUsage;
    case ErrorKind::InvalidData:
    case ErrorKind::DegenerateTreatment:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::InsufficientData:
    case ErrorKind::SchemaMismatch:
    case ErrorKind::IoError:
    case ErrorKind::DegeneratePartition:
      return kData;
    case ErrorKind::EmptySegment:
    case ErrorKind::MissingTruth:
      return kInternal;
  }
  return kInternal;
}

std::optional<double> parse_auto(const std::string& text, const char* flag) {
  if (text == "auto") return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw CLI::ValidationError(flag, "expected a number or 'auto', got '" + text + "'");
}

Preference::Kind parse_pref(const std::string& s) {
  if (s == "min") return Preference::Kind::MinDose;
  if (s == "max") return Preference::Kind::MaxDose;
  if (s == "uniform") return Preference::Kind::UniformRandom;
  return Preference::Kind::MidPoint;
}

std::string fmt(double v) { return io::format_double(v); }

std::string brief(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct SimulateArgs {
  int scenario = 1;
  std::size_t n = 800;
  std::size_t p = 4;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_simulate(const SimulateArgs& a) {
  const ScenarioSpec spec{scenario_from_int(a.scenario), a.n, a.p, a.seed};
  const auto data = gen_scenario(spec).first;
  io::write_csv(a.out, data);
  return kOk;
}

struct FitArgs {
  std::string data;
  std::string method = "ljil";
  double c = 5.0;
  std::string lambda = "auto";
  std::string gamma = "auto";
  std::size_t folds = 5;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  std::string out;
};

void print_fit_report(std::ostream& os, const JilFit& fit, const ValueReport& v) {
  os << "method\t" << (fit.method == Method::Linear ? "ljil" : "djil") << '\n';
  os << "m\t" << fit.m << '\n';
  os << "lambda\t" << brief(fit.lambda) << '\n';
  os << "gamma\t" << brief(fit.gamma) << '\n';
  os << "intervals\t" << fit.partition.size() << '\n';
  os << "change_points";
  for (int b : fit.partition.interior_boundaries()) {
    os << '\t' << brief(static_cast<double>(b) / fit.m);
  }
  os << '\n';
  for (std::size_t k = 0; k < fit.partition.size(); ++k) {
    const Interval& iv = fit.partition[k];
    os << "interval\t" << brief(iv.left()) << '\t' << brief(iv.right());
    if (const auto* lin = std::get_if<LinearModel>(&fit.models[k])) {
      for (double t : lin->theta) os << '\t' << brief(t);
    }
    os << '\n';
  }
  os << "objective\t" << brief(fit.objective) << '\n';
  os << "value\t" << fmt(v.v_hat) << '\n';
  os << "sigma\t" << fmt(v.sigma_hat) << '\n';
  os << "ci\t" << fmt(v.ci_lo) << '\t' << fmt(v.ci_hi) << '\n';
}

int cmd_fit(const FitArgs& a) {
  const auto lambda_arg = parse_auto(a.lambda, "--lambda");
  const auto gamma_arg = parse_auto(a.gamma, "--gamma");
  if (a.method != "ljil" && a.method != "djil") {
    throw CLI::ValidationError("--method", "expected ljil or djil");
  }
  Dataset data = io::read_csv(a.data);
  const auto scale = io::normalize_if_needed(data);
  validate_dataset(data);
  const int m = make_grid(data.n, a.c);

  TuningGrid grid = default_grid(data.n, a.seed);
  grid.k_folds = a.folds;
  if (lambda_arg) grid.lambdas = {*lambda_arg};
  if (gamma_arg) grid.gammas = {*gamma_arg};

  JilFit fit;
  if (a.method == "ljil") {
    double lambda = grid.lambdas.front();
    double gamma = grid.gammas.front();
    if (grid.lambdas.size() > 1 || grid.gammas.size() > 1) {
      const CvReport cv = cv_select_ljil(data, m, grid);
      lambda = cv.best_lambda;
      gamma = cv.best_gamma;
    }
    fit = fit_ljil(data, m, lambda, gamma);
  } else {
    TrainConfig cfg = default_train_config();
    cfg.seed = a.seed;
    double gamma = grid.gammas.front();
    if (grid.gammas.size() > 1) {
      gamma = cv_select_djil(data, m, grid.gammas, grid.k_folds, cfg, a.seed).best_gamma;
    }
    fit = fit_djil(data, m, gamma, cfg);
  }

  io::ModelArtifact artifact;
  artifact.propensity = fit_propensity(data, fit.partition);
  artifact.provenance = {data.n, data.p, a.seed, io::timestamp_now(), scale};
  artifact.fit = std::move(fit);
  const I2dr rule(artifact.fit);
  const ValueReport value = estimate_value(data, rule, artifact.propensity, a.alpha);
  io::save_artifact(a.out, artifact);
  print_fit_report(std::cout, artifact.fit, value);
  return kOk;
}

struct EvaluateArgs {
  std::string model;
  std::string data;
  double alpha = 0.05;
  std::string pref = "mid";
  std::string plot_data;
};

int cmd_evaluate(const EvaluateArgs& a) {
  const io::ModelArtifact artifact = io::load_artifact(a.model);
  Dataset data = io::read_csv(a.data);
  if (data.p != io::model_inputs(artifact.fit)) {
    throw Error(ErrorKind::SchemaMismatch,
                "model expects p = " + std::to_string(io::model_inputs(artifact.fit)) +
                    " but data has p = " + std::to_string(data.p));
  }
  if (const auto& scale = artifact.provenance.treatment_scale) {
    for (double& t : data.treatments) t = scale->apply(t);
  }
  validate_dataset(data);
  const I2dr rule(artifact.fit);
  const ValueReport v = estimate_value(data, rule, artifact.propensity, a.alpha);

  if (!a.plot_data.empty()) {
    DoseSelector dose(Preference{parse_pref(a.pref), artifact.provenance.seed});
    std::ostringstream os;
    os << "index\tlo\thi\tdose\n";
    for (std::size_t i = 0; i < data.n; ++i) {
      const Interval iv = rule.recommend(data.row(i));
      os << i << '\t' << fmt(iv.left()) << '\t' << fmt(iv.right()) << '\t'
         << fmt(dose(iv)) << '\n';
    }
    io::write_atomic(a.plot_data, os.str());
  }

  nlohmann::json out{{"v_hat", v.v_hat},     {"sigma_hat", v.sigma_hat},
                     {"std_error", v.std_error()}, {"ci_lo", v.ci_lo},
                     {"ci_hi", v.ci_hi},     {"alpha", v.alpha},
                     {"n", v.n}};
  std::cout << out.dump(2) << '\n';
  return kOk;
}

struct BenchArgs {
  int scenario = 1;
  std::size_t n = 800;
  std::size_t p = 4;
  std::size_t reps = 100;
  std::string method = "ljil";
  double c = 5.0;
  std::uint64_t seed = 0;
};

int cmd_bench(const BenchArgs& a) {
  if (a.method != "ljil" && a.method != "djil") {
    throw CLI::ValidationError("--method", "expected ljil or djil");
  }
  ReplicationConfig cfg;
  cfg.scenario = scenario_from_int(a.scenario);
  cfg.n = a.n;
  cfg.p = a.p;
  cfg.reps = a.reps;
  cfg.method = a.method == "ljil" ? Method::Linear : Method::Deep;
  cfg.c = a.c;
  cfg.seed = a.seed;
  cfg.train = default_train_config();
  const ReplicationSummary s = replicate(cfg);
  char row[512];
  std::snprintf(row, sizeof row,
                "%d\t%zu\t%zu\t%s\t%zu\t%.3f\t%.3f\t%.2f\t%.2f\t%.3f\t%.2f\n",
                a.scenario, a.n, a.p, a.method.c_str(), a.reps, s.mean_value,
                s.mean_std_error, s.coverage, s.mean_partitions, s.mean_l2_loss,
                s.optimal_value);
  std::cout << "scenario\tn\tp\tmethod\treps\tvalue\tstd_error\tcoverage\t"
               "partitions\tl2_loss\toptimal\n"
            << row;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Jump interval-learning for individualized dose intervals"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a scenario dataset as CSV");
  simulate->add_option("--scenario", sim.scenario)->check(CLI::Range(1, 5));
  simulate->add_option("--n", sim.n)->required();
  simulate->add_option("--p", sim.p);
  simulate->add_option("--seed", sim.seed);
  simulate->add_option("--out", sim.out)->required();

  FitArgs fit;
  auto* fitcmd = app.add_subcommand("fit", "Fit a rule and write a model artifact");
  fitcmd->add_option("--data", fit.data)->required();
  fitcmd->add_option("--method", fit.method)->check(CLI::IsMember({"ljil", "djil"}));
  fitcmd->add_option("--c", fit.c)->check(CLI::PositiveNumber);
  fitcmd->add_option("--lambda", fit.lambda);
  fitcmd->add_option("--gamma", fit.gamma);
  fitcmd->add_option("--folds", fit.folds);
  fitcmd->add_option("--alpha", fit.alpha)->check(CLI::Range(0.0, 1.0));
  fitcmd->add_option("--seed", fit.seed);
  fitcmd->add_option("--out", fit.out)->required();

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Estimate the value of a saved rule");
  evaluate->add_option("--model", ev.model)->required();
  evaluate->add_option("--data", ev.data)->required();
  evaluate->add_option("--alpha", ev.alpha)->check(CLI::Range(0.0, 1.0));
  evaluate->add_option("--pref", ev.pref)->check(CLI::IsMember({"min", "max", "mid", "uniform"}));
  evaluate->add_option("--plot-data", ev.plot_data);

  BenchArgs bench;
  auto* benchcmd = app.add_subcommand("bench", "Replicated simulation summary row");
  benchcmd->add_option("--scenario", bench.scenario)->check(CLI::Range(1, 5));
  benchcmd->add_option("--n", bench.n);
  benchcmd->add_option("--p", bench.p);
  benchcmd->add_option("--reps", bench.reps);
  benchcmd->add_option("--method", bench.method)->check(CLI::IsMember({"ljil", "djil"}));
  benchcmd->add_option("--c", bench.c)->check(CLI::PositiveNumber);
  benchcmd->add_option("--seed", bench.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*simulate) return cmd_simulate(sim);
    if (*fitcmd) return cmd_fit(fit);
    if (*evaluate) return cmd_evaluate(ev);
    if (*benchcmd) return cmd_bench(bench);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const InvalidDataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kUsage;
}
