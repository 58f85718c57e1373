#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "io.hpp"
#include "tpbn/tpbn.hpp"

namespace tpbn::cli {

namespace fs = std::filesystem;

namespace {

struct FitArgs {
  std::string input;
  std::string output;
  std::string chain_out;
  std::string method;
  double a = 0.5;
  double b = 0.5;
  std::string phi = "1";
  double c0 = 0.0;
  double d0 = 0.0;
  std::size_t iters = 10000;
  std::size_t burnin = 2000;
  std::size_t thin = 1;
  double tol = 0.0;           // 0: engine default
  std::size_t max_iter = 0;   // 0: engine default
  std::uint64_t seed = 1;
  bool standardize = false;
  bool header = false;
  double shrink_threshold = 0.5;
  double shrink_prob = 0.99;
  bool timing = false;
};

struct SimulateArgs {
  std::string which_case;
  Index n = 0;
  Index p = 0;
  std::size_t replicates = 1;
  std::uint64_t seed = 1;
  std::string out_dir;
  Index k = 10;
  double signal = 3.0;
  double noise_sd = 3.0;
};

struct BenchmarkArgs {
  std::string which_case = "1";
  Index n = 0;  // 0: by case
  Index p = 0;
  std::size_t replicates = 100;
  std::string methods = "vb:0.5:0.5:cauchy";
  std::size_t bootstrap = 2000;
  std::size_t folds = 10;
  std::uint64_t seed = 1;
  std::string out;
  std::size_t iters = 6000;
  std::size_t burnin = 1000;
  std::size_t thin = 5;
  double shrink_threshold = 0.5;
  double shrink_prob = 0.99;
  bool timing = false;
};

struct CalibrateArgs {
  double a = 1.0;
  double b = 0.5;
  double threshold = 0.5;
  double target = 0.99;
};

// "--phi" value: a positive number, "auto" (calibrated) or "cauchy" (hierarchical).
TpbParams resolve_tpb(double a, double b, const std::string& phi, double threshold, double prob) {
  if (phi == "cauchy") return TpbParams::half_cauchy(a, b);
  if (phi == "auto") return TpbParams::fixed(a, b, calibrate_phi(a, b, threshold, prob));
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(phi, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != phi.size() || !(value > 0.0) || !std::isfinite(value)) {
    throw UsageError("--phi must be a positive number, 'auto' or 'cauchy' (got '" + phi + "')");
  }
  return TpbParams::fixed(a, b, value);
}

Json beta_field(const VectorXd& v, Index j) {
  if (v.size() == 0) return nullptr;
  return v(j);
}

void emit(const std::string& path, const Json& doc, std::ostream& out) {
  const std::string text = dump_json(doc);
  if (path.empty()) {
    out << text;
  } else {
    write_text(path, text);
  }
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory: " + dir);
}

std::string replicate_name(std::size_t i, const char* suffix) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "replicate_%04zu%s", i, suffix);
  return buf;
}

// ---------------------------------------------------------------------------

int cmd_fit(const FitArgs& f, std::ostream& out, std::ostream& err) {
  detail::require_usage(f.method == "gibbs" || f.method == "vb" || f.method == "map",
                        "--method must be one of gibbs, vb, map");
  detail::require_usage(f.chain_out.empty() || f.method == "gibbs", "--chain-out applies to --method gibbs only");
  Stopwatch clock;
  const CsvTable table = read_csv(f.input, f.header);
  if (table.values.cols() < 2) throw UsageError("input needs a response column and at least one predictor column");
  RegressionDataset raw;
  raw.y = table.values.col(0);
  raw.X = table.values.rightCols(table.values.cols() - 1);
  const Index p = raw.p();

  std::optional<Standardization> rec;
  RegressionDataset work = raw;
  if (f.standardize) {
    auto [std_data, s] = standardize(raw);
    work = std::move(std_data);
    rec = s;
  }
  const PriorConfig prior{resolve_tpb(f.a, f.b, f.phi, f.shrink_threshold, f.shrink_prob), f.c0, f.d0};
  prior.validate();

  Json config = Json::object();
  config["input"] = f.input;
  config["header"] = f.header;
  config["method"] = f.method;
  config["a"] = f.a;
  config["b"] = f.b;
  config["phi"] = f.phi;
  if (f.phi == "auto") {
    config["shrink-threshold"] = f.shrink_threshold;
    config["shrink-prob"] = f.shrink_prob;
  }
  config["c0"] = f.c0;
  config["d0"] = f.d0;
  config["standardize"] = f.standardize;

  FitReport rep;
  std::vector<bool> active;
  if (f.method == "gibbs") {
    config["iters"] = f.iters;
    config["burnin"] = f.burnin;
    config["thin"] = f.thin;
    config["seed"] = f.seed;
    const GibbsSchedule schedule{f.iters, f.burnin, f.thin, true};
    GibbsResult res = run_gibbs(work, prior, schedule, f.seed);
    rep = std::move(res.report);
    if (!f.chain_out.empty()) {
      std::vector<std::string> head{"iteration", "sigma2", "phi", "omega"};
      for (const char* block : {"beta", "tau", "lambda"}) {
        for (Index j = 0; j < p; ++j) head.push_back(std::string(block) + "_" + std::to_string(j + 1));
      }
      const auto& draws = res.chain.draws;
      MatrixXd m(static_cast<Index>(draws.size()), 4 + 3 * p);
      for (std::size_t k = 0; k < draws.size(); ++k) {
        const auto r = static_cast<Index>(k);
        const GibbsState& s = draws[k];
        m(r, 0) = static_cast<double>(schedule.burn_in + (k + 1) * schedule.thin);
        m(r, 1) = 1.0 / s.sigma2_inv;
        m(r, 2) = s.phi;
        m(r, 3) = s.omega;
        m.row(r).segment(4, p) = s.beta.transpose();
        m.row(r).segment(4 + p, p) = s.tau.transpose();
        m.row(r).segment(4 + 2 * p, p) = s.lambda.transpose();
      }
      write_csv(f.chain_out, head, m);
    }
  } else if (f.method == "vb") {
    VbOptions opt;
    if (f.tol > 0.0) opt.tol = f.tol;
    if (f.max_iter > 0) opt.max_iter = f.max_iter;
    config["tol"] = opt.tol;
    config["max-iter"] = opt.max_iter;
    rep = run_vb(work, prior, opt).report;
  } else {
    EmOptions opt;
    if (f.tol > 0.0) opt.tol = f.tol;
    if (f.max_iter > 0) opt.max_iter = f.max_iter;
    config["tol"] = opt.tol;
    config["max-iter"] = opt.max_iter;
    EmResult res = run_em(work, prior, opt);
    active = res.state.active;
    rep = std::move(res.report);
  }

  double intercept = 0.0;
  if (rec) {
    const VectorXd inv_scale = rec->x_scale.cwiseInverse();
    intercept = rec->back_transform(rep.beta).second;
    rep.beta = rep.beta.cwiseProduct(inv_scale);
    if (rep.beta_sd.size()) rep.beta_sd = rep.beta_sd.cwiseProduct(inv_scale);
    if (rep.beta_lower.size()) rep.beta_lower = rep.beta_lower.cwiseProduct(inv_scale);
    if (rep.beta_upper.size()) rep.beta_upper = rep.beta_upper.cwiseProduct(inv_scale);
  }

  Json result = Json::object();
  result["method"] = rep.method;
  result["n"] = raw.n();
  result["p"] = p;
  result["converged"] = rep.converged;
  result["iterations"] = rep.iterations;
  if (f.method == "gibbs") {
    result["draws"] = rep.draws;
    result["seed"] = rep.seed;
  }
  result["sigma2"] = rep.sigma2;
  result["phi"] = rep.phi ? Json(*rep.phi) : Json(nullptr);
  if (rec) result["intercept"] = intercept;
  Json coefs = Json::array();
  for (Index j = 0; j < p; ++j) {
    Json c = Json::object();
    const auto col = static_cast<std::size_t>(j + 1);
    c["name"] = col < table.header.size() ? table.header[col] : "x" + std::to_string(j + 1);
    c["estimate"] = rep.beta(j);
    c["sd"] = beta_field(rep.beta_sd, j);
    c["lower"] = beta_field(rep.beta_lower, j);
    c["upper"] = beta_field(rep.beta_upper, j);
    if (!active.empty()) c["zero"] = !active[static_cast<std::size_t>(j)];
    coefs.push_back(std::move(c));
  }
  result["coefficients"] = std::move(coefs);
  result["warnings"] = rep.warnings;

  Json doc = Json::object();
  doc["command"] = "fit";
  doc["config"] = std::move(config);
  doc["result"] = std::move(result);
  if (f.timing) doc["wall_seconds"] = clock.seconds();
  for (const auto& w : rep.warnings) err << "warning: " << w << "\n";
  emit(f.output, doc, out);
  return kExitOk;
}

int cmd_simulate(const SimulateArgs& s, std::ostream& out) {
  const bool highdim = s.which_case == "highdim";
  detail::require_usage(highdim || s.which_case == "1" || s.which_case == "2", "--case must be 1, 2 or highdim");
  const Index n = s.n > 0 ? s.n : (highdim ? 100 : s.which_case == "2" ? 250 : 50);
  const Index p = s.p > 0 ? s.p : (highdim ? 10000 : s.which_case == "2" ? 100 : 20);
  detail::require_usage(s.replicates >= 1, "--replicates must be at least 1");
  ensure_dir(s.out_dir);

  Json config = Json::object();
  config["case"] = s.which_case;
  config["n"] = n;
  config["p"] = p;
  config["replicates"] = s.replicates;
  config["seed"] = s.seed;
  if (highdim) {
    config["k"] = s.k;
    config["signal"] = s.signal;
    config["noise-sd"] = s.noise_sd;
  }

  CaseSpec spec = s.which_case == "2" ? CaseSpec::case2(n, p) : CaseSpec::case1(n, p);
  spec.seed = s.seed;
  spec.replicates = s.replicates;

  std::vector<std::string> head{"y"};
  for (Index j = 0; j < p; ++j) head.push_back("x" + std::to_string(j + 1));
  Json reps = Json::array();
  for (std::size_t i = 0; i < s.replicates; ++i) {
    const RegressionDataset d = highdim ? gen_highdim(n, p, s.k, s.signal, s.noise_sd, s.seed, i) : gen_case(spec, i);
    MatrixXd table(n, p + 1);
    table.col(0) = d.y;
    table.rightCols(p) = d.X;
    const std::string data_file = replicate_name(i, ".csv");
    write_csv(fs::path(s.out_dir) / data_file, head, table);
    Json r = Json::object();
    r["index"] = i;
    r["seed"] = s.seed;
    r["data"] = data_file;
    if (d.design_cov) {
      const std::string cov_file = replicate_name(i, "_cov.csv");
      write_csv(fs::path(s.out_dir) / cov_file, {}, *d.design_cov);
      r["design_cov"] = cov_file;
    } else {
      r["design_cov"] = "identity";
    }
    r["noise_sd"] = *d.noise_sd;
    r["snr"] = snr(d);
    r["nonzero"] = static_cast<std::size_t>((d.true_beta->array() != 0.0).count());
    r["true_beta"] = to_json(*d.true_beta);
    reps.push_back(std::move(r));
  }
  Json doc = Json::object();
  doc["command"] = "simulate";
  doc["config"] = std::move(config);
  doc["replicates"] = std::move(reps);
  write_text(fs::path(s.out_dir) / "manifest.json", dump_json(doc));
  out << "wrote " << s.replicates << " replicate(s) to " << s.out_dir << "\n";
  return kExitOk;
}

std::vector<MethodSpec> parse_methods(const std::string& text, double threshold, double prob) {
  std::vector<MethodSpec> methods;
  std::stringstream list(text);
  std::string token;
  while (std::getline(list, token, ',')) {
    if (token.empty()) continue;
    std::vector<std::string> parts;
    std::stringstream ts(token);
    std::string part;
    while (std::getline(ts, part, ':')) parts.push_back(part);
    MethodSpec m;
    m.label = token;
    if (parts[0] == "lasso" && parts.size() == 1) {
      m.engine = Engine::lasso;
    } else {
      if (parts.size() != 4) {
        throw UsageError("--methods entry '" + token + "' must be 'lasso' or engine:a:b:phi");
      }
      if (parts[0] == "vb") {
        m.engine = Engine::vb;
      } else if (parts[0] == "gibbs") {
        m.engine = Engine::gibbs;
      } else if (parts[0] == "map") {
        m.engine = Engine::map;
      } else {
        throw UsageError("unknown engine '" + parts[0] + "' in --methods");
      }
      double a = 0.0;
      double b = 0.0;
      try {
        a = std::stod(parts[1]);
        b = std::stod(parts[2]);
      } catch (const std::exception&) {
        throw UsageError("--methods entry '" + token + "': a and b must be numbers");
      }
      m.tpb = resolve_tpb(a, b, parts[3], threshold, prob);
      m.tpb.validate();
    }
    methods.push_back(std::move(m));
  }
  detail::require_usage(!methods.empty(), "--methods must list at least one method");
  return methods;
}

int cmd_benchmark(const BenchmarkArgs& a, std::ostream& out) {
  detail::require_usage(a.which_case == "1" || a.which_case == "2", "--case must be 1 or 2 for benchmark");
  Stopwatch clock;
  CaseSpec spec = a.which_case == "2" ? CaseSpec::case2() : CaseSpec::case1();
  if (a.n > 0) spec.n = a.n;
  if (a.p > 0) spec.p = a.p;
  spec.replicates = a.replicates;
  spec.seed = a.seed;
  const auto methods = parse_methods(a.methods, a.shrink_threshold, a.shrink_prob);
  BenchmarkOptions opt;
  opt.bootstrap = a.bootstrap;
  opt.folds = a.folds;
  opt.gibbs = GibbsSchedule{a.iters, a.burnin, a.thin, false};
  opt.gibbs.validate();
  ensure_dir(a.out);

  const BenchmarkResult res = run_benchmark(spec, methods, opt);

  std::string csv = "replicate,method,model_error,rme,snr,sparsity,converged\n";
  for (const auto& r : res.records) {
    csv += std::to_string(r.replicate) + "," + r.method + "," + format_double(r.model_error) + "," +
           format_double(r.rme) + "," + format_double(r.snr) + "," + std::to_string(r.sparsity_count) + "," +
           (r.converged ? "true" : "false") + "\n";
  }
  write_text(fs::path(a.out) / "benchmark.csv", csv);

  Json config = Json::object();
  config["case"] = a.which_case;
  config["n"] = spec.n;
  config["p"] = spec.p;
  config["replicates"] = a.replicates;
  config["methods"] = a.methods;
  config["bootstrap"] = a.bootstrap;
  config["folds"] = a.folds;
  config["seed"] = a.seed;
  config["iters"] = a.iters;
  config["burnin"] = a.burnin;
  config["thin"] = a.thin;
  config["shrink-threshold"] = a.shrink_threshold;
  config["shrink-prob"] = a.shrink_prob;

  Json summaries = Json::array();
  for (const auto& s : res.summaries) {
    Json m = Json::object();
    m["method"] = s.method;
    m["records"] = s.records;
    m["failures"] = s.failures;
    m["median_rme"] = s.median_rme;
    m["bootstrap_q025"] = s.boot_q025;
    m["bootstrap_q500"] = s.boot_q500;
    m["bootstrap_q975"] = s.boot_q975;
    summaries.push_back(std::move(m));
  }
  Json failures = Json::array();
  for (const auto& f : res.failures) {
    failures.push_back(Json{{"replicate", f.replicate}, {"method", f.method}, {"message", f.message}});
  }
  Json doc = Json::object();
  doc["command"] = "benchmark";
  doc["config"] = std::move(config);
  doc["methods"] = std::move(summaries);
  doc["failures"] = std::move(failures);
  if (a.timing) doc["wall_seconds"] = clock.seconds();
  write_text(fs::path(a.out) / "summary.json", dump_json(doc));
  for (const auto& s : res.summaries) {
    out << s.method << ": median RME " << format_double(s.median_rme) << " [" << format_double(s.boot_q025) << ", "
        << format_double(s.boot_q975) << "] over " << s.records << " replicate(s)\n";
  }
  return kExitOk;
}

int cmd_calibrate(const CalibrateArgs& c, std::ostream& out) {
  const double phi = calibrate_phi(c.a, c.b, c.threshold, c.target);
  const double above = 1.0 - tpb_cdf(c.threshold, TpbParams::fixed(c.a, c.b, phi));
  out << "phi " << format_double(phi) << "\n";
  out << "p_above_threshold " << format_double(above) << "\n";
  return kExitOk;
}

// Expands "--config FILE" into command-line options placed before the
// explicit ones, so explicit flags win.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> rest;
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config needs a file argument");
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (path.empty() || rest.empty()) return rest;
  Json doc;
  try {
    doc = Json::parse(read_text(path));
  } catch (const Json::exception& e) {
    throw UsageError("--config: " + path + " is not valid JSON (" + e.what() + ")");
  }
  const Json& cfg = doc.contains("config") ? doc["config"] : doc;
  detail::require_usage(cfg.is_object(), "--config: expected a JSON object");
  std::vector<std::string> expanded{rest.front()};
  for (auto it = cfg.begin(); it != cfg.end(); ++it) {
    const std::string flag = "--" + it.key();
    const Json& v = it.value();
    if (v.is_boolean()) {
      if (v.get<bool>()) expanded.push_back(flag);
    } else if (v.is_number_float()) {
      expanded.push_back(flag);
      expanded.push_back(format_double(v.get<double>()));
    } else if (v.is_number()) {
      expanded.push_back(flag);
      expanded.push_back(v.dump());
    } else if (v.is_string()) {
      expanded.push_back(flag);
      expanded.push_back(v.get<std::string>());
    } else {
      throw UsageError("--config: unsupported value for '" + it.key() + "'");
    }
  }
  expanded.insert(expanded.end(), rest.begin() + 1, rest.end());
  return expanded;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse Bayesian regression with three-parameter-beta normal priors"};
  app.name("tpbn");
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a regression with one inference engine");
  fit_cmd->add_option("--input", fit.input, "CSV file: response in the first column, predictors after")->required();
  fit_cmd->add_option("--output", fit.output, "JSON report path (stdout when omitted)");
  fit_cmd->add_option("--chain-out", fit.chain_out, "CSV file for the stored Gibbs draws");
  fit_cmd->add_option("--method", fit.method, "gibbs, vb or map")->required();
  fit_cmd->add_option("--a", fit.a, "TPB shape a")->capture_default_str();
  fit_cmd->add_option("--b", fit.b, "TPB shape b")->capture_default_str();
  fit_cmd->add_option("--phi", fit.phi, "global scale: a number, auto or cauchy")->capture_default_str();
  fit_cmd->add_option("--c0", fit.c0, "error precision shape hyperparameter")->capture_default_str();
  fit_cmd->add_option("--d0", fit.d0, "error precision rate hyperparameter")->capture_default_str();
  fit_cmd->add_option("--iters", fit.iters, "Gibbs iterations")->capture_default_str();
  fit_cmd->add_option("--burnin", fit.burnin, "Gibbs burn-in")->capture_default_str();
  fit_cmd->add_option("--thin", fit.thin, "Gibbs thinning")->capture_default_str();
  fit_cmd->add_option("--tol", fit.tol, "convergence tolerance (vb, map)");
  fit_cmd->add_option("--max-iter", fit.max_iter, "iteration cap (vb, map)");
  fit_cmd->add_option("--seed", fit.seed, "random seed")->capture_default_str();
  fit_cmd->add_flag("--standardize", fit.standardize, "center and scale before fitting");
  fit_cmd->add_flag("--header", fit.header, "input CSV has a header row");
  fit_cmd->add_option("--shrink-threshold", fit.shrink_threshold, "--phi auto: rho threshold")->capture_default_str();
  fit_cmd->add_option("--shrink-prob", fit.shrink_prob, "--phi auto: P(rho > threshold)")->capture_default_str();
  fit_cmd->add_flag("--timing", fit.timing, "record wall time in the report");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Generate randomized datasets");
  sim_cmd->add_option("--case", sim.which_case, "1, 2 or highdim")->required();
  sim_cmd->add_option("--n", sim.n, "observations (default by case)");
  sim_cmd->add_option("--p", sim.p, "predictors (default by case)");
  sim_cmd->add_option("--replicates", sim.replicates, "number of datasets")->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed, "master seed")->capture_default_str();
  sim_cmd->add_option("--out-dir", sim.out_dir, "output directory")->required();
  sim_cmd->add_option("--k", sim.k, "highdim: planted signals")->capture_default_str();
  sim_cmd->add_option("--signal", sim.signal, "highdim: signal value")->capture_default_str();
  sim_cmd->add_option("--noise-sd", sim.noise_sd, "highdim: noise standard deviation")->capture_default_str();

  BenchmarkArgs bench;
  auto* bench_cmd = app.add_subcommand("benchmark", "Relative model error against the cross-validated lasso");
  bench_cmd->add_option("--case", bench.which_case, "1 or 2")->capture_default_str();
  bench_cmd->add_option("--n", bench.n, "observations (default by case)");
  bench_cmd->add_option("--p", bench.p, "predictors (default by case)");
  bench_cmd->add_option("--replicates", bench.replicates, "replicates")->capture_default_str();
  bench_cmd->add_option("--methods", bench.methods, "comma list of lasso or engine:a:b:phi")->capture_default_str();
  bench_cmd->add_option("--bootstrap", bench.bootstrap, "bootstrap resamples")->capture_default_str();
  bench_cmd->add_option("--folds", bench.folds, "lasso CV folds")->capture_default_str();
  bench_cmd->add_option("--seed", bench.seed, "master seed")->capture_default_str();
  bench_cmd->add_option("--out", bench.out, "output directory")->required();
  bench_cmd->add_option("--iters", bench.iters, "Gibbs iterations")->capture_default_str();
  bench_cmd->add_option("--burnin", bench.burnin, "Gibbs burn-in")->capture_default_str();
  bench_cmd->add_option("--thin", bench.thin, "Gibbs thinning")->capture_default_str();
  bench_cmd->add_option("--shrink-threshold", bench.shrink_threshold, "phi auto: rho threshold")->capture_default_str();
  bench_cmd->add_option("--shrink-prob", bench.shrink_prob, "phi auto: P(rho > threshold)")->capture_default_str();
  bench_cmd->add_flag("--timing", bench.timing, "record wall time in the summary");

  CalibrateArgs cal;
  auto* cal_cmd = app.add_subcommand("calibrate-phi", "Solve P(rho > threshold) = target for phi");
  cal_cmd->add_option("--a", cal.a, "TPB shape a")->capture_default_str();
  cal_cmd->add_option("--b", cal.b, "TPB shape b")->capture_default_str();
  cal_cmd->add_option("--threshold", cal.threshold, "rho threshold")->capture_default_str();
  cal_cmd->add_option("--target", cal.target, "target probability")->capture_default_str();

  try {
    std::vector<std::string> argv = expand_config(args);
    std::reverse(argv.begin(), argv.end());
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (fit_cmd->parsed()) return cmd_fit(fit, out, err);
    if (sim_cmd->parsed()) return cmd_simulate(sim, out);
    if (bench_cmd->parsed()) return cmd_benchmark(bench, out);
    if (cal_cmd->parsed()) return cmd_calibrate(cal, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  err << "error: no command given\n";
  return kExitUsage;
}

}  // namespace tpbn::cli
