// rrbart: generate, ampute, impute, select, simulate, evaluate.
//
// Every run writes manifest.txt into --out: the fully resolved config as
// "key = value" lines plus '#' lines with timings. Passing that file back
// via --config replays the run.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rrbart/bart.h"
#include "rrbart/config.h"
#include "rrbart/data.h"
#include "rrbart/error.h"
#include "rrbart/evaluation.h"
#include "rrbart/experiment.h"
#include "rrbart/imputation.h"
#include "rrbart/parallel.h"
#include "rrbart/random.h"
#include "rrbart/selection.h"
#include "rrbart/simulation.h"

namespace fs = std::filesystem;
using namespace rrbart;

namespace {

constexpr const char* kVersion = "1.0.0";

struct Options {
  std::string config_path;
  std::string out = ".";
  std::size_t workers = 0;
  std::vector<std::string> sets;  // key=value overrides
  std::map<std::string, std::string> flags;  // resolved flag overrides
};

class Stopwatch {
 public:
  void lap(const std::string& stage) {
    auto now = std::chrono::steady_clock::now();
    laps_.emplace_back(stage, std::chrono::duration<double>(now - last_).count());
    last_ = now;
  }
  std::string text() const {
    std::ostringstream o;
    for (const auto& [s, t] : laps_) o << "# seconds." << s << " = " << format_double(t) << '\n';
    return o.str();
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
  std::vector<std::pair<std::string, double>> laps_;
};

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw RuntimeFailure("cannot write " + p.string());
  f << text;
  if (!f) throw RuntimeFailure("write failed for " + p.string());
}

fs::path prepare_out(const Options& o) {
  fs::path out(o.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw RuntimeFailure("cannot create output directory " + out.string());
  return out;
}

Config resolve(const std::string& command, const Options& o) {
  Config c;
  if (!o.config_path.empty()) c = Config::load(o.config_path);
  for (const auto& [k, v] : o.flags) c.set(k, v);
  for (const auto& s : o.sets) {
    auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    auto trim = [](std::string t) {
      t.erase(0, t.find_first_not_of(" \t"));
      t.erase(t.find_last_not_of(" \t") + 1);
      return t;
    };
    c.set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
  }
  if (c.has("run.command") && c.get_string("run.command", "") != command)
    throw ConfigError("config was written by '" + c.get_string("run.command", "") + "', not '" + command + "'");
  c.set("run.command", command);
  for (const char* key : {"input.data", "input.schema"})
    if (c.has(key)) c.set(key, fs::absolute(c.get_string(key, "")).lexically_normal().string());
  if (!c.has("run.seed")) throw ConfigError("a master seed is required (--seed or run.seed)");
  c.get_u64("run.seed", 0);
  return c;
}

std::uint64_t seed_of(const Config& c) { return c.get_u64("run.seed", 0); }

std::size_t workers_of(const Options& o) { return o.workers ? o.workers : default_workers(); }

void write_manifest(const fs::path& out, const Config& c, const Stopwatch& sw, const std::string& extra = "") {
  std::ostringstream m;
  m << "# rrbart " << kVersion << '\n' << sw.text() << extra << c.dump();
  write_file(out / "manifest.txt", m.str());
}

DataMatrix load_input(const Config& c, std::vector<ColumnMeta>& schema) {
  schema = load_schema(c.require_string("input.schema"));
  return load_csv(c.require_string("input.data"), schema);
}

SelectionParams selection_params(const Config& c, std::size_t workers) {
  auto p = SelectionParams::from_config(c.subtree("selection"));
  p.workers = workers;
  return p;
}

void echo_selection(Config& c, const SelectionParams& p) {
  auto pc = p.to_config();
  for (const auto& [k, v] : pc.values()) c.set("selection." + k, v);
}

// ---------------------------------------------------------------------------

int cmd_generate(const Options& o) {
  Config c = resolve("generate", o);
  Stopwatch sw;
  c.set("scenario.seed", c.get_string("run.seed", "0"));
  auto spec = ScenarioSpec::from_config(c);
  spec.validate();
  auto resolved = spec.to_config();
  for (const auto& [k, v] : resolved.values()) c.set(k, v);
  auto out = prepare_out(o);
  auto g = generate_complete(spec);
  sw.lap("generate");
  write_csv((out / "data.csv").string(), g.data);
  write_schema((out / "schema.txt").string(), g.data.columns());
  std::ostringstream truth;
  truth << "useful =";
  for (std::size_t i = 0; i < g.useful.size(); ++i) truth << (i ? ", " : " ") << g.data.column(g.useful[i]).name;
  truth << '\n';
  write_file(out / "truth.txt", truth.str());
  std::ostringstream prob;
  prob << "row,true_probability\n";
  for (std::size_t i = 0; i < g.true_probability.size(); ++i) prob << i << ',' << format_double(g.true_probability[i]) << '\n';
  write_file(out / "probabilities.csv", prob.str());
  sw.lap("write");
  write_manifest(out, c, sw);
  std::cout << "generated " << spec.name() << " into " << out.string() << '\n';
  return 0;
}

int cmd_ampute(const Options& o) {
  Config c = resolve("ampute", o);
  Stopwatch sw;
  std::vector<ColumnMeta> schema;
  auto dm = load_input(c, schema);
  auto preset = parse_preset(c.get_string("ampute.preset", to_string(MissingnessPreset::y40_overall60)));
  c.set("ampute.preset", to_string(preset));
  auto patterns = preset_patterns(dm, preset);
  if (c.has("ampute.strength"))
    for (auto& p : patterns) p.strength = c.get_double("ampute.strength", p.strength);
  auto out = prepare_out(o);
  auto holed = ampute(dm, patterns, seed_of(c));
  sw.lap("ampute");
  write_csv((out / "amputed.csv").string(), holed);
  write_schema((out / "schema.txt").string(), holed.columns());
  auto summary = missingness_summary(holed);
  std::ostringstream rep;
  rep << "incomplete_row_fraction = " << format_double(summary.incomplete_row_fraction) << '\n';
  rep << "expected_incomplete_rows = " << format_double(expected_incomplete_rows(dm, patterns)) << '\n';
  rep << "\ntarget,proportion,realized,strength,mar_auc\n";
  for (const auto& p : patterns) {
    std::vector<std::size_t> drivers;
    for (std::size_t j = 0; j < p.weights.size(); ++j)
      if (p.weights[j] != 0.0) drivers.push_back(j);
    double realized = summary.column_missing[p.target];
    rep << dm.column(p.target).name << ',' << format_double(p.proportion) << ',' << format_double(realized) << ','
        << format_double(p.strength) << ',' << format_double(mar_strength_auc(holed, p.target, drivers)) << '\n';
  }
  write_file(out / "missingness.txt", rep.str());
  write_manifest(out, c, sw);
  std::cout << "incomplete rows: " << format_double(summary.incomplete_row_fraction) << '\n';
  return 0;
}

int cmd_impute(const Options& o) {
  Config c = resolve("impute", o);
  Stopwatch sw;
  std::vector<ColumnMeta> schema;
  auto dm = load_input(c, schema);
  auto params = selection_params(c, workers_of(o));
  echo_selection(c, params);
  auto out = prepare_out(o);
  auto sets = multiple_impute(dm, params.m_imputations, params.impute, seed_of(c), params.workers);
  sw.lap("impute");
  for (std::size_t i = 0; i < sets.size(); ++i) {
    write_csv((out / ("imputed_" + std::to_string(i + 1) + ".csv")).string(), sets[i].completed);
    write_file(out / ("imputed_" + std::to_string(i + 1) + ".txt"), sets[i].manifest());
  }
  write_manifest(out, c, sw);
  std::cout << "wrote " << sets.size() << " imputed datasets\n";
  return 0;
}

int cmd_select(const Options& o) {
  Config c = resolve("select", o);
  Stopwatch sw;
  std::vector<ColumnMeta> schema;
  auto dm = load_input(c, schema);
  const std::string method = c.require_string("select.method");
  bool known = false;
  for (const auto& m : method_names()) known = known || m == method;
  if (!known) throw ConfigError("unknown method: " + method);
  if (method.rfind("bi-", 0) == 0 && !c.has("selection.pi"))
    throw ConfigError("method " + method + " needs a selection threshold (--pi)");
  auto params = selection_params(c, workers_of(o));
  echo_selection(c, params);
  auto out = prepare_out(o);
  const std::uint64_t seed = seed_of(c);
  SelectionResult r;
  if (method.rfind("rr-", 0) == 0) {
    if (!dm.has_missing()) throw DataError("data has no missing cells; " + method + " needs imputation");
    auto run = rr_vip_draws(dm, params, seed);
    sw.lap("vip_draws");
    if (method == "rr-bart") r = rr_select_from_draws(dm, run.draws, params);
    else if (method == "rr-median") r = rr_median_baseline(dm, run.draws);
    else r = rr_pooled_draws_select(dm, run.draws, params.alpha);
    r.parameters = params.to_config();
    std::vector<std::string> names;
    for (auto j : dm.predictor_indices()) names.push_back(dm.column(j).name);
    write_file(out / "vip_draws.csv", run.draws.to_csv(names));
  } else {
    r = run_method(method, dm, params, seed);
  }
  sw.lap("select");
  write_file(out / "report.txt", r.report());
  write_manifest(out, c, sw);
  std::cout << "selected:";
  for (const auto& n : r.selected_names()) std::cout << ' ' << n;
  std::cout << (r.all_selected ? " (all selected: importance too even to separate)" : "") << '\n';
  return 0;
}

int cmd_simulate(const Options& o) {
  Config c = resolve("simulate", o);
  Stopwatch sw;
  c.set("simulation.seed", c.get_string("run.seed", "0"));
  auto spec = SimulationSpec::from_config(c);
  spec.scenario.validate();
  if (spec.replications < 2) throw ConfigError("simulate needs at least two replications");
  spec.workers = workers_of(o);
  spec.params.workers = 1;
  auto resolved = spec.to_config();
  for (const auto& [k, v] : resolved.values()) c.set(k, v);
  auto out = prepare_out(o);
  auto reps = run_simulation(spec);
  sw.lap("simulate");
  auto agg = aggregate(reps);
  auto schema = scenario_schema(spec.scenario.n_noise);
  std::vector<std::string> names;
  for (const auto& col : schema)
    if (col.role == ColumnRole::predictor) names.push_back(col.name);
  write_file(out / "aggregate.csv", aggregate_csv(agg));
  write_file(out / "replications.csv", replication_csv(reps, names));
  write_file(out / "power.csv", power_csv(agg, names));
  write_file(out / "timing.csv", timing_csv(reps));
  std::ostringstream seeds;
  for (const auto& r : reps) seeds << "# replication." << r.replication << ".data_seed = " << r.data_seed << '\n';
  write_manifest(out, c, sw, seeds.str());
  std::cout << aggregate_csv(agg);
  return 0;
}

int cmd_evaluate(const Options& o) {
  Config c = resolve("evaluate", o);
  Stopwatch sw;
  std::vector<ColumnMeta> schema;
  auto dm = load_input(c, schema);
  const std::string method = c.require_string("evaluate.method");
  if (method.rfind("bi-", 0) == 0 && !c.has("selection.pi"))
    throw ConfigError("method " + method + " needs a selection threshold (--pi)");
  auto params = selection_params(c, 1);
  echo_selection(c, params);
  CvAucParams cv;
  cv.repeats = static_cast<std::size_t>(c.get_int("evaluate.repeats", 100));
  auto engine_name = c.get_string("evaluate.engine", to_string(method_engine(method)));
  if (engine_name != "bart" && engine_name != "gbt") throw ConfigError("evaluate.engine must be bart or gbt");
  cv.engine = engine_name == "bart" ? Engine::bart : Engine::gbt;
  cv.workers = workers_of(o);
  cv.impute = params.impute;
  c.set("evaluate.repeats", std::to_string(cv.repeats));
  c.set("evaluate.engine", engine_name);
  const std::uint64_t seed = seed_of(c);
  auto out = prepare_out(o);

  auto dist = cv_auc(dm, method_selector(method, params), cv, derive_seed(seed, 0));
  sw.lap("cv_auc");
  std::ostringstream a;
  a << "repeat,auc,empty_selection,n_selected\n";
  for (std::size_t r = 0; r < dist.values.size(); ++r)
    a << r << ',' << format_double(dist.values[r]) << ',' << int(dist.empty_selection[r]) << ',' << dist.n_selected[r] << '\n';
  write_file(out / "auc.csv", a.str());
  std::size_t empty = 0;
  for (auto e : dist.empty_selection) empty += e;
  std::ostringstream s;
  s << "mean_auc,se,percentile_2.5,percentile_97.5,repeats,empty_selections\n"
    << format_double(dist.summary.mean) << ',' << format_double(dist.summary.se) << ',' << format_double(dist.summary.lo)
    << ',' << format_double(dist.summary.hi) << ',' << dist.summary.count << ',' << empty << '\n';
  write_file(out / "auc_summary.csv", s.str());

  // calibration on one held-out half, model built on the other as in cv_auc
  auto half = stratified_halves(dm, derive_seed(seed, 1));
  std::vector<std::size_t> r1, r2;
  for (std::size_t i = 0; i < dm.rows(); ++i) (half[i] ? r1 : r2).push_back(i);
  auto d1 = dm.select_rows(r1), d2 = dm.select_rows(r2);
  auto sel = run_method(method, d1, params, derive_seed(seed, 2)).selected;
  std::ostringstream cal;
  cal << "bin,mean_predicted,observed,count\n";
  if (!sel.empty()) {
    auto complete = [&](const DataMatrix& d, std::uint64_t s) {
      return d.has_missing() ? iterative_forest_impute(d, params.impute, s).completed : d;
    };
    auto f1 = complete(d1, derive_seed(seed, 3)), f2 = complete(d2, derive_seed(seed, 4));
    auto preds = dm.predictor_indices();
    std::vector<std::size_t> cols;
    for (auto j : sel) cols.push_back(preds[j]);
    auto x1 = f1.features(cols), x2 = f2.features(cols);
    auto y1 = f1.column_values(f1.outcome_index());
    std::vector<double> prob;
    if (cv.engine == Engine::bart) prob = predict_bart(fit_bart_probit(x1, y1, cv.bart, derive_seed(seed, 5)), x2).mean;
    else prob = fit_gbt(x1, y1, cv.gbt, derive_seed(seed, 5)).predict(x2);
    std::vector<double> p_obs, y_obs;
    for (std::size_t i = 0; i < d2.rows(); ++i)
      if (d2.observed(i, d2.outcome_index())) {
        p_obs.push_back(prob[i]);
        y_obs.push_back(d2.value(i, d2.outcome_index()));
      }
    auto bins = calibration_curve(p_obs, y_obs, static_cast<std::size_t>(c.get_int("evaluate.bins", 10)));
    for (std::size_t k = 0; k < bins.size(); ++k)
      cal << k << ',' << format_double(bins[k].mean_predicted) << ',' << format_double(bins[k].observed) << ','
          << bins[k].count << '\n';
  }
  write_file(out / "calibration.csv", cal.str());
  sw.lap("calibration");
  write_manifest(out, c, sw);
  std::cout << s.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variable selection for incomplete binary-outcome data"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "config or manifest file")->check(CLI::ExistingFile);
    sub->add_option_function<std::string>("--seed", [&](const std::string& v) { o.flags["run.seed"] = v; }, "master seed");
    sub->add_option("--workers", o.workers, "worker threads (results do not depend on it)");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--set", o.sets, "override a config key: key=value");
  };
  auto flag = [&](CLI::App* sub, const std::string& name, const std::string& key, const std::string& help) {
    sub->add_option_function<std::string>(name, [&o, key](const std::string& v) { o.flags[key] = v; }, help);
  };
  auto input = [&](CLI::App* sub) {
    flag(sub, "--data", "input.data", "CSV input");
    flag(sub, "--schema", "input.schema", "schema file");
  };
  auto selection = [&](CLI::App* sub) {
    flag(sub, "--alpha", "selection.alpha", "significance level");
    flag(sub, "--pi", "selection.pi", "bootstrap selection threshold");
    flag(sub, "--m-imputations", "selection.m_imputations", "number of imputations");
    flag(sub, "--b-bootstrap", "selection.b_bootstrap", "bootstrap datasets");
    flag(sub, "--n-perm", "selection.n_perm", "permutations for BART selection");
    flag(sub, "--draws", "selection.bart.n_draws", "posterior draws kept");
    flag(sub, "--burn-in", "selection.bart.burn_in", "burn-in sweeps");
    flag(sub, "--within-divisor", "selection.within_divisor", "n or P");
  };

  auto* gen = app.add_subcommand("generate", "simulate a complete dataset");
  common(gen);
  flag(gen, "--n", "scenario.n", "rows");
  flag(gen, "--noise", "scenario.n_noise", "noise predictors");

  auto* amp = app.add_subcommand("ampute", "add MAR holes with a preset");
  common(amp);
  input(amp);
  flag(amp, "--preset", "ampute.preset", "Y20_overall40 or Y40_overall60");

  auto* imp = app.add_subcommand("impute", "multiple imputation");
  common(imp);
  input(imp);
  selection(imp);

  auto* sel = app.add_subcommand("select", "run one selection method");
  common(sel);
  input(sel);
  selection(sel);
  flag(sel, "--method", "select.method", "method name");

  auto* sim = app.add_subcommand("simulate", "replicated simulation");
  common(sim);
  selection(sim);
  flag(sim, "--n", "scenario.n", "rows");
  flag(sim, "--noise", "scenario.n_noise", "noise predictors");
  flag(sim, "--preset", "scenario.preset", "missingness preset");
  flag(sim, "--methods", "simulation.methods", "comma separated methods");
  flag(sim, "--method", "simulation.methods", "single method");
  flag(sim, "--pis", "simulation.pis", "comma separated thresholds");
  flag(sim, "--reps", "simulation.replications", "replications");
  flag(sim, "--repeats", "simulation.cv_repeats", "cv AUC repeats per replication (0 = skip)");

  auto* ev = app.add_subcommand("evaluate", "cross-validated AUC and calibration");
  common(ev);
  input(ev);
  selection(ev);
  flag(ev, "--method", "evaluate.method", "method name");
  flag(ev, "--repeats", "evaluate.repeats", "half-split repeats");
  flag(ev, "--engine", "evaluate.engine", "bart or gbt");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) return cmd_generate(o);
    if (*amp) return cmd_ampute(o);
    if (*imp) return cmd_impute(o);
    if (*sel) return cmd_select(o);
    if (*sim) return cmd_simulate(o);
    if (*ev) return cmd_evaluate(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const RuntimeFailure& e) {
    std::cerr << "runtime failure: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << '\n';
    return 4;
  }
  return 2;
}
