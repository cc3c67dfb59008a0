// Acceptance harness: one PASS/FAIL line per criterion.
//
//   acceptance [--criteria 1,2,...] [--smoke] [--report-only] [--out dir] [--seed s]
//
// Full mode runs the desk-scale settings (50 replications, M=10, B=50,
// P=500). --smoke shrinks replication counts and the bootstrap / permutation
// budgets so the statistical criteria finish on one core; criterion 2 keeps
// its own 10-replication smoke variant at full RR-BART settings.
// --report-only prints FAIL lines but exits 0 unless the property suite
// (criterion 8) fails or something crashes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "oracles.h"
#include "rrbart/bart.h"
#include "rrbart/data.h"
#include "rrbart/evaluation.h"
#include "rrbart/experiment.h"
#include "rrbart/imputation.h"
#include "rrbart/random.h"
#include "rrbart/selection.h"
#include "rrbart/simulation.h"
#include "rrbart/stats.h"
#include "rrbart/tree.h"

namespace fs = std::filesystem;
using namespace rrbart;

namespace {

struct Settings {
  bool smoke = false;
  bool report_only = false;
  std::uint64_t seed = 20240601;
  fs::path out = "acceptance_out";
  std::size_t workers = 1;
};

std::ofstream g_log;
bool g_any_fail = false;

void line(int criterion, bool pass, const std::string& detail) {
  g_any_fail = g_any_fail || !pass;
  std::ostringstream s;
  s << "criterion " << criterion << ": " << (pass ? "PASS" : "FAIL") << "  " << detail;
  std::cout << s.str() << std::endl;
  if (g_log) g_log << s.str() << std::endl;
}

void progress(const std::string& msg) { std::cerr << "[acceptance] " << msg << std::endl; }

std::string fmt(double v, int digits = 3) {
  if (std::isnan(v)) return "NA";
  std::ostringstream s;
  s.precision(digits);
  s << std::fixed << v;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<std::string> predictor_names(std::size_t n_noise) {
  std::vector<std::string> names;
  for (const auto& c : scenario_schema(n_noise))
    if (c.role == ColumnRole::predictor) names.push_back(c.name);
  return names;
}

ScenarioSpec scenario(std::size_t n_noise, MissingnessPreset preset) {
  ScenarioSpec s;
  s.n = 1000;
  s.n_noise = n_noise;
  s.preset = preset;
  return s;
}

// Desk-scale parameters, shrunk in smoke mode where the criterion allows it.
SelectionParams desk_params() {
  SelectionParams p;
  p.bart.n_draws = 500;
  p.bart.burn_in = 250;
  p.m_imputations = 10;
  p.b_bootstrap = 50;
  p.n_perm = 100;
  return p;
}

struct SimRun {
  std::vector<ReplicationResult> reps;
  std::vector<MethodAggregate> agg;
  double seconds = 0.0;

  const MethodAggregate* find(const std::string& label) const {
    for (const auto& a : agg)
      if (a.label == label) return &a;
    return nullptr;
  }
  const MethodOutcome* outcome(std::size_t r, const std::string& label) const {
    if (r >= reps.size()) return nullptr;
    for (const auto& o : reps[r].outcomes)
      if (o.label == label) return &o;
    return nullptr;
  }
};

SimRun simulate(const Settings& st, const std::string& name, const SimulationSpec& spec) {
  progress(name + ": " + std::to_string(spec.replications) + " replications of " + spec.scenario.name());
  auto t0 = std::chrono::steady_clock::now();
  SimRun run;
  run.reps = run_simulation(spec);
  run.seconds = seconds_since(t0);
  run.agg = aggregate(run.reps);
  auto names = predictor_names(spec.scenario.n_noise);
  std::ofstream(st.out / (name + "_aggregate.csv")) << aggregate_csv(run.agg);
  std::ofstream(st.out / (name + "_replications.csv")) << replication_csv(run.reps, names);
  std::ofstream(st.out / (name + "_power.csv")) << power_csv(run.agg, names);
  std::ofstream(st.out / (name + "_timing.csv")) << timing_csv(run.reps);
  std::ofstream(st.out / (name + "_config.txt")) << spec.to_config().dump();
  progress(name + ": done in " + fmt(run.seconds, 0) + " s");
  return run;
}

std::string metric_text(const MethodAggregate& a) {
  return "P=" + fmt(a.precision.mean) + " R=" + fmt(a.recall.mean) + " F1=" + fmt(a.f1.mean) +
         " TypeI=" + fmt(a.type_i.mean) + " (reps ok " + std::to_string(a.ok) + ", failed " + std::to_string(a.failed) + ")";
}

bool within(double v, double target, double tol) { return !std::isnan(v) && std::abs(v - target) <= tol + 1e-12; }

// ---------------------------------------------------------------------------
// Shared runs, computed on first use.

struct Runs {
  const Settings& st;
  std::map<std::string, SimRun> cache;

  std::size_t headline_reps() const { return st.smoke ? 10 : 50; }
  std::size_t comparison_reps() const { return st.smoke ? 6 : 50; }

  SimulationSpec base(std::size_t reps, const std::vector<std::string>& methods) const {
    SimulationSpec s;
    s.scenario = scenario(40, MissingnessPreset::y40_overall60);
    s.methods = methods;
    s.replications = reps;
    s.seed = st.seed;
    s.params = desk_params();
    s.workers = st.workers;
    return s;
  }

  // RR-BART on the headline scenario.
  const SimRun& headline() {
    if (!cache.count("headline")) cache["headline"] = simulate(st, "headline_rr", base(headline_reps(), {"rr-bart"}));
    return cache["headline"];
  }

  // Comparison methods on the same seeds as the headline run.
  const SimRun& comparison() {
    if (!cache.count("comparison")) {
      auto s = base(comparison_reps(), {"bi-xgb", "cc-bart", "cc-xgb", "mia-bart-impute", "mia-bart-exclude",
                                        "mia-xgb-impute", "mia-xgb-exclude"});
      s.pis = {0.3};
      if (st.smoke) {
        s.params.b_bootstrap = 10;
        s.params.n_perm = 20;
        s.params.rfe.gbt.rounds = 50;
      }
      cache["comparison"] = simulate(st, "headline_comparison", s);
    }
    return cache["comparison"];
  }
};

// ---------------------------------------------------------------------------
// Criteria

void criterion1(const Settings& st) {
  const std::size_t reps = st.smoke ? 5 : 50;
  SelectionParams p = desk_params();
  if (st.smoke) p.n_perm = 50;
  std::vector<double> prec, rec, f1;
  progress("c1: " + std::to_string(reps) + " fully observed replications");
  auto t0 = std::chrono::steady_clock::now();
  std::ofstream csv(st.out / "c1_replications.csv");
  csv << "replication,precision,recall,f1,type_i,selected\n";
  auto names = predictor_names(40);
  std::vector<std::size_t> truth{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  for (std::size_t r = 0; r < reps; ++r) {
    auto s = scenario(40, MissingnessPreset::y40_overall60);
    s.seed = derive_seed(derive_seed(st.seed, 1), r);
    auto g = generate_complete(s);
    auto res = run_method("bart", g.data, p, derive_seed(s.seed, 2));
    auto m = selection_metrics(res.selected, truth, names.size());
    if (!m.precision_na) prec.push_back(m.precision);
    rec.push_back(m.recall);
    f1.push_back(m.f1);
    csv << r << ',' << m.precision << ',' << m.recall << ',' << m.f1 << ',' << m.type_i << ',';
    for (auto j : res.selected) csv << names[j] << ' ';
    csv << '\n';
  }
  double P = oracle::mean(prec), R = oracle::mean(rec), F = oracle::mean(f1);
  bool pass = P >= 0.95 && within(R, 0.87, 0.08) && within(F, 0.93, 0.07);
  line(1, pass, "fully observed BART permutation selection, " + std::to_string(reps) + " reps (n_perm " +
                    std::to_string(p.n_perm) + "): P=" + fmt(P) + " (>=0.95) R=" + fmt(R) + " (0.87+-0.08) F1=" +
                    fmt(F) + " (0.93+-0.07), " + fmt(seconds_since(t0), 0) + " s");
}

void criterion2(Runs& runs) {
  const auto& h = runs.headline();
  const auto* a = h.find("rr-bart");
  double limit_h = runs.st.smoke ? 2.0 : 8.0;
  bool pass = a && a->ok > 0 && within(a->precision.mean, 0.87, 0.10) && within(a->recall.mean, 0.80, 0.10) &&
              within(a->f1.mean, 0.83, 0.10) && a->type_i.mean <= 0.05 && h.seconds <= limit_h * 3600;
  line(2, pass, "RR-BART n=1000, 40 noise, 60%/40% preset, " + std::to_string(h.reps.size()) + " reps: " +
                    (a ? metric_text(*a) : "no result") + "; targets P 0.87+-0.10, R 0.80+-0.10, F1 0.83+-0.10, TypeI<=0.05; runtime " +
                    fmt(h.seconds / 3600, 2) + " h (<= " + fmt(limit_h, 0) + " h)");
}

void criterion3(const Settings& st) {
  SimulationSpec s;
  s.scenario = scenario(40, MissingnessPreset::y20_overall40);
  s.methods = {"rr-bart"};
  s.replications = st.smoke ? 5 : 50;
  s.seed = derive_seed(st.seed, 3);
  s.params = desk_params();
  s.workers = st.workers;
  auto run = simulate(st, "c3_lower_missingness", s);
  const auto* a = run.find("rr-bart");
  bool pass = a && a->ok > 0 && within(a->f1.mean, 0.87, 0.10);
  line(3, pass, "RR-BART lower-missingness preset (Y20_overall40), " + std::to_string(s.replications) +
                    " reps: " + (a ? metric_text(*a) : "no result") + "; target F1 0.87+-0.10");
}

void criterion4(const Settings& st) {
  SimulationSpec s;
  s.scenario = scenario(40, MissingnessPreset::y40_overall60);
  s.methods = {"bi-bart", "bi-xgb"};
  s.pis = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  s.replications = st.smoke ? 3 : 25;
  s.cv_repeats = st.smoke ? 2 : 5;
  s.seed = derive_seed(st.seed, 4);
  s.params = desk_params();
  s.workers = st.workers;
  if (st.smoke) {
    s.params.b_bootstrap = 10;
    s.params.n_perm = 10;
    s.params.bart.n_draws = 200;
    s.params.bart.burn_in = 100;
    s.params.rfe.gbt.rounds = 50;
    s.params.impute.forest.n_trees = 50;
  }
  auto run = simulate(st, "c4_pi_sweep", s);
  auto curve = [&](const std::string& base) {
    std::vector<double> v;
    for (double pi : s.pis) {
      std::ostringstream label;
      label << base << '@' << format_double(pi);
      const auto* a = run.find(label.str());
      v.push_back(a ? a->auc.mean : std::nan(""));
    }
    return v;
  };
  auto bb = curve("bi-bart"), bx = curve("bi-xgb");
  auto argmax = [](const std::vector<double>& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
      if (v[i] > v[best]) best = i;
    return best;
  };
  bool finite = std::none_of(bb.begin(), bb.end(), [](double x) { return std::isnan(x); }) &&
                std::none_of(bx.begin(), bx.end(), [](double x) { return std::isnan(x); });
  bool bb_peak = finite && argmax(bb) == 0;
  bool bb_mono = finite;
  for (std::size_t i = 2; i + 1 < bb.size() && finite; ++i) bb_mono = bb_mono && bb[i + 1] <= bb[i] + 1e-12;
  std::size_t bx_best = argmax(bx);
  bool bx_peak = finite && (bx_best == 1 || bx_best == 2);
  std::string text;
  auto show = [&](const std::vector<double>& v) {
    std::string t;
    for (std::size_t i = 0; i < v.size(); ++i) t += (i ? " " : "") + fmt(v[i]);
    return t;
  };
  text = "pi 0.1..1.0, " + std::to_string(s.replications) + " reps x " + std::to_string(s.cv_repeats) +
         " cv repeats; BI-BART AUC [" + show(bb) + "] peak at 0.1: " + (bb_peak ? "yes" : "no") +
         ", nonincreasing from 0.3: " + (bb_mono ? "yes" : "no") + "; BI-XGB AUC [" + show(bx) + "] peak at pi=" +
         fmt(s.pis[bx_best], 1) + " (want 0.2 or 0.3)";
  line(4, bb_peak && bb_mono && bx_peak, text);
}

void criterion5(const Settings& st) {
  SimulationSpec s;
  s.scenario = scenario(0, MissingnessPreset::y40_overall60);
  s.methods = {"rr-bart"};
  s.replications = st.smoke ? 5 : 25;
  s.seed = derive_seed(st.seed, 5);
  s.params = desk_params();
  s.workers = st.workers;
  auto run = simulate(st, "c5_no_noise", s);
  std::size_t fired = 0, ok = 0, perfect = 0;
  double vip = 0.0;
  for (std::size_t r = 0; r < run.reps.size(); ++r) {
    const auto* o = run.outcome(r, "rr-bart");
    if (!o || !o->error.empty()) continue;
    ++ok;
    vip += o->min_mean_vip;
    if (o->all_selected) {
      ++fired;
      perfect += o->metrics.recall == 1.0 && o->metrics.f1 == 1.0;
    }
  }
  double rate = ok ? double(fired) / ok : 0.0;
  vip = ok ? vip / ok : std::nan("");
  bool pass = ok > 0 && rate >= 0.8 && perfect == fired && vip >= 0.05 && vip <= 0.11;
  line(5, pass, "all-useful scenario, " + std::to_string(ok) + " reps: guard fired " + fmt(rate, 2) +
                    " (>=0.80), all-selected reps with R=F1=1: " + std::to_string(perfect) + "/" + std::to_string(fired) +
                    ", mean min avg VIP " + fmt(vip, 4) + " (in [0.05, 0.11])");
}

void criterion6(Runs& runs) {
  const auto& h = runs.headline();
  const auto& c = runs.comparison();
  const std::size_t x2 = 1;
  std::size_t n = 0;
  double rr = 0, bx = 0;
  for (std::size_t r = 0; r < c.reps.size(); ++r) {
    const auto* a = h.outcome(r, "rr-bart");
    const auto* b = c.outcome(r, "bi-xgb@0.3");
    if (!a || !b || !a->error.empty() || !b->error.empty()) continue;
    ++n;
    rr += std::count(a->selected.begin(), a->selected.end(), x2);
    bx += std::count(b->selected.begin(), b->selected.end(), x2);
  }
  double fr = n ? rr / n : std::nan(""), fb = n ? bx / n : std::nan("");
  bool pass = n > 0 && fr - fb >= 0.10;
  line(6, pass, "X2 selection frequency over " + std::to_string(n) + " matched reps: RR-BART " + fmt(fr, 2) +
                    ", BI-XGB(pi=0.3) " + fmt(fb, 2) + ", difference " + fmt(fr - fb, 2) + " (>=0.10)");
}

void criterion7(Runs& runs) {
  const auto& h = runs.headline();
  const auto& c = runs.comparison();
  bool pass = true;
  std::string text;
  for (const char* m : {"cc-bart", "cc-xgb", "mia-bart-impute", "mia-bart-exclude", "mia-xgb-impute", "mia-xgb-exclude"}) {
    std::size_t n = 0, lower = 0;
    for (std::size_t r = 0; r < c.reps.size(); ++r) {
      const auto* a = h.outcome(r, "rr-bart");
      const auto* b = c.outcome(r, m);
      if (!a || !b || !a->error.empty()) continue;
      ++n;
      // a failed comparator selects nothing
      double fb = b->error.empty() ? b->metrics.f1 : 0.0;
      lower += fb < a->metrics.f1;
    }
    double share = n ? double(lower) / n : 0.0;
    pass = pass && n > 0 && share >= 0.6;
    text += std::string(text.empty() ? "" : ", ") + m + " " + std::to_string(lower) + "/" + std::to_string(n);
  }
  line(7, pass, "reps where F1 is below RR-BART (need >=60% each): " + text);
}

// Properties, run in full in every mode.
void criterion8(const Settings& st, bool& failed) {
  auto t0 = std::chrono::steady_clock::now();
  std::vector<std::pair<std::string, bool>> checks;
  auto check = [&](const std::string& name, auto fn) {
    bool ok = false;
    try {
      ok = fn();
    } catch (const std::exception& e) {
      progress("c8 " + name + " threw: " + e.what());
    }
    checks.emplace_back(name, ok);
  };

  check("vip simplex", [] {
    Rng rng(1);
    FeatureMatrix x(200, 6);
    std::vector<double> y(200);
    for (std::size_t i = 0; i < 200; ++i) {
      for (std::size_t j = 0; j < 6; ++j) x.at(i, j) = rng.normal();
      y[i] = rng.uniform() < normal_cdf(x.at(i, 0) - x.at(i, 1));
    }
    BartParams p;
    p.n_draws = 1000;
    p.burn_in = 100;
    p.keep_trees = false;
    auto post = fit_bart_probit(x, y, p, 2);
    bool ok = post.vip.size() == 1000;
    for (const auto& v : post.vip) {
      double s = 0;
      for (double e : v) {
        ok = ok && e >= 0;
        s += e;
      }
      ok = ok && std::abs(s - 1) <= 1e-12;
    }
    return ok;
  });

  bool oracle_ok = true, centering_ok = true, identity_ok = true;
  {
    Rng rng(3);
    for (int t = 0; t < 100; ++t) {
      std::size_t K = 2 + rng.index(6), M = 2 + rng.index(5), P = 2 + rng.index(20);
      std::vector<std::vector<std::vector<double>>> cube(K, std::vector<std::vector<double>>(M, std::vector<double>(P)));
      VipDraws v(K, M, P);
      for (std::size_t k = 0; k < K; ++k)
        for (std::size_t m = 0; m < M; ++m)
          for (std::size_t p = 0; p < P; ++p) v.at(k, m, p) = cube[k][m][p] = rng.uniform() * (1 + k);
      double n_eff = 100 + rng.index(900);
      auto want = oracle::rubin(cube, n_eff);
      auto got = pool_rubins(v, 0.05, n_eff);
      for (std::size_t k = 0; k < K; ++k) {
        const auto& s = got.stats[k];
        oracle_ok = oracle_ok && std::abs(s.q_bar - want[k].q) <= 1e-12 && std::abs(s.within - want[k].w) <= 1e-12 &&
                    std::abs(s.between - want[k].b) <= 1e-12 && std::abs(s.total - want[k].t) <= 1e-12;
        identity_ok = identity_ok && std::abs(s.total - s.within - (1 + 1.0 / M) * s.between) <= 1e-15;
      }
      centering_ok = centering_ok && std::abs(got.stats[got.reference].q_bar) <= 1e-12 && !got.stats[got.reference].selected;
    }
  }
  checks.emplace_back("pooling oracle 1e-12", oracle_ok);
  checks.emplace_back("centering identity", centering_ok);
  checks.emplace_back("T-W identity", identity_ok);

  check("pi monotonicity", [] {
    Rng rng(4);
    bool ok = true;
    for (int t = 0; t < 50; ++t) {
      BootstrapSelections s;
      s.n_features = 12;
      std::size_t B = 10 + rng.index(40);
      for (std::size_t b = 0; b < B; ++b) {
        std::vector<std::size_t> sel;
        for (std::size_t j = 0; j < 12; ++j)
          if (rng.uniform() < 0.08 * j) sel.push_back(j);
        s.per_dataset.push_back(sel);
      }
      std::vector<std::size_t> prev;
      for (int i = 1; i <= 10; ++i) {
        auto cur = threshold_selections(s, i / 10.0);
        if (i > 1) ok = ok && std::includes(prev.begin(), prev.end(), cur.begin(), cur.end());
        prev = cur;
      }
    }
    return ok;
  });

  check("amputation proportions n=5000", [] {
    bool ok = true;
    for (auto preset : {MissingnessPreset::y20_overall40, MissingnessPreset::y40_overall60}) {
      ScenarioSpec s;
      s.n = 5000;
      s.n_noise = 10;
      s.preset = preset;
      s.seed = 6;
      auto g = generate_complete(s);
      auto patterns = preset_patterns(g.data, preset);
      auto out = ampute(g.data, patterns, 7);
      auto summary = missingness_summary(out);
      for (const auto& p : patterns) ok = ok && std::abs(summary.column_missing[p.target] - p.proportion) <= 0.02;
      ok = ok && std::abs(summary.incomplete_row_fraction - preset_overall_rate(preset)) <= 0.02;
    }
    return ok;
  });

  check("imputation keeps observed cells", [] {
    ScenarioSpec s;
    s.n = 300;
    s.n_noise = 4;
    s.seed = 8;
    auto g = generate_complete(s);
    auto dm = ampute(g.data, preset_patterns(g.data, s.preset), 9);
    ImputeParams p;
    p.forest.n_trees = 30;
    auto r = iterative_forest_impute(dm, p, 10);
    bool ok = !r.completed.has_missing();
    for (std::size_t j = 0; j < dm.cols(); ++j)
      for (std::size_t i = 0; i < dm.rows(); ++i) {
        if (dm.observed(i, j)) ok = ok && r.completed.value(i, j) == dm.value(i, j);
        if (dm.column(j).kind == ColumnKind::binary) {
          double v = r.completed.value(i, j);
          ok = ok && (v == 0.0 || v == 1.0);
        }
      }
    return ok;
  });

  check("MIA route truth table", [] {
    const double nan = std::nan("");
    struct Row {
      MissingDirection d;
      double x;
      Side want;
    };
    const Row table[] = {
        {MissingDirection::left, nan, Side::left},          {MissingDirection::left, 0.5, Side::left},
        {MissingDirection::left, 1.0, Side::left},          {MissingDirection::left, 1.5, Side::right},
        {MissingDirection::right, nan, Side::right},        {MissingDirection::right, 0.5, Side::left},
        {MissingDirection::right, 1.0, Side::left},         {MissingDirection::right, 1.5, Side::right},
        {MissingDirection::missing_only_left, nan, Side::left}, {MissingDirection::missing_only_left, 0.5, Side::right},
        {MissingDirection::missing_only_left, 1.0, Side::right}, {MissingDirection::missing_only_left, 1.5, Side::right},
    };
    bool ok = true;
    for (const auto& r : table) ok = ok && route(SplitRule{0, 1.0, r.d}, r.x) == r.want;
    return ok;
  });

  check("auc antisymmetry", [] {
    Rng rng(11);
    bool ok = true;
    for (int t = 0; t < 50; ++t) {
      std::size_t n = 20 + rng.index(300);
      std::vector<double> s(n), neg(n);
      std::vector<int> y(n);
      for (std::size_t i = 0; i < n; ++i) {
        s[i] = std::round(rng.normal() * 4);
        neg[i] = -s[i];
        y[i] = i % 3 == 0;
      }
      ok = ok && std::abs(auc(neg, y) - (1 - auc(s, y))) <= 1e-12 && std::abs(auc(s, y) - oracle::pair_auc(s, y)) <= 1e-12;
    }
    return ok;
  });

  check("tiny pipeline replay", [&] {
    SimulationSpec s;
    s.scenario.n = 200;
    s.scenario.n_noise = 4;
    s.methods = {"rr-bart", "rr-median", "bi-xgb", "mia-xgb-impute"};
    s.pis = {0.1, 0.5};
    s.replications = 2;
    s.cv_repeats = 2;
    s.seed = 12;
    s.params.m_imputations = 2;
    s.params.bart.n_draws = 80;
    s.params.bart.burn_in = 40;
    s.params.b_bootstrap = 10;
    s.params.impute.forest.n_trees = 15;
    s.params.rfe.gbt.rounds = 25;
    auto a = run_simulation(s);
    s.workers = std::max<std::size_t>(2, st.workers);
    auto b = run_simulation(s);
    auto names = predictor_names(4);
    auto back = SimulationSpec::from_config(Config::parse(s.to_config().dump()));
    back.workers = 1;
    auto c = run_simulation(back);
    std::string ta = replication_csv(a, names);
    return ta == replication_csv(b, names) && ta == replication_csv(c, names) &&
           aggregate_csv(aggregate(a)) == aggregate_csv(aggregate(b));
  });

  std::size_t passed = 0;
  std::string failures;
  for (const auto& [name, ok] : checks) {
    passed += ok;
    if (!ok) failures += " [" + name + "]";
  }
  bool pass = passed == checks.size();
  failed = failed || !pass;
  line(8, pass, std::to_string(passed) + "/" + std::to_string(checks.size()) + " property checks" +
                    (pass ? "" : ", failing:" + failures) + ", " + fmt(seconds_since(t0), 0) + " s");
}

void criterion9(Runs& runs, const Settings& st) {
  const auto& h = runs.headline();
  auto s = runs.base(1, {"bi-bart"});
  s.pis = {0.1};
  if (st.smoke) {
    s.params.b_bootstrap = 10;
    s.params.n_perm = 20;
  }
  auto bi = simulate(st, "c9_bi_bart_timing", s);
  const auto* rr = h.outcome(0, "rr-bart");
  const auto* bb = bi.outcome(0, "bi-bart@0.1");
  bool ok = rr && bb && rr->error.empty() && bb->error.empty();
  bool pass = ok && rr->seconds < bb->seconds;
  line(9, pass, "wall clock on replication 0 of the headline scenario: RR-BART (M=" +
                    std::to_string(runs.base(1, {}).params.m_imputations) + ") " + (rr ? fmt(rr->seconds, 1) : "NA") +
                    " s vs BI-BART (B=" + std::to_string(s.params.b_bootstrap) + ", n_perm=" +
                    std::to_string(s.params.n_perm) + ") " + (bb ? fmt(bb->seconds, 1) : "NA") +
                    " s; ordering only, absolute times are hardware dependent");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  Settings st;
  std::vector<int> criteria{1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::string out = st.out.string();
  app.add_option("--criteria", criteria, "criteria to run")->delimiter(',');
  app.add_flag("--smoke", st.smoke, "reduced-scale runs");
  app.add_flag("--report-only", st.report_only, "statistical FAIL lines do not change the exit status");
  app.add_option("--out", out, "output directory");
  app.add_option("--seed", st.seed, "master seed");
  app.add_option("--workers", st.workers, "worker threads");
  CLI11_PARSE(app, argc, argv);
  st.out = out;
  fs::create_directories(st.out);
  g_log.open(st.out / "acceptance.txt", std::ios::app);
  g_log << "# mode " << (st.smoke ? "smoke" : "full") << ", seed " << st.seed << std::endl;

  std::set<int> want(criteria.begin(), criteria.end());
  Runs runs{st, {}};
  bool property_failed = false;
  int crashed = 0;
  auto guarded = [&](int c, auto fn) {
    if (!want.count(c)) return;
    try {
      fn();
    } catch (const std::exception& e) {
      line(c, false, std::string("crashed: ") + e.what());
      ++crashed;
    }
  };
  // outputs go to stdout in criterion order; the cheap property suite first
  guarded(8, [&] { criterion8(st, property_failed); });
  guarded(1, [&] { criterion1(st); });
  guarded(2, [&] { criterion2(runs); });
  guarded(3, [&] { criterion3(st); });
  guarded(4, [&] { criterion4(st); });
  guarded(5, [&] { criterion5(st); });
  guarded(6, [&] { criterion6(runs); });
  guarded(7, [&] { criterion7(runs); });
  guarded(9, [&] { criterion9(runs, st); });

  if (crashed || property_failed) return 1;
  if (st.report_only) return 0;
  return g_any_fail ? 1 : 0;
}
