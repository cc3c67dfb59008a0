#include "rrbart/experiment.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "rrbart/error.h"
#include "rrbart/parallel.h"

namespace rrbart {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool is_rr(const std::string& m) { return m == "rr-bart" || m == "rr-median" || m == "rr-pooled"; }
bool is_bi(const std::string& m) { return m == "bi-bart" || m == "bi-xgb"; }

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
  return s;
}

}  // namespace

std::uint64_t method_stream(const std::string& method) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : method) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<MethodGroup> method_groups(const std::vector<std::string>& methods, const std::vector<double>& pis,
                                       const SelectionParams& params) {
  const auto& known = method_names();
  for (const auto& m : methods)
    if (std::find(known.begin(), known.end(), m) == known.end()) throw ConfigError("unknown method: " + m);
  if (pis.empty()) throw ConfigError("need at least one pi for bootstrap methods");
  for (double pi : pis)
    if (!(pi > 0.0 && pi <= 1.0)) throw ConfigError("pi must lie in (0, 1]");

  std::vector<MethodGroup> groups;
  std::vector<std::string> rr, bi;
  for (const auto& m : methods) {
    if (is_rr(m)) rr.push_back(m);
    else if (is_bi(m)) bi.push_back(m);
  }
  if (!rr.empty()) {
    MethodGroup g;
    g.labels = rr;
    g.engines.assign(rr.size(), Engine::bart);
    g.run = [rr, params](const DataMatrix& dm, std::uint64_t seed) {
      if (!dm.has_missing()) throw DataError("data has no missing cells; RR methods need imputation");
      auto t0 = std::chrono::steady_clock::now();
      auto run = rr_vip_draws(dm, params, derive_seed(seed, method_stream("rr")));
      double t = seconds_since(t0);
      std::vector<SelectionResult> out;
      for (const auto& m : rr) {
        auto t1 = std::chrono::steady_clock::now();
        SelectionResult r = m == "rr-bart"     ? rr_select_from_draws(dm, run.draws, params)
                            : m == "rr-median" ? rr_median_baseline(dm, run.draws)
                                               : rr_pooled_draws_select(dm, run.draws, params.alpha);
        r.seconds = t + seconds_since(t1);
        out.push_back(std::move(r));
      }
      return out;
    };
    groups.push_back(std::move(g));
  }
  if (!bi.empty()) {
    MethodGroup g;
    for (const auto& m : bi)
      for (double pi : pis) {
        g.labels.push_back(m + "@" + format_double(pi));
        g.engines.push_back(m == "bi-bart" ? Engine::bart : Engine::gbt);
      }
    g.run = [bi, pis, params](const DataMatrix& dm, std::uint64_t seed) {
      if (params.b_bootstrap < 10) throw ConfigError("bootstrap selection needs B >= 10");
      const std::uint64_t s = derive_seed(seed, method_stream("bi"));
      auto t0 = std::chrono::steady_clock::now();
      auto sets = bootstrap_impute(dm, params.b_bootstrap, params.impute, derive_seed(s, 1), params.workers);
      double t_impute = seconds_since(t0);
      std::vector<SelectionResult> out;
      for (const auto& m : bi) {
        auto base = m == "bi-bart" ? BaseSelector::bart_permutation : BaseSelector::gbt_rfe;
        auto t1 = std::chrono::steady_clock::now();
        auto sel = bootstrap_selections(sets, base, params, derive_seed(s, base == BaseSelector::bart_permutation ? 2 : 3));
        double t = t_impute + seconds_since(t1);
        for (double pi : pis) {
          auto r = bi_select(dm, sel, pi);
          r.parameters = params.to_config();
          r.parameters.set("pi", format_double(pi));
          r.seconds = t;
          out.push_back(std::move(r));
        }
      }
      return out;
    };
    groups.push_back(std::move(g));
  }
  for (const auto& m : methods) {
    if (is_rr(m) || is_bi(m)) continue;
    MethodGroup g;
    g.labels = {m};
    g.engines = {method_engine(m)};
    g.run = [m, params](const DataMatrix& dm, std::uint64_t seed) {
      auto t0 = std::chrono::steady_clock::now();
      auto r = run_method(m, dm, params, derive_seed(seed, method_stream(m)));
      r.seconds = seconds_since(t0);
      return std::vector<SelectionResult>{std::move(r)};
    };
    groups.push_back(std::move(g));
  }
  return groups;
}

std::vector<AucDistribution> cv_auc_group(const DataMatrix& dm, const MethodGroup& group, const CvAucParams& params,
                                          std::uint64_t seed) {
  MultiSelector multi = [&](const DataMatrix& half, std::uint64_t s) {
    std::vector<std::vector<std::size_t>> out;
    for (auto& r : group.run(half, s)) out.push_back(std::move(r.selected));
    return out;
  };
  return cv_auc_multi(dm, multi, group.engines, params, seed);
}

Config SimulationSpec::to_config() const {
  Config c = scenario.to_config();
  std::vector<std::string> pi_text;
  for (double p : pis) pi_text.push_back(format_double(p));
  c.set("simulation.methods", join(methods));
  c.set("simulation.pis", join(pi_text));
  c.set("simulation.replications", std::to_string(replications));
  c.set("simulation.seed", std::to_string(seed));
  c.set("simulation.cv_repeats", std::to_string(cv_repeats));
  auto pc = params.to_config();
  for (const auto& [k, v] : pc.values()) c.set("selection." + k, v);
  return c;
}

SimulationSpec SimulationSpec::from_config(const Config& c) {
  SimulationSpec s;
  s.scenario = ScenarioSpec::from_config(c);
  s.methods = c.get_strings("simulation.methods", s.methods);
  s.pis = c.get_doubles("simulation.pis", s.pis);
  s.replications = static_cast<std::size_t>(c.get_int("simulation.replications", static_cast<std::int64_t>(s.replications)));
  s.seed = c.get_u64("simulation.seed", s.seed);
  s.cv_repeats = static_cast<std::size_t>(c.get_int("simulation.cv_repeats", 0));
  s.params = SelectionParams::from_config(c.subtree("selection"));
  return s;
}

ReplicationResult run_replication(const SimulationSpec& spec, std::size_t replication) {
  ReplicationResult rep;
  rep.replication = replication;
  rep.data_seed = derive_seed(spec.seed, replication);
  auto groups = method_groups(spec.methods, spec.pis, spec.params);

  DataMatrix data;
  try {
    ScenarioSpec sc = spec.scenario;
    sc.seed = rep.data_seed;
    auto gen = generate_complete(sc);
    auto patterns = preset_patterns(gen.data, sc.preset);
    data = ampute(gen.data, patterns, derive_seed(rep.data_seed, 1));
  } catch (const std::exception& e) {
    rep.error = e.what();
    return rep;
  }
  rep.incomplete_rows = missingness_summary(data).incomplete_row_fraction;
  const auto predictors = data.predictor_indices();
  rep.n_features = predictors.size();
  std::vector<std::size_t> truth(10);
  for (std::size_t j = 0; j < 10; ++j) truth[j] = j;
  const std::uint64_t method_seed = derive_seed(rep.data_seed, 2);

  for (const auto& g : groups) {
    std::vector<MethodOutcome> outs(g.labels.size());
    for (std::size_t o = 0; o < outs.size(); ++o) {
      outs[o].label = g.labels[o];
      outs[o].auc = kNaN;
    }
    bool selected_ok = false;
    try {
      auto results = g.run(data, method_seed);
      for (std::size_t o = 0; o < outs.size(); ++o) {
        outs[o].selected = results[o].selected;
        outs[o].all_selected = results[o].all_selected;
        outs[o].min_mean_vip = results[o].min_mean_vip;
        outs[o].seconds = results[o].seconds;
        outs[o].metrics = selection_metrics(outs[o].selected, truth, rep.n_features);
      }
      selected_ok = true;
      if (spec.cv_repeats > 0) {
        CvAucParams cp;
        cp.repeats = spec.cv_repeats;
        cp.bart.n_draws = spec.params.bart.n_draws;
        cp.bart.burn_in = spec.params.bart.burn_in;
        cp.impute = spec.params.impute;
        cp.gbt = spec.params.rfe.gbt;
        auto aucs = cv_auc_group(data, g, cp, derive_seed(rep.data_seed, 3));
        for (std::size_t o = 0; o < outs.size(); ++o) {
          outs[o].auc = aucs[o].summary.mean;
          outs[o].auc_empty = std::any_of(aucs[o].empty_selection.begin(), aucs[o].empty_selection.end(),
                                          [](std::uint8_t e) { return e != 0; });
        }
      }
    } catch (const std::exception& e) {
      // a cv failure keeps the selection; only the AUC is lost
      for (auto& o : outs) (selected_ok ? o.cv_error : o.error) = e.what();
    }
    for (auto& o : outs) rep.outcomes.push_back(std::move(o));
  }
  return rep;
}

std::vector<ReplicationResult> run_simulation(const SimulationSpec& spec) {
  if (spec.replications < 1) throw ConfigError("simulation needs at least one replication");
  std::vector<ReplicationResult> reps(spec.replications);
  SimulationSpec inner = spec;
  inner.params.workers = 1;
  parallel_for(spec.replications, spec.workers, [&](std::size_t r) { reps[r] = run_replication(inner, r); });
  return reps;
}

std::vector<MethodAggregate> aggregate(const std::vector<ReplicationResult>& reps) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const MethodOutcome*>> by_label;
  std::size_t n_features = 0;
  for (const auto& r : reps) {
    n_features = std::max(n_features, r.n_features);
    for (const auto& o : r.outcomes) {
      if (!by_label.count(o.label)) order.push_back(o.label);
      by_label[o.label].push_back(&o);
    }
  }
  std::vector<MethodAggregate> out;
  for (const auto& label : order) {
    MethodAggregate a;
    a.label = label;
    a.power.assign(n_features, 0.0);
    std::vector<double> p, rc, f, t, au, sec;
    double all = 0.0, vip = 0.0;
    for (const auto* o : by_label[label]) {
      if (!o->error.empty()) {
        ++a.failed;
        continue;
      }
      ++a.ok;
      if (!o->metrics.precision_na) p.push_back(o->metrics.precision);
      if (!o->metrics.recall_na) rc.push_back(o->metrics.recall);
      f.push_back(o->metrics.f1);
      if (!o->metrics.type_i_na) t.push_back(o->metrics.type_i);
      if (!std::isnan(o->auc)) au.push_back(o->auc);
      sec.push_back(o->seconds);
      all += o->all_selected;
      vip += o->min_mean_vip;
      for (auto j : o->selected) a.power[j] += 1.0;
    }
    a.precision = summarize(p);
    a.recall = summarize(rc);
    a.f1 = summarize(f);
    a.type_i = summarize(t);
    a.auc = summarize(au);
    a.seconds = summarize(sec);
    if (a.ok) {
      a.all_selected_rate = all / static_cast<double>(a.ok);
      a.mean_min_vip = vip / static_cast<double>(a.ok);
      for (auto& v : a.power) v /= static_cast<double>(a.ok);
    }
    out.push_back(std::move(a));
  }
  return out;
}

std::string aggregate_csv(const std::vector<MethodAggregate>& agg) {
  std::ostringstream out;
  out << "method,ok,failed,auc,auc_se,auc_lo,auc_hi,precision,precision_se,recall,recall_se,f1,f1_se,type_i,type_i_se,"
         "all_selected_rate,mean_min_vip\n";
  auto v = [](double x) { return std::isnan(x) ? std::string("NA") : format_double(x); };
  for (const auto& a : agg) {
    out << a.label << ',' << a.ok << ',' << a.failed << ',' << v(a.auc.mean) << ',' << v(a.auc.se) << ','
        << v(a.auc.lo) << ',' << v(a.auc.hi) << ',' << v(a.precision.mean) << ',' << v(a.precision.se) << ','
        << v(a.recall.mean) << ',' << v(a.recall.se) << ',' << v(a.f1.mean) << ',' << v(a.f1.se) << ','
        << v(a.type_i.mean) << ',' << v(a.type_i.se) << ',' << v(a.all_selected_rate) << ',' << v(a.mean_min_vip)
        << '\n';
  }
  return out.str();
}

std::string replication_csv(const std::vector<ReplicationResult>& reps, const std::vector<std::string>& names) {
  std::ostringstream out;
  out << "replication,data_seed,method,precision,recall,f1,type_i,auc,all_selected,min_mean_vip,selected,error\n";
  auto v = [](double x, bool na) { return na || std::isnan(x) ? std::string("NA") : format_double(x); };
  for (const auto& r : reps) {
    if (!r.error.empty()) {
      out << r.replication << ',' << r.data_seed << ",,NA,NA,NA,NA,NA,NA,NA,,\"" << r.error << "\"\n";
      continue;
    }
    for (const auto& o : r.outcomes) {
      std::string sel;
      for (std::size_t i = 0; i < o.selected.size(); ++i)
        sel += (i ? " " : "") + (o.selected[i] < names.size() ? names[o.selected[i]] : std::to_string(o.selected[i]));
      bool failed = !o.error.empty();
      out << r.replication << ',' << r.data_seed << ',' << o.label << ',' << v(o.metrics.precision, failed || o.metrics.precision_na)
          << ',' << v(o.metrics.recall, failed || o.metrics.recall_na) << ',' << v(o.metrics.f1, failed) << ','
          << v(o.metrics.type_i, failed || o.metrics.type_i_na) << ',' << v(o.auc, failed) << ',' << int(o.all_selected)
          << ',' << v(o.min_mean_vip, failed) << ',' << sel << ",\"" << (failed ? o.error : o.cv_error.empty() ? "" : "cv: " + o.cv_error) << "\"\n";
    }
  }
  return out.str();
}

std::string timing_csv(const std::vector<ReplicationResult>& reps) {
  std::ostringstream out;
  out << "replication,method,seconds\n";
  for (const auto& r : reps)
    for (const auto& o : r.outcomes) out << r.replication << ',' << o.label << ',' << format_double(o.seconds) << '\n';
  return out.str();
}

std::string power_csv(const std::vector<MethodAggregate>& agg, const std::vector<std::string>& names) {
  std::ostringstream out;
  out << "method";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (const auto& a : agg) {
    out << a.label;
    for (double p : a.power) out << ',' << format_double(p);
    out << '\n';
  }
  return out.str();
}

}  // namespace rrbart
