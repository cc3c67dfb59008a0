#include "rrbart/selection.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "rrbart/error.h"
#include "rrbart/parallel.h"
#include "rrbart/stats.h"

namespace rrbart {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SelectionResult base_result(const std::string& method, const DataMatrix& dm) {
  SelectionResult r;
  r.method = method;
  r.columns = dm.predictor_indices();
  for (auto c : r.columns) r.names.push_back(dm.column(c).name);
  return r;
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
}

std::vector<double> outcome_vector(const DataMatrix& dm) { return dm.column_values(dm.outcome_index()); }

}  // namespace

// ---------------------------------------------------------------------------
// Rubin pooling

RubinPool pool_rubins(const VipDraws& v, double alpha, double n_eff) {
  check_alpha(alpha);
  const std::size_t k = v.predictors(), m = v.imputations(), p = v.draws();
  if (m < 2) throw ConfigError("Rubin pooling needs at least two imputations");
  if (p < 2) throw ConfigError("Rubin pooling needs at least two posterior draws");
  if (!(n_eff > 0.0)) throw ConfigError("within-variance divisor must be positive");

  RubinPool out;
  auto means = v.predictor_means();
  out.reference = static_cast<std::size_t>(std::min_element(means.begin(), means.end()) - means.begin());
  const double ref = means[out.reference];
  const double md = static_cast<double>(m);
  out.stats.resize(k);
  std::vector<double> delta(p), per_m(m);
  for (std::size_t j = 0; j < k; ++j) {
    auto& s = out.stats[j];
    double w = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t d = 0; d < p; ++d) delta[d] = v.at(j, i, d) - ref;
      per_m[i] = mean(delta);
      w += sample_variance(delta) / n_eff;
    }
    s.q_bar = mean(per_m);
    s.within = w / md;
    double b = 0.0;
    for (double x : per_m) b += (x - s.q_bar) * (x - s.q_bar);
    s.between = b / (md - 1.0);
    s.total = s.within + (1.0 + 1.0 / md) * s.between;
    if (s.between > 0.0) {
      double r = (s.between + s.between / md) / s.total;
      s.df = (md - 1.0) / (r * r);
    } else {
      s.df = kInf;
    }
    if (s.total > 0.0) {
      double half = t_quantile(s.df, 1.0 - alpha) * std::sqrt(s.total);
      s.lo = s.q_bar - half;
      s.hi = s.q_bar + half;
      s.selected = s.lo > 0.0 || s.hi < 0.0;
    } else {
      s.degenerate = true;
      s.lo = s.hi = s.q_bar;
      // rounding in the centering can leave |q_bar| ~ 1e-17 on exact ties
      s.selected = s.q_bar > 1e-12;
    }
    if (j == out.reference) s.selected = false;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Results

std::vector<std::string> SelectionResult::selected_names() const {
  std::vector<std::string> out;
  for (auto s : selected) out.push_back(names[s]);
  return out;
}

std::string SelectionResult::report() const {
  std::ostringstream out;
  out << "method = " << method << '\n';
  out << "selected =";
  for (std::size_t i = 0; i < selected.size(); ++i) out << (i ? ", " : " ") << names[selected[i]];
  out << '\n';
  out << "n_selected = " << selected.size() << '\n';
  out << "all_selected = " << (all_selected ? "true" : "false") << '\n';
  if (!mean_vip.empty()) out << "min_mean_vip = " << format_double(min_mean_vip) << '\n';
  if (!notes.empty()) out << "notes = " << notes << '\n';
  out << "\n[parameters]\n" << parameters.dump();
  out << "\n[predictors]\n";
  out << "name,selected";
  if (!mean_vip.empty()) out << ",mean_vip";
  if (!pooled.empty()) out << ",q_bar,within,between,total,df,lo,hi,degenerate";
  if (!frequency.empty()) out << ",frequency";
  out << '\n';
  std::vector<std::uint8_t> chosen(names.size(), 0);
  for (auto s : selected) chosen[s] = 1;
  for (std::size_t j = 0; j < names.size(); ++j) {
    out << names[j] << ',' << int(chosen[j]);
    if (!mean_vip.empty()) out << ',' << format_double(mean_vip[j]);
    if (!pooled.empty()) {
      const auto& p = pooled[j];
      out << ',' << format_double(p.q_bar) << ',' << format_double(p.within) << ',' << format_double(p.between) << ','
          << format_double(p.total) << ',' << (std::isinf(p.df) ? std::string("inf") : format_double(p.df)) << ','
          << format_double(p.lo) << ',' << format_double(p.hi) << ',' << int(p.degenerate);
    }
    if (!frequency.empty()) out << ',' << format_double(frequency[j]);
    out << '\n';
  }
  return out.str();
}

Config SelectionParams::to_config() const {
  Config c;
  c.set("alpha", format_double(alpha));
  c.set("m_imputations", std::to_string(m_imputations));
  c.set("b_bootstrap", std::to_string(b_bootstrap));
  c.set("n_perm", std::to_string(n_perm));
  c.set("pi", format_double(pi));
  c.set("within_divisor", divisor == WithinDivisor::sample_size ? "n" : "P");
  c.set("bart.n_trees", std::to_string(bart.n_trees));
  c.set("bart.k", format_double(bart.k));
  c.set("bart.base", format_double(bart.base));
  c.set("bart.power", format_double(bart.power));
  c.set("bart.n_draws", std::to_string(bart.n_draws));
  c.set("bart.burn_in", std::to_string(bart.burn_in));
  c.set("impute.max_iter", std::to_string(impute.max_iter));
  c.set("impute.n_trees", std::to_string(impute.forest.n_trees));
  c.set("rfe.rounds", std::to_string(rfe.gbt.rounds));
  c.set("rfe.learning_rate", format_double(rfe.gbt.learning_rate));
  c.set("rfe.max_depth", std::to_string(rfe.gbt.max_depth));
  c.set("rfe.colsample", format_double(rfe.gbt.colsample));
  c.set("rfe.folds", std::to_string(rfe.folds));
  return c;
}

SelectionParams SelectionParams::from_config(const Config& c) {
  SelectionParams p;
  auto sz = [&](const std::string& key, std::size_t fallback) {
    auto v = c.get_int(key, static_cast<std::int64_t>(fallback));
    if (v < 0) throw ConfigError("config key '" + key + "' must be nonnegative");
    return static_cast<std::size_t>(v);
  };
  p.alpha = c.get_double("alpha", p.alpha);
  p.m_imputations = sz("m_imputations", p.m_imputations);
  p.b_bootstrap = sz("b_bootstrap", p.b_bootstrap);
  p.n_perm = sz("n_perm", p.n_perm);
  p.pi = c.get_double("pi", p.pi);
  auto div = c.get_string("within_divisor", "n");
  if (div == "n") p.divisor = WithinDivisor::sample_size;
  else if (div == "P") p.divisor = WithinDivisor::draws;
  else throw ConfigError("within_divisor must be n or P");
  p.bart.n_trees = sz("bart.n_trees", p.bart.n_trees);
  p.bart.k = c.get_double("bart.k", p.bart.k);
  p.bart.base = c.get_double("bart.base", p.bart.base);
  p.bart.power = c.get_double("bart.power", p.bart.power);
  p.bart.n_draws = sz("bart.n_draws", p.bart.n_draws);
  p.bart.burn_in = sz("bart.burn_in", p.bart.burn_in);
  p.impute.max_iter = sz("impute.max_iter", p.impute.max_iter);
  p.impute.forest.n_trees = sz("impute.n_trees", p.impute.forest.n_trees);
  p.rfe.gbt.rounds = sz("rfe.rounds", p.rfe.gbt.rounds);
  p.rfe.gbt.learning_rate = c.get_double("rfe.learning_rate", p.rfe.gbt.learning_rate);
  p.rfe.gbt.max_depth = static_cast<int>(c.get_int("rfe.max_depth", p.rfe.gbt.max_depth));
  p.rfe.gbt.colsample = c.get_double("rfe.colsample", p.rfe.gbt.colsample);
  p.rfe.folds = sz("rfe.folds", p.rfe.folds);
  p.bart.validate();
  check_alpha(p.alpha);
  return p;
}

// ---------------------------------------------------------------------------
// RR-BART

VipRun rr_vip_draws(const DataMatrix& dm, const SelectionParams& params, std::uint64_t seed) {
  if (params.m_imputations < 2) throw ConfigError("RR-BART needs at least two imputations");
  VipRun run;
  run.imputations.resize(params.m_imputations);
  std::vector<BartPosterior> posts(params.m_imputations);
  BartParams bp = params.bart;
  bp.keep_trees = false;
  const auto predictors = dm.predictor_indices();
  const std::uint64_t impute_seed = derive_seed(seed, 1);
  parallel_for(params.m_imputations, params.workers, [&](std::size_t m) {
    run.imputations[m] = iterative_forest_impute(dm, params.impute, derive_seed(impute_seed, m));
    const auto& done = run.imputations[m].completed;
    posts[m] = fit_bart_probit(done, done.outcome_index(), bp, derive_seed(seed, 2, m), predictors);
  });
  run.draws = vip_draws(posts);
  return run;
}

SelectionResult rr_select_from_draws(const DataMatrix& dm, const VipDraws& v, const SelectionParams& params) {
  SelectionResult r = base_result("rr-bart", dm);
  r.parameters = params.to_config();
  const std::size_t k = v.predictors();
  if (k != r.columns.size()) throw RuntimeFailure("VIP draws do not match the predictor count");
  r.mean_vip = v.predictor_means();
  r.min_mean_vip = *std::min_element(r.mean_vip.begin(), r.mean_vip.end());
  if (r.min_mean_vip > 1.0 / (2.0 * static_cast<double>(k))) {
    r.all_selected = true;
    r.selected.resize(k);
    std::iota(r.selected.begin(), r.selected.end(), 0);
    r.notes = "minimum mean VIP exceeds 1/(2K); no selection performed";
    return r;
  }
  double n_eff = params.divisor == WithinDivisor::sample_size ? static_cast<double>(dm.rows())
                                                              : static_cast<double>(v.draws());
  auto pool = pool_rubins(v, params.alpha, n_eff);
  r.pooled = pool.stats;
  bool degenerate = false;
  for (std::size_t j = 0; j < k; ++j) {
    if (pool.stats[j].selected) r.selected.push_back(j);
    degenerate = degenerate || pool.stats[j].degenerate;
  }
  r.notes = "reference = " + r.names[pool.reference];
  if (degenerate) r.notes += "; zero total variance for some predictors";
  return r;
}

SelectionResult rr_bart_select(const DataMatrix& dm, const SelectionParams& params, std::uint64_t seed) {
  check_alpha(params.alpha);
  if (!dm.has_missing())
    throw DataError("data has no missing cells; use permutation selection (method bart) instead of rr-bart");
  auto run = rr_vip_draws(dm, params, seed);
  return rr_select_from_draws(dm, run.draws, params);
}

SelectionResult rr_median_baseline(const DataMatrix& dm, const VipDraws& v) {
  SelectionResult r = base_result("rr-median", dm);
  if (v.predictors() < 2) throw ConfigError("median baseline needs at least two predictors");
  r.mean_vip = v.predictor_means();
  r.min_mean_vip = *std::min_element(r.mean_vip.begin(), r.mean_vip.end());
  std::vector<double> sorted = r.mean_vip;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t k = sorted.size();
  double med = k % 2 ? sorted[k / 2] : 0.5 * (sorted[k / 2 - 1] + sorted[k / 2]);
  for (std::size_t j = 0; j < k; ++j)
    if (r.mean_vip[j] > med) r.selected.push_back(j);
  return r;
}

SelectionResult rr_pooled_draws_select(const DataMatrix& dm, const VipDraws& v, double alpha) {
  check_alpha(alpha);
  SelectionResult r = base_result("rr-pooled", dm);
  const std::size_t k = v.predictors(), m = v.imputations(), p = v.draws();
  if (m * p < 20) throw ConfigError("pooled-draws selection needs at least 20 draws in total");
  r.mean_vip = v.predictor_means();
  auto ref_it = std::min_element(r.mean_vip.begin(), r.mean_vip.end());
  r.min_mean_vip = *ref_it;
  const double ref = r.min_mean_vip;
  std::vector<double> all(m * p);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t d = 0; d < p; ++d) all[i * p + d] = v.at(j, i, d) - ref;
    if (quantile_type7(all, alpha) > 0.0) r.selected.push_back(j);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Bootstrap imputation

std::string to_string(BaseSelector b) { return b == BaseSelector::bart_permutation ? "bart_permutation" : "gbt_rfe"; }
std::string to_string(Engine e) { return e == Engine::bart ? "bart" : "gbt"; }
std::string to_string(OutcomeMode m) { return m == OutcomeMode::impute_y ? "impute_y" : "exclude_y"; }

std::vector<std::size_t> engine_select(const FeatureMatrix& x, std::span<const double> y, Engine engine,
                                       const SelectionParams& params, bool mia, std::uint64_t seed) {
  if (engine == Engine::bart) {
    BartParams bp = params.bart;
    bp.mia = mia;
    return permutation_select(x, y, bp, params.n_perm, params.alpha, seed).selected;
  }
  RfeParams rp = params.rfe;
  rp.gbt.mia = mia;
  return rfe_select(x, y, rp, seed).selected;
}

std::vector<double> BootstrapSelections::frequencies() const {
  std::vector<double> f(n_features, 0.0);
  for (const auto& s : per_dataset)
    for (auto j : s) f[j] += 1.0;
  for (auto& v : f) v /= static_cast<double>(per_dataset.size());
  return f;
}

BootstrapSelections bootstrap_selections(const BootstrapImputedSet& sets, BaseSelector base,
                                         const SelectionParams& params, std::uint64_t seed) {
  if (sets.datasets.empty()) throw ConfigError("no bootstrap datasets");
  BootstrapSelections out;
  out.base = base;
  const auto& first = sets.datasets.front();
  const auto predictors = first.predictor_indices();
  out.n_features = predictors.size();
  out.per_dataset.resize(sets.datasets.size());
  const Engine engine = base == BaseSelector::bart_permutation ? Engine::bart : Engine::gbt;
  parallel_for(sets.datasets.size(), params.workers, [&](std::size_t b) {
    const auto& d = sets.datasets[b];
    out.per_dataset[b] =
        engine_select(d.features(predictors), outcome_vector(d), engine, params, false, derive_seed(seed, b));
  });
  return out;
}

std::vector<std::size_t> threshold_selections(const BootstrapSelections& s, double pi) {
  if (!(pi > 0.0 && pi <= 1.0)) throw ConfigError("pi must lie in (0, 1]");
  const double b = static_cast<double>(s.per_dataset.size());
  const double need = std::ceil(pi * b - 1e-9);
  std::vector<double> count(s.n_features, 0.0);
  for (const auto& d : s.per_dataset)
    for (auto j : d) count[j] += 1.0;
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < s.n_features; ++j)
    if (count[j] >= need) out.push_back(j);
  return out;
}

SelectionResult bi_select(const DataMatrix& dm, const BootstrapSelections& s, double pi) {
  SelectionResult r = base_result(s.base == BaseSelector::bart_permutation ? "bi-bart" : "bi-xgb", dm);
  if (s.n_features != r.columns.size()) throw RuntimeFailure("bootstrap selections do not match the predictor count");
  r.selected = threshold_selections(s, pi);
  r.frequency = s.frequencies();
  r.parameters.set("pi", format_double(pi));
  return r;
}

SelectionResult bi_select(const DataMatrix& dm, BaseSelector base, const SelectionParams& params, std::uint64_t seed) {
  if (params.b_bootstrap < 10) throw ConfigError("bootstrap selection needs B >= 10");
  if (!(params.pi > 0.0 && params.pi <= 1.0)) throw ConfigError("pi must lie in (0, 1]");
  auto sets = bootstrap_impute(dm, params.b_bootstrap, params.impute, derive_seed(seed, 1), params.workers);
  auto sel = bootstrap_selections(sets, base, params, derive_seed(seed, base == BaseSelector::bart_permutation ? 2 : 3));
  SelectionResult r = bi_select(dm, sel, params.pi);
  r.parameters = params.to_config();
  return r;
}

// ---------------------------------------------------------------------------
// MIA and complete cases

SelectionResult mia_select(const DataMatrix& dm, Engine engine, OutcomeMode mode, const SelectionParams& params,
                           std::uint64_t seed) {
  SelectionResult r = base_result("mia-" + std::string(engine == Engine::bart ? "bart" : "xgb") + "-" +
                                      (mode == OutcomeMode::impute_y ? "impute" : "exclude"),
                                  dm);
  r.parameters = params.to_config();
  const std::size_t o = dm.outcome_index();
  std::vector<double> y;
  FeatureMatrix x;
  if (mode == OutcomeMode::exclude_y) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < dm.rows(); ++i)
      if (dm.observed(i, o)) rows.push_back(i);
    if (rows.size() < 50) throw DataError("fewer than 50 rows with an observed outcome");
    DataMatrix kept = dm.select_rows(rows);
    x = kept.features(r.columns);
    y = outcome_vector(kept);
  } else {
    x = dm.features(r.columns);
    if (dm.column_has_missing(o)) {
      auto imp = iterative_forest_impute(dm, params.impute, derive_seed(seed, 0));
      y = outcome_vector(imp.completed);
    } else {
      y = outcome_vector(dm);
    }
  }
  r.selected = engine_select(x, y, engine, params, true, derive_seed(seed, 1));
  return r;
}

SelectionResult complete_case_select(const DataMatrix& dm, Engine engine, const SelectionParams& params,
                                     std::uint64_t seed) {
  SelectionResult r = base_result(engine == Engine::bart ? "cc-bart" : "cc-xgb", dm);
  r.parameters = params.to_config();
  auto rows = dm.complete_rows();
  if (rows.size() < 50) throw DataError("fewer than 50 complete rows");
  DataMatrix kept = dm.select_rows(rows);
  r.selected = engine_select(kept.features(r.columns), outcome_vector(kept), engine, params, false, derive_seed(seed, 1));
  r.notes = "complete rows = " + std::to_string(rows.size());
  return r;
}

// ---------------------------------------------------------------------------
// Registry

const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names{"rr-bart",        "rr-median",      "rr-pooled",      "bi-bart",
                                              "bi-xgb",         "mia-bart-impute", "mia-bart-exclude", "mia-xgb-impute",
                                              "mia-xgb-exclude", "cc-bart",        "cc-xgb",         "bart",
                                              "xgb"};
  return names;
}

Engine method_engine(const std::string& method) {
  if (method.find("xgb") != std::string::npos) return Engine::gbt;
  return Engine::bart;
}

SelectionResult run_method(const std::string& method, const DataMatrix& dm, const SelectionParams& params,
                           std::uint64_t seed) {
  if (method == "rr-bart") return rr_bart_select(dm, params, seed);
  if (method == "rr-median" || method == "rr-pooled") {
    if (!dm.has_missing()) throw DataError("data has no missing cells; " + method + " needs imputation");
    auto run = rr_vip_draws(dm, params, seed);
    auto r = method == "rr-median" ? rr_median_baseline(dm, run.draws) : rr_pooled_draws_select(dm, run.draws, params.alpha);
    r.parameters = params.to_config();
    return r;
  }
  if (method == "bi-bart") return bi_select(dm, BaseSelector::bart_permutation, params, seed);
  if (method == "bi-xgb") return bi_select(dm, BaseSelector::gbt_rfe, params, seed);
  if (method == "mia-bart-impute") return mia_select(dm, Engine::bart, OutcomeMode::impute_y, params, seed);
  if (method == "mia-bart-exclude") return mia_select(dm, Engine::bart, OutcomeMode::exclude_y, params, seed);
  if (method == "mia-xgb-impute") return mia_select(dm, Engine::gbt, OutcomeMode::impute_y, params, seed);
  if (method == "mia-xgb-exclude") return mia_select(dm, Engine::gbt, OutcomeMode::exclude_y, params, seed);
  if (method == "cc-bart") return complete_case_select(dm, Engine::bart, params, seed);
  if (method == "cc-xgb") return complete_case_select(dm, Engine::gbt, params, seed);
  if (method == "bart" || method == "xgb") {
    if (dm.has_missing()) throw DataError("method " + method + " needs fully observed data");
    SelectionResult r = base_result(method, dm);
    r.parameters = params.to_config();
    r.selected = engine_select(dm.features(r.columns), outcome_vector(dm), method_engine(method), params, false,
                               derive_seed(seed, 1));
    return r;
  }
  throw ConfigError("unknown method: " + method);
}

}  // namespace rrbart
