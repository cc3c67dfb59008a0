#include "rrbart/evaluation.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "rrbart/error.h"
#include "rrbart/parallel.h"
#include "rrbart/random.h"
#include "rrbart/stats.h"

namespace rrbart {

MetricReport selection_metrics(std::span<const std::size_t> selected, std::span<const std::size_t> truth,
                               std::size_t k_total) {
  std::vector<std::uint8_t> is_true(k_total, 0), is_sel(k_total, 0);
  for (auto t : truth) {
    if (t >= k_total) throw ConfigError("truth index out of range");
    is_true[t] = 1;
  }
  for (auto s : selected) {
    if (s >= k_total) throw ConfigError("selected index out of range");
    is_sel[s] = 1;
  }
  std::size_t n_sel = 0, n_true = 0, hit = 0, noise = 0, noise_sel = 0;
  for (std::size_t j = 0; j < k_total; ++j) {
    n_sel += is_sel[j];
    n_true += is_true[j];
    hit += is_sel[j] & is_true[j];
    if (!is_true[j]) {
      ++noise;
      noise_sel += is_sel[j];
    }
  }
  MetricReport m;
  if (n_sel == 0) m.precision_na = true;
  else m.precision = static_cast<double>(hit) / static_cast<double>(n_sel);
  if (n_true == 0) m.recall_na = true;
  else m.recall = static_cast<double>(hit) / static_cast<double>(n_true);
  if (!m.precision_na && !m.recall_na && m.precision + m.recall > 0)
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  if (noise == 0) m.type_i_na = true;
  else m.type_i = static_cast<double>(noise_sel) / static_cast<double>(noise);
  return m;
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw DataError("scores and labels differ in length");
  double a = rank_auc(scores, labels);
  if (std::isnan(a)) throw DataError("AUC needs both outcome classes");
  return a;
}

Summary summarize(std::span<const double> v) {
  Summary s;
  s.count = v.size();
  if (v.empty()) {
    s.mean = s.se = s.lo = s.hi = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  s.mean = mean(v);
  s.se = v.size() > 1 ? std::sqrt(sample_variance(v) / static_cast<double>(v.size())) : 0.0;
  std::vector<double> c(v.begin(), v.end());
  s.lo = quantile_type7(c, 0.025);
  s.hi = quantile_type7(c, 0.975);
  return s;
}

std::vector<std::uint8_t> stratified_halves(const DataMatrix& dm, std::uint64_t seed) {
  const std::size_t o = dm.outcome_index();
  std::vector<std::size_t> groups[3];
  for (std::size_t i = 0; i < dm.rows(); ++i) {
    if (!dm.observed(i, o)) groups[2].push_back(i);
    else groups[dm.value(i, o) == 1.0 ? 1 : 0].push_back(i);
  }
  Rng rng(seed);
  std::vector<std::uint8_t> first(dm.rows(), 0);
  for (auto& g : groups) {
    rng.shuffle(g);
    for (std::size_t k = 0; k < (g.size() + 1) / 2; ++k) first[g[k]] = 1;
  }
  return first;
}

std::vector<AucDistribution> cv_auc_multi(const DataMatrix& dm, const MultiSelector& selector,
                                          const std::vector<Engine>& engines, const CvAucParams& params,
                                          std::uint64_t seed) {
  if (dm.rows() < 100) throw DataError("cross-validated AUC needs at least 100 rows");
  if (params.repeats < 1) throw ConfigError("cv AUC needs at least one repeat");
  const std::size_t n_out = engines.size();
  std::vector<AucDistribution> out(n_out);
  for (auto& d : out) {
    d.values.resize(params.repeats);
    d.empty_selection.resize(params.repeats);
    d.n_selected.resize(params.repeats);
  }
  const auto predictors = dm.predictor_indices();
  const std::size_t o = dm.outcome_index();

  parallel_for(params.repeats, params.workers, [&](std::size_t r) {
    auto mask = stratified_halves(dm, derive_seed(seed, r, 0));
    std::vector<std::size_t> r1, r2;
    for (std::size_t i = 0; i < dm.rows(); ++i) (mask[i] ? r1 : r2).push_back(i);
    DataMatrix h1 = dm.select_rows(r1), h2 = dm.select_rows(r2);

    auto sels = selector(h1, derive_seed(seed, r, 1));
    if (sels.size() != n_out) throw RuntimeFailure("selector returned the wrong number of selections");
    std::vector<int> labels;
    std::vector<std::size_t> scored;
    for (std::size_t i = 0; i < h2.rows(); ++i)
      if (h2.observed(i, o)) {
        scored.push_back(i);
        labels.push_back(h2.value(i, o) == 1.0);
      }
    DataMatrix i1, i2;
    bool imputed = false;
    std::map<std::pair<int, std::vector<std::size_t>>, double> cache;
    for (std::size_t k = 0; k < n_out; ++k) {
      auto sel = sels[k];
      std::sort(sel.begin(), sel.end());
      out[k].n_selected[r] = sel.size();
      if (sel.empty()) {
        out[k].values[r] = 0.5;
        out[k].empty_selection[r] = 1;
        continue;
      }
      auto key = std::make_pair(static_cast<int>(engines[k]), sel);
      if (auto it = cache.find(key); it != cache.end()) {
        out[k].values[r] = it->second;
        continue;
      }
      if (!imputed) {
        i1 = iterative_forest_impute(h1, params.impute, derive_seed(seed, r, 2)).completed;
        i2 = iterative_forest_impute(h2, params.impute, derive_seed(seed, r, 3)).completed;
        imputed = true;
      }
      std::vector<std::size_t> cols;
      for (auto s : sel) cols.push_back(predictors.at(s));
      FeatureMatrix x1 = i1.features(cols);
      FeatureMatrix x2 = i2.features(cols).select_rows(scored);
      auto ytrain = i1.column_values(o);
      std::vector<double> scores;
      if (engines[k] == Engine::bart) {
        BartParams bp = params.bart;
        bp.keep_trees = true;
        auto post = fit_bart_probit(x1, ytrain, bp, derive_seed(seed, r, 4));
        scores = predict_bart(post, x2).mean;
      } else {
        auto ens = fit_gbt(x1, ytrain, params.gbt, derive_seed(seed, r, 4));
        scores = ens.predict(x2);
      }
      double a = auc(scores, labels);
      cache.emplace(std::move(key), a);
      out[k].values[r] = a;
    }
  });
  for (auto& d : out) d.summary = summarize(d.values);
  return out;
}

AucDistribution cv_auc(const DataMatrix& dm, const Selector& selector, const CvAucParams& params, std::uint64_t seed) {
  MultiSelector multi = [&](const DataMatrix& half, std::uint64_t s) {
    return std::vector<std::vector<std::size_t>>{selector(half, s)};
  };
  return cv_auc_multi(dm, multi, {params.engine}, params, seed).front();
}

Selector method_selector(const std::string& method, const SelectionParams& params) {
  return [method, params](const DataMatrix& half, std::uint64_t seed) {
    return run_method(method, half, params, seed).selected;
  };
}

std::vector<CalibrationBin> calibration_curve(std::span<const double> probs, std::span<const double> outcomes,
                                              std::size_t bins) {
  const std::size_t n = probs.size();
  if (outcomes.size() != n) throw DataError("probabilities and outcomes differ in length");
  if (bins < 2) throw ConfigError("calibration needs at least two bins");
  if (n < bins) throw DataError("fewer rows than calibration bins");
  for (double p : probs)
    if (!(p >= 0.0 && p <= 1.0)) throw DataError("probabilities must lie in [0, 1]");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return probs[a] < probs[b]; });
  std::vector<CalibrationBin> out;
  std::size_t start = 0;
  for (std::size_t b = 1; b <= bins && start < n; ++b) {
    std::size_t end = b == bins ? n : std::max(start + 1, b * n / bins);
    while (end < n && probs[order[end]] == probs[order[end - 1]]) ++end;
    if (end <= start) continue;
    CalibrationBin bin;
    for (std::size_t k = start; k < end; ++k) {
      bin.mean_predicted += probs[order[k]];
      bin.observed += outcomes[order[k]];
    }
    bin.count = end - start;
    bin.mean_predicted /= static_cast<double>(bin.count);
    bin.observed /= static_cast<double>(bin.count);
    out.push_back(bin);
    start = end;
  }
  return out;
}

std::vector<double> power_table(std::span<const std::vector<std::size_t>> selections, std::size_t k_total) {
  if (selections.size() < 2) throw ConfigError("power table needs at least two replications");
  std::vector<double> f(k_total, 0.0);
  for (const auto& s : selections)
    for (auto j : s) {
      if (j >= k_total) throw ConfigError("selected index out of range");
      f[j] += 1.0;
    }
  for (auto& v : f) v /= static_cast<double>(selections.size());
  return f;
}

}  // namespace rrbart
