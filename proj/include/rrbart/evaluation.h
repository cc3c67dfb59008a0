#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rrbart/data.h"
#include "rrbart/selection.h"

namespace rrbart {

struct MetricReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double type_i = 0.0;
  bool precision_na = false;  // nothing selected
  bool recall_na = false;     // empty truth
  bool type_i_na = false;     // no noise predictors
};

// Indices are feature positions in [0, k_total).
MetricReport selection_metrics(std::span<const std::size_t> selected, std::span<const std::size_t> truth,
                               std::size_t k_total);

// Rank AUC; throws DataError when only one class is present.
double auc(std::span<const double> scores, std::span<const int> labels);

struct Summary {
  std::size_t count = 0;
  double mean = 0.0;
  double se = 0.0;  // Monte Carlo standard error
  double lo = 0.0;  // 2.5th percentile
  double hi = 0.0;  // 97.5th percentile
};

Summary summarize(std::span<const double> v);

struct AucDistribution {
  std::vector<double> values;
  std::vector<std::uint8_t> empty_selection;  // 1 where the selector chose nothing
  std::vector<std::size_t> n_selected;
  Summary summary;
};

// Selector run on the first half; returns feature indices (predictor order).
using Selector = std::function<std::vector<std::size_t>(const DataMatrix& half, std::uint64_t seed)>;

struct CvAucParams {
  std::size_t repeats = 100;
  Engine engine = Engine::bart;
  BartParams bart = BartParams::for_prediction();
  GbtParams gbt;
  ImputeParams impute;
  std::size_t workers = 1;
};

// Per repeat: stratified half split; select on half 1; single-impute each half;
// fit the engine on imputed half 1 restricted to the selection; score half 2
// rows with an observed outcome. An empty selection scores 0.5 and is flagged.
AucDistribution cv_auc(const DataMatrix& dm, const Selector& selector, const CvAucParams& params, std::uint64_t seed);

// Several selections from one selector run per repeat, each scored with its
// own engine. Identical (engine, selection) pairs are fitted once per repeat.
using MultiSelector = std::function<std::vector<std::vector<std::size_t>>(const DataMatrix& half, std::uint64_t seed)>;
std::vector<AucDistribution> cv_auc_multi(const DataMatrix& dm, const MultiSelector& selector,
                                          const std::vector<Engine>& engines, const CvAucParams& params,
                                          std::uint64_t seed);

// Selector from the method registry.
Selector method_selector(const std::string& method, const SelectionParams& params);

// Stratified split: returns the half-1 mask (1 = first half).
std::vector<std::uint8_t> stratified_halves(const DataMatrix& dm, std::uint64_t seed);

struct CalibrationBin {
  double mean_predicted = 0.0;
  double observed = 0.0;
  std::size_t count = 0;
};

// Equal-frequency bins over sorted probabilities; tied probabilities never
// straddle a bin edge, so fewer bins may come back.
std::vector<CalibrationBin> calibration_curve(std::span<const double> probs, std::span<const double> outcomes,
                                              std::size_t bins = 10);

// Per-feature fraction of replications selecting it.
std::vector<double> power_table(std::span<const std::vector<std::size_t>> selections, std::size_t k_total);

}  // namespace rrbart
