#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rrbart/bart.h"
#include "rrbart/config.h"
#include "rrbart/data.h"
#include "rrbart/imputation.h"
#include "rrbart/tree.h"
#include "rrbart/vip_draws.h"

namespace rrbart {

enum class WithinDivisor { sample_size, draws };

struct PooledDistance {
  double q_bar = 0.0;
  double within = 0.0;   // W_k
  double between = 0.0;  // B_k
  double total = 0.0;    // T_k
  double df = 0.0;       // +inf when B_k = 0
  double lo = 0.0, hi = 0.0;
  bool degenerate = false;  // T_k = 0
  bool selected = false;
};

struct RubinPool {
  std::size_t reference = 0;  // k', the predictor with the smallest mean VIP
  std::vector<PooledDistance> stats;
};

// Rubin's rules on VIP distances from the least important predictor. n_eff is
// the divisor applied to each imputation's draw variance.
RubinPool pool_rubins(const VipDraws& v, double alpha, double n_eff);

struct SelectionResult {
  std::string method;
  std::vector<std::string> names;     // predictor names, feature order
  std::vector<std::size_t> columns;   // DataMatrix column per feature
  std::vector<std::size_t> selected;  // feature indices, sorted
  bool all_selected = false;
  std::vector<PooledDistance> pooled;  // RR methods
  std::vector<double> mean_vip;
  std::vector<double> frequency;  // bootstrap methods
  double min_mean_vip = 0.0;
  std::string notes;
  double seconds = 0.0;  // wall clock of the selection
  Config parameters;  // echo for replay

  std::vector<std::string> selected_names() const;
  std::string report() const;
};

struct SelectionParams {
  BartParams bart;
  ImputeParams impute;
  RfeParams rfe;
  double alpha = 0.05;
  std::size_t m_imputations = 10;
  std::size_t b_bootstrap = 100;
  std::size_t n_perm = 100;
  double pi = 0.1;
  WithinDivisor divisor = WithinDivisor::sample_size;
  std::size_t workers = 1;

  Config to_config() const;
  static SelectionParams from_config(const Config& c);
};

struct VipRun {
  VipDraws draws;
  std::vector<ImputedSet> imputations;
};

// Impute M times and fit probit BART to each completed set.
VipRun rr_vip_draws(const DataMatrix& dm, const SelectionParams& params, std::uint64_t seed);

SelectionResult rr_select_from_draws(const DataMatrix& dm, const VipDraws& v, const SelectionParams& params);
SelectionResult rr_bart_select(const DataMatrix& dm, const SelectionParams& params, std::uint64_t seed);

SelectionResult rr_median_baseline(const DataMatrix& dm, const VipDraws& v);
SelectionResult rr_pooled_draws_select(const DataMatrix& dm, const VipDraws& v, double alpha);

enum class BaseSelector { bart_permutation, gbt_rfe };
std::string to_string(BaseSelector b);

struct BootstrapSelections {
  BaseSelector base = BaseSelector::bart_permutation;
  std::vector<std::vector<std::size_t>> per_dataset;  // feature indices
  std::size_t n_features = 0;

  std::vector<double> frequencies() const;
};

BootstrapSelections bootstrap_selections(const BootstrapImputedSet& sets, BaseSelector base,
                                         const SelectionParams& params, std::uint64_t seed);
// Features chosen in at least ceil(pi * B) datasets.
std::vector<std::size_t> threshold_selections(const BootstrapSelections& s, double pi);
SelectionResult bi_select(const DataMatrix& dm, const BootstrapSelections& s, double pi);
SelectionResult bi_select(const DataMatrix& dm, BaseSelector base, const SelectionParams& params, std::uint64_t seed);

enum class Engine { bart, gbt };
enum class OutcomeMode { impute_y, exclude_y };
std::string to_string(Engine e);
std::string to_string(OutcomeMode m);

SelectionResult mia_select(const DataMatrix& dm, Engine engine, OutcomeMode mode, const SelectionParams& params,
                           std::uint64_t seed);
SelectionResult complete_case_select(const DataMatrix& dm, Engine engine, const SelectionParams& params,
                                     std::uint64_t seed);

// Plain selector on data without missing predictors (permutation BART or
// RFE boosting); missing predictors allowed when mia is set.
std::vector<std::size_t> engine_select(const FeatureMatrix& x, std::span<const double> y, Engine engine,
                                       const SelectionParams& params, bool mia, std::uint64_t seed);

// Method registry used by the CLI and the harness.
const std::vector<std::string>& method_names();
SelectionResult run_method(const std::string& method, const DataMatrix& dm, const SelectionParams& params,
                           std::uint64_t seed);
// Predictive engine matching a method's family.
Engine method_engine(const std::string& method);

}  // namespace rrbart
