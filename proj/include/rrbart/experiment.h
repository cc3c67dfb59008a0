#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rrbart/evaluation.h"
#include "rrbart/selection.h"
#include "rrbart/simulation.h"

namespace rrbart {

// Several selections computed from one shared fit (e.g. every pi of a
// bootstrap run), in a fixed label order.
struct MethodGroup {
  std::vector<std::string> labels;
  std::vector<Engine> engines;  // predictive engine per label
  std::function<std::vector<SelectionResult>(const DataMatrix&, std::uint64_t)> run;
};

// Groups for the requested methods. Bootstrap methods expand to one label per
// pi ("bi-bart@0.1"); the RR variants share one set of VIP draws.
std::vector<MethodGroup> method_groups(const std::vector<std::string>& methods, const std::vector<double>& pis,
                                       const SelectionParams& params);

// Stable per-method seed offset so adding methods never changes another's seed.
std::uint64_t method_stream(const std::string& method);

// cv AUC for every output of a group; models for identical selections are
// fitted once per repeat.
std::vector<AucDistribution> cv_auc_group(const DataMatrix& dm, const MethodGroup& group, const CvAucParams& params,
                                          std::uint64_t seed);

struct SimulationSpec {
  ScenarioSpec scenario;
  std::vector<std::string> methods{"rr-bart"};
  std::vector<double> pis{0.1};
  std::size_t replications = 50;
  std::uint64_t seed = 1;
  SelectionParams params;
  std::size_t cv_repeats = 0;  // 0 skips cv AUC
  std::size_t workers = 1;     // over replications

  Config to_config() const;
  static SimulationSpec from_config(const Config& c);
};

struct MethodOutcome {
  std::string label;
  std::vector<std::size_t> selected;
  MetricReport metrics;
  bool all_selected = false;
  double min_mean_vip = 0.0;
  double auc = 0.0;  // NaN without cv
  bool auc_empty = false;
  double seconds = 0.0;
  std::string error;     // selection failed
  std::string cv_error;  // selection fine, cv AUC failed
};

struct ReplicationResult {
  std::size_t replication = 0;
  std::uint64_t data_seed = 0;
  double incomplete_rows = 0.0;
  std::size_t n_features = 0;
  std::vector<MethodOutcome> outcomes;
  std::string error;  // data generation failure
};

// Generate, ampute, select with every method, score against X1..X10.
ReplicationResult run_replication(const SimulationSpec& spec, std::size_t replication);

struct MethodAggregate {
  std::string label;
  std::size_t ok = 0;
  std::size_t failed = 0;
  Summary precision, recall, f1, type_i, auc, seconds;
  double all_selected_rate = 0.0;
  double mean_min_vip = 0.0;
  std::vector<double> power;  // per feature
};

std::vector<MethodAggregate> aggregate(const std::vector<ReplicationResult>& reps);

std::vector<ReplicationResult> run_simulation(const SimulationSpec& spec);

std::string aggregate_csv(const std::vector<MethodAggregate>& agg);
std::string replication_csv(const std::vector<ReplicationResult>& reps, const std::vector<std::string>& names);
// Wall clock per replication and method; kept apart so the other tables do
// not depend on scheduling.
std::string timing_csv(const std::vector<ReplicationResult>& reps);
std::string power_csv(const std::vector<MethodAggregate>& agg, const std::vector<std::string>& names);

}  // namespace rrbart
