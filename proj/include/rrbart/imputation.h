#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rrbart/data.h"
#include "rrbart/tree.h"

namespace rrbart {

struct ImputeParams {
  std::size_t max_iter = 10;
  ForestParams forest;  // classification is set per column
};

struct ImputedSet {
  DataMatrix completed;               // every cell observed
  std::vector<std::uint8_t> source_mask;
  std::size_t iterations = 0;         // iterations run
  std::size_t returned_iteration = 0;  // iteration whose values are returned
  std::vector<double> change_continuous;  // per iteration; NaN if no such cells
  std::vector<double> change_binary;
  std::uint64_t seed = 0;

  std::string manifest() const;
};

// Iterative random-forest imputation. Missing cells start at the column mean
// (mode for binary columns); each iteration re-predicts every incomplete
// column from all others, most-missing column first. Stops when the change
// statistic grows in every group that has missing cells, returning the
// previous iteration, or after max_iter.
ImputedSet iterative_forest_impute(const DataMatrix& dm, const ImputeParams& params, std::uint64_t seed);

std::vector<ImputedSet> multiple_impute(const DataMatrix& dm, std::size_t m, const ImputeParams& params,
                                        std::uint64_t seed, std::size_t workers = 1);

struct BootstrapImputedSet {
  std::vector<DataMatrix> datasets;
  std::vector<std::vector<std::size_t>> rows;  // resampled source rows per dataset
  std::vector<std::uint64_t> seeds;
};

// Resample n rows with replacement, then impute each resample once.
BootstrapImputedSet bootstrap_impute(const DataMatrix& dm, std::size_t b, const ImputeParams& params,
                                     std::uint64_t seed, std::size_t workers = 1);

}  // namespace rrbart
