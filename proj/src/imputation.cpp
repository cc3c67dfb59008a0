#include "rrbart/imputation.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "rrbart/error.h"
#include "rrbart/parallel.h"
#include "rrbart/random.h"

namespace rrbart {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Cells {
  std::size_t col;
  std::vector<std::size_t> missing;
  std::vector<std::size_t> observed;
};

bool improved(double now, double before) {
  if (std::isnan(now)) return false;  // group absent
  return now < before;
}

}  // namespace

std::string ImputedSet::manifest() const {
  std::ostringstream out;
  out << "seed = " << seed << '\n';
  out << "iterations = " << iterations << '\n';
  out << "returned_iteration = " << returned_iteration << '\n';
  out << "change_continuous =";
  for (double v : change_continuous) out << ' ' << format_double(v);
  out << "\nchange_binary =";
  for (double v : change_binary) out << ' ' << format_double(v);
  out << '\n';
  return out.str();
}

ImputedSet iterative_forest_impute(const DataMatrix& dm, const ImputeParams& params, std::uint64_t seed) {
  if (params.max_iter < 1) throw ConfigError("max_iter must be at least 1");
  const std::size_t n = dm.rows(), k = dm.cols();
  ImputedSet out;
  out.seed = seed;
  out.source_mask = dm.mask();
  if (!dm.has_missing()) {
    out.completed = dm;
    return out;
  }

  std::vector<Cells> order;
  FeatureMatrix x(n, k);
  for (std::size_t j = 0; j < k; ++j) {
    Cells c{j, {}, {}};
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (dm.observed(i, j)) {
        c.observed.push_back(i);
        s += dm.value(i, j);
        x.at(i, j) = dm.value(i, j);
      } else {
        c.missing.push_back(i);
      }
    }
    if (c.observed.empty()) throw DataError("column '" + dm.column(j).name + "' has no observed values");
    if (c.missing.empty()) continue;
    double fill = s / static_cast<double>(c.observed.size());
    if (dm.column(j).kind == ColumnKind::binary) fill = (2.0 * s > static_cast<double>(c.observed.size())) ? 1.0 : 0.0;
    for (auto i : c.missing) x.at(i, j) = fill;
    order.push_back(std::move(c));
  }
  std::stable_sort(order.begin(), order.end(),
                   [](const Cells& a, const Cells& b) { return a.missing.size() > b.missing.size(); });

  double prev_cont = std::numeric_limits<double>::infinity();
  double prev_bin = std::numeric_limits<double>::infinity();
  FeatureMatrix previous = x;
  std::vector<std::size_t> others(k - 1);
  for (std::size_t iter = 1; iter <= params.max_iter; ++iter) {
    previous = x;
    for (const auto& c : order) {
      std::size_t p = 0;
      for (std::size_t j = 0; j < k; ++j)
        if (j != c.col) others[p++] = j;
      const bool binary = dm.column(c.col).kind == ColumnKind::binary;
      FeatureMatrix train = x.select_rows(c.observed).select_cols(others);
      std::vector<double> y(c.observed.size());
      for (std::size_t r = 0; r < c.observed.size(); ++r) y[r] = x.at(c.observed[r], c.col);
      ForestParams fp = params.forest;
      fp.classification = binary;
      Forest f = fit_random_forest(train, y, fp, derive_seed(seed, iter, c.col));
      FeatureMatrix test = x.select_rows(c.missing).select_cols(others);
      for (std::size_t r = 0; r < c.missing.size(); ++r) x.at(c.missing[r], c.col) = f.predict(test, r);
    }

    double num = 0.0, den = 0.0;
    std::size_t diff = 0, n_bin = 0;
    bool any_cont = false;
    for (const auto& c : order) {
      if (dm.column(c.col).kind == ColumnKind::binary) {
        for (auto i : c.missing) {
          diff += x.at(i, c.col) != previous.at(i, c.col);
          ++n_bin;
        }
      } else {
        any_cont = true;
        for (auto i : c.missing) {
          double d = x.at(i, c.col) - previous.at(i, c.col);
          num += d * d;
          den += x.at(i, c.col) * x.at(i, c.col);
        }
      }
    }
    double cont = any_cont ? (den > 0 ? num / den : 0.0) : kNaN;
    double bin = n_bin ? static_cast<double>(diff) / static_cast<double>(n_bin) : kNaN;
    out.change_continuous.push_back(cont);
    out.change_binary.push_back(bin);
    out.iterations = iter;
    out.returned_iteration = iter;

    bool keep_going = improved(cont, prev_cont) || improved(bin, prev_bin);
    if (!keep_going) {
      // the last sweep moved away from convergence everywhere; keep the one before
      x = previous;
      out.returned_iteration = iter - 1;
      break;
    }
    prev_cont = std::isnan(cont) ? prev_cont : cont;
    prev_bin = std::isnan(bin) ? prev_bin : bin;
  }

  std::vector<double> values(n * k);
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = 0; i < n; ++i) values[j * n + i] = dm.observed(i, j) ? dm.value(i, j) : x.at(i, j);
  out.completed = dm.completed(std::move(values));
  return out;
}

std::vector<ImputedSet> multiple_impute(const DataMatrix& dm, std::size_t m, const ImputeParams& params,
                                        std::uint64_t seed, std::size_t workers) {
  if (m < 2) throw ConfigError("multiple imputation for pooling needs M >= 2");
  std::vector<ImputedSet> out(m);
  parallel_for(m, workers, [&](std::size_t i) { out[i] = iterative_forest_impute(dm, params, derive_seed(seed, i)); });
  return out;
}

BootstrapImputedSet bootstrap_impute(const DataMatrix& dm, std::size_t b, const ImputeParams& params,
                                     std::uint64_t seed, std::size_t workers) {
  if (b < 1) throw ConfigError("bootstrap imputation needs B >= 1");
  BootstrapImputedSet out;
  out.datasets.resize(b);
  out.rows.resize(b);
  out.seeds.resize(b);
  parallel_for(b, workers, [&](std::size_t i) {
    out.seeds[i] = derive_seed(seed, i);
    Rng rng(derive_seed(out.seeds[i], 0));
    out.rows[i] = bootstrap_rows(dm.rows(), rng);
    DataMatrix sample = dm.select_rows(out.rows[i]);
    out.datasets[i] = iterative_forest_impute(sample, params, derive_seed(out.seeds[i], 1)).completed;
  });
  return out;
}

}  // namespace rrbart
