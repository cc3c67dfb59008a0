#include "rrbart/random.h"

#include <cmath>
#include <numeric>

namespace rrbart {

std::vector<std::size_t> Rng::sample_without_replacement(std::size_t n, std::size_t k) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (k >= n) {
    shuffle(idx);
    return idx;
  }
  // partial Fisher-Yates
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + index(n - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

namespace {

// Standard normal truncated to (a, inf).
double lower_truncated_standard(Rng& rng, double a) {
  if (a <= 0.45) {
    for (;;) {
      double x = rng.normal();
      if (x > a) return x;
    }
  }
  // Exponential proposal with the optimal rate (Robert, 1995).
  const double lambda = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    double x = a - std::log(1.0 - rng.uniform()) / lambda;
    double d = x - lambda;
    if (rng.uniform() <= std::exp(-0.5 * d * d)) return x;
  }
}

}  // namespace

double truncated_normal_unit(Rng& rng, double mean, bool positive) {
  if (positive) return mean + lower_truncated_standard(rng, -mean);
  return mean - lower_truncated_standard(rng, mean);
}

}  // namespace rrbart
