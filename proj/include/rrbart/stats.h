#pragma once

#include <span>
#include <vector>

namespace rrbart {

double normal_cdf(double x);
double normal_quantile(double p);

// Student-t quantile; non-integer df allowed, df = +inf gives the normal quantile.
double t_quantile(double df, double p);

double inv_logit(double x);

double mean(std::span<const double> v);

// Unbiased (n - 1) sample variance; 0 for fewer than two values.
double sample_variance(std::span<const double> v);

// Linear-interpolation quantile (R type 7). v need not be sorted.
double quantile_type7(std::vector<double> v, double p);

// Mann-Whitney AUC with ties counted as 1/2. Returns NaN when a class is empty.
double rank_auc(std::span<const double> scores, std::span<const int> labels);

}  // namespace rrbart
