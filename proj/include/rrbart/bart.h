#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rrbart/data.h"
#include "rrbart/random.h"
#include "rrbart/tree.h"
#include "rrbart/vip_draws.h"

namespace rrbart {

struct BartParams {
  std::size_t n_trees = 20;
  double k = 2.0;        // leaf prior sd = 3 / (k * sqrt(n_trees))
  double base = 0.95;    // P(split at depth d) = base * (1 + d)^-power
  double power = 2.0;
  std::size_t n_draws = 1000;
  std::size_t burn_in = 250;
  double p_grow = 0.28;
  double p_prune = 0.28;
  double p_change = 0.44;
  int max_depth = 0;     // 0 = unlimited; nodes at this depth never split
  bool mia = false;      // allow missing predictor values, routed by MIA rules
  bool keep_trees = true;  // store per-draw ensembles (needed for prediction)

  double leaf_sd() const;
  void validate() const;

  static BartParams for_selection() { return {}; }
  static BartParams for_prediction() {
    BartParams p;
    p.n_trees = 50;
    return p;
  }
};

struct BartNode {
  int left = -1;
  int right = -1;
  int parent = -1;
  int depth = 0;
  SplitRule rule;
  double mu = 0.0;
  bool alive = true;

  bool is_leaf() const { return left < 0; }
};

// One tree of the sum-of-trees model together with its row-to-leaf map.
struct BartTreeState {
  std::vector<BartNode> nodes{BartNode{}};
  std::vector<int> leaf_of_row;
  std::vector<int> free_ids;

  std::vector<int> leaves() const;
  std::vector<int> internal_nodes() const;
  // Internal nodes whose children are both leaves.
  std::vector<int> nog_nodes() const;
  std::size_t num_splits() const;
  Tree to_tree() const;
};

struct MoveStats {
  std::size_t proposed = 0;
  std::size_t accepted = 0;
  double rate() const { return proposed ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0; }
};

// Metropolis-Hastings grow/prune/change kernel for a single tree with the leaf
// values integrated out, followed by a Gibbs draw of the leaf values, given a
// residual vector with known noise sd.
class TreeKernel {
 public:
  TreeKernel(const FeatureMatrix& x, const BartParams& params, double leaf_sd, double sigma);

  BartTreeState initial_state() const;
  void step(BartTreeState& tree, std::span<const double> residual, Rng& rng);

  // Prior probability that a node with these rows at this depth splits.
  double split_probability(std::span<const std::size_t> rows, int depth) const;
  // Number of predictors offering at least one split among the rows.
  std::size_t available_variables(std::span<const std::size_t> rows, std::vector<std::size_t>* out = nullptr) const;
  // Log marginal likelihood of residuals in a leaf (constant terms dropped).
  double leaf_log_likelihood(double sum, std::size_t n) const;

  MoveStats grow_stats, prune_stats, change_stats;

 private:
  struct RuleDraw {
    bool ok = false;
    SplitRule rule;
  };
  bool variable_splittable(std::size_t v, std::span<const std::size_t> rows) const;
  RuleDraw draw_rule(std::span<const std::size_t> rows, Rng& rng) const;
  // log prior of drawing this rule at a node holding these rows
  double log_rule_prior(std::span<const std::size_t> rows, const SplitRule& rule) const;
  // log tree prior of the subtree at node (its own rule term excluded), with
  // root_rule replacing the node's rule when given; -inf if invalid
  double subtree_log_prior(const BartTreeState& tree, int node, std::span<const std::size_t> rows,
                           const SplitRule* root_rule) const;
  double subtree_rest(const BartTreeState& tree, int node, std::span<const std::size_t> rows) const;
  std::vector<std::size_t> rows_in(const BartTreeState& tree, int node) const;
  void propose_grow(BartTreeState& tree, std::span<const double> residual, Rng& rng, double p_grow_here);
  void propose_prune(BartTreeState& tree, std::span<const double> residual, Rng& rng);
  void propose_change(BartTreeState& tree, std::span<const double> residual, Rng& rng);
  void draw_leaves(BartTreeState& tree, std::span<const double> residual, Rng& rng) const;

  const FeatureMatrix& x_;
  const BartParams& params_;
  double tau2_;
  double sigma2_;
  mutable std::vector<double> scratch_;
};

// Share of splitting rules using each of k predictors across the ensemble.
// With no splits at all the slice is uniform and zero_splits is set.
std::vector<double> vip_slice(std::span<const BartTreeState> trees, std::size_t k, bool& zero_splits);

struct BartPosterior {
  std::size_t n_predictors = 0;
  double offset = 0.0;                         // probit offset added to every draw
  std::vector<std::vector<Tree>> draws;        // P x m, empty unless keep_trees
  std::vector<std::vector<double>> vip;        // P x K, each a simplex
  std::vector<std::uint8_t> zero_split_draws;  // 1 where a draw had no splits
  MoveStats grow, prune, change;

  std::size_t num_draws() const { return vip.size(); }
  std::vector<double> mean_vip() const;
  // Sum-of-trees value f(x) for one draw (offset included).
  double draw_value(std::size_t draw, const FeatureMatrix& x, std::size_t i) const;

  // CSV of the per-draw VIP matrix (rows = draws, columns = predictors).
  std::string vip_csv(const std::vector<std::string>& names) const;
};

// Probit BART fit. y must be 0/1 and x complete unless params.mia.
BartPosterior fit_bart_probit(const FeatureMatrix& x, std::span<const double> y, const BartParams& params,
                              std::uint64_t seed);
BartPosterior fit_bart_probit(const DataMatrix& dm, std::size_t outcome, const BartParams& params, std::uint64_t seed,
                              std::vector<std::size_t> predictors = {});

struct BartPrediction {
  std::vector<double> mean;  // posterior mean of Phi(f(x))
  std::vector<double> lower;  // 2.5th percentile over draws
  std::vector<double> upper;  // 97.5th percentile over draws
};

BartPrediction predict_bart(const BartPosterior& post, const FeatureMatrix& rows);

// Assemble VIP_kmp from M posteriors with equal K and P.
VipDraws vip_draws(std::span<const BartPosterior> models);

struct PermutationResult {
  std::vector<std::size_t> selected;      // feature indices
  std::vector<double> observed_vip;       // mean VIP on the true outcome
  std::vector<double> null_quantile;      // per-predictor 1 - alpha null quantile
  std::vector<std::vector<double>> null_vip;  // n_perm x K
};

// Select predictors whose VIP on the true outcome exceeds the 1 - alpha quantile
// of their own null distribution from fits to permuted outcomes.
PermutationResult permutation_select(const FeatureMatrix& x, std::span<const double> y, const BartParams& params,
                                     std::size_t n_perm, double alpha, std::uint64_t seed);

}  // namespace rrbart
