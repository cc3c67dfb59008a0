#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rrbart/data.h"
#include "rrbart/random.h"

namespace rrbart {

// Routing of missing values at a split (missingness incorporated in attributes).
//   left:              observed x <= threshold -> left, else right; missing -> left
//   right:             observed x <= threshold -> left, else right; missing -> right
//   missing_only_left: missing -> left; any observed value -> right
enum class MissingDirection : std::uint8_t { left = 0, right = 1, missing_only_left = 2 };

std::string to_string(MissingDirection d);
MissingDirection parse_missing_direction(const std::string& s);

enum class Side : std::uint8_t { left, right };

struct SplitRule {
  std::size_t variable = 0;
  double threshold = 0.0;  // ignored for missing_only_left
  MissingDirection missing = MissingDirection::left;

  bool operator==(const SplitRule&) const = default;
};

// x is NaN when missing.
inline bool goes_left(const SplitRule& rule, double x) {
  if (std::isnan(x)) return rule.missing != MissingDirection::right;
  if (rule.missing == MissingDirection::missing_only_left) return false;
  return x <= rule.threshold;
}

inline Side route(const SplitRule& rule, double x) { return goes_left(rule, x) ? Side::left : Side::right; }

struct TreeNode {
  int left = -1;
  int right = -1;
  int parent = -1;
  int depth = 0;
  std::size_t count = 0;  // training rows (with bootstrap multiplicity)
  SplitRule rule;
  double value = 0.0;  // leaf output
  double gain = 0.0;   // impurity reduction of this split

  bool is_leaf() const { return left < 0; }
};

class Tree {
 public:
  Tree() : nodes_(1) {}
  explicit Tree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::vector<TreeNode>& nodes() { return nodes_; }

  // Index of the leaf reached by row i of x.
  int leaf_of(const FeatureMatrix& x, std::size_t i) const {
    int id = 0;
    while (!nodes_[id].is_leaf()) {
      const auto& nd = nodes_[id];
      id = goes_left(nd.rule, x.at(i, nd.rule.variable)) ? nd.left : nd.right;
    }
    return id;
  }
  double predict(const FeatureMatrix& x, std::size_t i) const { return nodes_[leaf_of(x, i)].value; }
  int leaf_of(std::span<const double> row) const;

  std::size_t num_leaves() const;
  std::size_t num_splits() const { return nodes_.size() - num_leaves(); }
  int depth() const;

  std::string serialize() const;
  static Tree deserialize(const std::string& text);

  bool operator==(const Tree& other) const;

 private:
  std::vector<TreeNode> nodes_;
};

struct TreeParams {
  int max_depth = 0;  // 0 = unlimited
  std::size_t min_node = 5;  // minimum rows in a child
  bool mia = false;
  std::size_t mtry = 0;  // variables sampled per split; 0 = all allowed
};

// Grow a CART tree on the given (possibly repeated) training rows. Splits
// maximize the reduction in the sum of squared errors of y, which for a 0/1
// target is proportional to the Gini decrease. When hessian is non-empty leaf
// values are sum(y) / sum(hessian) (a Newton step); otherwise the mean.
// allowed lists the candidate columns; empty means all columns.
Tree grow_tree(const FeatureMatrix& x, std::span<const double> y, std::span<const std::size_t> rows,
               const TreeParams& params, Rng& rng, std::span<const std::size_t> allowed = {},
               std::span<const double> hessian = {}, std::vector<std::size_t>* candidates_seen = nullptr);

// CART model over a DataMatrix, predicting the target column from the given
// predictor columns. Rule variables index into `predictors`.
struct TreeModel {
  Tree tree;
  std::vector<std::size_t> predictors;
};

TreeModel fit_tree(const DataMatrix& dm, std::size_t target, const TreeParams& params, std::uint64_t seed,
                   std::vector<std::size_t> predictors = {});

// ---------------------------------------------------------------------------
// Random forest

struct ForestParams {
  std::size_t n_trees = 100;
  std::size_t mtry = 0;  // 0 = ceil(K/3) for regression, ceil(sqrt(K)) for classification
  std::size_t min_node = 5;
  bool classification = false;
};

struct Forest {
  std::vector<Tree> trees;
  std::vector<std::uint64_t> seeds;
  std::vector<std::vector<std::size_t>> candidate_vars;  // per tree: columns sampled at any split
  bool classification = false;
  std::vector<double> oob_prediction;  // NaN for rows in every bootstrap sample
  double oob_error = 0.0;              // MSE (regression) or misclassification rate
  double oob_r2 = 0.0;                 // regression only

  double predict(const FeatureMatrix& x, std::size_t i) const;
  std::vector<double> predict(const FeatureMatrix& x) const;
};

std::size_t default_mtry(std::size_t k, bool classification);
std::vector<std::size_t> bootstrap_rows(std::size_t n, Rng& rng);

Forest fit_random_forest(const FeatureMatrix& x, std::span<const double> y, const ForestParams& params,
                         std::uint64_t seed);

struct ForestModel {
  Forest forest;
  std::vector<std::size_t> predictors;
};

ForestModel fit_random_forest(const DataMatrix& dm, std::size_t target, const ForestParams& params, std::uint64_t seed,
                              std::vector<std::size_t> predictors = {});

// ---------------------------------------------------------------------------
// Gradient-boosted trees

enum class Loss { squared, logistic };

struct GbtParams {
  std::size_t rounds = 200;
  double learning_rate = 0.1;
  int max_depth = 4;
  double colsample = 0.8;
  Loss loss = Loss::logistic;
  bool mia = false;
  std::size_t min_node = 5;
  std::size_t early_stop_rounds = 20;  // used only with a validation set
};

struct BoostedEnsemble {
  std::vector<Tree> trees;
  double base_score = 0.0;
  double learning_rate = 0.1;
  double colsample = 0.8;
  Loss loss = Loss::logistic;
  std::size_t n_features = 0;
  std::vector<double> train_loss;       // after each round
  std::vector<double> validation_loss;  // after each round, when validated
  std::size_t best_round = 0;

  // Raw score: base + learning_rate * sum of tree outputs.
  double margin(const FeatureMatrix& x, std::size_t i) const;
  // Probability for logistic loss, margin for squared loss.
  double predict(const FeatureMatrix& x, std::size_t i) const;
  std::vector<double> predict(const FeatureMatrix& x) const;
};

struct Validation {
  const FeatureMatrix* x = nullptr;
  std::span<const double> y;
};

BoostedEnsemble fit_gbt(const FeatureMatrix& x, std::span<const double> y, const GbtParams& params,
                        std::uint64_t seed, Validation validation = {});

struct GbtModel {
  BoostedEnsemble ensemble;
  std::vector<std::size_t> predictors;
};

GbtModel fit_gbt(const DataMatrix& dm, std::size_t target, const GbtParams& params, std::uint64_t seed,
                 std::vector<std::size_t> predictors = {});

// Total split gain per feature; unused features score exactly 0.
std::vector<double> gbt_importance(const BoostedEnsemble& e);

double log_loss(std::span<const double> prob, std::span<const double> y);

struct RfeParams {
  GbtParams gbt;
  std::size_t folds = 3;
  std::size_t min_size = 1;
};

struct RfeStep {
  std::vector<std::size_t> features;
  double cv_loss = 0.0;
};

struct RfeResult {
  std::vector<std::size_t> selected;  // sorted feature indices
  std::vector<RfeStep> path;
};

// Recursive feature elimination: fit, drop the least important feature, track
// cross-validated log loss; return the feature set with the lowest loss.
RfeResult rfe_select(const FeatureMatrix& x, std::span<const double> y, const RfeParams& params, std::uint64_t seed);

// DataMatrix form; returns selected column indices of dm.
std::vector<std::size_t> rfe_select(const DataMatrix& dm, std::size_t target, const RfeParams& params,
                                    std::uint64_t seed, std::vector<std::size_t> predictors = {});

}  // namespace rrbart
