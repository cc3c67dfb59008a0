#include "rrbart/bart.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "rrbart/error.h"
#include "rrbart/stats.h"

namespace rrbart {

double BartParams::leaf_sd() const { return 3.0 / (k * std::sqrt(static_cast<double>(n_trees))); }

void BartParams::validate() const {
  if (n_trees < 1) throw ConfigError("BART needs at least one tree");
  if (n_draws < 1) throw ConfigError("BART needs at least one retained draw");
  if (!(base > 0.0 && base < 1.0)) throw ConfigError("tree prior base must lie in (0, 1)");
  if (power < 0.0) throw ConfigError("tree prior power must be nonnegative");
  if (!(k > 0.0)) throw ConfigError("leaf prior scale k must be positive");
  if (p_grow < 0 || p_prune < 0 || p_change < 0 || std::abs(p_grow + p_prune + p_change - 1.0) > 1e-9)
    throw ConfigError("proposal probabilities must be nonnegative and sum to 1");
}

// ---------------------------------------------------------------------------
// Tree state

std::vector<int> BartTreeState::leaves() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].alive && nodes[i].is_leaf()) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<int> BartTreeState::internal_nodes() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].alive && !nodes[i].is_leaf()) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<int> BartTreeState::nog_nodes() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (n.alive && !n.is_leaf() && nodes[n.left].is_leaf() && nodes[n.right].is_leaf()) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::size_t BartTreeState::num_splits() const { return internal_nodes().size(); }

Tree BartTreeState::to_tree() const {
  std::vector<TreeNode> out;
  // breadth-first relabel so the snapshot is compact
  std::vector<int> queue{0};
  std::vector<int> new_id(nodes.size(), -1);
  new_id[0] = 0;
  out.emplace_back();
  for (std::size_t q = 0; q < queue.size(); ++q) {
    int old = queue[q];
    const auto& src = nodes[old];
    TreeNode& dst = out[static_cast<std::size_t>(new_id[old])];
    dst.depth = src.depth;
    dst.value = src.mu;
    dst.parent = src.parent >= 0 ? new_id[src.parent] : -1;
    if (!src.is_leaf()) {
      dst.rule = src.rule;
      int l = static_cast<int>(out.size());
      new_id[src.left] = l;
      new_id[src.right] = l + 1;
      out[static_cast<std::size_t>(new_id[old])].left = l;
      out[static_cast<std::size_t>(new_id[old])].right = l + 1;
      out.emplace_back();
      out.emplace_back();
      queue.push_back(src.left);
      queue.push_back(src.right);
    }
  }
  return Tree(std::move(out));
}

// ---------------------------------------------------------------------------
// Kernel

TreeKernel::TreeKernel(const FeatureMatrix& x, const BartParams& params, double leaf_sd, double sigma)
    : x_(x), params_(params), tau2_(leaf_sd * leaf_sd), sigma2_(sigma * sigma) {}

BartTreeState TreeKernel::initial_state() const {
  BartTreeState s;
  s.leaf_of_row.assign(x_.rows(), 0);
  return s;
}

double TreeKernel::leaf_log_likelihood(double sum, std::size_t n) const {
  const double denom = sigma2_ + static_cast<double>(n) * tau2_;
  return 0.5 * std::log(sigma2_ / denom) + tau2_ * sum * sum / (2.0 * sigma2_ * denom);
}

bool TreeKernel::variable_splittable(std::size_t v, std::span<const std::size_t> rows) const {
  auto col = x_.col(v);
  bool have_obs = false, have_miss = false;
  double first = 0.0;
  for (std::size_t r : rows) {
    double xv = col[r];
    if (std::isnan(xv)) {
      have_miss = true;
      if (have_obs) return true;  // missing vs observed split
      continue;
    }
    if (!have_obs) {
      have_obs = true;
      first = xv;
      if (have_miss) return true;
    } else if (xv != first) {
      return true;
    }
  }
  return false;
}

std::size_t TreeKernel::available_variables(std::span<const std::size_t> rows, std::vector<std::size_t>* out) const {
  std::size_t count = 0;
  for (std::size_t v = 0; v < x_.cols(); ++v) {
    if (variable_splittable(v, rows)) {
      ++count;
      if (out) out->push_back(v);
      else return count;  // only existence needed
    }
  }
  return count;
}

double TreeKernel::split_probability(std::span<const std::size_t> rows, int depth) const {
  if (params_.max_depth > 0 && depth >= params_.max_depth) return 0.0;
  if (rows.size() < 2 || available_variables(rows) == 0) return 0.0;
  return params_.base * std::pow(1.0 + depth, -params_.power);
}

TreeKernel::RuleDraw TreeKernel::draw_rule(std::span<const std::size_t> rows, Rng& rng) const {
  RuleDraw out;
  std::vector<std::size_t> vars;
  available_variables(rows, &vars);
  if (vars.empty()) return out;
  std::size_t v = vars[rng.index(vars.size())];
  auto col = x_.col(v);
  scratch_.clear();
  std::size_t n_miss = 0;
  for (std::size_t r : rows) {
    if (std::isnan(col[r])) ++n_miss;
    else scratch_.push_back(col[r]);
  }
  std::sort(scratch_.begin(), scratch_.end());
  scratch_.erase(std::unique(scratch_.begin(), scratch_.end()), scratch_.end());

  MissingDirection dirs[3];
  std::size_t n_dirs = 0;
  if (scratch_.size() >= 2) {
    dirs[n_dirs++] = MissingDirection::left;
    if (n_miss > 0) dirs[n_dirs++] = MissingDirection::right;
  }
  if (n_miss > 0 && !scratch_.empty()) dirs[n_dirs++] = MissingDirection::missing_only_left;
  MissingDirection d = dirs[n_dirs == 1 ? 0 : rng.index(n_dirs)];
  out.ok = true;
  out.rule.variable = v;
  out.rule.missing = d;
  if (d == MissingDirection::missing_only_left) {
    out.rule.threshold = std::numeric_limits<double>::quiet_NaN();
  } else {
    // any observed value except the largest keeps both children nonempty
    out.rule.threshold = scratch_[rng.index(scratch_.size() - 1)];
  }
  return out;
}

double TreeKernel::log_rule_prior(std::span<const std::size_t> rows, const SplitRule& rule) const {
  const double ninf = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> vars;
  available_variables(rows, &vars);
  if (!std::binary_search(vars.begin(), vars.end(), rule.variable)) return ninf;
  auto col = x_.col(rule.variable);
  std::vector<double> vals;
  std::size_t n_miss = 0;
  for (std::size_t r : rows) {
    if (std::isnan(col[r])) ++n_miss;
    else vals.push_back(col[r]);
  }
  std::sort(vals.begin(), vals.end());
  vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
  std::size_t n_dirs = 0;
  bool allowed = false;
  if (vals.size() >= 2) {
    ++n_dirs;
    allowed = allowed || rule.missing == MissingDirection::left;
    if (n_miss > 0) {
      ++n_dirs;
      allowed = allowed || rule.missing == MissingDirection::right;
    }
  }
  if (n_miss > 0 && !vals.empty()) {
    ++n_dirs;
    allowed = allowed || rule.missing == MissingDirection::missing_only_left;
  }
  if (!allowed) return ninf;
  double lp = -std::log(static_cast<double>(vars.size())) - std::log(static_cast<double>(n_dirs));
  if (rule.missing != MissingDirection::missing_only_left) {
    auto it = std::lower_bound(vals.begin(), vals.end() - 1, rule.threshold);
    if (it == vals.end() - 1 || *it != rule.threshold) return ninf;
    lp -= std::log(static_cast<double>(vals.size() - 1));
  }
  return lp;
}

double TreeKernel::subtree_log_prior(const BartTreeState& tree, int node, std::span<const std::size_t> rows,
                                     const SplitRule* root_rule) const {
  const double ninf = -std::numeric_limits<double>::infinity();
  const BartNode& nd = tree.nodes[node];
  const double p = split_probability(rows, nd.depth);
  if (nd.is_leaf()) return std::log1p(-p);
  if (p <= 0.0) return ninf;
  double lp = std::log(p);
  const SplitRule& rule = root_rule ? *root_rule : nd.rule;
  std::vector<std::size_t> left, right;
  auto col = x_.col(rule.variable);
  for (std::size_t r : rows) (goes_left(rule, col[r]) ? left : right).push_back(r);
  if (left.empty() || right.empty()) return ninf;
  for (auto [child, child_rows] : {std::pair{nd.left, &left}, std::pair{nd.right, &right}}) {
    lp += subtree_rest(tree, child, *child_rows);
    if (std::isinf(lp)) return ninf;
  }
  return lp;
}

double TreeKernel::subtree_rest(const BartTreeState& tree, int node, std::span<const std::size_t> rows) const {
  const double ninf = -std::numeric_limits<double>::infinity();
  const BartNode& nd = tree.nodes[node];
  const double p = split_probability(rows, nd.depth);
  if (nd.is_leaf()) return std::log1p(-p);
  if (p <= 0.0) return ninf;
  double lp = std::log(p) + log_rule_prior(rows, nd.rule);
  if (std::isinf(lp)) return ninf;
  std::vector<std::size_t> left, right;
  auto col = x_.col(nd.rule.variable);
  for (std::size_t r : rows) (goes_left(nd.rule, col[r]) ? left : right).push_back(r);
  if (left.empty() || right.empty()) return ninf;
  lp += subtree_rest(tree, nd.left, left);
  if (std::isinf(lp)) return ninf;
  return lp + subtree_rest(tree, nd.right, right);
}

std::vector<std::size_t> TreeKernel::rows_in(const BartTreeState& tree, int node) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < tree.leaf_of_row.size(); ++i)
    if (tree.leaf_of_row[i] == node) rows.push_back(i);
  return rows;
}

namespace {

int allocate_node(BartTreeState& t) {
  if (!t.free_ids.empty()) {
    int id = t.free_ids.back();
    t.free_ids.pop_back();
    t.nodes[static_cast<std::size_t>(id)] = BartNode{};
    return id;
  }
  t.nodes.emplace_back();
  return static_cast<int>(t.nodes.size() - 1);
}

bool accept(Rng& rng, double log_ratio) {
  if (log_ratio >= 0.0) return true;
  return std::log(rng.uniform()) < log_ratio;
}

}  // namespace

void TreeKernel::propose_grow(BartTreeState& tree, std::span<const double> residual, Rng& rng, double p_grow_here) {
  ++grow_stats.proposed;
  auto leaves = tree.leaves();
  const int leaf = leaves[rng.index(leaves.size())];
  const int depth = tree.nodes[leaf].depth;
  auto rows = rows_in(tree, leaf);
  const double p_here = split_probability(rows, depth);
  if (p_here <= 0.0) return;
  RuleDraw draw = draw_rule(rows, rng);
  if (!draw.ok) return;

  std::vector<std::size_t> lrows, rrows;
  double sl = 0.0, sr = 0.0;
  auto col = x_.col(draw.rule.variable);
  for (std::size_t r : rows) {
    if (goes_left(draw.rule, col[r])) {
      lrows.push_back(r);
      sl += residual[r];
    } else {
      rrows.push_back(r);
      sr += residual[r];
    }
  }
  if (lrows.empty() || rrows.empty()) return;
  const double p_l = split_probability(lrows, depth + 1);
  const double p_r = split_probability(rrows, depth + 1);

  std::size_t nog_after = tree.nog_nodes().size() + 1;
  const int parent = tree.nodes[leaf].parent;
  if (parent >= 0) {
    const auto& pn = tree.nodes[parent];
    int sibling = pn.left == leaf ? pn.right : pn.left;
    if (tree.nodes[sibling].is_leaf()) --nog_after;  // parent stops being a nog node
  }

  double log_r = std::log(params_.p_prune) - std::log(p_grow_here) + std::log(static_cast<double>(leaves.size())) -
                 std::log(static_cast<double>(nog_after)) + std::log(p_here) + std::log1p(-p_l) + std::log1p(-p_r) -
                 std::log1p(-p_here) + leaf_log_likelihood(sl, lrows.size()) + leaf_log_likelihood(sr, rrows.size()) -
                 leaf_log_likelihood(sl + sr, rows.size());
  if (!accept(rng, log_r)) return;

  ++grow_stats.accepted;
  int l = allocate_node(tree);
  int r = allocate_node(tree);
  BartNode& node = tree.nodes[leaf];
  node.rule = draw.rule;
  node.left = l;
  node.right = r;
  for (int c : {l, r}) {
    tree.nodes[c].parent = leaf;
    tree.nodes[c].depth = depth + 1;
  }
  for (auto i : lrows) tree.leaf_of_row[i] = l;
  for (auto i : rrows) tree.leaf_of_row[i] = r;
}

void TreeKernel::propose_prune(BartTreeState& tree, std::span<const double> residual, Rng& rng) {
  ++prune_stats.proposed;
  auto nogs = tree.nog_nodes();
  const int node = nogs[rng.index(nogs.size())];
  const BartNode& nd = tree.nodes[node];
  auto lrows = rows_in(tree, nd.left);
  auto rrows = rows_in(tree, nd.right);
  std::vector<std::size_t> rows;
  rows.reserve(lrows.size() + rrows.size());
  std::merge(lrows.begin(), lrows.end(), rrows.begin(), rrows.end(), std::back_inserter(rows));
  double sl = 0.0, sr = 0.0;
  for (auto i : lrows) sl += residual[i];
  for (auto i : rrows) sr += residual[i];

  const double p_here = split_probability(rows, nd.depth);
  const double p_l = split_probability(lrows, nd.depth + 1);
  const double p_r = split_probability(rrows, nd.depth + 1);
  if (p_here <= 0.0) return;
  const std::size_t leaves_after = tree.leaves().size() - 1;
  const double p_grow_after = (node == 0) ? 1.0 : params_.p_grow;

  double log_r = std::log(p_grow_after) - std::log(params_.p_prune) + std::log(static_cast<double>(nogs.size())) -
                 std::log(static_cast<double>(leaves_after)) + std::log1p(-p_here) - std::log(p_here) -
                 std::log1p(-p_l) - std::log1p(-p_r) + leaf_log_likelihood(sl + sr, rows.size()) -
                 leaf_log_likelihood(sl, lrows.size()) - leaf_log_likelihood(sr, rrows.size());
  if (!accept(rng, log_r)) return;

  ++prune_stats.accepted;
  BartNode& n = tree.nodes[node];
  for (int c : {n.left, n.right}) {
    tree.nodes[c].alive = false;
    tree.free_ids.push_back(c);
  }
  n.left = n.right = -1;
  for (auto i : rows) tree.leaf_of_row[i] = node;
}

void TreeKernel::propose_change(BartTreeState& tree, std::span<const double> residual, Rng& rng) {
  ++change_stats.proposed;
  auto internals = tree.internal_nodes();
  const int node = internals[rng.index(internals.size())];

  // rows below the node
  std::vector<std::uint8_t> in_subtree(tree.nodes.size(), 0);
  std::vector<int> stack{node};
  std::vector<int> sub_leaves;
  while (!stack.empty()) {
    int id = stack.back();
    stack.pop_back();
    in_subtree[id] = 1;
    if (tree.nodes[id].is_leaf()) sub_leaves.push_back(id);
    else {
      stack.push_back(tree.nodes[id].left);
      stack.push_back(tree.nodes[id].right);
    }
  }
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < tree.leaf_of_row.size(); ++i)
    if (in_subtree[tree.leaf_of_row[i]]) rows.push_back(i);

  RuleDraw draw = draw_rule(rows, rng);
  if (!draw.ok) return;

  const std::size_t n_nodes = tree.nodes.size();
  std::vector<double> old_sum(n_nodes, 0.0), new_sum(n_nodes, 0.0);
  std::vector<std::size_t> old_n(n_nodes, 0), new_n(n_nodes, 0);
  std::vector<int> new_leaf(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    std::size_t i = rows[k];
    int ol = tree.leaf_of_row[i];
    old_sum[ol] += residual[i];
    ++old_n[ol];
    const BartNode* nd = &tree.nodes[node];
    int id = goes_left(draw.rule, x_.at(i, draw.rule.variable)) ? nd->left : nd->right;
    while (!tree.nodes[id].is_leaf()) {
      const auto& c = tree.nodes[id];
      id = goes_left(c.rule, x_.at(i, c.rule.variable)) ? c.left : c.right;
    }
    new_leaf[k] = id;
    new_sum[id] += residual[i];
    ++new_n[id];
  }
  double log_r = 0.0;
  for (int lf : sub_leaves) {
    if (new_n[lf] == 0) return;
    log_r += leaf_log_likelihood(new_sum[lf], new_n[lf]) - leaf_log_likelihood(old_sum[lf], old_n[lf]);
  }
  // cut sets depend on the rows reaching a node, so descendants' rule priors
  // move with the change; the changed node's own rule term cancels with the proposal
  const double lp_new = subtree_log_prior(tree, node, rows, &draw.rule);
  if (std::isinf(lp_new)) return;
  log_r += lp_new - subtree_log_prior(tree, node, rows, nullptr);
  if (!accept(rng, log_r)) return;

  ++change_stats.accepted;
  tree.nodes[node].rule = draw.rule;
  for (std::size_t k = 0; k < rows.size(); ++k) tree.leaf_of_row[rows[k]] = new_leaf[k];
}

void TreeKernel::draw_leaves(BartTreeState& tree, std::span<const double> residual, Rng& rng) const {
  const std::size_t n_nodes = tree.nodes.size();
  std::vector<double> sum(n_nodes, 0.0);
  std::vector<std::size_t> cnt(n_nodes, 0);
  for (std::size_t i = 0; i < tree.leaf_of_row.size(); ++i) {
    sum[tree.leaf_of_row[i]] += residual[i];
    ++cnt[tree.leaf_of_row[i]];
  }
  for (std::size_t id = 0; id < n_nodes; ++id) {
    auto& nd = tree.nodes[id];
    if (!nd.alive || !nd.is_leaf()) continue;
    const double denom = sigma2_ + static_cast<double>(cnt[id]) * tau2_;
    const double mean = tau2_ * sum[id] / denom;
    const double sd = std::sqrt(sigma2_ * tau2_ / denom);
    nd.mu = rng.normal(mean, sd);
  }
}

void TreeKernel::step(BartTreeState& tree, std::span<const double> residual, Rng& rng) {
  const bool root_only = tree.nodes[0].is_leaf();
  if (root_only) {
    propose_grow(tree, residual, rng, 1.0);
  } else {
    double u = rng.uniform();
    if (u < params_.p_grow) propose_grow(tree, residual, rng, params_.p_grow);
    else if (u < params_.p_grow + params_.p_prune) propose_prune(tree, residual, rng);
    else propose_change(tree, residual, rng);
  }
  draw_leaves(tree, residual, rng);
}

// ---------------------------------------------------------------------------
// Posterior

std::vector<double> vip_slice(std::span<const BartTreeState> trees, std::size_t k, bool& zero_splits) {
  std::vector<double> counts(k, 0.0);
  double total = 0.0;
  for (const auto& tree : trees)
    for (const auto& nd : tree.nodes)
      if (nd.alive && !nd.is_leaf()) {
        counts.at(nd.rule.variable) += 1.0;
        total += 1.0;
      }
  zero_splits = total == 0.0;
  if (zero_splits) std::fill(counts.begin(), counts.end(), 1.0 / static_cast<double>(k));
  else
    for (auto& c : counts) c /= total;
  return counts;
}

std::vector<double> BartPosterior::mean_vip() const {
  std::vector<double> m(n_predictors, 0.0);
  for (const auto& v : vip)
    for (std::size_t k = 0; k < n_predictors; ++k) m[k] += v[k];
  for (auto& x : m) x /= static_cast<double>(vip.size());
  return m;
}

double BartPosterior::draw_value(std::size_t draw, const FeatureMatrix& x, std::size_t i) const {
  double f = offset;
  for (const auto& t : draws[draw]) f += t.predict(x, i);
  return f;
}

std::string BartPosterior::vip_csv(const std::vector<std::string>& names) const {
  std::ostringstream out;
  out << "draw";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (std::size_t p = 0; p < vip.size(); ++p) {
    out << p + 1;
    for (double v : vip[p]) out << ',' << format_double(v);
    out << '\n';
  }
  return out.str();
}

BartPosterior fit_bart_probit(const FeatureMatrix& x, std::span<const double> y, const BartParams& params,
                              std::uint64_t seed) {
  params.validate();
  const std::size_t n = x.rows();
  const std::size_t k = x.cols();
  if (y.size() != n || n == 0) throw RuntimeFailure("outcome length does not match predictor rows");
  double ybar = 0.0;
  for (double v : y) {
    if (v != 0.0 && v != 1.0) throw RuntimeFailure("probit BART needs a 0/1 outcome");
    ybar += v;
  }
  ybar /= static_cast<double>(n);
  if (!params.mia && x.has_missing()) throw RuntimeFailure("BART without MIA needs complete predictors");

  BartPosterior post;
  post.n_predictors = k;
  post.offset = normal_quantile(std::clamp(ybar, 0.01, 0.99));

  Rng rng(seed);
  TreeKernel kernel(x, params, params.leaf_sd(), 1.0);
  std::vector<BartTreeState> trees(params.n_trees, kernel.initial_state());
  std::vector<double> fit(n, 0.0), z(n, 0.0), residual(n, 0.0);
  std::vector<bool> positive(n);
  for (std::size_t i = 0; i < n; ++i) positive[i] = y[i] == 1.0;

  const std::size_t total = params.burn_in + params.n_draws;
  post.vip.reserve(params.n_draws);
  if (params.keep_trees) post.draws.reserve(params.n_draws);
  for (std::size_t iter = 0; iter < total; ++iter) {
    for (std::size_t i = 0; i < n; ++i) z[i] = truncated_normal_unit(rng, post.offset + fit[i], positive[i]) - post.offset;
    for (auto& tree : trees) {
      for (std::size_t i = 0; i < n; ++i) residual[i] = z[i] - fit[i] + tree.nodes[tree.leaf_of_row[i]].mu;
      kernel.step(tree, residual, rng);
      for (std::size_t i = 0; i < n; ++i) fit[i] = z[i] - residual[i] + tree.nodes[tree.leaf_of_row[i]].mu;
    }
    if (iter < params.burn_in) continue;

    bool zero = false;
    auto counts = vip_slice(trees, k, zero);
    post.zero_split_draws.push_back(zero ? 1 : 0);
    post.vip.push_back(std::move(counts));
    if (params.keep_trees) {
      std::vector<Tree> snap;
      snap.reserve(trees.size());
      for (const auto& t : trees) snap.push_back(t.to_tree());
      post.draws.push_back(std::move(snap));
    }
  }
  post.grow = kernel.grow_stats;
  post.prune = kernel.prune_stats;
  post.change = kernel.change_stats;
  return post;
}

BartPosterior fit_bart_probit(const DataMatrix& dm, std::size_t outcome, const BartParams& params, std::uint64_t seed,
                              std::vector<std::size_t> predictors) {
  if (dm.column(outcome).kind != ColumnKind::binary) throw RuntimeFailure("BART outcome must be binary");
  if (predictors.empty())
    for (std::size_t j = 0; j < dm.cols(); ++j)
      if (j != outcome) predictors.push_back(j);
  auto y = dm.column_values(outcome);
  for (double v : y)
    if (std::isnan(v)) throw RuntimeFailure("BART outcome has missing values");
  return fit_bart_probit(dm.features(predictors), y, params, seed);
}

BartPrediction predict_bart(const BartPosterior& post, const FeatureMatrix& rows) {
  if (post.draws.empty()) throw RuntimeFailure("posterior was fit without keep_trees; cannot predict");
  const std::size_t n = rows.rows(), p = post.draws.size();
  BartPrediction out;
  out.mean.assign(n, 0.0);
  out.lower.resize(n);
  out.upper.resize(n);
  std::vector<double> per_draw(p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < p; ++d) per_draw[d] = normal_cdf(post.draw_value(d, rows, i));
    out.mean[i] = std::accumulate(per_draw.begin(), per_draw.end(), 0.0) / static_cast<double>(p);
    out.lower[i] = quantile_type7(per_draw, 0.025);
    out.upper[i] = quantile_type7(per_draw, 0.975);
  }
  return out;
}

VipDraws vip_draws(std::span<const BartPosterior> models) {
  if (models.empty()) throw RuntimeFailure("no posteriors to assemble");
  const std::size_t k = models[0].n_predictors, p = models[0].num_draws();
  for (const auto& m : models)
    if (m.n_predictors != k || m.num_draws() != p) throw RuntimeFailure("posteriors disagree on predictor or draw count");
  VipDraws out(k, models.size(), p);
  for (std::size_t m = 0; m < models.size(); ++m)
    for (std::size_t d = 0; d < p; ++d)
      for (std::size_t j = 0; j < k; ++j) out.at(j, m, d) = models[m].vip[d][j];
  return out;
}

PermutationResult permutation_select(const FeatureMatrix& x, std::span<const double> y, const BartParams& params,
                                     std::size_t n_perm, double alpha, std::uint64_t seed) {
  if (n_perm == 0) throw ConfigError("permutation selection needs at least one permutation");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  BartParams p = params;
  p.keep_trees = false;
  PermutationResult out;
  out.observed_vip = fit_bart_probit(x, y, p, derive_seed(seed, 0)).mean_vip();

  std::vector<double> yp(y.begin(), y.end());
  for (std::size_t b = 0; b < n_perm; ++b) {
    Rng rng(derive_seed(seed, 1, b));
    std::copy(y.begin(), y.end(), yp.begin());
    rng.shuffle(yp);
    out.null_vip.push_back(fit_bart_probit(x, yp, p, derive_seed(seed, 2, b)).mean_vip());
  }
  const std::size_t k = x.cols();
  out.null_quantile.resize(k);
  std::vector<double> col(n_perm);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t b = 0; b < n_perm; ++b) col[b] = out.null_vip[b][j];
    out.null_quantile[j] = quantile_type7(col, 1.0 - alpha);
    if (out.observed_vip[j] > out.null_quantile[j]) out.selected.push_back(j);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<double> VipDraws::predictor_means() const {
  std::vector<double> out(k_, 0.0);
  for (std::size_t k = 0; k < k_; ++k) {
    double s = 0.0;
    for (std::size_t m = 0; m < m_; ++m)
      for (std::size_t p = 0; p < p_; ++p) s += at(k, m, p);
    out[k] = s / static_cast<double>(m_ * p_);
  }
  return out;
}

std::string VipDraws::to_csv(const std::vector<std::string>& names) const {
  std::ostringstream out;
  out << "imputation,draw";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (std::size_t m = 0; m < m_; ++m)
    for (std::size_t p = 0; p < p_; ++p) {
      out << m + 1 << ',' << p + 1;
      for (std::size_t k = 0; k < k_; ++k) out << ',' << format_double(at(k, m, p));
      out << '\n';
    }
  return out.str();
}

}  // namespace rrbart
