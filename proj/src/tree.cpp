#include "rrbart/tree.h"

#include <algorithm>
#include <charconv>
#include <limits>
#include <numeric>
#include <sstream>

#include "rrbart/error.h"
#include "rrbart/stats.h"

namespace rrbart {

std::string to_string(MissingDirection d) {
  switch (d) {
    case MissingDirection::left: return "left";
    case MissingDirection::right: return "right";
    case MissingDirection::missing_only_left: return "missing_only_left";
  }
  return "left";
}

MissingDirection parse_missing_direction(const std::string& s) {
  if (s == "left") return MissingDirection::left;
  if (s == "right") return MissingDirection::right;
  if (s == "missing_only_left") return MissingDirection::missing_only_left;
  throw DataError("unknown missing direction '" + s + "'");
}

int Tree::leaf_of(std::span<const double> row) const {
  int id = 0;
  while (!nodes_[id].is_leaf()) {
    const auto& nd = nodes_[id];
    id = goes_left(nd.rule, row[nd.rule.variable]) ? nd.left : nd.right;
  }
  return id;
}

std::size_t Tree::num_leaves() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

int Tree::depth() const {
  int d = 0;
  for (const auto& n : nodes_) d = std::max(d, n.depth);
  return d;
}

bool Tree::operator==(const Tree& other) const { return serialize() == other.serialize(); }

std::string Tree::serialize() const {
  std::ostringstream out;
  out << "tree nodes=" << nodes_.size() << "\n";
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    const auto& n = nodes_[id];
    out << "node " << id << " parent=" << n.parent << " depth=" << n.depth << " count=" << n.count;
    if (n.is_leaf()) {
      out << " leaf value=" << format_double(n.value) << "\n";
    } else {
      out << " split var=" << n.rule.variable << " thr=" << format_double(n.rule.threshold)
          << " miss=" << to_string(n.rule.missing) << " left=" << n.left << " right=" << n.right
          << " gain=" << format_double(n.gain) << "\n";
    }
  }
  return out.str();
}

namespace {

std::string field(const std::string& token, const std::string& key) {
  if (token.rfind(key + "=", 0) != 0) throw DataError("tree format: expected field '" + key + "', got '" + token + "'");
  return token.substr(key.size() + 1);
}

double to_double(const std::string& s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw DataError("tree format: bad number '" + s + "'");
  return v;
}

}  // namespace

Tree Tree::deserialize(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("tree nodes=", 0) != 0) throw DataError("tree format: missing header");
  std::size_t n_nodes = std::stoul(line.substr(11));
  std::vector<TreeNode> nodes(n_nodes);
  for (std::size_t k = 0; k < n_nodes; ++k) {
    if (!std::getline(in, line)) throw DataError("tree format: truncated node list");
    std::istringstream ls(line);
    std::string tok, id_s, parent, depth, count, kind;
    ls >> tok >> id_s >> parent >> depth >> count >> kind;
    if (tok != "node") throw DataError("tree format: expected node line");
    std::size_t id = std::stoul(id_s);
    if (id >= n_nodes) throw DataError("tree format: node id out of range");
    TreeNode& n = nodes[id];
    n.parent = std::stoi(field(parent, "parent"));
    n.depth = std::stoi(field(depth, "depth"));
    n.count = std::stoul(field(count, "count"));
    if (kind == "leaf") {
      std::string v;
      ls >> v;
      n.value = to_double(field(v, "value"));
    } else if (kind == "split") {
      std::string var, thr, miss, l, r, g;
      ls >> var >> thr >> miss >> l >> r >> g;
      n.rule.variable = std::stoul(field(var, "var"));
      n.rule.threshold = to_double(field(thr, "thr"));
      n.rule.missing = parse_missing_direction(field(miss, "miss"));
      n.left = std::stoi(field(l, "left"));
      n.right = std::stoi(field(r, "right"));
      n.gain = to_double(field(g, "gain"));
    } else {
      throw DataError("tree format: unknown node kind '" + kind + "'");
    }
  }
  return Tree(std::move(nodes));
}

// ---------------------------------------------------------------------------
// CART growth

namespace {

struct BestSplit {
  bool found = false;
  double gain = 0.0;
  SplitRule rule;
};

// Lower rule index wins ties, then lower variable index; equal candidates
// keep the first (lowest threshold) found.
bool better(double gain, const SplitRule& rule, const BestSplit& best) {
  if (!best.found) return true;
  if (gain != best.gain) return gain > best.gain;
  auto ri = static_cast<int>(rule.missing), bi = static_cast<int>(best.rule.missing);
  if (ri != bi) return ri < bi;
  return rule.variable < best.rule.variable;
}

double split_threshold(double a, double b) {
  double t = a + 0.5 * (b - a);
  return (t >= b) ? a : t;
}

class TreeGrower {
 public:
  TreeGrower(const FeatureMatrix& x, std::span<const double> y, std::span<const double> hessian,
             const TreeParams& params, Rng& rng, std::span<const std::size_t> allowed,
             std::vector<std::size_t>* candidates_seen)
      : x_(x), y_(y), h_(hessian), params_(params), rng_(rng), candidates_seen_(candidates_seen) {
    if (allowed.empty()) {
      allowed_.resize(x.cols());
      std::iota(allowed_.begin(), allowed_.end(), 0);
    } else {
      allowed_.assign(allowed.begin(), allowed.end());
    }
    if (candidates_seen_) seen_.assign(x.cols(), 0);
  }

  Tree grow(std::span<const std::size_t> rows) {
    idx_.assign(rows.begin(), rows.end());
    std::vector<TreeNode> nodes(1);
    nodes[0].count = idx_.size();
    struct Pending {
      int id;
      std::size_t begin, end;
    };
    std::vector<Pending> stack{{0, 0, idx_.size()}};
    while (!stack.empty()) {
      Pending p = stack.back();
      stack.pop_back();
      TreeNode& node = nodes[p.id];
      node.value = leaf_value(p.begin, p.end);
      BestSplit best = find_split(p.begin, p.end, node.depth);
      if (!best.found) continue;

      auto first = idx_.begin() + static_cast<std::ptrdiff_t>(p.begin);
      auto last = idx_.begin() + static_cast<std::ptrdiff_t>(p.end);
      const auto& rule = best.rule;
      auto mid = std::stable_partition(first, last, [&](std::size_t r) { return goes_left(rule, x_.at(r, rule.variable)); });
      std::size_t split = static_cast<std::size_t>(mid - idx_.begin());

      int depth = node.depth;
      node.rule = rule;
      node.gain = best.gain;
      int left_id = static_cast<int>(nodes.size());
      node.left = left_id;
      node.right = left_id + 1;
      TreeNode l, r;
      l.parent = r.parent = p.id;
      l.depth = r.depth = depth + 1;
      l.count = split - p.begin;
      r.count = p.end - split;
      nodes.push_back(l);
      nodes.push_back(r);
      stack.push_back({left_id + 1, split, p.end});
      stack.push_back({left_id, p.begin, split});
    }
    if (candidates_seen_) {
      candidates_seen_->clear();
      for (std::size_t j = 0; j < seen_.size(); ++j)
        if (seen_[j]) candidates_seen_->push_back(j);
    }
    return Tree(std::move(nodes));
  }

 private:
  double leaf_value(std::size_t begin, std::size_t end) const {
    double s = 0.0, hs = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
      s += y_[idx_[k]];
      if (!h_.empty()) hs += h_[idx_[k]];
    }
    if (h_.empty()) return s / static_cast<double>(end - begin);
    return std::clamp(s / std::max(hs, 1e-12), -5.0, 5.0);
  }

  BestSplit find_split(std::size_t begin, std::size_t end, int depth) {
    BestSplit best;
    const std::size_t n = end - begin;
    if (params_.max_depth > 0 && depth >= params_.max_depth) return best;
    if (n < 2 * std::max<std::size_t>(params_.min_node, 1)) return best;

    double s = 0.0, ss = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
      double v = y_[idx_[k]];
      s += v;
      ss += v * v;
    }
    const double nn = static_cast<double>(n);
    const double sst = ss - s * s / nn;
    if (!(sst > 1e-12 * std::max(ss, 1e-300))) return best;
    const double parent_term = s * s / nn;

    const std::size_t min_child = std::max<std::size_t>(params_.min_node, 1);

    // false when v is constant in the node; such variables do not use up mtry
    auto evaluate = [&](std::size_t v) {
      auto col = x_.col(v);
      pairs_.clear();
      double s_miss = 0.0;
      std::size_t n_miss = 0;
      for (std::size_t k = begin; k < end; ++k) {
        std::size_t r = idx_[k];
        double xv = col[r];
        if (std::isnan(xv)) {
          s_miss += y_[r];
          ++n_miss;
        } else {
          pairs_.emplace_back(xv, y_[r]);
        }
      }
      if (n_miss > 0 && !params_.mia)
        throw RuntimeFailure("missing predictor value without MIA splitting");
      const std::size_t n_obs = pairs_.size();
      const double s_obs = s - s_miss;
      bool varies = n_miss > 0 && n_obs > 0;
      for (std::size_t k = 1; k < n_obs && !varies; ++k) varies = pairs_[k].first != pairs_[0].first;
      if (!varies) return false;
      if (candidates_seen_) seen_[v] = 1;

      // rule 3: missing vs observed
      if (n_miss >= min_child && n_obs >= min_child) {
        double g = s_miss * s_miss / static_cast<double>(n_miss) + s_obs * s_obs / static_cast<double>(n_obs) - parent_term;
        SplitRule rule{v, std::numeric_limits<double>::quiet_NaN(), MissingDirection::missing_only_left};
        if (g > 0 && better(g, rule, best)) best = {true, g, rule};
      }
      if (n_obs < 2) return true;

      std::sort(pairs_.begin(), pairs_.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      double s_left = 0.0;
      for (std::size_t k = 0; k + 1 < n_obs; ++k) {
        s_left += pairs_[k].second;
        if (pairs_[k].first == pairs_[k + 1].first) continue;
        const std::size_t nl = k + 1, nr = n_obs - nl;
        const double s_right = s_obs - s_left;
        const double thr = split_threshold(pairs_[k].first, pairs_[k + 1].first);
        // rule 1: missing left
        {
          std::size_t l = nl + n_miss;
          if (l >= min_child && nr >= min_child) {
            double sl = s_left + s_miss;
            double g = sl * sl / static_cast<double>(l) + s_right * s_right / static_cast<double>(nr) - parent_term;
            SplitRule rule{v, thr, MissingDirection::left};
            if (g > 0 && better(g, rule, best)) best = {true, g, rule};
          }
        }
        // rule 2: missing right; identical to rule 1 without missing values
        if (n_miss > 0) {
          std::size_t r = nr + n_miss;
          if (nl >= min_child && r >= min_child) {
            double sr = s_right + s_miss;
            double g = s_left * s_left / static_cast<double>(nl) + sr * sr / static_cast<double>(r) - parent_term;
            SplitRule rule{v, thr, MissingDirection::right};
            if (g > 0 && better(g, rule, best)) best = {true, g, rule};
          }
        }
      }
      return true;
    };

    if (params_.mtry > 0 && params_.mtry < allowed_.size()) {
      order_ = allowed_;
      std::size_t used = 0;
      for (std::size_t i = 0; i < order_.size() && used < params_.mtry; ++i) {
        std::swap(order_[i], order_[i + rng_.index(order_.size() - i)]);
        used += evaluate(order_[i]);
      }
    } else {
      for (std::size_t v : allowed_) evaluate(v);
    }
    if (best.found && best.gain <= 1e-12 * sst) best.found = false;
    return best;
  }

  const FeatureMatrix& x_;
  std::span<const double> y_;
  std::span<const double> h_;
  const TreeParams& params_;
  Rng& rng_;
  std::vector<std::size_t>* candidates_seen_;
  std::vector<std::size_t> allowed_;
  std::vector<std::size_t> idx_;
  std::vector<std::size_t> order_;
  std::vector<std::pair<double, double>> pairs_;
  std::vector<std::uint8_t> seen_;
};

void check_target(std::span<const double> y, std::size_t n_rows) {
  if (y.size() != n_rows) throw RuntimeFailure("target length does not match feature rows");
  if (n_rows == 0) throw RuntimeFailure("cannot fit a tree on empty data");
  for (double v : y)
    if (std::isnan(v)) throw RuntimeFailure("target has missing values in training rows");
}

std::vector<std::size_t> default_predictors(const DataMatrix& dm, std::size_t target, std::vector<std::size_t> predictors) {
  if (!predictors.empty()) return predictors;
  for (std::size_t j = 0; j < dm.cols(); ++j)
    if (j != target) predictors.push_back(j);
  return predictors;
}

std::vector<double> observed_target(const DataMatrix& dm, std::size_t target) {
  auto y = dm.column_values(target);
  for (double v : y)
    if (std::isnan(v)) throw RuntimeFailure("target column '" + dm.column(target).name + "' has missing values");
  return y;
}

void require_complete(const FeatureMatrix& x) {
  if (x.has_missing()) throw RuntimeFailure("predictors have missing values; enable MIA splitting or impute first");
}

}  // namespace

Tree grow_tree(const FeatureMatrix& x, std::span<const double> y, std::span<const std::size_t> rows,
               const TreeParams& params, Rng& rng, std::span<const std::size_t> allowed,
               std::span<const double> hessian, std::vector<std::size_t>* candidates_seen) {
  if (rows.empty()) throw RuntimeFailure("cannot fit a tree on empty data");
  TreeGrower grower(x, y, hessian, params, rng, allowed, candidates_seen);
  return grower.grow(rows);
}

TreeModel fit_tree(const DataMatrix& dm, std::size_t target, const TreeParams& params, std::uint64_t seed,
                   std::vector<std::size_t> predictors) {
  TreeModel model;
  model.predictors = default_predictors(dm, target, std::move(predictors));
  auto x = dm.features(model.predictors);
  auto y = observed_target(dm, target);
  check_target(y, x.rows());
  if (!params.mia) require_complete(x);
  std::vector<std::size_t> rows(x.rows());
  std::iota(rows.begin(), rows.end(), 0);
  Rng rng(seed);
  model.tree = grow_tree(x, y, rows, params, rng);
  return model;
}

// ---------------------------------------------------------------------------
// Random forest

std::size_t default_mtry(std::size_t k, bool classification) {
  if (k == 0) return 0;
  double m = classification ? std::ceil(std::sqrt(static_cast<double>(k))) : std::ceil(static_cast<double>(k) / 3.0);
  return std::clamp<std::size_t>(static_cast<std::size_t>(m), 1, k);
}

std::vector<std::size_t> bootstrap_rows(std::size_t n, Rng& rng) {
  std::vector<std::size_t> rows(n);
  for (auto& r : rows) r = rng.index(n);
  std::sort(rows.begin(), rows.end());
  return rows;
}

double Forest::predict(const FeatureMatrix& x, std::size_t i) const {
  if (classification) {
    std::size_t votes = 0;
    for (const auto& t : trees) votes += t.predict(x, i) > 0.5 ? 1 : 0;
    return 2 * votes > trees.size() ? 1.0 : 0.0;
  }
  double s = 0.0;
  for (const auto& t : trees) s += t.predict(x, i);
  return s / static_cast<double>(trees.size());
}

std::vector<double> Forest::predict(const FeatureMatrix& x) const {
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict(x, i);
  return out;
}

Forest fit_random_forest(const FeatureMatrix& x, std::span<const double> y, const ForestParams& params,
                         std::uint64_t seed) {
  check_target(y, x.rows());
  if (params.n_trees == 0) throw ConfigError("random forest needs at least one tree");
  const std::size_t n = x.rows();
  Forest f;
  f.classification = params.classification;
  TreeParams tp;
  tp.min_node = params.min_node;
  tp.mtry = params.mtry ? std::min(params.mtry, x.cols()) : default_mtry(x.cols(), params.classification);
  tp.mia = true;  // inputs are validated by callers; NaN routing is harmless when absent

  std::vector<double> oob_sum(n, 0.0);
  std::vector<std::size_t> oob_cnt(n, 0);
  std::vector<std::uint8_t> inbag(n);
  for (std::size_t t = 0; t < params.n_trees; ++t) {
    std::uint64_t s = derive_seed(seed, t);
    Rng rng(s);
    auto rows = bootstrap_rows(n, rng);
    std::vector<std::size_t> seen;
    f.trees.push_back(grow_tree(x, y, rows, tp, rng, {}, {}, &seen));
    f.seeds.push_back(s);
    f.candidate_vars.push_back(std::move(seen));

    std::fill(inbag.begin(), inbag.end(), 0);
    for (auto r : rows) inbag[r] = 1;
    const Tree& tree = f.trees.back();
    for (std::size_t i = 0; i < n; ++i) {
      if (inbag[i]) continue;
      double p = tree.predict(x, i);
      oob_sum[i] += params.classification ? (p > 0.5 ? 1.0 : 0.0) : p;
      ++oob_cnt[i];
    }
  }

  f.oob_prediction.assign(n, std::numeric_limits<double>::quiet_NaN());
  double err = 0.0, ybar = 0.0;
  std::size_t cnt = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!oob_cnt[i]) continue;
    double p = oob_sum[i] / static_cast<double>(oob_cnt[i]);
    if (params.classification) p = p > 0.5 ? 1.0 : 0.0;
    f.oob_prediction[i] = p;
    err += params.classification ? (p != y[i] ? 1.0 : 0.0) : (p - y[i]) * (p - y[i]);
    ybar += y[i];
    ++cnt;
  }
  if (cnt > 0) {
    err /= static_cast<double>(cnt);
    ybar /= static_cast<double>(cnt);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (oob_cnt[i]) var += (y[i] - ybar) * (y[i] - ybar);
    var /= static_cast<double>(cnt);
    f.oob_error = err;
    f.oob_r2 = (!params.classification && var > 0) ? 1.0 - err / var : 0.0;
  }
  return f;
}

ForestModel fit_random_forest(const DataMatrix& dm, std::size_t target, const ForestParams& params, std::uint64_t seed,
                              std::vector<std::size_t> predictors) {
  ForestModel model;
  model.predictors = default_predictors(dm, target, std::move(predictors));
  auto x = dm.features(model.predictors);
  require_complete(x);
  auto y = observed_target(dm, target);
  model.forest = fit_random_forest(x, y, params, seed);
  return model;
}

// ---------------------------------------------------------------------------
// Gradient boosting

double BoostedEnsemble::margin(const FeatureMatrix& x, std::size_t i) const {
  double s = 0.0;
  for (const auto& t : trees) s += t.predict(x, i);
  return base_score + learning_rate * s;
}

double BoostedEnsemble::predict(const FeatureMatrix& x, std::size_t i) const {
  double m = margin(x, i);
  return loss == Loss::logistic ? inv_logit(m) : m;
}

std::vector<double> BoostedEnsemble::predict(const FeatureMatrix& x) const {
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict(x, i);
  return out;
}

double log_loss(std::span<const double> prob, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double p = std::clamp(prob[i], 1e-15, 1.0 - 1e-15);
    s -= y[i] > 0.5 ? std::log(p) : std::log(1.0 - p);
  }
  return s / static_cast<double>(y.size());
}

namespace {

double loss_value(Loss loss, std::span<const double> margin, std::span<const double> y) {
  if (loss == Loss::squared) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += (margin[i] - y[i]) * (margin[i] - y[i]);
    return s / static_cast<double>(y.size());
  }
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    // log(1 + exp(m)) - y m, computed stably
    double m = margin[i];
    double sp = m > 0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
    s += sp - y[i] * m;
  }
  return s / static_cast<double>(y.size());
}

}  // namespace

BoostedEnsemble fit_gbt(const FeatureMatrix& x, std::span<const double> y, const GbtParams& params,
                        std::uint64_t seed, Validation validation) {
  check_target(y, x.rows());
  if (params.rounds == 0) throw ConfigError("boosting needs at least one round");
  if (!(params.learning_rate > 0.0 && params.learning_rate <= 1.0)) throw ConfigError("learning rate must lie in (0, 1]");
  if (!(params.colsample > 0.0 && params.colsample <= 1.0)) throw ConfigError("colsample must lie in (0, 1]");
  if (!params.mia) require_complete(x);
  const std::size_t n = x.rows();
  if (params.loss == Loss::logistic)
    for (double v : y)
      if (v != 0.0 && v != 1.0) throw RuntimeFailure("logistic loss needs a binary target");

  BoostedEnsemble e;
  e.learning_rate = params.learning_rate;
  e.colsample = params.colsample;
  e.loss = params.loss;
  e.n_features = x.cols();
  double ybar = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  if (params.loss == Loss::logistic) {
    double p = std::clamp(ybar, 1e-6, 1.0 - 1e-6);
    e.base_score = std::log(p / (1.0 - p));
  } else {
    e.base_score = ybar;
  }

  TreeParams tp;
  tp.max_depth = params.max_depth;
  tp.min_node = params.min_node;
  tp.mia = params.mia;
  const std::size_t n_cols = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(params.colsample * static_cast<double>(x.cols()))), 1, x.cols());

  std::vector<double> margin(n, e.base_score), grad(n), hess;
  if (params.loss == Loss::logistic) hess.resize(n);
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);

  const bool validate = validation.x != nullptr;
  std::vector<double> vmargin;
  if (validate) vmargin.assign(validation.x->rows(), e.base_score);
  double best_loss = std::numeric_limits<double>::infinity();
  Rng rng(seed);

  for (std::size_t round = 0; round < params.rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      if (params.loss == Loss::logistic) {
        double p = inv_logit(margin[i]);
        grad[i] = y[i] - p;
        hess[i] = p * (1.0 - p);
      } else {
        grad[i] = y[i] - margin[i];
      }
    }
    std::vector<std::size_t> cols = rng.sample_without_replacement(x.cols(), n_cols);
    std::sort(cols.begin(), cols.end());
    Tree tree = grow_tree(x, grad, rows, tp, rng, cols, hess);
    for (std::size_t i = 0; i < n; ++i) margin[i] += e.learning_rate * tree.predict(x, i);
    e.train_loss.push_back(loss_value(params.loss, margin, y));
    e.trees.push_back(std::move(tree));

    if (validate) {
      const Tree& t = e.trees.back();
      for (std::size_t i = 0; i < vmargin.size(); ++i) vmargin[i] += e.learning_rate * t.predict(*validation.x, i);
      double vl = loss_value(params.loss, vmargin, validation.y);
      e.validation_loss.push_back(vl);
      if (vl < best_loss) {
        best_loss = vl;
        e.best_round = round + 1;
      } else if (params.early_stop_rounds > 0 && round + 1 - e.best_round >= params.early_stop_rounds) {
        break;
      }
    }
  }
  if (validate) {
    e.trees.resize(e.best_round);
    e.train_loss.resize(e.best_round);
  } else {
    e.best_round = e.trees.size();
  }
  return e;
}

GbtModel fit_gbt(const DataMatrix& dm, std::size_t target, const GbtParams& params, std::uint64_t seed,
                 std::vector<std::size_t> predictors) {
  GbtModel model;
  model.predictors = default_predictors(dm, target, std::move(predictors));
  auto x = dm.features(model.predictors);
  auto y = observed_target(dm, target);
  model.ensemble = fit_gbt(x, y, params, seed);
  return model;
}

std::vector<double> gbt_importance(const BoostedEnsemble& e) {
  std::vector<double> imp(e.n_features, 0.0);
  for (const auto& t : e.trees)
    for (const auto& nd : t.nodes())
      if (!nd.is_leaf()) imp[nd.rule.variable] += nd.gain;
  return imp;
}

// ---------------------------------------------------------------------------
// Recursive feature elimination

RfeResult rfe_select(const FeatureMatrix& x, std::span<const double> y, const RfeParams& params, std::uint64_t seed) {
  RfeResult result;
  std::vector<std::size_t> current(x.cols());
  std::iota(current.begin(), current.end(), 0);
  if (x.cols() < 2) {
    result.selected = current;
    return result;
  }
  const std::size_t n = x.rows();
  const std::size_t folds = std::clamp<std::size_t>(params.folds, 2, n);
  Rng rng(seed);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  std::vector<std::vector<std::size_t>> train(folds), test(folds);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t f = 0; f < folds; ++f) (k % folds == f ? test[f] : train[f]).push_back(perm[k]);
  for (auto& v : train) std::sort(v.begin(), v.end());
  for (auto& v : test) std::sort(v.begin(), v.end());

  const std::size_t min_size = std::max<std::size_t>(params.min_size, 1);
  std::size_t step = 0;
  for (;;) {
    FeatureMatrix xs = x.select_cols(current);
    std::vector<double> imp(current.size(), 0.0);
    double cv = 0.0;
    for (std::size_t f = 0; f < folds; ++f) {
      FeatureMatrix xtr = xs.select_rows(train[f]), xte = xs.select_rows(test[f]);
      std::vector<double> ytr, yte;
      for (auto r : train[f]) ytr.push_back(y[r]);
      for (auto r : test[f]) yte.push_back(y[r]);
      auto e = fit_gbt(xtr, ytr, params.gbt, derive_seed(seed, step, f), Validation{&xte, yte});
      if (params.gbt.loss == Loss::logistic) {
        cv += log_loss(e.predict(xte), yte);
      } else {
        auto pred = e.predict(xte);
        double s = 0.0;
        for (std::size_t i = 0; i < yte.size(); ++i) s += (pred[i] - yte[i]) * (pred[i] - yte[i]);
        cv += s / static_cast<double>(yte.size());
      }
      auto fi = gbt_importance(e);
      for (std::size_t j = 0; j < imp.size(); ++j) imp[j] += fi[j];
    }
    result.path.push_back({current, cv / static_cast<double>(folds)});
    if (current.size() <= min_size) break;

    double lo = *std::min_element(imp.begin(), imp.end());
    std::vector<std::size_t> ties;
    for (std::size_t j = 0; j < imp.size(); ++j)
      if (imp[j] == lo) ties.push_back(j);
    std::size_t drop = ties[ties.size() == 1 ? 0 : rng.index(ties.size())];
    current.erase(current.begin() + static_cast<std::ptrdiff_t>(drop));
    ++step;
  }

  std::size_t best = 0;
  for (std::size_t s = 1; s < result.path.size(); ++s)
    if (result.path[s].cv_loss <= result.path[best].cv_loss) best = s;
  result.selected = result.path[best].features;
  return result;
}

std::vector<std::size_t> rfe_select(const DataMatrix& dm, std::size_t target, const RfeParams& params,
                                    std::uint64_t seed, std::vector<std::size_t> predictors) {
  predictors = default_predictors(dm, target, std::move(predictors));
  auto x = dm.features(predictors);
  if (!params.gbt.mia) require_complete(x);
  auto y = observed_target(dm, target);
  auto r = rfe_select(x, y, params, seed);
  std::vector<std::size_t> out;
  for (auto j : r.selected) out.push_back(predictors[j]);
  return out;
}

}  // namespace rrbart
