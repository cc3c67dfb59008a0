#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.h"
#include "rrbart/error.h"
#include "rrbart/random.h"
#include "rrbart/selection.h"
#include "rrbart/simulation.h"

using namespace rrbart;

namespace {

using Cube = std::vector<std::vector<std::vector<double>>>;

VipDraws to_draws(const Cube& c) {
  VipDraws v(c.size(), c[0].size(), c[0][0].size());
  for (std::size_t k = 0; k < c.size(); ++k)
    for (std::size_t m = 0; m < c[0].size(); ++m)
      for (std::size_t p = 0; p < c[0][0].size(); ++p) v.at(k, m, p) = c[k][m][p];
  return v;
}

Cube random_cube(Rng& rng, std::size_t K, std::size_t M, std::size_t P) {
  Cube c(K, std::vector<std::vector<double>>(M, std::vector<double>(P)));
  std::vector<double> level(K);
  for (auto& l : level) l = rng.uniform();
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t p = 0; p < P; ++p) {
      double s = 0;
      for (std::size_t k = 0; k < K; ++k) s += c[k][m][p] = level[k] * (0.5 + rng.uniform());
      for (std::size_t k = 0; k < K; ++k) c[k][m][p] /= s;
    }
  return c;
}

DataMatrix dummy_matrix(std::size_t k, std::size_t n = 60) {
  std::vector<ColumnMeta> cols;
  for (std::size_t j = 0; j < k; ++j) cols.push_back({"V" + std::to_string(j + 1), ColumnKind::continuous, ColumnRole::predictor});
  cols.push_back({"Y", ColumnKind::binary, ColumnRole::outcome});
  std::vector<double> v((k + 1) * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[k * n + i] = i % 2;
  return DataMatrix(cols, n, v);
}

bool subset(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

SelectionParams quick_params() {
  SelectionParams p;
  p.bart.n_draws = 120;
  p.bart.burn_in = 60;
  p.m_imputations = 2;
  p.n_perm = 5;
  p.impute.forest.n_trees = 15;
  p.rfe.gbt.rounds = 30;
  p.b_bootstrap = 10;
  return p;
}

DataMatrix small_scenario(std::uint64_t seed, std::size_t n = 200) {
  ScenarioSpec s;
  s.n = n;
  s.n_noise = 4;
  s.seed = seed;
  auto g = generate_complete(s);
  return ampute(g.data, preset_patterns(g.data, s.preset), seed + 1);
}

}  // namespace

TEST_SUITE("selection") {
  TEST_CASE("pooling matches the direct formulas") {
    Rng rng(1);
    for (int t = 0; t < 100; ++t) {
      std::size_t K = 2 + rng.index(6), M = 2 + rng.index(5), P = 2 + rng.index(30);
      auto cube = random_cube(rng, K, M, P);
      double n_eff = 50 + rng.index(1000);
      auto want = oracle::rubin(cube, n_eff);
      auto got = pool_rubins(to_draws(cube), 0.05, n_eff);
      for (std::size_t k = 0; k < K; ++k) {
        const auto& s = got.stats[k];
        CHECK(std::abs(s.q_bar - want[k].q) <= 1e-12);
        CHECK(std::abs(s.within - want[k].w) <= 1e-12);
        CHECK(std::abs(s.between - want[k].b) <= 1e-12);
        CHECK(std::abs(s.total - want[k].t) <= 1e-12);
        if (std::isfinite(want[k].df)) CHECK(std::abs(s.df - want[k].df) <= 1e-9 * want[k].df);
        // Rubin identity
        CHECK(std::abs((s.total - s.within) - (1 + 1.0 / M) * s.between) <= 1e-15);
      }
      CHECK(std::abs(got.stats[got.reference].q_bar) <= 1e-12);
    }
  }

  TEST_CASE("hand-sized pooling example") {
    // K=2, M=2, P=3
    Cube c{{{0.6, 0.7, 0.8}, {0.5, 0.65, 0.7}}, {{0.4, 0.3, 0.2}, {0.5, 0.35, 0.3}}};
    auto got = pool_rubins(to_draws(c), 0.05, 3.0);
    CHECK(got.reference == 1);
    auto want = oracle::rubin(c, 3.0);
    const auto& s = got.stats[0];
    CHECK(std::abs(s.q_bar - want[0].q) <= 1e-12);
    CHECK(std::abs(s.within - want[0].w) <= 1e-12);
    CHECK(std::abs(s.between - want[0].b) <= 1e-12);
    CHECK(std::abs(s.df - want[0].df) <= 1e-9 * want[0].df);
    // half width uses the 1 - alpha quantile of t(df)
    double tq = (s.hi - s.q_bar) / std::sqrt(s.total);
    CHECK(oracle::student_t_cdf(tq, s.df) == doctest::Approx(0.95).epsilon(1e-7));
    CHECK(s.lo == doctest::Approx(2 * s.q_bar - s.hi));
  }

  TEST_CASE("degenerate pooling") {
    Cube c(3, std::vector<std::vector<double>>(2, std::vector<double>(4)));
    for (auto& m : c[0]) std::fill(m.begin(), m.end(), 0.5);
    for (auto& m : c[1]) std::fill(m.begin(), m.end(), 0.3);
    for (auto& m : c[2]) std::fill(m.begin(), m.end(), 0.2);
    auto got = pool_rubins(to_draws(c), 0.05, 100);
    CHECK(got.reference == 2);
    CHECK(got.stats[0].q_bar == doctest::Approx(0.3));
    CHECK(got.stats[0].total == 0.0);
    CHECK(got.stats[0].degenerate);
    CHECK(got.stats[0].selected);
    CHECK(!got.stats[2].selected);
    CHECK(std::isinf(got.stats[0].df));
    Cube one(2, std::vector<std::vector<double>>(1, std::vector<double>(4, 0.5)));
    CHECK_THROWS_AS(pool_rubins(to_draws(one), 0.05, 100), ConfigError);
  }

  TEST_CASE("alpha monotonicity and guard") {
    Rng rng(2);
    for (int t = 0; t < 30; ++t) {
      auto cube = random_cube(rng, 12, 3, 40);
      auto v = to_draws(cube);
      auto dm = dummy_matrix(12);
      std::vector<std::vector<std::size_t>> sets;
      for (double a : {0.01, 0.05, 0.1, 0.3}) {
        SelectionParams p;
        p.alpha = a;
        auto r = rr_select_from_draws(dm, v, p);
        if (r.all_selected) {
          CHECK(r.min_mean_vip > 1.0 / 24);
          CHECK(r.selected.size() == 12);
        } else {
          CHECK(std::find(r.selected.begin(), r.selected.end(), r.pooled.size() ? std::min_element(r.mean_vip.begin(), r.mean_vip.end()) - r.mean_vip.begin() : 0) == r.selected.end());
        }
        sets.push_back(r.selected);
      }
      for (std::size_t i = 0; i + 1 < sets.size(); ++i) CHECK(subset(sets[i], sets[i + 1]));
    }
    SelectionParams bad;
    bad.alpha = 1.0;
    CHECK_THROWS_AS(rr_select_from_draws(dummy_matrix(2), to_draws(random_cube(rng, 2, 2, 3)), bad), ConfigError);
  }

  TEST_CASE("guard selects everything when importance is spread evenly") {
    // 4 predictors with equal importance: min mean VIP 0.25 > 1/8
    Cube c(4, std::vector<std::vector<double>>(2, std::vector<double>(5, 0.25)));
    c[0][0][0] = 0.26;
    c[1][0][0] = 0.24;
    SelectionParams p;
    auto r = rr_select_from_draws(dummy_matrix(4), to_draws(c), p);
    CHECK(r.all_selected);
    CHECK(r.selected == std::vector<std::size_t>{0, 1, 2, 3});
  }

  TEST_CASE("median and pooled-draw baselines") {
    Cube c(4, std::vector<std::vector<double>>(1, std::vector<double>(30)));
    const double lv[4] = {0.1, 0.4, 0.2, 0.3};
    for (std::size_t k = 0; k < 4; ++k)
      for (std::size_t p = 0; p < 30; ++p) c[k][0][p] = lv[k];
    auto dm = dummy_matrix(4);
    auto med = rr_median_baseline(dm, to_draws(c));
    CHECK(med.selected == std::vector<std::size_t>{1, 3});
    for (auto& k : c)
      for (auto& m : k) std::fill(m.begin(), m.end(), 0.25);
    CHECK(rr_median_baseline(dm, to_draws(c)).selected.empty());

    Rng rng(3);
    auto cube = random_cube(rng, 6, 1, 60);
    auto pooled = rr_pooled_draws_select(dummy_matrix(6), to_draws(cube), 0.05);
    auto ref = std::min_element(pooled.mean_vip.begin(), pooled.mean_vip.end()) - pooled.mean_vip.begin();
    CHECK(std::find(pooled.selected.begin(), pooled.selected.end(), std::size_t(ref)) == pooled.selected.end());
  }

  TEST_CASE("bootstrap thresholds") {
    Rng rng(4);
    BootstrapSelections s;
    s.n_features = 8;
    for (int b = 0; b < 20; ++b) {
      std::vector<std::size_t> sel;
      for (std::size_t j = 0; j < 8; ++j)
        if (rng.uniform() < 0.1 + 0.11 * j) sel.push_back(j);
      s.per_dataset.push_back(sel);
    }
    std::vector<std::size_t> prev;
    bool first = true;
    for (double pi : {0.05, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0}) {
      auto cur = threshold_selections(s, pi);
      if (!first) CHECK(subset(cur, prev));
      prev = cur;
      first = false;
    }
    std::vector<std::size_t> inter;
    for (std::size_t j = 0; j < 8; ++j) {
      bool all = true;
      for (const auto& d : s.per_dataset) all = all && std::find(d.begin(), d.end(), j) != d.end();
      if (all) inter.push_back(j);
    }
    CHECK(threshold_selections(s, 1.0) == inter);
    // ceil(0.1 * 20) = 2 datasets
    BootstrapSelections t;
    t.n_features = 2;
    t.per_dataset.assign(20, {});
    t.per_dataset[0] = {0, 1};
    t.per_dataset[1] = {0};
    CHECK(threshold_selections(t, 0.1) == std::vector<std::size_t>{0});
    CHECK(t.frequencies()[0] == doctest::Approx(0.1));
  }

  TEST_CASE("contract errors") {
    auto full = generate_complete(ScenarioSpec{200, 4, MissingnessPreset::y40_overall60, 5, {}}).data;
    auto p = quick_params();
    CHECK_THROWS_AS(rr_bart_select(full, p, 1), DataError);
    auto holed = small_scenario(6, 90);
    CHECK_THROWS_AS(mia_select(holed, Engine::gbt, OutcomeMode::exclude_y, p, 1), DataError);
    CHECK_THROWS_AS(run_method("nope", holed, p, 1), ConfigError);
  }

  TEST_CASE("MIA on complete data equals the plain selector") {
    auto dm = generate_complete(ScenarioSpec{200, 4, MissingnessPreset::y40_overall60, 7, {}}).data;
    auto p = quick_params();
    auto r = mia_select(dm, Engine::gbt, OutcomeMode::impute_y, p, 9);
    std::vector<double> y = dm.column_values(dm.outcome_index());
    auto plain = engine_select(dm.features(dm.predictor_indices()), y, Engine::gbt, p, false, derive_seed(9, 1));
    CHECK(r.selected == plain);
    auto cc = complete_case_select(dm, Engine::gbt, p, 9);
    CHECK(cc.selected == plain);
  }

  TEST_CASE("pipelines replay from seed") {
    auto dm = small_scenario(10);
    auto p = quick_params();
    auto a = rr_bart_select(dm, p, 11), b = rr_bart_select(dm, p, 11);
    CHECK(a.selected == b.selected);
    CHECK(a.mean_vip == b.mean_vip);
    CHECK(a.names.size() == 14);
    auto cfg = a.parameters;
    auto q = SelectionParams::from_config(cfg);
    CHECK(q.to_config() == cfg);
    auto c = rr_bart_select(dm, q, 11);
    CHECK(c.mean_vip == a.mean_vip);
    auto run = rr_vip_draws(dm, p, 11);
    CHECK(run.draws.imputations() == 2);
    CHECK(run.draws.draws() == 120);
    auto from = rr_select_from_draws(dm, run.draws, p);
    CHECK(from.selected == a.selected);

    p.b_bootstrap = 10;
    auto bi1 = bi_select(dm, BaseSelector::gbt_rfe, p, 12), bi2 = bi_select(dm, BaseSelector::gbt_rfe, p, 12);
    CHECK(bi1.selected == bi2.selected);
    CHECK(bi1.frequency.size() == 14);
    p.b_bootstrap = 5;
    CHECK_THROWS_AS(bi_select(dm, BaseSelector::gbt_rfe, p, 12), ConfigError);
  }
}
