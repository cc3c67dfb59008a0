#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.h"
#include "rrbart/error.h"
#include "rrbart/evaluation.h"
#include "rrbart/random.h"
#include "rrbart/simulation.h"

using namespace rrbart;

TEST_SUITE("evaluation") {
  TEST_CASE("selection metrics") {
    std::vector<std::size_t> truth{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    auto perfect = selection_metrics(truth, truth, 50);
    CHECK(perfect.precision == 1.0);
    CHECK(perfect.recall == 1.0);
    CHECK(perfect.f1 == 1.0);
    CHECK(perfect.type_i == 0.0);
    // 8 of 10 useful plus 1 noise: precision 8/9, recall 0.8, type I 1/40
    std::vector<std::size_t> sel{0, 1, 2, 3, 4, 5, 6, 7, 20};
    auto m = selection_metrics(sel, truth, 50);
    CHECK(m.precision == doctest::Approx(8.0 / 9));
    CHECK(m.recall == doctest::Approx(0.8));
    CHECK(m.type_i == doctest::Approx(1.0 / 40));
    CHECK(m.f1 == doctest::Approx(2 * m.precision * m.recall / (m.precision + m.recall)));
    CHECK(2 * 0.87 * 0.80 / 1.67 == doctest::Approx(0.83).epsilon(0.005));
    auto none = selection_metrics({}, truth, 50);
    CHECK(none.precision_na);
    CHECK(none.recall == 0.0);
    auto no_noise = selection_metrics(truth, truth, 10);
    CHECK(no_noise.type_i_na);
    Rng rng(1);
    for (int t = 0; t < 200; ++t) {
      std::vector<std::size_t> s;
      for (std::size_t j = 0; j < 30; ++j)
        if (rng.uniform() < 0.4) s.push_back(j);
      auto r = selection_metrics(s, truth, 30);
      if (r.precision_na) continue;
      CHECK(r.f1 <= 2 * std::min(r.precision, r.recall) + 1e-15);
    }
  }

  TEST_CASE("rank auc") {
    std::vector<double> s{0.1, 0.4, 0.35, 0.8};
    std::vector<int> y{0, 0, 1, 1};
    CHECK(auc(s, y) == doctest::Approx(0.75));
    CHECK(auc(s, y) == doctest::Approx(oracle::pair_auc(s, y)));
    std::vector<double> sep{0, 1, 2, 3};
    CHECK(auc(sep, y) == 1.0);
    std::vector<double> tied(4, 0.3);
    CHECK(auc(tied, y) == 0.5);
    Rng rng(2);
    std::vector<double> r(5000);
    std::vector<int> l(5000);
    for (std::size_t i = 0; i < r.size(); ++i) {
      r[i] = std::round(rng.uniform() * 20);
      l[i] = rng.bernoulli(0.3);
    }
    double a = auc(r, l);
    CHECK(std::abs(a - 0.5) <= 0.02);
    std::vector<double> neg(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) neg[i] = -r[i];
    CHECK(auc(neg, l) == doctest::Approx(1 - a).epsilon(1e-14));
    CHECK(a == doctest::Approx(oracle::pair_auc(r, l)).epsilon(1e-12));
    std::vector<int> one(4, 1);
    CHECK_THROWS_AS(auc(s, one), DataError);
  }

  TEST_CASE("summaries and power") {
    std::vector<double> v{1, 2, 3, 4};
    auto s = summarize(v);
    CHECK(s.count == 4);
    CHECK(s.mean == 2.5);
    CHECK(s.se == doctest::Approx(std::sqrt(oracle::var(v) / 4)));
    std::vector<std::vector<std::size_t>> sels{{0, 1}, {0}, {0, 2}};
    auto p = power_table(sels, 4);
    CHECK(p[0] == 1.0);
    CHECK(p[1] == doctest::Approx(1.0 / 3));
    CHECK(p[3] == 0.0);
  }

  TEST_CASE("calibration") {
    Rng rng(3);
    const std::size_t n = 100000;
    std::vector<double> pr(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      pr[i] = rng.uniform();
      y[i] = rng.bernoulli(pr[i]);
    }
    auto bins = calibration_curve(pr, y);
    CHECK(bins.size() == 10);
    std::size_t total = 0;
    for (const auto& b : bins) {
      total += b.count;
      CHECK(std::abs(b.mean_predicted - b.observed) <= 0.03);
    }
    CHECK(total == n);
    std::vector<double> half(1000, 0.5), yy(1000);
    for (std::size_t i = 0; i < 1000; ++i) yy[i] = i % 2;
    auto one = calibration_curve(half, yy);
    CHECK(one.size() == 1);
    CHECK(one[0].mean_predicted == 0.5);
    CHECK(one[0].observed == doctest::Approx(0.5));
  }

  TEST_CASE("stratified halves") {
    ScenarioSpec s;
    s.n = 301;
    s.n_noise = 2;
    s.seed = 4;
    auto dm = generate_complete(s).data;
    auto h = stratified_halves(dm, 5);
    std::size_t first = 0, pos_first = 0, pos = 0;
    for (std::size_t i = 0; i < dm.rows(); ++i) {
      first += h[i];
      double yv = dm.value(i, dm.outcome_index());
      pos += yv == 1.0;
      pos_first += h[i] && yv == 1.0;
    }
    CHECK(std::abs(double(first) - 150.5) <= 1.5);
    CHECK(std::abs(double(pos_first) - pos / 2.0) <= 1.0);
    CHECK(h == stratified_halves(dm, 5));
  }

  TEST_CASE("cross-validated auc") {
    ScenarioSpec s;
    s.n = 300;
    s.n_noise = 6;
    s.seed = 6;
    auto g = generate_complete(s);
    auto dm = ampute(g.data, preset_patterns(g.data, s.preset), 7);
    CvAucParams p;
    p.repeats = 4;
    p.engine = Engine::gbt;
    p.gbt.rounds = 60;
    p.impute.forest.n_trees = 20;
    Selector truth = [](const DataMatrix&, std::uint64_t) {
      std::vector<std::size_t> t(10);
      for (std::size_t j = 0; j < 10; ++j) t[j] = j;
      return t;
    };
    Selector noise = [](const DataMatrix&, std::uint64_t) { return std::vector<std::size_t>{10, 11, 12}; };
    Selector empty = [](const DataMatrix&, std::uint64_t) { return std::vector<std::size_t>{}; };
    auto a = cv_auc(dm, truth, p, 8), b = cv_auc(dm, noise, p, 8);
    REQUIRE(a.values.size() == 4);
    for (std::size_t r = 0; r < 4; ++r) CHECK(a.values[r] >= b.values[r]);
    CHECK(cv_auc(dm, truth, p, 8).values == a.values);
    auto e = cv_auc(dm, empty, p, 8);
    for (std::size_t r = 0; r < 4; ++r) {
      CHECK(e.values[r] == 0.5);
      CHECK(e.empty_selection[r] == 1);
    }
    auto multi = cv_auc_multi(
        dm, [&](const DataMatrix& h, std::uint64_t sd) { return std::vector<std::vector<std::size_t>>{truth(h, sd), noise(h, sd)}; },
        {Engine::gbt, Engine::gbt}, p, 8);
    CHECK(multi[0].values == a.values);
    CHECK(multi[1].values == b.values);
  }
}
