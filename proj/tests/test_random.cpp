#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "oracles.h"
#include "rrbart/random.h"

using namespace rrbart;

TEST_SUITE("random") {
  TEST_CASE("derived seeds are stable and distinct") {
    CHECK(derive_seed(1, 2) == derive_seed(1, 2));
    std::set<std::uint64_t> seen;
    for (std::uint64_t a = 0; a < 50; ++a)
      for (std::uint64_t b = 0; b < 50; ++b) seen.insert(derive_seed(9, a, b));
    CHECK(seen.size() == 2500);
    CHECK(derive_seed(1, 2) != derive_seed(2, 1));
  }

  TEST_CASE("same seed, same stream") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.normal() == b.normal());
  }

  TEST_CASE("sampling without replacement") {
    Rng rng(3);
    for (int rep = 0; rep < 50; ++rep) {
      auto s = rng.sample_without_replacement(30, 12);
      CHECK(s.size() == 12);
      CHECK(std::set<std::size_t>(s.begin(), s.end()).size() == 12);
      for (auto v : s) CHECK(v < 30);
    }
  }

  TEST_CASE("truncated normal latent draws have the right sign and mean") {
    // E[Z | Z > 0] for Z ~ N(mu, 1) is mu + phi(mu) / Phi(mu)
    Rng rng(11);
    for (double mu : {-2.5, -0.7, 0.0, 0.4, 1.8}) {
      for (bool positive : {true, false}) {
        const int n = 10000;
        double s = 0, s2 = 0;
        bool sign_ok = true;
        for (int i = 0; i < n; ++i) {
          double z = truncated_normal_unit(rng, mu, positive);
          sign_ok = sign_ok && (positive ? z > 0 : z <= 0);
          s += z;
          s2 += z * z;
        }
        double m = s / n, sd = std::sqrt(s2 / n - m * m);
        double phi = std::exp(-0.5 * mu * mu) / std::sqrt(2 * M_PI);
        double expect = positive ? mu + phi / oracle::normal_cdf(mu) : mu - phi / (1 - oracle::normal_cdf(mu));
        CHECK(sign_ok);
        CHECK(std::abs(m - expect) < 5 * sd / std::sqrt(double(n)));
      }
    }
  }
}
