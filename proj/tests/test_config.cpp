#include "doctest.h"
#include "rrbart/config.h"
#include "rrbart/error.h"

using namespace rrbart;

TEST_SUITE("config") {
  TEST_CASE("sections and dotted keys nest") {
    auto c = Config::parse("seed = 7\n[bart]\nn_trees = 20  # default\ntree.base = 0.95\n[sim]\nmethods = rr-bart, bi-bart\n");
    CHECK(c.get_u64("seed", 0) == 7);
    CHECK(c.get_int("bart.n_trees", 0) == 20);
    CHECK(c.get_double("bart.tree.base", 0) == 0.95);
    CHECK(c.get_strings("sim.methods", {}) == std::vector<std::string>{"rr-bart", "bi-bart"});
    CHECK(c.subtree("bart").get_int("n_trees", 0) == 20);
    CHECK(c.get_int("absent", 5) == 5);
  }

  TEST_CASE("dump round trips") {
    auto c = Config::parse("[a]\nx = 1\ny = two words\n[b]\nz = 0.5, 1\n");
    CHECK(Config::parse(c.dump()) == c);
  }

  TEST_CASE("errors") {
    CHECK_THROWS_AS(Config::parse("[open\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("novalue\n"), ConfigError);
    auto c = Config::parse("x = abc\nb = maybe\n");
    CHECK_THROWS_AS(c.get_double("x", 0), ConfigError);
    CHECK_THROWS_AS(c.get_bool("b", false), ConfigError);
    CHECK_THROWS_AS(c.require_string("nope"), ConfigError);
  }
}
