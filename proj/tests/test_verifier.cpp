#include <doctest.h>

#include "kyle/builtin_games.hpp"
#include "kyle/verifier.hpp"
#include "support/random_games.hpp"

using namespace kyle;

namespace {

Rational R(const char* s) { return parse_rational(s); }

BehaviourStrategy staircase_strategy(const GameTree& tree) {
  return pure_strategy<Rational>(tree, {2, 1, 0});
}

BehaviourStrategy display_pure_strategy(const GameTree& tree) {
  std::vector<int> action(tree.num_xnodes());
  for (int id = 0; id < tree.num_xnodes(); ++id) {
    const Cell& cell = tree.level(tree.xnode(id).period)[tree.xnode(id).cell];
    action[id] = cell[0] == 0 ? 1 : 0;
  }
  return pure_strategy<Rational>(tree, action);
}

}  // namespace

TEST_CASE("verify_kyle certifies the bearish builtin equilibrium exactly") {
  GameTree tree(example31_spec());
  auto xi = staircase_strategy(tree);
  auto prices = rational_prices(tree, xi);
  auto report = verify_kyle(tree, xi, prices, 0.0);
  CHECK(report.max_deviation_gain == 0);
  CHECK(report.root_deviation_gain == 0);
  CHECK(report.pricing_residual == 0);
  CHECK(report.pass());
}

TEST_CASE("verify_kyle rejects the pure strategy of the two-period builtin") {
  GameTree tree(example21_spec(Rational(1, 8)));
  auto xi = display_pure_strategy(tree);
  auto prices = rational_prices(tree, xi);
  auto report = verify_kyle(tree, xi, prices, 0.0);
  CHECK(report.root_deviation_gain > 0);
  CHECK(report.max_deviation_gain >= report.root_deviation_gain);
  CHECK(report.pricing_residual == 0);
  CHECK_FALSE(report.pass());
}

TEST_CASE("verify_kyle passes trivially without information asymmetry") {
  GameSpec spec;
  spec.horizon = 1;
  spec.true_values = {R("2/3")};
  spec.partitions = {{{0}}};
  spec.prior = {1};
  spec.noise_support = {-1, 0, 1};
  spec.noise_dist = {R("1/4"), R("1/2"), R("1/4")};
  spec.trade_support = {-1, 0, 1};
  GameTree tree(spec);
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 5; ++rep) {
    auto xi = kyle::testing::random_strategy(rng, tree);
    auto prices = rational_prices(tree, xi);
    auto report = verify_kyle(tree, xi, prices, 0.0);
    CHECK(report.max_deviation_gain == 0);
    CHECK(report.pass());
  }
}

TEST_CASE("verify_kyle names missing reached flows") {
  GameTree tree(example31_spec());
  auto xi = staircase_strategy(tree);
  auto prices = rational_prices(tree, xi);
  prices.mask[0][static_cast<std::uint64_t>(tree.flow_index(Rational(0)))] = 0;
  CHECK_THROWS_WITH_AS(verify_kyle(tree, xi, prices, 0.0), doctest::Contains("(0)"),
                       IncompletePricingError);
}

TEST_CASE("backward induction equals brute force over pure strategies") {
  std::mt19937_64 rng(17);
  int done = 0;
  while (done < 25) {
    GameSpec spec = kyle::testing::random_game(rng);
    GameTree tree(spec);
    const int k = spec.num_trades();
    double count = std::pow(static_cast<double>(k), tree.num_xnodes());
    if (count > 2048) continue;
    ++done;
    auto prices = kyle::testing::random_pricing(rng, tree);

    // optimal root value by backward induction
    const auto best = optimal_values<Rational>(tree, CompletePriceView<Rational>{tree, prices});
    Rational root = 0;
    for (int id = tree.xnode_begin(1); id < tree.xnode_end(1); ++id) {
      root += tree.cell_mass(1, tree.xnode(id).cell) * best[id];
    }

    Rational brute = 0;
    bool first = true;
    std::vector<int> action(tree.num_xnodes(), 0);
    while (true) {
      auto xi = pure_strategy<Rational>(tree, action);
      const Rational u = expected_utility(tree, xi, prices);
      if (first || u > brute) brute = u;
      first = false;
      int pos = tree.num_xnodes() - 1;
      while (pos >= 0 && ++action[pos] >= k) action[pos--] = 0;
      if (pos < 0) break;
    }
    CHECK(root == brute);
  }
}

TEST_CASE("grid compatibility check") {
  auto make = [](std::vector<Rational> ex, std::vector<Rational> ez) {
    GameSpec spec;
    spec.horizon = 1;
    spec.true_values = {1, 0};
    spec.partitions = {{{0}, {1}}};
    spec.prior = {R("1/2"), R("1/2")};
    spec.noise_support = std::move(ez);
    spec.noise_dist.assign(spec.noise_support.size(),
                           Rational(1, static_cast<int>(spec.noise_support.size())));
    spec.trade_support = std::move(ex);
    return spec;
  };
  SUBCASE("pass on the full grid") {
    CHECK(check_assumption_grid(make({0, 1}, {-1, 0, 1})).pass);
  }
  SUBCASE("fails with the witness (0,1,1)") {
    auto r = check_assumption_grid(make({0, 1}, {-1, 1}));
    REQUIRE_FALSE(r.pass);
    CHECK((*r.witness)[0] == 0);
    CHECK((*r.witness)[1] == 1);
    CHECK((*r.witness)[2] == 1);
  }
  SUBCASE("single trade reduces to the noise support itself") {
    CHECK(check_assumption_grid(make({0}, {-1, R("-1/2"), 0, R("1/2"), 1})).pass);
  }
}

TEST_CASE("structure checks on the bearish builtin equilibrium") {
  GameTree tree(example31_spec());
  auto xi = staircase_strategy(tree);
  auto prices = rational_prices(tree, xi);
  CHECK(check_assumption_grid(tree.spec()).pass);
  auto report = check_structure_lemma(tree, xi, prices);
  REQUIRE(report.checks.size() == 4);
  for (const auto& c : report.checks) {
    CAPTURE(c.name);
    CAPTURE(c.witness);
    CHECK(c.pass);
  }
  // the local price decrease S(0)=13/16 > S(1)=3/4 is within the allowed gap
  CHECK(price_at(tree, prices, 1, static_cast<std::uint64_t>(tree.flow_index(Rational(0)))) >
        price_at(tree, prices, 1, static_cast<std::uint64_t>(tree.flow_index(Rational(1)))));
}

TEST_CASE("structure check (i) fails on an inverted strategy") {
  GameTree tree(example31_spec());
  auto xi = pure_strategy<Rational>(tree, {0, 1, 2});  // high value sells, low value buys
  auto prices = rational_prices(tree, xi);
  auto report = check_structure_lemma(tree, xi, prices, Rational(1, 100000000), 0, false);
  CHECK(report.annotated_non_equilibrium);
  CHECK_FALSE(report.checks[0].pass);
  CHECK_FALSE(report.checks[0].witness.empty());
}

TEST_CASE("extreme-order equilibrium of the even-grid builtin") {
  const int n = 3;
  GameTree tree(theorem3_spec(n));
  // high state buys 2n, low state sells 2n
  std::vector<int> action(2);
  action[0] = tree.spec().num_trades() - 1;
  action[1] = 0;
  auto xi = pure_strategy<Rational>(tree, action);
  // sign prices, completed on every flow
  PricingSystem prices = empty_pricing<Rational>(tree, true);
  for (std::uint64_t code = 0; code < tree.flow_card(1); ++code) {
    const Rational& y = tree.flow_values()[code];
    prices.set(1, code, y > 0 ? Rational(1) : (y < 0 ? Rational(-1) : Rational(0)));
  }
  auto report = verify_kyle(tree, xi, prices, 0.0);
  CHECK(report.max_deviation_gain == 0);
  CHECK(report.pricing_residual == 0);

  CHECK(check_assumption_grid(tree.spec()).pass);
  auto structure = check_structure_lemma(tree, xi, prices);
  for (const auto& c : structure.checks) {
    CAPTURE(c.name);
    CAPTURE(c.witness);
    CHECK(c.pass);
  }
  // bound branch fails (orders of size 2n = 6 > limit never binds here since
  // zeta(1) = 1/2 gives 18 > 6); the price-pinning branch applies for large n
  auto bound = check_order_bound(tree, xi, prices);
  REQUIRE(bound.checks.size() == 2);
  CHECK(bound.checks[0].pass);
  CHECK(bound.checks[1].pass);
}

TEST_CASE("order bound dichotomy with sparse boundary noise") {
  // zeta(1) = 1/8 gives the bound 6 + 48 = 54
  GameSpec spec;
  spec.horizon = 1;
  spec.true_values = {1, 0};
  spec.partitions = {{{0}, {1}}};
  spec.prior = {R("1/2"), R("1/2")};
  spec.noise_support = {-1, 0, 1};
  spec.noise_dist = {R("1/8"), R("6/8"), R("1/8")};
  spec.trade_support = {-60, 0, 60};
  GameTree tree(spec);
  auto xi = pure_strategy<Rational>(tree, {2, 0});
  // artificial prices NOT pinned at the extremes: both branches fail
  PricingSystem prices = empty_pricing<Rational>(tree, true);
  for (std::uint64_t code = 0; code < tree.flow_card(1); ++code) {
    prices.set(1, code, R("1/2"));
  }
  auto report = check_order_bound(tree, xi, prices);
  REQUIRE(report.checks.size() == 2);
  CHECK_FALSE(report.checks[0].pass);
  CHECK(report.checks[0].witness.find("54") != std::string::npos);

  SUBCASE("not applicable without the boundary noise") {
    GameSpec other = spec;
    other.noise_support = {R("-1/2"), 0, R("1/2")};
    GameTree t2(other);
    auto r2 = check_order_bound(t2, xi, prices);
    REQUIRE(r2.checks.size() == 1);
    CHECK_FALSE(r2.checks[0].applicable);
  }
}
