#include <doctest.h>

#include "kyle/builtin_games.hpp"
#include "kyle/evaluate.hpp"
#include "support/random_games.hpp"

using namespace kyle;

namespace {

Rational R(const char* s) { return parse_rational(s); }

// Example 2.1 display strategy: buy everywhere after v=1, never trade after v=0.
// State 0 has value 1, state 1 has value 0; trade index 0 is x=0, 1 is x=1.
BehaviourStrategy display_pure_strategy(const GameTree& tree) {
  std::vector<int> action(tree.num_xnodes());
  for (int id = 0; id < tree.num_xnodes(); ++id) {
    const Cell& cell = tree.level(tree.xnode(id).period)[tree.xnode(id).cell];
    action[id] = cell[0] == 0 ? 1 : 0;
  }
  return pure_strategy<Rational>(tree, action);
}

// Example 3.1 equilibrium: state 0 (v=1) buys, state 1 (v=1/2) waits,
// state 2 (v=0) sells. Trade indices: 0 -> x=-1, 1 -> x=0, 2 -> x=1.
BehaviourStrategy staircase_strategy(const GameTree& tree) {
  std::vector<int> action = {2, 1, 0};
  return pure_strategy<Rational>(tree, action);
}

}  // namespace

TEST_CASE("tree node counts match the combinatorial products") {
  SUBCASE("two-period binary builtin") {
    GameTree tree(example21_spec(Rational(1, 8)));
    CHECK(tree.num_xnodes() == 14);  // 2 + 2*2*3
    CHECK(tree.num_outcomes() == 72);
  }
  SUBCASE("degenerate single node") {
    GameSpec spec;
    spec.horizon = 1;
    spec.true_values = {1};
    spec.partitions = {{{0}}};
    spec.prior = {1};
    spec.noise_support = {-1, 1};
    spec.noise_dist = {R("1/2"), R("1/2")};
    spec.trade_support = {0};
    GameTree tree(spec);
    CHECK(tree.num_xnodes() == 1);
    CHECK(tree.num_outcomes() == 2);
  }
  SUBCASE("single-period three-value builtin") {
    GameTree tree(example31_spec());
    CHECK(tree.num_xnodes() == 3);
    CHECK(tree.num_outcomes() == 27);
    CHECK(tree.num_vnodes() == 1 + 27);
    CHECK(tree.num_znodes() == 9);
  }
}

TEST_CASE("non-refining partitions are rejected naming the cell pair") {
  GameSpec spec;
  spec.horizon = 2;
  spec.true_values = {1, R("1/2"), 0};
  spec.partitions = {{{0}, {1}, {2}}, {{0, 1}, {2}}};  // round 2 coarser: invalid
  spec.prior = {R("1/3"), R("1/3"), R("1/3")};
  spec.noise_support = {-1, 1};
  spec.noise_dist = {R("1/2"), R("1/2")};
  spec.trade_support = {0, 1};
  CHECK_THROWS_WITH_AS(spec.validate(), doctest::Contains("{1,2}"), SpecError);
}

TEST_CASE("tree size guard refuses oversized specs") {
  GameSpec spec;
  spec.horizon = 8;
  spec.true_values = {1, 0};
  spec.partitions.assign(8, {{0}, {1}});
  spec.prior = {R("1/2"), R("1/2")};
  spec.noise_support = {-1, 0, 1};
  spec.noise_dist = {R("1/4"), R("1/2"), R("1/4")};
  spec.trade_support = {-1, 0, 1};
  CHECK_THROWS_AS((GameTree(spec)), ResourceCapError);
}

TEST_CASE("realisation probabilities") {
  SUBCASE("two-period builtin, display strategy") {
    GameTree tree(example21_spec(Rational(1, 8)));
    auto xi = display_pure_strategy(tree);
    // omega = (v=1, x1=1, z1=1, x2=1, z2=1): z index 2 is z=+1
    Outcome w{0, {1, 1}, {2, 2}};
    CHECK(realisation_prob(tree, xi, w) == R("1/128"));
  }
  SUBCASE("zero factor on the path") {
    GameTree tree(example21_spec(Rational(1, 8)));
    auto xi = display_pure_strategy(tree);
    Outcome w{0, {0, 1}, {2, 2}};  // v=1 but first-period x=0 has prob 0
    CHECK(realisation_prob(tree, xi, w) == 0);
  }
  SUBCASE("single-period builtin, staircase strategy") {
    GameTree tree(example31_spec());
    auto xi = staircase_strategy(tree);
    Outcome w{0, {2}, {0}};  // v=1, x=1, z=-1
    CHECK(realisation_prob(tree, xi, w) == R("1/4"));
  }
  SUBCASE("outcome not in tree") {
    GameTree tree(example31_spec());
    auto xi = staircase_strategy(tree);
    CHECK_THROWS_AS(realisation_prob(tree, xi, Outcome{5, {0}, {0}}), DomainError);
    CHECK_THROWS_AS(realisation_prob(tree, xi, Outcome{0, {0, 1}, {0, 0}}), DomainError);
  }
}

TEST_CASE("realisation probabilities sum to one exactly") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 25; ++rep) {
    GameSpec spec = kyle::testing::random_game(rng);
    GameTree tree(spec);
    auto xi = kyle::testing::random_strategy(rng, tree);
    Rational sum = 0;
    tree.for_each_outcome([&](const Outcome& w) { sum += realisation_prob(tree, xi, w); });
    CHECK(sum == 1);
  }
}

TEST_CASE("subgame realisation probabilities") {
  GameTree tree(example21_spec(Rational(1, 8)));
  auto xi = display_pure_strategy(tree);

  SUBCASE("root subgame equals the plain probability") {
    tree.for_each_outcome([&](const Outcome& w) {
      CHECK(subgame_realisation_prob(tree, xi, NodeKey::root(), w) ==
            realisation_prob(tree, xi, w));
    });
  }
  SUBCASE("conditional product after (v=1, x1=1, z1=-1)") {
    // start V-node: cells=(0), trades=(1), noise=(0)
    NodeKey start;
    start.kind = NodeClass::V;
    start.cells = {0};
    start.trades = {1};
    start.noise = {0};
    Outcome w{0, {1, 1}, {0, 1}};  // continue x2=1, z2=0
    CHECK(subgame_realisation_prob(tree, xi, start, w) == R("3/4"));
    // conditional probabilities over the subgame sum to 1
    Rational sum = 0;
    tree.for_each_outcome([&](const Outcome& o) {
      if (o.state == 0 && o.trades[0] == 1 && o.noise[0] == 0) {
        sum += subgame_realisation_prob(tree, xi, start, o);
      }
    });
    CHECK(sum == 1);
    Outcome bad{1, {1, 1}, {0, 1}};
    CHECK_THROWS_AS(subgame_realisation_prob(tree, xi, start, bad), DomainError);
  }
  SUBCASE("prior factor under no revelation") {
    GameSpec spec;
    spec.horizon = 1;
    spec.true_values = {1, 0};
    spec.partitions = {{{0, 1}}};
    spec.prior = {R("1/2"), R("1/2")};
    spec.noise_support = {-1, 1};
    spec.noise_dist = {R("1/2"), R("1/2")};
    spec.trade_support = {0, 1};
    GameTree t2(spec);
    auto uni = uniform_strategy<Rational>(t2);
    NodeKey xkey = t2.key_of_xnode(0);
    CHECK(subgame_realisation_prob(t2, uni, xkey, Outcome{0, {0}, {0}}) == R("1/8"));
    CHECK(subgame_realisation_prob(t2, uni, xkey, Outcome{1, {0}, {0}}) == R("1/8"));
  }
}

TEST_CASE("payoffs against the exact price table") {
  GameTree tree(example31_spec());
  auto xi = staircase_strategy(tree);
  auto prices = rational_prices(tree, xi);

  CHECK(payoff(tree, Outcome{0, {2}, {0}}, prices) == R("3/16"));   // (1 - 13/16) * 1
  CHECK(payoff(tree, Outcome{1, {1}, {1}}, prices) == 0);           // zero position
  CHECK(payoff(tree, Outcome{2, {0}, {1}}, prices) == R("3/7"));    // (0 - 3/7) * -1
}

TEST_CASE("expected utility") {
  SUBCASE("exact equilibrium value of the single-period builtin") {
    GameTree tree(example31_spec());
    auto xi = staircase_strategy(tree);
    auto prices = rational_prices(tree, xi);
    CHECK(expected_utility(tree, xi, prices) == R("293/2688"));
  }
  SUBCASE("no information asymmetry yields zero") {
    GameSpec spec;
    spec.horizon = 2;
    spec.true_values = {R("3/4")};
    spec.partitions = {{{0}}, {{0}}};
    spec.prior = {1};
    spec.noise_support = {-1, 1};
    spec.noise_dist = {R("1/2"), R("1/2")};
    spec.trade_support = {-1, 0, 1};
    GameTree tree(spec);
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 5; ++rep) {
      auto xi = kyle::testing::random_strategy(rng, tree);
      auto prices = rational_prices(tree, xi);
      CHECK(expected_utility(tree, xi, prices) == 0);
    }
  }
  SUBCASE("utility is affine in the vector at a single node") {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 10; ++rep) {
      GameSpec spec = kyle::testing::random_game(rng);
      GameTree tree(spec);
      auto prices = kyle::testing::random_pricing(rng, tree);
      auto a = kyle::testing::random_strategy(rng, tree);
      auto b = a;
      std::uniform_int_distribution<int> pick(0, tree.num_xnodes() - 1);
      const int node = pick(rng);
      b.table[node] = kyle::testing::random_simplex(rng, tree.spec().num_trades(), 0, 7);
      auto mix = a;
      for (int k = 0; k < tree.spec().num_trades(); ++k) {
        mix.table[node][k] = (a.table[node][k] + b.table[node][k]) / 2;
      }
      const Rational ua = expected_utility(tree, a, prices);
      const Rational ub = expected_utility(tree, b, prices);
      CHECK(expected_utility(tree, mix, prices) == (ua + ub) / 2);
    }
  }
}

TEST_CASE("recursive utility equals brute-force outcome enumeration") {
  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 30; ++rep) {
    GameSpec spec = kyle::testing::random_game(rng);
    GameTree tree(spec);
    auto xi = kyle::testing::random_strategy(rng, tree);
    auto prices = kyle::testing::random_pricing(rng, tree);
    Rational brute = 0;
    tree.for_each_outcome([&](const Outcome& w) {
      const Rational p = realisation_prob(tree, xi, w);
      if (p != 0) brute += p * payoff(tree, w, prices);
    });
    CHECK(expected_utility(tree, xi, prices) == brute);
  }
}

TEST_CASE("subgame utility decomposes over children") {
  // u_{tau'} = sum_{x,z} xi(x) zeta(z) u_{tau'_{x,z}} at any X-node tau'
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 10; ++rep) {
    GameSpec spec = kyle::testing::random_game(rng);
    GameTree tree(spec);
    auto xi = kyle::testing::random_strategy(rng, tree, /*completely_mixed=*/true);
    auto prices = kyle::testing::random_pricing(rng, tree);
    std::uniform_int_distribution<int> pick(0, tree.num_xnodes() - 1);
    const int id = pick(rng);
    const NodeKey xkey = tree.key_of_xnode(id);
    const Rational u = subgame_expected_utility(tree, xi, prices, xkey);
    Rational sum = 0;
    for (int k = 0; k < tree.spec().num_trades(); ++k) {
      for (int l = 0; l < tree.spec().num_noise(); ++l) {
        sum += xi.table[id][k] * tree.spec().noise_dist[l] *
               subgame_expected_utility(tree, xi, prices, tree.key_of_vnode(id, k, l));
      }
    }
    CHECK(u == sum);
  }
}

TEST_CASE("subgame utility matches brute force over the subtree") {
  std::mt19937_64 rng(41);
  for (int rep = 0; rep < 10; ++rep) {
    GameSpec spec = kyle::testing::random_game(rng);
    GameTree tree(spec);
    auto xi = kyle::testing::random_strategy(rng, tree, true);
    auto prices = kyle::testing::random_pricing(rng, tree);
    std::uniform_int_distribution<int> pick(0, tree.num_xnodes() - 1);
    const int id = pick(rng);
    const NodeKey xkey = tree.key_of_xnode(id);
    Rational brute = 0;
    tree.for_each_outcome([&](const Outcome& w) {
      Rational p;
      try {
        p = subgame_realisation_prob(tree, xi, xkey, w);
      } catch (const DomainError&) {
        return;  // outcome not after the node
      }
      if (p != 0) brute += p * payoff(tree, w, prices);
    });
    CHECK(subgame_expected_utility(tree, xi, prices, xkey) == brute);
  }
}
