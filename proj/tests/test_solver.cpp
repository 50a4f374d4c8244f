#include <doctest.h>

#include "kyle/builtin_games.hpp"
#include "kyle/solver.hpp"
#include "support/random_games.hpp"

using namespace kyle;

namespace {

Rational R(const char* s) { return parse_rational(s); }

BehaviourStrategy staircase_strategy(const GameTree& tree) {
  return pure_strategy<Rational>(tree, {2, 1, 0});
}

// Total belief system matching the Bayes conditionals of a strategy that
// reaches every flow.
BeliefSystem beliefs_of(const GameTree& tree, const BehaviourStrategy& xi) {
  const auto fd = flow_distribution(tree, xi);
  const int n = tree.spec().num_states();
  BeliefSystem mu;
  mu.dist.resize(tree.spec().horizon);
  for (int t = 1; t <= tree.spec().horizon; ++t) {
    mu.dist[t - 1].assign(tree.flow_card(t) * n, 0);
    for (std::uint64_t code = 0; code < tree.flow_card(t); ++code) {
      REQUIRE(fd.marginal[t - 1][code] > 0);
      for (int i = 0; i < n; ++i) {
        mu.dist[t - 1][code * n + i] = fd.joint[t - 1][code * n + i] / fd.marginal[t - 1][code];
      }
    }
  }
  return mu;
}

constexpr double kAlphaStar = 0.7746420901;
constexpr double kCrossingProfit = 0.3350563687;

}  // namespace

TEST_CASE("default epsilon schedule") {
  for (int k : {2, 3, 8}) {
    auto sched = SolverConfig::default_schedule(k);
    REQUIRE(!sched.empty());
    CHECK(sched.front() == doctest::Approx(std::min(0.25, 1.0 / (2 * k))));
    for (std::size_t i = 0; i + 1 < sched.size(); ++i) CHECK(sched[i + 1] < sched[i]);
    for (double e : sched) CHECK(e * k < 1);
    CHECK(sched.back() <= 3e-7);
  }
  CHECK_THROWS_AS((EpsilonConstraint{Rational(1, 2), 3}), PreconditionError);
}

TEST_CASE("purified best replies") {
  GameTree tree(example31_spec());
  auto xi = staircase_strategy(tree);
  auto mu = beliefs_of(tree, xi);

  SUBCASE("unique optimum takes all the surplus") {
    // high-value node: buying is the unique optimum against the equilibrium prices
    auto br = best_reply_eps(tree, xi, mu, 0, Rational(1, 100));
    CHECK(br == std::vector<Rational>{R("1/100"), R("1/100"), R("98/100")});
  }
  SUBCASE("middle value prefers to wait") {
    auto br = best_reply_eps(tree, xi, mu, 1, Rational(1, 100));
    CHECK(br == std::vector<Rational>{R("1/100"), R("98/100"), R("1/100")});
  }
  SUBCASE("indifference spreads uniformly over the argmax set") {
    GameSpec spec;
    spec.horizon = 1;
    spec.true_values = {R("1/2")};
    spec.partitions = {{{0}}};
    spec.prior = {1};
    spec.noise_support = {-1, 1};
    spec.noise_dist = {R("1/2"), R("1/2")};
    spec.trade_support = {-1, 0, 1};
    GameTree t2(spec);
    auto uni = uniform_strategy<Rational>(t2);
    auto mu2 = beliefs_of(t2, uni);
    auto br = best_reply_eps(t2, uni, mu2, 0, Rational(1, 100));
    CHECK(br == std::vector<Rational>{R("1/3"), R("1/3"), R("1/3")});
  }
  SUBCASE("rejects out-of-range perturbations") {
    CHECK_THROWS_AS(best_reply_eps(tree, xi, mu, 0, Rational(1, 2)), PreconditionError);
  }
}

TEST_CASE("fixed points of the perturbed game") {
  SolverConfig config;

  SUBCASE("degenerate game converges immediately") {
    GameSpec spec;
    spec.horizon = 1;
    spec.true_values = {R("1/2")};
    spec.partitions = {{{0}}};
    spec.prior = {1};
    spec.noise_support = {-1, 1};
    spec.noise_dist = {R("1/2"), R("1/2")};
    spec.trade_support = {-1, 0, 1};
    GameTree tree(spec);
    auto fp = fixed_point_eps(tree, 0.01, nullptr, config);
    CHECK(fp.converged);
    CHECK(fp.sweeps <= 2);
    CHECK(fp.residual <= 1e-14);
  }

  SUBCASE("bearish builtin purifies onto the unique equilibrium") {
    GameTree tree(example31_spec());
    auto fp = fixed_point_eps(tree, 1e-6, nullptr, config);
    CHECK(fp.converged);
    CHECK(fp.residual <= 1e-8);
    auto target = to_float(staircase_strategy(tree));
    CHECK(strategy_distance(fp.strategy, target) <= 3e-6);  // eps * |E_X|
  }

  SUBCASE("two-period builtin mixes near the indifference root") {
    GameTree tree(example21_spec(Rational(1, 8)));
    auto fp = fixed_point_eps(tree, 1e-6, nullptr, config);
    CHECK(fp.converged);
    const double alpha = fp.strategy.table[tree.root_xnode(0)][1];
    CHECK(alpha == doctest::Approx(0.77464).epsilon(0).scale(0).epsilon(1.3e-3));
  }
}

TEST_CASE("homotopy certificate on the bearish builtin is exact") {
  GameTree tree(example31_spec());
  SolverConfig config;
  auto cert = sequential_equilibrium(tree, config);
  CHECK(cert.flags.empty());
  CHECK(cert.origin == "homotopy");
  CHECK(cert.strategy.table == staircase_strategy(tree).table);
  auto at = [&](int y) {
    return price_at(tree, cert.prices, 1, static_cast<std::uint64_t>(tree.flow_index(Rational(y))));
  };
  CHECK(at(-2) == 0);
  CHECK(at(-1) == R("3/7"));
  CHECK(at(0) == R("13/16"));
  CHECK(at(1) == R("3/4"));
  CHECK(at(2) == 1);
  auto report = verify_kyle(tree, cert.strategy, cert.prices, 0.0);
  CHECK(report.pass());
  // trace converged at every level with nonincreasing extrapolated gains
  for (const auto& entry : cert.trace) CHECK(entry.converged);
}

TEST_CASE("homotopy mixes the two-period builtin at the indifference root") {
  GameTree tree(example21_spec(Rational(1, 8)));
  SolverConfig config;
  auto cert = sequential_equilibrium(tree, config);
  CHECK_FALSE(cert.flagged("unconverged"));
  const double alpha = to_double(cert.strategy.table[tree.root_xnode(0)][1]);
  CHECK(std::abs(alpha - kAlphaStar) <= 1e-4);
  // verification at the floating tolerance of the acceptance gate
  auto report = verify_kyle(tree, cert.strategy, cert.prices, 1e-6);
  CHECK(report.pass());
}

TEST_CASE("support enumeration finds the unique bearish equilibrium") {
  GameTree tree(example31_spec());
  SolverConfig config;
  auto certs = support_enumeration_single_period(tree, config);
  REQUIRE(certs.size() == 1);
  CHECK(certs[0].strategy.table == staircase_strategy(tree).table);
  auto report = verify_kyle(tree, certs[0].strategy, certs[0].prices, 0.0);
  CHECK(report.max_deviation_gain == 0);
  CHECK(report.pricing_residual == 0);
  CHECK(report.pass());
}

TEST_CASE("support enumeration solves the two-period builtin by bisection") {
  GameTree tree(example21_spec(Rational(1, 8)));
  SolverConfig config;
  auto certs = support_enumeration_single_period(tree, config);
  REQUIRE(certs.size() == 1);
  const double alpha = to_double(certs[0].strategy.table[tree.root_xnode(0)][1]);
  CHECK(std::abs(alpha - kAlphaStar) <= 1e-8);
  auto report = verify_kyle(tree, certs[0].strategy, certs[0].prices, 1e-9);
  CHECK(report.pass());
}

TEST_CASE("support enumeration and homotopy agree") {
  SolverConfig config;
  SUBCASE("bearish builtin") {
    GameTree tree(example31_spec());
    auto homotopy = sequential_equilibrium(tree, config);
    auto certs = support_enumeration_single_period(tree, config);
    REQUIRE(certs.size() == 1);
    CHECK(strategy_distance(to_float(homotopy.strategy), to_float(certs[0].strategy)) <= 1e-4);
  }
  SUBCASE("two-period builtin") {
    GameTree tree(example21_spec(Rational(1, 8)));
    auto homotopy = sequential_equilibrium(tree, config);
    auto certs = support_enumeration_single_period(tree, config);
    REQUIRE(certs.size() == 1);
    CHECK(strategy_distance(to_float(homotopy.strategy), to_float(certs[0].strategy)) <= 1e-4);
  }
}

TEST_CASE("symmetric binary game has the mirror equilibrium") {
  GameSpec spec;
  spec.horizon = 1;
  spec.true_values = {1, 0};
  spec.partitions = {{{0}, {1}}};
  spec.prior = {R("1/2"), R("1/2")};
  spec.noise_support = {-1, 0, 1};
  spec.noise_dist = {R("1/3"), R("1/3"), R("1/3")};
  spec.trade_support = {-1, 0, 1};
  GameTree tree(spec);
  SolverConfig config;
  auto certs = support_enumeration_single_period(tree, config);
  REQUIRE(!certs.empty());
  bool found_mirror = false;
  for (const auto& cert : certs) {
    auto hi = cert.strategy.table[tree.root_xnode(0)];
    auto lo = cert.strategy.table[tree.root_xnode(1)];
    std::reverse(lo.begin(), lo.end());
    if (hi == lo) found_mirror = true;
    auto report = verify_kyle(tree, cert.strategy, cert.prices, 1e-9);
    CHECK(report.pass());
  }
  CHECK(found_mirror);
  // the pure mirror: buy at the high value, sell at the low value
  bool found_pure = false;
  for (const auto& cert : certs) {
    if (cert.strategy.table == pure_strategy<Rational>(tree, {2, 0}).table) found_pure = true;
  }
  CHECK(found_pure);
}

TEST_CASE("profit curve of the two-period builtin") {
  GameTree tree(example21_spec(Rational(1, 8)));
  auto curve = profit_curve(tree, 1e-3);
  REQUIRE(curve.crossing_found);
  CHECK(std::abs(curve.crossing_alpha - kAlphaStar) <= 1e-6);
  CHECK(std::abs(curve.crossing_profit - kCrossingProfit) <= 1e-6);
  // waiting dominates at alpha = 1, buying dominates at alpha = 0
  const auto& first = curve.rows.front();
  const auto& last = curve.rows.back();
  CHECK(first.alpha == 0.0);
  CHECK(last.alpha == 1.0);
  CHECK(first.profit_buy > first.profit_wait);
  CHECK(last.profit_wait > last.profit_buy);
  for (const auto& row : curve.rows) {
    CHECK(row.profit_buy >= -2.0);
    CHECK(row.profit_buy <= 2.0);
    CHECK(row.profit_wait >= -2.0);
    CHECK(row.profit_wait <= 2.0);
  }
}

TEST_CASE("random games solve and verify or get flagged") {
  std::mt19937_64 rng(101);
  SolverConfig config;
  int solved = 0;
  for (int rep = 0; rep < 20; ++rep) {
    GameSpec spec = kyle::testing::random_game(rng);
    GameTree tree(spec);
    auto cert = sequential_equilibrium(tree, config);
    auto report = verify_kyle(tree, cert.strategy, cert.prices, 1e-6);
    if (report.pass()) {
      ++solved;
    } else {
      CHECK(cert.flagged("unconverged"));
    }
    // certificates price reached flows by exact Bayes: zero residual always
    CHECK(report.pricing_residual == 0);
  }
  CHECK(solved >= 18);
}

TEST_CASE("pure equilibria dominate the homotopy residual when they exist") {
  // for games with a verified pure equilibrium, the homotopy limit's gain is
  // no larger than the best pure strategy's gain
  std::mt19937_64 rng(55);
  SolverConfig config;
  int done = 0;
  while (done < 8) {
    GameSpec spec = kyle::testing::random_game(rng);
    GameTree tree(spec);
    const int k = spec.num_trades();
    if (std::pow(static_cast<double>(k), tree.num_xnodes()) > 512) continue;
    ++done;
    Rational best_pure_gain;
    bool first = true;
    std::vector<int> action(tree.num_xnodes(), 0);
    while (true) {
      auto xi = pure_strategy<Rational>(tree, action);
      auto report = verify_kyle(tree, xi, rational_prices(tree, xi), 0.0);
      if (first || report.max_deviation_gain < best_pure_gain) {
        best_pure_gain = report.max_deviation_gain;
      }
      first = false;
      int pos = tree.num_xnodes() - 1;
      while (pos >= 0 && ++action[pos] >= k) action[pos--] = 0;
      if (pos < 0) break;
    }
    auto cert = sequential_equilibrium(tree, config);
    auto report = verify_kyle(tree, cert.strategy, cert.prices, 1e-6);
    CHECK(to_double(report.max_deviation_gain) <= to_double(best_pure_gain) + 1e-6);
  }
}
