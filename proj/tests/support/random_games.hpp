#pragma once

#include <algorithm>
#include <random>

#include "kyle/evaluate.hpp"

namespace kyle::testing {

struct RandomGameOptions {
  int max_horizon = 2;
  int max_states = 3;
  int max_trades = 3;
  int max_noise = 3;
  // restrict to single-period games with full information, E_Z in [-1,1]
  // containing +-1, 0 in E_X, and zeta(+-1) >= 1/10
  bool structure_template = false;
  std::uint64_t outcome_cap = 200000;
};

inline std::vector<Rational> random_simplex(std::mt19937_64& rng, int n, int min_weight,
                                            int max_weight) {
  std::uniform_int_distribution<int> w(min_weight, max_weight);
  std::vector<Rational> out(n);
  Rational sum = 0;
  bool positive = false;
  for (auto& p : out) {
    int weight = w(rng);
    p = weight;
    sum += weight;
    positive = positive || weight > 0;
  }
  if (!positive) {
    out[std::uniform_int_distribution<int>(0, n - 1)(rng)] = 1;
    sum += 1;
  }
  for (auto& p : out) p /= sum;
  return out;
}

inline Partition random_partition(std::mt19937_64& rng, int n) {
  // random assignment of states to groups, renumbered in order of appearance
  std::uniform_int_distribution<int> g(0, n - 1);
  std::vector<int> group(n);
  for (auto& x : group) x = g(rng);
  Partition part;
  std::vector<int> seen;
  for (int s = 0; s < n; ++s) {
    auto it = std::find(seen.begin(), seen.end(), group[s]);
    if (it == seen.end()) {
      seen.push_back(group[s]);
      part.push_back({s});
    } else {
      part[it - seen.begin()].push_back(s);
    }
  }
  return part;
}

inline Partition refine(std::mt19937_64& rng, const Partition& coarse) {
  Partition fine;
  std::bernoulli_distribution split(0.5);
  for (const Cell& cell : coarse) {
    if (cell.size() >= 2 && split(rng)) {
      std::uniform_int_distribution<std::size_t> cut(1, cell.size() - 1);
      std::size_t k = cut(rng);
      fine.push_back(Cell(cell.begin(), cell.begin() + k));
      fine.push_back(Cell(cell.begin() + k, cell.end()));
    } else {
      fine.push_back(cell);
    }
  }
  return fine;
}

inline GameSpec random_game(std::mt19937_64& rng, const RandomGameOptions& opt = {}) {
  GameSpec spec;
  std::uniform_int_distribution<int> nd(1, opt.max_states);
  const int n = nd(rng);
  spec.horizon = opt.structure_template ? 1 : std::uniform_int_distribution<int>(1, opt.max_horizon)(rng);

  std::uniform_int_distribution<int> num(0, 8);
  for (int i = 0; i < n; ++i) spec.true_values.push_back(Rational(num(rng), 8));
  std::sort(spec.true_values.rbegin(), spec.true_values.rend());

  spec.prior = random_simplex(rng, n, 1, 8);

  if (opt.structure_template) {
    spec.partitions = {Partition{}};
    for (int s = 0; s < n; ++s) spec.partitions[0].push_back({s});
    const std::vector<std::vector<Rational>> noise_templates = {
        {-1, 0, 1}, {-1, 1}, {-1, Rational(1, 2), 1}};
    const std::vector<std::vector<Rational>> trade_templates = {
        {0, 1}, {-1, 0, 1}, {-2, 0, 2}, {0, 2}, {-1, 0}};
    spec.noise_support = noise_templates[std::uniform_int_distribution<std::size_t>(
        0, noise_templates.size() - 1)(rng)];
    spec.trade_support = trade_templates[std::uniform_int_distribution<std::size_t>(
        0, trade_templates.size() - 1)(rng)];
    const int l = static_cast<int>(spec.noise_support.size());
    do {
      spec.noise_dist = random_simplex(rng, l, 1, 6);
    } while (spec.noise_dist.front() < Rational(1, 10) || spec.noise_dist.back() < Rational(1, 10));
  } else {
    spec.partitions.push_back(random_partition(rng, n));
    for (int t = 1; t < spec.horizon; ++t) {
      spec.partitions.push_back(refine(rng, spec.partitions.back()));
    }
    const int k = std::uniform_int_distribution<int>(2, opt.max_trades)(rng);
    const int l = std::uniform_int_distribution<int>(2, opt.max_noise)(rng);
    // supports on a quarter-integer grid, duplicate-free
    auto draw_support = [&](int count) {
      std::vector<Rational> grid;
      for (int g = -6; g <= 6; ++g) grid.push_back(Rational(g, 4));
      std::shuffle(grid.begin(), grid.end(), rng);
      std::vector<Rational> out(grid.begin(), grid.begin() + count);
      std::sort(out.begin(), out.end());
      return out;
    };
    spec.trade_support = draw_support(k);
    spec.noise_support = draw_support(l);
    spec.noise_dist = random_simplex(rng, l, 1, 8);
  }
  spec.validate();
  spec.outcome_count(opt.outcome_cap);
  return spec;
}

inline BehaviourStrategy random_strategy(std::mt19937_64& rng, const GameTree& tree,
                                         bool completely_mixed = false) {
  BehaviourStrategy xi;
  xi.table.reserve(tree.num_xnodes());
  for (int id = 0; id < tree.num_xnodes(); ++id) {
    xi.table.push_back(
        random_simplex(rng, tree.spec().num_trades(), completely_mixed ? 1 : 0, 7));
  }
  return xi;
}

inline PricingSystem random_pricing(std::mt19937_64& rng, const GameTree& tree) {
  const Rational lo = tree.spec().true_values.back();
  const Rational hi = tree.spec().true_values.front();
  PricingSystem ps = empty_pricing<Rational>(tree, /*complete=*/true);
  std::uniform_int_distribution<int> num(0, 16);
  for (int t = 1; t <= tree.spec().horizon; ++t) {
    for (std::uint64_t code = 0; code < tree.flow_card(t); ++code) {
      ps.set(t, code, lo + (hi - lo) * Rational(num(rng), 16));
    }
  }
  return ps;
}

}  // namespace kyle::testing
