#pragma once

#include <cmath>
#include <vector>

#include "kyle/tree.hpp"

namespace kyle {

/// Behaviour strategy: one probability vector over E_X per X-node.
template <class S>
struct Behaviour {
  std::vector<std::vector<S>> table;  // [xnode id][trade index]

  const std::vector<S>& at(int xnode) const { return table[xnode]; }
  std::vector<S>& at(int xnode) { return table[xnode]; }
};

using BehaviourStrategy = Behaviour<Rational>;
using BehaviourStrategyF = Behaviour<double>;

template <class S>
Behaviour<S> uniform_strategy(const GameTree& tree) {
  Behaviour<S> xi;
  const int k = tree.spec().num_trades();
  xi.table.assign(tree.num_xnodes(), std::vector<S>(k, S(1) / S(k)));
  return xi;
}

/// Dirac strategy from a per-node action choice.
template <class S>
Behaviour<S> pure_strategy(const GameTree& tree, const std::vector<int>& action) {
  Behaviour<S> xi;
  xi.table.assign(tree.num_xnodes(), std::vector<S>(tree.spec().num_trades(), S(0)));
  for (int n = 0; n < tree.num_xnodes(); ++n) xi.table[n][action[n]] = S(1);
  return xi;
}

/// Exact validation: every vector sums to exactly 1 with entries in [0,1].
inline void validate_strategy(const GameTree& tree, const BehaviourStrategy& xi) {
  if (static_cast<int>(xi.table.size()) != tree.num_xnodes()) {
    throw DomainError("strategy does not cover the set of insider nodes");
  }
  for (const auto& row : xi.table) {
    if (static_cast<int>(row.size()) != tree.spec().num_trades()) {
      throw DomainError("strategy row has wrong arity");
    }
    Rational sum = 0;
    for (const auto& p : row) {
      if (p < 0 || p > 1) throw DomainError("strategy probability outside [0,1]");
      sum += p;
    }
    if (sum != 1) throw DomainError("strategy row does not sum to 1");
  }
}

inline void validate_strategy(const GameTree& tree, const BehaviourStrategyF& xi,
                              double tol = 1e-9) {
  if (static_cast<int>(xi.table.size()) != tree.num_xnodes()) {
    throw DomainError("strategy does not cover the set of insider nodes");
  }
  for (const auto& row : xi.table) {
    double sum = 0;
    for (double p : row) {
      if (p < -tol || p > 1 + tol) throw DomainError("strategy probability outside [0,1]");
      sum += p;
    }
    if (std::abs(sum - 1.0) > tol) throw DomainError("strategy row does not sum to 1");
  }
}

inline BehaviourStrategyF to_float(const BehaviourStrategy& xi) {
  BehaviourStrategyF out;
  out.table.reserve(xi.table.size());
  for (const auto& row : xi.table) {
    std::vector<double> r;
    r.reserve(row.size());
    for (const auto& p : row) r.push_back(to_double(p));
    out.table.push_back(std::move(r));
  }
  return out;
}

/// Exact dyadic conversion of each float entry, then exact renormalisation,
/// so downstream pricing identities hold with zero rational residual.
inline BehaviourStrategy rationalize(const BehaviourStrategyF& xi) {
  BehaviourStrategy out;
  out.table.reserve(xi.table.size());
  for (const auto& row : xi.table) {
    std::vector<Rational> r;
    r.reserve(row.size());
    Rational sum = 0;
    for (double p : row) {
      Rational q = p <= 0 ? Rational(0) : rational_from_double(p);
      sum += q;
      r.push_back(std::move(q));
    }
    if (sum == 0) throw DomainError("cannot rationalize all-zero strategy row");
    for (auto& q : r) q /= sum;
    out.table.push_back(std::move(r));
  }
  return out;
}

inline double strategy_distance(const BehaviourStrategyF& a, const BehaviourStrategyF& b) {
  double d = 0;
  for (std::size_t n = 0; n < a.table.size(); ++n) {
    for (std::size_t k = 0; k < a.table[n].size(); ++k) {
      d = std::max(d, std::abs(a.table[n][k] - b.table[n][k]));
    }
  }
  return d;
}

}  // namespace kyle
