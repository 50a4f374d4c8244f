#pragma once

#include <optional>

#include "kyle/pricing.hpp"

namespace kyle {

namespace detail {

template <class S>
void check_outcome(const GameTree& tree, const Outcome& out) {
  const GameSpec& spec = tree.spec();
  if (out.state < 0 || out.state >= spec.num_states()) throw DomainError("outcome state not in tree");
  if (static_cast<int>(out.trades.size()) != spec.horizon ||
      static_cast<int>(out.noise.size()) != spec.horizon) {
    throw DomainError("outcome path length does not match the horizon");
  }
  for (int t = 0; t < spec.horizon; ++t) {
    if (out.trades[t] < 0 || out.trades[t] >= spec.num_trades() || out.noise[t] < 0 ||
        out.noise[t] >= spec.num_noise()) {
      throw DomainError("outcome trade or noise index not in tree");
    }
  }
}

}  // namespace detail

/// p^xi(omega) = nu(i) * prod_t xi(node_t, x_t) * zeta(z_t), exact.
template <class S>
S realisation_prob(const GameTree& tree, const Behaviour<S>& strat, const Outcome& out) {
  detail::check_outcome<S>(tree, out);
  const GameSpec& spec = tree.spec();
  S p = scalar_cast<S>(spec.prior[out.state]);
  int id = tree.root_xnode(out.state);
  for (int t = 1; t <= spec.horizon; ++t) {
    if (t > 1) id = tree.xnode_on_path(out, t);
    p *= strat.table[id][out.trades[t - 1]];
    p *= scalar_cast<S>(spec.noise_dist[out.noise[t - 1]]);
    if (p == S(0)) return p;
  }
  return p;
}

/// Conditional realisation probability for the subgame rooted at `start`
/// (a V- or X-node). The prior factor is nu(i) / nu(I_t).
template <class S>
S subgame_realisation_prob(const GameTree& tree, const Behaviour<S>& strat, const NodeKey& start,
                           const Outcome& out) {
  detail::check_outcome<S>(tree, out);
  const GameSpec& spec = tree.spec();
  if (start.kind != NodeClass::V && start.kind != NodeClass::X) {
    throw DomainError("subgames start at V- or X-nodes");
  }
  const int depth = static_cast<int>(start.cells.size());  // rounds revealed at start
  const int moves = static_cast<int>(start.trades.size());
  // outcome must pass through start: same cells chain and same move prefix
  for (int t = 1; t <= depth; ++t) {
    if (tree.cell_of_state(t, out.state) != start.cells[t - 1]) {
      throw DomainError("outcome does not lie after the start node");
    }
  }
  for (int s = 0; s < moves; ++s) {
    if (out.trades[s] != start.trades[s] || out.noise[s] != start.noise[s]) {
      throw DomainError("outcome does not lie after the start node");
    }
  }
  S p;
  if (depth == 0) {
    p = scalar_cast<S>(spec.prior[out.state]);  // root: plain realisation probability
  } else {
    const int cell = start.cells[depth - 1];
    p = scalar_cast<S>(spec.prior[out.state] / tree.cell_mass(depth, cell));
  }
  for (int t = moves + 1; t <= spec.horizon; ++t) {
    const int id = tree.xnode_on_path(out, t);
    p *= strat.table[id][out.trades[t - 1]];
    p *= scalar_cast<S>(spec.noise_dist[out.noise[t - 1]]);
    if (p == S(0)) return p;
  }
  return p;
}

/// U(omega, S) = sum_t (v^i - S_t(y_1..y_t)) x_t.
template <class S>
S payoff(const GameTree& tree, const Outcome& out, const PricingSystemT<S>& prices) {
  detail::check_outcome<S>(tree, out);
  const GameSpec& spec = tree.spec();
  const S v = scalar_cast<S>(spec.true_values[out.state]);
  S total(0);
  std::uint64_t code = 0;
  for (int t = 1; t <= spec.horizon; ++t) {
    code = tree.extend_flow(code, tree.flow_of(out.trades[t - 1], out.noise[t - 1]));
    const S x = scalar_cast<S>(spec.trade_support[out.trades[t - 1]]);
    if (x != S(0)) {
      total += (v - price_at(tree, prices, t, code)) * x;
    }
  }
  return total;
}

/// Memoized continuation values under a fixed strategy and pricing system.
/// Prices are looked up strictly, but only on branches the strategy reaches
/// with positive probability, so reached-only pricing systems suffice.
template <class S>
class UtilityEvaluator {
 public:
  UtilityEvaluator(const GameTree& tree, const Behaviour<S>& strat,
                   const PricingSystemT<S>& prices)
      : tree_(tree), strat_(strat), prices_(prices), memo_(tree.num_xnodes()) {}

  /// Continuation value of the subgame from an X-node (round t..T payoffs).
  const S& continuation(int id) {
    auto& slot = memo_[id];
    if (slot) return *slot;
    const auto& nd = tree_.xnode(id);
    const GameSpec& spec = tree_.spec();
    const int t = nd.period;
    S total(0);
    const S mean_v = scalar_cast<S>(tree_.cell_value_mean(t, nd.cell));
    for (int xi = 0; xi < spec.num_trades(); ++xi) {
      const S& px = strat_.table[id][xi];
      if (px == S(0)) continue;
      const S x = scalar_cast<S>(spec.trade_support[xi]);
      S action_val(0);
      for (int zi = 0; zi < spec.num_noise(); ++zi) {
        const std::uint64_t code = tree_.extend_flow(nd.flow_prefix, tree_.flow_of(xi, zi));
        S leg(0);
        if (x != S(0)) leg += (mean_v - price_at(tree_, prices_, t, code)) * x;
        if (t < spec.horizon) leg += vnode_continuation(id, xi, zi);
        action_val += scalar_cast<S>(spec.noise_dist[zi]) * leg;
      }
      total += px * action_val;
    }
    slot = std::move(total);
    return *slot;
  }

  /// Continuation value from the V-node after (xi, zi) at X-node id.
  S vnode_continuation(int id, int xi, int zi) {
    const auto& nd = tree_.xnode(id);
    const int t = nd.period;
    if (t >= tree_.spec().horizon) return S(0);
    const auto& kids = tree_.child_cells(t, nd.cell);
    S total(0);
    for (int pos = 0; pos < static_cast<int>(kids.size()); ++pos) {
      const S trans = scalar_cast<S>(tree_.cell_mass(t + 1, kids[pos]) / tree_.cell_mass(t, nd.cell));
      total += trans * continuation(tree_.child(id, xi, zi, pos));
    }
    return total;
  }

  /// Expected utility of the whole game.
  S root_utility() {
    S total(0);
    for (int id = tree_.xnode_begin(1); id < tree_.xnode_end(1); ++id) {
      total += scalar_cast<S>(tree_.cell_mass(1, tree_.xnode(id).cell)) * continuation(id);
    }
    return total;
  }

  /// u_tau: expected total payoff conditional on starting at `tau`,
  /// including payoff terms from trades already made on tau's history.
  S subgame_utility(const NodeKey& tau) {
    if (tau.kind == NodeClass::V && tau.cells.empty()) return root_utility();
    if (tau.kind == NodeClass::X) {
      const int id = tree_.find_xnode(tau);
      return sunk_payoff(tau, tree_.xnode(id).cell) + continuation(id);
    }
    if (tau.kind == NodeClass::V) {
      // V-node after (x_t, z_t): locate the round-t X-node, then one move
      NodeKey xkey = tau;
      xkey.kind = NodeClass::X;
      const int xi = xkey.trades.back();
      const int zi = xkey.noise.back();
      xkey.trades.pop_back();
      xkey.noise.pop_back();
      const int id = tree_.find_xnode(xkey);
      return sunk_payoff(tau, tree_.xnode(id).cell) + vnode_continuation(id, xi, zi);
    }
    throw DomainError("subgame utilities start at V- or X-nodes");
  }

 private:
  /// Expected payoff of the trades already fixed by tau's history, given the
  /// last revealed cell.
  S sunk_payoff(const NodeKey& tau, int cell) {
    const GameSpec& spec = tree_.spec();
    const int t = static_cast<int>(tau.cells.size());
    const S mean_v = scalar_cast<S>(tree_.cell_value_mean(t, cell));
    S total(0);
    std::uint64_t code = 0;
    for (std::size_t s = 0; s < tau.trades.size(); ++s) {
      code = tree_.extend_flow(code, tree_.flow_of(tau.trades[s], tau.noise[s]));
      const S x = scalar_cast<S>(spec.trade_support[tau.trades[s]]);
      if (x != S(0)) {
        total += (mean_v - price_at(tree_, prices_, static_cast<int>(s) + 1, code)) * x;
      }
    }
    return total;
  }

  const GameTree& tree_;
  const Behaviour<S>& strat_;
  const PricingSystemT<S>& prices_;
  std::vector<std::optional<S>> memo_;
};

/// u(xi, S) = sum_omega p^xi(omega) U(omega, S), via the per-round recursion.
template <class S>
S expected_utility(const GameTree& tree, const Behaviour<S>& strat,
                   const PricingSystemT<S>& prices) {
  return UtilityEvaluator<S>(tree, strat, prices).root_utility();
}

template <class S>
S subgame_expected_utility(const GameTree& tree, const Behaviour<S>& strat,
                           const PricingSystemT<S>& prices, const NodeKey& tau) {
  return UtilityEvaluator<S>(tree, strat, prices).subgame_utility(tau);
}

/// Price lookup policies for full-tree backward induction, where deviations
/// probe flows the strategy never reaches.
template <class S>
struct CompletePriceView {
  const GameTree& tree;
  const PricingSystemT<S>& prices;
  S operator()(int t, std::uint64_t code, int /*xi*/) const {
    return price_at(tree, prices, t, code);
  }
};

/// Values undefined flows adversarially against the trader within
/// [v^N, v^1]: the highest value for buys, the lowest for sells. A gain
/// certified under this view survives every completion of the prices.
template <class S>
struct PessimisticPriceView {
  const GameTree& tree;
  const PricingSystemT<S>& prices;
  S operator()(int t, std::uint64_t code, int xi) const {
    if (prices.defined(t, code)) return prices.value[t - 1][code];
    const GameSpec& spec = tree.spec();
    const bool buy = spec.trade_support[xi] > 0;
    return scalar_cast<S>(buy ? spec.true_values.front() : spec.true_values.back());
  }
};

/// Per-node action values under a strategy: q[id][x] is the continuation
/// value of playing x once at node id and xi elsewhere, plus the
/// strategy-weighted value v[id]. The affine basis of best replies.
template <class S>
struct ActionValues {
  std::vector<std::vector<S>> q;
  std::vector<S> value;  // strategy-weighted
};

template <class S, class PriceFn>
ActionValues<S> action_values(const GameTree& tree, const Behaviour<S>& strat, PriceFn price) {
  const GameSpec& spec = tree.spec();
  const int T = spec.horizon;
  const int K = spec.num_trades();
  const int L = spec.num_noise();
  ActionValues<S> av;
  av.q.assign(tree.num_xnodes(), {});
  av.value.assign(tree.num_xnodes(), S(0));
  for (int t = T; t >= 1; --t) {
    for (int id = tree.xnode_begin(t); id < tree.xnode_end(t); ++id) {
      const auto& nd = tree.xnode(id);
      const S mean_v = scalar_cast<S>(tree.cell_value_mean(t, nd.cell));
      auto& q = av.q[id];
      q.assign(K, S(0));
      for (int xi = 0; xi < K; ++xi) {
        const S x = scalar_cast<S>(spec.trade_support[xi]);
        for (int zi = 0; zi < L; ++zi) {
          const std::uint64_t code = tree.extend_flow(nd.flow_prefix, tree.flow_of(xi, zi));
          S leg(0);
          if (x != S(0)) leg += (mean_v - price(t, code, xi)) * x;
          if (t < T) {
            const auto& kids = tree.child_cells(t, nd.cell);
            for (int pos = 0; pos < static_cast<int>(kids.size()); ++pos) {
              const S trans =
                  scalar_cast<S>(tree.cell_mass(t + 1, kids[pos]) / tree.cell_mass(t, nd.cell));
              leg += trans * av.value[tree.child(id, xi, zi, pos)];
            }
          }
          q[xi] += scalar_cast<S>(spec.noise_dist[zi]) * leg;
        }
        av.value[id] += strat.table[id][xi] * q[xi];
      }
    }
  }
  return av;
}

/// Optimal continuation values: max over actions at every node.
template <class S, class PriceFn>
std::vector<S> optimal_values(const GameTree& tree, PriceFn price) {
  const GameSpec& spec = tree.spec();
  const int T = spec.horizon;
  const int K = spec.num_trades();
  const int L = spec.num_noise();
  std::vector<S> best(tree.num_xnodes(), S(0));
  for (int t = T; t >= 1; --t) {
    for (int id = tree.xnode_begin(t); id < tree.xnode_end(t); ++id) {
      const auto& nd = tree.xnode(id);
      const S mean_v = scalar_cast<S>(tree.cell_value_mean(t, nd.cell));
      std::optional<S> node_best;
      for (int xi = 0; xi < K; ++xi) {
        const S x = scalar_cast<S>(spec.trade_support[xi]);
        S qx(0);
        for (int zi = 0; zi < L; ++zi) {
          const std::uint64_t code = tree.extend_flow(nd.flow_prefix, tree.flow_of(xi, zi));
          S leg(0);
          if (x != S(0)) leg += (mean_v - price(t, code, xi)) * x;
          if (t < T) {
            const auto& kids = tree.child_cells(t, nd.cell);
            for (int pos = 0; pos < static_cast<int>(kids.size()); ++pos) {
              const S trans =
                  scalar_cast<S>(tree.cell_mass(t + 1, kids[pos]) / tree.cell_mass(t, nd.cell));
              leg += trans * best[tree.child(id, xi, zi, pos)];
            }
          }
          qx += scalar_cast<S>(spec.noise_dist[zi]) * leg;
        }
        if (!node_best || qx > *node_best) node_best = std::move(qx);
      }
      best[id] = *node_best;
    }
  }
  return best;
}

}  // namespace kyle
