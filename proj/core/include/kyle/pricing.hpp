#pragma once

#include <sstream>
#include <vector>

#include "kyle/strategy.hpp"

namespace kyle {

/// Order-flow history (y_1, ..., y_t). Membership in E_Y is exact.
struct FlowHistory {
  std::vector<Rational> ys;
};

/// Prices indexed by encoded flow histories, one dense table per round.
/// `complete` distinguishes systems defined on all of (E_Y)^t from
/// reached-only systems; querying an undefined flow is an error, never a
/// silent default.
template <class S>
struct PricingSystemT {
  bool complete = false;
  std::vector<std::vector<S>> value;    // [t-1][flow code]
  std::vector<std::vector<char>> mask;  // defined flags, parallel to value

  bool defined(int t, std::uint64_t code) const { return mask[t - 1][code] != 0; }
  void set(int t, std::uint64_t code, S v) {
    value[t - 1][code] = std::move(v);
    mask[t - 1][code] = 1;
  }
};

using PricingSystem = PricingSystemT<Rational>;
using PricingSystemF = PricingSystemT<double>;

/// Market maker beliefs over states, one distribution per flow history.
/// Systems of beliefs are total maps.
template <class S>
struct BeliefSystemT {
  std::vector<std::vector<S>> dist;  // [t-1][flow code * N + state]
};

using BeliefSystem = BeliefSystemT<Rational>;
using BeliefSystemF = BeliefSystemT<double>;

template <class S>
PricingSystemT<S> empty_pricing(const GameTree& tree, bool complete) {
  PricingSystemT<S> ps;
  ps.complete = complete;
  const int T = tree.spec().horizon;
  ps.value.resize(T);
  ps.mask.resize(T);
  for (int t = 1; t <= T; ++t) {
    ps.value[t - 1].assign(tree.flow_card(t), S(0));
    ps.mask[t - 1].assign(tree.flow_card(t), 0);
  }
  return ps;
}

inline std::string describe_flow(const GameTree& tree, int t, std::uint64_t code) {
  std::ostringstream os;
  os << '(';
  auto idx = tree.decode_flow(code, t);
  for (int s = 0; s < t; ++s) {
    if (s) os << ',';
    os << format_rational(tree.flow_values()[idx[s]]);
  }
  os << ')';
  return os.str();
}

template <class S>
const S& price_at(const GameTree& tree, const PricingSystemT<S>& ps, int t, std::uint64_t code) {
  if (!ps.defined(t, code)) {
    throw IncompletePricingError("price undefined at flow " + describe_flow(tree, t, code));
  }
  return ps.value[t - 1][code];
}

inline PricingSystemF to_float_prices(const PricingSystem& ps) {
  PricingSystemF out;
  out.complete = ps.complete;
  out.mask = ps.mask;
  out.value.resize(ps.value.size());
  for (std::size_t t = 0; t < ps.value.size(); ++t) {
    out.value[t].reserve(ps.value[t].size());
    for (const auto& v : ps.value[t]) out.value[t].push_back(to_double(v));
  }
  return out;
}

/// Joint probabilities of (state, flow history) for every round, plus flow
/// marginals. One forward pass over the tree.
template <class S>
struct FlowDistribution {
  std::vector<std::vector<S>> joint;     // [t-1][code * N + state]
  std::vector<std::vector<S>> marginal;  // [t-1][code]
};

template <class S>
FlowDistribution<S> flow_distribution(const GameTree& tree, const Behaviour<S>& strat) {
  const GameSpec& spec = tree.spec();
  const int T = spec.horizon;
  const int N = spec.num_states();
  const int K = spec.num_trades();
  const int L = spec.num_noise();

  FlowDistribution<S> fd;
  fd.joint.resize(T);
  fd.marginal.resize(T);
  for (int t = 1; t <= T; ++t) {
    fd.joint[t - 1].assign(tree.flow_card(t) * N, S(0));
    fd.marginal[t - 1].assign(tree.flow_card(t), S(0));
  }

  // weight[id][k] = joint prob of reaching X-node id with state = cell member #k
  std::vector<std::vector<S>> weight(tree.num_xnodes());
  for (int id = tree.xnode_begin(1); id < tree.xnode_end(1); ++id) {
    const Cell& cell = tree.level(1)[tree.xnode(id).cell];
    auto& w = weight[id];
    w.reserve(cell.size());
    for (int s : cell) w.push_back(scalar_cast<S>(spec.prior[s]));
  }

  for (int t = 1; t <= T; ++t) {
    for (int id = tree.xnode_begin(t); id < tree.xnode_end(t); ++id) {
      const auto& nd = tree.xnode(id);
      const Cell& cell = tree.level(t)[nd.cell];
      const auto& row = strat.table[id];
      const auto& w = weight[id];
      if (w.empty()) continue;  // node unreachable under the strategy
      for (int k = 0; k < static_cast<int>(cell.size()); ++k) {
        const int state = cell[k];
        if (w[k] == S(0)) continue;
        const int next_cell = tree.cell_of_state(t + 1, state);
        for (int xi = 0; xi < K; ++xi) {
          if (row[xi] == S(0)) continue;
          const S wx = w[k] * row[xi];
          for (int zi = 0; zi < L; ++zi) {
            const S p = wx * scalar_cast<S>(spec.noise_dist[zi]);
            const std::uint64_t code = tree.extend_flow(nd.flow_prefix, tree.flow_of(xi, zi));
            fd.joint[t - 1][code * N + state] += p;
            fd.marginal[t - 1][code] += p;
            if (t < T) {
              const auto& kids = tree.child_cells(t, nd.cell);
              int pos = 0;
              while (kids[pos] != next_cell) ++pos;
              const int cid = tree.child(id, xi, zi, pos);
              auto& cw = weight[cid];
              if (cw.empty()) cw.assign(tree.level(t + 1)[next_cell].size(), S(0));
              const Cell& ccell = tree.level(t + 1)[next_cell];
              int cpos = 0;
              while (ccell[cpos] != state) ++cpos;
              cw[cpos] += p;
            }
          }
        }
      }
      weight[id].clear();
      weight[id].shrink_to_fit();
    }
  }
  return fd;
}

/// Rational pricing S_t(flow) = E[v | flow] on flows with positive marginal.
template <class S>
PricingSystemT<S> rational_prices(const GameTree& tree, const Behaviour<S>& strat) {
  const auto fd = flow_distribution(tree, strat);
  const int N = tree.spec().num_states();
  PricingSystemT<S> ps = empty_pricing<S>(tree, /*complete=*/false);
  for (int t = 1; t <= tree.spec().horizon; ++t) {
    const auto& joint = fd.joint[t - 1];
    const auto& marg = fd.marginal[t - 1];
    for (std::uint64_t code = 0; code < marg.size(); ++code) {
      if (marg[code] == S(0)) continue;
      S price(0);
      for (int i = 0; i < N; ++i) {
        if (joint[code * N + i] != S(0)) {
          price += joint[code * N + i] * scalar_cast<S>(tree.spec().true_values[i]);
        }
      }
      ps.set(t, code, price / marg[code]);
    }
  }
  return ps;
}

/// Joint probability of (state i, flow prefix). Flows off E_Y have
/// probability zero.
template <class S>
S joint_flow_prob(const GameTree& tree, const Behaviour<S>& strat, int state,
                  const FlowHistory& flow) {
  const int t = static_cast<int>(flow.ys.size());
  if (t < 1 || t > tree.spec().horizon) throw DomainError("flow history length out of range");
  if (state < 0 || state >= tree.spec().num_states()) throw DomainError("state out of range");
  std::uint64_t code = 0;
  for (const auto& y : flow.ys) {
    int idx = tree.flow_index(y);
    if (idx < 0) return S(0);
    code = tree.extend_flow(code, idx);
  }
  const auto fd = flow_distribution(tree, strat);
  return fd.joint[t - 1][code * tree.spec().num_states() + state];
}

/// Bayes conditional of the state given a flow with positive marginal.
template <class S>
std::vector<S> conditional_state_prob(const GameTree& tree, const Behaviour<S>& strat,
                                      const FlowHistory& flow) {
  const int t = static_cast<int>(flow.ys.size());
  if (t < 1 || t > tree.spec().horizon) throw DomainError("flow history length out of range");
  std::uint64_t code = 0;
  for (const auto& y : flow.ys) {
    int idx = tree.flow_index(y);
    if (idx < 0) throw UnreachedFlowError("flow leaves E_Y; marginal probability is zero");
    code = tree.extend_flow(code, idx);
  }
  const auto fd = flow_distribution(tree, strat);
  const int N = tree.spec().num_states();
  const S& marg = fd.marginal[t - 1][code];
  if (marg == S(0)) {
    throw UnreachedFlowError("flow " + describe_flow(tree, t, code) +
                             " has zero marginal probability; use beliefs instead");
  }
  std::vector<S> out(N);
  for (int i = 0; i < N; ++i) out[i] = fd.joint[t - 1][code * N + i] / marg;
  return out;
}

/// Bayes beliefs of a completely mixed strategy; defined on every flow.
template <class S>
BeliefSystemT<S> beliefs_from_strategy(const GameTree& tree, const Behaviour<S>& strat) {
  for (const auto& row : strat.table) {
    for (const auto& p : row) {
      if (!(p > S(0))) {
        throw PreconditionError("strategy is not completely mixed");
      }
    }
  }
  const auto fd = flow_distribution(tree, strat);
  const int N = tree.spec().num_states();
  BeliefSystemT<S> mu;
  mu.dist.resize(tree.spec().horizon);
  for (int t = 1; t <= tree.spec().horizon; ++t) {
    const auto& joint = fd.joint[t - 1];
    const auto& marg = fd.marginal[t - 1];
    auto& out = mu.dist[t - 1];
    out.assign(joint.size(), S(0));
    for (std::uint64_t code = 0; code < marg.size(); ++code) {
      for (int i = 0; i < N; ++i) out[code * N + i] = joint[code * N + i] / marg[code];
    }
  }
  return mu;
}

/// Pricing induced by beliefs, defined on all flows.
template <class S>
PricingSystemT<S> price_from_beliefs(const GameTree& tree, const BeliefSystemT<S>& mu) {
  const int N = tree.spec().num_states();
  PricingSystemT<S> ps = empty_pricing<S>(tree, /*complete=*/true);
  for (int t = 1; t <= tree.spec().horizon; ++t) {
    for (std::uint64_t code = 0; code < tree.flow_card(t); ++code) {
      S price(0);
      for (int i = 0; i < N; ++i) {
        price += mu.dist[t - 1][code * N + i] * scalar_cast<S>(tree.spec().true_values[i]);
      }
      ps.set(t, code, price);
    }
  }
  return ps;
}

}  // namespace kyle
