#include "kyle/solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <sstream>

namespace kyle {

namespace {

// Rough payoff magnitude used to scale tolerances.
double payoff_scale(const GameTree& tree) {
  const auto& spec = tree.spec();
  double spread = to_double(spec.true_values.front() - spec.true_values.back());
  double xmax = 0;
  for (double x : tree.trades_d()) xmax = std::max(xmax, std::abs(x));
  return 1.0 + spread * xmax * spec.horizon;
}

std::vector<double> purified_br(const std::vector<double>& q, double eps, double tie_band) {
  const int k = static_cast<int>(q.size());
  const double top = *std::max_element(q.begin(), q.end());
  std::vector<int> argmax;
  for (int i = 0; i < k; ++i) {
    if (q[i] >= top - tie_band) argmax.push_back(i);
  }
  std::vector<double> br(k, eps);
  const double rem = (1.0 - eps * k) / static_cast<double>(argmax.size());
  for (int i : argmax) br[i] += rem;
  return br;
}

std::vector<double> logit_br(const std::vector<double>& q, double eps, double temp) {
  const int k = static_cast<int>(q.size());
  const double top = *std::max_element(q.begin(), q.end());
  std::vector<double> w(k);
  double sum = 0;
  for (int i = 0; i < k; ++i) {
    w[i] = std::exp((q[i] - top) / temp);
    sum += w[i];
  }
  std::vector<double> br(k);
  for (int i = 0; i < k; ++i) br[i] = eps + (1.0 - eps * k) * w[i] / sum;
  return br;
}

// max over nodes of [best attainable in Delta E_X^eps - achieved]
double local_residual(const GameTree& tree, const BehaviourStrategyF& strat,
                      const ActionValues<double>& av, double eps) {
  double worst = 0;
  const int k = tree.spec().num_trades();
  for (int id = 0; id < tree.num_xnodes(); ++id) {
    const auto& q = av.q[id];
    double qsum = 0, qmax = q[0], ach = 0;
    for (int i = 0; i < k; ++i) {
      qsum += q[i];
      qmax = std::max(qmax, q[i]);
      ach += strat.table[id][i] * q[i];
    }
    worst = std::max(worst, eps * qsum + (1.0 - eps * k) * qmax - ach);
  }
  return worst;
}

struct SweepEval {
  BeliefSystemF beliefs;
  PricingSystemF prices;
  ActionValues<double> av;
};

SweepEval evaluate_sweep(const GameTree& tree, const BehaviourStrategyF& strat) {
  SweepEval ev;
  ev.beliefs = beliefs_from_strategy(tree, strat);
  ev.prices = price_from_beliefs(tree, ev.beliefs);
  ev.av = action_values(tree, strat, CompletePriceView<double>{tree, ev.prices});
  return ev;
}

// Clamp entries at the eps floor to zero and renormalize; mirrors the
// vanishing of floor weights in the limit of the perturbation path.
BehaviourStrategyF extrapolate(const BehaviourStrategyF& strat, double eps, double slack) {
  BehaviourStrategyF out = strat;
  for (auto& row : out.table) {
    double sum = 0;
    for (double& p : row) {
      if (p <= eps + slack) p = 0;
      sum += p;
    }
    if (sum <= 0) continue;  // cannot happen with eps*K < 1
    for (double& p : row) p /= sum;
  }
  return out;
}

}  // namespace

std::vector<double> SolverConfig::default_schedule(int num_trades) {
  std::vector<double> out;
  const double cap = 1.0 / (2.0 * num_trades);
  for (int k = 0; k <= 20; ++k) {
    const double eps = std::min(cap, std::pow(2.0, -(k + 2)));
    if (out.empty() || eps < out.back()) out.push_back(eps);
  }
  return out;
}

void SolverConfig::validate() const {
  if (!(damping > 0) || damping > 1) throw PreconditionError("damping must lie in (0,1]");
  if (max_iters < 1) throw PreconditionError("max_iters must be positive");
  if (!(fixed_point_tol > 0)) throw PreconditionError("fixed_point_tol must be positive");
  if (!(support_grid_step > 0)) throw PreconditionError("support_grid_step must be positive");
  for (std::size_t i = 0; i + 1 < epsilon_schedule.size(); ++i) {
    if (!(epsilon_schedule[i + 1] < epsilon_schedule[i])) {
      throw PreconditionError("epsilon schedule must be strictly decreasing");
    }
  }
  for (double e : epsilon_schedule) {
    if (!(e > 0)) throw PreconditionError("epsilon schedule entries must be positive");
  }
}

std::vector<Rational> best_reply_eps(const GameTree& tree, const BehaviourStrategy& strat,
                                     const BeliefSystem& beliefs, int xnode, const Rational& eps) {
  EpsilonConstraint checked(eps, tree.spec().num_trades());
  const auto prices = price_from_beliefs(tree, beliefs);
  const auto av = action_values(tree, strat, CompletePriceView<Rational>{tree, prices});
  const auto& q = av.q[xnode];
  const Rational top = *std::max_element(q.begin(), q.end());
  std::vector<int> argmax;
  for (int i = 0; i < static_cast<int>(q.size()); ++i) {
    if (q[i] == top) argmax.push_back(i);
  }
  std::vector<Rational> br(q.size(), checked.eps);
  const Rational rem =
      (1 - checked.eps * static_cast<int>(q.size())) / static_cast<int>(argmax.size());
  for (int i : argmax) br[i] += rem;
  return br;
}

std::vector<Rational> best_reply_eps(const GameTree& tree, const BehaviourStrategy& strat,
                                     const BeliefSystem& beliefs, const NodeKey& node,
                                     const Rational& eps) {
  return best_reply_eps(tree, strat, beliefs, tree.find_xnode(node), eps);
}

FixedPointResult fixed_point_eps(const GameTree& tree, double eps, const BehaviourStrategyF* init,
                                 const SolverConfig& config) {
  config.validate();
  const int K = tree.spec().num_trades();
  if (!(eps > 0) || !(eps * K < 1)) {
    throw PreconditionError("perturbation weight must satisfy 0 < eps * |E_X| < 1");
  }
  const double scale = payoff_scale(tree);
  const double tie_band = 1e-12 * scale;
  const double tol = config.fixed_point_tol;

  BehaviourStrategyF strat = init ? *init : uniform_strategy<double>(tree);
  // squeeze into the constrained simplex if the start violates the floor
  for (auto& row : strat.table) {
    bool ok = true;
    for (double p : row) ok = ok && p >= eps;
    if (!ok) {
      for (double& p : row) p = eps + (1.0 - eps * K) * p;
    }
  }

  FixedPointResult best;
  best.residual = std::numeric_limits<double>::infinity();
  auto consider = [&](const BehaviourStrategyF& s, double residual, int sweeps) {
    if (residual < best.residual) {
      best.strategy = s;
      best.residual = residual;
      best.sweeps = sweeps;
    }
  };

  std::deque<BehaviourStrategyF> history;
  bool logit_mode = false;
  double temp = 1.0;
  double damp = config.damping;
  int sweeps = 0;
  bool change_converged = false;
  const int phase1 = std::max(200, config.max_iters / 2);

  for (; sweeps < phase1; ++sweeps) {
    SweepEval ev = evaluate_sweep(tree, strat);
    consider(strat, local_residual(tree, strat, ev.av, eps), sweeps);

    BehaviourStrategyF next = strat;
    for (int id = 0; id < tree.num_xnodes(); ++id) {
      const auto br = logit_mode ? logit_br(ev.av.q[id], eps, temp * scale)
                                 : purified_br(ev.av.q[id], eps, tie_band);
      for (int i = 0; i < K; ++i) {
        next.table[id][i] = (1.0 - damp) * strat.table[id][i] + damp * br[i];
      }
    }
    const double change = strategy_distance(next, strat);
    strat = std::move(next);
    if (change <= tol) {
      change_converged = true;
      ++sweeps;
      break;
    }
    // cycle detection over a window of 8 sweeps
    bool cycle = false;
    for (const auto& old : history) {
      if (strategy_distance(old, strat) <= 4 * tol + 1e-14) {
        cycle = true;
        break;
      }
    }
    history.push_back(strat);
    if (history.size() > 8) history.pop_front();
    if (cycle) {
      if (!logit_mode) {
        logit_mode = true;
        temp = 1.0;
      } else {
        damp = std::max(damp / 2, config.damping / 64);
      }
      history.clear();
    }
    if (logit_mode) temp = std::max(temp * 0.85, 1e-9);
  }

  // Active-set polish: floor entries snapped to exactly eps, interior
  // mixing weights driven to indifference by per-node secant steps.
  struct Secant {
    int i = -1, j = -1;  // canonical action pair, ordered by trade index
    double w = 0, g = 0;
    bool valid = false;
  };
  std::map<int, Secant> secants;
  const int polish_rounds = 80;
  for (int round = 0; round < polish_rounds && sweeps < config.max_iters; ++round, ++sweeps) {
    SweepEval ev = evaluate_sweep(tree, strat);
    const double residual = local_residual(tree, strat, ev.av, eps);
    consider(strat, residual, sweeps);
    if (residual <= 1e-13 * scale) break;

    double moved = 0;
    for (int id = 0; id < tree.num_xnodes(); ++id) {
      const auto& q = ev.av.q[id];
      std::vector<int> interior;
      for (int i = 0; i < K; ++i) {
        if (strat.table[id][i] > eps * 1.5) interior.push_back(i);
      }
      const double qmax = *std::max_element(q.begin(), q.end());
      // if the argmax lives entirely on the floor the active set is wrong
      const bool misclassified =
          interior.empty() || std::none_of(interior.begin(), interior.end(),
                                           [&](int j) { return q[j] >= qmax - tie_band; });
      if (misclassified || interior.size() <= 1) {
        const auto br = purified_br(q, eps, tie_band);
        for (int i = 0; i < K; ++i) {
          moved = std::max(moved, std::abs(br[i] - strat.table[id][i]));
          strat.table[id][i] = br[i];
        }
        secants.erase(id);
        continue;
      }
      // interior pair with the largest gap, in canonical index order
      int top = interior[0], bot = interior[0];
      for (int i : interior) {
        if (q[i] > q[top]) top = i;
        if (q[i] < q[bot]) bot = i;
      }
      const int a = std::min(top, bot), b = std::max(top, bot);
      // snap floor actions to exactly eps, renormalizing interior mass
      {
        double interior_sum = 0;
        int floors = 0;
        for (int i = 0; i < K; ++i) {
          if (std::find(interior.begin(), interior.end(), i) == interior.end()) {
            strat.table[id][i] = eps;
            ++floors;
          } else {
            interior_sum += strat.table[id][i];
          }
        }
        const double target = 1.0 - eps * floors;
        if (interior_sum > 0 && std::abs(interior_sum - target) > 0) {
          for (int i : interior) strat.table[id][i] *= target / interior_sum;
        }
      }
      const double g = q[a] - q[b];  // signed: positive means a deserves weight
      if (std::abs(g) <= 1e-15 * scale) {
        secants.erase(id);
        continue;
      }
      const double w = strat.table[id][a];
      auto& sec = secants[id];
      double step;
      if (sec.valid && sec.i == a && sec.j == b && std::abs(w - sec.w) > 1e-15 &&
          std::abs(g - sec.g) > 0) {
        // weight on an action moves its price against it, so the slope is
        // negative at a stable interior point; otherwise take a damped step
        const double slope = (g - sec.g) / (w - sec.w);
        step = slope < 0 ? -g / slope : (g > 0 ? 1.0 : -1.0) * std::min(0.05, std::abs(g) / scale);
      } else {
        step = (g > 0 ? 1.0 : -1.0) * std::min(1e-4, std::abs(g) / scale);
      }
      sec = Secant{a, b, w, g, true};
      step = std::clamp(step, -(strat.table[id][a] - eps), strat.table[id][b] - eps);
      step = std::clamp(step, -0.2, 0.2);
      strat.table[id][a] += step;
      strat.table[id][b] -= step;
      moved = std::max(moved, std::abs(step));
    }
    if (moved <= tol && round > 2) {
      SweepEval last = evaluate_sweep(tree, strat);
      consider(strat, local_residual(tree, strat, last.av, eps), sweeps);
      break;
    }
  }

  best.converged = (change_converged || best.residual <= 1e-10 * scale);
  if (!(best.residual <= 1e-10 * scale)) best.converged = false;
  return best;
}

EquilibriumCertificate sequential_equilibrium(const GameTree& tree, const SolverConfig& config) {
  config.validate();
  const int K = tree.spec().num_trades();
  std::vector<double> schedule =
      config.epsilon_schedule.empty() ? SolverConfig::default_schedule(K) : config.epsilon_schedule;
  for (double e : schedule) {
    if (!(e * K < 1)) throw PreconditionError("epsilon schedule violates eps * |E_X| < 1");
  }
  const double scale = payoff_scale(tree);
  const double clamp_slack = 10 * config.fixed_point_tol / config.damping;

  EquilibriumCertificate cert;
  cert.origin = "homotopy";

  BehaviourStrategyF warm = uniform_strategy<double>(tree);
  bool any_unconverged = false;
  for (double eps : schedule) {
    FixedPointResult fp = fixed_point_eps(tree, eps, &warm, config);
    warm = fp.strategy;

    HomotopyTraceEntry entry;
    entry.eps = eps;
    entry.strategy = fp.strategy;
    entry.beliefs = beliefs_from_strategy(tree, rationalize(fp.strategy));
    entry.residual = fp.residual;
    entry.converged = fp.converged;
    entry.sweeps = fp.sweeps;
    entry.extrapolated_gain =
        float_deviation_gain(tree, extrapolate(fp.strategy, eps, clamp_slack));
    any_unconverged = any_unconverged || !fp.converged;
    cert.trace.push_back(std::move(entry));
  }

  if (any_unconverged) cert.flags.push_back("unconverged");
  for (std::size_t k = 1; k < cert.trace.size(); ++k) {
    const double prev = cert.trace[k - 1].extrapolated_gain;
    const double cur = cert.trace[k].extrapolated_gain;
    if (cur > prev * 1.5 + 1e-9 * scale) {
      cert.flags.push_back("divergent-trace");
      break;
    }
  }

  // extrapolate to the unperturbed game
  const double eps_last = schedule.back();
  BehaviourStrategyF clamped = extrapolate(warm, eps_last, clamp_slack);
  cert.strategy = rationalize(clamped);

  // beliefs: exact Bayes on flows the limit strategy reaches, the last
  // perturbation level's Bayes beliefs elsewhere
  cert.beliefs = cert.trace.back().beliefs;
  const auto fd = flow_distribution(tree, cert.strategy);
  const int n = tree.spec().num_states();
  for (int t = 1; t <= tree.spec().horizon; ++t) {
    for (std::uint64_t code = 0; code < tree.flow_card(t); ++code) {
      const Rational& marg = fd.marginal[t - 1][code];
      if (marg == 0) continue;
      for (int i = 0; i < n; ++i) {
        cert.beliefs.dist[t - 1][code * n + i] = fd.joint[t - 1][code * n + i] / marg;
      }
    }
  }
  cert.prices = price_from_beliefs(tree, cert.beliefs);

  const double final_gain = float_deviation_gain(tree, clamped);
  if (final_gain > 5e-7 * scale && !cert.flagged("unconverged")) {
    cert.flags.push_back("unconverged");
  }
  return cert;
}

double float_deviation_gain(const GameTree& tree, const BehaviourStrategyF& strat) {
  const auto prices = rational_prices(tree, strat);
  return verify_kyle<double>(tree, strat, prices, 0).max_deviation_gain;
}

// ---------------------------------------------------------------------------
// support enumeration
// ---------------------------------------------------------------------------

namespace {

// Completion of reached-only prices for certificate assembly: unreached
// flows inherit the belief of the nearest reached flow of the same round,
// ties resolved toward the adversarial side for the trades that reach them.
struct CandidateEval {
  BehaviourStrategyF strategy;
  PricingSystemF prices;  // reached-only
  ActionValues<double> av;
};

CandidateEval eval_candidate(const GameTree& tree, const BehaviourStrategyF& strat) {
  CandidateEval ev;
  ev.strategy = strat;
  ev.prices = rational_prices(tree, strat);
  ev.av = action_values(tree, strat, PessimisticPriceView<double>{tree, ev.prices});
  return ev;
}

// Candidate acceptance: supported actions indifferent and no action better,
// under the adversarial valuation of unreached flows.
bool candidate_is_equilibrium(const GameTree& tree, const CandidateEval& ev, double scale) {
  const int K = tree.spec().num_trades();
  for (int id = 0; id < tree.num_xnodes(); ++id) {
    const auto& q = ev.av.q[id];
    double supp_val = 0;
    bool has = false;
    double qmax = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < K; ++i) {
      qmax = std::max(qmax, q[i]);
      if (ev.strategy.table[id][i] > 0) {
        if (has && std::abs(q[i] - supp_val) > 1e-9 * scale) return false;
        supp_val = has ? supp_val : q[i];
        has = true;
      }
    }
    if (!has || qmax > supp_val + 1e-9 * scale) return false;
  }
  return true;
}

// Assemble an exact certificate from a float candidate: rationalize, price
// reached flows by exact Bayes, and complete unreached flows with beliefs
// interpolated from the nearest reached flow (extreme-state mixtures).
EquilibriumCertificate assemble_certificate(const GameTree& tree, const BehaviourStrategyF& strat) {
  EquilibriumCertificate cert;
  cert.origin = "support-enumeration";
  cert.strategy = rationalize(strat);
  const auto fd = flow_distribution(tree, cert.strategy);
  const int n = tree.spec().num_states();
  const Rational v_top = tree.spec().true_values.front();
  const Rational v_bot = tree.spec().true_values.back();

  cert.beliefs.dist.resize(tree.spec().horizon);
  for (int t = 1; t <= tree.spec().horizon; ++t) {
    cert.beliefs.dist[t - 1].assign(tree.flow_card(t) * n, 0);
    // exact Bayes on reached flows
    std::vector<std::uint64_t> reached;
    for (std::uint64_t code = 0; code < tree.flow_card(t); ++code) {
      const Rational& marg = fd.marginal[t - 1][code];
      if (marg == 0) continue;
      reached.push_back(code);
      for (int i = 0; i < n; ++i) {
        cert.beliefs.dist[t - 1][code * n + i] = fd.joint[t - 1][code * n + i] / marg;
      }
    }
    // unreached flows: belief concentrated against the trades that reach
    // them; with single-signed trade grids this realizes the adversarial
    // valuation exactly, otherwise it is re-verified by the caller
    for (std::uint64_t code = 0; code < tree.flow_card(t); ++code) {
      if (fd.marginal[t - 1][code] != 0) continue;
      const auto idx = tree.decode_flow(code, t);
      const Rational& y = tree.flow_values()[idx[t - 1]];
      bool buy_reaches = false, sell_reaches = false;
      for (const auto& x : tree.spec().trade_support) {
        const Rational z = y - x;
        if (tree.spec().noise_support.end() !=
            std::find(tree.spec().noise_support.begin(), tree.spec().noise_support.end(), z)) {
          if (x > 0) buy_reaches = true;
          if (x < 0) sell_reaches = true;
        }
      }
      const bool top = buy_reaches || !sell_reaches;
      for (int i = 0; i < n; ++i) cert.beliefs.dist[t - 1][code * n + i] = 0;
      if (top) {
        // point mass on a state with the maximal value
        cert.beliefs.dist[t - 1][code * n + 0] = 1;
        (void)v_top;
      } else {
        cert.beliefs.dist[t - 1][code * n + (n - 1)] = 1;
        (void)v_bot;
      }
    }
  }
  cert.prices = price_from_beliefs(tree, cert.beliefs);
  return cert;
}

// Gap vector of a support profile at interior weights: per node, the
// differences q[support j] - q[support 0] stacked over j >= 1.
struct SupportProfile {
  std::vector<std::vector<int>> supp;  // per round-1 node, ascending trade indices
  int dim = 0;
};

BehaviourStrategyF profile_strategy(const GameTree& tree, const SupportProfile& prof,
                                    const std::vector<double>& weights) {
  BehaviourStrategyF strat;
  strat.table.assign(tree.num_xnodes(), std::vector<double>(tree.spec().num_trades(), 0.0));
  std::size_t w = 0;
  for (int id = 0; id < tree.num_xnodes(); ++id) {
    const auto& supp = prof.supp[id];
    if (supp.size() == 1) {
      strat.table[id][supp[0]] = 1.0;
      continue;
    }
    double rest = 1.0;
    for (std::size_t j = 1; j < supp.size(); ++j) {
      strat.table[id][supp[j]] = weights[w];
      rest -= weights[w];
      ++w;
    }
    strat.table[id][supp[0]] = rest;
  }
  return strat;
}

std::vector<double> profile_gaps(const GameTree& tree, const SupportProfile& prof,
                                 const std::vector<double>& weights) {
  const auto strat = profile_strategy(tree, prof, weights);
  const auto ev = eval_candidate(tree, strat);
  std::vector<double> g;
  for (int id = 0; id < tree.num_xnodes(); ++id) {
    const auto& supp = prof.supp[id];
    for (std::size_t j = 1; j < supp.size(); ++j) {
      g.push_back(ev.av.q[id][supp[j]] - ev.av.q[id][supp[0]]);
    }
  }
  return g;
}

double inf_norm(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Damped Newton with a central-difference Jacobian on the stacked gaps.
bool newton_polish(const GameTree& tree, const SupportProfile& prof, std::vector<double>& w,
                   double scale) {
  const int d = prof.dim;
  for (int it = 0; it < 60; ++it) {
    auto g = profile_gaps(tree, prof, w);
    if (inf_norm(g) <= 1e-12 * scale) return true;
    // Jacobian
    std::vector<std::vector<double>> jac(d, std::vector<double>(d));
    const double h = 1e-6;
    for (int j = 0; j < d; ++j) {
      auto wp = w, wm = w;
      wp[j] = std::min(wp[j] + h, 1.0);
      wm[j] = std::max(wm[j] - h, 0.0);
      const auto gp = profile_gaps(tree, prof, wp);
      const auto gm = profile_gaps(tree, prof, wm);
      for (int i = 0; i < d; ++i) jac[i][j] = (gp[i] - gm[i]) / (wp[j] - wm[j]);
    }
    // solve jac * step = -g by Gaussian elimination
    std::vector<double> step(d, 0.0);
    {
      auto a = jac;
      auto rhs = g;
      for (auto& r : rhs) r = -r;
      for (int col = 0; col < d; ++col) {
        int piv = col;
        for (int r = col + 1; r < d; ++r) {
          if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        }
        if (std::abs(a[piv][col]) < 1e-14) return false;
        std::swap(a[piv], a[col]);
        std::swap(rhs[piv], rhs[col]);
        for (int r = col + 1; r < d; ++r) {
          const double f = a[r][col] / a[col][col];
          for (int c = col; c < d; ++c) a[r][c] -= f * a[col][c];
          rhs[r] -= f * rhs[col];
        }
      }
      for (int r = d - 1; r >= 0; --r) {
        double s = rhs[r];
        for (int c = r + 1; c < d; ++c) s -= a[r][c] * step[c];
        step[r] = s / a[r][r];
      }
    }
    double lim = 1.0;
    for (int j = 0; j < d; ++j) {
      double nw = w[j] + step[j];
      if (nw < 0.0) lim = std::min(lim, (0.0 - w[j]) / step[j]);
      if (nw > 1.0) lim = std::min(lim, (1.0 - w[j]) / step[j]);
    }
    lim = std::max(0.0, lim * 0.99);
    if (lim < 1e-12) return false;
    for (int j = 0; j < d; ++j) w[j] += lim * step[j];
  }
  return inf_norm(profile_gaps(tree, prof, w)) <= 1e-10 * scale;
}

// feasible: full weight vector of every node interior to (0,1)
bool weights_interior(const GameTree& tree, const SupportProfile& prof,
                      const std::vector<double>& w) {
  std::size_t k = 0;
  for (int id = 0; id < tree.num_xnodes(); ++id) {
    const auto& supp = prof.supp[id];
    if (supp.size() == 1) continue;
    double rest = 1.0;
    for (std::size_t j = 1; j < supp.size(); ++j) {
      if (w[k] < 1e-6 || w[k] > 1.0 - 1e-6) return false;
      rest -= w[k];
      ++k;
    }
    if (rest < 1e-6 || rest > 1.0 - 1e-6) return false;
  }
  return true;
}

std::vector<EquilibriumCertificate> enumerate_single_period(const GameTree& tree,
                                                            const SolverConfig& config) {
  const GameSpec& spec = tree.spec();
  const int K = spec.num_trades();
  const int nodes = tree.xnode_end(1);
  const double scale = payoff_scale(tree);

  // all nonempty subsets per node, as ascending trade-index lists
  std::vector<std::vector<int>> subsets;
  for (int m = 1; m < (1 << K); ++m) {
    std::vector<int> s;
    for (int i = 0; i < K; ++i) {
      if (m & (1 << i)) s.push_back(i);
    }
    subsets.push_back(std::move(s));
  }

  double total = 1;
  for (int id = 0; id < nodes; ++id) total *= static_cast<double>(subsets.size());
  if (total > static_cast<double>(config.support_profile_cap)) {
    throw ResourceCapError("support enumeration profile count exceeds the cap; use homotopy mode");
  }

  std::vector<EquilibriumCertificate> found;
  auto consider_certificate = [&](const BehaviourStrategyF& strat) {
    const auto ev = eval_candidate(tree, strat);
    if (!candidate_is_equilibrium(tree, ev, scale)) return;
    EquilibriumCertificate cert = assemble_certificate(tree, strat);
    // re-verify with the explicit completion
    const auto report =
        verify_kyle<double>(tree, strat, to_float_prices(cert.prices), 1e-8 * scale);
    if (report.max_deviation_gain > 1e-8 * scale) {
      cert.flags.push_back("incomplete-verification");
    }
    for (const auto& existing : found) {
      if (strategy_distance(to_float(existing.strategy), strat) < 1e-7) return;  // duplicate
    }
    found.push_back(std::move(cert));
  };

  std::vector<int> choice(nodes, 0);
  while (true) {
    SupportProfile prof;
    prof.supp.assign(tree.num_xnodes(), {});
    bool monotone = true;
    for (int id = 0; id < nodes && monotone; ++id) {
      prof.supp[id] = subsets[choice[id]];
      // demand monotone in the value: compare against previously chosen nodes
      for (int other = 0; other < id && monotone; ++other) {
        const Rational va = tree.cell_value_mean(1, tree.xnode(id).cell);
        const Rational vb = tree.cell_value_mean(1, tree.xnode(other).cell);
        const auto& sa = prof.supp[id];
        const auto& sb = prof.supp[other];
        if (va > vb && spec.trade_support[sa.front()] < spec.trade_support[sb.back()]) {
          monotone = false;
        }
        if (vb > va && spec.trade_support[sb.front()] < spec.trade_support[sa.back()]) {
          monotone = false;
        }
      }
    }
    if (monotone) {
      int dim = 0;
      for (int id = 0; id < nodes; ++id) dim += static_cast<int>(prof.supp[id].size()) - 1;
      prof.dim = dim;
      if (dim == 0) {
        consider_certificate(profile_strategy(tree, prof, {}));
      } else if (dim == 1) {
        // bisection on sign changes of the one-dimensional gap
        auto gap1 = [&](double w) { return profile_gaps(tree, prof, {w})[0]; };
        const double step = config.support_grid_step;
        double prev_w = step, prev_g = gap1(step);
        for (double w = 2 * step; w < 1.0 - step / 2; w += step) {
          const double g = gap1(w);
          if ((g <= 0 && prev_g >= 0) || (g >= 0 && prev_g <= 0)) {
            double lo = prev_w, hi = w, glo = prev_g;
            for (int it = 0; it < 60; ++it) {
              const double mid = (lo + hi) / 2;
              const double gm = gap1(mid);
              if ((gm <= 0 && glo <= 0) || (gm >= 0 && glo >= 0)) {
                lo = mid;
                glo = gm;
              } else {
                hi = mid;
              }
            }
            // secant polish
            double w0 = lo, w1 = hi, g0 = gap1(w0), g1 = gap1(w1);
            for (int it = 0; it < 8 && std::abs(g1) > 0 && std::abs(g1 - g0) > 0; ++it) {
              const double w2 = std::clamp(w1 - g1 * (w1 - w0) / (g1 - g0), 0.0, 1.0);
              w0 = w1;
              g0 = g1;
              w1 = w2;
              g1 = gap1(w1);
            }
            std::vector<double> wv{w1};
            if (weights_interior(tree, prof, wv)) {
              consider_certificate(profile_strategy(tree, prof, wv));
            }
          }
          prev_w = w;
          prev_g = g;
        }
      } else if (dim <= 3) {
        // multi-start damped Newton from the most promising grid points
        const int per_dim = dim == 2 ? 17 : 9;
        std::vector<std::pair<double, std::vector<double>>> starts;
        std::vector<int> gi(dim, 1);
        while (true) {
          std::vector<double> w(dim);
          for (int j = 0; j < dim; ++j) w[j] = static_cast<double>(gi[j]) / per_dim;
          bool valid = true;
          for (int j = 0; j < dim && valid; ++j) valid = w[j] > 0 && w[j] < 1;
          if (valid) starts.push_back({inf_norm(profile_gaps(tree, prof, w)), w});
          int pos = dim - 1;
          while (pos >= 0 && ++gi[pos] >= per_dim) gi[pos--] = 1;
          if (pos < 0) break;
        }
        std::sort(starts.begin(), starts.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        const std::size_t tries = std::min<std::size_t>(starts.size(), 24);
        for (std::size_t s = 0; s < tries; ++s) {
          auto w = starts[s].second;
          if (newton_polish(tree, prof, w, scale) && weights_interior(tree, prof, w)) {
            consider_certificate(profile_strategy(tree, prof, w));
          }
        }
      }
      // dim > 3 profiles are skipped: only reachable with tied values, where
      // the monotonicity pruning cannot bound supports
    }
    int pos = nodes - 1;
    while (pos >= 0 && ++choice[pos] >= static_cast<int>(subsets.size())) choice[pos--] = 0;
    if (pos < 0) break;
  }
  return found;
}

}  // namespace

bool is_two_period_binary_shape(const GameSpec& spec) {
  if (spec.horizon != 2 || spec.num_states() != 2) return false;
  if (spec.true_values[0] <= spec.true_values[1]) return false;
  for (const auto& part : spec.partitions) {
    if (part.size() != 2) return false;
  }
  if (spec.trade_support != std::vector<Rational>{0, 1}) return false;
  if (spec.noise_support != std::vector<Rational>{-1, 0, 1}) return false;
  if (spec.noise_dist[0] != spec.noise_dist[2]) return false;
  return true;
}

namespace {

// One-parameter family of the two-period binary shape: the high-value
// insider buys with weight alpha in round 1 and always in round 2; the
// low-value insider never trades.
BehaviourStrategyF family_strategy(const GameTree& tree, double alpha) {
  BehaviourStrategyF strat;
  strat.table.assign(tree.num_xnodes(), std::vector<double>(2, 0.0));
  for (int id = 0; id < tree.num_xnodes(); ++id) {
    const auto& nd = tree.xnode(id);
    const Cell& cell = tree.level(nd.period)[nd.cell];
    const bool high = cell[0] == 0;
    if (!high) {
      strat.table[id][0] = 1.0;
    } else if (nd.period == 2) {
      strat.table[id][1] = 1.0;
    } else {
      strat.table[id][0] = 1.0 - alpha;
      strat.table[id][1] = alpha;
    }
  }
  return strat;
}

// Profits of the high-value insider's two pure first moves with optimal
// continuation, against rational prices for the assumed mixing weight.
std::pair<double, double> family_profits(const GameTree& tree, double alpha) {
  const auto strat = family_strategy(tree, alpha);
  const auto ev = eval_candidate(tree, strat);
  const int high_root = tree.root_xnode(0);
  return {ev.av.q[high_root][1], ev.av.q[high_root][0]};
}

std::vector<EquilibriumCertificate> enumerate_two_period_binary(const GameTree& tree,
                                                                const SolverConfig& config) {
  const double scale = payoff_scale(tree);
  std::vector<EquilibriumCertificate> found;
  auto gap = [&](double a) {
    const auto [buy, wait] = family_profits(tree, a);
    return buy - wait;
  };
  auto consider = [&](double alpha) {
    const auto strat = family_strategy(tree, alpha);
    const auto ev = eval_candidate(tree, strat);
    if (!candidate_is_equilibrium(tree, ev, scale)) return;
    EquilibriumCertificate cert = assemble_certificate(tree, strat);
    for (const auto& existing : found) {
      if (strategy_distance(to_float(existing.strategy), strat) < 1e-7) return;
    }
    found.push_back(std::move(cert));
  };

  consider(0.0);
  consider(1.0);
  const double step = config.support_grid_step;
  double prev_a = step, prev_g = gap(step);
  for (double a = 2 * step; a < 1.0 - step / 2; a += step) {
    const double g = gap(a);
    if ((g <= 0 && prev_g >= 0) || (g >= 0 && prev_g <= 0)) {
      double lo = prev_a, hi = a, glo = prev_g;
      for (int it = 0; it < 60; ++it) {
        const double mid = (lo + hi) / 2;
        const double gm = gap(mid);
        if ((gm <= 0 && glo <= 0) || (gm >= 0 && glo >= 0)) {
          lo = mid;
          glo = gm;
        } else {
          hi = mid;
        }
      }
      double a0 = lo, a1 = hi, g0 = gap(a0), g1 = gap(a1);
      for (int it = 0; it < 8 && std::abs(g1) > 0 && std::abs(g1 - g0) > 0; ++it) {
        const double a2 = std::clamp(a1 - g1 * (a1 - a0) / (g1 - g0), 0.0, 1.0);
        a0 = a1;
        g0 = g1;
        a1 = a2;
        g1 = gap(a1);
      }
      consider(a1);
    }
    prev_a = a;
    prev_g = g;
  }
  return found;
}

}  // namespace

std::vector<EquilibriumCertificate> support_enumeration_single_period(const GameTree& tree,
                                                                      const SolverConfig& config) {
  config.validate();
  if (tree.spec().horizon == 1) return enumerate_single_period(tree, config);
  if (is_two_period_binary_shape(tree.spec())) return enumerate_two_period_binary(tree, config);
  throw PreconditionError(
      "support enumeration requires a single-period game or the two-period binary shape");
}

ProfitCurve profit_curve(const GameTree& tree, double grid_step) {
  if (!is_two_period_binary_shape(tree.spec())) {
    throw PreconditionError("profit curves require the two-period binary shape");
  }
  if (!(grid_step > 0) || grid_step >= 1) {
    throw PreconditionError("grid step must lie in (0,1)");
  }
  ProfitCurve curve;
  for (double a = 0.0; a <= 1.0 + grid_step / 2; a += grid_step) {
    const double alpha = std::min(a, 1.0);
    const auto [buy, wait] = family_profits(tree, alpha);
    curve.rows.push_back({alpha, buy, wait});
    if (alpha >= 1.0) break;
  }
  SolverConfig cfg;
  cfg.support_grid_step = grid_step;
  auto certs = enumerate_two_period_binary(tree, cfg);
  for (const auto& cert : certs) {
    const double alpha = to_double(cert.strategy.table[tree.root_xnode(0)][1]);
    if (alpha > 1e-9 && alpha < 1 - 1e-9) {
      curve.crossing_found = true;
      curve.crossing_alpha = alpha;
      const auto [buy, wait] = family_profits(tree, alpha);
      curve.crossing_profit = (buy + wait) / 2;
      break;
    }
  }
  return curve;
}

}  // namespace kyle
