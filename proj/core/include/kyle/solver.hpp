#pragma once

#include "kyle/verifier.hpp"

namespace kyle {

/// Minimum-weight constraint of the perturbed game: every trade is chosen
/// with probability at least eps, which requires eps * |E_X| < 1.
struct EpsilonConstraint {
  Rational eps;
  EpsilonConstraint(Rational e, int num_trades) : eps(std::move(e)) {
    if (!(eps > 0) || !(eps * num_trades < 1)) {
      throw PreconditionError("perturbation weight must satisfy 0 < eps * |E_X| < 1");
    }
  }
};

struct SolverConfig {
  enum class Mode { Homotopy, SupportEnumeration, Both };
  Mode mode = Mode::Homotopy;

  /// Strictly decreasing perturbation levels; empty means the default
  /// schedule min(1/(2|E_X|), 2^-(k+2)) for k = 0..20.
  std::vector<double> epsilon_schedule;
  double damping = 0.5;
  int max_iters = 4000;
  double fixed_point_tol = 1e-12;

  double support_grid_step = 1e-3;    // scan resolution for indifference roots
  double support_threshold = 1e-8;    // weight below which an action is off-support
  std::uint64_t support_profile_cap = 250000;

  static std::vector<double> default_schedule(int num_trades);
  void validate() const;
};

/// One level of the perturbation path. Beliefs are stored as the exact
/// Bayes conditionals of the (dyadic-rationalized) strategy so consistency
/// can later be re-verified with zero arithmetic slack.
struct HomotopyTraceEntry {
  double eps = 0;
  BehaviourStrategyF strategy;
  BeliefSystem beliefs;
  double residual = 0;           // local-optimality residual within the constrained simplex
  double extrapolated_gain = 0;  // deviation gain of the clamped strategy in the full simplex
  bool converged = false;
  int sweeps = 0;
};

struct EquilibriumCertificate {
  BehaviourStrategy strategy;  // exact rationals
  BeliefSystem beliefs;        // total map; exact Bayes on reached flows
  PricingSystem prices;        // complete, induced by the beliefs
  std::vector<HomotopyTraceEntry> trace;
  std::vector<std::string> flags;  // "unconverged", "divergent-trace", ...
  std::string origin;              // "homotopy" or "support-enumeration"

  bool flagged(const std::string& f) const {
    for (const auto& g : flags) {
      if (g == f) return true;
    }
    return false;
  }
};

struct FixedPointResult {
  BehaviourStrategyF strategy;
  double residual = 0;
  bool converged = false;
  int sweeps = 0;
};

/// Exact purified best reply at one node: suboptimal trades receive exactly
/// eps, the remainder is split uniformly over the argmax set.
std::vector<Rational> best_reply_eps(const GameTree& tree, const BehaviourStrategy& strat,
                                     const BeliefSystem& beliefs, const NodeKey& node,
                                     const Rational& eps);
std::vector<Rational> best_reply_eps(const GameTree& tree, const BehaviourStrategy& strat,
                                     const BeliefSystem& beliefs, int xnode, const Rational& eps);

/// Damped simultaneous best response within the eps-constrained simplex,
/// with a logit fallback on detected cycles and an active-set secant polish.
/// Non-convergence returns the best iterate with converged = false.
FixedPointResult fixed_point_eps(const GameTree& tree, double eps,
                                 const BehaviourStrategyF* init, const SolverConfig& config);

/// Follows the perturbation schedule with warm starts, extrapolates to the
/// unperturbed game, and assembles the certificate with its trace.
EquilibriumCertificate sequential_equilibrium(const GameTree& tree, const SolverConfig& config);

/// Enumerates candidate supports consistent with demand monotone in the
/// value, solves the indifference systems, and returns all verified
/// equilibria. Requires a single-period game, or the two-period binary
/// shape where a one-parameter indifference bisection is used.
std::vector<EquilibriumCertificate> support_enumeration_single_period(const GameTree& tree,
                                                                      const SolverConfig& config);

/// True for the two-period binary-value shape solved by the one-parameter
/// specialization (full revelation, E_X = {0,1}, symmetric 3-point noise).
bool is_two_period_binary_shape(const GameSpec& spec);

struct ProfitCurveRow {
  double alpha;
  double profit_buy;
  double profit_wait;
};
struct ProfitCurve {
  std::vector<ProfitCurveRow> rows;
  bool crossing_found = false;
  double crossing_alpha = 0;
  double crossing_profit = 0;
};

/// First-round profits of the high-value insider for both pure first moves,
/// with optimal continuation, as a function of the mixing weight assumed by
/// the market maker. Requires the two-period binary shape.
ProfitCurve profit_curve(const GameTree& tree, double grid_step);

/// Deviation gain of a float strategy against its own reached-flow rational
/// prices, undefined flows valued adversarially (pessimistic completion).
double float_deviation_gain(const GameTree& tree, const BehaviourStrategyF& strat);

}  // namespace kyle
