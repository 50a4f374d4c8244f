#pragma once

#include "kyle/solver.hpp"

namespace kyle {

/// Floor of an exact rational, as a (small) signed integer.
long rational_floor_long(const Rational& r);

/// Probability measure on [0,1]: a dyadic piecewise-constant density plus
/// finitely many atoms. Covers every continuum input used here exactly.
struct ValueMeasure {
  int density_level = 0;               // density cells [k/2^m, (k+1)/2^m)
  std::vector<Rational> density;       // 2^m values; empty for purely atomic
  std::vector<std::pair<Rational, Rational>> atoms;  // (position, mass)

  void validate() const;
  /// Mass of [lo, hi) plus, optionally, an atom exactly at hi.
  Rational mass(const Rational& lo, const Rational& hi, bool include_hi_atom = false) const;
  /// Integral of v over [lo, hi) (atoms included at their position).
  Rational first_moment(const Rational& lo, const Rational& hi,
                        bool include_hi_atom = false) const;

  static ValueMeasure uniform();
  static ValueMeasure point_mass(const Rational& v);
};

/// Nonnegative dyadic piecewise-constant density on [-1,1], integrating to 1.
struct NoiseDensity {
  int level = 0;                  // cell width 2^-level
  std::vector<Rational> values;   // 2^(level+1) cells from -1 upward

  void validate() const;
  Rational mass(const Rational& lo, const Rational& hi) const;
  static NoiseDensity uniform();
};

/// Single-period game with a continuum of values, trades and noise.
struct ContinuousGame {
  ValueMeasure value_dist;
  NoiseDensity noise_density;
  long trade_lo = -1;  // integer endpoints of E_X, trade_lo < 0 < trade_hi
  long trade_hi = 1;

  void validate() const;
};

/// CLI builtin id "uniform-continuum".
ContinuousGame uniform_continuum_game();

/// The n-th discrete game: values pushed forward under v -> floor(2^n v)/2^n,
/// noise cells collapsed to their left endpoints, the full dyadic trade grid.
/// Zero-mass atoms are pruned so the spec's positivity invariants hold.
struct DiscretizationLevel {
  int n = 0;
  GameSpec spec;
  std::vector<long> state_grid;  // per state: numerator k of the atom k/2^n
  std::vector<long> noise_grid;  // per noise entry
  std::vector<long> trade_grid;  // per trade entry (always the full grid)
};

DiscretizationLevel discretize(const ContinuousGame& game, int n);

/// Piecewise-constant price on dyadic cells of [trade_lo-1, trade_hi+1].
struct StepPriceFunction {
  int level = 0;
  long y_lo = 0;                 // integer left endpoint
  std::vector<Rational> values;  // one per cell

  int cell_count() const { return static_cast<int>(values.size()); }
  const Rational& at(const Rational& y) const;
  StepPriceFunction refined(int finer_level) const;
};

/// Value-cell-indexed trade distributions at a dyadic level (a step Young
/// measure). Index 2^level is the slot for the point v = 1.
struct StepYoungMeasure {
  int level = 0;
  // per cell: (trade-grid numerator at `level`, weight), weights sum to 1
  std::vector<std::vector<std::pair<long, Rational>>> cells;

  int cell_count() const { return static_cast<int>(cells.size()); }
};

StepPriceFunction embed_prices(const DiscretizationLevel& level, const PricingSystem& prices);
StepYoungMeasure embed_strategy(const DiscretizationLevel& level, const BehaviourStrategy& strat);

/// Inverse embeddings onto the discrete spec (for the oracle equivalence).
BehaviourStrategy strategy_from_step(const DiscretizationLevel& level, const GameTree& tree,
                                     const StepYoungMeasure& strat);
PricingSystem prices_from_step(const DiscretizationLevel& level, const GameTree& tree,
                               const StepPriceFunction& prices);

/// Expected utility of the n-th game: floor-discretized values, the true
/// continuous noise integrated exactly against the step prices.
Rational discrete_utility(const DiscretizationLevel& level, const StepYoungMeasure& strat,
                          const StepPriceFunction& prices, const ContinuousGame& game);

/// Same integral with the true (un-floored) value measure.
Rational continuum_utility(const ContinuousGame& game, const StepYoungMeasure& strat,
                           const StepPriceFunction& prices);

/// The cell-conditional approximant of `target` on the level-n grids:
/// trade mass snapped down to grid points, value cells conditioned on nu,
/// delta_0 on nu-null cells.
StepYoungMeasure approximate_strategy(const StepYoungMeasure& target, const ValueMeasure& nu,
                                      int n);

/// max over dyadic sets A (levels <= `a_level`) and monomials x^d, d <=
/// `max_degree`, of the difference of the test integrals of two strategies.
double narrow_proxy_distance(const StepYoungMeasure& a, const StepYoungMeasure& b,
                             const ValueMeasure& nu, int a_level, int max_degree = 3);

struct LevelSolution {
  DiscretizationLevel level;
  EquilibriumCertificate certificate;
  StepYoungMeasure strategy;
  StepPriceFunction prices;
};

struct SolveSequenceResult {
  std::vector<LevelSolution> levels;
  bool truncated = false;
  std::string notice;
};

SolveSequenceResult solve_sequence(const ContinuousGame& game, int n_lo, int n_hi,
                                   const SolverConfig& config,
                                   std::uint64_t outcome_cap = GameSpec::kDefaultOutcomeCap);

/// Forward convex combinations of the price functions on the finest common
/// refinement; uniform weights over the forward window (the whole tail when
/// `window` is 0).
struct CesaroOptions {
  int window = 0;
};

struct CesaroResult {
  std::vector<StepPriceFunction> averaged;
  double raw_oscillation = 0;       // max cellwise spread of the refined inputs
  double averaged_oscillation = 0;  // max cellwise spread of the averages
  std::vector<double> increments;   // sup |A_{j+1} - A_j|, diagnostic of collapse
};

CesaroResult cesaro_prices(const std::vector<StepPriceFunction>& prices,
                           const CesaroOptions& options = {});

struct ConvergenceRow {
  int n = 0;
  Rational utility;           // u^n of the level's certificate, exact
  double cesaro_utility = 0;  // forward average of the utility sequence
  Rational pricing_residual;  // max dyadic-cell pricing defect, all m <= n
  double narrow_proxy = 0;    // distance to the next level's strategy
  double price_oscillation = 0;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  CesaroResult cesaro;
};

ConvergenceReport convergence_report(const ContinuousGame& game,
                                     const std::vector<LevelSolution>& levels,
                                     const CesaroOptions& options = {});

/// Exact rational-pricing defect of one level on every dyadic flow cell of
/// level m <= n; zero when the prices are Bayes-rational for the strategy.
Rational pricing_residual_on_cells(const ContinuousGame& game, const LevelSolution& solution);

}  // namespace kyle
