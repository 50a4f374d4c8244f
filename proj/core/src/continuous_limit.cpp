#include "kyle/continuous_limit.hpp"

#include <algorithm>
#include <map>

namespace kyle {

namespace {

Rational pow2(int n) { return Rational(std::int64_t(1) << n); }

long floor_div(long a, long b) {
  long q = a / b;
  if (a % b != 0 && (a < 0) != (b < 0)) --q;
  return q;
}

}  // namespace

long rational_floor_long(const Rational& r) {
  boost::multiprecision::mpz_int q = numerator(r) / denominator(r);
  if (numerator(r) < 0 && q * denominator(r) != numerator(r)) --q;
  return q.convert_to<long>();
}

// --- ValueMeasure -----------------------------------------------------------

void ValueMeasure::validate() const {
  Rational total = 0;
  if (!density.empty()) {
    if (density_level < 0 || density_level > 24) throw SpecError("value density level out of range");
    if (static_cast<long>(density.size()) != (1L << density_level)) {
      throw SpecError("value density needs 2^level cells");
    }
    for (const auto& d : density) {
      if (d < 0) throw SpecError("value density must be nonnegative");
      total += d / pow2(density_level);
    }
  }
  for (const auto& [p, m] : atoms) {
    if (p < 0 || p > 1) throw SpecError("value atom outside [0,1]");
    if (m <= 0) throw SpecError("value atom mass must be positive");
    total += m;
  }
  if (total != 1) throw SpecError("value measure must have total mass exactly 1");
}

Rational ValueMeasure::mass(const Rational& lo, const Rational& hi, bool include_hi_atom) const {
  Rational out = 0;
  if (!density.empty()) {
    const Rational w = 1 / pow2(density_level);
    for (std::size_t j = 0; j < density.size(); ++j) {
      if (density[j] == 0) continue;
      const Rational a = std::max(lo, Rational(static_cast<long>(j)) * w);
      const Rational b = std::min(hi, Rational(static_cast<long>(j) + 1) * w);
      if (b > a) out += density[j] * (b - a);
    }
  }
  for (const auto& [p, m] : atoms) {
    if ((p >= lo && p < hi) || (include_hi_atom && p == hi)) out += m;
  }
  return out;
}

Rational ValueMeasure::first_moment(const Rational& lo, const Rational& hi,
                                    bool include_hi_atom) const {
  Rational out = 0;
  if (!density.empty()) {
    const Rational w = 1 / pow2(density_level);
    for (std::size_t j = 0; j < density.size(); ++j) {
      if (density[j] == 0) continue;
      const Rational a = std::max(lo, Rational(static_cast<long>(j)) * w);
      const Rational b = std::min(hi, Rational(static_cast<long>(j) + 1) * w);
      if (b > a) out += density[j] * (b * b - a * a) / 2;
    }
  }
  for (const auto& [p, m] : atoms) {
    if ((p >= lo && p < hi) || (include_hi_atom && p == hi)) out += p * m;
  }
  return out;
}

ValueMeasure ValueMeasure::uniform() {
  ValueMeasure nu;
  nu.density_level = 0;
  nu.density = {Rational(1)};
  return nu;
}

ValueMeasure ValueMeasure::point_mass(const Rational& v) {
  ValueMeasure nu;
  nu.atoms = {{v, Rational(1)}};
  return nu;
}

// --- NoiseDensity ------------------------------------------------------------

void NoiseDensity::validate() const {
  if (level < 0 || level > 24) throw SpecError("noise density level out of range");
  if (static_cast<long>(values.size()) != (2L << level)) {
    throw SpecError("noise density needs 2^(level+1) cells over [-1,1]");
  }
  Rational total = 0;
  for (const auto& v : values) {
    if (v < 0) throw SpecError("noise density must be nonnegative");
    total += v / pow2(level);
  }
  if (total != 1) throw SpecError("noise density must integrate to exactly 1");
}

Rational NoiseDensity::mass(const Rational& lo, const Rational& hi) const {
  Rational out = 0;
  const Rational w = 1 / pow2(level);
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (values[j] == 0) continue;
    const Rational a = std::max(lo, Rational(-1) + Rational(static_cast<long>(j)) * w);
    const Rational b = std::min(hi, Rational(-1) + Rational(static_cast<long>(j) + 1) * w);
    if (b > a) out += values[j] * (b - a);
  }
  return out;
}

NoiseDensity NoiseDensity::uniform() {
  NoiseDensity g;
  g.level = 0;
  g.values = {Rational(1, 2), Rational(1, 2)};
  return g;
}

void ContinuousGame::validate() const {
  value_dist.validate();
  noise_density.validate();
  if (!(trade_lo < 0) || !(trade_hi > 0)) {
    throw SpecError("trade interval must have integer endpoints with lo < 0 < hi");
  }
}

ContinuousGame uniform_continuum_game() {
  ContinuousGame game;
  game.value_dist = ValueMeasure::uniform();
  game.noise_density = NoiseDensity::uniform();
  game.trade_lo = -1;
  game.trade_hi = 1;
  return game;
}

// --- discretization ----------------------------------------------------------

DiscretizationLevel discretize(const ContinuousGame& game, int n) {
  game.validate();
  if (n < 1 || n > 24) throw SpecError("grid exponent out of range");
  if (n < game.noise_density.level) {
    throw SpecError("noise density is not representable at level " + std::to_string(n) +
                    "; refine the grid");
  }
  DiscretizationLevel level;
  level.n = n;
  const Rational w = 1 / pow2(n);

  // value atoms: floor pushforward, descending value order for the spec
  std::vector<std::pair<long, Rational>> states;  // (grid numerator, mass)
  {
    const Rational at_one = game.value_dist.mass(1, 1, /*include_hi_atom=*/true);
    if (at_one > 0) states.push_back({1L << n, at_one});
    for (long k = (1L << n) - 1; k >= 0; --k) {
      const Rational m = game.value_dist.mass(Rational(k) * w, Rational(k + 1) * w);
      if (m > 0) states.push_back({k, m});
    }
  }
  // noise atoms: each cell's mass collapses to its left endpoint
  std::vector<std::pair<long, Rational>> noise;
  for (long k = -(1L << n); k < (1L << n); ++k) {
    const Rational m = game.noise_density.mass(Rational(k) * w, Rational(k + 1) * w);
    if (m > 0) noise.push_back({k, m});
  }

  GameSpec spec;
  spec.horizon = 1;
  for (const auto& [k, m] : states) {
    spec.true_values.push_back(Rational(k) * w);
    spec.prior.push_back(m);
    level.state_grid.push_back(k);
  }
  spec.partitions.resize(1);
  for (int s = 0; s < static_cast<int>(states.size()); ++s) spec.partitions[0].push_back({s});
  for (const auto& [k, m] : noise) {
    spec.noise_support.push_back(Rational(k) * w);
    spec.noise_dist.push_back(m);
    level.noise_grid.push_back(k);
  }
  for (long k = game.trade_lo << n; k <= game.trade_hi << n; ++k) {
    spec.trade_support.push_back(Rational(k) * w);
    level.trade_grid.push_back(k);
  }
  spec.validate();
  level.spec = std::move(spec);
  return level;
}

// --- step representations ----------------------------------------------------

const Rational& StepPriceFunction::at(const Rational& y) const {
  const long idx = rational_floor_long((y - Rational(y_lo)) * pow2(level));
  if (idx < 0 || idx >= static_cast<long>(values.size())) {
    throw DomainError("price query outside the flow interval");
  }
  return values[static_cast<std::size_t>(idx)];
}

StepPriceFunction StepPriceFunction::refined(int finer_level) const {
  if (finer_level < level) throw DomainError("cannot refine to a coarser level");
  StepPriceFunction out;
  out.level = finer_level;
  out.y_lo = y_lo;
  const long rep = 1L << (finer_level - level);
  out.values.reserve(values.size() * rep);
  for (const auto& v : values) {
    for (long r = 0; r < rep; ++r) out.values.push_back(v);
  }
  return out;
}

StepPriceFunction embed_prices(const DiscretizationLevel& level, const PricingSystem& prices) {
  GameTree tree(level.spec);
  StepPriceFunction sp;
  sp.level = level.n;
  sp.y_lo = -1 + (level.trade_grid.front() >> level.n);  // trade_lo - 1
  const long lo_num = (sp.y_lo) << level.n;
  const long cells = ((level.trade_grid.back() >> level.n) + 1 - sp.y_lo) << level.n;
  sp.values.assign(cells, Rational(0));
  std::vector<char> defined(cells, 0);
  const Rational w = 1 / pow2(level.n);
  for (std::size_t ey = 0; ey < tree.flow_values().size(); ++ey) {
    if (!prices.defined(1, ey)) continue;
    const long idx = rational_floor_long((tree.flow_values()[ey] - Rational(sp.y_lo)) * pow2(level.n));
    sp.values[idx] = prices.value[0][ey];
    defined[idx] = 1;
  }
  (void)lo_num;
  (void)w;
  // carry the nearest defined value into gaps (diagnostic continuity only)
  Rational carry = 0;
  bool have = false;
  for (long i = 0; i < cells; ++i) {
    if (defined[i]) {
      carry = sp.values[i];
      have = true;
    } else if (have) {
      sp.values[i] = carry;
    }
  }
  for (long i = cells - 1; i >= 0; --i) {
    if (defined[i]) {
      carry = sp.values[i];
      have = true;
    } else if (have) {
      sp.values[i] = carry;
    }
  }
  return sp;
}

StepYoungMeasure embed_strategy(const DiscretizationLevel& level, const BehaviourStrategy& strat) {
  StepYoungMeasure ym;
  ym.level = level.n;
  ym.cells.assign((1L << level.n) + 1, {});
  for (std::size_t s = 0; s < level.state_grid.size(); ++s) {
    auto& cell = ym.cells[level.state_grid[s]];
    for (std::size_t xi = 0; xi < level.trade_grid.size(); ++xi) {
      const Rational& p = strat.table[s][xi];
      if (p != 0) cell.push_back({level.trade_grid[xi], p});
    }
  }
  for (auto& cell : ym.cells) {
    if (cell.empty()) cell.push_back({0, Rational(1)});  // nu-null cell: delta_0
  }
  return ym;
}

BehaviourStrategy strategy_from_step(const DiscretizationLevel& level, const GameTree& tree,
                                     const StepYoungMeasure& strat) {
  if (strat.level != level.n) throw DomainError("strategy level does not match the game level");
  BehaviourStrategy out;
  out.table.assign(tree.num_xnodes(),
                   std::vector<Rational>(level.spec.num_trades(), Rational(0)));
  const long lo = level.trade_grid.front();
  for (std::size_t s = 0; s < level.state_grid.size(); ++s) {
    for (const auto& [g, w] : strat.cells[level.state_grid[s]]) {
      out.table[s][g - lo] += w;
    }
  }
  return out;
}

PricingSystem prices_from_step(const DiscretizationLevel& level, const GameTree& tree,
                               const StepPriceFunction& prices) {
  PricingSystem ps = empty_pricing<Rational>(tree, /*complete=*/true);
  for (std::size_t ey = 0; ey < tree.flow_values().size(); ++ey) {
    ps.set(1, ey, prices.at(tree.flow_values()[ey]));
  }
  return ps;
}

// --- utilities ----------------------------------------------------------------

namespace {

// sum over noise cells of zeta([cell]) * S(x + cell-left), exact because the
// step price is constant on each level-n flow cell
Rational average_step_price(const ContinuousGame& game, const StepPriceFunction& prices, int n,
                            long trade_num) {
  const Rational w = 1 / pow2(n);
  Rational total = 0;
  for (long j = -(1L << n); j < (1L << n); ++j) {
    const Rational m = game.noise_density.mass(Rational(j) * w, Rational(j + 1) * w);
    if (m == 0) continue;
    total += m * prices.at(Rational(trade_num + j) * w);
  }
  return total;
}

}  // namespace

Rational discrete_utility(const DiscretizationLevel& level, const StepYoungMeasure& strat,
                          const StepPriceFunction& prices, const ContinuousGame& game) {
  if (strat.level != level.n || prices.level != level.n) {
    throw DomainError("step inputs must live on the level's grid");
  }
  const int n = level.n;
  const Rational w = 1 / pow2(n);
  std::map<long, Rational> price_cache;
  Rational total = 0;
  for (long k = 0; k <= (1L << n); ++k) {
    const bool slot_one = k == (1L << n);
    const Rational m = slot_one ? game.value_dist.mass(1, 1, true)
                                : game.value_dist.mass(Rational(k) * w, Rational(k + 1) * w);
    if (m == 0) continue;
    const Rational floor_value = Rational(k) * w;  // equals 1 at the slot
    for (const auto& [g, wt] : strat.cells[k]) {
      if (g == 0 || wt == 0) continue;
      auto it = price_cache.find(g);
      if (it == price_cache.end()) {
        it = price_cache.emplace(g, average_step_price(game, prices, n, g)).first;
      }
      total += m * wt * (Rational(g) * w) * (floor_value - it->second);
    }
  }
  return total;
}

Rational continuum_utility(const ContinuousGame& game, const StepYoungMeasure& strat,
                           const StepPriceFunction& prices) {
  const int n = strat.level;
  if (prices.level != n) throw DomainError("step inputs must share a level");
  const Rational w = 1 / pow2(n);
  std::map<long, Rational> price_cache;
  Rational total = 0;
  for (long k = 0; k <= (1L << n); ++k) {
    const bool slot_one = k == (1L << n);
    const Rational m = slot_one ? game.value_dist.mass(1, 1, true)
                                : game.value_dist.mass(Rational(k) * w, Rational(k + 1) * w);
    if (m == 0) continue;
    const Rational fm = slot_one ? m : game.value_dist.first_moment(Rational(k) * w,
                                                                    Rational(k + 1) * w);
    for (const auto& [g, wt] : strat.cells[k]) {
      if (g == 0 || wt == 0) continue;
      auto it = price_cache.find(g);
      if (it == price_cache.end()) {
        it = price_cache.emplace(g, average_step_price(game, prices, n, g)).first;
      }
      total += wt * (Rational(g) * w) * (fm - m * it->second);
    }
  }
  return total;
}

// --- approximants -------------------------------------------------------------

StepYoungMeasure approximate_strategy(const StepYoungMeasure& target, const ValueMeasure& nu,
                                      int n) {
  if (n < 1 || n > 24) throw DomainError("grid exponent out of range");
  const int m = target.level;
  StepYoungMeasure out;
  out.level = n;
  out.cells.assign((1L << n) + 1, {});
  const Rational wn = 1 / pow2(n);
  const Rational wm = 1 / pow2(m);

  auto snap = [&](long j) {  // level-m trade numerator -> level-n numerator of floor(2^n x)
    if (n >= m) return j << (n - m);
    return floor_div(j, 1L << (m - n));
  };

  for (long k = 0; k < (1L << n); ++k) {
    const Rational nu_cell = nu.mass(Rational(k) * wn, Rational(k + 1) * wn);
    auto& cell = out.cells[k];
    if (nu_cell == 0) {
      cell.push_back({0, Rational(1)});
      continue;
    }
    std::map<long, Rational> wt;
    if (n >= m) {
      const auto& src = target.cells[k >> (n - m)];
      for (const auto& [j, w] : src) wt[snap(j)] += nu_cell * w;
    } else {
      for (long c = k << (m - n); c < (k + 1) << (m - n); ++c) {
        const Rational nu_sub = nu.mass(Rational(c) * wm, Rational(c + 1) * wm);
        if (nu_sub == 0) continue;
        for (const auto& [j, w] : target.cells[c]) wt[snap(j)] += nu_sub * w;
      }
    }
    for (auto& [j, w] : wt) cell.push_back({j, w / nu_cell});
  }
  // the v = 1 slot conditions on the atom at 1
  if (nu.mass(1, 1, true) > 0) {
    std::map<long, Rational> wt;
    for (const auto& [j, w] : target.cells[1L << m]) wt[snap(j)] += w;
    for (auto& [j, w] : wt) out.cells[1L << n].push_back({j, w});
  } else {
    out.cells[1L << n].push_back({0, Rational(1)});
  }
  return out;
}

double narrow_proxy_distance(const StepYoungMeasure& a, const StepYoungMeasure& b,
                             const ValueMeasure& nu, int a_level, int max_degree) {
  const int L = std::max(a.level, b.level);
  const Rational wL = 1 / pow2(L);

  // per refined cell and degree: nu(cell) * sum_j w_j x_j^d
  auto cell_moments = [&](const StepYoungMeasure& ym, long cell_L, int degree) {
    const long src = ym.level == L ? cell_L : (cell_L >> (L - ym.level));
    const Rational nu_cell = nu.mass(Rational(cell_L) * wL, Rational(cell_L + 1) * wL);
    if (nu_cell == 0) return Rational(0);
    Rational s = 0;
    const Rational wy = 1 / pow2(ym.level);
    for (const auto& [j, w] : ym.cells[src]) {
      Rational x = Rational(j) * wy;
      Rational p = 1;
      for (int d = 0; d < degree; ++d) p *= x;
      s += w * p;
    }
    return Rational(nu_cell * s);
  };

  double worst = 0;
  for (int d = 0; d <= max_degree; ++d) {
    std::vector<Rational> diff(1L << L);
    for (long c = 0; c < (1L << L); ++c) {
      diff[c] = cell_moments(a, c, d) - cell_moments(b, c, d);
    }
    for (int m = 0; m <= std::min(a_level, L); ++m) {
      const long span = 1L << (L - m);
      for (long k = 0; k < (1L << m); ++k) {
        Rational s = 0;
        for (long c = k * span; c < (k + 1) * span; ++c) s += diff[c];
        worst = std::max(worst, std::abs(to_double(s)));
      }
    }
  }
  return worst;
}

// --- sequences ----------------------------------------------------------------

SolveSequenceResult solve_sequence(const ContinuousGame& game, int n_lo, int n_hi,
                                   const SolverConfig& config, std::uint64_t outcome_cap) {
  if (n_lo < 1 || n_hi < n_lo) throw PreconditionError("empty or invalid level range");
  SolveSequenceResult result;
  for (int n = n_lo; n <= n_hi; ++n) {
    DiscretizationLevel level = discretize(game, n);
    try {
      GameTree tree(level.spec, outcome_cap);
      LevelSolution sol;
      sol.certificate = sequential_equilibrium(tree, config);
      sol.strategy = embed_strategy(level, sol.certificate.strategy);
      sol.prices = embed_prices(level, sol.certificate.prices);
      sol.level = std::move(level);
      result.levels.push_back(std::move(sol));
    } catch (const ResourceCapError& e) {
      result.truncated = true;
      result.notice = "level " + std::to_string(n) + " exceeds the tree cap: " + e.what();
      break;
    }
  }
  return result;
}

CesaroResult cesaro_prices(const std::vector<StepPriceFunction>& prices,
                           const CesaroOptions& options) {
  if (prices.size() < 2) throw PreconditionError("forward averaging needs at least two levels");
  int finest = 0;
  for (const auto& p : prices) finest = std::max(finest, p.level);
  std::vector<StepPriceFunction> refined;
  refined.reserve(prices.size());
  for (const auto& p : prices) refined.push_back(p.refined(finest));
  const std::size_t cells = refined.front().values.size();
  for (const auto& p : refined) {
    if (p.values.size() != cells || p.y_lo != refined.front().y_lo) {
      throw DomainError("price functions live on different flow intervals");
    }
  }

  CesaroResult result;
  for (std::size_t c = 0; c < cells; ++c) {
    double lo = to_double(refined.front().values[c]), hi = lo;
    for (const auto& p : refined) {
      const double v = to_double(p.values[c]);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    result.raw_oscillation = std::max(result.raw_oscillation, hi - lo);
  }

  const std::size_t count = prices.size();
  for (std::size_t j = 0; j < count; ++j) {
    const std::size_t end =
        options.window > 0 ? std::min(count, j + static_cast<std::size_t>(options.window)) : count;
    StepPriceFunction avg;
    avg.level = finest;
    avg.y_lo = refined.front().y_lo;
    avg.values.assign(cells, Rational(0));
    for (std::size_t k = j; k < end; ++k) {
      for (std::size_t c = 0; c < cells; ++c) avg.values[c] += refined[k].values[c];
    }
    const Rational norm = static_cast<long>(end - j);
    for (auto& v : avg.values) v /= norm;
    result.averaged.push_back(std::move(avg));
  }
  for (std::size_t c = 0; c < cells; ++c) {
    double lo = to_double(result.averaged.front().values[c]), hi = lo;
    for (const auto& p : result.averaged) {
      const double v = to_double(p.values[c]);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    result.averaged_oscillation = std::max(result.averaged_oscillation, hi - lo);
  }
  for (std::size_t j = 0; j + 1 < result.averaged.size(); ++j) {
    double inc = 0;
    for (std::size_t c = 0; c < cells; ++c) {
      inc = std::max(inc, std::abs(to_double(result.averaged[j + 1].values[c] -
                                             result.averaged[j].values[c])));
    }
    result.increments.push_back(inc);
  }
  return result;
}

Rational pricing_residual_on_cells(const ContinuousGame& game, const LevelSolution& solution) {
  const int n = solution.level.n;
  const GameSpec& spec = solution.level.spec;
  const Rational w = 1 / pow2(n);
  const long lo_num = (solution.prices.y_lo) << n;
  const long cells = static_cast<long>(solution.prices.values.size());

  // per level-n flow cell: integral of (S - floor value) over the joint law
  std::vector<Rational> defect(cells, Rational(0));
  for (int s = 0; s < spec.num_states(); ++s) {
    for (int xi = 0; xi < spec.num_trades(); ++xi) {
      const Rational& weight = solution.certificate.strategy.table[s][xi];
      if (weight == 0) continue;
      for (int zi = 0; zi < spec.num_noise(); ++zi) {
        const Rational mass = spec.prior[s] * weight * spec.noise_dist[zi];
        const Rational y = spec.trade_support[xi] + spec.noise_support[zi];
        const long cell = rational_floor_long((y - Rational(solution.prices.y_lo)) * pow2(n));
        defect[cell] += mass * (solution.prices.values[cell] - spec.true_values[s]);
      }
    }
  }
  (void)lo_num;
  (void)w;

  Rational worst = 0;
  for (int m = 0; m <= n; ++m) {
    const long span = 1L << (n - m);
    for (long k = 0; k * span < cells; ++k) {
      Rational sum = 0;
      for (long c = k * span; c < std::min((k + 1) * span, cells); ++c) sum += defect[c];
      if (sum < 0) sum = -sum;
      if (sum > worst) worst = sum;
    }
  }
  return worst;
}

ConvergenceReport convergence_report(const ContinuousGame& game,
                                     const std::vector<LevelSolution>& levels,
                                     const CesaroOptions& options) {
  if (levels.empty()) throw PreconditionError("no levels to report on");
  ConvergenceReport report;

  std::vector<StepPriceFunction> prices;
  for (const auto& sol : levels) prices.push_back(sol.prices);
  if (prices.size() >= 2) report.cesaro = cesaro_prices(prices, options);

  std::vector<Rational> utilities;
  for (const auto& sol : levels) {
    utilities.push_back(discrete_utility(sol.level, sol.strategy, sol.prices, game));
  }

  for (std::size_t j = 0; j < levels.size(); ++j) {
    ConvergenceRow row;
    row.n = levels[j].level.n;
    row.utility = utilities[j];
    const std::size_t end =
        options.window > 0 ? std::min(levels.size(), j + static_cast<std::size_t>(options.window))
                           : levels.size();
    Rational avg = 0;
    for (std::size_t k = j; k < end; ++k) avg += utilities[k];
    row.cesaro_utility = to_double(avg / static_cast<long>(end - j));
    row.pricing_residual = pricing_residual_on_cells(game, levels[j]);
    if (j + 1 < levels.size()) {
      row.narrow_proxy = narrow_proxy_distance(levels[j].strategy, levels[j + 1].strategy,
                                               game.value_dist, levels[j].level.n);
    }
    if (j < report.cesaro.increments.size()) {
      row.price_oscillation = report.cesaro.increments[j];
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace kyle
