#include "kyle/verifier.hpp"

#include <algorithm>
#include <sstream>

namespace kyle {

namespace {

std::string fmt(const Rational& r) { return format_rational(r); }

// Supported trades per round-1 X-node above a weight threshold.
std::vector<std::vector<int>> supports(const GameTree& tree, const BehaviourStrategy& strat,
                                       const Rational& thr) {
  std::vector<std::vector<int>> out(tree.xnode_end(1));
  for (int id = tree.xnode_begin(1); id < tree.xnode_end(1); ++id) {
    for (int xi = 0; xi < tree.spec().num_trades(); ++xi) {
      if (strat.table[id][xi] > thr) out[id].push_back(xi);
    }
  }
  return out;
}

// Average execution price of trade xi: sum_z zeta(z) S(x+z). Requires the
// prices to be defined at every probed flow.
Rational average_price(const GameTree& tree, const PricingSystem& prices, int xi) {
  Rational total = 0;
  for (int zi = 0; zi < tree.spec().num_noise(); ++zi) {
    const auto code = static_cast<std::uint64_t>(tree.flow_of(xi, zi));
    total += tree.spec().noise_dist[zi] * price_at(tree, prices, 1, code);
  }
  return total;
}

}  // namespace

GridCheckResult check_assumption_grid(const GameSpec& spec) {
  GridCheckResult result;
  const Rational lo = *std::min_element(spec.noise_support.begin(), spec.noise_support.end());
  const Rational hi = *std::max_element(spec.noise_support.begin(), spec.noise_support.end());
  for (const auto& x1 : spec.trade_support) {
    for (const auto& z1 : spec.noise_support) {
      for (const auto& x2 : spec.trade_support) {
        const Rational d = x1 + z1 - x2;
        if (d < lo || d > hi) continue;  // outside conv(E_Z)
        if (std::find(spec.noise_support.begin(), spec.noise_support.end(), d) ==
            spec.noise_support.end()) {
          result.pass = false;
          result.witness = std::array<Rational, 3>{x1, z1, x2};
          return result;
        }
      }
    }
  }
  return result;
}

StructureReport check_structure_lemma(const GameTree& tree, const BehaviourStrategy& strat,
                                      const PricingSystem& prices,
                                      const Rational& support_threshold, const Rational& price_tol,
                                      bool claimed_equilibrium) {
  if (tree.spec().horizon != 1) {
    throw PreconditionError("structure checks apply to single-period games");
  }
  StructureReport report;
  report.annotated_non_equilibrium = !claimed_equilibrium;
  const GameSpec& spec = tree.spec();
  const int K = spec.num_trades();
  const auto supp = supports(tree, strat, support_threshold);

  // (i) demand nondecreasing in the conditional value of the node's cell
  CheckResult ci{"i"};
  for (int a = tree.xnode_begin(1); a < tree.xnode_end(1) && ci.pass; ++a) {
    for (int b = tree.xnode_begin(1); b < tree.xnode_end(1) && ci.pass; ++b) {
      const Rational va = tree.cell_value_mean(1, tree.xnode(a).cell);
      const Rational vb = tree.cell_value_mean(1, tree.xnode(b).cell);
      if (!(va > vb)) continue;
      if (supp[a].empty() || supp[b].empty()) continue;
      const Rational& hi_min = spec.trade_support[supp[a].front()];
      const Rational& lo_max = spec.trade_support[supp[b].back()];
      if (hi_min < lo_max) {
        ci.pass = false;
        std::ostringstream os;
        os << "value " << fmt(va) << " trades " << fmt(hi_min) << " below value " << fmt(vb)
           << " trading " << fmt(lo_max);
        ci.witness = os.str();
      }
    }
  }
  report.checks.push_back(ci);

  // (ii) gap-separated orders execute at the trading value on average
  CheckResult cii{"ii"};
  auto no_support_in = [&](const Rational& lo, const Rational& hi, bool lo_open, bool hi_open) {
    for (int id = tree.xnode_begin(1); id < tree.xnode_end(1); ++id) {
      for (int xi : supp[id]) {
        const Rational& x = spec.trade_support[xi];
        const bool above = lo_open ? x > lo : x >= lo;
        const bool below = hi_open ? x < hi : x <= hi;
        if (above && below) return false;
      }
    }
    return true;
  };
  for (int xi = 0; xi < K && cii.pass; ++xi) {
    const Rational& x = spec.trade_support[xi];
    if (x > 0 && no_support_in(x - 2, x, false, true)) {
      for (int id = tree.xnode_begin(1); id < tree.xnode_end(1) && cii.pass; ++id) {
        for (int xj : supp[id]) {
          if (spec.trade_support[xj] < x) continue;
          const Rational v = tree.cell_value_mean(1, tree.xnode(id).cell);
          Rational diff = average_price(tree, prices, xj) - v;
          if (diff < 0) diff = -diff;
          if (diff > price_tol) {
            cii.pass = false;
            cii.witness = "buy order " + fmt(spec.trade_support[xj]) +
                          " averages off the trading value " + fmt(v);
            break;
          }
        }
      }
    }
    if (x < 0 && no_support_in(x, x + 2, true, false)) {
      for (int id = tree.xnode_begin(1); id < tree.xnode_end(1) && cii.pass; ++id) {
        for (int xj : supp[id]) {
          if (spec.trade_support[xj] > x) continue;
          const Rational v = tree.cell_value_mean(1, tree.xnode(id).cell);
          Rational diff = average_price(tree, prices, xj) - v;
          if (diff < 0) diff = -diff;
          if (diff > price_tol) {
            cii.pass = false;
            cii.witness = "sell order " + fmt(spec.trade_support[xj]) +
                          " averages off the trading value " + fmt(v);
            break;
          }
        }
      }
    }
  }
  report.checks.push_back(cii);

  // reached flows and their prices
  const auto fd = flow_distribution(tree, strat);
  std::vector<int> reached;  // E_Y indices with positive marginal
  for (std::uint64_t code = 0; code < tree.flow_card(1); ++code) {
    if (fd.marginal[0][code] > 0) reached.push_back(static_cast<int>(code));
  }

  // (iii) S(y1) <= S(y2) for reached y2 >= y1 + 2
  CheckResult ciii{"iii"};
  for (std::size_t a = 0; a < reached.size() && ciii.pass; ++a) {
    for (std::size_t b = 0; b < reached.size(); ++b) {
      const Rational& y1 = tree.flow_values()[reached[a]];
      const Rational& y2 = tree.flow_values()[reached[b]];
      if (y2 < y1 + 2) continue;
      const Rational s1 = price_at(tree, prices, 1, static_cast<std::uint64_t>(reached[a]));
      const Rational s2 = price_at(tree, prices, 1, static_cast<std::uint64_t>(reached[b]));
      if (s1 > s2 + price_tol) {
        ciii.pass = false;
        ciii.witness = "S(" + fmt(y1) + ")=" + fmt(s1) + " > S(" + fmt(y2) + ")=" + fmt(s2);
        break;
      }
    }
  }
  report.checks.push_back(ciii);

  // (iv) extreme prices propagate along reached flows
  CheckResult civ{"iv"};
  const Rational v_top = spec.true_values.front();
  const Rational v_bot = spec.true_values.back();
  for (std::size_t a = 0; a < reached.size() && civ.pass; ++a) {
    for (std::size_t b = 0; b < reached.size(); ++b) {
      const Rational& y1 = tree.flow_values()[reached[a]];
      const Rational& y2 = tree.flow_values()[reached[b]];
      if (y2 < y1) continue;
      const Rational s1 = price_at(tree, prices, 1, static_cast<std::uint64_t>(reached[a]));
      const Rational s2 = price_at(tree, prices, 1, static_cast<std::uint64_t>(reached[b]));
      Rational top_gap = v_top - s1;
      if (top_gap < 0) top_gap = -top_gap;
      if (top_gap <= price_tol && v_top - s2 > price_tol) {
        civ.pass = false;
        civ.witness = "S(" + fmt(y1) + ") at the top value but S(" + fmt(y2) + ")=" + fmt(s2);
        break;
      }
      Rational bot_gap = s2 - v_bot;
      if (bot_gap < 0) bot_gap = -bot_gap;
      if (bot_gap <= price_tol && s1 - v_bot > price_tol) {
        civ.pass = false;
        civ.witness = "S(" + fmt(y2) + ") at the bottom value but S(" + fmt(y1) + ")=" + fmt(s1);
        break;
      }
    }
  }
  report.checks.push_back(civ);
  return report;
}

StructureReport check_order_bound(const GameTree& tree, const BehaviourStrategy& strat,
                                  const PricingSystem& prices, const Rational& support_threshold,
                                  const Rational& price_tol) {
  StructureReport report;
  const GameSpec& spec = tree.spec();
  CheckResult pre{"applicability"};
  const bool has_zero = tree.spec().horizon == 1 &&
                        std::find(spec.trade_support.begin(), spec.trade_support.end(),
                                  Rational(0)) != spec.trade_support.end();
  bool noise_ok = true;
  bool has_plus = false, has_minus = false;
  for (const auto& z : spec.noise_support) {
    if (z < -1 || z > 1) noise_ok = false;
    if (z == 1) has_plus = true;
    if (z == -1) has_minus = true;
  }
  if (!has_zero || !noise_ok || !has_plus || !has_minus) {
    pre.applicable = false;
    pre.pass = true;
    pre.witness = "requires T=1, 0 in E_X and {-1,1} within E_Z in [-1,1]";
    report.checks.push_back(pre);
    return report;
  }

  const auto supp = supports(tree, strat, support_threshold);
  auto side_check = [&](bool buy_side) {
    CheckResult c{buy_side ? "buy-bound" : "sell-bound"};
    Rational zeta_edge = 0;
    for (int zi = 0; zi < spec.num_noise(); ++zi) {
      if (spec.noise_support[zi] == (buy_side ? Rational(1) : Rational(-1))) {
        zeta_edge = spec.noise_dist[zi];
      }
    }
    const Rational bound = 6 + 6 / zeta_edge;
    const Rational pin = buy_side ? spec.true_values.front() : spec.true_values.back();

    bool within_bound = true;
    Rational worst = 0;
    for (int id = tree.xnode_begin(1); id < tree.xnode_end(1); ++id) {
      for (int xi : supp[id]) {
        const Rational& x = spec.trade_support[xi];
        if (buy_side ? x > 0 : x < 0) {
          Rational mag = buy_side ? x : -x;
          if (mag >= bound) {
            within_bound = false;
            if (mag > worst) worst = mag;
          }
        }
      }
    }
    if (within_bound) return c;

    // bound branch failed: prices at every defined traded flow on this side
    // must be pinned at the extreme value
    for (int xi = 0; xi < spec.num_trades(); ++xi) {
      const Rational& x = spec.trade_support[xi];
      if (buy_side ? !(x > 0) : !(x < 0)) continue;
      for (int zi = 0; zi < spec.num_noise(); ++zi) {
        const auto code = static_cast<std::uint64_t>(tree.flow_of(xi, zi));
        if (!prices.defined(1, code)) continue;  // free completion may pin it
        Rational gap = prices.value[0][code] - pin;
        if (gap < 0) gap = -gap;
        if (gap > price_tol) {
          c.pass = false;
          c.witness = "order size " + fmt(worst) + " exceeds " + fmt(bound) + " and S(" +
                      fmt(x + spec.noise_support[zi]) + ")=" + fmt(prices.value[0][code]) +
                      " is not pinned at " + fmt(pin);
          return c;
        }
      }
    }
    return c;
  };
  report.checks.push_back(side_check(true));
  report.checks.push_back(side_check(false));
  return report;
}

}  // namespace kyle
