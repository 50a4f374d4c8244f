#include "kyle/serialization.hpp"

namespace kyle {

namespace {

Json rationals_to_json(const std::vector<Rational>& xs) {
  Json out = Json::array();
  for (const auto& x : xs) out.push_back(format_rational(x));
  return out;
}

std::vector<Rational> rationals_from_json(const Json& j, const char* field) {
  if (!j.is_array()) throw ParseError(std::string("expected an array for ") + field);
  std::vector<Rational> out;
  for (const auto& e : j) {
    if (!e.is_string()) throw ParseError(std::string(field) + ": rationals must be strings");
    out.push_back(parse_rational(e.get<std::string>()));
  }
  return out;
}

template <class T>
T require(const Json& j, const char* field) {
  if (!j.contains(field)) throw ParseError(std::string("missing field '") + field + "'");
  try {
    return j.at(field).get<T>();
  } catch (const Json::exception&) {
    throw ParseError(std::string("malformed field '") + field + "'");
  }
}

}  // namespace

Json game_spec_to_json(const GameSpec& spec) {
  Json j;
  j["horizon"] = spec.horizon;
  j["values"] = rationals_to_json(spec.true_values);
  Json parts = Json::array();
  for (const auto& part : spec.partitions) {
    Json cells = Json::array();
    for (const auto& cell : part) {
      Json c = Json::array();
      for (int s : cell) c.push_back(s + 1);  // 1-based states on the wire
      cells.push_back(std::move(c));
    }
    parts.push_back(std::move(cells));
  }
  j["partitions"] = std::move(parts);
  j["prior"] = rationals_to_json(spec.prior);
  j["noise_support"] = rationals_to_json(spec.noise_support);
  j["noise_dist"] = rationals_to_json(spec.noise_dist);
  j["trade_support"] = rationals_to_json(spec.trade_support);
  return j;
}

GameSpec game_spec_from_json(const Json& j) {
  GameSpec spec;
  spec.horizon = require<int>(j, "horizon");
  spec.true_values = rationals_from_json(j.value("values", Json::array()), "values");
  if (!j.contains("partitions") || !j.at("partitions").is_array()) {
    throw ParseError("missing field 'partitions'");
  }
  for (const auto& part : j.at("partitions")) {
    Partition p;
    for (const auto& cell : part) {
      Cell c;
      for (const auto& s : cell) {
        if (!s.is_number_integer()) throw ParseError("partitions: states must be integers");
        c.push_back(s.get<int>() - 1);
      }
      p.push_back(std::move(c));
    }
    spec.partitions.push_back(std::move(p));
  }
  spec.prior = rationals_from_json(j.value("prior", Json::array()), "prior");
  spec.noise_support = rationals_from_json(j.value("noise_support", Json::array()), "noise_support");
  spec.noise_dist = rationals_from_json(j.value("noise_dist", Json::array()), "noise_dist");
  spec.trade_support = rationals_from_json(j.value("trade_support", Json::array()), "trade_support");
  try {
    spec.validate();
  } catch (const SpecError& e) {
    throw ParseError(std::string("invalid game specification: ") + e.what());
  }
  return spec;
}

Json solver_config_to_json(const SolverConfig& config) {
  Json j;
  switch (config.mode) {
    case SolverConfig::Mode::Homotopy: j["mode"] = "homotopy"; break;
    case SolverConfig::Mode::SupportEnumeration: j["mode"] = "support-enumeration"; break;
    case SolverConfig::Mode::Both: j["mode"] = "both"; break;
  }
  j["epsilon_schedule"] = config.epsilon_schedule;
  j["damping"] = config.damping;
  j["max_iters"] = config.max_iters;
  j["fixed_point_tol"] = config.fixed_point_tol;
  j["support_grid_step"] = config.support_grid_step;
  j["support_threshold"] = config.support_threshold;
  return j;
}

SolverConfig solver_config_from_json(const Json& j) {
  SolverConfig config;
  const std::string mode = j.value("mode", "homotopy");
  if (mode == "homotopy") {
    config.mode = SolverConfig::Mode::Homotopy;
  } else if (mode == "support-enumeration") {
    config.mode = SolverConfig::Mode::SupportEnumeration;
  } else if (mode == "both") {
    config.mode = SolverConfig::Mode::Both;
  } else {
    throw ParseError("unknown solver mode '" + mode + "'");
  }
  config.epsilon_schedule = j.value("epsilon_schedule", std::vector<double>{});
  config.damping = j.value("damping", config.damping);
  config.max_iters = j.value("max_iters", config.max_iters);
  config.fixed_point_tol = j.value("fixed_point_tol", config.fixed_point_tol);
  config.support_grid_step = j.value("support_grid_step", config.support_grid_step);
  config.support_threshold = j.value("support_threshold", config.support_threshold);
  try {
    config.validate();
  } catch (const PreconditionError& e) {
    throw ParseError(std::string("invalid solver config: ") + e.what());
  }
  return config;
}

Json node_key_to_json(const GameTree& tree, const NodeKey& key) {
  Json j;
  switch (key.kind) {
    case NodeClass::V: j["kind"] = "V"; break;
    case NodeClass::X: j["kind"] = "X"; break;
    case NodeClass::Z: j["kind"] = "Z"; break;
    case NodeClass::Terminal: j["kind"] = "terminal"; break;
  }
  Json cells = Json::array();
  for (std::size_t t = 0; t < key.cells.size(); ++t) {
    Json members = Json::array();
    for (int s : tree.level(static_cast<int>(t) + 1)[key.cells[t]]) members.push_back(s + 1);
    cells.push_back(std::move(members));
  }
  j["cells"] = std::move(cells);
  Json trades = Json::array(), noise = Json::array();
  for (int xi : key.trades) trades.push_back(format_rational(tree.spec().trade_support[xi]));
  for (int zi : key.noise) noise.push_back(format_rational(tree.spec().noise_support[zi]));
  j["trades"] = std::move(trades);
  j["noise"] = std::move(noise);
  return j;
}

NodeKey node_key_from_json(const GameTree& tree, const Json& j) {
  NodeKey key;
  const std::string kind = require<std::string>(j, "kind");
  if (kind == "V") {
    key.kind = NodeClass::V;
  } else if (kind == "X") {
    key.kind = NodeClass::X;
  } else if (kind == "Z") {
    key.kind = NodeClass::Z;
  } else if (kind == "terminal") {
    key.kind = NodeClass::Terminal;
  } else {
    throw ParseError("unknown node kind '" + kind + "'");
  }
  int t = 1;
  for (const auto& members : j.value("cells", Json::array())) {
    Cell cell;
    for (const auto& s : members) cell.push_back(s.get<int>() - 1);
    const Partition& level = tree.level(t);
    int found = -1;
    for (int c = 0; c < static_cast<int>(level.size()); ++c) {
      if (level[c] == cell) found = c;
    }
    if (found < 0) throw ParseError("node cell does not belong to the round's partition");
    key.cells.push_back(found);
    ++t;
  }
  for (const auto& x : j.value("trades", Json::array())) {
    const Rational v = parse_rational(x.get<std::string>());
    const auto& supp = tree.spec().trade_support;
    const auto it = std::find(supp.begin(), supp.end(), v);
    if (it == supp.end()) throw ParseError("node trade is not in the trade support");
    key.trades.push_back(static_cast<int>(it - supp.begin()));
  }
  for (const auto& z : j.value("noise", Json::array())) {
    const Rational v = parse_rational(z.get<std::string>());
    const auto& supp = tree.spec().noise_support;
    const auto it = std::find(supp.begin(), supp.end(), v);
    if (it == supp.end()) throw ParseError("node noise is not in the noise support");
    key.noise.push_back(static_cast<int>(it - supp.begin()));
  }
  return key;
}

namespace {

Json strategy_to_json(const GameTree& tree, const BehaviourStrategy& strat) {
  Json rows = Json::array();
  for (int id = 0; id < tree.num_xnodes(); ++id) {
    Json row;
    row["node"] = node_key_to_json(tree, tree.key_of_xnode(id));
    row["probs"] = rationals_to_json(strat.table[id]);
    rows.push_back(std::move(row));
  }
  return rows;
}

BehaviourStrategy strategy_from_json(const GameTree& tree, const Json& j) {
  BehaviourStrategy strat;
  strat.table.assign(tree.num_xnodes(), {});
  std::vector<char> seen(tree.num_xnodes(), 0);
  for (const auto& row : j) {
    const NodeKey key = node_key_from_json(tree, row.at("node"));
    const int id = tree.find_xnode(key);
    strat.table[id] = rationals_from_json(row.at("probs"), "probs");
    seen[id] = 1;
  }
  for (char s : seen) {
    if (!s) throw ParseError("strategy does not cover every insider node");
  }
  validate_strategy(tree, strat);
  return strat;
}

Json flows_to_json(const GameTree& tree, int t, std::uint64_t code) {
  Json flow = Json::array();
  for (int idx : tree.decode_flow(code, t)) {
    flow.push_back(format_rational(tree.flow_values()[idx]));
  }
  return flow;
}

std::uint64_t flow_from_json(const GameTree& tree, const Json& j, int* t_out) {
  std::uint64_t code = 0;
  int t = 0;
  for (const auto& y : j) {
    const int idx = tree.flow_index(parse_rational(y.get<std::string>()));
    if (idx < 0) throw ParseError("flow entry outside E_Y");
    code = tree.extend_flow(code, idx);
    ++t;
  }
  *t_out = t;
  return code;
}

Json prices_to_json(const GameTree& tree, const PricingSystem& ps) {
  Json j;
  j["complete"] = ps.complete;
  Json entries = Json::array();
  for (int t = 1; t <= tree.spec().horizon; ++t) {
    for (std::uint64_t code = 0; code < tree.flow_card(t); ++code) {
      if (!ps.defined(t, code)) continue;
      Json e;
      e["flow"] = flows_to_json(tree, t, code);
      e["price"] = format_rational(ps.value[t - 1][code]);
      entries.push_back(std::move(e));
    }
  }
  j["entries"] = std::move(entries);
  return j;
}

PricingSystem prices_from_json(const GameTree& tree, const Json& j) {
  PricingSystem ps = empty_pricing<Rational>(tree, j.value("complete", false));
  for (const auto& e : j.at("entries")) {
    int t = 0;
    const std::uint64_t code = flow_from_json(tree, e.at("flow"), &t);
    ps.set(t, code, parse_rational(e.at("price").get<std::string>()));
  }
  return ps;
}

Json beliefs_to_json(const GameTree& tree, const BeliefSystem& mu) {
  Json entries = Json::array();
  const int n = tree.spec().num_states();
  for (int t = 1; t <= tree.spec().horizon; ++t) {
    for (std::uint64_t code = 0; code < tree.flow_card(t); ++code) {
      Json e;
      e["flow"] = flows_to_json(tree, t, code);
      Json dist = Json::array();
      for (int i = 0; i < n; ++i) dist.push_back(format_rational(mu.dist[t - 1][code * n + i]));
      e["dist"] = std::move(dist);
      entries.push_back(std::move(e));
    }
  }
  return entries;
}

BeliefSystem beliefs_from_json(const GameTree& tree, const Json& j) {
  BeliefSystem mu;
  const int n = tree.spec().num_states();
  mu.dist.resize(tree.spec().horizon);
  std::vector<std::vector<char>> seen(tree.spec().horizon);
  for (int t = 1; t <= tree.spec().horizon; ++t) {
    mu.dist[t - 1].assign(tree.flow_card(t) * n, Rational(0));
    seen[t - 1].assign(tree.flow_card(t), 0);
  }
  for (const auto& e : j) {
    int t = 0;
    const std::uint64_t code = flow_from_json(tree, e.at("flow"), &t);
    const auto dist = rationals_from_json(e.at("dist"), "dist");
    if (static_cast<int>(dist.size()) != n) throw ParseError("belief entry has wrong arity");
    Rational sum = 0;
    for (int i = 0; i < n; ++i) {
      if (dist[i] < 0) throw ParseError("belief entries must be nonnegative");
      mu.dist[t - 1][code * n + i] = dist[i];
      sum += dist[i];
    }
    if (sum != 1) throw ParseError("belief entry does not sum to 1");
    seen[t - 1][code] = 1;
  }
  for (int t = 1; t <= tree.spec().horizon; ++t) {
    for (std::uint64_t code = 0; code < tree.flow_card(t); ++code) {
      if (!seen[t - 1][code]) {
        throw ParseError("beliefs missing at flow " + describe_flow(tree, t, code));
      }
    }
  }
  return mu;
}

}  // namespace

Json certificate_to_json(const GameTree& tree, const EquilibriumCertificate& cert) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["origin"] = cert.origin;
  j["flags"] = cert.flags;
  j["game"] = game_spec_to_json(tree.spec());
  j["strategy"] = strategy_to_json(tree, cert.strategy);
  j["beliefs"] = beliefs_to_json(tree, cert.beliefs);
  j["prices"] = prices_to_json(tree, cert.prices);
  Json trace = Json::array();
  for (const auto& entry : cert.trace) {
    Json e;
    e["eps"] = entry.eps;
    e["residual"] = entry.residual;
    e["extrapolated_gain"] = entry.extrapolated_gain;
    e["converged"] = entry.converged;
    e["sweeps"] = entry.sweeps;
    e["strategy"] = strategy_to_json(tree, rationalize(entry.strategy));
    e["beliefs"] = beliefs_to_json(tree, entry.beliefs);
    trace.push_back(std::move(e));
  }
  j["trace"] = std::move(trace);
  return j;
}

EquilibriumCertificate certificate_from_json(const GameTree& tree, const Json& j) {
  if (j.value("format_version", 0) != kFormatVersion) {
    throw ParseError("unsupported certificate format_version");
  }
  EquilibriumCertificate cert;
  cert.origin = j.value("origin", "unknown");
  cert.flags = j.value("flags", std::vector<std::string>{});
  cert.strategy = strategy_from_json(tree, j.at("strategy"));
  cert.beliefs = beliefs_from_json(tree, j.at("beliefs"));
  cert.prices = prices_from_json(tree, j.at("prices"));
  for (const auto& e : j.value("trace", Json::array())) {
    HomotopyTraceEntry entry;
    entry.eps = e.value("eps", 0.0);
    entry.residual = e.value("residual", 0.0);
    entry.extrapolated_gain = e.value("extrapolated_gain", 0.0);
    entry.converged = e.value("converged", false);
    entry.sweeps = e.value("sweeps", 0);
    entry.strategy = to_float(strategy_from_json(tree, e.at("strategy")));
    entry.beliefs = beliefs_from_json(tree, e.at("beliefs"));
    cert.trace.push_back(std::move(entry));
  }
  return cert;
}

namespace {

const char* consistency_name(VerificationReport::Consistency c) {
  switch (c) {
    case VerificationReport::Consistency::NotChecked: return "not-checked";
    case VerificationReport::Consistency::Verified: return "verified";
    case VerificationReport::Consistency::Failed: return "failed";
    case VerificationReport::Consistency::Unverifiable: return "unverifiable";
  }
  return "unknown";
}

Json checks_to_json(const std::vector<CheckResult>& checks) {
  Json out = Json::array();
  for (const auto& c : checks) {
    Json e;
    e["name"] = c.name;
    e["applicable"] = c.applicable;
    e["pass"] = c.pass;
    if (!c.witness.empty()) e["witness"] = c.witness;
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace

Json report_to_json(const VerificationReportExact& report) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["arithmetic"] = "exact";
  j["max_deviation_gain"] = format_rational(report.max_deviation_gain);
  j["root_deviation_gain"] = format_rational(report.root_deviation_gain);
  j["pricing_residual"] = format_rational(report.pricing_residual);
  j["max_deviation_gain_approx"] = to_double(report.max_deviation_gain);
  j["pricing_residual_approx"] = to_double(report.pricing_residual);
  j["tolerance"] = report.tolerance;
  j["pass"] = report.pass();
  j["consistency"] =
      consistency_name(static_cast<VerificationReport::Consistency>(report.consistency));
  if (!report.consistency_witness.empty()) j["consistency_witness"] = report.consistency_witness;
  j["structure_flags"] = checks_to_json(report.structure_flags);
  return j;
}

Json report_to_json(const VerificationReport& report) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["arithmetic"] = "float";
  j["max_deviation_gain"] = report.max_deviation_gain;
  j["root_deviation_gain"] = report.root_deviation_gain;
  j["pricing_residual"] = report.pricing_residual;
  j["tolerance"] = report.tolerance;
  j["pass"] = report.pass();
  j["consistency"] = consistency_name(report.consistency);
  if (!report.consistency_witness.empty()) j["consistency_witness"] = report.consistency_witness;
  j["structure_flags"] = checks_to_json(report.structure_flags);
  return j;
}

Json structure_report_to_json(const StructureReport& report) {
  Json j;
  j["checks"] = checks_to_json(report.checks);
  j["all_pass"] = report.all_pass();
  if (report.annotated_non_equilibrium) {
    j["note"] = "inputs were not claimed to be an equilibrium; the guarantees "
                "only hold in equilibrium";
  }
  return j;
}

Json continuous_game_to_json(const ContinuousGame& game) {
  Json j;
  j["value_density_level"] = game.value_dist.density_level;
  j["value_density"] = rationals_to_json(game.value_dist.density);
  Json atoms = Json::array();
  for (const auto& [p, m] : game.value_dist.atoms) {
    atoms.push_back(Json::array({format_rational(p), format_rational(m)}));
  }
  j["value_atoms"] = std::move(atoms);
  j["noise_density_level"] = game.noise_density.level;
  j["noise_density"] = rationals_to_json(game.noise_density.values);
  j["trade_lo"] = game.trade_lo;
  j["trade_hi"] = game.trade_hi;
  return j;
}

ContinuousGame continuous_game_from_json(const Json& j) {
  ContinuousGame game;
  game.value_dist.density_level = j.value("value_density_level", 0);
  game.value_dist.density = rationals_from_json(j.value("value_density", Json::array()),
                                                "value_density");
  for (const auto& atom : j.value("value_atoms", Json::array())) {
    game.value_dist.atoms.push_back({parse_rational(atom.at(0).get<std::string>()),
                                     parse_rational(atom.at(1).get<std::string>())});
  }
  game.noise_density.level = j.value("noise_density_level", 0);
  game.noise_density.values = rationals_from_json(j.value("noise_density", Json::array()),
                                                  "noise_density");
  game.trade_lo = j.value("trade_lo", -1);
  game.trade_hi = j.value("trade_hi", 1);
  try {
    game.validate();
  } catch (const SpecError& e) {
    throw ParseError(std::string("invalid continuum game: ") + e.what());
  }
  return game;
}

}  // namespace kyle
