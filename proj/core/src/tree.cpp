#include "kyle/tree.hpp"

#include <algorithm>
#include <map>

namespace kyle {

GameTree::GameTree(GameSpec spec, std::uint64_t outcome_cap) : spec_(std::move(spec)) {
  spec_.validate();
  num_outcomes_ = spec_.outcome_count(outcome_cap);

  const int T = spec_.horizon;
  const int N = spec_.num_states();
  const int K = spec_.num_trades();
  const int L = spec_.num_noise();

  levels_ = spec_.partitions;
  Partition singletons;
  for (int i = 0; i < N; ++i) singletons.push_back({i});
  levels_.push_back(std::move(singletons));

  state_cell_.assign(T + 1, std::vector<int>(N, -1));
  for (int t = 1; t <= T + 1; ++t) {
    for (int c = 0; c < static_cast<int>(levels_[t - 1].size()); ++c) {
      for (int s : levels_[t - 1][c]) state_cell_[t - 1][s] = c;
    }
  }

  cell_children_.assign(T, {});
  for (int t = 1; t <= T; ++t) {
    cell_children_[t - 1].assign(levels_[t - 1].size(), {});
    for (int c = 0; c < static_cast<int>(levels_[t].size()); ++c) {
      int parent = state_cell_[t - 1][levels_[t][c][0]];
      cell_children_[t - 1][parent].push_back(c);
    }
  }

  cell_mass_.assign(T + 1, {});
  cell_value_mean_.assign(T + 1, {});
  cell_mass_d_.assign(T + 1, {});
  cell_value_mean_d_.assign(T + 1, {});
  for (int t = 1; t <= T + 1; ++t) {
    for (const Cell& cell : levels_[t - 1]) {
      Rational mass = 0, mean = 0;
      for (int s : cell) {
        mass += spec_.prior[s];
        mean += spec_.prior[s] * spec_.true_values[s];
      }
      mean /= mass;  // prior > 0 so mass > 0
      cell_mass_[t - 1].push_back(mass);
      cell_value_mean_[t - 1].push_back(mean);
      cell_mass_d_[t - 1].push_back(to_double(mass));
      cell_value_mean_d_[t - 1].push_back(to_double(mean));
    }
  }

  ey_ = flow_support(spec_);
  xz_to_ey_.assign(K, std::vector<int>(L, -1));
  for (int xi = 0; xi < K; ++xi) {
    for (int zi = 0; zi < L; ++zi) {
      Rational y = spec_.trade_support[xi] + spec_.noise_support[zi];
      xz_to_ey_[xi][zi] = flow_index(y);
    }
  }
  flow_card_.assign(T + 1, 1);
  for (int t = 1; t <= T; ++t) flow_card_[t] = flow_card_[t - 1] * ey_.size();

  // X-nodes, period-major; children of a node contiguous in (xi, zi, cell) order
  period_first_.assign(T + 1, 0);
  for (int c = 0; c < static_cast<int>(levels_[0].size()); ++c) {
    xnodes_.push_back(XNode{1, c, -1, -1, -1, 0, -1});
  }
  for (int t = 1; t < T; ++t) {
    period_first_[t] = static_cast<int>(xnodes_.size());
    for (int id = period_first_[t - 1]; id < period_first_[t]; ++id) {
      XNode& nd = xnodes_[id];
      nd.child_base = static_cast<int>(xnodes_.size());
      const auto& kids = cell_children_[t - 1][nd.cell];
      for (int xi = 0; xi < K; ++xi) {
        for (int zi = 0; zi < L; ++zi) {
          std::uint64_t flow = extend_flow(nd.flow_prefix, xz_to_ey_[xi][zi]);
          for (int c : kids) {
            xnodes_.push_back(XNode{t + 1, c, id, xi, zi, flow, -1});
          }
        }
      }
    }
  }
  period_first_[T] = static_cast<int>(xnodes_.size());

  num_znodes_ = 0;
  num_vnodes_ = 1;  // root
  for (int t = 1; t <= T; ++t) {
    std::uint64_t xn = static_cast<std::uint64_t>(xnode_end(t) - xnode_begin(t));
    num_znodes_ += xn * K;
    num_vnodes_ += xn * K * L;
  }

  prior_d_.reserve(N);
  for (const auto& p : spec_.prior) prior_d_.push_back(to_double(p));
  noise_dist_d_.reserve(L);
  for (const auto& p : spec_.noise_dist) noise_dist_d_.push_back(to_double(p));
  values_d_.reserve(N);
  for (const auto& v : spec_.true_values) values_d_.push_back(to_double(v));
  trades_d_.reserve(K);
  for (const auto& x : spec_.trade_support) trades_d_.push_back(to_double(x));
}

int GameTree::flow_index(const Rational& y) const {
  auto it = std::lower_bound(ey_.begin(), ey_.end(), y);
  if (it == ey_.end() || *it != y) return -1;
  return static_cast<int>(it - ey_.begin());
}

std::vector<int> GameTree::decode_flow(std::uint64_t code, int t) const {
  std::vector<int> idx(t);
  const std::uint64_t b = ey_.size();
  for (int s = t - 1; s >= 0; --s) {
    idx[s] = static_cast<int>(code % b);
    code /= b;
  }
  return idx;
}

std::uint64_t GameTree::encode_flow(const std::vector<int>& ey_idx) const {
  std::uint64_t code = 0;
  for (int i : ey_idx) code = extend_flow(code, i);
  return code;
}

int GameTree::xnode_on_path(const Outcome& out, int period) const {
  int id = root_xnode(out.state);
  for (int t = 1; t < period; ++t) {
    const XNode& nd = xnodes_[id];
    const auto& kids = cell_children_[t - 1][nd.cell];
    int next_cell = state_cell_[t][out.state];
    int pos = static_cast<int>(std::find(kids.begin(), kids.end(), next_cell) - kids.begin());
    id = child(id, out.trades[t - 1], out.noise[t - 1], pos);
  }
  return id;
}

NodeKey GameTree::key_of_xnode(int id) const {
  NodeKey key;
  key.kind = NodeClass::X;
  std::vector<int> chain;
  for (int cur = id; cur != -1; cur = xnodes_[cur].parent) chain.push_back(cur);
  std::reverse(chain.begin(), chain.end());
  for (std::size_t k = 0; k < chain.size(); ++k) {
    key.cells.push_back(xnodes_[chain[k]].cell);
    if (k + 1 < chain.size()) {
      key.trades.push_back(xnodes_[chain[k + 1]].via_x);
      key.noise.push_back(xnodes_[chain[k + 1]].via_z);
    }
  }
  return key;
}

NodeKey GameTree::key_of_vnode(int id, int xi, int zi) const {
  NodeKey key = key_of_xnode(id);
  key.kind = NodeClass::V;
  key.trades.push_back(xi);
  key.noise.push_back(zi);
  return key;
}

NodeKey GameTree::key_of_outcome(const Outcome& out) const {
  NodeKey key;
  key.kind = NodeClass::Terminal;
  const int T = spec_.horizon;
  for (int t = 1; t <= T + 1; ++t) key.cells.push_back(state_cell_[t - 1][out.state]);
  key.trades = out.trades;
  key.noise = out.noise;
  return key;
}

int GameTree::find_xnode(const NodeKey& key) const {
  if (key.kind != NodeClass::X) throw DomainError("NodeKey does not name an insider node");
  const int t = static_cast<int>(key.cells.size());
  if (t < 1 || t > spec_.horizon || key.trades.size() + 1 != key.cells.size() ||
      key.noise.size() != key.trades.size()) {
    throw DomainError("malformed insider NodeKey");
  }
  if (key.cells[0] < 0 || key.cells[0] >= static_cast<int>(levels_[0].size())) {
    throw DomainError("NodeKey round-1 cell out of range");
  }
  int id = key.cells[0];
  for (int s = 1; s < t; ++s) {
    const XNode& nd = xnodes_[id];
    const auto& kids = cell_children_[s - 1][nd.cell];
    auto it = std::find(kids.begin(), kids.end(), key.cells[s]);
    if (it == kids.end()) throw DomainError("NodeKey cells are not nested in the tree");
    int xi = key.trades[s - 1], zi = key.noise[s - 1];
    if (xi < 0 || xi >= spec_.num_trades() || zi < 0 || zi >= spec_.num_noise()) {
      throw DomainError("NodeKey trade or noise index out of range");
    }
    id = child(id, xi, zi, static_cast<int>(it - kids.begin()));
  }
  return id;
}

void GameTree::for_each_outcome(const std::function<void(const Outcome&)>& fn) const {
  const int T = spec_.horizon;
  const int K = spec_.num_trades();
  const int L = spec_.num_noise();
  Outcome out;
  out.trades.assign(T, 0);
  out.noise.assign(T, 0);
  for (int i = 0; i < spec_.num_states(); ++i) {
    out.state = i;
    std::fill(out.trades.begin(), out.trades.end(), 0);
    std::fill(out.noise.begin(), out.noise.end(), 0);
    // odometer over (x, z) pairs per round
    while (true) {
      fn(out);
      int pos = T - 1;
      while (pos >= 0) {
        if (++out.noise[pos] < L) break;
        out.noise[pos] = 0;
        if (++out.trades[pos] < K) break;
        out.trades[pos] = 0;
        --pos;
      }
      if (pos < 0) break;
    }
  }
}

}  // namespace kyle
