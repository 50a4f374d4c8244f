#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "kyle/game_spec.hpp"

namespace kyle {

/// Node classes of the game tree. V-nodes are where nature reveals
/// information (including the root), X-nodes are insider decisions,
/// Z-nodes are noise-trader moves.
enum class NodeClass { V, X, Z, Terminal };

/// User-facing node identifier: the alternating history
/// (I_1, x_1, z_1, I_2, ...) truncated at a node class. Cells are stored as
/// indices into the round's partition, trades/noise as support indices.
struct NodeKey {
  NodeClass kind = NodeClass::V;
  std::vector<int> cells;   // cell index per revealed round
  std::vector<int> trades;  // insider trade index per completed move
  std::vector<int> noise;   // noise index per completed move

  static NodeKey root() { return NodeKey{}; }
};

/// A terminal outcome: resolved state plus the trade/noise path.
struct Outcome {
  int state = 0;
  std::vector<int> trades;  // length T, indices into trade_support
  std::vector<int> noise;   // length T, indices into noise_support
};

/// Immutable navigation structure for a validated GameSpec.
///
/// X-nodes are interned to integer ids ordered period-major; children of a
/// node are contiguous so navigation is pure index arithmetic. Flow prefixes
/// are encoded base-|E_Y|. All tables are precomputed at build time and the
/// tree is safe to share across threads.
class GameTree {
 public:
  struct XNode {
    int period;                // 1-based round
    int cell;                  // index into level(period)
    int parent;                // X-node id one round up, -1 in round 1
    int via_x, via_z;          // edge from parent
    std::uint64_t flow_prefix; // encoded flow of length period-1
    int child_base;            // first child id, -1 in the last round
  };

  explicit GameTree(GameSpec spec, std::uint64_t outcome_cap = GameSpec::kDefaultOutcomeCap);

  const GameSpec& spec() const { return spec_; }

  // --- partitions, levels run 1..T+1 (T+1 = implicit singletons) ---
  const Partition& level(int t) const { return levels_[t - 1]; }
  int cell_of_state(int t, int state) const { return state_cell_[t - 1][state]; }
  const std::vector<int>& child_cells(int t, int cell) const { return cell_children_[t - 1][cell]; }
  const Rational& cell_mass(int t, int cell) const { return cell_mass_[t - 1][cell]; }
  /// Conditional expectation of the true value on a cell.
  const Rational& cell_value_mean(int t, int cell) const { return cell_value_mean_[t - 1][cell]; }
  double cell_mass_d(int t, int cell) const { return cell_mass_d_[t - 1][cell]; }
  double cell_value_mean_d(int t, int cell) const { return cell_value_mean_d_[t - 1][cell]; }

  // --- X-nodes ---
  int num_xnodes() const { return static_cast<int>(xnodes_.size()); }
  const XNode& xnode(int id) const { return xnodes_[id]; }
  int xnode_begin(int period) const { return period_first_[period - 1]; }
  int xnode_end(int period) const { return period_first_[period]; }
  /// Child X-node after playing (xi, zi) and revealing child cell #pos.
  int child(int id, int xi, int zi, int pos) const {
    const XNode& nd = xnodes_[id];
    const int nc = static_cast<int>(cell_children_[nd.period - 1][nd.cell].size());
    return nd.child_base + (xi * spec_.num_noise() + zi) * nc + pos;
  }
  /// X-node reached by state `i` in round 1.
  int root_xnode(int state) const { return state_cell_[0][state]; }
  /// X-node of state i at `period` following the outcome's path.
  int xnode_on_path(const Outcome& out, int period) const;

  std::uint64_t num_outcomes() const { return num_outcomes_; }
  std::uint64_t num_vnodes() const { return num_vnodes_; }
  std::uint64_t num_znodes() const { return num_znodes_; }

  // --- order flow ---
  const std::vector<Rational>& flow_values() const { return ey_; }
  int flow_index(const Rational& y) const;  // -1 if not in E_Y
  int flow_of(int xi, int zi) const { return xz_to_ey_[xi][zi]; }
  std::uint64_t flow_card(int t) const { return flow_card_[t]; }  // |E_Y|^t
  std::uint64_t extend_flow(std::uint64_t code, int ey_idx) const {
    return code * ey_.size() + ey_idx;
  }
  /// Decodes a length-t flow code into E_Y indices.
  std::vector<int> decode_flow(std::uint64_t code, int t) const;
  std::uint64_t encode_flow(const std::vector<int>& ey_idx) const;

  // --- NodeKey bridge ---
  NodeKey key_of_xnode(int id) const;
  NodeKey key_of_vnode(int id, int xi, int zi) const;  // V-node after (xi,zi) at X-node id
  NodeKey key_of_outcome(const Outcome& out) const;
  /// Locates the X-node of a NodeKey with kind X. Throws DomainError.
  int find_xnode(const NodeKey& key) const;

  void for_each_outcome(const std::function<void(const Outcome&)>& fn) const;

  // float mirrors of spec data for solver loops
  const std::vector<double>& prior_d() const { return prior_d_; }
  const std::vector<double>& noise_dist_d() const { return noise_dist_d_; }
  const std::vector<double>& values_d() const { return values_d_; }
  const std::vector<double>& trades_d() const { return trades_d_; }

 private:
  GameSpec spec_;
  std::vector<Partition> levels_;                 // size T+1
  std::vector<std::vector<int>> state_cell_;      // [t-1][state]
  std::vector<std::vector<std::vector<int>>> cell_children_;  // [t-1][cell] (rounds 1..T)
  std::vector<std::vector<Rational>> cell_mass_;
  std::vector<std::vector<Rational>> cell_value_mean_;
  std::vector<std::vector<double>> cell_mass_d_;
  std::vector<std::vector<double>> cell_value_mean_d_;
  std::vector<XNode> xnodes_;
  std::vector<int> period_first_;                 // size T+1 (sentinel)
  std::vector<Rational> ey_;
  std::vector<std::vector<int>> xz_to_ey_;
  std::vector<std::uint64_t> flow_card_;          // [t] = |E_Y|^t, t=0..T
  std::uint64_t num_outcomes_ = 0, num_vnodes_ = 0, num_znodes_ = 0;
  std::vector<double> prior_d_, noise_dist_d_, values_d_, trades_d_;
};

/// Builds the navigation structure; validates the spec first.
inline GameTree build_tree(GameSpec spec,
                           std::uint64_t outcome_cap = GameSpec::kDefaultOutcomeCap) {
  return GameTree(std::move(spec), outcome_cap);
}

}  // namespace kyle
