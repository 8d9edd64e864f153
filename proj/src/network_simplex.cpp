#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "hkembed/errors.hpp"
#include "hkembed/solvers.hpp"

namespace hkembed::solvers {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Nodes: supplies 0..m-1, demands m..m+n-1, artificial root m+n.
// Arcs: real arc i*n+j (i -> m+j); artificial arc m*n+i (i -> root) and
// m*n+m+j (root -> m+j). Every arc is uncapacitated.
class TransportSimplex {
 public:
  TransportSimplex(const RowMatrix& cost, std::span<const double> supply, std::span<const double> demand)
      : m_(static_cast<int>(supply.size())),
        n_(static_cast<int>(demand.size())),
        root_(m_ + n_),
        node_count_(m_ + n_ + 1),
        real_arcs_(static_cast<std::size_t>(m_) * n_),
        arc_count_(real_arcs_ + m_ + n_) {
    source_.resize(arc_count_);
    target_.resize(arc_count_);
    cost_.resize(arc_count_);
    flow_.assign(arc_count_, 0.0);
    in_tree_.assign(arc_count_, 0);

    double max_cost = 0.0;
    for (int i = 0; i < m_; ++i) {
      for (int j = 0; j < n_; ++j) {
        const std::size_t a = static_cast<std::size_t>(i) * n_ + j;
        source_[a] = i;
        target_[a] = m_ + j;
        cost_[a] = cost(i, j);
        max_cost = std::max(max_cost, std::abs(cost_[a]));
      }
    }
    cost_scale_ = max_cost;
    const double artificial_cost = (max_cost + 1.0) * node_count_;

    tree_adj_.assign(node_count_, {});
    balance_.assign(node_count_, 0.0);
    for (int i = 0; i < m_; ++i) {
      const std::size_t a = real_arcs_ + i;
      source_[a] = i;
      target_[a] = root_;
      cost_[a] = artificial_cost;
      flow_[a] = supply[i];
      balance_[i] = supply[i];
      add_tree_arc(a);
    }
    double total = 0.0;
    for (double s : supply) total += s;
    for (double d : demand) total += d;
    flow_snap_ = 1e-13 * std::max(total, std::numeric_limits<double>::min());
    for (int j = 0; j < n_; ++j) {
      const std::size_t a = real_arcs_ + m_ + j;
      source_[a] = root_;
      target_[a] = m_ + j;
      cost_[a] = artificial_cost;
      flow_[a] = demand[j];
      balance_[m_ + j] = -demand[j];
      add_tree_arc(a);
    }

    parent_.resize(node_count_);
    pred_arc_.resize(node_count_);
    pred_up_.resize(node_count_);
    depth_.resize(node_count_);
    pi_.resize(node_count_);
    order_.reserve(node_count_);
    stamp_.assign(node_count_, 0);
    block_size_ = std::max<std::size_t>(10, static_cast<std::size_t>(std::ceil(std::sqrt(double(arc_count_)))));
  }

  LpResult run(std::size_t max_pivots) {
    rebuild_tree();
    std::size_t pivots = 0;
    for (;;) {
      const std::ptrdiff_t entering = find_entering_arc();
      if (entering < 0) break;
      if (pivots == max_pivots) {
        throw SolverFailure("network simplex exceeded " + std::to_string(max_pivots) + " pivots");
      }
      pivot(static_cast<std::size_t>(entering));
      ++pivots;
    }
    recompute_basic_flows();

    LpResult result;
    result.pivots = pivots;
    result.plan.resize(m_, n_);
    double total = 0.0;
    for (std::size_t a = 0; a < real_arcs_; ++a) {
      result.plan.data()[a] = flow_[a];
      total += flow_[a] * cost_[a];
    }
    result.cost = total;

    double artificial = 0.0;
    double mass = 0.0;
    for (int i = 0; i < m_; ++i) mass += std::abs(balance_[i]);
    for (std::size_t a = real_arcs_; a < arc_count_; ++a) artificial += flow_[a];
    if (artificial > 1e-9 * std::max(1.0, mass)) {
      throw SolverFailure("transportation problem infeasible: " + std::to_string(artificial) +
                          " units left on artificial arcs");
    }
    return result;
  }

 private:
  void add_tree_arc(std::size_t a) {
    in_tree_[a] = 1;
    tree_adj_[source_[a]].push_back(static_cast<int>(a));
    tree_adj_[target_[a]].push_back(static_cast<int>(a));
  }

  void remove_tree_arc(std::size_t a) {
    in_tree_[a] = 0;
    for (int node : {source_[a], target_[a]}) {
      auto& adj = tree_adj_[node];
      auto it = std::find(adj.begin(), adj.end(), static_cast<int>(a));
      *it = adj.back();
      adj.pop_back();
    }
  }

  void snap(std::size_t a) {
    if (flow_[a] < flow_snap_) flow_[a] = 0.0;
  }

  int other_end(std::size_t a, int node) const { return source_[a] == node ? target_[a] : source_[a]; }

  // Parent pointers and depths are rooted at the artificial root, which the
  // leaving-arc rule needs. Potentials are propagated from supply node 0 so
  // that nodes joined by real arcs never mix with the large artificial cost.
  void rebuild_tree() {
    ++current_stamp_;
    order_.clear();
    order_.push_back(root_);
    parent_[root_] = -1;
    pred_arc_[root_] = -1;
    depth_[root_] = 0;
    stamp_[root_] = current_stamp_;
    for (std::size_t head = 0; head < order_.size(); ++head) {
      const int x = order_[head];
      for (int a : tree_adj_[x]) {
        const int y = other_end(a, x);
        if (stamp_[y] == current_stamp_) continue;
        stamp_[y] = current_stamp_;
        parent_[y] = x;
        pred_arc_[y] = a;
        pred_up_[y] = source_[a] == y;
        depth_[y] = depth_[x] + 1;
        order_.push_back(y);
      }
    }
    if (order_.size() != static_cast<std::size_t>(node_count_)) throw SolverFailure("basis is not a spanning tree");

    ++current_stamp_;
    bfs_.clear();
    bfs_.push_back(0);
    pi_[0] = 0.0;
    stamp_[0] = current_stamp_;
    for (std::size_t head = 0; head < bfs_.size(); ++head) {
      const int x = bfs_[head];
      for (int a : tree_adj_[x]) {
        const int y = other_end(a, x);
        if (stamp_[y] == current_stamp_) continue;
        stamp_[y] = current_stamp_;
        // Tree arcs have zero reduced cost: c + pi_src - pi_tgt = 0.
        pi_[y] = source_[a] == x ? pi_[x] + cost_[a] : pi_[x] - cost_[a];
        bfs_.push_back(y);
      }
    }
  }

  std::ptrdiff_t find_entering_arc() {
    constexpr double kRoundoff = 1e-12;
    std::ptrdiff_t best = -1;
    double best_rc = 0.0;
    std::size_t remaining_in_block = block_size_;
    for (std::size_t k = 0; k < arc_count_; ++k) {
      std::size_t a = next_arc_ + k;
      if (a >= arc_count_) a -= arc_count_;
      if (!in_tree_[a]) {
        const double pu = pi_[source_[a]];
        const double pv = pi_[target_[a]];
        const double rc = cost_[a] + pu - pv;
        const double noise = kRoundoff * (cost_scale_ + std::abs(cost_[a]) + std::abs(pu) + std::abs(pv));
        if (rc < -noise && (best < 0 || rc < best_rc || (rc == best_rc && static_cast<std::ptrdiff_t>(a) < best))) {
          best = static_cast<std::ptrdiff_t>(a);
          best_rc = rc;
        }
      }
      if (--remaining_in_block == 0) {
        if (best >= 0) {
          next_arc_ = a + 1 == arc_count_ ? 0 : a + 1;
          return best;
        }
        remaining_in_block = block_size_;
      }
    }
    return best;
  }

  void pivot(std::size_t in_arc) {
    const int first = source_[in_arc];
    const int second = target_[in_arc];
    int a = first;
    int b = second;
    while (depth_[a] > depth_[b]) a = parent_[a];
    while (depth_[b] > depth_[a]) b = parent_[b];
    while (a != b) {
      a = parent_[a];
      b = parent_[b];
    }
    const int join = a;

    // Flow runs first <- join on the first path and second -> join on the
    // second. The last blocking arc along the cycle leaves (strongly
    // feasible trees), hence < on the first path and <= on the second.
    double delta = kInf;
    int out_node = -1;
    for (int x = first; x != join; x = parent_[x]) {
      if (pred_up_[x] && flow_[pred_arc_[x]] < delta) {
        delta = flow_[pred_arc_[x]];
        out_node = x;
      }
    }
    for (int x = second; x != join; x = parent_[x]) {
      if (!pred_up_[x] && flow_[pred_arc_[x]] <= delta) {
        delta = flow_[pred_arc_[x]];
        out_node = x;
      }
    }
    if (out_node < 0) throw SolverFailure("unbounded transportation problem");

    if (delta > 0.0) {
      flow_[in_arc] += delta;
      for (int x = first; x != join; x = parent_[x]) flow_[pred_arc_[x]] += pred_up_[x] ? -delta : delta;
      for (int x = second; x != join; x = parent_[x]) flow_[pred_arc_[x]] += pred_up_[x] ? delta : -delta;
      // snap near-tie residues back to zero
      for (int x = first; x != join; x = parent_[x]) snap(pred_arc_[x]);
      for (int x = second; x != join; x = parent_[x]) snap(pred_arc_[x]);
    }
    const std::size_t out_arc = static_cast<std::size_t>(pred_arc_[out_node]);
    flow_[out_arc] = 0.0;
    remove_tree_arc(out_arc);
    add_tree_arc(in_arc);
    rebuild_tree();
  }

  // Re-derive the basic solution from node balances by leaf elimination;
  // this removes drift accumulated across pivots.
  void recompute_basic_flows() {
    std::vector<double> subtree(balance_);
    double residual = 0.0;
    for (int x = 0; x < root_; ++x) residual += balance_[x];
    subtree[root_] = -residual;
    std::fill(flow_.begin(), flow_.end(), 0.0);
    for (std::size_t k = order_.size(); k-- > 1;) {
      const int x = order_[k];
      const double net = subtree[x];
      flow_[pred_arc_[x]] = std::max(0.0, pred_up_[x] ? net : -net);
      subtree[parent_[x]] += net;
    }
  }

  int m_;
  int n_;
  int root_;
  int node_count_;
  std::size_t real_arcs_;
  std::size_t arc_count_;
  std::vector<int> source_;
  std::vector<int> target_;
  std::vector<double> cost_;
  std::vector<double> flow_;
  std::vector<char> in_tree_;
  std::vector<double> balance_;
  std::vector<std::vector<int>> tree_adj_;
  std::vector<int> parent_;
  std::vector<int> pred_arc_;
  std::vector<char> pred_up_;
  std::vector<int> depth_;
  std::vector<double> pi_;
  std::vector<int> order_;
  std::vector<int> bfs_;
  std::vector<unsigned> stamp_;
  unsigned current_stamp_ = 0;
  std::size_t block_size_ = 10;
  double flow_snap_ = 0.0;
  double cost_scale_ = 0.0;
  std::size_t next_arc_ = 0;
};

}  // namespace

LpResult solve_transport_lp(const RowMatrix& cost, std::span<const double> supply, std::span<const double> demand,
                            std::size_t max_pivots) {
  if (supply.empty() || demand.empty()) throw InvalidArgument("transportation problem with an empty side");
  if (static_cast<std::size_t>(cost.rows()) != supply.size() || static_cast<std::size_t>(cost.cols()) != demand.size()) {
    throw InvalidArgument("cost matrix shape does not match the marginals");
  }
  for (Eigen::Index k = 0; k < cost.size(); ++k) {
    if (!std::isfinite(cost.data()[k])) throw InvalidArgument("transportation LP requires finite costs");
  }
  for (double s : supply) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw InvalidArgument("supplies must be finite and nonnegative");
  }
  for (double d : demand) {
    if (!(d >= 0.0) || !std::isfinite(d)) throw InvalidArgument("demands must be finite and nonnegative");
  }
  if (max_pivots == 0) max_pivots = 50 * (supply.size() * demand.size() + supply.size() + demand.size()) + 1000;
  TransportSimplex simplex(cost, supply, demand);
  return simplex.run(max_pivots);
}

}  // namespace hkembed::solvers
