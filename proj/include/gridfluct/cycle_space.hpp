#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gridfluct/errors.hpp"
#include "gridfluct/grid_model.hpp"
#include "gridfluct/sync_state.hpp"

namespace gridfluct {

using Eigen::VectorXi;

/// Signed cycle vector xi in {-1,0,+1}^m, oriented so that its defining
/// non-tree line (the chord) carries +1.
struct FundamentalCycle {
  VectorXi xi;
  std::vector<int> lines;  // 1-based ids in walk order, chord first
  int chord = 0;           // 1-based id
};

struct CycleDecomposition {
  std::size_t node_count = 0;
  std::size_t line_count = 0;
  std::vector<int> tree_lines;                // 1-based ids, in discovery order
  std::vector<FundamentalCycle> cycles;       // ordered by chord id
  std::vector<int> bridges;                   // single lines, ascending ids
  std::vector<std::vector<int>> clusters;     // cycle-clusters, each ascending, ordered by first id
  std::vector<int> cluster_of;                // per line (0-based index): cluster index or -1 for a bridge

  std::size_t cycle_rank() const { return cycles.size(); }
  bool is_bridge(int line_id) const { return cluster_of.at(static_cast<std::size_t>(line_id - 1)) < 0; }
};

/// Spanning-tree choice. The default is breadth-first from node 1 scanning
/// incident lines in declaration order.
struct TreeOptions {
  int root = 1;
  std::vector<int> line_order;  // permutation of 1..m; empty = declaration order
};

namespace detail {

struct Incident {
  int node;  // 0-based neighbour
  int line;  // 0-based line index
};

inline std::vector<std::vector<Incident>> adjacency(const GridSpec& grid, std::span<const int> line_order = {}) {
  std::vector<std::vector<Incident>> adj(grid.node_count());
  auto add = [&](std::size_t k) {
    const auto [a, b] = grid.endpoints(k);
    adj[static_cast<std::size_t>(a)].push_back({b, static_cast<int>(k)});
    adj[static_cast<std::size_t>(b)].push_back({a, static_cast<int>(k)});
  };
  if (line_order.empty()) {
    for (std::size_t k = 0; k < grid.line_count(); ++k) add(k);
  } else {
    for (int id : line_order) add(static_cast<std::size_t>(id - 1));
  }
  return adj;
}

// Biconnected components by edge, iterative Hopcroft-Tarjan. Returns a block
// label per line.
inline std::vector<int> biconnected_blocks(const GridSpec& grid) {
  const auto n = grid.node_count();
  const auto adj = adjacency(grid);
  std::vector<int> disc(n, -1), low(n, 0), block(grid.line_count(), -1);
  std::vector<int> edge_stack;
  int time = 0, blocks = 0;

  struct Frame {
    int node;
    int parent_line;
    std::size_t next = 0;
  };
  std::vector<Frame> stack;
  disc[0] = low[0] = time++;
  stack.push_back({0, -1});
  while (!stack.empty()) {
    auto& f = stack.back();
    const auto u = static_cast<std::size_t>(f.node);
    if (f.next < adj[u].size()) {
      const auto [v, k] = adj[u][f.next++];
      if (k == f.parent_line) continue;
      const auto vi = static_cast<std::size_t>(v);
      if (disc[vi] < 0) {
        edge_stack.push_back(k);
        disc[vi] = low[vi] = time++;
        stack.push_back({v, k});
      } else if (disc[vi] < disc[u]) {
        edge_stack.push_back(k);
        low[u] = std::min(low[u], disc[vi]);
      }
      continue;
    }
    const int child = f.node, via = f.parent_line;
    stack.pop_back();
    if (stack.empty()) break;
    const auto p = static_cast<std::size_t>(stack.back().node);
    const auto c = static_cast<std::size_t>(child);
    low[p] = std::min(low[p], low[c]);
    if (low[c] >= disc[p]) {
      // p separates the subtree under `child`: pop one block
      while (true) {
        const int k = edge_stack.back();
        edge_stack.pop_back();
        block[static_cast<std::size_t>(k)] = blocks;
        if (k == via) break;
      }
      ++blocks;
    }
  }
  return block;
}

}  // namespace detail

/// Splits the grid into cycle-clusters and single lines and emits the
/// m - n + 1 fundamental cycles of a breadth-first spanning tree.
inline CycleDecomposition decompose(const GridSpec& grid, const TreeOptions& opts = {}) {
  const auto n = grid.node_count();
  const auto m = grid.line_count();
  if (opts.root < 1 || opts.root > static_cast<int>(n)) throw ValidationError("tree root is not a node id");
  if (!opts.line_order.empty()) {
    auto sorted = opts.line_order;
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> ids(m);
    std::iota(ids.begin(), ids.end(), 1);
    if (sorted != ids) throw ValidationError("tree line order must be a permutation of the line ids");
  }

  CycleDecomposition d;
  d.node_count = n;
  d.line_count = m;

  // spanning tree
  const auto adj = detail::adjacency(grid, opts.line_order);
  std::vector<int> parent_line(n, -1), depth(n, -1);
  std::vector<bool> in_tree(m, false);
  std::deque<int> queue{opts.root - 1};
  depth[static_cast<std::size_t>(opts.root - 1)] = 0;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (const auto& [v, k] : adj[static_cast<std::size_t>(u)]) {
      const auto vi = static_cast<std::size_t>(v);
      if (depth[vi] >= 0) continue;
      depth[vi] = depth[static_cast<std::size_t>(u)] + 1;
      parent_line[vi] = k;
      in_tree[static_cast<std::size_t>(k)] = true;
      d.tree_lines.push_back(k + 1);
      queue.push_back(v);
    }
  }

  auto other_end = [&](int k, int node) {
    const auto [a, b] = grid.endpoints(static_cast<std::size_t>(k));
    return a == node ? b : a;
  };

  for (std::size_t k = 0; k < m; ++k) {
    if (in_tree[k]) continue;
    FundamentalCycle cyc;
    cyc.chord = static_cast<int>(k) + 1;
    cyc.xi = VectorXi::Zero(static_cast<Eigen::Index>(m));
    cyc.xi(static_cast<Eigen::Index>(k)) = 1;
    cyc.lines.push_back(cyc.chord);
    // chord runs a -> b; close the walk along the tree path b -> a
    const auto [a, b] = grid.endpoints(k);
    std::vector<int> up_from_b, up_from_a;  // lines climbing towards the common ancestor
    int x = b, y = a;
    while (x != y) {
      if (depth[static_cast<std::size_t>(x)] >= depth[static_cast<std::size_t>(y)]) {
        const int pl = parent_line[static_cast<std::size_t>(x)];
        up_from_b.push_back(pl);
        const int px = other_end(pl, x);
        cyc.xi(pl) = (grid.endpoints(static_cast<std::size_t>(pl)).first == x) ? 1 : -1;
        x = px;
      } else {
        const int pl = parent_line[static_cast<std::size_t>(y)];
        up_from_a.push_back(pl);
        const int py = other_end(pl, y);
        // walked downwards py -> y
        cyc.xi(pl) = (grid.endpoints(static_cast<std::size_t>(pl)).first == py) ? 1 : -1;
        y = py;
      }
    }
    for (int pl : up_from_b) cyc.lines.push_back(pl + 1);
    for (auto it = up_from_a.rbegin(); it != up_from_a.rend(); ++it) cyc.lines.push_back(*it + 1);
    d.cycles.push_back(std::move(cyc));
  }

  // cycle-clusters are biconnected blocks with more than one line
  const auto block = detail::biconnected_blocks(grid);
  const int nblocks = block.empty() ? 0 : *std::max_element(block.begin(), block.end()) + 1;
  std::vector<std::vector<int>> members(static_cast<std::size_t>(nblocks));
  for (std::size_t k = 0; k < m; ++k) members[static_cast<std::size_t>(block[k])].push_back(static_cast<int>(k) + 1);
  d.cluster_of.assign(m, -1);
  for (auto& mem : members) {
    std::sort(mem.begin(), mem.end());
    if (mem.size() == 1)
      d.bridges.push_back(mem.front());
    else
      d.clusters.push_back(mem);
  }
  std::sort(d.bridges.begin(), d.bridges.end());
  std::sort(d.clusters.begin(), d.clusters.end());
  for (std::size_t c = 0; c < d.clusters.size(); ++c)
    for (int id : d.clusters[c]) d.cluster_of[static_cast<std::size_t>(id - 1)] = static_cast<int>(c);
  return d;
}

/// Orthonormal basis X_1..X_r of ker(C R^{1/2}), stored as the columns of an
/// m x r matrix.
struct KernelBasis {
  MatrixXd vectors;

  Eigen::Index rank() const { return vectors.cols(); }
  /// P = sum_i X_i X_i^T
  MatrixXd projector() const { return vectors * vectors.transpose(); }
};

inline constexpr double kDegenerateNorm = 1e-12;

/// Gram-Schmidt (classical, one re-orthogonalisation pass) on R^{-1/2} xi_c
/// in the given cycle order.
inline KernelBasis kernel_basis(std::span<const VectorXi> cycle_vectors, const WeightMatrix& weights) {
  if (!weights.positive()) throw InsecureStateError("kernel basis needs strictly positive line weights");
  const auto m = weights.size();
  MatrixXd x(m, static_cast<Eigen::Index>(cycle_vectors.size()));
  for (std::size_t c = 0; c < cycle_vectors.size(); ++c) {
    if (cycle_vectors[c].size() != m) throw ValidationError("cycle vector length differs from the line count");
    const auto ci = static_cast<Eigen::Index>(c);
    VectorXd v = weights.inv_sqrt.cwiseProduct(cycle_vectors[c].cast<double>());
    const double scale = v.norm();
    for (int pass = 0; pass < 2; ++pass) {
      const auto q = x.leftCols(ci);
      v -= q * (q.transpose() * v);
    }
    const double norm = v.norm();
    if (!(norm > kDegenerateNorm * std::max(1.0, scale)))
      throw std::logic_error("kernel_basis: cycle vector " + std::to_string(c + 1) +
                             " is linearly dependent on its predecessors");
    x.col(ci) = v / norm;
  }
  return {std::move(x)};
}

inline KernelBasis kernel_basis(const CycleDecomposition& decomp, const WeightMatrix& weights) {
  if (static_cast<std::size_t>(weights.size()) != decomp.line_count)
    throw ValidationError("weight vector length differs from the line count");
  std::vector<VectorXi> xs;
  xs.reserve(decomp.cycles.size());
  for (const auto& c : decomp.cycles) xs.push_back(c.xi);
  return kernel_basis(std::span<const VectorXi>(xs), weights);
}

/// Smallest cycles through a line: the minimum-length cycle containing it,
/// ties broken by total inverse weight and then by the sorted id list.
/// Returns the 1-based line ids of that cycle, target first.
inline std::vector<int> smallest_cycle_through(const GridSpec& grid, const WeightMatrix& weights, int line_id) {
  const auto k0 = static_cast<std::size_t>(line_id - 1);
  if (k0 >= grid.line_count()) throw ValidationError("unknown line id " + std::to_string(line_id));
  const auto adj = detail::adjacency(grid);
  const auto [a, b] = grid.endpoints(k0);
  const auto n = grid.node_count();

  // BFS distances from b without the target line
  std::vector<int> dist(n, -1);
  std::deque<int> queue{b};
  dist[static_cast<std::size_t>(b)] = 0;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (const auto& [v, k] : adj[static_cast<std::size_t>(u)]) {
      if (static_cast<std::size_t>(k) == k0 || dist[static_cast<std::size_t>(v)] >= 0) continue;
      dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
      queue.push_back(v);
    }
  }
  if (dist[static_cast<std::size_t>(a)] < 0)
    throw DomainError("line e" + std::to_string(line_id) + " is a single line (bridge) and lies in no cycle");

  // enumerate all shortest a -> b paths by walking down the distance layers
  std::vector<int> best;
  double best_inv = std::numeric_limits<double>::infinity();
  std::vector<int> path;
  auto consider = [&]() {
    std::vector<int> ids{line_id};
    for (int k : path) ids.push_back(k + 1);
    double inv = 0.0;
    for (int id : ids) inv += 1.0 / weights.diag(id - 1);
    auto sorted = ids;
    std::sort(sorted.begin(), sorted.end());
    auto best_sorted = best;
    std::sort(best_sorted.begin(), best_sorted.end());
    if (best.empty() || inv < best_inv - 1e-15 * std::abs(best_inv) ||
        (std::abs(inv - best_inv) <= 1e-15 * std::abs(best_inv) && sorted < best_sorted)) {
      best = ids;
      best_inv = inv;
    }
  };
  auto walk = [&](auto&& self, int u) -> void {
    if (u == b) {
      consider();
      return;
    }
    for (const auto& [v, k] : adj[static_cast<std::size_t>(u)]) {
      if (static_cast<std::size_t>(k) == k0) continue;
      if (dist[static_cast<std::size_t>(v)] != dist[static_cast<std::size_t>(u)] - 1) continue;
      path.push_back(k);
      self(self, v);
      path.pop_back();
    }
  };
  walk(walk, a);
  return best;
}

}  // namespace gridfluct
