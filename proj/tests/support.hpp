#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gridfluct/grid_model.hpp"
#include "gridfluct/sync_state.hpp"

namespace gridfluct::testing {

// Printed table cells carry 4 decimals; the slack admits values that sit
// exactly on a rounding boundary (e.g. 0.03125 printed as 0.0313).
inline constexpr double kCellTol = 5e-5 + 1e-12;

struct RandomGridOptions {
  int min_nodes = 2;
  int max_nodes = 10;
  int max_lines = 20;
  bool uniform_eta = true;
  double eta_lo = 0.5;
  double eta_hi = 2.0;
  double power_scale = 1.0;  // injections drawn from [-scale, scale]
};

/// Random connected grid: a random tree (node i hangs off some j < i) plus
/// random extra lines, random orientations, susceptances in [5, 20].
inline GridSpec random_grid(std::mt19937_64& rng, const RandomGridOptions& o = {}) {
  std::uniform_int_distribution<int> pick_n(o.min_nodes, o.max_nodes);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n = pick_n(rng);
  const int max_m = std::min(o.max_lines, n * (n - 1) / 2);
  std::uniform_int_distribution<int> pick_m(n - 1, max_m);
  const int m = pick_m(rng);

  std::vector<std::pair<int, int>> ends;
  std::set<std::pair<int, int>> used;
  auto orient = [&](int a, int b) { return unit(rng) < 0.5 ? std::pair{a, b} : std::pair{b, a}; };
  for (int i = 2; i <= n; ++i) {
    const int j = std::uniform_int_distribution<int>(1, i - 1)(rng);
    used.insert({j, i});
    ends.push_back(orient(j, i));
  }
  std::uniform_int_distribution<int> pick_node(1, n);
  while (static_cast<int>(ends.size()) < m) {
    int a = pick_node(rng), b = pick_node(rng);
    if (a == b) continue;
    if (!used.insert(std::minmax(a, b)).second) continue;
    ends.push_back(orient(a, b));
  }
  std::shuffle(ends.begin(), ends.end(), rng);

  const double eta_common = o.eta_lo + (o.eta_hi - o.eta_lo) * unit(rng);
  std::vector<NodeSpec> nodes;
  for (int i = 1; i <= n; ++i) {
    const double inertia = 0.5 + 4.5 * unit(rng);
    const double damping = 0.5 + 4.5 * unit(rng);
    const double eta = o.uniform_eta ? eta_common : o.eta_lo + (o.eta_hi - o.eta_lo) * unit(rng);
    const double power = o.power_scale * (2.0 * unit(rng) - 1.0);
    nodes.push_back({i, power, inertia, damping, std::sqrt(eta * damping)});
  }
  std::vector<LineSpec> lines;
  for (std::size_t k = 0; k < ends.size(); ++k)
    lines.push_back({static_cast<int>(k) + 1, ends[k].first, ends[k].second, 5.0 + 15.0 * unit(rng)});
  return GridSpec(std::move(nodes), std::move(lines));
}

/// Draws until the synchronous state solves and is secure.
inline GridSpec random_secure_grid(std::mt19937_64& rng, const RandomGridOptions& o = {}) {
  for (;;) {
    GridSpec g = random_grid(rng, o);
    try {
      if (solve_synchronous_state(g).secure) return g;
    } catch (const SolverError&) {
    }
  }
}

/// Random permutation of 1..m.
inline std::vector<int> random_line_order(std::mt19937_64& rng, std::size_t m) {
  std::vector<int> order(m);
  for (std::size_t k = 0; k < m; ++k) order[k] = static_cast<int>(k) + 1;
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

inline double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

inline double min_eigenvalue(const Eigen::MatrixXd& sym) {
  const Eigen::MatrixXd s = 0.5 * (sym + sym.transpose());
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(s, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

// With a uniform ratio the nonlinear stationary law is Gibbs at temperature eta/2,
// and the marginal of a bridge difference is one-dimensional: exp(b (l cos(d* + x) + f x)).
inline double gibbs_bridge_variance(double l, double angle, double flow, double eta) {
  const double b = 2.0 / eta;
  const double lo = -M_PI - 2 * angle, hi = M_PI - 2 * angle;  // neighbouring potential maxima
  const int n = 200000;
  const double h = (hi - lo) / n;
  double z = 0, m1 = 0, m2 = 0;
  for (int i = 0; i <= n; ++i) {
    const double x = lo + i * h;
    const double w = (i == 0 || i == n ? 0.5 : 1.0) * std::exp(b * (l * std::cos(angle + x) - l * std::cos(angle) + flow * x));
    z += w;
    m1 += w * x;
    m2 += w * x * x;
  }
  return m2 / z - (m1 / z) * (m1 / z);
}

}  // namespace gridfluct::testing
