#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridfluct/errors.hpp"
#include "gridfluct/grid_model.hpp"

namespace gridfluct {

struct SolverOptions {
  double tol = 1e-12;  // max-abs nodal residual
  int max_iter = 50;
  bool force = false;  // let insecure states through line_weights()
};

/// Equilibrium of the swing equations, angles relative to node 1.
struct SynchronousState {
  VectorXd angles;      // n, angles(0) == 0
  double omega_syn = 0.0;
  VectorXd angle_diffs;  // m, delta_from - delta_to
  VectorXd line_flows;   // m, l sin(delta_ij)
  VectorXd weights;      // m, l cos(delta_ij)
  bool secure = false;
  double residual = 0.0;
  int iterations = 0;

  /// 1-based ids of lines with |delta_ij| >= pi/2.
  std::vector<int> insecure_lines() const {
    std::vector<int> ids;
    for (Eigen::Index k = 0; k < angle_diffs.size(); ++k)
      if (!(std::abs(angle_diffs(k)) < std::numbers::pi / 2)) ids.push_back(static_cast<int>(k) + 1);
    return ids;
  }
};

/// Diagonal line-weight matrix R, stored as its diagonal.
struct WeightMatrix {
  VectorXd diag;
  VectorXd inv_sqrt;

  explicit WeightMatrix(VectorXd d) : diag(std::move(d)), inv_sqrt(diag.array().rsqrt()) {}

  Eigen::Index size() const { return diag.size(); }
  MatrixXd dense() const { return diag.asDiagonal(); }
  MatrixXd dense_inv_sqrt() const { return inv_sqrt.asDiagonal(); }
  bool positive() const { return (diag.array() > 0.0).all(); }
};

inline double synchronized_frequency(const GridSpec& grid) {
  return grid.powers().sum() / grid.dampings().sum();
}

namespace detail {

inline std::string join_ids(const std::vector<int>& ids) {
  std::string s;
  for (std::size_t i = 0; i < ids.size(); ++i) s += (i ? ", e" : "e") + std::to_string(ids[i]);
  return s;
}

// Mismatch P_eff - C (l sin(C^T delta)).
inline VectorXd balance_residual(const MatrixXd& incidence, const VectorXd& susceptance, const VectorXd& p_eff,
                                 const VectorXd& angles) {
  const VectorXd diffs = incidence.transpose() * angles;
  return p_eff - incidence * susceptance.cwiseProduct(diffs.array().sin().matrix());
}

}  // namespace detail

/// Newton iteration on angles 2..n with node 1 pinned at zero, starting from
/// all-zero angles. Unbalanced injections are absorbed by omega_syn.
/// Throws SolverError when max_iter is exhausted; an insecure equilibrium is
/// returned with `secure == false`.
inline SynchronousState solve_synchronous_state(const GridSpec& grid, const SolverOptions& opts = {}) {
  if (!(opts.tol > 0.0) || opts.max_iter < 1) throw ValidationError("solver options: tol must be > 0, max_iter >= 1");
  const auto n = static_cast<Eigen::Index>(grid.node_count());
  const MatrixXd c = build_incidence(grid).as_real();
  const VectorXd l = grid.susceptances();

  SynchronousState st;
  st.omega_syn = synchronized_frequency(grid);
  const VectorXd p_eff = grid.powers() - st.omega_syn * grid.dampings();

  VectorXd angles = VectorXd::Zero(n);
  VectorXd r = detail::balance_residual(c, l, p_eff, angles);
  double rnorm = r.tail(n - 1).norm();
  int it = 0;
  while (r.tail(n - 1).lpNorm<Eigen::Infinity>() > opts.tol) {
    if (it == opts.max_iter)
      throw SolverError("synchronous state: no convergence after " + std::to_string(opts.max_iter) +
                        " Newton iterations (residual " + std::to_string(r.lpNorm<Eigen::Infinity>()) + ")");
    ++it;
    // dr/ddelta = -C diag(l cos) C^T
    const VectorXd cosw = l.cwiseProduct((c.transpose() * angles).array().cos().matrix());
    const MatrixXd lap = c * cosw.asDiagonal() * c.transpose();
    const VectorXd step = lap.bottomRightCorner(n - 1, n - 1).fullPivLu().solve(r.tail(n - 1));
    if (!step.allFinite()) throw SolverError("synchronous state: singular Jacobian");

    double alpha = 1.0;
    VectorXd trial = angles;
    VectorXd rtrial;
    for (int halving = 0;; ++halving) {
      trial.tail(n - 1) = angles.tail(n - 1) + alpha * step;
      rtrial = detail::balance_residual(c, l, p_eff, trial);
      if (rtrial.tail(n - 1).norm() < rnorm || halving == 30) break;
      alpha *= 0.5;
    }
    angles = trial;
    r = rtrial;
    rnorm = r.tail(n - 1).norm();
  }

  st.angles = angles;
  st.angle_diffs = c.transpose() * angles;
  st.line_flows = l.cwiseProduct(st.angle_diffs.array().sin().matrix());
  st.weights = l.cwiseProduct(st.angle_diffs.array().cos().matrix());
  st.residual = r.lpNorm<Eigen::Infinity>();
  st.iterations = it;
  st.secure = (st.angle_diffs.array().abs() < std::numbers::pi / 2).all();
  return st;
}

/// R = diag(l_k cos delta_k). Refuses insecure states unless `force` is set.
inline WeightMatrix line_weights(const GridSpec& grid, const SynchronousState& state, bool force = false) {
  if (state.weights.size() != static_cast<Eigen::Index>(grid.line_count()))
    throw ValidationError("synchronous state does not belong to this grid");
  if (!force) {
    auto bad = state.insecure_lines();
    for (Eigen::Index k = 0; k < state.weights.size(); ++k)
      if (!(state.weights(k) > 0.0) && std::find(bad.begin(), bad.end(), k + 1) == bad.end())
        bad.push_back(static_cast<int>(k) + 1);
    if (!bad.empty())
      throw InsecureStateError("insecure synchronous state: |delta| >= pi/2 on " + detail::join_ids(bad));
  }
  return WeightMatrix(state.weights);
}

}  // namespace gridfluct
