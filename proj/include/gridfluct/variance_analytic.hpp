#pragma once

#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridfluct/cycle_space.hpp"
#include "gridfluct/errors.hpp"
#include "gridfluct/grid_model.hpp"
#include "gridfluct/sync_state.hpp"

namespace gridfluct {

enum class Provenance { analytic, oracle, monte_carlo };

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::analytic: return "analytic";
    case Provenance::oracle: return "oracle";
    case Provenance::monte_carlo: return "monte-carlo";
  }
  return "?";
}

/// Stationary covariance of (line phase differences, node frequencies).
struct VarianceReport {
  MatrixXd q_omega;  // n x n
  MatrixXd q_delta;  // m x m
  MatrixXd q_cross;  // m x n, Cov(delta-differences, omega)
  Provenance provenance = Provenance::analytic;

  VectorXd per_node() const { return q_omega.diagonal(); }
  VectorXd per_line() const { return q_delta.diagonal(); }
};

struct VarianceBounds {
  MatrixXd q_omega_lower, q_omega_upper;
  MatrixXd q_delta_lower, q_delta_upper;
};

/// Q_omega = (eta / 2) M^{-1} for a uniform ratio profile.
inline MatrixXd q_omega(const GridSpec& grid, const RatioProfile& profile) {
  const double eta = profile.common();
  return (0.5 * eta * grid.inertias().cwiseInverse()).asDiagonal();
}

/// R^{-1/2} (I - sum X_i X_i^T) R^{-1/2}, the eta-free part of Q_delta.
inline MatrixXd cycle_compliance(const KernelBasis& basis, const WeightMatrix& weights) {
  const auto m = weights.size();
  if (basis.vectors.rows() != m && basis.rank() > 0) throw ValidationError("kernel basis does not match the weights");
  MatrixXd inner = MatrixXd::Identity(m, m);
  if (basis.rank() > 0) inner -= basis.projector();
  const auto s = weights.inv_sqrt.asDiagonal();
  MatrixXd out = s * inner * s;
  return 0.5 * (out + out.transpose());
}

/// Q_delta = (eta / 2) R^{-1/2} (I - sum X_i X_i^T) R^{-1/2}.
inline MatrixXd q_delta(const KernelBasis& basis, const WeightMatrix& weights, const RatioProfile& profile) {
  const double eta = profile.common();
  if (!weights.positive()) throw InsecureStateError("Q_delta needs strictly positive line weights");
  return 0.5 * eta * cycle_compliance(basis, weights);
}

/// Uniform ratios decorrelate phase differences from frequencies.
inline MatrixXd q_cross(const RatioProfile& profile, Eigen::Index lines, Eigen::Index nodes) {
  (void)profile.common();
  return MatrixXd::Zero(lines, nodes);
}

/// Phase-difference variance of the line at `target` inside an isolated
/// single-cycle cluster whose line weights are `cycle_weights`:
///   (eta/2) (1/l - 1/(l^2 sum_r 1/l_r)).
inline double single_cycle_variance(std::span<const double> cycle_weights, std::size_t target, double eta) {
  if (cycle_weights.size() < 3) throw DomainError("a cycle needs at least 3 lines");
  if (target >= cycle_weights.size()) throw DomainError("target index outside the cycle");
  double inv_sum = 0.0;
  for (double w : cycle_weights) {
    if (!(w > 0.0)) throw DomainError("cycle line weights must be > 0");
    inv_sum += 1.0 / w;
  }
  const double l = cycle_weights[target];
  return 0.5 * eta * (1.0 / l - 1.0 / (l * l * inv_sum));
}

/// Conservative estimate of a cycle line's variance: the single-cycle formula
/// on the smallest cycle through it. Throws DomainError for a bridge.
inline double smallest_cycle_approx(const GridSpec& grid, const CycleDecomposition& decomp,
                                    const WeightMatrix& weights, int line_id, double eta) {
  if (decomp.is_bridge(line_id))
    throw DomainError("line e" + std::to_string(line_id) + " is a single line (bridge) and lies in no cycle");
  const auto cycle = smallest_cycle_through(grid, weights, line_id);
  std::vector<double> w;
  for (int id : cycle) w.push_back(weights.diag(id - 1));
  return single_cycle_variance(w, 0, eta);
}

/// Semidefinite bounds (eta_min / 2) S <= Q <= (eta_max / 2) S for
/// S = M^{-1} and S = R^{-1/2}(I - P)R^{-1/2}. Equal for uniform profiles.
inline VarianceBounds variance_bounds(const GridSpec& grid, const KernelBasis& basis, const WeightMatrix& weights,
                                      const RatioProfile& profile) {
  if (!weights.positive()) throw InsecureStateError("variance bounds need strictly positive line weights");
  const MatrixXd minv = grid.inertias().cwiseInverse().asDiagonal();
  const MatrixXd comp = cycle_compliance(basis, weights);
  double lo = profile.eta_min, hi = profile.eta_max;
  if (profile.uniform) lo = hi = profile.common();
  return {0.5 * lo * minv, 0.5 * hi * minv, 0.5 * lo * comp, 0.5 * hi * comp};
}

/// Full closed-form report for a uniform grid whose synchronous state is
/// already solved.
inline VarianceReport analytic_report(const GridSpec& grid, const WeightMatrix& weights,
                                      const CycleDecomposition& decomp, const RatioProfile& profile) {
  const auto basis = kernel_basis(decomp, weights);
  VarianceReport r;
  r.q_omega = q_omega(grid, profile);
  r.q_delta = q_delta(basis, weights, profile);
  r.q_cross = q_cross(profile, static_cast<Eigen::Index>(grid.line_count()),
                      static_cast<Eigen::Index>(grid.node_count()));
  r.provenance = Provenance::analytic;
  return r;
}

}  // namespace gridfluct
