#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "gridfluct/errors.hpp"
#include "gridfluct/grid_model.hpp"
#include "gridfluct/lyapunov.hpp"
#include "gridfluct/sync_state.hpp"
#include "gridfluct/variance_analytic.hpp"

namespace gridfluct {

/// Linearisation of the swing equations around a synchronous state, with
/// state x = (delta, omega), noise input and output y = (C~^T delta, omega).
struct LinearSystem {
  MatrixXd a;  // 2n x 2n
  MatrixXd b;  // 2n x n
  MatrixXd c;  // (m+n) x 2n
  MatrixXd laplacian;
  Eigen::Index nodes = 0;
  Eigen::Index lines = 0;
};

/// The linear system with the common-angle zero mode quotiented out:
/// y = U^T delta for an orthonormal basis U of the complement of 1_n.
struct ReducedSystem {
  MatrixXd a;  // (2n-1) x (2n-1)
  MatrixXd b;  // (2n-1) x n
  MatrixXd c;  // (m+n) x (2n-1)
  MatrixXd u;  // n x (n-1)
  Eigen::Index nodes = 0;
  Eigen::Index lines = 0;

  /// Maps a full state (delta, omega) to reduced coordinates.
  VectorXd reduce(const VectorXd& x) const {
    VectorXd r(a.rows());
    r.head(nodes - 1) = u.transpose() * x.head(nodes);
    r.tail(nodes) = x.tail(nodes);
    return r;
  }
};

inline constexpr double kHurwitzThreshold = -1e-9;

inline LinearSystem build_linear_system(const GridSpec& grid, const SynchronousState& state, bool force = false) {
  const WeightMatrix w = line_weights(grid, state, force);
  const auto n = static_cast<Eigen::Index>(grid.node_count());
  const auto m = static_cast<Eigen::Index>(grid.line_count());
  const MatrixXd inc = build_incidence(grid).as_real();
  const VectorXd minv = grid.inertias().cwiseInverse();

  LinearSystem s;
  s.nodes = n;
  s.lines = m;
  s.laplacian = inc * w.diag.asDiagonal() * inc.transpose();
  s.a = MatrixXd::Zero(2 * n, 2 * n);
  s.a.topRightCorner(n, n).setIdentity();
  s.a.bottomLeftCorner(n, n) = -(minv.asDiagonal() * s.laplacian);
  s.a.bottomRightCorner(n, n) = -(minv.cwiseProduct(grid.dampings())).asDiagonal().toDenseMatrix();
  s.b = MatrixXd::Zero(2 * n, n);
  s.b.bottomRows(n) = minv.cwiseProduct(grid.noises()).asDiagonal();
  s.c = MatrixXd::Zero(m + n, 2 * n);
  s.c.topLeftCorner(m, n) = inc.transpose();
  s.c.bottomRightCorner(n, n).setIdentity();
  return s;
}

/// Orthonormal basis of {v : 1^T v = 0} from a Householder QR of 1_n.
inline MatrixXd ones_complement_basis(Eigen::Index n) {
  const MatrixXd ones = MatrixXd::Ones(n, 1);
  const Eigen::HouseholderQR<MatrixXd> qr(ones);
  const MatrixXd q = qr.householderQ() * MatrixXd::Identity(n, n);
  return q.rightCols(n - 1);
}

/// Removes the zero mode. `basis` may override the complement basis U; it
/// must be n x (n-1) with orthonormal columns orthogonal to 1_n.
inline ReducedSystem reduce_system(const LinearSystem& sys, std::optional<MatrixXd> basis = std::nullopt) {
  const auto n = sys.nodes;
  ReducedSystem r;
  r.nodes = n;
  r.lines = sys.lines;
  r.u = basis ? *basis : ones_complement_basis(n);
  if (r.u.rows() != n || r.u.cols() != n - 1) throw ValidationError("complement basis must be n x (n-1)");
  if ((r.u.transpose() * r.u - MatrixXd::Identity(n - 1, n - 1)).cwiseAbs().maxCoeff() > 1e-10 ||
      (r.u.transpose() * VectorXd::Ones(n)).cwiseAbs().maxCoeff() > 1e-10)
    throw ValidationError("complement basis must be orthonormal and orthogonal to the all-ones vector");

  MatrixXd t = MatrixXd::Zero(2 * n, 2 * n - 1);
  t.topLeftCorner(n, n - 1) = r.u;
  t.bottomRightCorner(n, n).setIdentity();
  r.a = t.transpose() * sys.a * t;
  r.b = t.transpose() * sys.b;
  r.c = sys.c * t;

  const Eigen::VectorXcd ev = r.a.eigenvalues();
  const double max_re = ev.real().maxCoeff();
  if (!(max_re < kHurwitzThreshold)) {
    std::ostringstream msg;
    msg << "reduced system is not Hurwitz (max Re lambda = " << max_re
        << "); the grid is disconnected or the synchronous state is insecure";
    throw SolverError(msg.str());
  }
  return r;
}

struct OracleSolution {
  MatrixXd qx;          // reduced state covariance
  VarianceReport report;
  double residual = 0.0;  // ||A Qx + Qx A^T + B B^T||_max / ||B B^T||_max
  double condition = 0.0;
};

/// Stationary output covariance C Qx C^T where Qx solves the reduced
/// Lyapunov equation.
inline OracleSolution solve_stationary(const ReducedSystem& red) {
  const MatrixXd bbt = red.b * red.b.transpose();
  auto lyap = solve_continuous_lyapunov(red.a, bbt);
  OracleSolution out;
  out.qx = std::move(lyap.x);
  out.condition = lyap.condition;
  const double scale = bbt.cwiseAbs().maxCoeff();
  const MatrixXd res = red.a * out.qx + out.qx * red.a.transpose() + bbt;
  out.residual = scale > 0 ? res.cwiseAbs().maxCoeff() / scale : res.cwiseAbs().maxCoeff();
  if (!(out.residual <= 1e-10) && scale > 0) {
    std::ostringstream msg;
    msg << "lyapunov residual " << out.residual << " too large (condition estimate " << out.condition << ")";
    throw SolverError(msg.str());
  }
  MatrixXd q = red.c * out.qx * red.c.transpose();
  q = 0.5 * (q + q.transpose());
  const auto m = red.lines, n = red.nodes;
  out.report.q_delta = q.topLeftCorner(m, m);
  out.report.q_omega = q.bottomRightCorner(n, n);
  out.report.q_cross = q.topRightCorner(m, n);
  out.report.provenance = Provenance::oracle;
  return out;
}

inline VarianceReport stationary_variance(const ReducedSystem& red) { return solve_stationary(red).report; }

/// Convenience: linearise, reduce and solve in one call.
inline VarianceReport oracle_report(const GridSpec& grid, const SynchronousState& state, bool force = false) {
  return stationary_variance(reduce_system(build_linear_system(grid, state, force)));
}

}  // namespace gridfluct
