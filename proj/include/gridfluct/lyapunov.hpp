#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridfluct/errors.hpp"

namespace gridfluct {

struct LyapunovSolution {
  Eigen::MatrixXd x;
  /// ||T||_F / min separation of the diagonal Schur blocks; large values
  /// mean eigenvalue pairs with lambda_i + lambda_j close to zero.
  double condition = 0.0;
};

/// Solves A X + X A^T + Q = 0 by reducing A to real Schur form
/// A = U T U^T and back-substituting over the 1x1 / 2x2 diagonal blocks of T.
/// Q must be symmetric; the returned X is symmetrised.
inline LyapunovSolution solve_continuous_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q) {
  using Eigen::MatrixXd;
  const auto n = a.rows();
  if (a.cols() != n || q.rows() != n || q.cols() != n)
    throw ValidationError("lyapunov: A and Q must be square and of equal size");
  if (n == 0) return {MatrixXd(0, 0), 0.0};

  Eigen::RealSchur<MatrixXd> schur(a);
  if (schur.info() != Eigen::Success) throw SolverError("lyapunov: Schur decomposition failed");
  const MatrixXd& u = schur.matrixU();
  const MatrixXd& t = schur.matrixT();
  const MatrixXd f = -(u.transpose() * q * u);

  // diagonal block starts
  std::vector<Eigen::Index> start;
  for (Eigen::Index i = 0; i < n;) {
    start.push_back(i);
    i += (i + 1 < n && t(i + 1, i) != 0.0) ? 2 : 1;
  }
  const auto nb = static_cast<Eigen::Index>(start.size());
  auto bsize = [&](Eigen::Index b) { return (b + 1 < nb ? start[static_cast<std::size_t>(b + 1)] : n) - start[static_cast<std::size_t>(b)]; };

  const double tnorm = std::max(t.norm(), std::numeric_limits<double>::min());
  double sep = std::numeric_limits<double>::infinity();
  MatrixXd y = MatrixXd::Zero(n, n);
  for (Eigen::Index bk = nb - 1; bk >= 0; --bk) {
    const auto k0 = start[static_cast<std::size_t>(bk)], kn = bsize(bk);
    for (Eigen::Index bl = nb - 1; bl >= 0; --bl) {
      const auto l0 = start[static_cast<std::size_t>(bl)], ln = bsize(bl);
      MatrixXd rhs = f.block(k0, l0, kn, ln);
      const auto kend = k0 + kn, lend = l0 + ln;
      if (kend < n) rhs -= t.block(k0, kend, kn, n - kend) * y.block(kend, l0, n - kend, ln);
      if (lend < n) rhs -= y.block(k0, lend, kn, n - lend) * t.block(l0, lend, ln, n - lend).transpose();
      // T_kk Y + Y T_ll^T = rhs  <=>  (I (x) T_kk + T_ll (x) I) vec(Y) = vec(rhs)
      const auto sz = kn * ln;
      MatrixXd kron = MatrixXd::Zero(sz, sz);
      const MatrixXd tkk = t.block(k0, k0, kn, kn), tll = t.block(l0, l0, ln, ln);
      for (Eigen::Index j = 0; j < ln; ++j) {
        kron.block(j * kn, j * kn, kn, kn) += tkk;
        for (Eigen::Index i = 0; i < ln; ++i)
          kron.block(j * kn, i * kn, kn, kn) += tll(j, i) * MatrixXd::Identity(kn, kn);
      }
      const Eigen::JacobiSVD<MatrixXd> svd(kron);
      const double smin = svd.singularValues()(sz - 1);
      sep = std::min(sep, smin);
      if (!(smin > 1e-14 * tnorm)) {
        std::ostringstream msg;
        msg << "lyapunov: A has eigenvalues with lambda_i + lambda_j ~ 0 (condition estimate "
            << (smin > 0 ? tnorm / smin : std::numeric_limits<double>::infinity()) << ")";
        throw SolverError(msg.str());
      }
      const Eigen::VectorXd vec = Eigen::Map<const Eigen::VectorXd>(rhs.data(), sz);
      const Eigen::VectorXd sol = kron.fullPivLu().solve(vec);
      y.block(k0, l0, kn, ln) = Eigen::Map<const MatrixXd>(sol.data(), kn, ln);
    }
  }
  MatrixXd x = u * y * u.transpose();
  x = 0.5 * (x + x.transpose());
  return {std::move(x), tnorm / sep};
}

}  // namespace gridfluct
