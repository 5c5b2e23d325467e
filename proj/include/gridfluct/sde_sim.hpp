#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "gridfluct/errors.hpp"
#include "gridfluct/grid_model.hpp"
#include "gridfluct/lyapunov_oracle.hpp"
#include "gridfluct/sync_state.hpp"

namespace gridfluct {

enum class SimModel { linear, nonlinear };
enum class SimEstimator { time_average, ensemble };

inline const char* to_string(SimModel m) { return m == SimModel::linear ? "linear" : "nonlinear"; }
inline const char* to_string(SimEstimator e) { return e == SimEstimator::time_average ? "time-average" : "ensemble"; }

struct SimConfig {
  double dt = 1e-3;
  double horizon = 2000.0;
  double burn_in = 200.0;
  int paths = 8;
  std::uint64_t seed = 42;
  SimModel model = SimModel::linear;
  SimEstimator estimator = SimEstimator::time_average;
  int batches_per_path = 36;  // time-average only
  int sample_every = 10;      // steps between recorded samples, time-average only
  int noise_substeps = 1;     // Brownian increment per step = sum of this many finer increments
  unsigned threads = 1;

  /// Defaults for the ensemble-at-terminal estimator: many short paths, each
  /// contributing its state at t = horizon.
  static SimConfig ensemble_defaults() {
    SimConfig c;
    c.estimator = SimEstimator::ensemble;
    c.paths = 10000;
    c.horizon = 20.0;
    c.burn_in = 0.0;
    return c;
  }
};

/// Empirical stationary moments with batch-means standard errors.
struct SimResult {
  VectorXd omega_var, omega_se;  // n
  VectorXd delta_var, delta_se;  // m
  MatrixXd cross, cross_se;      // m x n
  long long batches = 0;         // independent units behind each standard error
  long long samples = 0;         // recorded states in total
  long long excursion_samples = 0;  // nonlinear: recorded states with some |delta_ij| >= pi/2
  int paths_with_excursion = 0;
  SimModel model = SimModel::linear;
  SimEstimator estimator = SimEstimator::time_average;
};

struct CrossEstimate {
  MatrixXd value;
  MatrixXd standard_error;
};

namespace detail {

// Per-batch raw sums of y = (line differences, frequencies).
struct BatchSums {
  long long count = 0;
  VectorXd sum;      // m + n
  VectorXd sum_sq;   // m + n
  MatrixXd sum_xw;   // m x n
};

inline std::mt19937_64 path_engine(std::uint64_t seed, int path) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(path), 0x9e3779b9u};
  return std::mt19937_64(seq);
}

inline double max_abs_eigenvalue(const MatrixXd& a) { return a.eigenvalues().cwiseAbs().maxCoeff(); }

}  // namespace detail

inline void validate_sim_config(const SimConfig& c) {
  if (!(c.dt > 0.0)) throw ValidationError("simulation: dt must be > 0");
  if (!(c.horizon > 0.0)) throw ValidationError("simulation: horizon must be > 0");
  if (!(c.burn_in >= 0.0) || !(c.burn_in < c.horizon)) throw ValidationError("simulation: need 0 <= burn_in < horizon");
  if (c.paths < 1) throw ValidationError("simulation: paths must be >= 1");
  if (c.batches_per_path < 1 || c.sample_every < 1) throw ValidationError("simulation: batches and sample stride must be >= 1");
  if (c.noise_substeps < 1) throw ValidationError("simulation: noise_substeps must be >= 1");
}

/// Euler-Maruyama simulation of the noise-driven swing dynamics around a
/// secure synchronous state. The angle update uses the freshly updated
/// frequency (semi-implicit step); the explicit variant pumps energy into the
/// lightly damped swing modes and inflates the variances by O(dt * omega^2).
/// Results are bit-identical for equal configs, whatever `threads` is.
/// With noise_substeps = k, a run at step dt consumes the same normals as a
/// run at dt / k with k = 1, so both integrate the same Brownian path.
inline SimResult simulate(const GridSpec& grid, const SynchronousState& state, const SimConfig& cfg) {
  validate_sim_config(cfg);
  const LinearSystem lin = build_linear_system(grid, state);
  const ReducedSystem red = reduce_system(lin);
  const double lam = detail::max_abs_eigenvalue(red.a);
  if (!(cfg.dt * lam < 0.1)) {
    std::ostringstream msg;
    msg << "simulation: dt * max|lambda| = " << cfg.dt * lam << " violates the stability guard (< 0.1)";
    throw ValidationError(msg.str());
  }

  const auto n = static_cast<Eigen::Index>(grid.node_count());
  const auto m = static_cast<Eigen::Index>(grid.line_count());
  std::vector<std::pair<int, int>> ends;
  for (std::size_t k = 0; k < grid.line_count(); ++k) ends.push_back(grid.endpoints(k));
  const VectorXd minv = grid.inertias().cwiseInverse();
  const VectorXd damp = grid.dampings();
  const VectorXd noise_gain = minv.cwiseProduct(grid.noises());
  const VectorXd coupling = cfg.model == SimModel::linear ? state.weights : grid.susceptances();
  const VectorXd p_eff = grid.powers() - state.omega_syn * damp;
  const VectorXd base_diff = state.angle_diffs;

  const long long steps = std::llround(cfg.horizon / cfg.dt);
  const long long burn = std::llround(cfg.burn_in / cfg.dt);
  const double sqsub = std::sqrt(cfg.dt / cfg.noise_substeps);
  const bool ensemble = cfg.estimator == SimEstimator::ensemble;
  const int per_path = ensemble ? 1 : cfg.batches_per_path;
  const long long recorded = ensemble ? 1 : (steps - burn) / cfg.sample_every;
  if (recorded < per_path) throw ValidationError("simulation: window too short for the requested batch count");

  std::vector<detail::BatchSums> batches(static_cast<std::size_t>(cfg.paths) * static_cast<std::size_t>(per_path));
  std::vector<long long> excursions(static_cast<std::size_t>(cfg.paths), 0);

  auto run_path = [&](int p) {
    auto rng = detail::path_engine(cfg.seed, p);
    std::normal_distribution<double> normal(0.0, 1.0);
    VectorXd phi = VectorXd::Zero(n), omega = VectorXd::Zero(n), force(n), diff(m), y(m + n), dw(n);
    auto* out = &batches[static_cast<std::size_t>(p) * static_cast<std::size_t>(per_path)];
    for (int b = 0; b < per_path; ++b) {
      out[b].sum = VectorXd::Zero(m + n);
      out[b].sum_sq = VectorXd::Zero(m + n);
      out[b].sum_xw = MatrixXd::Zero(m, n);
    }
    long long taken = 0;
    auto record = [&](long long slot) {
      auto& bs = out[slot];
      y.head(m) = diff;
      y.tail(n) = omega;
      bs.sum += y;
      bs.sum_sq += y.cwiseAbs2();
      bs.sum_xw.noalias() += diff * omega.transpose();
      ++bs.count;
    };
    auto line_diffs = [&]() {
      for (Eigen::Index k = 0; k < m; ++k) {
        const auto [a, b] = ends[static_cast<std::size_t>(k)];
        diff(k) = phi(a) - phi(b);
      }
    };
    for (long long s = 1; s <= steps; ++s) {
      line_diffs();
      if (cfg.model == SimModel::linear) {
        force.setZero();
        for (Eigen::Index k = 0; k < m; ++k) {
          const auto [a, b] = ends[static_cast<std::size_t>(k)];
          const double f = coupling(k) * diff(k);
          force(a) -= f;
          force(b) += f;
        }
      } else {
        force = p_eff;
        for (Eigen::Index k = 0; k < m; ++k) {
          const auto [a, b] = ends[static_cast<std::size_t>(k)];
          const double f = coupling(k) * std::sin(base_diff(k) + diff(k));
          force(a) -= f;
          force(b) += f;
        }
      }
      dw.setZero();
      for (int sub = 0; sub < cfg.noise_substeps; ++sub)
        for (Eigen::Index i = 0; i < n; ++i) dw(i) += normal(rng);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double w = omega(i);
        omega(i) = w + cfg.dt * minv(i) * (force(i) - damp(i) * w) + sqsub * noise_gain(i) * dw(i);
        phi(i) += cfg.dt * omega(i);
      }
      const bool keep = ensemble ? (s == steps) : (s > burn && (s - burn) % cfg.sample_every == 0);
      if (!keep) continue;
      line_diffs();
      if (cfg.model == SimModel::nonlinear &&
          ((base_diff + diff).array().abs() >= std::numbers::pi / 2).any())
        ++excursions[static_cast<std::size_t>(p)];
      if (taken < recorded) {
        record(ensemble ? 0 : std::min<long long>(taken * per_path / recorded, per_path - 1));
        ++taken;
      }
    }
  };

  const unsigned nthreads = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(cfg.paths)));
  if (nthreads == 1) {
    for (int p = 0; p < cfg.paths; ++p) run_path(p);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < nthreads; ++t)
      pool.emplace_back([&, t] {
        for (int p = static_cast<int>(t); p < cfg.paths; p += static_cast<int>(nthreads)) run_path(p);
      });
  }

  // reduction in fixed path/batch order
  SimResult r;
  r.model = cfg.model;
  r.estimator = cfg.estimator;
  r.batches = static_cast<long long>(batches.size());
  VectorXd mean = VectorXd::Zero(m + n);
  for (const auto& b : batches) {
    mean += b.sum;
    r.samples += b.count;
  }
  mean /= static_cast<double>(r.samples);

  const auto nb = static_cast<double>(batches.size());
  VectorXd acc = VectorXd::Zero(m + n), acc2 = VectorXd::Zero(m + n);
  MatrixXd cacc = MatrixXd::Zero(m, n), cacc2 = MatrixXd::Zero(m, n);
  const VectorXd mx = mean.head(m), mw = mean.tail(n);
  for (const auto& b : batches) {
    const double c = static_cast<double>(b.count);
    // batch variance about the global mean
    const VectorXd v = (b.sum_sq - 2.0 * mean.cwiseProduct(b.sum)) / c + mean.cwiseAbs2();
    const MatrixXd cv = (b.sum_xw - mx * b.sum.tail(n).transpose() - b.sum.head(m) * mw.transpose()) / c +
                        mx * mw.transpose();
    acc += v;
    acc2 += v.cwiseAbs2();
    cacc += cv;
    cacc2 += cv.cwiseAbs2();
  }
  const VectorXd var = acc / nb;
  const MatrixXd cov = cacc / nb;
  VectorXd se = VectorXd::Constant(m + n, std::numeric_limits<double>::infinity());
  MatrixXd cse = MatrixXd::Constant(m, n, std::numeric_limits<double>::infinity());
  if (batches.size() > 1) {
    se = ((acc2 / nb - var.cwiseAbs2()).cwiseMax(0.0) * (nb / (nb - 1.0)) / nb).cwiseSqrt();
    cse = ((cacc2 / nb - cov.cwiseAbs2()).cwiseMax(0.0) * (nb / (nb - 1.0)) / nb).cwiseSqrt();
  }
  r.delta_var = var.head(m);
  r.delta_se = se.head(m);
  r.omega_var = var.tail(n);
  r.omega_se = se.tail(n);
  r.cross = cov;
  r.cross_se = cse;
  for (auto e : excursions) {
    r.excursion_samples += e;
    if (e > 0) ++r.paths_with_excursion;
  }
  return r;
}

inline CrossEstimate estimate_cross(const SimResult& result) { return {result.cross, result.cross_se}; }

}  // namespace gridfluct
