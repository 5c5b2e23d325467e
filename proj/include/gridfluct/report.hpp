#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridfluct/cycle_space.hpp"
#include "gridfluct/errors.hpp"
#include "gridfluct/example_networks.hpp"
#include "gridfluct/grid_model.hpp"
#include "gridfluct/lyapunov_oracle.hpp"
#include "gridfluct/sync_state.hpp"
#include "gridfluct/variance_analytic.hpp"

namespace gridfluct {

// ---------------------------------------------------------------------------
// Tables

/// Labelled grid of full-precision values; empty cells are std::nullopt.
/// Rounding happens only when rendering.
struct ReportTable {
  std::string title;
  std::string row_header;
  std::vector<std::string> columns;
  std::vector<std::string> rows;
  std::vector<std::vector<std::optional<double>>> cells;

  void add_row(std::string label, std::vector<std::optional<double>> values) {
    values.resize(columns.size());
    rows.push_back(std::move(label));
    cells.push_back(std::move(values));
  }

  std::optional<double> at(std::size_t row, std::size_t col) const { return cells.at(row).at(col); }
};

inline std::string format_fixed(double v, int decimals = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(decimals) << v;
  return s.str();
}

inline std::string format_full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_csv(std::ostream& os, const ReportTable& t) {
  os << t.row_header;
  for (const auto& c : t.columns) os << ',' << c;
  os << '\n';
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    os << t.rows[r];
    for (const auto& v : t.cells[r]) os << ',' << (v ? format_full(*v) : std::string());
    os << '\n';
  }
}

inline void write_text(std::ostream& os, const ReportTable& t, int decimals = 4) {
  std::vector<std::vector<std::string>> body;
  std::vector<std::size_t> width{t.row_header.size()};
  for (const auto& c : t.columns) width.push_back(c.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    std::vector<std::string> line{t.rows[r]};
    for (const auto& v : t.cells[r]) line.push_back(v ? format_fixed(*v, decimals) : "-");
    for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());
    body.push_back(std::move(line));
  }
  if (!t.title.empty()) os << t.title << '\n';
  auto emit = [&](const std::vector<std::string>& line) {
    for (std::size_t i = 0; i < line.size(); ++i)
      os << (i ? "  " : "") << (i ? std::right : std::left) << std::setw(static_cast<int>(width[i])) << line[i];
    os << '\n';
  };
  std::vector<std::string> header{t.row_header};
  header.insert(header.end(), t.columns.begin(), t.columns.end());
  emit(header);
  for (const auto& line : body) emit(line);
}

enum class OutputFormat { csv, table };

inline void write_table(std::ostream& os, const ReportTable& t, OutputFormat f) {
  if (f == OutputFormat::csv)
    write_csv(os, t);
  else
    write_text(os, t);
}

// ---------------------------------------------------------------------------
// Per-grid analysis

enum class VarianceMethod { analytic, oracle };

/// Solved state, topology and stationary variances of one grid.
struct Analysis {
  GridSpec grid;
  SynchronousState state;
  WeightMatrix weights;
  CycleDecomposition decomp;
  RatioProfile profile;
  VarianceReport report;
};

/// Solves the synchronous state and computes the variances. Non-uniform
/// profiles always use the Lyapunov computation.
inline Analysis analyze(const GridSpec& grid, const SolverOptions& opts = {},
                        VarianceMethod method = VarianceMethod::analytic) {
  auto state = solve_synchronous_state(grid, opts);
  WeightMatrix w = line_weights(grid, state, opts.force);
  auto decomp = decompose(grid);
  auto profile = classify_ratio(grid);
  VarianceReport rep = (method == VarianceMethod::analytic && profile.uniform)
                           ? analytic_report(grid, w, decomp, profile)
                           : oracle_report(grid, state, opts.force);
  return {grid, std::move(state), std::move(w), std::move(decomp), std::move(profile), std::move(rep)};
}

inline ReportTable node_table(const GridSpec& grid, const VectorXd& variance) {
  ReportTable t{"", "node", {"inertia", "variance"}, {}, {}};
  for (std::size_t i = 0; i < grid.node_count(); ++i)
    t.add_row(std::to_string(i + 1), {grid.nodes()[i].inertia, variance(static_cast<Eigen::Index>(i))});
  return t;
}

inline ReportTable line_table(const GridSpec& grid, const VectorXd& weights, const VectorXd& variance) {
  ReportTable t{"", "line", {"from", "to", "weight", "variance"}, {}, {}};
  for (std::size_t k = 0; k < grid.line_count(); ++k) {
    const auto& l = grid.lines()[k];
    const auto ki = static_cast<Eigen::Index>(k);
    t.add_row(std::to_string(k + 1), {double(l.from), double(l.to), weights(ki), variance(ki)});
  }
  return t;
}

// ---------------------------------------------------------------------------
// Example tables

struct ExampleTables {
  ReportTable weights;            // cases 2-4
  ReportTable frequency;          // closed form, every fixture
  ReportTable phase;              // closed form, every fixture
  ReportTable frequency_oracle;   // Lyapunov, every fixture
  ReportTable phase_oracle;       // Lyapunov, every fixture
  double max_oracle_gap = 0.0;    // max |analytic - oracle| over all Q entries
};

inline std::string fixture_label(const example::Fixture& f) {
  return std::string("case ") + std::to_string(f.scenario) + " (" + f.network + ")";
}

/// Regenerates the weight, frequency-variance and phase-variance tables of
/// the example networks from scratch. An insecure fixture aborts with the
/// offending lines.
inline ExampleTables emit_example_tables(const SolverOptions& opts = {}) {
  std::vector<std::string> lines, nodes;
  for (int k = 1; k <= 9; ++k) lines.push_back("e" + std::to_string(k));
  for (int i = 1; i <= 7; ++i) nodes.push_back(std::to_string(i));
  ExampleTables out{{"Line weights", "case", lines, {}, {}},
                    {"Frequency variances (closed form)", "case", nodes, {}, {}},
                    {"Phase-difference variances (closed form)", "case", lines, {}, {}},
                    {"Frequency variances (Lyapunov)", "case", nodes, {}, {}},
                    {"Phase-difference variances (Lyapunov)", "case", lines, {}, {}},
                    0.0};
  for (const auto& f : example::fixtures()) {
    const auto label = fixture_label(f);
    const Analysis a = [&] {
      try {
        return analyze(f.grid, opts, VarianceMethod::analytic);
      } catch (const InsecureStateError& e) {
        throw InsecureStateError(f.name + ": " + e.what());
      }
    }();
    const auto oracle = oracle_report(f.grid, a.state);
    auto row = [](const VectorXd& v) {
      std::vector<std::optional<double>> r;
      for (Eigen::Index i = 0; i < v.size(); ++i) r.emplace_back(v(i));
      return r;
    };
    if (f.scenario >= 2) out.weights.add_row(label, row(a.weights.diag));
    out.frequency.add_row(label, row(a.report.per_node()));
    out.phase.add_row(label, row(a.report.per_line()));
    out.frequency_oracle.add_row(label, row(oracle.per_node()));
    out.phase_oracle.add_row(label, row(oracle.per_line()));
    out.max_oracle_gap = std::max({out.max_oracle_gap, (a.report.q_omega - oracle.q_omega).cwiseAbs().maxCoeff(),
                                   (a.report.q_delta - oracle.q_delta).cwiseAbs().maxCoeff(),
                                   oracle.q_cross.cwiseAbs().maxCoeff()});
  }
  return out;
}

// ---------------------------------------------------------------------------
// What-if edits

struct GridEdit {
  enum class Kind { add_line, set_susceptance } kind = Kind::add_line;
  int from = 0, to = 0;  // add_line
  int line = 0;          // set_susceptance
  double susceptance = 0.0;

  static GridEdit add(int from, int to, double susceptance) { return {Kind::add_line, from, to, 0, susceptance}; }
  static GridEdit set(int line, double susceptance) { return {Kind::set_susceptance, 0, 0, line, susceptance}; }

  GridSpec apply(const GridSpec& g) const {
    return kind == Kind::add_line ? g.with_line(from, to, susceptance) : g.with_susceptance(line, susceptance);
  }
};

struct WhatIfResult {
  Analysis before;
  Analysis after;
  VectorXd node_delta;  // after - before
  VectorXd line_delta;  // after - before over the lines present before
  std::vector<int> weight_decreased;  // 1-based ids of pre-existing lines whose weight dropped
};

inline WhatIfResult whatif(const GridSpec& grid, const GridEdit& edit, const SolverOptions& opts = {},
                           VarianceMethod method = VarianceMethod::analytic) {
  auto before = analyze(grid, opts, method);
  const GridSpec edited = edit.apply(grid);
  auto after = [&] {
    try {
      return analyze(edited, opts, method);
    } catch (const InsecureStateError& e) {
      throw InsecureStateError(std::string("edit makes the grid insecure: ") + e.what());
    }
  }();
  WhatIfResult r{std::move(before), std::move(after), {}, {}, {}};
  const auto m = static_cast<Eigen::Index>(grid.line_count());
  r.node_delta = r.after.report.per_node() - r.before.report.per_node();
  r.line_delta = r.after.report.per_line().head(m) - r.before.report.per_line();
  for (Eigen::Index k = 0; k < m; ++k)
    if (r.after.weights.diag(k) < r.before.weights.diag(k) - 1e-12 * r.before.weights.diag(k))
      r.weight_decreased.push_back(static_cast<int>(k) + 1);
  return r;
}

}  // namespace gridfluct
