// gridfluct: stationary fluctuation analysis of lossless swing-equation grids.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gridfluct/cycle_space.hpp"
#include "gridfluct/errors.hpp"
#include "gridfluct/grid_model.hpp"
#include "gridfluct/lyapunov_oracle.hpp"
#include "gridfluct/report.hpp"
#include "gridfluct/sde_sim.hpp"
#include "gridfluct/sync_state.hpp"
#include "gridfluct/variance_analytic.hpp"

namespace fs = std::filesystem;
using namespace gridfluct;

namespace {

enum ExitCode { kOk = 0, kInternal = 1, kValidation = 2, kSolver = 3, kInsecure = 4 };

struct Globals {
  std::string output_dir;
  std::string format = "csv";
};

struct NamedTable {
  std::string name;
  ReportTable table;
};

OutputFormat output_format(const Globals& g) { return g.format == "table" ? OutputFormat::table : OutputFormat::csv; }

void emit(const Globals& g, const std::vector<NamedTable>& tables) {
  const auto fmt = output_format(g);
  if (!g.output_dir.empty()) {
    fs::create_directories(g.output_dir);
    for (const auto& t : tables) {
      const auto path = fs::path(g.output_dir) / (t.name + (fmt == OutputFormat::csv ? ".csv" : ".txt"));
      std::ofstream out(path);
      if (!out) throw ValidationError("cannot write " + path.string());
      write_table(out, t.table, fmt);
    }
    return;
  }
  for (std::size_t i = 0; i < tables.size(); ++i) {
    if (i) std::cout << '\n';
    if (fmt == OutputFormat::csv) std::cout << "# " << tables[i].name << '\n';
    write_table(std::cout, tables[i].table, fmt);
  }
}

void write_matrix_csv(const fs::path& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_full(m(i, j));
    out << '\n';
  }
}

std::vector<std::optional<double>> row_of(std::initializer_list<double> v) { return {v.begin(), v.end()}; }

struct SimFlags {
  std::string model = "linear";
  std::string estimator = "time-average";
  double dt = 1e-3;
  std::optional<double> horizon, burn_in;  // unset: estimator default
  int paths = 0;                           // 0: estimator default
  std::uint64_t seed = 42;
  unsigned threads = 1;

  void add_to(CLI::App* app) {
    app->add_option("--model", model, "Drift model")->check(CLI::IsMember({"linear", "nonlinear"}));
    app->add_option("--estimator", estimator, "Variance estimator")
        ->check(CLI::IsMember({"time-average", "ensemble"}));
    app->add_option("--dt", dt, "Euler-Maruyama step [s]");
    app->add_option("--horizon", horizon, "Simulated time per path [s] (default 2000 time-average, 20 ensemble)");
    app->add_option("--burn-in", burn_in, "Discarded initial window [s] (default 200 time-average, 0 ensemble)");
    app->add_option("--paths", paths, "Number of paths (default 8 time-average, 10000 ensemble)");
    app->add_option("--seed", seed, "Base random seed");
    app->add_option("--threads", threads, "Worker threads");
  }

  SimConfig config() const {
    SimConfig c = estimator == "ensemble" ? SimConfig::ensemble_defaults() : SimConfig{};
    c.model = model == "linear" ? SimModel::linear : SimModel::nonlinear;
    c.dt = dt;
    if (horizon) c.horizon = *horizon;
    if (burn_in) c.burn_in = *burn_in;
    if (paths > 0) c.paths = paths;
    c.seed = seed;
    c.threads = threads;
    return c;
  }
};

std::vector<NamedTable> simulation_tables(const GridSpec& grid, const SynchronousState& state, const SimResult& r,
                                          bool with_cross) {
  ReportTable nodes{"", "node", {"inertia", "variance", "std_error"}, {}, {}};
  for (std::size_t i = 0; i < grid.node_count(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    nodes.add_row(std::to_string(i + 1), row_of({grid.nodes()[i].inertia, r.omega_var(ii), r.omega_se(ii)}));
  }
  ReportTable lines{"", "line", {"from", "to", "weight", "variance", "std_error"}, {}, {}};
  for (std::size_t k = 0; k < grid.line_count(); ++k) {
    const auto ki = static_cast<Eigen::Index>(k);
    const auto& l = grid.lines()[k];
    lines.add_row(std::to_string(k + 1),
                  row_of({double(l.from), double(l.to), state.weights(ki), r.delta_var(ki), r.delta_se(ki)}));
  }
  ReportTable summary{"", "quantity", {"value"}, {}, {}};
  summary.add_row("samples", row_of({double(r.samples)}));
  summary.add_row("batches", row_of({double(r.batches)}));
  summary.add_row("excursion_samples", row_of({double(r.excursion_samples)}));
  summary.add_row("paths_with_excursion", row_of({double(r.paths_with_excursion)}));
  std::vector<NamedTable> out{{"nodes", nodes}, {"lines", lines}, {"summary", summary}};
  if (with_cross) {
    ReportTable cross{"", "line", {}, {}, {}};
    for (std::size_t i = 0; i < grid.node_count(); ++i) {
      cross.columns.push_back("cov_w" + std::to_string(i + 1));
      cross.columns.push_back("se_w" + std::to_string(i + 1));
    }
    for (Eigen::Index k = 0; k < r.cross.rows(); ++k) {
      std::vector<std::optional<double>> row;
      for (Eigen::Index i = 0; i < r.cross.cols(); ++i) {
        row.emplace_back(r.cross(k, i));
        row.emplace_back(r.cross_se(k, i));
      }
      cross.add_row(std::to_string(k + 1), row);
    }
    out.push_back({"cross", cross});
  }
  return out;
}

void dump_matrices(const fs::path& dir, const GridSpec& grid, const SynchronousState& state, bool force) {
  fs::create_directories(dir);
  const auto sys = build_linear_system(grid, state, force);
  const auto red = reduce_system(sys);
  const auto sol = solve_stationary(red);
  write_matrix_csv(dir / "A.csv", sys.a);
  write_matrix_csv(dir / "B.csv", sys.b);
  write_matrix_csv(dir / "C.csv", sys.c);
  write_matrix_csv(dir / "U.csv", red.u);
  write_matrix_csv(dir / "Ar.csv", red.a);
  write_matrix_csv(dir / "Br.csv", red.b);
  write_matrix_csv(dir / "Cr.csv", red.c);
  write_matrix_csv(dir / "Qx.csv", sol.qx);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stationary frequency and phase-difference fluctuations of lossless power grids"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--output", g.output_dir, "Write each table to <dir>/<name>.csv instead of stdout");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "table"}));

  std::string grid_path;
  SolverOptions solver;
  auto add_solver_flags = [&](CLI::App* sub) {
    sub->add_option("--tol", solver.tol, "Max nodal residual of the synchronous state");
    sub->add_option("--max-iter", solver.max_iter, "Newton iteration limit");
    sub->add_flag("--force", solver.force, "Analyse insecure synchronous states anyway");
  };

  auto* solve = app.add_subcommand("solve", "Solve the synchronous state and line weights");
  solve->add_option("grid", grid_path, "Grid JSON file")->required();
  add_solver_flags(solve);

  auto* cycles = app.add_subcommand("cycles", "Single lines, cycle-clusters and fundamental cycle vectors");
  cycles->add_option("grid", grid_path, "Grid JSON file")->required();

  std::string method = "analytic";
  std::string dump_dir;
  SimFlags sim;
  auto* variance = app.add_subcommand("variance", "Stationary variances per node and per line");
  variance->add_option("grid", grid_path, "Grid JSON file")->required();
  variance->add_option("--method", method, "analytic | oracle | mc")
      ->check(CLI::IsMember({"analytic", "oracle", "mc"}));
  variance->add_option("--dump-matrices", dump_dir, "Write A, B, C, U, Ar, Br, Cr, Qx as CSV into this directory");
  add_solver_flags(variance);
  sim.add_to(variance);

  auto* bounds = app.add_subcommand("bounds", "Semidefinite variance bounds from the ratio extrema");
  bounds->add_option("grid", grid_path, "Grid JSON file")->required();
  add_solver_flags(bounds);

  bool with_cross = false;
  auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo estimate of the stationary variances");
  simulate_cmd->add_option("grid", grid_path, "Grid JSON file")->required();
  simulate_cmd->add_flag("--cross", with_cross, "Also emit the line/frequency covariance block");
  add_solver_flags(simulate_cmd);
  sim.add_to(simulate_cmd);

  std::string add_line, set_sus;
  std::string whatif_method = "analytic";
  auto* whatif_cmd = app.add_subcommand("whatif", "Compare variances before and after a network edit");
  whatif_cmd->add_option("grid", grid_path, "Grid JSON file")->required();
  auto* add_opt = whatif_cmd->add_option("--add-line", add_line, "FROM,TO,SUSCEPTANCE");
  auto* set_opt = whatif_cmd->add_option("--set-susceptance", set_sus, "LINE,SUSCEPTANCE");
  add_opt->excludes(set_opt);
  whatif_cmd->add_option("--method", whatif_method, "analytic | oracle")
      ->check(CLI::IsMember({"analytic", "oracle"}));
  add_solver_flags(whatif_cmd);

  auto* tables = app.add_subcommand("paper-tables", "Regenerate the weight and variance tables of the example networks");
  add_solver_flags(tables);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kValidation;
  }

  try {
    if (solve->parsed()) {
      const auto grid = load_grid(grid_path);
      const auto st = solve_synchronous_state(grid, solver);
      ReportTable summary{"", "quantity", {"value"}, {}, {}};
      summary.add_row("omega_syn", row_of({st.omega_syn}));
      summary.add_row("secure", row_of({st.secure ? 1.0 : 0.0}));
      summary.add_row("residual", row_of({st.residual}));
      summary.add_row("iterations", row_of({double(st.iterations)}));
      ReportTable nodes{"", "node", {"power", "angle"}, {}, {}};
      for (std::size_t i = 0; i < grid.node_count(); ++i)
        nodes.add_row(std::to_string(i + 1), row_of({grid.nodes()[i].power, st.angles(static_cast<Eigen::Index>(i))}));
      ReportTable lines{"", "line", {"from", "to", "susceptance", "angle_diff", "flow", "weight"}, {}, {}};
      for (std::size_t k = 0; k < grid.line_count(); ++k) {
        const auto& l = grid.lines()[k];
        const auto ki = static_cast<Eigen::Index>(k);
        lines.add_row(std::to_string(k + 1), row_of({double(l.from), double(l.to), l.susceptance, st.angle_diffs(ki),
                                                     st.line_flows(ki), st.weights(ki)}));
      }
      emit(g, {{"summary", summary}, {"nodes", nodes}, {"lines", lines}});
      if (!st.secure) {
        std::cerr << "warning: insecure synchronous state on lines " << detail::join_ids(st.insecure_lines()) << '\n';
        if (!solver.force) return kInsecure;
      }
    } else if (cycles->parsed()) {
      const auto grid = load_grid(grid_path);
      const auto d = decompose(grid);
      std::cout << "bridges:";
      for (int b : d.bridges) std::cout << " e" << b;
      std::cout << '\n';
      for (std::size_t c = 0; c < d.clusters.size(); ++c) {
        std::cout << "cluster " << c + 1 << ':';
        for (int id : d.clusters[c]) std::cout << " e" << id;
        std::cout << '\n';
      }
      std::cout << "cycle,chord";
      for (std::size_t k = 1; k <= grid.line_count(); ++k) std::cout << ",e" << k;
      std::cout << '\n';
      for (std::size_t c = 0; c < d.cycles.size(); ++c) {
        std::cout << c + 1 << ",e" << d.cycles[c].chord;
        for (Eigen::Index k = 0; k < d.cycles[c].xi.size(); ++k) std::cout << ',' << d.cycles[c].xi(k);
        std::cout << '\n';
      }
    } else if (variance->parsed()) {
      const auto grid = load_grid(grid_path);
      if (method == "mc") {
        const auto st = solve_synchronous_state(grid, solver);
        (void)line_weights(grid, st, solver.force);
        const auto r = simulate(grid, st, sim.config());
        emit(g, simulation_tables(grid, st, r, false));
      } else {
        const auto profile = classify_ratio(grid);
        if (method == "analytic" && !profile.uniform)
          throw DomainError("disturbance-damping ratios are not uniform (eta in [" + format_full(profile.eta_min) +
                            ", " + format_full(profile.eta_max) +
                            "]); use 'bounds' or '--method oracle'");
        const auto a = analyze(grid, solver, method == "analytic" ? VarianceMethod::analytic : VarianceMethod::oracle);
        emit(g, {{"nodes", node_table(grid, a.report.per_node())},
                 {"lines", line_table(grid, a.weights.diag, a.report.per_line())}});
        if (!dump_dir.empty()) dump_matrices(dump_dir, grid, a.state, solver.force);
      }
      if (method == "mc" && !dump_dir.empty()) {
        const auto st = solve_synchronous_state(grid, solver);
        dump_matrices(dump_dir, grid, st, solver.force);
      }
    } else if (bounds->parsed()) {
      const auto grid = load_grid(grid_path);
      const auto st = solve_synchronous_state(grid, solver);
      const auto w = line_weights(grid, st, solver.force);
      const auto basis = kernel_basis(decompose(grid), w);
      const auto b = variance_bounds(grid, basis, w, classify_ratio(grid));
      ReportTable nodes{"", "node", {"inertia", "lower", "upper"}, {}, {}};
      for (std::size_t i = 0; i < grid.node_count(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        nodes.add_row(std::to_string(i + 1),
                      row_of({grid.nodes()[i].inertia, b.q_omega_lower(ii, ii), b.q_omega_upper(ii, ii)}));
      }
      ReportTable lines{"", "line", {"from", "to", "weight", "lower", "upper"}, {}, {}};
      for (std::size_t k = 0; k < grid.line_count(); ++k) {
        const auto ki = static_cast<Eigen::Index>(k);
        const auto& l = grid.lines()[k];
        lines.add_row(std::to_string(k + 1), row_of({double(l.from), double(l.to), w.diag(ki), b.q_delta_lower(ki, ki),
                                                     b.q_delta_upper(ki, ki)}));
      }
      emit(g, {{"nodes", nodes}, {"lines", lines}});
    } else if (simulate_cmd->parsed()) {
      const auto grid = load_grid(grid_path);
      const auto st = solve_synchronous_state(grid, solver);
      (void)line_weights(grid, st, solver.force);
      const auto r = simulate(grid, st, sim.config());
      emit(g, simulation_tables(grid, st, r, with_cross));
      if (r.excursion_samples > 0)
        std::cerr << "warning: " << r.excursion_samples << " recorded states in " << r.paths_with_excursion
                  << " paths left the security region\n";
    } else if (whatif_cmd->parsed()) {
      const auto grid = load_grid(grid_path);
      GridEdit edit;
      if (!add_line.empty()) {
        int a = 0, b = 0;
        double s = 0;
        char c1 = 0, c2 = 0;
        std::istringstream in(add_line);
        if (!(in >> a >> c1 >> b >> c2 >> s) || c1 != ',' || c2 != ',')
          throw ValidationError("--add-line expects FROM,TO,SUSCEPTANCE");
        edit = GridEdit::add(a, b, s);
      } else if (!set_sus.empty()) {
        int line = 0;
        double s = 0;
        char c1 = 0;
        std::istringstream in(set_sus);
        if (!(in >> line >> c1 >> s) || c1 != ',') throw ValidationError("--set-susceptance expects LINE,SUSCEPTANCE");
        if (line < 1 || line > static_cast<int>(grid.line_count()))
          throw ValidationError("--set-susceptance: unknown line " + std::to_string(line));
        edit = GridEdit::set(line, s);
      } else {
        throw ValidationError("whatif needs --add-line or --set-susceptance");
      }
      const auto r = whatif(grid, edit, solver,
                            whatif_method == "analytic" ? VarianceMethod::analytic : VarianceMethod::oracle);
      ReportTable nodes{"", "node", {"before", "after", "delta"}, {}, {}};
      const auto nb = r.before.report.per_node(), na = r.after.report.per_node();
      for (Eigen::Index i = 0; i < nb.size(); ++i)
        nodes.add_row(std::to_string(i + 1), row_of({nb(i), na(i), na(i) - nb(i)}));
      ReportTable lines{"", "line",
                        {"weight_before", "weight_after", "variance_before", "variance_after", "delta",
                         "weight_decreased"},
                        {}, {}};
      const auto lb = r.before.report.per_line(), la = r.after.report.per_line();
      for (Eigen::Index k = 0; k < la.size(); ++k) {
        if (k < lb.size()) {
          const bool dec = std::find(r.weight_decreased.begin(), r.weight_decreased.end(), k + 1) !=
                           r.weight_decreased.end();
          lines.add_row(std::to_string(k + 1), row_of({r.before.weights.diag(k), r.after.weights.diag(k), lb(k), la(k),
                                                       la(k) - lb(k), dec ? 1.0 : 0.0}));
        } else {
          lines.add_row(std::to_string(k + 1), {std::nullopt, r.after.weights.diag(k), std::nullopt, la(k),
                                                std::nullopt, std::nullopt});
        }
      }
      emit(g, {{"nodes", nodes}, {"lines", lines}});
      if (!r.weight_decreased.empty())
        std::cerr << "note: weights decreased after the edit on " << detail::join_ids(r.weight_decreased) << '\n';
    } else if (tables->parsed()) {
      const auto t = emit_example_tables(solver);
      ReportTable gap{"", "quantity", {"value"}, {}, {}};
      gap.add_row("max_abs_closed_form_minus_lyapunov", row_of({t.max_oracle_gap}));
      emit(g, {{"table1_weights", t.weights},
               {"table2_frequency_variance", t.frequency},
               {"table3_phase_variance", t.phase},
               {"table2_frequency_variance_lyapunov", t.frequency_oracle},
               {"table3_phase_variance_lyapunov", t.phase_oracle},
               {"cross_check", gap}});
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kSolver;
  } catch (const InsecureStateError& e) {
    std::cerr << "refused: " << e.what() << (solver.force ? "\n" : " (use --force to override)\n");
    return kInsecure;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kOk;
}
