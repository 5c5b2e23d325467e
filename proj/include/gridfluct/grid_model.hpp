#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "gridfluct/errors.hpp"

namespace gridfluct {

using Eigen::MatrixXd;
using Eigen::MatrixXi;
using Eigen::VectorXd;

/// A bus with its injection and swing parameters. `power` is positive for
/// generation, `noise` is the strength b_i of the Brownian disturbance.
struct NodeSpec {
  int id = 0;
  double power = 0.0;
  double inertia = 1.0;
  double damping = 1.0;
  double noise = 0.0;

  friend bool operator==(const NodeSpec&, const NodeSpec&) = default;
};

/// A lossless line; `susceptance` is the effective coupling l_ij (voltages
/// folded in). Orientation is from -> to.
struct LineSpec {
  int id = 0;
  int from = 0;
  int to = 0;
  double susceptance = 1.0;

  friend bool operator==(const LineSpec&, const LineSpec&) = default;
};

/// Validated network. Node k (0-based) has id k+1, line k has id k+1; every
/// matrix in the library indexes nodes and lines in this declaration order.
class GridSpec {
 public:
  GridSpec(std::vector<NodeSpec> nodes, std::vector<LineSpec> lines)
      : nodes_(std::move(nodes)), lines_(std::move(lines)) {
    validate();
  }

  const std::vector<NodeSpec>& nodes() const { return nodes_; }
  const std::vector<LineSpec>& lines() const { return lines_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t line_count() const { return lines_.size(); }

  const NodeSpec& node(int id) const { return nodes_.at(static_cast<std::size_t>(id - 1)); }
  const LineSpec& line(int id) const { return lines_.at(static_cast<std::size_t>(id - 1)); }

  /// 0-based endpoint indices of line k (0-based).
  std::pair<int, int> endpoints(std::size_t k) const {
    return {lines_[k].from - 1, lines_[k].to - 1};
  }

  VectorXd inertias() const { return column([](const NodeSpec& s) { return s.inertia; }); }
  VectorXd dampings() const { return column([](const NodeSpec& s) { return s.damping; }); }
  VectorXd noises() const { return column([](const NodeSpec& s) { return s.noise; }); }
  VectorXd powers() const { return column([](const NodeSpec& s) { return s.power; }); }
  VectorXd susceptances() const {
    VectorXd v(static_cast<Eigen::Index>(lines_.size()));
    for (std::size_t k = 0; k < lines_.size(); ++k) v(static_cast<Eigen::Index>(k)) = lines_[k].susceptance;
    return v;
  }

  GridSpec with_line(int from, int to, double susceptance) const {
    auto lines = lines_;
    lines.push_back({static_cast<int>(lines.size()) + 1, from, to, susceptance});
    return GridSpec(nodes_, std::move(lines));
  }

  GridSpec with_susceptance(int line_id, double susceptance) const {
    auto lines = lines_;
    lines.at(static_cast<std::size_t>(line_id - 1)).susceptance = susceptance;
    return GridSpec(nodes_, std::move(lines));
  }

  /// Same grid with the orientation of line `line_id` reversed.
  GridSpec with_flipped(int line_id) const {
    auto lines = lines_;
    auto& l = lines.at(static_cast<std::size_t>(line_id - 1));
    std::swap(l.from, l.to);
    return GridSpec(nodes_, std::move(lines));
  }

  GridSpec with_nodes(std::vector<NodeSpec> nodes) const { return GridSpec(std::move(nodes), lines_); }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;

 private:
  template <class F>
  VectorXd column(F f) const {
    VectorXd v(static_cast<Eigen::Index>(nodes_.size()));
    for (std::size_t i = 0; i < nodes_.size(); ++i) v(static_cast<Eigen::Index>(i)) = f(nodes_[i]);
    return v;
  }

  void validate() const {
    const auto n = nodes_.size();
    if (n < 2) throw ValidationError("grid needs at least 2 nodes");
    if (lines_.empty()) throw ValidationError("grid has no lines");
    for (std::size_t i = 0; i < n; ++i) {
      const auto& s = nodes_[i];
      const std::string where = "node " + std::to_string(s.id);
      if (s.id != static_cast<int>(i) + 1)
        throw ValidationError("node ids must be 1..n in declaration order; found id " +
                              std::to_string(s.id) + " at position " + std::to_string(i + 1));
      if (!std::isfinite(s.power) || !std::isfinite(s.inertia) || !std::isfinite(s.damping) ||
          !std::isfinite(s.noise))
        throw ValidationError(where + ": non-finite parameter");
      if (!(s.inertia > 0.0)) throw ValidationError(where + ": inertia must be > 0");
      if (!(s.damping > 0.0)) throw ValidationError(where + ": damping must be > 0");
      if (!(s.noise >= 0.0)) throw ValidationError(where + ": noise must be >= 0");
    }
    std::set<std::pair<int, int>> seen;
    for (std::size_t k = 0; k < lines_.size(); ++k) {
      const auto& l = lines_[k];
      const std::string where = "line " + std::to_string(l.id);
      if (l.id != static_cast<int>(k) + 1)
        throw ValidationError("line ids must be 1..m in declaration order; found id " +
                              std::to_string(l.id) + " at position " + std::to_string(k + 1));
      if (l.from < 1 || l.from > static_cast<int>(n) || l.to < 1 || l.to > static_cast<int>(n))
        throw ValidationError(where + ": endpoint is not a node id");
      if (l.from == l.to) throw ValidationError(where + ": self-loop");
      if (!std::isfinite(l.susceptance) || !(l.susceptance > 0.0))
        throw ValidationError(where + ": susceptance must be finite and > 0");
      const auto key = std::minmax(l.from, l.to);
      if (!seen.insert(key).second)
        throw ValidationError(where + ": duplicate line between nodes " + std::to_string(key.first) +
                              " and " + std::to_string(key.second));
    }
    // union-find connectivity
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    std::size_t components = n;
    for (const auto& l : lines_) {
      const auto a = find(static_cast<std::size_t>(l.from - 1));
      const auto b = find(static_cast<std::size_t>(l.to - 1));
      if (a != b) {
        parent[a] = b;
        --components;
      }
    }
    if (components != 1)
      throw ValidationError("grid is disconnected (" + std::to_string(components) + " components)");
  }

  std::vector<NodeSpec> nodes_;
  std::vector<LineSpec> lines_;
};

// ---------------------------------------------------------------------------
// JSON grid files

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                                const std::string& where) {
  if (!obj.is_object()) throw ValidationError(where + ": expected a JSON object");
  for (const auto& [key, _] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw ValidationError(where + ": unknown key '" + key + "'");
  }
  for (const char* a : allowed)
    if (!obj.contains(a)) throw ValidationError(where + ": missing key '" + std::string(a) + "'");
}

inline double number_field(const nlohmann::json& obj, const char* key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ValidationError(where + ": '" + key + "' must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ValidationError(where + ": '" + key + "' must be finite");
  return x;
}

inline int int_field(const nlohmann::json& obj, const char* key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) throw ValidationError(where + ": '" + key + "' must be an integer");
  return v.get<int>();
}

}  // namespace detail

inline GridSpec grid_from_json(const nlohmann::json& doc) {
  detail::reject_unknown_keys(doc, {"nodes", "lines"}, "grid");
  if (!doc["nodes"].is_array() || !doc["lines"].is_array())
    throw ValidationError("grid: 'nodes' and 'lines' must be arrays");
  std::vector<NodeSpec> nodes;
  for (std::size_t i = 0; i < doc["nodes"].size(); ++i) {
    const auto& o = doc["nodes"][i];
    const std::string where = "nodes[" + std::to_string(i) + "]";
    detail::reject_unknown_keys(o, {"id", "power", "inertia", "damping", "noise"}, where);
    nodes.push_back({detail::int_field(o, "id", where), detail::number_field(o, "power", where),
                     detail::number_field(o, "inertia", where), detail::number_field(o, "damping", where),
                     detail::number_field(o, "noise", where)});
  }
  std::vector<LineSpec> lines;
  for (std::size_t k = 0; k < doc["lines"].size(); ++k) {
    const auto& o = doc["lines"][k];
    const std::string where = "lines[" + std::to_string(k) + "]";
    detail::reject_unknown_keys(o, {"id", "from", "to", "susceptance"}, where);
    lines.push_back({detail::int_field(o, "id", where), detail::int_field(o, "from", where),
                     detail::int_field(o, "to", where), detail::number_field(o, "susceptance", where)});
  }
  return GridSpec(std::move(nodes), std::move(lines));
}

/// Parses a grid document. Throws ValidationError on any schema or
/// consistency violation.
inline GridSpec parse_grid(const std::string& document) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(document);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("grid: invalid JSON: ") + e.what());
  }
  return grid_from_json(doc);
}

inline GridSpec load_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open grid file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_grid(ss.str());
}

inline nlohmann::ordered_json grid_to_json(const GridSpec& grid) {
  nlohmann::ordered_json doc;
  doc["nodes"] = nlohmann::ordered_json::array();
  for (const auto& s : grid.nodes())
    doc["nodes"].push_back(
        {{"id", s.id}, {"power", s.power}, {"inertia", s.inertia}, {"damping", s.damping}, {"noise", s.noise}});
  doc["lines"] = nlohmann::ordered_json::array();
  for (const auto& l : grid.lines())
    doc["lines"].push_back({{"id", l.id}, {"from", l.from}, {"to", l.to}, {"susceptance", l.susceptance}});
  return doc;
}

inline std::string serialize_grid(const GridSpec& grid, int indent = 2) { return grid_to_json(grid).dump(indent); }

// ---------------------------------------------------------------------------
// Incidence matrix

/// Node-by-line signed incidence: +1 at `from`, -1 at `to`.
struct IncidenceMatrix {
  MatrixXi entries;

  Eigen::Index rows() const { return entries.rows(); }
  Eigen::Index cols() const { return entries.cols(); }
  MatrixXd as_real() const { return entries.cast<double>(); }
};

inline IncidenceMatrix build_incidence(const GridSpec& grid) {
  MatrixXi c = MatrixXi::Zero(static_cast<Eigen::Index>(grid.node_count()),
                              static_cast<Eigen::Index>(grid.line_count()));
  for (std::size_t k = 0; k < grid.line_count(); ++k) {
    const auto [a, b] = grid.endpoints(k);
    c(a, static_cast<Eigen::Index>(k)) = 1;
    c(b, static_cast<Eigen::Index>(k)) = -1;
  }
  return {std::move(c)};
}

// ---------------------------------------------------------------------------
// Disturbance-damping ratios

inline constexpr double kDefaultUniformRtol = 1e-9;

/// Per-node ratios eta_i = b_i^2 / d_i and their extrema.
struct RatioProfile {
  VectorXd eta;
  double eta_min = 0.0;
  double eta_max = 0.0;
  bool uniform = false;

  /// The common ratio of a uniform profile.
  double common() const {
    if (!uniform) throw DomainError("disturbance-damping ratio is not uniform; use variance bounds instead");
    return eta_max;
  }
};

inline RatioProfile classify_ratio(const GridSpec& grid, double rtol = kDefaultUniformRtol) {
  RatioProfile p;
  const VectorXd b = grid.noises();
  p.eta = b.array().square() / grid.dampings().array();
  p.eta_min = p.eta.minCoeff();
  p.eta_max = p.eta.maxCoeff();
  p.uniform = (p.eta_max - p.eta_min) <= rtol * p.eta_max;
  return p;
}

}  // namespace gridfluct
