#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "gridfluct/errors.hpp"
#include "gridfluct/grid_model.hpp"

namespace gridfluct::example {

// Seven-node demonstration networks (a)-(d). Nodes 3, 4 and 6 generate 4
// units when loaded, the others consume 3. Every node has inertia, damping
// and squared noise strength equal to its index, so eta = 1 throughout.
//
//   e1=(1,3) e2=(2,3) e3=(3,5) e4=(4,5) e5=(6,5) e6=(4,7)   tree (a)
//   e7=(2,1) e8=(6,7)                                       added in (b)
//   e9=(4,6) in (c), e9=(5,7) in (d)

enum class Loading { balanced, loaded };

struct Fixture {
  std::string name;  // file stem
  char network;      // 'a'..'d'
  int scenario;      // 1..4
  GridSpec grid;
};

inline constexpr std::array<double, 7> kLoadedPower{-3.0, -3.0, 4.0, 4.0, -3.0, 4.0, -3.0};

inline GridSpec network(char which, Loading loading = Loading::balanced, double e4_susceptance = 10.0) {
  std::vector<NodeSpec> nodes;
  for (int i = 1; i <= 7; ++i) {
    const double p = loading == Loading::loaded ? kLoadedPower[static_cast<std::size_t>(i - 1)] : 0.0;
    nodes.push_back({i, p, double(i), double(i), std::sqrt(double(i))});
  }
  std::vector<std::pair<int, int>> ends{{1, 3}, {2, 3}, {3, 5}, {4, 5}, {6, 5}, {4, 7}};
  switch (which) {
    case 'a': break;
    case 'b': ends.insert(ends.end(), {{2, 1}, {6, 7}}); break;
    case 'c': ends.insert(ends.end(), {{2, 1}, {6, 7}, {4, 6}}); break;
    case 'd': ends.insert(ends.end(), {{2, 1}, {6, 7}, {5, 7}}); break;
    default: throw ValidationError(std::string("unknown example network '") + which + "'");
  }
  std::vector<LineSpec> lines;
  for (std::size_t k = 0; k < ends.size(); ++k)
    lines.push_back({static_cast<int>(k) + 1, ends[k].first, ends[k].second, k == 3 ? e4_susceptance : 10.0});
  return GridSpec(std::move(nodes), std::move(lines));
}

/// The ten network/scenario combinations. Scenario 1: no injections;
/// 2: no injections, e4 doubled in (d); 3: loaded; 4: loaded, e4 doubled in (d).
inline std::vector<Fixture> fixtures() {
  std::vector<Fixture> out;
  for (char w : {'a', 'b', 'c', 'd'})
    out.push_back({std::string("network_") + w, w, 1, network(w, Loading::balanced)});
  out.push_back({"network_d_e4x2", 'd', 2, network('d', Loading::balanced, 20.0)});
  for (char w : {'a', 'b', 'c', 'd'})
    out.push_back({std::string("network_") + w + "_loaded", w, 3, network(w, Loading::loaded)});
  out.push_back({"network_d_e4x2_loaded", 'd', 4, network('d', Loading::loaded, 20.0)});
  return out;
}

}  // namespace gridfluct::example
