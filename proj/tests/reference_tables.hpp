#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

// Published 4-decimal values for the seven-node example networks.
namespace gridfluct::testing {

struct ReferenceRow {
  std::string fixture;            // data/fixtures stem
  std::vector<double> values;     // e1.. or node 1..
};

// Line weights of the loaded and e4-upgraded cases.
inline const std::vector<ReferenceRow>& weight_rows() {
  static const std::vector<ReferenceRow> rows{
      {"network_d_e4x2", {10, 10, 10, 20, 10, 10, 10, 10, 10}},
      {"network_a_loaded", {9.5394, 9.5394, 9.7980, 9.9499, 9.1652, 9.5394}},
      {"network_b_loaded", {9.5394, 9.5394, 9.7980, 9.6825, 9.6825, 9.8869, 10, 9.8869}},
      {"network_c_loaded", {9.5394, 9.5394, 9.7980, 9.6825, 9.6825, 9.8869, 10, 9.8869, 10}},
      {"network_d_loaded", {9.5394, 9.5394, 9.7980, 9.7442, 9.7442, 9.8452, 10, 9.8452, 9.9872}},
      {"network_d_e4x2_loaded", {9.5394, 9.5394, 9.7980, 19.8074, 9.7822, 9.9240, 10, 9.8132, 9.9988}},
  };
  return rows;
}

// Per-node frequency variances, identical for every fixture.
inline constexpr std::array<double, 7> kFrequencyVariance{1.0 / 2, 1.0 / 4, 1.0 / 6, 1.0 / 8,
                                                          1.0 / 10, 1.0 / 12, 1.0 / 14};

// Per-line phase-difference variances, all ten fixtures.
inline const std::vector<ReferenceRow>& phase_rows() {
  static const std::vector<ReferenceRow> rows{
      {"network_a", {0.0500, 0.0500, 0.0500, 0.0500, 0.0500, 0.0500}},
      {"network_b", {0.0333, 0.0333, 0.0500, 0.0375, 0.0375, 0.0375, 0.0333, 0.0375}},
      {"network_c", {0.0333, 0.0333, 0.0500, 0.0313, 0.0313, 0.0313, 0.0333, 0.0313, 0.0250}},
      {"network_d", {0.0333, 0.0333, 0.0500, 0.0313, 0.0313, 0.0313, 0.0333, 0.0313, 0.0250}},
      {"network_d_e4x2", {0.0333, 0.0333, 0.0500, 0.0192, 0.0308, 0.0269, 0.0333, 0.0308, 0.0231}},
      {"network_a_loaded", {0.0524, 0.0524, 0.0510, 0.0503, 0.0546, 0.0524}},
      {"network_b_loaded", {0.0347, 0.0347, 0.0510, 0.0386, 0.0386, 0.0381, 0.0339, 0.0381}},
      {"network_c_loaded", {0.0347, 0.0347, 0.0510, 0.0321, 0.0321, 0.0316, 0.0339, 0.0316, 0.0253}},
      {"network_d_loaded", {0.0347, 0.0347, 0.0510, 0.0319, 0.0319, 0.0318, 0.0339, 0.0318, 0.0253}},
      {"network_d_e4x2_loaded", {0.0347, 0.0347, 0.0510, 0.0194, 0.0313, 0.0271, 0.0339, 0.0313, 0.0232}},
  };
  return rows;
}

}  // namespace gridfluct::testing
