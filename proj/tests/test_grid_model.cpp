#include <gtest/gtest.h>

#include <random>
#include <string>

#include "gridfluct/example_networks.hpp"
#include "gridfluct/grid_model.hpp"
#include "support.hpp"

using namespace gridfluct;
namespace t = gridfluct::testing;

namespace {

const char* kTwoNode = R"({
  "nodes": [
    {"id": 1, "power": 0.5, "inertia": 1, "damping": 1, "noise": 1},
    {"id": 2, "power": -0.5, "inertia": 1, "damping": 1, "noise": 1}
  ],
  "lines": [{"id": 1, "from": 1, "to": 2, "susceptance": 1}]
})";

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  if (pos == std::string::npos) throw std::logic_error("pattern not found: " + from);
  return s.replace(pos, from.size(), to);
}

}  // namespace

TEST(GridModel, ParsesTwoNodeDocument) {
  const auto g = parse_grid(kTwoNode);
  EXPECT_EQ(g.node_count(), 2u);
  EXPECT_EQ(g.line_count(), 1u);
  EXPECT_DOUBLE_EQ(g.node(1).power, 0.5);
  EXPECT_EQ(g.line(1).to, 2);
}

TEST(GridModel, RejectsSchemaViolations) {
  EXPECT_THROW(parse_grid("{"), ValidationError);
  EXPECT_THROW(parse_grid(replace(kTwoNode, "\"noise\": 1}", "\"noise\": 1, \"extra\": 0}")), ValidationError);
  EXPECT_THROW(parse_grid(replace(kTwoNode, "\"power\": 0.5, ", "")), ValidationError);
  EXPECT_THROW(parse_grid(replace(kTwoNode, "\"id\": 2", "\"id\": 2.5")), ValidationError);
  EXPECT_THROW(parse_grid(replace(kTwoNode, "\"power\": 0.5", "\"power\": \"x\"")), ValidationError);
}

TEST(GridModel, RejectsInvalidValues) {
  EXPECT_THROW(parse_grid(replace(kTwoNode, "\"inertia\": 1", "\"inertia\": 0")), ValidationError);
  EXPECT_THROW(parse_grid(replace(kTwoNode, "\"damping\": 1", "\"damping\": -1")), ValidationError);
  EXPECT_THROW(parse_grid(replace(kTwoNode, "\"noise\": 1", "\"noise\": -0.1")), ValidationError);
  EXPECT_THROW(parse_grid(replace(kTwoNode, "\"susceptance\": 1", "\"susceptance\": 0")), ValidationError);
  EXPECT_THROW(parse_grid(replace(kTwoNode, "\"to\": 2", "\"to\": 1")), ValidationError);
  EXPECT_THROW(parse_grid(replace(kTwoNode, "\"to\": 2", "\"to\": 3")), ValidationError);
  EXPECT_THROW(parse_grid(replace(kTwoNode, "{\"id\": 2,", "{\"id\": 3,")), ValidationError);
  EXPECT_NO_THROW(parse_grid(replace(kTwoNode, "\"noise\": 1}", "\"noise\": 0}")));
}

TEST(GridModel, RejectsDuplicateUndirectedLine) {
  auto g = example::network('a');
  EXPECT_THROW(g.with_line(3, 1, 5.0), ValidationError);
  EXPECT_NO_THROW(g.with_line(1, 2, 5.0));
}

TEST(GridModel, RejectsDisconnectedGrid) {
  const auto a = example::network('a');
  std::vector<LineSpec> lines;
  for (const auto& l : a.lines())
    if (l.id != 3) lines.push_back({static_cast<int>(lines.size()) + 1, l.from, l.to, l.susceptance});
  try {
    GridSpec(a.nodes(), lines);
    FAIL() << "expected a ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("disconnected"), std::string::npos);
  }
}

TEST(GridModel, FixtureHasExpectedShape) {
  const auto d = example::network('d', example::Loading::loaded);
  EXPECT_EQ(d.node_count(), 7u);
  EXPECT_EQ(d.line_count(), 9u);
  EXPECT_DOUBLE_EQ(d.powers().sum(), 0.0);
}

TEST(GridModel, RoundTripIsIdentity) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = t::random_grid(rng);
    const auto back = parse_grid(serialize_grid(g));
    EXPECT_EQ(back.nodes(), g.nodes());
    EXPECT_EQ(back.lines(), g.lines());
    EXPECT_EQ(serialize_grid(back), serialize_grid(g));
  }
}

TEST(GridModel, IncidenceProperties) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = t::random_grid(rng);
    const auto c = build_incidence(g);
    ASSERT_EQ(c.rows(), static_cast<Eigen::Index>(g.node_count()));
    ASSERT_EQ(c.cols(), static_cast<Eigen::Index>(g.line_count()));
    EXPECT_EQ(c.entries.colwise().sum().cwiseAbs().maxCoeff(), 0);
    EXPECT_TRUE((c.entries.cwiseAbs().colwise().sum().array() == 2).all());
    // connected graph: rank n - 1
    Eigen::FullPivLU<Eigen::MatrixXd> lu(c.as_real());
    EXPECT_EQ(lu.rank(), static_cast<Eigen::Index>(g.node_count()) - 1);
  }
}

TEST(GridModel, IncidenceFlipNegatesColumn) {
  const auto g = example::network('b');
  const auto c = build_incidence(g).entries;
  const auto f = build_incidence(g.with_flipped(5)).entries;
  EXPECT_EQ(f.col(4), (-c.col(4)).eval());
  EXPECT_EQ(f.leftCols(4), c.leftCols(4));
}

TEST(GridModel, RatioClassification) {
  const auto p = classify_ratio(example::network('b'));
  EXPECT_TRUE(p.uniform);
  EXPECT_NEAR(p.common(), 1.0, 1e-15);

  const auto g = parse_grid(R"({"nodes": [
      {"id": 1, "power": 0, "inertia": 1, "damping": 1, "noise": 1},
      {"id": 2, "power": 0, "inertia": 1, "damping": 2, "noise": 1}],
    "lines": [{"id": 1, "from": 1, "to": 2, "susceptance": 1}]})");
  const auto q = classify_ratio(g);
  EXPECT_FALSE(q.uniform);
  EXPECT_DOUBLE_EQ(q.eta_min, 0.5);
  EXPECT_DOUBLE_EQ(q.eta_max, 1.0);
  EXPECT_THROW(q.common(), DomainError);
}
