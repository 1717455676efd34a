#include "doctest.h"
#include "support.hpp"

#include "vectrisk/design.hpp"
#include "vectrisk/synthetic.hpp"

using namespace vectrisk;
using support::categorical;
using support::numeric;

TEST_CASE("expanded counts") {
  CHECK(expanded_count(16) == 136);
  CHECK(expanded_count(17) == 153);
  CHECK(all_pairs(4).size() == 6);
  CHECK(all_pairs(4).front() == std::pair<int, int>{0, 1});
  CHECK(all_pairs(4).back() == std::pair<int, int>{2, 3});

  const SimOutput sim = simulate_dataset(default_scenario(3, 60));
  CHECK(expand_interactions(assemble_group(sim.dataset, GroupSpec::from_id(1))).groups.size() == 136);
  CHECK(expand_interactions(assemble_group(sim.dataset, GroupSpec::from_id(2))).groups.size() == 153);
}

TEST_CASE("numeric x categorical routes the value to the active modality") {
  const auto a = numeric("a", {1.5, -2.0, 3.0});
  const auto c = categorical("c", {"x", "y", "x"});
  const Matrix m = cross_numeric_categorical(a, c);
  REQUIRE(m.cols() == 2);
  CHECK(m(0, 0) == 1.5);
  CHECK(m(0, 1) == 0.0);
  CHECK(m(1, 0) == 0.0);
  CHECK(m(1, 1) == -2.0);
  // the columns add back up to the numeric variable
  for (Index i = 0; i < 3; ++i) CHECK(m.row(i).sum() == a.values()[static_cast<std::size_t>(i)]);
}

TEST_CASE("categorical x categorical joint indicators partition the rows") {
  const auto a = categorical("a", {"p", "q", "r", "p"});
  const auto b = categorical("b", {"u", "v", "v", "v"});
  const Matrix m = cross_categorical_categorical(a, b);
  REQUIRE(m.cols() == 6);
  for (Index i = 0; i < m.rows(); ++i) CHECK(m.row(i).sum() == 1.0);
  // row 0 is (p, u): first column
  CHECK(m(0, 0) == 1.0);
}

TEST_CASE("numeric x numeric is the product") {
  const auto a = numeric("a", {1, 2, 3});
  const auto b = numeric("b", {4, -1, 0.5});
  const auto p = cross_numeric_numeric(a, b);
  CHECK(p.values() == std::vector<double>{4, -2, 1.5});
}

TEST_CASE("build_design layout") {
  const std::vector<Variable> base = {numeric("a", {1, 2, 3, 4}), categorical("c", {"x", "y", "x", "z"}),
                                      numeric("b", {0, 1, 0, 1})};
  const DesignMatrix d = expand_interactions(base);
  REQUIRE(d.groups.size() == 6);
  CHECK(d.groups.names() ==
        std::vector<std::string>{"a", "c", "b", "a:c", "a:b", "c:b"});
  CHECK(d.groups.dimensions() == std::vector<Index>{1, 3, 1, 3, 1, 3});
  CHECK(d.x.cols() == 12);
  CHECK(d.groups.group_of_column(4) == 2);
  CHECK(d.groups[1].is_indicator_partition());
  CHECK_FALSE(d.groups[3].is_indicator_partition());
  CHECK(d.groups.find("a:b") == 4);
  CHECK_THROWS_AS(d.groups.find("nope"), ValidationError);
}

TEST_CASE("constant columns") {
  Matrix x(4, 3);
  x << 1, 0, 2,  //
      1, 1, 2,   //
      1, 0, 3,   //
      1, 1, 2;
  CHECK(constant_columns(x) == std::vector<bool>{true, false, false});
  const std::vector<Index> rows = {0, 1, 3};
  CHECK(constant_columns(x, rows) == std::vector<bool>{true, false, true});
}
