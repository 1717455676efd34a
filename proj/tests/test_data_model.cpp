#include "doctest.h"
#include "support.hpp"

#include "vectrisk/data_model.hpp"

using namespace vectrisk;

namespace {

RawTable small_table() {
  RawTable t;
  t.header = {"count", "Soil", "Rain", "village"};
  t.rows = {{"3", "Humid", "1.5", "V1"}, {"0", "Dry", "2.0", "V2"}, {"7", "Humid", "0.5", "V1"},
            {"1", "Dry", "4.0", "V2"}, {"2", "Humid", "3.0", "V1"}};
  return t;
}

Metadata small_meta() {
  Metadata m;
  m.columns = {{"count", VariableKind::numeric, {}, false, ColumnRole::target, {}},
               {"Soil", VariableKind::categorical, {"Humid", "Dry"}, true, ColumnRole::covariable, {}},
               {"Rain", VariableKind::numeric, {}, false, ColumnRole::covariable, RecodeRule::quartile()},
               {"village", VariableKind::categorical, {}, false, ColumnRole::village, {}}};
  return m;
}

}  // namespace

TEST_CASE("validate_dataset builds typed columns") {
  const Dataset d = validate_dataset(small_table(), small_meta());
  CHECK(d.size() == 5);
  CHECK(d.target()[2] == 7.0);
  REQUIRE(d.covariables().size() == 2);
  CHECK(d.covariables()[0].is_categorical());
  CHECK(d.covariables()[0].modalities() == std::vector<std::string>{"Humid", "Dry"});
  CHECK(d.covariables()[1].values()[3] == 4.0);
  REQUIRE(d.village());
  CHECK(d.village()->modality_count() == 2);
}

TEST_CASE("validate_dataset rejects bad input") {
  SUBCASE("negative count") {
    auto t = small_table();
    t.rows[1][0] = "-1";
    CHECK_THROWS_WITH_AS(validate_dataset(t, small_meta()), doctest::Contains("negative count"), ValidationError);
  }
  SUBCASE("non-integer count") {
    auto t = small_table();
    t.rows[1][0] = "1.5";
    CHECK_THROWS_WITH_AS(validate_dataset(t, small_meta()), doctest::Contains("non-integer"), ValidationError);
  }
  SUBCASE("missing column") {
    auto m = small_meta();
    m.columns.push_back({"Water", VariableKind::categorical, {}, false, ColumnRole::covariable, {}});
    CHECK_THROWS_WITH_AS(validate_dataset(small_table(), m), doctest::Contains("missing column"), ValidationError);
  }
  SUBCASE("undeclared modality in a closed set") {
    auto t = small_table();
    t.rows[0][1] = "Wet";
    CHECK_THROWS_WITH_AS(validate_dataset(t, small_meta()), doctest::Contains("undeclared modality"),
                         ValidationError);
  }
  SUBCASE("ragged row") {
    auto t = small_table();
    t.rows[2].pop_back();
    CHECK_THROWS_AS(validate_dataset(t, small_meta()), ValidationError);
  }
}

TEST_CASE("percentile interpolates between order statistics") {
  const std::vector<double> v = {1, 2, 3, 4, 5};
  CHECK(percentile(v, 0.0) == 1.0);
  CHECK(percentile(v, 0.25) == 2.0);
  CHECK(percentile(v, 0.5) == 3.0);
  CHECK(percentile(v, 1.0) == 5.0);
  const std::vector<double> w = {0, 10};
  CHECK(percentile(w, 0.3) == doctest::Approx(3.0));
}

TEST_CASE("quartile recoding") {
  SUBCASE("values 1..8 land two per bin, edge values go down") {
    const auto r = recode_quartiles(Variable::numeric("x", {1, 2, 3, 4, 5, 6, 7, 8}));
    REQUIRE(r.modality_count() == 4);
    CHECK(r.codes() == std::vector<int>{0, 0, 1, 1, 2, 2, 3, 3});
  }
  SUBCASE("empty bins are dropped") {
    // quartiles of {0,0,0,0,0,1,2,5} are 0, 0, 1.25: the second bin is empty
    const auto r = recode_quartiles(Variable::numeric("x", {0, 0, 0, 0, 0, 1, 2, 5}));
    CHECK(r.modality_count() == 3);
  }
  SUBCASE("constant column is rejected") {
    CHECK_THROWS_AS(recode_quartiles(Variable::numeric("x", {2, 2, 2, 2})), ValidationError);
  }
  SUBCASE("custom edges") {
    const std::vector<double> edges = {1.0, 4.0};
    const auto r = recode_with_edges(Variable::numeric("x", {0, 1, 2, 4, 5, 9}), edges);
    CHECK(r.modality_count() == 3);
    CHECK(r.codes() == std::vector<int>{0, 0, 1, 1, 2, 2});
  }
}

TEST_CASE("assemble_group") {
  const Dataset d = validate_dataset(small_table(), small_meta());
  const auto g1 = assemble_group(d, GroupSpec::from_id(1));
  const auto g2 = assemble_group(d, GroupSpec::from_id(2));
  const auto g3 = assemble_group(d, GroupSpec::from_id(3));
  const auto g4 = assemble_group(d, GroupSpec::from_id(4));
  CHECK(g1.size() == g3.size());
  CHECK(g2.size() == g1.size() + 1);
  CHECK(g4.size() == g3.size() + 1);
  CHECK(g1[1].is_numeric());
  CHECK(g3[1].is_categorical());
  CHECK(g2.back().name() == "village");
  CHECK_THROWS_AS(GroupSpec::from_id(5), ValidationError);
}
