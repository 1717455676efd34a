#include "doctest.h"
#include "support.hpp"

#include "vectrisk/poisson.hpp"
#include "vectrisk/selection.hpp"

#include <cmath>

using namespace vectrisk;

namespace {

DesignMatrix numeric_design(Rng& rng, Index n, int p) {
  std::vector<Variable> vars;
  for (int j = 0; j < p; ++j) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& e : v) e = rng.normal();
    vars.push_back(Variable::numeric("V" + std::to_string(j + 1), std::move(v)));
  }
  return build_design(vars, {});
}

Vector target(Rng& rng, const Matrix& x, double b0, std::vector<std::pair<Index, double>> planted) {
  Vector b = Vector::Zero(x.cols());
  for (const auto& [j, v] : planted) b[j] = v;
  return support::poisson_target(rng, x, b0, b);
}

DcvConfig config_for(std::uint64_t seed) {
  DcvConfig c;
  c.seed = seed;
  c.threads = 1;
  return c;
}

}  // namespace

TEST_CASE("quality criteria") {
  Vector y(3);
  y << 0, 2, 4;
  SUBCASE("perfect prediction") {
    // a zero prediction is outside the deviance's domain, so the zero is nudged
    const QualityCriteria q = quality_criteria(y, y.cwiseMax(1e-300));
    CHECK(q.mean == doctest::Approx(2.0));
    CHECK(q.quadratic_risk == doctest::Approx(0.0));
    CHECK(q.absolute_risk == doctest::Approx(0.0));
    CHECK(q.deviance == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("arithmetic") {
    Vector h(3);
    h << 1, 2, 3;
    const QualityCriteria q = quality_criteria(y, h);
    CHECK(q.mean == doctest::Approx(2.0));
    CHECK(q.quadratic_risk == doctest::Approx(2.0 / 3.0));
    CHECK(q.absolute_risk == doctest::Approx(2.0 / 3.0));
    double dev = 0.0;
    for (Index i = 0; i < 3; ++i) dev += deviance_unit(y[i], h[i]);
    CHECK(std::abs(q.deviance - dev) <= 1e-10);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(quality_criteria(y, Vector::Ones(2)), ValidationError);
    Vector h(3);
    h << 1, 0, 3;
    CHECK_THROWS_AS(quality_criteria(y, h), NumericalError);
  }
}

TEST_CASE("frequent variables") {
  // ten folds, percentages 100, 90, 40
  PresenceMatrix m(10, std::vector<std::uint8_t>(3, 0));
  for (int k = 0; k < 10; ++k) {
    m[k][0] = 1;
    m[k][1] = k < 9;
    m[k][2] = k < 4;
  }
  CHECK(presence_percentages(m) == std::vector<double>{100, 90, 40});
  CHECK(frequent_variables(m, 100) == std::vector<int>{0});
  CHECK(frequent_variables(m, 50) == std::vector<int>{0, 1});
  CHECK(frequent_variables(PresenceMatrix(10, std::vector<std::uint8_t>(3, 0)), 100).empty());
  CHECK_THROWS_AS(frequent_variables(m, 0), ValidationError);

  // a higher threshold never adds a variable
  Rng rng(41);
  PresenceMatrix r(10, std::vector<std::uint8_t>(30, 0));
  for (auto& row : r) {
    for (auto& v : row) v = rng.uniform() < 0.6;
  }
  for (double w = 1; w + 7 <= 100; w += 7) {
    const auto lo = frequent_variables(r, w);
    const auto hi = frequent_variables(r, w + 7);
    for (int g : hi) CHECK(std::find(lo.begin(), lo.end(), g) != lo.end());
  }
}

TEST_CASE("strategy names") {
  CHECK(parse_strategy("b-glm") == Strategy::bglm);
  CHECK(parse_strategy("FVS") == Strategy::fvs);
  CHECK(std::string(strategy_name(Strategy::ldlm)) == "LDLM");
  CHECK_THROWS_AS(parse_strategy("xyz"), ValidationError);
}

TEST_CASE("LDLM and LDLS agree when every fold picks the same lambda") {
  Rng rng(42);
  int coinciding = 0;
  for (int rep = 0; rep < 6; ++rep) {
    const DesignMatrix d = numeric_design(rng, 200, 8);
    const Vector y = target(rng, d.x, 1.0, {});
    const DcvConfig c = config_for(300 + static_cast<std::uint64_t>(rep));
    const CvReport report = run_lolo_dcv(d, y, make_stratified_folds(y, 10, c.seed), c);
    bool same = true;
    for (const auto& f : report.folds) same = same && f.choice.min_index == f.choice.se_index;
    if (!same) continue;
    ++coinciding;
    const SelectionResult a = run_strategy(Strategy::ldlm, report, d, y);
    const SelectionResult b = run_strategy(Strategy::ldls, report, d, y);
    CHECK(a.criteria.mean == b.criteria.mean);
    CHECK(a.criteria.quadratic_risk == b.criteria.quadratic_risk);
    CHECK(a.criteria.absolute_risk == b.criteria.absolute_risk);
    CHECK(a.criteria.deviance == b.criteria.deviance);
    CHECK(a.variables == b.variables);
  }
  CHECK(coinciding > 0);
}

TEST_CASE("FV strategies on planted data") {
  Rng rng(43);
  int sparser = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const DesignMatrix d = numeric_design(rng, 500, 20);
    const Vector y = target(rng, d.x, 0.5, {{3, 0.4}, {11, -0.4}});
    const DcvConfig c = config_for(400 + static_cast<std::uint64_t>(rep));
    const CvReport report = run_lolo_dcv(d, y, make_stratified_folds(y, 10, c.seed), c);
    const SelectionResult fvm = run_strategy(Strategy::fvm, report, d, y);
    const SelectionResult fvs = run_strategy(Strategy::fvs, report, d, y);
    if (fvs.variables.size() <= fvm.variables.size()) ++sparser;
    CHECK(fvm.predictions.size() == y.size());
    CHECK(fvm.presence.size() == 20);
    if (rep == 0) {
      // same inputs, same result
      const SelectionResult again = run_strategy(Strategy::fvm, report, d, y);
      CHECK(again.predictions == fvm.predictions);
    }
  }
  CHECK(sparser >= 18);
}

TEST_CASE("empty FV subset gives a flagged intercept-only model") {
  Rng rng(44);
  const DesignMatrix d = numeric_design(rng, 150, 5);
  const Vector y = target(rng, d.x, 1.0, {});
  const DcvConfig c = config_for(5);
  CvReport report = run_lolo_dcv(d, y, make_stratified_folds(y, 10, c.seed), c);
  for (auto& f : report.folds) {
    for (auto& r : f.rules) std::fill(r.presence.begin(), r.presence.end(), 0);
  }
  const SelectionResult s = run_strategy(Strategy::fvm, report, d, y);
  CHECK(s.intercept_only);
  CHECK(s.variables.empty());
  CHECK_FALSE(s.notes.empty());
}

TEST_CASE("backward GLM") {
  SUBCASE("alpha = 1 keeps everything, alpha = 0 keeps nothing") {
    Rng rng(45);
    const DesignMatrix d = numeric_design(rng, 300, 6);
    const Vector y = target(rng, d.x, 0.5, {{0, 0.5}});
    const FoldPlan plan = make_stratified_folds(y, 10, 3);
    SelectionConfig keep;
    keep.alpha = 1.0;
    CHECK(backward_glm(d, y, plan, keep).selection.variables.size() == 6);
    SelectionConfig drop;
    drop.alpha = 0.0;
    const BackwardResult none = backward_glm(d, y, plan, drop);
    CHECK(none.selection.variables.empty());
    CHECK(none.selection.intercept_only);
    CHECK_FALSE(none.selection.notes.empty());
  }
  SUBCASE("one strong covariable among five noise ones") {
    Rng rng(46);
    // Each noise covariable survives a Wald test at 0.05 about 5% of the time,
    // so an exact match is expected in roughly 0.95^5 = 77% of the draws.
    int exact = 0;
    int kept = 0;
    for (int rep = 0; rep < 20; ++rep) {
      const DesignMatrix d = numeric_design(rng, 500, 6);
      const Vector y = target(rng, d.x, 0.5, {{2, 0.5}});
      const BackwardResult b = backward_glm(d, y, make_stratified_folds(y, 10, 7));
      const auto& v = b.selection.variables;
      if (v == std::vector<std::string>{"V3"}) ++exact;
      if (std::find(v.begin(), v.end(), "V3") != v.end()) ++kept;
      CHECK(b.selection.predictions.size() == y.size());
    }
    CHECK(kept == 20);
    CHECK(exact >= 12);
  }
}

TEST_CASE("village breakdown") {
  Vector y(4);
  y << 1, 2, 3, 4;
  Vector h(4);
  h << 1, 2, 2, 4;
  const Variable v = Variable::from_labels("village", std::vector<std::string>{"a", "b", "a", "b"});
  const auto rows = village_breakdown(y, h, v);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].village == "a");
  CHECK(rows[0].n == 2);
  CHECK(rows[0].criteria.absolute_risk == doctest::Approx(0.5));
  CHECK(rows[1].criteria.absolute_risk == doctest::Approx(0.0));
}
