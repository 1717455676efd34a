#include "doctest.h"
#include "support.hpp"

#include "vectrisk/poisson.hpp"
#include "vectrisk/synthetic.hpp"

#include <cmath>

using namespace vectrisk;

namespace {

using C = CovariableSpec;

SimSpec two_numeric(std::uint64_t seed, std::size_t n) {
  SimSpec s;
  s.n_obs = n;
  s.seed = seed;
  s.covariables = {C::gaussian("A", 0.0, 1.0), C::gaussian("B", 0.0, 1.0),
                   C::categorical("Soil", {"dry", "wet"}, {0.5, 0.5})};
  return s;
}

Matrix column(const Variable& v) {
  const auto& x = v.values();
  return Eigen::Map<const Vector>(x.data(), static_cast<Index>(x.size()));
}

}  // namespace

TEST_CASE("generator determinism") {
  const SimOutput a = simulate_dataset(default_scenario(8));
  const SimOutput b = simulate_dataset(default_scenario(8));
  const SimOutput c = simulate_dataset(default_scenario(9));
  CHECK(a.table.rows == b.table.rows);
  CHECK(a.dataset.target() == b.dataset.target());
  CHECK(a.table.rows != c.table.rows);
  CHECK(a.dataset.size() == 600);
  CHECK(a.dataset.covariables().size() == 16);
  REQUIRE(a.dataset.village());
  CHECK(a.dataset.village()->modality_count() == 9);
  CHECK(a.truth.support() == std::set<std::string>{"NDVI", "Rainfall:NDVI", "Soil:Water"});
  CHECK(simulate_dataset(null_scenario(8)).truth.support().empty());
}

TEST_CASE("null spec: sample mean within three standard errors") {
  SimSpec s = two_numeric(81, 10000);
  s.intercept = std::log(2.0);
  const SimOutput out = simulate_dataset(s);
  const double se = std::sqrt(2.0 / 10000.0);
  CHECK(std::abs(out.dataset.target().mean() - 2.0) <= 3.0 * se);
}

TEST_CASE("interaction-only signal") {
  SimSpec s = two_numeric(82, 2000);
  s.intercept = 0.5;
  s.planted = {{"A:B", {0.4}}};
  const SimOutput out = simulate_dataset(s);
  const Vector& y = out.dataset.target();
  const Variable& a = out.dataset.covariables()[0];
  const Variable& b = out.dataset.covariables()[1];

  // marginal effects of A and B are null, since E[y | A] is even in A
  const FitResult fa = fit_glm(column(a), y);
  const FitResult fb = fit_glm(column(b), y);
  CHECK(std::abs(fa.beta[0]) <= 3.0 * fa.std_errors[0]);
  CHECK(std::abs(fb.beta[0]) <= 3.0 * fb.std_errors[0]);

  Matrix joint(y.size(), 3);
  joint << column(a), column(b), column(a).cwiseProduct(column(b));
  const FitResult f = fit_glm(joint, y);
  CHECK(f.beta[2] > 0.0);
  CHECK(std::abs(f.beta[2] - 0.4) <= 3.0 * f.std_errors[2]);
}

TEST_CASE("spec errors") {
  SimSpec s = two_numeric(83, 50);
  s.planted = {{"A:C", {0.4}}};
  CHECK_THROWS_AS(simulate_dataset(s), ValidationError);
  s.planted = {{"Soil", {0.4}}};  // two modalities, one coefficient
  CHECK_THROWS_AS(simulate_dataset(s), ValidationError);
  s.planted = {{"A", {30.0}}};
  CHECK_THROWS_AS(simulate_dataset(s), NumericalError);
}

TEST_CASE("score_recovery") {
  const std::set<std::string> truth = {"a", "b"};
  const RecoveryScore same = score_recovery(truth, truth);
  CHECK(same.exact_match);
  CHECK(same.true_pos == 2);
  const RecoveryScore none = score_recovery({}, truth);
  CHECK(none.false_neg == 2);
  CHECK_FALSE(none.exact_match);
  const RecoveryScore more = score_recovery({"a", "b", "c"}, truth);
  CHECK(more.false_pos == 1);
  CHECK_FALSE(more.exact_match);
}
