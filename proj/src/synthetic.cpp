#include "vectrisk/synthetic.hpp"

#include "vectrisk/design.hpp"
#include "vectrisk/random.hpp"

#include <charconv>
#include <cmath>
#include <map>

namespace vectrisk {

namespace {

const char* kModule = "synthetic-bench";

[[noreturn]] void fail(const std::string& msg) { throw ValidationError(kModule, msg); }

constexpr std::uint64_t kVillageStream = 1000000;

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::vector<std::string> draw_column(const CovariableSpec& c, std::size_t n, Rng rng) {
  std::vector<std::string> cells(n);
  using Law = CovariableSpec::Law;
  switch (c.law) {
    case Law::uniform_int: {
      const auto lo = static_cast<std::int64_t>(c.a);
      const auto span = static_cast<std::uint64_t>(static_cast<std::int64_t>(c.b) - lo + 1);
      for (auto& cell : cells) cell = std::to_string(lo + static_cast<std::int64_t>(rng.below(span)));
      break;
    }
    case Law::uniform:
      for (auto& cell : cells) {
        const double v = c.a + (c.b - c.a) * rng.uniform();
        cell = format_number(std::round(v * 100.0) / 100.0);
      }
      break;
    case Law::normal:
      for (auto& cell : cells) {
        const double v = c.a + c.b * rng.normal();
        cell = format_number(std::round(v * 100.0) / 100.0);
      }
      break;
    case Law::categorical: {
      double total = 0.0;
      for (double p : c.probabilities) total += p;
      for (auto& cell : cells) {
        const double u = rng.uniform() * total;
        double acc = 0.0;
        std::size_t q = 0;
        for (; q + 1 < c.probabilities.size(); ++q) {
          acc += c.probabilities[q];
          if (u < acc) break;
        }
        cell = c.modalities[q];
      }
      break;
    }
  }
  return cells;
}

void check_spec(const SimSpec& spec) {
  if (spec.n_obs < 4) fail("n_obs must be at least 4");
  if (spec.covariables.empty()) fail("at least one covariable is required");
  for (const auto& c : spec.covariables) {
    if (c.law == CovariableSpec::Law::categorical) {
      if (c.modalities.size() < 2 || c.modalities.size() != c.probabilities.size()) {
        fail("categorical covariable '" + c.name + "' needs matching modalities and probabilities");
      }
      for (double p : c.probabilities) {
        if (!(p >= 0.0)) fail("negative probability for '" + c.name + "'");
      }
    } else if (c.law == CovariableSpec::Law::uniform_int || c.law == CovariableSpec::Law::uniform) {
      if (!(c.b >= c.a)) fail("empty range for '" + c.name + "'");
    }
  }
}

}  // namespace

CovariableSpec CovariableSpec::integer(std::string name, int lo, int hi, RecodeRule recode) {
  return {std::move(name), Law::uniform_int, double(lo), double(hi), {}, {}, std::move(recode)};
}

CovariableSpec CovariableSpec::continuous(std::string name, double lo, double hi, RecodeRule recode) {
  return {std::move(name), Law::uniform, lo, hi, {}, {}, std::move(recode)};
}

CovariableSpec CovariableSpec::gaussian(std::string name, double mean, double sd, RecodeRule recode) {
  return {std::move(name), Law::normal, mean, sd, {}, {}, std::move(recode)};
}

CovariableSpec CovariableSpec::categorical(std::string name, std::vector<std::string> modalities,
                                           std::vector<double> probabilities) {
  return {std::move(name), Law::categorical, 0.0, 0.0, std::move(modalities), std::move(probabilities), {}};
}

std::set<std::string> GroundTruth::support() const {
  std::set<std::string> out;
  for (const auto& t : planted) {
    for (double c : t.coefficients) {
      if (c != 0.0) {
        out.insert(t.group);
        break;
      }
    }
  }
  return out;
}

SimOutput simulate_dataset(const SimSpec& spec) {
  check_spec(spec);
  const std::size_t n = spec.n_obs;

  RawTable table;
  Metadata meta;
  std::vector<std::vector<std::string>> columns;

  table.header.push_back("count");
  meta.columns.push_back({"count", VariableKind::numeric, {}, false, ColumnRole::target, {}});
  columns.emplace_back(n);  // target, filled last

  for (std::size_t j = 0; j < spec.covariables.size(); ++j) {
    const auto& c = spec.covariables[j];
    table.header.push_back(c.name);
    ColumnMeta cm;
    cm.name = c.name;
    cm.role = ColumnRole::covariable;
    cm.recode = c.recode;
    if (c.law == CovariableSpec::Law::categorical) {
      cm.kind = VariableKind::categorical;
      cm.modalities = c.modalities;
      cm.closed = true;
    }
    meta.columns.push_back(std::move(cm));
    columns.push_back(draw_column(c, n, Rng::stream(spec.seed, j + 1)));
  }
  if (spec.village_levels > 0) {
    if (spec.village_levels < 2) fail("village needs at least 2 levels");
    CovariableSpec v;
    v.name = "village";
    v.law = CovariableSpec::Law::categorical;
    for (int l = 1; l <= spec.village_levels; ++l) {
      v.modalities.push_back("V" + std::to_string(l));
      v.probabilities.push_back(1.0);
    }
    table.header.push_back("village");
    meta.columns.push_back({"village", VariableKind::categorical, v.modalities, true, ColumnRole::village, {}});
    columns.push_back(draw_column(v, n, Rng::stream(spec.seed, kVillageStream)));
  }

  // Covariables parsed through the same path as user data; the target column
  // is a placeholder until the linear predictor is known.
  for (std::size_t i = 0; i < n; ++i) columns[0][i] = "0";
  auto assemble_rows = [&] {
    table.rows.assign(n, {});
    for (std::size_t i = 0; i < n; ++i) {
      table.rows[i].reserve(columns.size());
      for (const auto& col : columns) table.rows[i].push_back(col[i]);
    }
  };
  assemble_rows();
  const Dataset draft = validate_dataset(table, meta);

  std::vector<Variable> base = draft.covariables();
  if (draft.village()) base.push_back(*draft.village());
  std::map<std::string, int> position;
  for (std::size_t b = 0; b < base.size(); ++b) position.emplace(base[b].name(), static_cast<int>(b));

  std::vector<std::pair<int, int>> pairs;
  for (const auto& term : spec.planted) {
    const auto colon = term.group.find(':');
    if (colon == std::string::npos) {
      if (!position.contains(term.group)) fail("planted term '" + term.group + "' names no variable");
      continue;
    }
    const std::string left = term.group.substr(0, colon);
    const std::string right = term.group.substr(colon + 1);
    if (!position.contains(left) || !position.contains(right) || left == right) {
      fail("planted term '" + term.group + "' is not a valid pair");
    }
    int i = position.at(left);
    int j = position.at(right);
    if (i > j) fail("planted pair '" + term.group + "' must list variables in column order");
    pairs.emplace_back(i, j);
  }
  const DesignMatrix design = build_design(base, pairs);

  Vector eta = Vector::Constant(static_cast<Index>(n), spec.intercept);
  for (const auto& term : spec.planted) {
    const auto& g = design.groups[design.groups.find(term.group)];
    if (static_cast<Index>(term.coefficients.size()) != g.dimension) {
      fail("planted term '" + term.group + "' needs " + std::to_string(g.dimension) + " coefficients");
    }
    for (Index c = 0; c < g.dimension; ++c) {
      eta.noalias() += term.coefficients[static_cast<std::size_t>(c)] * design.x.col(g.offset + c);
    }
  }

  Rng target_rng = Rng::stream(spec.seed, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const double mu = std::exp(eta[static_cast<Index>(i)]);
    if (!(mu <= spec.max_mean)) {
      throw NumericalError(kModule, "mean overflow guard: exp(eta) = " + format_number(mu) +
                                        " exceeds " + format_number(spec.max_mean));
    }
    columns[0][i] = std::to_string(target_rng.poisson(mu));
  }
  assemble_rows();

  SimOutput out{validate_dataset(table, meta), std::move(meta), std::move(table), {}};
  out.truth.intercept = spec.intercept;
  out.truth.planted = spec.planted;
  return out;
}

namespace {

std::vector<CovariableSpec> survey_covariables() {
  using C = CovariableSpec;
  const std::vector<std::string> yes_no = {"Yes", "No"};
  return {
      C::categorical("Repellent", yes_no, {0.3, 0.7}),
      C::categorical("BedNet", yes_no, {0.6, 0.4}),
      C::categorical("Roof", {"SheetMetal", "Straw"}, {0.7, 0.3}),
      C::categorical("Utensils", yes_no, {0.4, 0.6}),
      C::categorical("Works", yes_no, {0.3, 0.7}),
      C::categorical("Soil", {"Humid", "Dry"}, {0.45, 0.55}),
      C::categorical("Water", yes_no, {0.35, 0.65}),
      C::categorical("Majority", {"1", "4", "7"}, {0.4, 0.35, 0.25}),
      C::categorical("Season", {"1", "2", "3", "4"}, {0.25, 0.25, 0.25, 0.25}),
      C::integer("RainyDN10", 0, 9, RecodeRule::with_edges({1.0, 4.0})),
      C::integer("RainyDN", 0, 3),
      C::integer("Fragmentation", 26, 71, RecodeRule::quartile()),
      C::integer("Openings", 1, 5, RecodeRule::quartile()),
      C::integer("Inhabitants", 1, 8, RecodeRule::quartile()),
      // standardized anomalies rather than raw levels
      C::gaussian("Rainfall", 0.0, 1.0, RecodeRule::quartile()),
      C::gaussian("NDVI", 0.0, 1.0, RecodeRule::quartile()),
  };
}

}  // namespace

SimSpec default_scenario(std::uint64_t seed, std::size_t n_obs) {
  SimSpec spec;
  spec.n_obs = n_obs;
  spec.covariables = survey_covariables();
  spec.village_levels = 9;
  spec.seed = seed;
  spec.intercept = 1.0;
  spec.planted = {
      {"NDVI", {0.4}},
      {"Rainfall:NDVI", {0.4}},
      {"Soil:Water", {0.8, 0.0, 0.0, 0.0}},
  };
  return spec;
}

SimSpec null_scenario(std::uint64_t seed, std::size_t n_obs) {
  SimSpec spec = default_scenario(seed, n_obs);
  spec.planted.clear();
  spec.intercept = 1.0;
  return spec;
}

RecoveryScore score_recovery(const std::set<std::string>& selected, const std::set<std::string>& truth) {
  RecoveryScore s;
  for (const auto& v : selected) {
    if (truth.contains(v)) {
      ++s.true_pos;
    } else {
      ++s.false_pos;
    }
  }
  s.false_neg = truth.size() - s.true_pos;
  s.exact_match = s.false_pos == 0 && s.false_neg == 0;
  return s;
}

}  // namespace vectrisk
