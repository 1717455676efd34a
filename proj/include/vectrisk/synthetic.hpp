#pragma once

#include "vectrisk/data_model.hpp"

#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace vectrisk {

struct CovariableSpec {
  enum class Law { uniform_int, uniform, normal, categorical };

  std::string name;
  Law law = Law::uniform;
  double a = 0.0;  // lower bound, or mean for Law::normal
  double b = 1.0;  // upper bound (inclusive for uniform_int), or sd
  std::vector<std::string> modalities;
  std::vector<double> probabilities;
  RecodeRule recode;

  static CovariableSpec integer(std::string name, int lo, int hi, RecodeRule recode = {});
  static CovariableSpec continuous(std::string name, double lo, double hi, RecodeRule recode = {});
  static CovariableSpec gaussian(std::string name, double mean, double sd, RecodeRule recode = {});
  static CovariableSpec categorical(std::string name, std::vector<std::string> modalities,
                                    std::vector<double> probabilities);
};

/// A planted effect on one group of the expanded design, named as the
/// interaction engine names it ("NDVI", "Rainfall:NDVI"), with one
/// coefficient per group column.
struct PlantedTerm {
  std::string group;
  std::vector<double> coefficients;
};

struct SimSpec {
  std::size_t n_obs = 600;
  std::vector<CovariableSpec> covariables;
  int village_levels = 0;  // 0: no village column
  std::vector<PlantedTerm> planted;
  double intercept = 0.0;
  std::uint64_t seed = 0;
  double max_mean = 1000.0;  // guard on exp(eta)
};

struct GroundTruth {
  double intercept = 0.0;
  std::vector<PlantedTerm> planted;

  /// Planted groups with at least one nonzero coefficient.
  std::set<std::string> support() const;
};

struct SimOutput {
  Dataset dataset;
  Metadata metadata;
  RawTable table;
  GroundTruth truth;
};

/// Draws covariables column by column, builds the true linear predictor with
/// the analysis encoding and draws y_i ~ Poisson(exp(eta_i)).
///
/// Random streams (see Rng::stream): target = 0, covariable j = j + 1,
/// village = 1000000.
SimOutput simulate_dataset(const SimSpec& spec);

/// Sixteen covariables shaped like the survey's house/environment variables
/// (Rainfall and NDVI as standardized anomalies), a 9-level village factor
/// and a planted support of three groups: NDVI (main effect), Rainfall:NDVI
/// (numeric product) and Soil:Water (joint-modality indicator).
SimSpec default_scenario(std::uint64_t seed, std::size_t n_obs = 600);

/// Same covariables with every planted coefficient zero.
SimSpec null_scenario(std::uint64_t seed, std::size_t n_obs = 600);

struct RecoveryScore {
  std::size_t true_pos = 0;
  std::size_t false_pos = 0;
  std::size_t false_neg = 0;
  bool exact_match = false;
};

RecoveryScore score_recovery(const std::set<std::string>& selected, const std::set<std::string>& truth);

}  // namespace vectrisk
