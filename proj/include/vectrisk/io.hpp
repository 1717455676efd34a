#pragma once

#include "vectrisk/cv.hpp"
#include "vectrisk/data_model.hpp"
#include "vectrisk/design.hpp"
#include "vectrisk/poisson.hpp"
#include "vectrisk/selection.hpp"
#include "vectrisk/synthetic.hpp"

#include "json.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace vectrisk {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Files and tables

std::string read_text(const std::string& path);
void write_text(const std::string& path, std::string_view content);

/// RFC 4180: quoted fields may hold commas, doubled quotes and line breaks.
/// CRLF and LF line ends are both accepted; a trailing newline is optional.
RawTable parse_csv(std::string_view text);
std::string format_csv(const RawTable& table);
RawTable read_csv(const std::string& path);

/// Shortest decimal that reads back to the same double.
std::string format_double(double v);

// ---------------------------------------------------------------------------
// Metadata

/// {"columns": [{name, kind, modalities?, closed?, role, recode?}]}; a bare
/// array of column objects is accepted too. recode is "none", "quartile" or
/// {"edges": [...]}.
Metadata metadata_from_json(const Json& j);
Json metadata_to_json(const Metadata& meta);
Metadata read_metadata(const std::string& path);

Dataset load_dataset(const std::string& data_path, const std::string& meta_path);

// ---------------------------------------------------------------------------
// Results

Json group_map_json(const GroupIndex& groups);
std::string design_csv(const DesignMatrix& design);

Json fit_to_json(const FitResult& fit, const GroupIndex& groups);
Json penalized_to_json(const PenalizedFit& fit, const GroupIndex& groups);

Json dcv_config_to_json(const DcvConfig& c);
/// Reads {n_outer, n_inner, seed, grid_size, grid_ratio, lambda_rule,
/// stratify_by}; missing keys keep the values of `base`.
DcvConfig dcv_config_from_json(const Json& j, DcvConfig base = {});

/// Full report; cv_report_from_json(cv_report_to_json(r)) reproduces r.
Json cv_report_to_json(const CvReport& report);
CvReport cv_report_from_json(const Json& j);

/// row, y, fold, prediction per rule.
std::string predictions_csv(const CvReport& report, const Vector& y);
/// fold, chosen indices and lambdas, active group counts.
std::string folds_csv(const CvReport& report);
/// rule, fold, then one 0/1 column per group.
std::string presence_csv(const CvReport& report);

Json selection_to_json(const SelectionResult& s);
Json backward_to_json(const BackwardResult& b, const GroupIndex& groups);
SelectionResult selection_from_json(const Json& j);

/// strategy, n_variables, mean, quadratic_risk, absolute_risk, deviance.
std::string comparison_csv(const std::vector<SelectionResult>& rows);

Json truth_to_json(const GroundTruth& truth);

// ---------------------------------------------------------------------------
// Chart

/// Two side-by-side bar panels (lambda.min left, lambda.1se right), one bar
/// per group with height = presence percentage and a threshold rule at w.
std::string frequency_chart_svg(const std::vector<std::string>& names, const std::vector<double>& pct_min,
                                const std::vector<double>& pct_1se, double w);

// ---------------------------------------------------------------------------
// Manifest

std::string sha256_hex(std::string_view bytes);

/// One artifact written by a command.
struct Artifact {
  std::string name;     // file name inside the output directory
  std::string content;
};

/// Writes every artifact into `dir` plus manifest.json holding the command,
/// the config echo, the seed, a SHA-256 per artifact, `extra` (timings) and a
/// UTC timestamp. The manifest is the only file with run-dependent content.
void write_artifacts(const std::string& dir, const std::string& command, const Json& config,
                     std::uint64_t seed, const std::vector<Artifact>& artifacts, const Json& extra = Json::object());

}  // namespace vectrisk
