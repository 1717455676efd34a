#pragma once

#include "vectrisk/common.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vectrisk {

enum class VariableKind { numeric, categorical };

/// A named covariable column. Numeric variables hold finite reals;
/// categorical variables hold integer codes into an ordered, distinct list of
/// at least two modality labels. Immutable once built.
class Variable {
 public:
  static Variable numeric(std::string name, std::vector<double> values);
  static Variable categorical(std::string name, std::vector<std::string> modalities,
                              std::vector<int> codes);
  /// Builds a categorical variable from raw labels. Modalities are the declared
  /// ones first (declaration order) followed by unseen labels in order of first
  /// appearance. With `closed`, an undeclared label is an error.
  static Variable from_labels(std::string name, std::span<const std::string> labels,
                              std::vector<std::string> declared = {}, bool closed = false);

  const std::string& name() const noexcept { return name_; }
  VariableKind kind() const noexcept { return kind_; }
  bool is_numeric() const noexcept { return kind_ == VariableKind::numeric; }
  bool is_categorical() const noexcept { return kind_ == VariableKind::categorical; }
  std::size_t size() const noexcept;

  const std::vector<double>& values() const;  // numeric only
  const std::vector<int>& codes() const;      // categorical only
  const std::vector<std::string>& modalities() const noexcept { return modalities_; }
  std::size_t modality_count() const noexcept { return modalities_.size(); }
  const std::string& label(std::size_t row) const;

 private:
  Variable() = default;

  std::string name_;
  VariableKind kind_ = VariableKind::numeric;
  std::vector<double> values_;
  std::vector<int> codes_;
  std::vector<std::string> modalities_;
};

/// How a numeric covariable is turned into classes for the recoded groups.
struct RecodeRule {
  enum class Kind { none, quartile, edges };
  Kind kind = Kind::none;
  std::vector<double> edges;  // upper-inclusive bin edges for Kind::edges

  static RecodeRule none() { return {}; }
  static RecodeRule quartile() { return {Kind::quartile, {}}; }
  static RecodeRule with_edges(std::vector<double> e) { return {Kind::edges, std::move(e)}; }
};

class Dataset {
 public:
  Dataset(Vector target, std::vector<Variable> covariables, std::vector<RecodeRule> recode,
          std::optional<Variable> village = std::nullopt);

  const Vector& target() const noexcept { return target_; }
  const std::vector<Variable>& covariables() const noexcept { return covariables_; }
  const std::vector<RecodeRule>& recode_rules() const noexcept { return recode_; }
  const std::optional<Variable>& village() const noexcept { return village_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(target_.size()); }

 private:
  Vector target_;
  std::vector<Variable> covariables_;
  std::vector<RecodeRule> recode_;
  std::optional<Variable> village_;
};

enum class Coding { original, recoded };

/// Groups 1..4: original, original + village, recoded, recoded + village.
struct GroupSpec {
  int id = 1;
  Coding coding = Coding::original;
  bool include_village = false;

  static GroupSpec from_id(int id);
};

// ---------------------------------------------------------------------------
// Raw input tables and their metadata.

struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

enum class ColumnRole { target, covariable, village };

struct ColumnMeta {
  std::string name;
  VariableKind kind = VariableKind::numeric;
  std::vector<std::string> modalities;
  bool closed = false;
  ColumnRole role = ColumnRole::covariable;
  RecodeRule recode;
};

struct Metadata {
  std::vector<ColumnMeta> columns;
};

Dataset validate_dataset(const RawTable& table, const Metadata& meta);

/// Empirical percentile by linear interpolation between order statistics.
/// `sorted` must be ascending and non-empty; `p` in [0, 1].
double percentile(std::span<const double> sorted, double p);

/// Bins a numeric variable at its empirical 25/50/75 percentiles into Q1..Q4.
/// A value equal to an edge falls in the lower bin. Bins left empty are
/// dropped, so the result may have fewer than four modalities.
Variable recode_quartiles(const Variable& v);

/// Same binning with caller-supplied ascending upper-inclusive edges; bins are
/// labelled by their value range.
Variable recode_with_edges(const Variable& v, std::span<const double> edges);

std::vector<Variable> assemble_group(const Dataset& d, const GroupSpec& g);

}  // namespace vectrisk
