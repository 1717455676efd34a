#pragma once

#include "vectrisk/common.hpp"
#include "vectrisk/data_model.hpp"

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace vectrisk {

enum class GroupKind {
  numeric,                  // numeric base variable, 1 column
  categorical,              // categorical base variable, d indicator columns
  numeric_numeric,          // product column
  numeric_categorical,      // numeric value routed to the column of the active modality
  categorical_categorical,  // joint-modality indicators, d_k * d_l columns
};

/// One covariable of the expanded set: a base variable or a pairwise crossing.
struct GroupInfo {
  std::string name;  // "A" or "A:B"
  GroupKind kind = GroupKind::numeric;
  Index offset = 0;
  Index dimension = 0;
  int first = -1;   // base index
  int second = -1;  // second base index for interactions, -1 otherwise
  std::vector<std::string> column_names;

  /// Indicator columns that partition the rows (they sum to one row-wise).
  bool is_indicator_partition() const noexcept {
    return kind == GroupKind::categorical || kind == GroupKind::categorical_categorical;
  }
  Index end() const noexcept { return offset + dimension; }
};

/// Grouping of design columns: the identifiability vector H (group
/// dimensions), their offsets and display names.
class GroupIndex {
 public:
  GroupIndex() = default;
  explicit GroupIndex(std::vector<GroupInfo> groups);

  std::size_t size() const noexcept { return groups_.size(); }
  Index total_columns() const noexcept { return total_columns_; }
  const GroupInfo& operator[](std::size_t s) const { return groups_.at(s); }
  const std::vector<GroupInfo>& groups() const noexcept { return groups_; }

  std::vector<Index> dimensions() const;  // H
  /// Group owning design column `col`.
  std::size_t group_of_column(Index col) const { return column_group_.at(static_cast<std::size_t>(col)); }
  /// Position of the named group; throws ValidationError if absent.
  std::size_t find(const std::string& name) const;
  bool contains(const std::string& name) const;
  std::vector<std::string> names() const;

 private:
  std::vector<GroupInfo> groups_;
  std::vector<std::size_t> column_group_;
  Index total_columns_ = 0;
};

/// Expanded numeric design. The intercept is implicit and never stored.
struct DesignMatrix {
  Matrix x;
  GroupIndex groups;
  std::vector<bool> constant_columns;  // flagged, kept in x

  Index rows() const noexcept { return x.rows(); }
  Index cols() const noexcept { return x.cols(); }
};

/// Columns of a variable's own encoding: numeric -> 1 column, categorical ->
/// one indicator per modality.
Matrix encode(const Variable& v);

Variable cross_numeric_numeric(const Variable& vk, const Variable& vl);
Matrix cross_numeric_categorical(const Variable& vk, const Variable& vl);
Matrix cross_categorical_categorical(const Variable& vk, const Variable& vl);

/// Design with every base variable followed by the listed pairs (i < j), in
/// the order given.
DesignMatrix build_design(std::span<const Variable> base, std::span<const std::pair<int, int>> pairs);

/// All pairs (i, j), i < j, in lexicographic order.
std::vector<std::pair<int, int>> all_pairs(int p);

/// Base encodings followed by all p(p-1)/2 pairwise interaction groups.
DesignMatrix expand_interactions(std::span<const Variable> base);

/// Number of expanded covariables for p base variables: p + p(p-1)/2.
constexpr std::size_t expanded_count(std::size_t p) { return p + p * (p - 1) / 2; }

/// Flags columns whose values are all equal on `rows` (all rows if empty).
std::vector<bool> constant_columns(const Matrix& x, std::span<const Index> rows = {});

}  // namespace vectrisk
