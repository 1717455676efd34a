#include "vectrisk/data_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace vectrisk {

namespace {

const char* kModule = "data-model";

[[noreturn]] void fail(const std::string& msg) { throw ValidationError(kModule, msg); }

std::string format_edge(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "NA" || cell == "na" || cell == "NaN";
}

double parse_number(const std::string& cell, const std::string& column, std::size_t row) {
  if (is_missing(cell)) {
    fail("missing value in column '" + column + "' at row " + std::to_string(row + 1));
  }
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && *(last - 1) == ' ') --last;
  if (first < last && *first == '+') ++first;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    fail("non-numeric value '" + cell + "' in column '" + column + "' at row " +
         std::to_string(row + 1));
  }
  return value;
}

}  // namespace

// ---------------------------------------------------------------------------
// Variable

Variable Variable::numeric(std::string name, std::vector<double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) fail("non-finite value in numeric variable '" + name + "'");
  }
  Variable out;
  out.name_ = std::move(name);
  out.kind_ = VariableKind::numeric;
  out.values_ = std::move(values);
  return out;
}

Variable Variable::categorical(std::string name, std::vector<std::string> modalities,
                               std::vector<int> codes) {
  if (modalities.size() < 2) {
    fail("categorical variable '" + name + "' needs at least 2 modalities");
  }
  std::set<std::string> seen(modalities.begin(), modalities.end());
  if (seen.size() != modalities.size()) {
    fail("categorical variable '" + name + "' has duplicate modalities");
  }
  const int d = static_cast<int>(modalities.size());
  for (int c : codes) {
    if (c < 0 || c >= d) fail("categorical variable '" + name + "' has an out-of-range code");
  }
  Variable out;
  out.name_ = std::move(name);
  out.kind_ = VariableKind::categorical;
  out.modalities_ = std::move(modalities);
  out.codes_ = std::move(codes);
  return out;
}

Variable Variable::from_labels(std::string name, std::span<const std::string> labels,
                               std::vector<std::string> declared, bool closed) {
  std::map<std::string, int> lookup;
  std::vector<std::string> modalities;
  for (const auto& m : declared) {
    if (lookup.contains(m)) fail("categorical variable '" + name + "' has duplicate modalities");
    lookup.emplace(m, static_cast<int>(modalities.size()));
    modalities.push_back(m);
  }
  std::vector<int> codes;
  codes.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& label = labels[i];
    if (is_missing(label)) {
      fail("missing value in column '" + name + "' at row " + std::to_string(i + 1));
    }
    auto it = lookup.find(label);
    if (it == lookup.end()) {
      if (closed) fail("undeclared modality '" + label + "' in column '" + name + "'");
      it = lookup.emplace(label, static_cast<int>(modalities.size())).first;
      modalities.push_back(label);
    }
    codes.push_back(it->second);
  }
  return categorical(std::move(name), std::move(modalities), std::move(codes));
}

std::size_t Variable::size() const noexcept {
  return is_numeric() ? values_.size() : codes_.size();
}

const std::vector<double>& Variable::values() const {
  if (!is_numeric()) fail("variable '" + name_ + "' is not numeric");
  return values_;
}

const std::vector<int>& Variable::codes() const {
  if (!is_categorical()) fail("variable '" + name_ + "' is not categorical");
  return codes_;
}

const std::string& Variable::label(std::size_t row) const {
  return modalities_.at(static_cast<std::size_t>(codes().at(row)));
}

// ---------------------------------------------------------------------------
// Dataset / GroupSpec

Dataset::Dataset(Vector target, std::vector<Variable> covariables, std::vector<RecodeRule> recode,
                 std::optional<Variable> village)
    : target_(std::move(target)),
      covariables_(std::move(covariables)),
      recode_(std::move(recode)),
      village_(std::move(village)) {
  const auto n = static_cast<std::size_t>(target_.size());
  for (Index i = 0; i < target_.size(); ++i) {
    const double y = target_[i];
    if (!std::isfinite(y) || y != std::floor(y)) fail("non-integer count in target");
    if (y < 0) fail("negative count in target");
  }
  if (recode_.empty()) recode_.resize(covariables_.size());
  if (recode_.size() != covariables_.size()) fail("recode rules do not match covariables");
  std::set<std::string> names;
  for (const auto& v : covariables_) {
    if (v.size() != n) fail("length mismatch in column '" + v.name() + "'");
    if (!names.insert(v.name()).second) fail("duplicate covariable name '" + v.name() + "'");
  }
  if (village_) {
    if (!village_->is_categorical()) fail("village must be categorical");
    if (village_->size() != n) fail("length mismatch in column '" + village_->name() + "'");
    if (names.contains(village_->name())) {
      fail("village name '" + village_->name() + "' clashes with a covariable");
    }
  }
}

GroupSpec GroupSpec::from_id(int id) {
  switch (id) {
    case 1: return {1, Coding::original, false};
    case 2: return {2, Coding::original, true};
    case 3: return {3, Coding::recoded, false};
    case 4: return {4, Coding::recoded, true};
    default: fail("group id must be 1, 2, 3 or 4 (got " + std::to_string(id) + ")");
  }
}

// ---------------------------------------------------------------------------
// Validation

Dataset validate_dataset(const RawTable& table, const Metadata& meta) {
  std::map<std::string, std::size_t> position;
  for (std::size_t j = 0; j < table.header.size(); ++j) position.emplace(table.header[j], j);

  const ColumnMeta* target_meta = nullptr;
  const ColumnMeta* village_meta = nullptr;
  for (const auto& col : meta.columns) {
    if (!position.contains(col.name)) fail("missing column '" + col.name + "'");
    if (col.role == ColumnRole::target) {
      if (target_meta) fail("more than one target column declared");
      target_meta = &col;
    } else if (col.role == ColumnRole::village) {
      if (village_meta) fail("more than one village column declared");
      village_meta = &col;
    }
  }
  if (!target_meta) fail("no target column declared");

  const std::size_t width = table.header.size();
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    if (table.rows[i].size() != width) {
      fail("length mismatch at row " + std::to_string(i + 1) + ": expected " +
           std::to_string(width) + " cells, got " + std::to_string(table.rows[i].size()));
    }
  }

  const std::size_t n = table.rows.size();
  auto column_cells = [&](const ColumnMeta& col) {
    std::vector<std::string> cells(n);
    const std::size_t j = position.at(col.name);
    for (std::size_t i = 0; i < n; ++i) cells[i] = table.rows[i][j];
    return cells;
  };

  Vector target(static_cast<Index>(n));
  {
    const auto cells = column_cells(*target_meta);
    for (std::size_t i = 0; i < n; ++i) {
      const double y = parse_number(cells[i], target_meta->name, i);
      if (y < 0) fail("negative count in target at row " + std::to_string(i + 1));
      if (y != std::floor(y)) fail("non-integer count in target at row " + std::to_string(i + 1));
      target[static_cast<Index>(i)] = y;
    }
  }

  auto build = [&](const ColumnMeta& col) {
    const auto cells = column_cells(col);
    if (col.kind == VariableKind::categorical) {
      return Variable::from_labels(col.name, cells, col.modalities, col.closed);
    }
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = parse_number(cells[i], col.name, i);
    return Variable::numeric(col.name, std::move(values));
  };

  std::vector<Variable> covariables;
  std::vector<RecodeRule> recode;
  for (const auto& col : meta.columns) {
    if (col.role != ColumnRole::covariable) continue;
    if (col.recode.kind != RecodeRule::Kind::none && col.kind != VariableKind::numeric) {
      fail("recoding requested for non-numeric column '" + col.name + "'");
    }
    covariables.push_back(build(col));
    recode.push_back(col.recode);
  }
  std::optional<Variable> village;
  if (village_meta) {
    if (village_meta->kind != VariableKind::categorical) fail("village column must be categorical");
    village = build(*village_meta);
  }
  return Dataset(std::move(target), std::move(covariables), std::move(recode), std::move(village));
}

// ---------------------------------------------------------------------------
// Recoding

double percentile(std::span<const double> sorted, double p) {
  if (sorted.empty()) fail("percentile of an empty sample");
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

namespace {

// Bins values by upper-inclusive edges, drops empty bins and relabels codes.
Variable bin_numeric(const Variable& v, std::span<const double> edges,
                     const std::vector<std::string>& labels) {
  const auto& values = v.values();
  std::vector<int> raw(values.size());
  std::vector<std::size_t> counts(edges.size() + 1, 0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bin = static_cast<int>(std::lower_bound(edges.begin(), edges.end(), values[i]) -
                                      edges.begin());
    raw[i] = bin;
    ++counts[static_cast<std::size_t>(bin)];
  }
  std::vector<int> remap(counts.size(), -1);
  std::vector<std::string> modalities;
  for (std::size_t b = 0; b < counts.size(); ++b) {
    if (counts[b] == 0) continue;
    remap[b] = static_cast<int>(modalities.size());
    modalities.push_back(labels[b]);
  }
  if (modalities.size() < 2) fail("degenerate recode of '" + v.name() + "': a single class");
  for (auto& c : raw) c = remap[static_cast<std::size_t>(c)];
  return Variable::categorical(v.name(), std::move(modalities), std::move(raw));
}

}  // namespace

Variable recode_quartiles(const Variable& v) {
  if (!v.is_numeric()) fail("cannot recode categorical variable '" + v.name() + "'");
  if (v.size() < 4) fail("recoding '" + v.name() + "' needs at least 4 observations");
  std::vector<double> sorted = v.values();
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back()) {
    fail("degenerate recode of '" + v.name() + "': fewer than 2 distinct values");
  }
  const std::vector<double> edges = {percentile(sorted, 0.25), percentile(sorted, 0.50),
                                     percentile(sorted, 0.75)};
  return bin_numeric(v, edges, {"Q1", "Q2", "Q3", "Q4"});
}

Variable recode_with_edges(const Variable& v, std::span<const double> edges) {
  if (!v.is_numeric()) fail("cannot recode categorical variable '" + v.name() + "'");
  if (edges.empty()) fail("recoding '" + v.name() + "' needs at least one edge");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) fail("recode edges of '" + v.name() + "' must increase");
  }
  std::vector<std::string> labels;
  labels.push_back("<=" + format_edge(edges.front()));
  for (std::size_t i = 1; i < edges.size(); ++i) {
    labels.push_back("(" + format_edge(edges[i - 1]) + "," + format_edge(edges[i]) + "]");
  }
  labels.push_back(">" + format_edge(edges.back()));
  return bin_numeric(v, edges, labels);
}

std::vector<Variable> assemble_group(const Dataset& d, const GroupSpec& g) {
  std::vector<Variable> out;
  out.reserve(d.covariables().size() + 1);
  for (std::size_t j = 0; j < d.covariables().size(); ++j) {
    const Variable& v = d.covariables()[j];
    const RecodeRule& rule = d.recode_rules()[j];
    if (g.coding == Coding::original || rule.kind == RecodeRule::Kind::none) {
      out.push_back(v);
    } else if (rule.kind == RecodeRule::Kind::quartile) {
      out.push_back(recode_quartiles(v));
    } else {
      out.push_back(recode_with_edges(v, rule.edges));
    }
  }
  if (g.include_village) {
    if (!d.village()) fail("group " + std::to_string(g.id) + " requires a village column");
    out.push_back(*d.village());
  }
  return out;
}

}  // namespace vectrisk
