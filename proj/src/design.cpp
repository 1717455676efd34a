#include "vectrisk/design.hpp"

#include <map>

namespace vectrisk {

namespace {

const char* kModule = "interaction-engine";

[[noreturn]] void fail(const std::string& msg) { throw ValidationError(kModule, msg); }

void require_same_length(const Variable& a, const Variable& b) {
  if (a.size() != b.size()) {
    fail("length mismatch between '" + a.name() + "' (" + std::to_string(a.size()) + ") and '" +
         b.name() + "' (" + std::to_string(b.size()) + ")");
  }
}

std::vector<std::string> column_names_of(const Variable& v) {
  if (v.is_numeric()) return {v.name()};
  std::vector<std::string> out;
  for (const auto& m : v.modalities()) out.push_back(v.name() + "=" + m);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// GroupIndex

GroupIndex::GroupIndex(std::vector<GroupInfo> groups) : groups_(std::move(groups)) {
  Index offset = 0;
  for (std::size_t s = 0; s < groups_.size(); ++s) {
    auto& g = groups_[s];
    if (g.dimension < 1) fail("group '" + g.name + "' has no columns");
    if (g.offset != offset) fail("group '" + g.name + "' is not contiguous");
    if (static_cast<Index>(g.column_names.size()) != g.dimension) {
      fail("group '" + g.name + "' column names do not match its dimension");
    }
    offset += g.dimension;
    column_group_.insert(column_group_.end(), static_cast<std::size_t>(g.dimension), s);
  }
  total_columns_ = offset;
}

std::vector<Index> GroupIndex::dimensions() const {
  std::vector<Index> h;
  h.reserve(groups_.size());
  for (const auto& g : groups_) h.push_back(g.dimension);
  return h;
}

std::size_t GroupIndex::find(const std::string& name) const {
  for (std::size_t s = 0; s < groups_.size(); ++s) {
    if (groups_[s].name == name) return s;
  }
  fail("unknown variable group '" + name + "'");
}

bool GroupIndex::contains(const std::string& name) const {
  for (const auto& g : groups_) {
    if (g.name == name) return true;
  }
  return false;
}

std::vector<std::string> GroupIndex::names() const {
  std::vector<std::string> out;
  out.reserve(groups_.size());
  for (const auto& g : groups_) out.push_back(g.name);
  return out;
}

// ---------------------------------------------------------------------------
// Crossings

Matrix encode(const Variable& v) {
  const auto n = static_cast<Index>(v.size());
  if (v.is_numeric()) {
    Matrix out(n, 1);
    for (Index i = 0; i < n; ++i) out(i, 0) = v.values()[static_cast<std::size_t>(i)];
    return out;
  }
  Matrix out = Matrix::Zero(n, static_cast<Index>(v.modality_count()));
  const auto& codes = v.codes();
  for (Index i = 0; i < n; ++i) out(i, codes[static_cast<std::size_t>(i)]) = 1.0;
  return out;
}

Variable cross_numeric_numeric(const Variable& vk, const Variable& vl) {
  if (!vk.is_numeric() || !vl.is_numeric()) fail("numeric crossing needs two numeric variables");
  require_same_length(vk, vl);
  std::vector<double> out(vk.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = vk.values()[i] * vl.values()[i];
  return Variable::numeric(vk.name() + ":" + vl.name(), std::move(out));
}

Matrix cross_numeric_categorical(const Variable& vk, const Variable& vl) {
  if (!vk.is_numeric() || !vl.is_categorical()) {
    fail("numeric-categorical crossing needs (numeric, categorical)");
  }
  require_same_length(vk, vl);
  const auto n = static_cast<Index>(vk.size());
  Matrix out = Matrix::Zero(n, static_cast<Index>(vl.modality_count()));
  for (Index i = 0; i < n; ++i) {
    const auto row = static_cast<std::size_t>(i);
    out(i, vl.codes()[row]) = vk.values()[row];
  }
  return out;
}

Matrix cross_categorical_categorical(const Variable& vk, const Variable& vl) {
  if (!vk.is_categorical() || !vl.is_categorical()) {
    fail("categorical crossing needs two categorical variables");
  }
  require_same_length(vk, vl);
  const auto n = static_cast<Index>(vk.size());
  const auto dl = static_cast<Index>(vl.modality_count());
  Matrix out = Matrix::Zero(n, static_cast<Index>(vk.modality_count()) * dl);
  for (Index i = 0; i < n; ++i) {
    const auto row = static_cast<std::size_t>(i);
    out(i, vk.codes()[row] * dl + vl.codes()[row]) = 1.0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Expansion

std::vector<std::pair<int, int>> all_pairs(int p) {
  std::vector<std::pair<int, int>> out;
  out.reserve(static_cast<std::size_t>(p) * static_cast<std::size_t>(p > 0 ? p - 1 : 0) / 2);
  for (int i = 0; i < p; ++i) {
    for (int j = i + 1; j < p; ++j) out.emplace_back(i, j);
  }
  return out;
}

DesignMatrix build_design(std::span<const Variable> base, std::span<const std::pair<int, int>> pairs) {
  if (base.empty()) fail("expansion needs at least one base variable");
  const std::size_t n = base.front().size();
  std::map<std::string, int> seen;
  for (const auto& v : base) {
    if (v.size() != n) require_same_length(base.front(), v);
    if (!seen.emplace(v.name(), 0).second) fail("duplicate base variable '" + v.name() + "'");
  }

  std::vector<GroupInfo> groups;
  std::vector<Matrix> blocks;
  Index offset = 0;
  auto push = [&](GroupInfo g, Matrix block) {
    g.offset = offset;
    g.dimension = block.cols();
    offset += block.cols();
    groups.push_back(std::move(g));
    blocks.push_back(std::move(block));
  };

  for (std::size_t b = 0; b < base.size(); ++b) {
    const Variable& v = base[b];
    GroupInfo g;
    g.name = v.name();
    g.kind = v.is_numeric() ? GroupKind::numeric : GroupKind::categorical;
    g.first = static_cast<int>(b);
    g.column_names = column_names_of(v);
    push(std::move(g), encode(v));
  }

  const int p = static_cast<int>(base.size());
  for (const auto& [i, j] : pairs) {
    if (i < 0 || j >= p || i >= j) {
      fail("invalid interaction pair (" + std::to_string(i) + ", " + std::to_string(j) + ")");
    }
    const Variable& a = base[static_cast<std::size_t>(i)];
    const Variable& b = base[static_cast<std::size_t>(j)];
    GroupInfo g;
    g.name = a.name() + ":" + b.name();
    g.first = i;
    g.second = j;
    Matrix block;
    if (a.is_numeric() && b.is_numeric()) {
      g.kind = GroupKind::numeric_numeric;
      block = encode(cross_numeric_numeric(a, b));
      g.column_names = {g.name};
    } else if (a.is_numeric() || b.is_numeric()) {
      g.kind = GroupKind::numeric_categorical;
      const Variable& num = a.is_numeric() ? a : b;
      const Variable& cat = a.is_numeric() ? b : a;
      block = cross_numeric_categorical(num, cat);
      for (const auto& m : cat.modalities()) {
        g.column_names.push_back(a.is_numeric() ? a.name() + ":" + cat.name() + "=" + m
                                                : cat.name() + "=" + m + ":" + b.name());
      }
    } else {
      g.kind = GroupKind::categorical_categorical;
      block = cross_categorical_categorical(a, b);
      for (const auto& ma : a.modalities()) {
        for (const auto& mb : b.modalities()) {
          g.column_names.push_back(a.name() + "=" + ma + ":" + b.name() + "=" + mb);
        }
      }
    }
    push(std::move(g), std::move(block));
  }

  DesignMatrix out;
  out.x.resize(static_cast<Index>(n), offset);
  for (std::size_t s = 0; s < groups.size(); ++s) {
    out.x.middleCols(groups[s].offset, groups[s].dimension) = blocks[s];
  }
  out.groups = GroupIndex(std::move(groups));
  out.constant_columns = constant_columns(out.x);
  return out;
}

DesignMatrix expand_interactions(std::span<const Variable> base) {
  const auto pairs = all_pairs(static_cast<int>(base.size()));
  return build_design(base, pairs);
}

std::vector<bool> constant_columns(const Matrix& x, std::span<const Index> rows) {
  std::vector<bool> out(static_cast<std::size_t>(x.cols()), true);
  const Index n = rows.empty() ? x.rows() : static_cast<Index>(rows.size());
  if (n == 0) return out;
  for (Index j = 0; j < x.cols(); ++j) {
    const double first = x(rows.empty() ? 0 : rows[0], j);
    bool constant = true;
    for (Index r = 1; r < n && constant; ++r) {
      constant = x(rows.empty() ? r : rows[static_cast<std::size_t>(r)], j) == first;
    }
    out[static_cast<std::size_t>(j)] = constant;
  }
  return out;
}

}  // namespace vectrisk
