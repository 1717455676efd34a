#include "vectrisk/io.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace vectrisk {

namespace {

const char* kModule = "cli-io";

[[noreturn]] void fail(const std::string& msg) { throw ValidationError(kModule, msg); }

// Non-finite values are written as strings so that reports read back exactly.
Json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double to_double(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  fail("expected a number, got " + j.dump());
}

Json vec(const Vector& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
  return a;
}

Json vec(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

Vector to_vector(const Json& j) {
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = to_double(j[i]);
  return v;
}

std::vector<double> to_doubles(const Json& j) {
  std::vector<double> v;
  for (const auto& x : j) v.push_back(to_double(x));
  return v;
}

template <class T>
std::vector<T> to_list(const Json& j) {
  return j.get<std::vector<T>>();
}

const Json& at(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) fail(std::string("missing key '") + key + "'");
  return j.at(key);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* one_se_name(OneSeRule r) { return r == OneSeRule::paper ? "paper" : "within-1se"; }

OneSeRule parse_one_se(const std::string& s) {
  if (s == "paper") return OneSeRule::paper;
  if (s == "within-1se") return OneSeRule::within_1se;
  fail("unknown lambda rule '" + s + "' (expected paper or within-1se)");
}

const char* stratify_name(StratifyBy s) { return s == StratifyBy::target ? "target" : "village"; }

StratifyBy parse_stratify(const std::string& s) {
  if (s == "target") return StratifyBy::target;
  if (s == "village") return StratifyBy::village;
  fail("unknown stratification '" + s + "' (expected target or village)");
}

Json fit_full(const FitResult& f) {
  Json j;
  j["intercept"] = num(f.intercept);
  j["beta"] = vec(f.beta);
  j["intercept_se"] = num(f.intercept_se);
  j["std_errors"] = vec(f.std_errors);
  j["mu"] = vec(f.mu);
  j["deviance"] = num(f.deviance);
  j["null_deviance"] = num(f.null_deviance);
  j["resid_dev"] = num(f.resid_dev);
  j["log_likelihood"] = num(f.log_likelihood);
  j["converged"] = f.converged;
  j["rank_deficient"] = f.rank_deficient;
  j["iterations"] = f.iterations;
  return j;
}

FitResult fit_from(const Json& j) {
  FitResult f;
  f.intercept = to_double(at(j, "intercept"));
  f.beta = to_vector(at(j, "beta"));
  f.intercept_se = to_double(at(j, "intercept_se"));
  f.std_errors = to_vector(at(j, "std_errors"));
  f.mu = to_vector(at(j, "mu"));
  f.deviance = to_double(at(j, "deviance"));
  f.null_deviance = to_double(at(j, "null_deviance"));
  f.resid_dev = to_double(at(j, "resid_dev"));
  f.log_likelihood = to_double(at(j, "log_likelihood"));
  f.converged = at(j, "converged").get<bool>();
  f.rank_deficient = at(j, "rank_deficient").get<bool>();
  f.iterations = at(j, "iterations").get<int>();
  return f;
}

Json by_group(const Vector& beta, const GroupIndex& groups) {
  Json out = Json::object();
  for (const auto& g : groups.groups()) {
    Json cols = Json::object();
    for (Index c = 0; c < g.dimension; ++c) {
      cols[g.column_names[static_cast<std::size_t>(c)]] = num(beta[g.offset + c]);
    }
    out[g.name] = std::move(cols);
  }
  return out;
}

Json criteria_json(const QualityCriteria& q) {
  return {{"mean", num(q.mean)},
          {"quadratic_risk", num(q.quadratic_risk)},
          {"absolute_risk", num(q.absolute_risk)},
          {"deviance", num(q.deviance)}};
}

QualityCriteria criteria_from(const Json& j) {
  return {to_double(at(j, "mean")), to_double(at(j, "quadratic_risk")), to_double(at(j, "absolute_risk")),
          to_double(at(j, "deviance"))};
}

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Files and tables

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write '" + path + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) fail("write to '" + path + "' failed");
}

RawTable parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  std::size_t line = 1;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    was_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty() || was_quoted) fail("line " + std::to_string(line) + ": stray quote");
        quoted = true;
        was_quoted = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;
        end_record();
        ++line;
        break;
      case '\n':
        end_record();
        ++line;
        break;
      default:
        if (was_quoted) fail("line " + std::to_string(line) + ": text after closing quote");
        field += c;
    }
  }
  if (quoted) fail("unterminated quoted field");
  if (!field.empty() || !record.empty() || was_quoted) end_record();

  if (records.empty()) fail("empty CSV");
  RawTable t;
  t.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() == 1 && records[r][0].empty()) continue;  // blank line
    if (records[r].size() != t.header.size()) {
      fail("row " + std::to_string(r) + " has " + std::to_string(records[r].size()) + " fields, header has " +
           std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(records[r]));
  }
  return t;
}

std::string format_csv(const RawTable& table) {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += csv_field(cells[i]);
    }
    out += '\n';
  };
  line(table.header);
  for (const auto& r : table.rows) line(r);
  return out;
}

RawTable read_csv(const std::string& path) { return parse_csv(read_text(path)); }

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

// ---------------------------------------------------------------------------
// Metadata

Metadata metadata_from_json(const Json& j) {
  const Json& cols = j.is_array() ? j : at(j, "columns");
  if (!cols.is_array()) fail("metadata 'columns' must be an array");
  Metadata meta;
  for (const auto& c : cols) {
    ColumnMeta m;
    m.name = at(c, "name").get<std::string>();
    const std::string kind = c.value("kind", "numeric");
    if (kind == "numeric") {
      m.kind = VariableKind::numeric;
    } else if (kind == "categorical") {
      m.kind = VariableKind::categorical;
    } else {
      fail("column '" + m.name + "': unknown kind '" + kind + "'");
    }
    if (c.contains("modalities")) {
      for (const auto& v : c.at("modalities")) m.modalities.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    }
    m.closed = c.value("closed", false);
    const std::string role = c.value("role", "covariable");
    if (role == "target") {
      m.role = ColumnRole::target;
    } else if (role == "covariable") {
      m.role = ColumnRole::covariable;
    } else if (role == "village") {
      m.role = ColumnRole::village;
    } else {
      fail("column '" + m.name + "': unknown role '" + role + "'");
    }
    if (c.contains("recode")) {
      const Json& r = c.at("recode");
      if (r.is_string()) {
        const auto s = r.get<std::string>();
        if (s == "quartile") {
          m.recode = RecodeRule::quartile();
        } else if (s != "none") {
          fail("column '" + m.name + "': unknown recode '" + s + "'");
        }
      } else if (r.is_object() && r.contains("edges")) {
        m.recode = RecodeRule::with_edges(to_doubles(r.at("edges")));
      } else {
        fail("column '" + m.name + "': recode must be \"none\", \"quartile\" or {\"edges\": [...]}");
      }
    }
    meta.columns.push_back(std::move(m));
  }
  return meta;
}

Json metadata_to_json(const Metadata& meta) {
  Json cols = Json::array();
  for (const auto& m : meta.columns) {
    Json c;
    c["name"] = m.name;
    c["kind"] = m.kind == VariableKind::numeric ? "numeric" : "categorical";
    if (!m.modalities.empty()) c["modalities"] = m.modalities;
    if (m.closed) c["closed"] = true;
    c["role"] = m.role == ColumnRole::target ? "target" : m.role == ColumnRole::village ? "village" : "covariable";
    switch (m.recode.kind) {
      case RecodeRule::Kind::none: c["recode"] = "none"; break;
      case RecodeRule::Kind::quartile: c["recode"] = "quartile"; break;
      case RecodeRule::Kind::edges: c["recode"] = {{"edges", vec(m.recode.edges)}}; break;
    }
    cols.push_back(std::move(c));
  }
  return {{"columns", cols}};
}

Metadata read_metadata(const std::string& path) {
  Json j;
  try {
    j = Json::parse(read_text(path));
  } catch (const Json::parse_error& e) {
    fail("metadata '" + path + "': " + e.what());
  }
  return metadata_from_json(j);
}

Dataset load_dataset(const std::string& data_path, const std::string& meta_path) {
  return validate_dataset(read_csv(data_path), read_metadata(meta_path));
}

// ---------------------------------------------------------------------------
// Results

Json group_map_json(const GroupIndex& groups) {
  Json a = Json::array();
  for (const auto& g : groups.groups()) {
    a.push_back({{"name", g.name}, {"offset", g.offset}, {"dimension", g.dimension}, {"columns", g.column_names}});
  }
  return a;
}

std::string design_csv(const DesignMatrix& design) {
  RawTable t;
  for (const auto& g : design.groups.groups()) {
    for (const auto& c : g.column_names) t.header.push_back(c);
  }
  for (Index i = 0; i < design.x.rows(); ++i) {
    std::vector<std::string> row;
    row.reserve(static_cast<std::size_t>(design.x.cols()));
    for (Index c = 0; c < design.x.cols(); ++c) row.push_back(format_double(design.x(i, c)));
    t.rows.push_back(std::move(row));
  }
  return format_csv(t);
}

Json fit_to_json(const FitResult& fit, const GroupIndex& groups) {
  Json j;
  j["intercept"] = num(fit.intercept);
  j["coefficients"] = by_group(fit.beta, groups);
  j["std_errors"] = by_group(fit.std_errors, groups);
  j["deviance"] = num(fit.deviance);
  j["null_deviance"] = num(fit.null_deviance);
  j["resid_dev"] = num(fit.resid_dev);
  j["log_likelihood"] = num(fit.log_likelihood);
  j["converged"] = fit.converged;
  j["rank_deficient"] = fit.rank_deficient;
  j["iterations"] = fit.iterations;
  return j;
}

Json penalized_to_json(const PenalizedFit& fit, const GroupIndex& groups) {
  Json j;
  j["lambda"] = num(fit.lambda);
  j["intercept"] = num(fit.intercept);
  j["coefficients"] = by_group(fit.beta, groups);
  Json active = Json::array();
  for (int g : active_groups(fit.beta, groups)) active.push_back(groups[static_cast<std::size_t>(g)].name);
  j["active"] = active;
  j["deviance"] = num(fit.deviance);
  j["converged"] = fit.converged;
  j["irls_iterations"] = fit.irls_iterations;
  j["coordinate_updates"] = fit.coordinate_updates;
  return j;
}

Json dcv_config_to_json(const DcvConfig& c) {
  Json j;
  j["n_outer"] = c.n_outer;
  j["n_inner"] = c.n_inner;
  j["seed"] = c.seed;
  j["grid_size"] = c.grid_size;
  j["grid_ratio"] = num(c.grid_ratio);
  j["lambda_rule"] = one_se_name(c.one_se_rule);
  j["stratify_by"] = stratify_name(c.stratify_by);
  j["lasso"] = {{"cd_tol", c.lasso.cd_tol},
                {"kkt_tol", c.lasso.kkt_tol},
                {"max_updates", c.lasso.max_updates},
                {"max_irls", c.lasso.max_irls},
                {"max_halvings", c.lasso.max_halvings}};
  j["glm"] = {{"tol", c.glm.tol}, {"max_iter", c.glm.max_iter}, {"max_halvings", c.glm.max_halvings}};
  return j;
}

DcvConfig dcv_config_from_json(const Json& j, DcvConfig c) {
  if (!j.is_object()) fail("config must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "n_outer") {
      c.n_outer = v.get<int>();
    } else if (key == "n_inner") {
      c.n_inner = v.get<int>();
    } else if (key == "seed") {
      c.seed = v.get<std::uint64_t>();
    } else if (key == "grid_size") {
      c.grid_size = v.get<int>();
    } else if (key == "grid_ratio") {
      c.grid_ratio = to_double(v);
    } else if (key == "lambda_rule") {
      c.one_se_rule = parse_one_se(v.get<std::string>());
    } else if (key == "stratify_by") {
      c.stratify_by = parse_stratify(v.get<std::string>());
    } else if (key == "lasso") {
      c.lasso.cd_tol = v.value("cd_tol", c.lasso.cd_tol);
      c.lasso.kkt_tol = v.value("kkt_tol", c.lasso.kkt_tol);
      c.lasso.max_updates = v.value("max_updates", c.lasso.max_updates);
      c.lasso.max_irls = v.value("max_irls", c.lasso.max_irls);
      c.lasso.max_halvings = v.value("max_halvings", c.lasso.max_halvings);
    } else if (key == "glm") {
      c.glm.tol = v.value("tol", c.glm.tol);
      c.glm.max_iter = v.value("max_iter", c.glm.max_iter);
      c.glm.max_halvings = v.value("max_halvings", c.glm.max_halvings);
    } else {
      fail("unknown config key '" + key + "'");
    }
  }
  return c;
}

Json cv_report_to_json(const CvReport& r) {
  Json j;
  j["config"] = dcv_config_to_json(r.config);
  j["plan"] = {{"n_folds", r.plan.n_folds},
               {"seed", r.plan.seed},
               {"assignment", r.plan.assignment},
               {"strata", r.plan.strata}};
  j["groups"] = r.groups;
  Json folds = Json::array();
  for (const auto& f : r.folds) {
    Json fj;
    fj["fold"] = f.fold;
    fj["train"] = f.train;
    fj["test"] = f.test;
    fj["grid"] = vec(f.grid.values);
    fj["curve"] = {{"lambdas", vec(f.curve.lambdas)},
                   {"mean", vec(f.curve.mean)},
                   {"sd", vec(f.curve.sd)},
                   {"folds_used", f.curve.folds_used},
                   {"skipped_folds", f.curve.skipped_folds},
                   {"nonconverged_fits", f.curve.nonconverged_fits}};
    fj["choice"] = {{"min_index", f.choice.min_index},
                    {"se_index", f.choice.se_index},
                    {"lambda_min", num(f.choice.lambda_min)},
                    {"lambda_1se", num(f.choice.lambda_1se)}};
    Json rules = Json::array();
    for (LambdaRule rule : kLambdaRules) {
      const RuleOutcome& o = f.rules[rule];
      Json oj;
      oj["rule"] = rule_name(rule);
      oj["index"] = o.index;
      oj["lambda"] = num(o.lambda);
      oj["penalized_intercept"] = num(o.penalized_intercept);
      oj["penalized_beta"] = vec(o.penalized_beta);
      oj["penalized_converged"] = o.penalized_converged;
      oj["active"] = o.active;
      oj["refit"] = {{"fit", fit_full(o.refit.fit)}, {"columns", o.refit.columns}, {"fallback", o.refit.fallback}};
      oj["predictions"] = vec(o.predictions);
      oj["presence"] = o.presence;
      rules.push_back(std::move(oj));
    }
    fj["rules"] = std::move(rules);
    folds.push_back(std::move(fj));
  }
  j["folds"] = std::move(folds);
  j["predictions"] = {{"lambda.min", vec(r.predictions[rule_min])}, {"lambda.1se", vec(r.predictions[rule_1se])}};
  return j;
}

CvReport cv_report_from_json(const Json& j) {
  CvReport r;
  r.config = dcv_config_from_json(at(j, "config"));
  const Json& p = at(j, "plan");
  r.plan.n_folds = at(p, "n_folds").get<int>();
  r.plan.seed = at(p, "seed").get<std::uint64_t>();
  r.plan.assignment = to_list<int>(at(p, "assignment"));
  r.plan.strata = to_list<int>(at(p, "strata"));
  r.groups = to_list<std::string>(at(j, "groups"));
  for (const auto& fj : at(j, "folds")) {
    FoldRecord f;
    f.fold = at(fj, "fold").get<int>();
    f.train = to_list<Index>(at(fj, "train"));
    f.test = to_list<Index>(at(fj, "test"));
    f.grid.values = to_doubles(at(fj, "grid"));
    const Json& c = at(fj, "curve");
    f.curve.lambdas = to_doubles(at(c, "lambdas"));
    f.curve.mean = to_doubles(at(c, "mean"));
    f.curve.sd = to_doubles(at(c, "sd"));
    f.curve.folds_used = at(c, "folds_used").get<int>();
    f.curve.skipped_folds = to_list<int>(at(c, "skipped_folds"));
    f.curve.nonconverged_fits = at(c, "nonconverged_fits").get<int>();
    const Json& ch = at(fj, "choice");
    f.choice.min_index = at(ch, "min_index").get<int>();
    f.choice.se_index = at(ch, "se_index").get<int>();
    f.choice.lambda_min = to_double(at(ch, "lambda_min"));
    f.choice.lambda_1se = to_double(at(ch, "lambda_1se"));
    const Json& rules = at(fj, "rules");
    if (rules.size() != 2) fail("each fold needs two rule outcomes");
    for (LambdaRule rule : kLambdaRules) {
      const Json& oj = rules[static_cast<std::size_t>(rule)];
      RuleOutcome& o = f.rules[rule];
      o.index = at(oj, "index").get<int>();
      o.lambda = to_double(at(oj, "lambda"));
      o.penalized_intercept = to_double(at(oj, "penalized_intercept"));
      o.penalized_beta = to_vector(at(oj, "penalized_beta"));
      o.penalized_converged = at(oj, "penalized_converged").get<bool>();
      o.active = to_list<int>(at(oj, "active"));
      const Json& rf = at(oj, "refit");
      o.refit.fit = fit_from(at(rf, "fit"));
      o.refit.columns = to_list<Index>(at(rf, "columns"));
      o.refit.fallback = at(rf, "fallback").get<bool>();
      o.predictions = to_vector(at(oj, "predictions"));
      o.presence = to_list<std::uint8_t>(at(oj, "presence"));
    }
    r.folds.push_back(std::move(f));
  }
  const Json& pr = at(j, "predictions");
  r.predictions[rule_min] = to_vector(at(pr, "lambda.min"));
  r.predictions[rule_1se] = to_vector(at(pr, "lambda.1se"));
  return r;
}

std::string predictions_csv(const CvReport& report, const Vector& y) {
  if (report.plan.size() != static_cast<std::size_t>(y.size())) fail("report and target sizes differ");
  RawTable t;
  t.header = {"row", "y", "fold", "pred_lambda_min", "pred_lambda_1se"};
  for (Index i = 0; i < y.size(); ++i) {
    t.rows.push_back({std::to_string(i + 1), format_double(y[i]),
                      std::to_string(report.plan.assignment[static_cast<std::size_t>(i)] + 1),
                      format_double(report.predictions[rule_min][i]), format_double(report.predictions[rule_1se][i])});
  }
  return format_csv(t);
}

std::string folds_csv(const CvReport& report) {
  RawTable t;
  t.header = {"fold", "n_train", "n_test", "lambda_max", "min_index", "lambda_min", "se_index", "lambda_1se",
              "active_min", "active_1se", "inner_nonconverged"};
  for (const auto& f : report.folds) {
    t.rows.push_back({std::to_string(f.fold + 1), std::to_string(f.train.size()), std::to_string(f.test.size()),
                      format_double(f.grid.lambda_max()), std::to_string(f.choice.min_index + 1),
                      format_double(f.choice.lambda_min), std::to_string(f.choice.se_index + 1),
                      format_double(f.choice.lambda_1se), std::to_string(f.rules[rule_min].active.size()),
                      std::to_string(f.rules[rule_1se].active.size()), std::to_string(f.curve.nonconverged_fits)});
  }
  return format_csv(t);
}

std::string presence_csv(const CvReport& report) {
  RawTable t;
  t.header = {"rule", "fold"};
  for (const auto& g : report.groups) t.header.push_back(g);
  for (LambdaRule rule : kLambdaRules) {
    for (const auto& f : report.folds) {
      std::vector<std::string> row = {rule_name(rule), std::to_string(f.fold + 1)};
      for (auto p : f.rules[rule].presence) row.push_back(p ? "1" : "0");
      t.rows.push_back(std::move(row));
    }
  }
  return format_csv(t);
}

Json selection_to_json(const SelectionResult& s) {
  Json j;
  j["strategy"] = strategy_name(s.strategy);
  j["variables"] = s.variables;
  j["criteria"] = criteria_json(s.criteria);
  j["intercept_only"] = s.intercept_only;
  j["notes"] = s.notes;
  if (!s.presence.empty()) j["presence"] = vec(s.presence);
  if (!s.villages.empty()) {
    Json v = Json::array();
    for (const auto& vs : s.villages) {
      v.push_back({{"village", vs.village}, {"n", vs.n}, {"criteria", criteria_json(vs.criteria)}});
    }
    j["villages"] = v;
  }
  j["predictions"] = vec(s.predictions);
  return j;
}

SelectionResult selection_from_json(const Json& j) {
  SelectionResult s;
  s.strategy = parse_strategy(at(j, "strategy").get<std::string>());
  s.variables = to_list<std::string>(at(j, "variables"));
  s.criteria = criteria_from(at(j, "criteria"));
  s.intercept_only = at(j, "intercept_only").get<bool>();
  s.notes = to_list<std::string>(at(j, "notes"));
  if (j.contains("presence")) s.presence = to_doubles(j.at("presence"));
  if (j.contains("villages")) {
    for (const auto& v : j.at("villages")) {
      s.villages.push_back({at(v, "village").get<std::string>(), at(v, "n").get<std::size_t>(),
                            criteria_from(at(v, "criteria"))});
    }
  }
  s.predictions = to_vector(at(j, "predictions"));
  return s;
}

Json backward_to_json(const BackwardResult& b, const GroupIndex& groups) {
  Json j = selection_to_json(b.selection);
  Json steps = Json::array();
  for (const auto& s : b.steps) {
    steps.push_back({{"group", s.group}, {"p_value", num(s.p_value)}, {"dropped", s.dropped}});
  }
  j["steps"] = steps;
  j["final_fit"] = fit_to_json(b.final_fit, groups);
  return j;
}

std::string comparison_csv(const std::vector<SelectionResult>& rows) {
  RawTable t;
  t.header = {"strategy", "n_variables", "mean", "quadratic_risk", "absolute_risk", "deviance"};
  for (const auto& s : rows) {
    t.rows.push_back({strategy_name(s.strategy), std::to_string(s.variables.size()), format_double(s.criteria.mean),
                      format_double(s.criteria.quadratic_risk), format_double(s.criteria.absolute_risk),
                      format_double(s.criteria.deviance)});
  }
  return format_csv(t);
}

Json truth_to_json(const GroundTruth& truth) {
  Json planted = Json::array();
  for (const auto& p : truth.planted) planted.push_back({{"group", p.group}, {"coefficients", vec(p.coefficients)}});
  Json support = Json::array();
  for (const auto& s : truth.support()) support.push_back(s);
  return {{"intercept", num(truth.intercept)}, {"planted", planted}, {"support", support}};
}

// ---------------------------------------------------------------------------
// Chart

std::string frequency_chart_svg(const std::vector<std::string>& names, const std::vector<double>& pct_min,
                                const std::vector<double>& pct_1se, double w) {
  if (names.empty()) fail("frequency chart: empty report");
  if (pct_min.size() != names.size() || pct_1se.size() != names.size()) {
    fail("frequency chart: presence lengths differ from the variable count");
  }
  const double band = names.size() > 60 ? 4.0 : 10.0;
  const double plot_w = band * static_cast<double>(names.size());
  const double plot_h = 200.0;
  const double left = 40.0;
  const double top = 30.0;
  const double gap = 50.0;
  const double width = left + 2.0 * plot_w + gap + 20.0;
  const double height = top + plot_h + 40.0;

  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  auto panel = [&](double x0, const std::vector<double>& pct, const char* title, const char* id) {
    s << "<g id=\"" << id << "\">\n";
    s << "<text x=\"" << x0 + plot_w / 2 << "\" y=\"" << top - 10 << "\" text-anchor=\"middle\">" << title
      << "</text>\n";
    s << "<line x1=\"" << x0 << "\" y1=\"" << top << "\" x2=\"" << x0 << "\" y2=\"" << top + plot_h
      << "\" stroke=\"black\"/>\n";
    s << "<line x1=\"" << x0 << "\" y1=\"" << top + plot_h << "\" x2=\"" << x0 + plot_w << "\" y2=\""
      << top + plot_h << "\" stroke=\"black\"/>\n";
    for (int tick = 0; tick <= 100; tick += 25) {
      const double y = top + plot_h * (1.0 - tick / 100.0);
      s << "<text x=\"" << x0 - 4 << "\" y=\"" << y + 3 << "\" text-anchor=\"end\">" << tick << "</text>\n";
    }
    for (std::size_t i = 0; i < names.size(); ++i) {
      const double h = plot_h * std::clamp(pct[i], 0.0, 100.0) / 100.0;
      s << "<rect class=\"bar\" x=\"" << x0 + band * static_cast<double>(i) + band * 0.1 << "\" y=\""
        << top + plot_h - h << "\" width=\"" << band * 0.8 << "\" height=\"" << h
        << "\" fill=\"steelblue\"><title>" << xml_escape(names[i]) << ": " << format_double(pct[i])
        << "%</title></rect>\n";
    }
    const double yw = top + plot_h * (1.0 - w / 100.0);
    s << "<line class=\"threshold\" x1=\"" << x0 << "\" y1=\"" << yw << "\" x2=\"" << x0 + plot_w << "\" y2=\"" << yw
      << "\" stroke=\"red\" stroke-dasharray=\"4 2\"/>\n";
    s << "</g>\n";
  };
  panel(left, pct_min, "lambda.min", "lambda-min");
  panel(left + plot_w + gap, pct_1se, "lambda.1se", "lambda-1se");
  s << "</svg>\n";
  return s.str();
}

// ---------------------------------------------------------------------------
// Manifest

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(kModule, "SHA-256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

void write_artifacts(const std::string& dir, const std::string& command, const Json& config, std::uint64_t seed,
                     const std::vector<Artifact>& artifacts, const Json& extra) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail("cannot create '" + dir + "': " + ec.message());
  Json files = Json::object();
  for (const auto& a : artifacts) {
    write_text((std::filesystem::path(dir) / a.name).string(), a.content);
    files[a.name] = {{"sha256", sha256_hex(a.content)}, {"bytes", a.content.size()}};
  }
  Json m;
  m["command"] = command;
  m["seed"] = seed;
  m["config"] = config;
  m["files"] = files;
  for (const auto& [k, v] : extra.items()) m[k] = v;
  m["created_utc"] = utc_timestamp();
  write_text((std::filesystem::path(dir) / "manifest.json").string(), m.dump(2) + "\n");
}

}  // namespace vectrisk
