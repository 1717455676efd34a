#include "vectrisk/cv.hpp"
#include "vectrisk/io.hpp"
#include "vectrisk/selection.hpp"
#include "vectrisk/synthetic.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

using namespace vectrisk;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string data;
  std::string meta;
  int group = 1;
  std::string out;
};

struct CvFlags {
  std::optional<std::uint64_t> seed;
  int n_outer = 10;
  int n_inner = 10;
  int grid_size = 100;
  double grid_ratio = 1e-3;
  std::string lambda_rule = "paper";
  std::string stratify_by = "target";
  std::string config;
  int threads = 0;
};

void add_input(CLI::App* app, Common& c, bool need_group = true) {
  app->add_option("--data", c.data, "CSV with one row per observation")->required()->check(CLI::ExistingFile);
  app->add_option("--meta", c.meta, "column metadata JSON")->required()->check(CLI::ExistingFile);
  if (need_group) app->add_option("--group", c.group, "covariable set 1..4")->check(CLI::Range(1, 4));
  app->add_option("--out", c.out, "output directory")->required();
}

void add_cv_flags(CLI::App* app, CvFlags& f) {
  app->add_option("--seed", f.seed, "random seed");
  app->add_option("--n-outer", f.n_outer, "outer folds");
  app->add_option("--n-inner", f.n_inner, "inner folds");
  app->add_option("--grid-size", f.grid_size, "lambda grid length");
  app->add_option("--grid-ratio", f.grid_ratio, "lambda_min / lambda_max");
  app->add_option("--lambda-1se-rule", f.lambda_rule, "paper or within-1se")
      ->check(CLI::IsMember({"paper", "within-1se"}));
  app->add_option("--stratify-by", f.stratify_by, "target or village")->check(CLI::IsMember({"target", "village"}));
  app->add_option("--config", f.config, "JSON config; flags given explicitly override it")
      ->check(CLI::ExistingFile);
  app->add_option("--threads", f.threads, "workers (0: VECTRISK_THREADS or all cores)");
}

DcvConfig make_config(const CLI::App* app, const CvFlags& f) {
  DcvConfig c;
  if (!f.config.empty()) c = dcv_config_from_json(Json::parse(read_text(f.config)));
  auto given = [&](const char* flag) { return app->count(flag) > 0; };
  if (given("--n-outer") || f.config.empty()) c.n_outer = f.n_outer;
  if (given("--n-inner") || f.config.empty()) c.n_inner = f.n_inner;
  if (given("--grid-size") || f.config.empty()) c.grid_size = f.grid_size;
  if (given("--grid-ratio") || f.config.empty()) c.grid_ratio = f.grid_ratio;
  if (given("--lambda-1se-rule") || f.config.empty()) {
    c.one_se_rule = f.lambda_rule == "paper" ? OneSeRule::paper : OneSeRule::within_1se;
  }
  if (given("--stratify-by") || f.config.empty()) {
    c.stratify_by = f.stratify_by == "village" ? StratifyBy::village : StratifyBy::target;
  }
  if (f.seed) {
    c.seed = *f.seed;
  } else if (f.config.empty() || !Json::parse(read_text(f.config)).contains("seed")) {
    throw ValidationError("cli-io", "--seed is required (in flags or config)");
  }
  c.threads = f.threads;
  return c;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string path_in(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

Json read_json(const std::string& path) {
  try {
    return Json::parse(read_text(path));
  } catch (const Json::parse_error& e) {
    throw ValidationError("cli-io", "'" + path + "': " + e.what());
  }
}

// Report JSON may be given as a file or as the directory a cv run wrote.
std::string report_path(const std::string& p) {
  return fs::is_directory(p) ? path_in(p, "cv_report.json") : p;
}

DesignMatrix expanded_design(const Dataset& data, int group) {
  return expand_interactions(assemble_group(data, GroupSpec::from_id(group)));
}

std::vector<std::pair<int, int>> parse_pairs(const std::string& spec, const std::vector<Variable>& base) {
  std::vector<std::pair<int, int>> out;
  if (spec.empty()) return out;
  auto index_of = [&](const std::string& name) {
    for (std::size_t i = 0; i < base.size(); ++i) {
      if (base[i].name() == name) return static_cast<int>(i);
    }
    throw ValidationError("cli-io", "--pairs: unknown variable '" + name + "'");
  };
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ValidationError("cli-io", "--pairs: '" + item + "' is not A:B");
    int a = index_of(item.substr(0, colon));
    int b = index_of(item.substr(colon + 1));
    if (a == b) throw ValidationError("cli-io", "--pairs: '" + item + "' crosses a variable with itself");
    if (a > b) std::swap(a, b);
    out.emplace_back(a, b);
  }
  return out;
}

std::string markdown_table(const std::vector<SelectionResult>& rows) {
  std::ostringstream s;
  s << "| strategy | variables | mean | quadratic risk | absolute risk | deviance |\n";
  s << "|---|---|---|---|---|---|\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "| %s | %zu | %.4f | %.4f | %.4f | %.2f |\n", strategy_name(r.strategy),
                  r.variables.size(), r.criteria.mean, r.criteria.quadratic_risk, r.criteria.absolute_risk,
                  r.criteria.deviance);
    s << buf;
  }
  return s.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Poisson lasso variable selection with leave-one-level-out double cross-validation"};
  app.require_subcommand(1);

  // expand
  Common ex;
  auto* expand = app.add_subcommand("expand", "expanded design and group map");
  add_input(expand, ex);
  bool with_matrix = false;
  expand->add_flag("--matrix", with_matrix, "also write the design matrix as CSV");

  // fit
  Common fi;
  std::optional<double> lambda;
  std::string terms = "base";
  auto* fit = app.add_subcommand("fit", "single GLM or penalized fit on all rows");
  add_input(fit, fi);
  fit->add_option("--lambda", lambda, "penalized fit at this lambda (standardized scale)");
  fit->add_option("--terms", terms, "base or expanded (penalized fits always use expanded)")
      ->check(CLI::IsMember({"base", "expanded"}));

  // cv
  Common cvc;
  CvFlags cvf;
  auto* cv = app.add_subcommand("cv", "LOLO-DCV report");
  add_input(cv, cvc);
  add_cv_flags(cv, cvf);

  // select
  Common se;
  std::string strategies = "ldlm,ldls,fvm,fvs";
  std::string cv_in;
  double w = 100.0;
  CvFlags sef;
  auto* select = app.add_subcommand("select", "selection strategies and comparison table");
  add_input(select, se);
  select->add_option("--strategies", strategies, "comma separated subset of ldlm,ldls,fvm,fvs");
  select->add_option("--cv", cv_in, "cv output directory or cv_report.json (computed if absent)");
  select->add_option("--w", w, "frequent-variable threshold in percent")->check(CLI::Range(1.0, 100.0));
  add_cv_flags(select, sef);

  // baseline
  Common ba;
  CvFlags baf;
  double alpha = 0.05;
  std::string pairs;
  auto* baseline = app.add_subcommand("baseline", "backward-elimination GLM (B-GLM)");
  add_input(baseline, ba);
  baseline->add_option("--alpha", alpha, "Wald level")->check(CLI::Range(0.0, 1.0));
  baseline->add_option("--pairs", pairs, "explicit interactions, e.g. Soil:Water,RainyDN:Rainfall");
  add_cv_flags(baseline, baf);

  // simulate
  std::string scenario = "default";
  std::uint64_t sim_seed = 0;
  std::size_t sim_n = 600;
  std::string sim_out;
  auto* simulate = app.add_subcommand("simulate", "synthetic survey data with planted support");
  simulate->add_option("--scenario", scenario, "default or null")->check(CLI::IsMember({"default", "null"}));
  simulate->add_option("--seed", sim_seed, "random seed")->required();
  simulate->add_option("--n", sim_n, "observations");
  simulate->add_option("--out", sim_out, "output directory")->required();

  // chart
  std::string chart_cv;
  std::string chart_out;
  double chart_w = 100.0;
  auto* chart = app.add_subcommand("chart", "presence-frequency SVG for both lambda rules");
  chart->add_option("--cv", chart_cv, "cv output directory or cv_report.json")->required();
  chart->add_option("--w", chart_w, "threshold line in percent")->check(CLI::Range(1.0, 100.0));
  chart->add_option("--out", chart_out, "output directory")->required();

  // report
  std::string rep_select;
  std::string rep_baseline;
  std::string rep_cv;
  std::string rep_out;
  auto* report = app.add_subcommand("report", "comparison table and Markdown summary");
  report->add_option("--select", rep_select, "select output directory")->required();
  report->add_option("--baseline", rep_baseline, "baseline output directory");
  report->add_option("--cv", rep_cv, "cv output directory (runtime)");
  report->add_option("--out", rep_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*expand) {
      const Dataset data = load_dataset(ex.data, ex.meta);
      const DesignMatrix d = expanded_design(data, ex.group);
      std::vector<Artifact> files = {{"group_map.json", group_map_json(d.groups).dump(2) + "\n"}};
      if (with_matrix) files.push_back({"design.csv", design_csv(d)});
      write_artifacts(ex.out, "expand", {{"group", ex.group}, {"matrix", with_matrix}}, 0, files);
      std::cout << d.groups.size() << " groups, " << d.x.cols() << " columns\n";
    } else if (*fit) {
      const Dataset data = load_dataset(fi.data, fi.meta);
      const auto base = assemble_group(data, GroupSpec::from_id(fi.group));
      Json out;
      if (lambda) {
        const DesignMatrix d = expand_interactions(base);
        const StandardizedDesign sd(d.x);
        const PenalizedFit pf = fit_penalized(sd, data.target(), *lambda);
        out = penalized_to_json(pf, d.groups);
      } else {
        const DesignMatrix d = terms == "base" ? build_design(base, {}) : expand_interactions(base);
        // Reference modality dropped per indicator group, aliased columns pruned.
        std::vector<int> all(d.groups.size());
        for (std::size_t g = 0; g < all.size(); ++g) all[g] = static_cast<int>(g);
        IndexList rows(data.size());
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<Index>(i);
        const DebiasResult r = debias(d.x, data.target(), rows, d.groups, all);
        if (r.fallback) throw NumericalError("cli-io", "GLM fit did not converge");
        out = fit_to_json(r.fit, d.groups);
      }
      Json cfg = {{"group", fi.group}, {"terms", lambda ? "expanded" : terms}};
      if (lambda) cfg["lambda"] = *lambda;
      write_artifacts(fi.out, "fit", cfg, 0, {{"fit.json", out.dump(2) + "\n"}});
    } else if (*cv) {
      const DcvConfig config = make_config(cv, cvf);
      const Dataset data = load_dataset(cvc.data, cvc.meta);
      const auto t0 = std::chrono::steady_clock::now();
      const CvReport r = run_lolo_dcv(data, GroupSpec::from_id(cvc.group), config);
      const double secs = seconds_since(t0);
      Json rj = cv_report_to_json(r);
      rj["group"] = cvc.group;
      Json cfg = dcv_config_to_json(config);
      cfg["group"] = cvc.group;
      write_artifacts(cvc.out, "cv", cfg, config.seed,
                      {{"cv_report.json", rj.dump() + "\n"},
                       {"predictions.csv", predictions_csv(r, data.target())},
                       {"folds.csv", folds_csv(r)},
                       {"presence.csv", presence_csv(r)}},
                      {{"elapsed_seconds", secs}, {"workers", worker_count(config.threads)}});
    } else if (*select) {
      const Dataset data = load_dataset(se.data, se.meta);
      CvReport r;
      int group = se.group;
      DcvConfig config;
      if (!cv_in.empty()) {
        const Json rj = read_json(report_path(cv_in));
        r = cv_report_from_json(rj);
        if (rj.contains("group")) {
          if (select->count("--group") && rj.at("group").get<int>() != se.group) {
            throw ValidationError("cli-io", "--group differs from the group of the cv report");
          }
          group = rj.at("group").get<int>();
        }
        config = r.config;
      } else {
        config = make_config(select, sef);
        r = run_lolo_dcv(data, GroupSpec::from_id(group), config);
      }
      const DesignMatrix d = expanded_design(data, group);
      SelectionConfig sc;
      sc.w = w;
      std::vector<SelectionResult> rows;
      std::vector<Artifact> files;
      std::stringstream ss(strategies);
      std::string item;
      while (std::getline(ss, item, ',')) {
        const Strategy s = parse_strategy(item);
        if (s == Strategy::bglm) throw ValidationError("cli-io", "B-GLM runs through the baseline subcommand");
        SelectionResult res = run_strategy(s, r, d, data.target(), sc);
        if (data.village()) res.villages = village_breakdown(data.target(), res.predictions, *data.village());
        std::string name = strategy_name(s);
        for (auto& ch : name) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        files.push_back({"selection_" + name + ".json", selection_to_json(res).dump(2) + "\n"});
        rows.push_back(std::move(res));
      }
      files.push_back({"comparison.csv", comparison_csv(rows)});
      Json cfg = dcv_config_to_json(config);
      cfg["group"] = group;
      cfg["w"] = w;
      cfg["strategies"] = strategies;
      write_artifacts(se.out, "select", cfg, config.seed, files);
      std::cout << comparison_csv(rows);
    } else if (*baseline) {
      const DcvConfig config = make_config(baseline, baf);
      const Dataset data = load_dataset(ba.data, ba.meta);
      const auto base = assemble_group(data, GroupSpec::from_id(ba.group));
      const DesignMatrix d = build_design(base, parse_pairs(pairs, base));
      const FoldPlan plan = outer_plan(data, config);
      SelectionConfig sc;
      sc.alpha = alpha;
      const auto t0 = std::chrono::steady_clock::now();
      BackwardResult b = backward_glm(d, data.target(), plan, sc);
      const double secs = seconds_since(t0);
      if (data.village()) {
        b.selection.villages = village_breakdown(data.target(), b.selection.predictions, *data.village());
      }
      Json cfg = {{"group", ba.group}, {"alpha", alpha}, {"pairs", pairs}, {"n_outer", config.n_outer},
                  {"stratify_by", config.stratify_by == StratifyBy::village ? "village" : "target"}};
      write_artifacts(ba.out, "baseline", cfg, config.seed,
                      {{"selection_b-glm.json", backward_to_json(b, d.groups).dump(2) + "\n"},
                       {"comparison.csv", comparison_csv({b.selection})}},
                      {{"elapsed_seconds", secs}});
      std::cout << comparison_csv({b.selection});
    } else if (*simulate) {
      const SimSpec spec = scenario == "null" ? null_scenario(sim_seed, sim_n) : default_scenario(sim_seed, sim_n);
      const SimOutput sim = simulate_dataset(spec);
      write_artifacts(sim_out, "simulate", {{"scenario", scenario}, {"n", sim_n}}, sim_seed,
                      {{"data.csv", format_csv(sim.table)},
                       {"meta.json", metadata_to_json(sim.metadata).dump(2) + "\n"},
                       {"truth.json", truth_to_json(sim.truth).dump(2) + "\n"}});
    } else if (*chart) {
      const CvReport r = cv_report_from_json(read_json(report_path(chart_cv)));
      const std::string svg = frequency_chart_svg(r.groups, presence_percentages(r.presence_matrix(rule_min)),
                                                  presence_percentages(r.presence_matrix(rule_1se)), chart_w);
      write_artifacts(chart_out, "chart", {{"w", chart_w}}, r.config.seed, {{"frequency.svg", svg}});
    } else if (*report) {
      std::vector<SelectionResult> rows;
      for (const char* s : {"ldlm", "ldls", "fvm", "fvs"}) {
        const std::string p = path_in(rep_select, std::string("selection_") + s + ".json");
        if (fs::exists(p)) rows.push_back(selection_from_json(read_json(p)));
      }
      if (!rep_baseline.empty()) rows.push_back(selection_from_json(read_json(path_in(rep_baseline, "selection_b-glm.json"))));
      if (rows.empty()) throw ValidationError("cli-io", "no selection results found in '" + rep_select + "'");

      std::ostringstream md;
      md << "# Strategy comparison\n\n" << markdown_table(rows) << "\n## Selected variables\n\n";
      for (const auto& r : rows) {
        md << "- " << strategy_name(r.strategy) << ": ";
        if (r.variables.empty()) md << "(none, intercept only)";
        for (std::size_t i = 0; i < r.variables.size(); ++i) md << (i ? ", " : "") << r.variables[i];
        md << "\n";
        for (const auto& n : r.notes) md << "  - note: " << n << "\n";
      }
      const bool any_village = std::any_of(rows.begin(), rows.end(), [](auto& r) { return !r.villages.empty(); });
      if (any_village) {
        md << "\n## Deviance by village\n\n| strategy |";
        for (const auto& v : rows.front().villages) md << ' ' << v.village << " |";
        md << "\n|---|";
        for (std::size_t i = 0; i < rows.front().villages.size(); ++i) md << "---|";
        md << "\n";
        for (const auto& r : rows) {
          md << "| " << strategy_name(r.strategy) << " |";
          char buf[32];
          for (const auto& v : r.villages) {
            std::snprintf(buf, sizeof buf, " %.2f |", v.criteria.deviance);
            md << buf;
          }
          md << "\n";
        }
      }
      Json timing = Json::object();
      if (!rep_cv.empty()) timing["lolo_dcv_seconds"] = read_json(path_in(rep_cv, "manifest.json")).value("elapsed_seconds", 0.0);
      if (!rep_baseline.empty()) {
        timing["b_glm_seconds"] = read_json(path_in(rep_baseline, "manifest.json")).value("elapsed_seconds", 0.0);
      }
      write_artifacts(rep_out, "report", {{"select", rep_select}, {"baseline", rep_baseline}, {"cv", rep_cv}}, 0,
                      {{"comparison.csv", comparison_csv(rows)}, {"report.md", md.str()}}, {{"runtime", timing}});
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const Json::exception& e) {
    std::cerr << "error: malformed JSON: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
