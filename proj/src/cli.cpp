#include "mscca/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "mscca/biplot.hpp"
#include "mscca/csv_io.hpp"
#include "mscca/metrics.hpp"
#include "mscca/solver.hpp"
#include "mscca/tolerances.hpp"

namespace mscca::cli {

namespace {

namespace fs = std::filesystem;
using Eigen::Index;
using Eigen::MatrixXd;

const std::vector<std::string> kExports = {"coords-csv", "solution-json", "residuals-csv", "svg"};

bool contains(const std::vector<std::string>& v, const std::string& x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

std::optional<long long> parse_integer(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t pos = 0;
  try {
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

Json load_json(const std::string& path) {
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string dump(const Json& j) { return j.dump(2, ' ', false, Json::error_handler_t::replace) + "\n"; }

std::string class_name(const SupplementaryData& sup, std::size_t h, std::size_t s) {
  return sup.var_names()[h] + "=" + sup.labels(h)[s];
}

SolverOptions options_of(const RunConfig& cfg) {
  SolverOptions o;
  o.dims = cfg.dims;
  o.n_starts = cfg.starts;
  o.max_iter = cfg.max_iter;
  o.epsilon = cfg.epsilon;
  o.seed = cfg.seed;
  return o;
}

Json number_list(const std::vector<double>& v) {
  Json out = Json::array();
  for (double x : v) out.push_back(round_sig15(x));
  return out;
}

Json kl_entry(const std::string& sup, const std::string& cls, const KlCurve& curve, const KlSelection& sel) {
  return {{"sup", sup},
          {"class", cls},
          {"k", sel.k},
          {"nu", curve.nu},
          {"k_values", curve.k_values},
          {"w_values", number_list(curve.w_values)},
          {"kl_k_values", sel.k_values},
          {"kl_values", number_list(sel.kl_values)}};
}

void report_kl(std::ostream& out, const Json& entries) {
  out << "K selection by KL index:\n";
  for (const auto& e : entries) {
    out << "  " << e["sup"].get<std::string>() << "=" << e["class"].get<std::string>() << ": K = " << e["k"].get<int>()
        << "  (KL";
    for (std::size_t t = 0; t < e["kl_k_values"].size(); ++t) {
      const Json& v = e["kl_values"][t];
      out << " " << e["kl_k_values"][t].get<int>() << ":" << (v.is_number() ? io::format_number(v.get<double>()) : "inf");
    }
    out << ")\n";
  }
}

Json archive_header(const RunConfig& cfg, const LoadedData& in) {
  Json root;
  root["format"] = "mscca-archive";
  root["version"] = kArchiveVersion;
  root["method"] = method_name(cfg.method);
  root["seed"] = cfg.seed;
  root["config"] = cfg.echo();
  root["data"] = dataset_json(in.data, in.sup);
  return root;
}

struct Outputs {
  Json root;
  std::vector<ResidualRecord> residuals;
  std::string scores;
};

void write_outputs(const RunConfig& cfg, const Outputs& o, std::ostream& out) {
  const fs::path dir = cfg.out;
  const auto put = [&](const char* name, const std::string& text) {
    io::write_atomic(dir / name, text);
    out << "wrote " << (dir / name).string() << "\n";
  };
  try {
    put("solution.json", dump(o.root));
    if (!o.scores.empty()) put("scores.csv", o.scores);
    if (contains(cfg.exports, "coords-csv")) put("coords.csv", coords_csv(o.root.at("biplot")));
    if (contains(cfg.exports, "residuals-csv")) put("residuals.csv", residuals_csv(o.residuals));
    if (contains(cfg.exports, "svg")) put("biplot.svg", render_svg(o.root.at("biplot")));
  } catch (const ExportError&) {
    throw;
  } catch (const std::exception& e) {
    throw ExportError(e.what());
  }
}

void report_solution(std::ostream& out, const MsccaSolution& sol, const SupplementaryData& sup) {
  out << "phi = " << io::format_number(sol.objective) << ", psi = " << io::format_number(sol.psi)
      << ", best start = " << sol.start_index << ", iterations = " << sol.iterations
      << (sol.converged ? ", converged" : ", not converged") << "\n";
  const ClusterSpec& spec = sol.assignment.spec();
  out << "clusters per class:";
  for (std::size_t h = 0; h < spec.n_sup(); ++h)
    for (std::size_t s = 0; s < spec.n_classes(h); ++s) out << " " << class_name(sup, h, s) << ":" << spec.count(h, s);
  out << "\n";
}

// MSCCA and cluster CA share the archive layout; `sup` is the class structure
// the solution was fitted under.
Outputs cluster_outputs(const RunConfig& cfg, const LoadedData& in, const SupplementaryData& sup,
                        const MsccaSolution& sol, Json root) {
  const IndicatorView z(in.data, sup.n_sup());
  const BiplotModel model = rescale_spread(biplot_coordinates(
      standardized_residuals(contingency(sol.assignment, sup, z)), sol.centers, sol.quantifications));
  Outputs o;
  if (cfg.method == Method::Mscca) {
    o.residuals = residual_comparison(in.data, sup, sol).records;
  } else {
    o.residuals = residual_records(model, method_name(cfg.method));
  }
  root["solution"] = solution_json(sol, in.data, sup, model);
  root["biplot"] = biplot_json(model, in.data, PointSet::ClustersClassesCategories);
  root["residuals"] = residuals_json(o.residuals);
  o.root = std::move(root);
  return o;
}

Outputs run_mscca(const RunConfig& cfg, const LoadedData& in, std::ostream& out) {
  const SolverOptions opt = options_of(cfg);
  Json root = archive_header(cfg, in);
  ClusterSpec spec;
  if (cfg.k_auto) {
    const auto choices = select_k_per_class(in.data, in.sup, cfg.k_max, opt);
    Json entries = Json::array();
    for (const auto& c : choices)
      entries.push_back(kl_entry(in.sup.var_names()[c.h], in.sup.labels(c.h)[c.s], c.curve, c.selection));
    report_kl(out, entries);
    root["k_selection"] = std::move(entries);
    spec = spec_from_choices(in.sup, choices);
  } else {
    spec = parse_k_map(cfg.k_entries, in.sup);
  }
  const MsccaSolution sol = fit_mscca(in.data, in.sup, spec, opt);
  report_solution(out, sol, in.sup);
  return cluster_outputs(cfg, in, in.sup, sol, std::move(root));
}

Outputs run_cluster_ca(const RunConfig& cfg, const LoadedData& in, std::ostream& out) {
  const SolverOptions opt = options_of(cfg);
  Json root = archive_header(cfg, in);
  int k = 0;
  if (cfg.k_auto) {
    const KlCurve curve = kl_curve(in.data, cfg.k_max, opt);
    const KlSelection sel = kl_select(curve);
    Json entries = Json::array({kl_entry("all", "all", curve, sel)});
    report_kl(out, entries);
    root["k_selection"] = std::move(entries);
    k = sel.k;
  } else {
    k = static_cast<int>(*parse_integer(cfg.k_entries.front()));
  }
  const MsccaSolution sol = fit_cluster_ca(in.data, k, opt);
  const SupplementaryData one = SupplementaryData::single_class(in.data.n_obs());
  report_solution(out, sol, one);
  return cluster_outputs(cfg, in, one, sol, std::move(root));
}

Json variant_json(const ConstrainedMcaResult& res, const CategoricalDataset& data,
                  const std::vector<std::string>& group_labels) {
  Json v;
  v["dims"] = res.quantifications.cols();
  v["objective"] = round_sig15(res.objective);
  v["eigenvalues"] = vector_json(res.eigenvalues);
  v["categories"] = data.category_names();
  v["B"] = matrix_json(res.quantifications);
  if (res.group_points.rows() > 0) {
    Json groups = Json::array();
    const Json rows = matrix_json(res.group_points);
    for (std::size_t g = 0; g < group_labels.size(); ++g)
      groups.push_back({{"label", group_labels[g]}, {"coords", rows[g]}});
    v["group_points"] = std::move(groups);
  }
  return v;
}

std::string scores_csv(const ConstrainedMcaResult& res, const SupplementaryData* sup, std::size_t n_obs) {
  std::vector<std::string> header;
  if (sup) header = {"sup", "class"};
  header.push_back("obs");
  for (Index d = 1; d <= res.scores.cols(); ++d) header.push_back("dim" + std::to_string(d));
  std::string out = io::csv_line(header);
  for (Index r = 0; r < res.scores.rows(); ++r) {
    const std::size_t h = static_cast<std::size_t>(r) / n_obs, i = static_cast<std::size_t>(r) % n_obs;
    std::vector<std::string> f;
    if (sup) f = {sup->var_names()[h], sup->labels(h)[static_cast<std::size_t>(sup->cls(h, i))]};
    f.push_back(std::to_string(i + 1));
    for (Index d = 0; d < res.scores.cols(); ++d) f.push_back(io::format_number(round_sig15(res.scores(r, d))));
    out += io::csv_line(f);
  }
  return out;
}

Outputs run_constrained(const RunConfig& cfg, const LoadedData& in, std::ostream& out) {
  if (cfg.method != Method::Mca && cfg.sup_cols.empty())
    throw ConfigError(method_name(cfg.method) + " needs at least one supplementary column (--sup-cols)");
  ConstraintSpec spec = ConstraintSpec::identity();
  if (cfg.method == Method::Averaging) spec = ConstraintSpec::averaging(in.sup);
  if (cfg.method == Method::Removal) spec = ConstraintSpec::removal(in.sup);
  const ConstrainedMcaResult res = fit_constrained_mca(in.data, spec, cfg.dims);
  out << "objective = " << io::format_number(res.objective) << "\n";

  std::vector<std::string> group_labels;
  for (std::size_t h = 0; h < in.sup.n_sup(); ++h)
    for (std::size_t s = 0; s < in.sup.n_classes(h); ++s) group_labels.push_back(in.sup.labels(h)[s]);

  Outputs o;
  o.root = archive_header(cfg, in);
  o.root["variant"] = variant_json(res, in.data, group_labels);
  if (cfg.method == Method::Averaging) {
    const IndicatorView z(in.data, in.sup.n_sup());
    const BiplotModel model = rescale_spread(biplot_coordinates(
        standardized_residuals(class_contingency(in.sup, z)), res.group_points, res.quantifications));
    o.residuals = residual_records(model, "averaging");
    o.root["biplot"] = biplot_json(model, in.data, PointSet::ClassesCategories);
    o.root["residuals"] = residuals_json(o.residuals);
  } else {
    o.root["biplot"] = category_points_json(in.data, res.quantifications);
    o.scores = scores_csv(res, cfg.method == Method::Removal ? &in.sup : nullptr, in.data.n_obs());
  }
  return o;
}

int cmd_run(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  const LoadedData in = load_input(cfg.input, cfg.sup_cols);
  out << method_name(cfg.method) << ": N = " << in.data.n_obs() << ", m = " << in.data.n_vars()
      << ", Q = " << in.data.n_categories() << ", H = " << in.sup.n_sup() << ", p = " << cfg.dims << "\n";
  Outputs o;
  switch (cfg.method) {
    case Method::Mscca: o = run_mscca(cfg, in, out); break;
    case Method::ClusterCa: o = run_cluster_ca(cfg, in, out); break;
    default: o = run_constrained(cfg, in, out); break;
  }
  write_outputs(cfg, o, out);
  return 0;
}

// Archive with a cluster solution, the data it was fitted on and the class
// structure it was fitted under.
struct LoadedArchive {
  Json root;
  LoadedData in;
  SupplementaryData sup;
  HierarchicalAssignment assignment;
};

LoadedArchive load_cluster_archive(const std::string& path, const std::string& input_override) {
  LoadedArchive a;
  a.root = load_json(path);
  try {
    const std::string method = a.root.at("method").get<std::string>();
    if (method != "mscca" && method != "cluster-ca")
      throw ConfigError("archive holds a " + method + " fit, which has no cluster solution");
    RunConfig cfg = config_from_json(a.root.at("config"));
    if (!input_override.empty()) cfg.input = input_override;
    a.in = load_input(cfg.input, cfg.sup_cols);
    a.sup = method == "cluster-ca" ? SupplementaryData::single_class(a.in.data.n_obs()) : a.in.sup;
    a.assignment = assignment_from_json(a.root.at("solution"), a.sup);
  } catch (const Json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return a;
}

int cmd_verify(const std::string& path, const std::string& input, std::ostream& out) {
  const LoadedArchive a = load_cluster_archive(path, input);
  double stored = 0.0, phi = 0.0;
  try {
    const Json& sol = a.root.at("solution");
    const MatrixXd g = matrix_from_json(sol.at("G"));
    const MatrixXd b = matrix_from_json(sol.at("B"));
    if (g.rows() != a.assignment.spec().total() || b.rows() != static_cast<Index>(a.in.data.n_categories()) ||
        g.cols() != b.cols())
      throw ShapeError("stored G or B does not match the data");
    stored = sol.at("phi").get<double>();
    phi = objective_phi(a.assignment, g, b, IndicatorView(a.in.data, a.sup.n_sup()));
  } catch (const Json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  } catch (const Error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  const double diff = std::abs(phi - stored);
  out << "phi stored = " << io::format_number(stored) << ", recomputed = " << io::format_number(phi)
      << ", |difference| = " << io::format_number(diff) << "\n";
  const bool ok = diff <= Tolerances::archive_roundtrip;
  out << (ok ? "archive verified" : "archive does NOT reproduce its objective") << "\n";
  return ok ? 0 : 1;
}

int cmd_evaluate(const std::string& path, const std::string& input, const std::string& truth_path,
                 const std::string& truth_col, const std::string& out_path, std::ostream& out) {
  const LoadedArchive a = load_cluster_archive(path, input);
  std::vector<std::string> truth;
  try {
    const io::CsvTable t = io::read_csv(truth_path);
    const std::size_t c = t.column(truth_col);
    for (const auto& row : t.rows) truth.push_back(row[c]);
  } catch (const Error& e) {
    throw ConfigError(truth_path + ": " + e.what());
  }
  if (truth.size() != a.in.data.n_obs())
    throw ConfigError("truth has " + std::to_string(truth.size()) + " rows, data has " +
                      std::to_string(a.in.data.n_obs()));
  std::string csv = io::csv_line({"sup", "class", "n", "ari"});
  for (std::size_t h = 0; h < a.sup.n_sup(); ++h)
    for (std::size_t s = 0; s < a.sup.n_classes(h); ++s) {
      const auto members = a.sup.members(h, s);
      std::vector<int> fitted;
      std::vector<std::string> want;
      for (std::size_t i : members) {
        fitted.push_back(a.assignment.cluster(h, i));
        want.push_back(truth[i]);
      }
      const std::string ari = members.size() < 2 ? "NA" : io::format_number(round_sig15(adjusted_rand_index(fitted, want)));
      csv += io::csv_line({a.sup.var_names()[h], a.sup.labels(h)[s], std::to_string(members.size()), ari});
    }
  if (out_path.empty()) {
    out << csv;
  } else {
    try {
      io::write_atomic(out_path, csv);
    } catch (const Error& e) {
      throw ExportError(e.what());
    }
    out << "wrote " << out_path << "\n";
  }
  return 0;
}

int cmd_export_svg(const std::string& path, std::string out_path, std::ostream& out) {
  const Json root = load_json(path);
  if (!root.contains("biplot")) throw ConfigError(path + ": archive has no biplot coordinates");
  if (out_path.empty()) out_path = (fs::path(path).parent_path() / "biplot.svg").string();
  try {
    io::write_atomic(out_path, render_svg(root.at("biplot")));
  } catch (const ExportError&) {
    throw;
  } catch (const std::exception& e) {
    throw ExportError(e.what());
  }
  out << "wrote " << out_path << "\n";
  return 0;
}

int cmd_simulate(const std::string& design_path, const std::string& out_dir, std::optional<std::uint64_t> seed,
                 bool timing, std::ostream& out) {
  StudyDesign d = design_from_json(load_json(design_path));
  if (seed) d.seed = *seed;
  if (timing) d.timing = true;
  const auto rows = run_study(d);
  const auto summary = summarize_study(rows);
  std::ostringstream results, sums;
  write_study_csv(results, rows);
  write_summary_csv(sums, summary);
  std::size_t failed = 0;
  for (const auto& c : summary) failed += c.n_failed;
  out << "cells = " << summary.size() << ", replicates = " << d.replicates << ", rows = " << rows.size()
      << ", failed rows = " << failed << "\n";
  try {
    for (const auto& [name, text] : {std::pair{"results.csv", results.str()}, std::pair{"summary.csv", sums.str()}}) {
      const fs::path p = fs::path(out_dir) / name;
      io::write_atomic(p, text);
      out << "wrote " << p.string() << "\n";
    }
  } catch (const Error& e) {
    throw ExportError(e.what());
  }
  return 0;
}

int cmd_generate_illustration(const std::string& out_dir, std::optional<std::uint64_t> seed,
                              std::optional<double> high_prob, std::ostream& out) {
  IllustrationSpec spec;
  if (seed) spec.seed = *seed;
  if (high_prob) spec.high_prob = *high_prob;
  if (!(spec.high_prob > 0.0 && spec.high_prob <= 1.0)) throw ConfigError("--high-prob must lie in (0, 1]");
  const Illustration ill = generate_illustration(spec);
  const Table rows = decode_dataset(ill.data);
  const char* names[] = {"Western & Fruit juice", "Asian & Tea", "Western & Alcohol"};

  std::string data = io::csv_line({"Meal", "Drink", "Nationality", "Gender"});
  std::string truth = io::csv_line({"cluster"});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    data += io::csv_line({rows[i][0], rows[i][1], ill.sup.labels(0)[static_cast<std::size_t>(ill.sup.cls(0, i))],
                          ill.sup.labels(1)[static_cast<std::size_t>(ill.sup.cls(1, i))]});
    truth += io::csv_line({names[ill.global_truth[i]]});
  }
  const fs::path dir = out_dir;
  Json cfg;
  cfg["input"] = (dir / "illustration.csv").string();
  cfg["sup_cols"] = {"Nationality", "Gender"};
  cfg["k"] = {"Nationality:American:2", "Nationality:Japanese:2", "Gender:Male:3", "Gender:Female:2"};
  cfg["dims"] = 2;
  cfg["exports"] = {"coords-csv", "residuals-csv", "svg"};
  try {
    for (const auto& [name, text] : {std::pair{"illustration.csv", data}, std::pair{"illustration_truth.csv", truth},
                                     std::pair{"illustration_fit.json", dump(cfg)}}) {
      io::write_atomic(dir / name, text);
      out << "wrote " << (dir / name).string() << "\n";
    }
  } catch (const Error& e) {
    throw ExportError(e.what());
  }
  return 0;
}

struct RunFlags {
  std::string config, input, out, method;
  std::vector<std::string> sup_cols, k, exports;
  bool k_auto = false;
  int k_max = 0, dims = 0, starts = 0, max_iter = 0;
  std::uint64_t seed = 0;
  double epsilon = 0.0;
  std::map<std::string, CLI::Option*> opt;

  bool given(const std::string& name) const { return opt.at(name)->count() > 0; }
};

void add_run_flags(CLI::App* app, RunFlags& f, bool method) {
  f.opt["config"] = app->add_option("--config", f.config, "JSON run configuration; flags override its keys");
  f.opt["input"] = app->add_option("--input", f.input, "CSV with a header row, one observation per row");
  f.opt["sup_cols"] =
      app->add_option("--sup-cols", f.sup_cols, "supplementary column names (comma separated)")->delimiter(',');
  f.opt["k"] = app->add_option("--k", f.k, "clusters per class as h:s:K, s:K or a default K (repeatable)");
  f.opt["k_auto"] = app->add_flag("--k-auto", f.k_auto, "choose K per class with the KL index");
  f.opt["k_max"] = app->add_option("--k-max", f.k_max, "largest K tried by --k-auto (at least 4)");
  f.opt["dims"] = app->add_option("--dims", f.dims, "solution dimensionality p");
  f.opt["starts"] = app->add_option("--starts", f.starts, "random starts");
  f.opt["seed"] = app->add_option("--seed", f.seed, "master seed");
  f.opt["epsilon"] = app->add_option("--epsilon", f.epsilon, "stop once phi decreases by less than this");
  f.opt["max_iter"] = app->add_option("--max-iter", f.max_iter, "iterations per start");
  f.opt["out"] = app->add_option("--out", f.out, "output directory");
  f.opt["exports"] =
      app->add_option("--export", f.exports, "coords-csv, solution-json, residuals-csv or svg (repeatable)")
          ->delimiter(',');
  if (method)
    f.opt["method"] = app->add_option("--method", f.method, "averaging, removal, cluster-ca or mca");
}

RunConfig resolve_run_config(const RunFlags& f) {
  RunConfig cfg;
  if (f.given("config")) cfg = config_from_json(load_json(f.config), cfg);
  if (f.given("input")) cfg.input = f.input;
  if (f.given("sup_cols")) cfg.sup_cols = f.sup_cols;
  // Either flag replaces whatever way of choosing K the config file used.
  if (f.given("k")) {
    cfg.k_entries = f.k;
    cfg.k_auto = false;
  }
  if (f.given("k_auto")) {
    cfg.k_auto = f.k_auto;
    if (!f.given("k")) cfg.k_entries.clear();
  }
  if (f.given("k_max")) cfg.k_max = f.k_max;
  if (f.given("dims")) cfg.dims = f.dims;
  if (f.given("starts")) cfg.starts = f.starts;
  if (f.given("seed")) cfg.seed = f.seed;
  if (f.given("epsilon")) cfg.epsilon = f.epsilon;
  if (f.given("max_iter")) cfg.max_iter = f.max_iter;
  if (f.given("out")) cfg.out = f.out;
  if (f.given("exports")) cfg.exports = f.exports;
  if (f.opt.count("method") && f.given("method")) cfg.method = parse_method(f.method);
  return cfg;
}

template <class T>
T json_get(const Json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

std::vector<std::string> string_list(const Json& v, const std::string& key) {
  if (v.is_string()) {
    std::vector<std::string> out;
    std::stringstream ss(v.get<std::string>());
    for (std::string item; std::getline(ss, item, ',');) out.push_back(item);
    return out;
  }
  return json_get<std::vector<std::string>>(v, key);
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::Mscca: return "mscca";
    case Method::Averaging: return "averaging";
    case Method::Removal: return "removal";
    case Method::ClusterCa: return "cluster-ca";
    case Method::Mca: return "mca";
  }
  return "mscca";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::Mscca, Method::Averaging, Method::Removal, Method::ClusterCa, Method::Mca})
    if (method_name(m) == name) return m;
  throw ConfigError("unknown method '" + name + "' (expected mscca, averaging, removal, cluster-ca or mca)");
}

void RunConfig::validate() const {
  if (input.empty()) throw ConfigError("no input file (--input)");
  for (const auto& e : exports)
    if (!contains(kExports, e)) throw ConfigError("unknown export format '" + e + "'");
  if ((method == Method::Removal || method == Method::Mca) && contains(exports, "residuals-csv"))
    throw ConfigError(method_name(method) + " has no contingency table, so residuals-csv is unavailable");
  const bool clusters = method == Method::Mscca || method == Method::ClusterCa;
  if (!clusters) {
    if (k_auto || !k_entries.empty()) throw ConfigError(method_name(method) + " takes no cluster counts");
    return;
  }
  if (k_auto) {
    if (!k_entries.empty()) throw ConfigError("--k and --k-auto are mutually exclusive");
    if (k_max < 4) throw ConfigError("--k-max must be at least 4 for the KL index");
  } else if (k_entries.empty()) {
    throw ConfigError("give cluster counts with --k or choose them with --k-auto");
  }
  if (method == Method::ClusterCa && !k_auto) {
    const auto k = parse_integer(k_entries.front());
    if (k_entries.size() != 1 || !k || *k < 1) throw ConfigError("cluster-ca takes a single positive K");
  }
}

Json RunConfig::echo() const {
  Json j;
  j["input"] = input;
  j["sup_cols"] = sup_cols;
  j["method"] = method_name(method);
  if (k_auto) {
    j["k_auto"] = true;
    j["k_max"] = k_max;
  } else {
    j["k"] = k_entries;
  }
  j["dims"] = dims;
  j["starts"] = starts;
  j["seed"] = seed;
  j["epsilon"] = epsilon;
  j["max_iter"] = max_iter;
  j["exports"] = exports;
  return j;
}

RunConfig config_from_json(const Json& j, RunConfig base) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    const Json& v = it.value();
    if (key == "input") {
      base.input = json_get<std::string>(v, key);
    } else if (key == "sup_cols") {
      base.sup_cols = string_list(v, key);
    } else if (key == "k") {
      base.k_entries.clear();
      if (v.is_number_integer()) {
        base.k_entries.push_back(std::to_string(v.get<long long>()));
      } else if (v.is_array()) {
        for (const auto& e : v)
          base.k_entries.push_back(e.is_number_integer() ? std::to_string(e.get<long long>())
                                                         : json_get<std::string>(e, key));
      } else if (v.is_object()) {
        for (auto e = v.begin(); e != v.end(); ++e)
          base.k_entries.push_back(e.key() + ":" + std::to_string(json_get<long long>(e.value(), key)));
      } else {
        throw ConfigError("config key 'k' must be an integer, a list or an object");
      }
    } else if (key == "k_auto") {
      base.k_auto = json_get<bool>(v, key);
    } else if (key == "k_max") {
      base.k_max = json_get<int>(v, key);
    } else if (key == "dims") {
      base.dims = json_get<int>(v, key);
    } else if (key == "starts") {
      base.starts = json_get<int>(v, key);
    } else if (key == "seed") {
      base.seed = json_get<std::uint64_t>(v, key);
    } else if (key == "epsilon") {
      base.epsilon = json_get<double>(v, key);
    } else if (key == "max_iter") {
      base.max_iter = json_get<int>(v, key);
    } else if (key == "out") {
      base.out = json_get<std::string>(v, key);
    } else if (key == "exports") {
      base.exports = string_list(v, key);
    } else if (key == "method") {
      base.method = parse_method(json_get<std::string>(v, key));
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  return base;
}

ClusterSpec parse_k_map(const std::vector<std::string>& entries, const SupplementaryData& sup) {
  std::vector<std::vector<std::optional<int>>> k(sup.n_sup());
  for (std::size_t h = 0; h < sup.n_sup(); ++h) k[h].resize(sup.n_classes(h));
  std::optional<int> fallback;

  for (const auto& e : entries) {
    const auto first = e.find(':'), last = e.rfind(':');
    const auto value = parse_integer(first == std::string::npos ? e : e.substr(last + 1));
    if (!value || *value < 1 || *value > std::numeric_limits<int>::max())
      throw ConfigError("cluster count in '" + e + "' is not a positive integer");
    if (first == std::string::npos) {
      if (fallback) throw ConfigError("more than one default K given");
      fallback = static_cast<int>(*value);
      continue;
    }
    std::vector<std::pair<std::size_t, std::size_t>> targets;
    if (first == last) {
      const std::string label = e.substr(0, first);
      for (std::size_t h = 0; h < sup.n_sup(); ++h)
        for (std::size_t s = 0; s < sup.n_classes(h); ++s)
          if (sup.labels(h)[s] == label) targets.emplace_back(h, s);
      if (targets.empty()) throw ConfigError("no class labelled '" + label + "'");
      if (targets.size() > 1) throw ConfigError("class label '" + label + "' is ambiguous; write sup:class:K");
    } else {
      const std::string hname = e.substr(0, first), sname = e.substr(first + 1, last - first - 1);
      std::optional<std::size_t> h;
      for (std::size_t c = 0; c < sup.n_sup(); ++c)
        if (sup.var_names()[c] == hname) h = c;
      if (!h) {
        const auto n = parse_integer(hname);
        if (n && *n >= 1 && static_cast<std::size_t>(*n) <= sup.n_sup()) h = static_cast<std::size_t>(*n - 1);
      }
      if (!h) throw ConfigError("no supplementary variable '" + hname + "' in '" + e + "'");
      std::optional<std::size_t> s;
      for (std::size_t c = 0; c < sup.n_classes(*h); ++c)
        if (sup.labels(*h)[c] == sname) s = c;
      if (!s) {
        const auto n = parse_integer(sname);
        if (n && *n >= 1 && static_cast<std::size_t>(*n) <= sup.n_classes(*h)) s = static_cast<std::size_t>(*n - 1);
      }
      if (!s) throw ConfigError("no class '" + sname + "' of " + sup.var_names()[*h] + " in '" + e + "'");
      targets.emplace_back(*h, *s);
    }
    auto& slot = k[targets[0].first][targets[0].second];
    if (slot) throw ConfigError("K given twice for " + class_name(sup, targets[0].first, targets[0].second));
    slot = static_cast<int>(*value);
  }

  std::vector<std::vector<int>> counts(sup.n_sup());
  for (std::size_t h = 0; h < sup.n_sup(); ++h)
    for (std::size_t s = 0; s < sup.n_classes(h); ++s) {
      if (!k[h][s] && !fallback) throw ConfigError("no K given for " + class_name(sup, h, s));
      counts[h].push_back(k[h][s] ? *k[h][s] : *fallback);
    }
  return ClusterSpec(std::move(counts));
}

LoadedData load_input(const std::string& path, const std::vector<std::string>& sup_cols) {
  io::CsvTable t;
  try {
    t = io::read_csv(path);
  } catch (const Error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  if (t.rows.empty()) throw ConfigError(path + ": no observations");
  std::vector<std::size_t> sup_idx;
  for (const auto& name : sup_cols) {
    const auto it = std::find(t.header.begin(), t.header.end(), name);
    if (it == t.header.end()) throw ConfigError(path + ": no column named '" + name + "'");
    const auto c = static_cast<std::size_t>(it - t.header.begin());
    if (std::find(sup_idx.begin(), sup_idx.end(), c) != sup_idx.end())
      throw ConfigError("supplementary column '" + name + "' listed twice");
    sup_idx.push_back(c);
  }
  std::vector<std::size_t> act_idx;
  for (std::size_t c = 0; c < t.header.size(); ++c)
    if (std::find(sup_idx.begin(), sup_idx.end(), c) == sup_idx.end()) act_idx.push_back(c);
  if (act_idx.empty()) throw ConfigError(path + ": every column is supplementary; nothing to analyse");

  const auto pick = [&](const std::vector<std::size_t>& cols, Table& raw, std::vector<std::string>& names) {
    for (std::size_t c : cols) names.push_back(t.header[c]);
    raw.reserve(t.rows.size());
    for (const auto& row : t.rows) {
      std::vector<std::string> r;
      for (std::size_t c : cols) r.push_back(row[c]);
      raw.push_back(std::move(r));
    }
  };
  Table act, sup;
  std::vector<std::string> act_names, sup_names;
  pick(act_idx, act, act_names);
  pick(sup_idx, sup, sup_names);
  LoadedData out;
  try {
    out.data = encode_dataset(act, act_names);
    out.sup = sup_idx.empty() ? SupplementaryData::single_class(t.rows.size()) : encode_supplementary(sup, sup_names);
  } catch (const Error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return out;
}

StudyDesign design_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("design must be a JSON object");
  StudyDesign d;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    const Json& v = it.value();
    if (key == "q_values") d.q_values = json_get<std::vector<int>>(v, key);
    else if (key == "k_values") d.k_values = json_get<std::vector<int>>(v, key);
    else if (key == "h_values") d.h_values = json_get<std::vector<int>>(v, key);
    else if (key == "r_values") d.r_values = json_get<std::vector<int>>(v, key);
    else if (key == "balances") {
      d.balances.clear();
      for (const auto& b : json_get<std::vector<std::string>>(v, key)) {
        if (b == "balanced") d.balances.push_back(Balance::Balanced);
        else if (b == "unbalanced") d.balances.push_back(Balance::Unbalanced);
        else throw ConfigError("unknown balance '" + b + "' (expected balanced or unbalanced)");
      }
    } else if (key == "replicates") d.replicates = json_get<int>(v, key);
    else if (key == "starts") d.starts = json_get<int>(v, key);
    else if (key == "n_obs") d.n_obs = json_get<std::size_t>(v, key);
    else if (key == "n_vars") d.n_vars = json_get<std::size_t>(v, key);
    else if (key == "high_prob") d.high_prob = json_get<double>(v, key);
    else if (key == "dims") d.dims = json_get<int>(v, key);
    else if (key == "max_iter") d.max_iter = json_get<int>(v, key);
    else if (key == "epsilon") d.epsilon = json_get<double>(v, key);
    else if (key == "seed") d.seed = json_get<std::uint64_t>(v, key);
    else if (key == "timing") d.timing = json_get<bool>(v, key);
    else throw ConfigError("unknown design key '" + key + "'");
  }
  try {
    d.validate();
  } catch (const SpecError& e) {
    throw ConfigError(std::string("invalid design: ") + e.what());
  }
  return d;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multiple-set cluster correspondence analysis"};
  app.name("mscca");
  app.require_subcommand(1);

  RunFlags fit_flags, var_flags;
  auto* fit = app.add_subcommand("fit", "fit MSCCA and write the solution archive and exports");
  add_run_flags(fit, fit_flags, false);
  auto* variants = app.add_subcommand("variants", "fit averaging, removal, cluster-ca or mca for comparison");
  add_run_flags(variants, var_flags, true);

  std::string design, sim_out = ".";
  std::uint64_t sim_seed = 0;
  bool timing = false;
  auto* simulate = app.add_subcommand("simulate", "run a simulation design and write results.csv and summary.csv");
  simulate->add_option("--design", design, "JSON design file")->required();
  simulate->add_option("--out", sim_out, "output directory");
  auto* sim_seed_opt = simulate->add_option("--seed", sim_seed, "master seed (overrides the design)");
  simulate->add_flag("--timing", timing, "record wall time per fit");

  std::string archive, svg_out;
  auto* export_svg = app.add_subcommand("export-svg", "render the biplot of an archive as SVG");
  export_svg->add_option("--archive", archive, "solution archive")->required();
  export_svg->add_option("--out", svg_out, "SVG file (default: biplot.svg next to the archive)");

  std::string ill_out = ".";
  std::uint64_t ill_seed = 0;
  double ill_prob = 0.0;
  auto* illustration = app.add_subcommand("generate-illustration", "write the food and drink illustration data");
  illustration->add_option("--out", ill_out, "output directory");
  auto* ill_seed_opt = illustration->add_option("--seed", ill_seed, "generator seed");
  auto* ill_prob_opt = illustration->add_option("--high-prob", ill_prob, "probability of a cluster's own profile");

  std::string ver_archive, ver_input;
  auto* verify = app.add_subcommand("verify", "re-evaluate phi from an archive and compare with the stored value");
  verify->add_option("--archive", ver_archive, "solution archive")->required();
  verify->add_option("--input", ver_input, "data file (default: the one recorded in the archive)");

  std::string ev_archive, ev_input, ev_truth, ev_col = "cluster", ev_out;
  auto* evaluate = app.add_subcommand("evaluate", "per-class ARI of an archive's clusters against known labels");
  evaluate->add_option("--archive", ev_archive, "solution archive")->required();
  evaluate->add_option("--truth", ev_truth, "CSV with one true label per observation")->required();
  evaluate->add_option("--truth-col", ev_col, "column of the truth file holding the labels");
  evaluate->add_option("--input", ev_input, "data file (default: the one recorded in the archive)");
  evaluate->add_option("--out", ev_out, "CSV file (default: standard output)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(fit)) {
      RunConfig cfg = resolve_run_config(fit_flags);
      return cmd_run(cfg, out);
    }
    if (app.got_subcommand(variants)) {
      const RunConfig cfg = resolve_run_config(var_flags);
      if (cfg.method == Method::Mscca) throw ConfigError("variants needs --method averaging, removal, cluster-ca or mca");
      return cmd_run(cfg, out);
    }
    if (app.got_subcommand(simulate))
      return cmd_simulate(design, sim_out, sim_seed_opt->count() ? std::optional(sim_seed) : std::nullopt, timing, out);
    if (app.got_subcommand(export_svg)) return cmd_export_svg(archive, svg_out, out);
    if (app.got_subcommand(illustration))
      return cmd_generate_illustration(ill_out, ill_seed_opt->count() ? std::optional(ill_seed) : std::nullopt,
                                       ill_prob_opt->count() ? std::optional(ill_prob) : std::nullopt, out);
    if (app.got_subcommand(verify)) return cmd_verify(ver_archive, ver_input, out);
    if (app.got_subcommand(evaluate)) return cmd_evaluate(ev_archive, ev_input, ev_truth, ev_col, ev_out, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ExportError& e) {
    err << "export error: " << e.what() << "\n";
    return 4;
  } catch (const Json::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "solver error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace mscca::cli
