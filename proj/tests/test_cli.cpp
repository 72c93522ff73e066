#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <filesystem>
#include <map>
#include <regex>
#include <sstream>

#include "mscca/archive.hpp"
#include "mscca/cli.hpp"
#include "mscca/csv_io.hpp"
#include "mscca/simulation.hpp"

namespace mscca {
namespace {

namespace fs = std::filesystem;
using cli::ConfigError;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("mscca_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) { return io::read_text(p); }

Json read_json(const fs::path& p) { return Json::parse(slurp(p)); }

// Illustration files plus a fitted archive, shared by several tests.
class IllustrationFit : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = scratch("illustration");
    ASSERT_EQ(run({"generate-illustration", "--out", dir_.string()}).code, 0);
    const CliRun r = run({"fit", "--config", (dir_ / "illustration_fit.json").string(), "--out", (dir_ / "fit").string(),
                       "--starts", "10", "--seed", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static fs::path data() { return dir_ / "illustration.csv"; }
  static fs::path fit() { return dir_ / "fit"; }
  static inline fs::path dir_;
};

// --- CSV -------------------------------------------------------------------

TEST(Csv, QuotingLineEndsAndBom) {
  const auto t = io::parse_csv("\xEF\xBB\xBF" "a,b\r\n\"x, y\",\"say \"\"hi\"\"\"\r\n\n\"two\nlines\",z\n");
  EXPECT_EQ(t.header, (std::vector<std::string>{"a", "b"}));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0], (std::vector<std::string>{"x, y", "say \"hi\""}));
  EXPECT_EQ(t.rows[1], (std::vector<std::string>{"two\nlines", "z"}));
  EXPECT_EQ(t.column("b"), 1u);
  EXPECT_THROW(t.column("c"), ShapeError);
}

TEST(Csv, MalformedInputs) {
  EXPECT_THROW(io::parse_csv("a,b\nx\n"), ShapeError);
  EXPECT_THROW(io::parse_csv("a,b\nx,\n"), MissingValueError);
  EXPECT_THROW(io::parse_csv("a,b\n\"\",y\n"), MissingValueError);
  EXPECT_THROW(io::parse_csv("a,a\nx,y\n"), ShapeError);
  EXPECT_THROW(io::parse_csv("a,b\n\"x,y\n"), ShapeError);
  EXPECT_THROW(io::parse_csv("a,b\n\"x\"z,y\n"), ShapeError);
  EXPECT_THROW(io::parse_csv(""), ShapeError);
  EXPECT_THROW(io::read_csv("/nonexistent/file.csv"), IoError);
}

TEST(Csv, WrittenLinesParseBack) {
  Rng rng(5);
  const std::string alphabet = "ab,\"\n\r x";
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<std::string> fields(1 + rng.uniform_index(4));
    for (auto& f : fields) {
      const std::size_t n = 1 + rng.uniform_index(6);
      for (std::size_t c = 0; c < n; ++c) f += alphabet[rng.uniform_index(alphabet.size())];
      if (f.find_first_not_of("\r\n") == std::string::npos) f = "v";
    }
    std::vector<std::string> header;
    for (std::size_t c = 0; c < fields.size(); ++c) header.push_back("h" + std::to_string(c));
    const auto t = io::parse_csv(io::csv_line(header) + io::csv_line(fields));
    ASSERT_EQ(t.rows.size(), 1u);
    EXPECT_EQ(t.rows[0], fields);
  }
}

TEST(Csv, NumberFormattingAndRounding) {
  EXPECT_EQ(io::format_number(-0.0), "0");
  EXPECT_EQ(io::format_number(0.1), "0.1");
  EXPECT_EQ(io::format_number(1.0 / 3.0), "0.333333333333333");
  EXPECT_EQ(round_sig15(1.0 / 3.0), 0.333333333333333);
  EXPECT_FALSE(std::signbit(round_sig15(-0.0)));
  Rng rng(6);
  for (int rep = 0; rep < 100; ++rep) {
    const double v = rng.uniform(-1e3, 1e3);
    EXPECT_LE(std::abs(round_sig15(v) - v), 1e-14 * std::abs(v));
    EXPECT_EQ(round_sig15(round_sig15(v)), round_sig15(v));
  }
}

TEST(Csv, AtomicWriteCreatesDirectoriesAndLeavesNoTemp) {
  const fs::path dir = scratch("atomic");
  const fs::path target = dir / "a" / "b" / "out.txt";
  io::write_atomic(target, "first");
  io::write_atomic(target, "second");
  EXPECT_EQ(slurp(target), "second");
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(target.parent_path())) ++files;
  EXPECT_EQ(files, 1u);
}

// --- configuration -----------------------------------------------------------

SupplementaryData two_sup() {
  return encode_supplementary({{"US", "M"}, {"JP", "F"}, {"US", "F"}, {"JP", "M"}}, {"Nat", "Gender"});
}

TEST(KMap, NamesIndicesShorthandAndDefault) {
  const auto sup = two_sup();
  const auto spec = cli::parse_k_map({"Nat:US:2", "1:2:3", "M:4", "1"}, sup);
  EXPECT_EQ(spec.counts(), (std::vector<std::vector<int>>{{2, 3}, {4, 1}}));
}

TEST(KMap, Errors) {
  const auto sup = two_sup();
  EXPECT_THROW(cli::parse_k_map({"Nat:US:2"}, sup), ConfigError);         // uncovered classes
  EXPECT_THROW(cli::parse_k_map({"XX:2", "2"}, sup), ConfigError);        // unknown class
  EXPECT_THROW(cli::parse_k_map({"Nat:US:2", "US:3", "1"}, sup), ConfigError);  // duplicate
  EXPECT_THROW(cli::parse_k_map({"Nat:US:0", "1"}, sup), ConfigError);    // non-positive
  EXPECT_THROW(cli::parse_k_map({"3:US:2", "1"}, sup), ConfigError);      // bad variable index
  EXPECT_THROW(cli::parse_k_map({"2", "3"}, sup), ConfigError);           // two defaults
  const auto same = encode_supplementary({{"a", "a"}, {"b", "b"}}, {"X", "Y"});
  EXPECT_THROW(cli::parse_k_map({"a:1", "1"}, same), ConfigError);        // ambiguous label
}

TEST(RunConfigJson, KeysAndValidation) {
  const auto cfg = cli::config_from_json(Json::parse(
      R"({"input":"d.csv","sup_cols":"A,B","k":{"Male":3,"A:x":2},"dims":3,"seed":9,"exports":["svg"]})"));
  EXPECT_EQ(cfg.sup_cols, (std::vector<std::string>{"A", "B"}));
  EXPECT_EQ(cfg.k_entries, (std::vector<std::string>{"Male:3", "A:x:2"}));
  EXPECT_EQ(cfg.dims, 3);
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_THROW(cli::config_from_json(Json::parse(R"({"inptu":"x"})")), ConfigError);
  EXPECT_THROW(cli::config_from_json(Json::parse(R"({"dims":"two"})")), ConfigError);
  EXPECT_THROW(cli::config_from_json(Json::parse(R"({"method":"pca"})")), ConfigError);

  cli::RunConfig auto_cfg;
  auto_cfg.input = "d.csv";
  auto_cfg.k_auto = true;
  auto_cfg.k_max = 3;
  EXPECT_THROW(auto_cfg.validate(), ConfigError);
  auto_cfg.k_max = 4;
  EXPECT_NO_THROW(auto_cfg.validate());
  auto_cfg.exports = {"pdf"};
  EXPECT_THROW(auto_cfg.validate(), ConfigError);

  // The echo reloads to the same configuration.
  const auto again = cli::config_from_json(cfg.echo());
  EXPECT_EQ(again.echo().dump(), cfg.echo().dump());
}

TEST(Design, FullGridFileHas32Cells) {
  const auto d = cli::design_from_json(read_json(fs::path(MSCCA_SOURCE_DIR) / "tools/designs/full_grid.json"));
  EXPECT_EQ(d.cells().size(), 32u);
  EXPECT_EQ(d.replicates, 100);
  EXPECT_THROW(cli::design_from_json(Json::parse(R"({"replicas":3})")), ConfigError);
  EXPECT_THROW(cli::design_from_json(Json::parse(R"({"balances":["skewed"]})")), ConfigError);
  EXPECT_THROW(cli::design_from_json(Json::parse(R"({"q_values":[]})")), ConfigError);
}

TEST(LoadInput, SplitsColumnsAndRejectsBadFiles) {
  const fs::path dir = scratch("load");
  io::write_atomic(dir / "d.csv", "x,g,y\na,u,c\nb,v,c\na,v,d\n");
  const auto in = cli::load_input((dir / "d.csv").string(), {"g"});
  EXPECT_EQ(in.data.var_names(), (std::vector<std::string>{"x", "y"}));
  EXPECT_EQ(in.sup.var_names(), (std::vector<std::string>{"g"}));
  EXPECT_EQ(cli::load_input((dir / "d.csv").string(), {}).sup.n_sup(), 1u);
  EXPECT_THROW(cli::load_input((dir / "d.csv").string(), {"zz"}), ConfigError);
  EXPECT_THROW(cli::load_input((dir / "d.csv").string(), {"x", "g", "y"}), ConfigError);
  io::write_atomic(dir / "holes.csv", "x,y\na,\n");
  EXPECT_THROW(cli::load_input((dir / "holes.csv").string(), {}), ConfigError);
  EXPECT_THROW(cli::load_input((dir / "none.csv").string(), {}), ConfigError);
}

// --- commands -----------------------------------------------------------------

TEST_F(IllustrationFit, ArchiveHasPerClassClusterCounts) {
  const Json a = read_json(fit() / "solution.json");
  EXPECT_EQ(a["version"], kArchiveVersion);
  EXPECT_EQ(a["method"], "mscca");
  const auto& sup = a["data"]["supplementary"];
  const auto counts = a["solution"]["cluster_counts"].get<std::vector<std::vector<int>>>();
  for (std::size_t h = 0; h < sup.size(); ++h)
    for (std::size_t s = 0; s < sup[h]["classes"].size(); ++s)
      EXPECT_EQ(counts[h][s], sup[h]["classes"][s]["label"] == "Male" ? 3 : 2);
  EXPECT_EQ(a["solution"]["assignment"].size(), 200u);
  EXPECT_TRUE(a.contains("residuals"));
  EXPECT_TRUE(fs::exists(fit() / "coords.csv"));
  EXPECT_TRUE(fs::exists(fit() / "residuals.csv"));
}

TEST_F(IllustrationFit, VerifyReproducesPhi) {
  const CliRun r = run({"verify", "--archive", (fit() / "solution.json").string()});
  EXPECT_EQ(r.code, 0) << r.out << r.err;

  Json a = read_json(fit() / "solution.json");
  a["solution"]["phi"] = a["solution"]["phi"].get<double>() + 1e-6;
  const fs::path bad = scratch("tampered") / "solution.json";
  io::write_atomic(bad, a.dump());
  EXPECT_EQ(run({"verify", "--archive", bad.string()}).code, 1);
}

TEST_F(IllustrationFit, CoordsExportSchema) {
  const auto t = io::read_csv(fit() / "coords.csv");
  EXPECT_EQ(t.header, (std::vector<std::string>{"point_kind", "label", "dim1", "dim2", "mass", "size"}));
  std::map<std::string, int> kinds;
  double cluster_mass = 0.0;
  for (const auto& row : t.rows) {
    ++kinds[row[0]];
    if (row[0] == "cluster") cluster_mass += std::stod(row[4]);
  }
  EXPECT_EQ(kinds["cluster"], 9);
  EXPECT_EQ(kinds["class"], 4);
  EXPECT_EQ(kinds["category"], 5);
  EXPECT_NEAR(cluster_mass, 1.0, 1e-12);
}

TEST_F(IllustrationFit, ResidualsExportIsLongFormat) {
  const auto t = io::read_csv(fit() / "residuals.csv");
  EXPECT_EQ(t.header, (std::vector<std::string>{"method", "class", "row", "column", "value"}));
  // 4 class rows and 9 cluster rows, 5 categories each.
  EXPECT_EQ(t.rows.size(), (4u + 9u) * 5u);
  EXPECT_EQ(t.rows.front()[0], "averaging");
}

std::vector<std::pair<double, std::string>> svg_texts(const std::string& svg) {
  std::vector<std::pair<double, std::string>> out;
  const std::regex text(R"re(font-size="([0-9.]+)"[^>]*>([^<]*)</text>)re");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), text); it != std::sregex_iterator(); ++it)
    out.emplace_back(std::stod((*it)[1]), (*it)[2]);
  return out;
}

TEST_F(IllustrationFit, SvgHasOneTextPerPointAndShareSizedLabels) {
  const std::string svg = slurp(fit() / "biplot.svg");
  EXPECT_EQ(svg.rfind("<?xml", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  const Json points = read_json(fit() / "solution.json")["biplot"]["points"];
  const auto texts = svg_texts(svg);
  ASSERT_EQ(texts.size(), points.size());
  EXPECT_EQ(std::count(svg.begin(), svg.end(), '\n') > 0, true);

  // Within-class share order and font-size order agree for every pair of clusters.
  std::vector<std::pair<double, double>> share_font;
  for (std::size_t i = 0; i < points.size(); ++i)
    if (points[i]["kind"] == "cluster") {
      EXPECT_EQ(texts[i].second, points[i]["label"].get<std::string>());
      share_font.emplace_back(points[i]["share"].get<double>(), texts[i].first);
    }
  ASSERT_EQ(share_font.size(), 9u);
  for (const auto& a : share_font)
    for (const auto& b : share_font)
      if (a.first < b.first) EXPECT_LT(a.second, b.second);
  for (double s = 0.0; s < 1.0; s += 0.05) EXPECT_LT(cluster_font_size(s), cluster_font_size(s + 0.05));
}

TEST_F(IllustrationFit, ExportSvgCommand) {
  const fs::path out = scratch("svgcmd") / "plot.svg";
  EXPECT_EQ(run({"export-svg", "--archive", (fit() / "solution.json").string(), "--out", out.string()}).code, 0);
  EXPECT_EQ(slurp(out), slurp(fit() / "biplot.svg"));
}

TEST_F(IllustrationFit, ThreeDimensionalSvgIsExportError) {
  const fs::path out = scratch("p3");
  const CliRun r = run({"fit", "--config", (dir_ / "illustration_fit.json").string(), "--dims", "3", "--starts", "2",
                     "--out", out.string()});
  EXPECT_EQ(r.code, 4) << r.err;
  ASSERT_TRUE(fs::exists(out / "solution.json"));
  EXPECT_EQ(run({"export-svg", "--archive", (out / "solution.json").string()}).code, 4);
}

TEST_F(IllustrationFit, RepeatedRunsGiveIdenticalBytes) {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  for (const auto& dir : {a, b}) {
    const CliRun r = run({"fit", "--config", (dir_ / "illustration_fit.json").string(), "--starts", "4", "--seed", "11",
                       "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  for (const char* f : {"solution.json", "coords.csv", "residuals.csv", "biplot.svg"})
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST_F(IllustrationFit, AutoModeReportsChosenKPerClass) {
  const fs::path out = scratch("auto");
  const CliRun r = run({"fit", "--input", data().string(), "--sup-cols", "Nationality,Gender", "--k-auto", "--k-max", "6",
                     "--starts", "3", "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("K selection by KL index"), std::string::npos);
  const Json a = read_json(out / "solution.json");
  ASSERT_EQ(a["k_selection"].size(), 4u);
  const auto counts = a["solution"]["cluster_counts"].get<std::vector<std::vector<int>>>();
  for (const auto& e : a["k_selection"]) {
    EXPECT_EQ(e["k_values"].size(), 6u);
    const std::string sup = e["sup"], cls = e["class"];
    const std::size_t h = sup == "Nationality" ? 0 : 1;
    const auto& classes = a["data"]["supplementary"][h]["classes"];
    for (std::size_t s = 0; s < classes.size(); ++s)
      if (classes[s]["label"] == cls) EXPECT_EQ(counts[h][s], e["k"].get<int>());
  }
  EXPECT_EQ(run({"fit", "--input", data().string(), "--sup-cols", "Nationality,Gender", "--k-auto", "--k-max", "3"})
                .code,
            2);
}

TEST_F(IllustrationFit, EvaluateWritesPerClassAri) {
  const CliRun r = run({"evaluate", "--archive", (fit() / "solution.json").string(), "--truth",
                     (dir_ / "illustration_truth.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = io::parse_csv(r.out);
  EXPECT_EQ(t.header, (std::vector<std::string>{"sup", "class", "n", "ari"}));
  ASSERT_EQ(t.rows.size(), 4u);
  for (const auto& row : t.rows) {
    EXPECT_GE(std::stod(row[3]), -1.0);
    EXPECT_LE(std::stod(row[3]), 1.0);
  }
}

TEST_F(IllustrationFit, AveragingEmitsClassPointsOnly) {
  const fs::path out = scratch("avg");
  const CliRun r = run({"variants", "--method", "averaging", "--input", data().string(), "--sup-cols",
                     "Nationality,Gender", "--export", "coords-csv", "--export", "residuals-csv", "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = io::read_csv(out / "coords.csv");
  std::map<std::string, int> kinds;
  for (const auto& row : t.rows) ++kinds[row[0]];
  EXPECT_EQ(kinds.count("cluster"), 0u);
  EXPECT_EQ(kinds["class"], 4);
  EXPECT_EQ(kinds["category"], 5);
  EXPECT_EQ(io::read_csv(out / "residuals.csv").rows.size(), 4u * 5u);
  EXPECT_EQ(read_json(out / "solution.json")["variant"]["group_points"].size(), 4u);
}

TEST_F(IllustrationFit, RemovalScoresHaveZeroClassMeans) {
  const fs::path out = scratch("removal");
  const CliRun r = run({"variants", "--method", "removal", "--input", data().string(), "--sup-cols",
                     "Nationality,Gender", "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = io::read_csv(out / "scores.csv");
  EXPECT_EQ(t.header, (std::vector<std::string>{"sup", "class", "obs", "dim1", "dim2"}));
  EXPECT_EQ(t.rows.size(), 400u);
  std::map<std::string, std::array<double, 3>> sums;
  for (const auto& row : t.rows) {
    auto& s = sums[row[0] + "=" + row[1]];
    s[0] += std::stod(row[3]);
    s[1] += std::stod(row[4]);
    s[2] += 1.0;
  }
  EXPECT_EQ(sums.size(), 4u);
  for (const auto& [cls, s] : sums) {
    EXPECT_NEAR(s[0] / s[2], 0.0, 1e-10) << cls;
    EXPECT_NEAR(s[1] / s[2], 0.0, 1e-10) << cls;
  }
  EXPECT_EQ(run({"variants", "--method", "removal", "--input", data().string(), "--export", "residuals-csv",
                 "--sup-cols", "Gender"})
                .code,
            2);
  EXPECT_EQ(run({"variants", "--method", "removal", "--input", data().string()}).code, 2);
}

TEST_F(IllustrationFit, McaScoresOnePerObservation) {
  const fs::path out = scratch("mca");
  ASSERT_EQ(run({"variants", "--method", "mca", "--input", data().string(), "--sup-cols", "Nationality,Gender",
                 "--out", out.string()})
                .code,
            0);
  EXPECT_EQ(io::read_csv(out / "scores.csv").rows.size(), 200u);
  const Json a = read_json(out / "solution.json");
  EXPECT_EQ(a["biplot"]["points"].size(), 5u);
}

TEST(Variants, ClusterCaWithSevenClusters) {
  GenSpec g;
  g.n_obs = 300;
  g.n_vars = 6;
  g.k = 3;
  g.seed = 21;
  const auto gen = generate_clustered(g);
  const fs::path dir = scratch("cca");
  std::string csv = io::csv_line(gen.data.var_names());
  for (const auto& row : decode_dataset(gen.data)) csv += io::csv_line(row);
  io::write_atomic(dir / "d.csv", csv);
  const CliRun r = run({"variants", "--method", "cluster-ca", "--k", "7", "--input", (dir / "d.csv").string(), "--starts",
                     "3", "--out", dir.string(), "--export", "coords-csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json a = read_json(dir / "solution.json");
  EXPECT_EQ(a["solution"]["cluster_counts"], Json::parse("[[7]]"));
  EXPECT_EQ(run({"verify", "--archive", (dir / "solution.json").string()}).code, 0);
  EXPECT_EQ(run({"variants", "--method", "cluster-ca", "--k", "all:all:7", "--input", (dir / "d.csv").string()}).code,
            2);
}

TEST(ExitCodes, ConfigInputAndSolverErrors) {
  const fs::path dir = scratch("exit");
  EXPECT_EQ(run({"fit", "--input", (dir / "missing.csv").string(), "--k", "2"}).code, 2);
  EXPECT_EQ(run({"fit", "--config", (dir / "missing.json").string()}).code, 2);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"fit", "--no-such-flag"}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
  io::write_atomic(dir / "d.csv", "x,y,g\na,c,u\nb,d,u\na,d,v\nb,c,v\na,c,u\nb,d,v\n");
  const std::string d = (dir / "d.csv").string();
  EXPECT_EQ(run({"fit", "--input", d, "--sup-cols", "g"}).code, 2);                          // no K
  EXPECT_EQ(run({"fit", "--input", d, "--sup-cols", "g", "--k", "u:2"}).code, 2);            // v uncovered
  EXPECT_EQ(run({"variants", "--input", d, "--sup-cols", "g"}).code, 2);                     // no method
  EXPECT_EQ(run({"fit", "--input", d, "--sup-cols", "g", "--k", "5", "--out", dir.string()}).code, 3);  // K > class
  EXPECT_EQ(run({"fit", "--input", d, "--sup-cols", "g", "--k", "2", "--dims", "3", "--out", dir.string()}).code,
            3);  // p > Q - m
  EXPECT_EQ(run({"fit", "--input", d, "--sup-cols", "g", "--k", "2", "--starts", "0", "--out", dir.string()}).code, 3);
}

TEST(Simulate, SmokeDesignIsByteStable) {
  const fs::path a = scratch("sim_a"), b = scratch("sim_b");
  const std::string design = (fs::path(MSCCA_SOURCE_DIR) / "tools/designs/smoke.json").string();
  ASSERT_EQ(run({"simulate", "--design", design, "--out", a.string()}).code, 0);
  ASSERT_EQ(run({"simulate", "--design", design, "--out", b.string()}).code, 0);
  EXPECT_EQ(slurp(a / "results.csv"), slurp(b / "results.csv"));
  EXPECT_EQ(slurp(a / "summary.csv"), slurp(b / "summary.csv"));
  const auto t = io::read_csv(a / "results.csv");
  EXPECT_EQ(t.rows.size(), 2u * 3u);
  EXPECT_EQ(io::read_csv(a / "summary.csv").rows.size(), 1u);

  ASSERT_EQ(run({"simulate", "--design", design, "--out", b.string(), "--seed", "8"}).code, 0);
  EXPECT_NE(slurp(a / "results.csv"), slurp(b / "results.csv"));

  io::write_atomic(a / "bad.json", R"({"replicates": 0})");
  EXPECT_EQ(run({"simulate", "--design", (a / "bad.json").string()}).code, 2);
  io::write_atomic(a / "broken.json", "{");
  EXPECT_EQ(run({"simulate", "--design", (a / "broken.json").string()}).code, 2);
}

TEST(ArchiveJson, MatrixRoundTripAndAssignmentRebuild) {
  Rng rng(8);
  Eigen::MatrixXd m(3, 2);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = rng.uniform(-5, 5);
  const Eigen::MatrixXd back = matrix_from_json(Json::parse(matrix_json(m).dump()));
  EXPECT_LE((back - m).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_THROW(matrix_from_json(Json::parse("[[1,2],[3]]")), ShapeError);
  EXPECT_THROW(matrix_from_json(Json::parse("[[1,\"x\"]]")), ShapeError);

  const auto ill = generate_illustration();
  const auto sol = solve_for_assignment(ill.data, ill.truth, 2);
  const IndicatorView z(ill.data, 2);
  const auto model = biplot_coordinates(standardized_residuals(contingency(sol.assignment, ill.sup, z)), sol.centers,
                                        sol.quantifications);
  const Json s = Json::parse(solution_json(sol, ill.data, ill.sup, model).dump());
  EXPECT_EQ(assignment_from_json(s, ill.sup), sol.assignment);
  EXPECT_THROW(assignment_from_json(s, SupplementaryData::single_class(200)), ShapeError);
}

}  // namespace
}  // namespace mscca
