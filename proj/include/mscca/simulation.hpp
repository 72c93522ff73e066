#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mscca/data_model.hpp"
#include "mscca/solver.hpp"

namespace mscca {

struct GenSpec {
  std::size_t n_obs = 300;
  std::size_t n_vars = 10;
  int q = 5;
  int k = 2;
  double high_prob = 0.8;
  double active_fraction = 0.5;  // active variables = floor(m * fraction), the rest are noise
  bool distinct_signal = true;   // signal categories differ across clusters within a variable
  std::uint64_t seed = 0;

  std::size_t n_active() const;
  void validate() const;  // SpecError
};

struct ClusteredData {
  CategoricalDataset data;
  std::vector<int> truth;  // global cluster per observation
  // signal[j][k]: high-probability category code of active variable j in cluster k
  std::vector<std::vector<int>> signal;
  // probs[j][k]: full category distribution of active variable j in cluster k
  std::vector<std::vector<std::vector<double>>> probs;
};

/// Uniform multinomial cluster allocation; every active variable has one
/// high-probability category per cluster, the others share 1 - high_prob in
/// random proportions; noise variables are uniform.
ClusteredData generate_clustered(const GenSpec& spec);

enum class Balance { Balanced, Unbalanced };

struct SupGenSpec {
  std::vector<int> classes;  // r_h per supplementary variable
  Balance balance = Balance::Balanced;
  std::uint64_t seed = 0;

  void validate() const;  // SpecError
};

/// Class s (1-based) has probability 1/r_h (balanced) or s/S, S = r_h(r_h+1)/2.
std::vector<double> class_probabilities(int r, Balance balance);

/// Independent draws per h; classes that receive no member are dropped.
SupplementaryData generate_supplementary(const SupGenSpec& spec, std::size_t n_obs);

/// Truth restricted to every class: inside each class the global clusters that
/// occur are renumbered 0.. in ascending global id.
HierarchicalAssignment restrict_truth(const std::vector<int>& truth, const SupplementaryData& sup);

struct IllustrationSpec {
  // Members per (nationality, gender) cell and cluster W&J, A&T, W&A.
  // Cells: American male, American female, Japanese male, Japanese female.
  std::vector<std::vector<int>> counts = {{25, 0, 10}, {50, 0, 0}, {5, 60, 0}, {30, 20, 0}};
  double high_prob = 0.9;
  std::uint64_t seed = 2024;
};

struct Illustration {
  CategoricalDataset data;         // Meal, Drink
  SupplementaryData sup;           // Nationality, Gender
  std::vector<int> global_truth;   // 0 W&J, 1 A&T, 2 W&A
  HierarchicalAssignment truth;    // class-restricted truth
};

/// Small dataset with three food/drink clusters where Western & Alcohol lives
/// only among American males. A member shows its cluster's (meal, drink) pair
/// with probability high_prob and otherwise one of the other five pairs uniformly.
Illustration generate_illustration(const IllustrationSpec& spec = {});

struct StudyCell {
  int q;
  int k;
  int h;
  int r;
  Balance balance;
};

std::string condition_label(const StudyCell& cell);  // "b3", "u5"

struct StudyDesign {
  std::vector<int> q_values = {5, 7};
  std::vector<int> k_values = {2, 3};
  std::vector<int> h_values = {1, 3};
  std::vector<int> r_values = {3, 5};
  std::vector<Balance> balances = {Balance::Balanced, Balance::Unbalanced};
  int replicates = 100;
  int starts = 100;
  std::size_t n_obs = 300;
  std::size_t n_vars = 10;
  double high_prob = 0.8;
  int dims = 2;
  int max_iter = 100;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
  int threads = 0;
  bool timing = false;  // record wall time; off keeps result files byte-stable

  std::vector<StudyCell> cells() const;  // q, K, H, r, balance nesting order
  void validate() const;                 // SpecError
};

struct StudyRow {
  StudyCell cell;
  int replicate;
  std::size_t h;
  std::size_t s;
  std::optional<double> ari;
  std::optional<double> gf;
  std::optional<double> phi;
  double runtime_ms;
  std::string error;
};

/// Runs every (cell, replicate); one row per class. A failed fit yields rows
/// with missing values and the error message instead of aborting.
std::vector<StudyRow> run_study(const StudyDesign& design);

/// Single replicate of one cell, as run_study would produce it.
std::vector<StudyRow> run_replicate(const StudyDesign& design, const StudyCell& cell, std::size_t cell_index,
                                    int replicate);

void write_study_csv(std::ostream& out, const std::vector<StudyRow>& rows);

struct CellSummary {
  StudyCell cell;
  std::size_t n_rows;
  std::size_t n_failed;
  std::optional<double> median_ari;
  std::optional<double> median_gf;
};

std::vector<CellSummary> summarize_study(const std::vector<StudyRow>& rows);
void write_summary_csv(std::ostream& out, const std::vector<CellSummary>& cells);

std::optional<double> median(std::vector<double> values);

}  // namespace mscca
