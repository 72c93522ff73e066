#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mscca/archive.hpp"
#include "mscca/data_model.hpp"
#include "mscca/errors.hpp"
#include "mscca/simulation.hpp"

namespace mscca::cli {

/// Bad flags, configuration or input data (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class Method { Mscca, Averaging, Removal, ClusterCa, Mca };

std::string method_name(Method m);
Method parse_method(const std::string& name);  // ConfigError

struct RunConfig {
  std::string input;
  std::vector<std::string> sup_cols;
  std::vector<std::string> k_entries;  // see parse_k_map
  bool k_auto = false;
  int k_max = 6;
  int dims = 2;
  int starts = 100;
  std::uint64_t seed = 0;
  double epsilon = 1e-8;
  int max_iter = 100;
  std::string out = ".";
  std::vector<std::string> exports;  // coords-csv, solution-json, residuals-csv, svg
  Method method = Method::Mscca;

  void validate() const;  // ConfigError
  /// Everything but the output directory, so archives written to different
  /// places compare equal.
  Json echo() const;
};

/// Overlays the keys of a JSON config on `base`; ConfigError on unknown keys or bad types.
/// "k" may be an integer, a list of entries or an object {"class" or "sup:class": K}.
RunConfig config_from_json(const Json& j, RunConfig base = {});

/// Entries are "h:s:K" (h a supplementary column name or 1-based index, s a
/// class label or 1-based index), "s:K" when the class label is unique, or a
/// bare "K" applied to every class not listed. ConfigError on unknown,
/// duplicate or uncovered classes.
ClusterSpec parse_k_map(const std::vector<std::string>& entries, const SupplementaryData& sup);

struct LoadedData {
  CategoricalDataset data;  // every column not named as supplementary
  SupplementaryData sup;    // single all-covering class when no column is named
};

/// ConfigError on unreadable files, missing values, ragged rows or unknown columns.
LoadedData load_input(const std::string& path, const std::vector<std::string>& sup_cols);

/// ConfigError on unknown keys or an invalid design.
StudyDesign design_from_json(const Json& j);

/// Runs one command; `args` excludes the program name.
/// Exit codes: 0 success, 1 verification mismatch, 2 configuration or input,
/// 3 solver specification, 4 export.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mscca::cli
