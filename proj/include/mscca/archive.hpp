#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "mscca/biplot.hpp"
#include "mscca/data_model.hpp"
#include "mscca/errors.hpp"
#include "mscca/solver.hpp"

namespace mscca {

using Json = nlohmann::ordered_json;

inline constexpr const char* kArchiveVersion = "1.0.0";

/// Raised when an export cannot be produced (for example an SVG of a p != 2 solution).
class ExportError : public Error {
 public:
  using Error::Error;
};

/// Value rounded to 15 significant digits; negative zero becomes zero.
double round_sig15(double v);

Json matrix_json(const Eigen::MatrixXd& m);
Json vector_json(const Eigen::VectorXd& v);
/// ShapeError on ragged or non-numeric input.
Eigen::MatrixXd matrix_from_json(const Json& j);

Json dataset_json(const CategoricalDataset& data, const SupplementaryData& sup);

/// Assignment records, G, B, phi, psi and the trace. Cluster labels follow
/// the biplot's size ranking.
Json solution_json(const MsccaSolution& solution, const CategoricalDataset& data, const SupplementaryData& sup,
                   const BiplotModel& model);

/// Rebuilds U from solution_json records.
HierarchicalAssignment assignment_from_json(const Json& solution, const SupplementaryData& sup);

enum class PointSet {
  ClustersClassesCategories,  // MSCCA and cluster CA
  ClassesCategories,          // averaging: the table rows are the classes
  Categories,                 // MCA and the removal variant
};

/// Point list {kind, label, coords, mass, size[, share]} plus gamma.
Json biplot_json(const BiplotModel& model, const CategoricalDataset& data, PointSet which);

/// Category points D_c^1/2 B with c = frequencies / (N m), for variants without row groups.
Json category_points_json(const CategoricalDataset& data, const Eigen::MatrixXd& b);

std::vector<ResidualRecord> residual_records(const BiplotModel& model, const std::string& method);
Json residuals_json(const std::vector<ResidualRecord>& records);

/// point_kind,label,dim1..dimp,mass,size
std::string coords_csv(const Json& biplot);
/// method,class,row,column,value
std::string residuals_csv(const std::vector<ResidualRecord>& records);

/// Scatter of every point with origin axes; cluster label size grows with
/// the cluster's share of its class. ExportError unless the points are 2-D.
std::string render_svg(const Json& biplot);

/// Font size used for a cluster label with the given within-class share.
double cluster_font_size(double share);

}  // namespace mscca
