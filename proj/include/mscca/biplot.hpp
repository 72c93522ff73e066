#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mscca/data_model.hpp"
#include "mscca/solver.hpp"

namespace mscca {

/// Scaled contingency table of row groups (clusters or classes) by categories,
/// its standardized residuals and the biplot coordinates built from them.
///
/// Rows run over (h ascending, s ascending, cluster size descending); a
/// cluster row is labelled with its class label and its size rank ("Male1"
/// is the largest male cluster).
struct BiplotModel {
  Eigen::MatrixXd table;       // P, rows x Q, entries sum to 1
  Eigen::VectorXd row_masses;  // r = P 1
  Eigen::VectorXd col_masses;  // c = P'1
  Eigen::MatrixXd residuals;   // D_r^-1/2 (P - r c') D_c^-1/2

  Eigen::MatrixXd row_coords;  // D_r^1/2 G
  Eigen::MatrixXd col_coords;  // D_c^1/2 B
  double gamma = 1.0;

  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  std::vector<std::size_t> row_sizes;  // members per row group (stacked rows)
  std::vector<int> row_source;         // column of U (or flat class index) behind each row
  std::vector<int> row_class;          // flat class index (over all h) of each row

  // Class points: one per flat class, the mass-weighted mean of its rows.
  std::vector<std::string> class_labels;
  std::vector<std::size_t> class_sizes;
  Eigen::VectorXd class_masses;
  Eigen::MatrixXd class_coords;
};

/// P = (N H m)^-1 U'Z^H with rows ordered as described on BiplotModel.
/// Throws EmptyClusterError on an empty cluster.
BiplotModel contingency(const HierarchicalAssignment& u, const SupplementaryData& sup, const IndicatorView& z);

/// Same table with one row per class: P = (N H m)^-1 V'Z^H.
BiplotModel class_contingency(const SupplementaryData& sup, const IndicatorView& z);

/// Fills `residuals`. Throws MassError on a zero row or column mass.
BiplotModel standardized_residuals(BiplotModel model);

/// row_coords = D_r^1/2 G (G rows in U column order), col_coords = D_c^1/2 B.
/// Also fills the class points. Throws ShapeError on mismatched shapes.
BiplotModel biplot_coordinates(BiplotModel model, const Eigen::MatrixXd& g, const Eigen::MatrixXd& b);

/// Equalizes the mean squared norm of row and column points; inner products
/// are unchanged. Throws DegenerateGeometryError when either side is all zero.
BiplotModel rescale_spread(BiplotModel model);

/// row_coords * col_coords'.
Eigen::MatrixXd reconstruction(const BiplotModel& model);

struct ResidualRecord {
  std::string method;  // "averaging" or "mscca"
  std::string class_label;
  std::string row_label;
  std::string col_label;
  double value;
};

struct ResidualComparison {
  BiplotModel averaging;
  BiplotModel mscca;
  /// Long format; every averaging row is followed by its class's cluster rows.
  std::vector<ResidualRecord> records;
};

ResidualComparison residual_comparison(const CategoricalDataset& data, const SupplementaryData& sup,
                                       const MsccaSolution& solution);

}  // namespace mscca
