#pragma once

#include <Eigen/Dense>

namespace mscca {

struct SymEigResult {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // orthonormal columns aligned with `values`
};

/// J_N M: subtracts every column's mean.
Eigen::MatrixXd center_columns(const Eigen::MatrixXd& m);

/// Top-p eigenpairs of a symmetric matrix.
///
/// Each eigenvector is signed so that its entry of largest magnitude is
/// positive (earliest index wins a tie). Eigenvalues whose relative gap is
/// below the tie tolerance are treated as one eigenspace and their vectors
/// ordered by that pivot index, so identical input gives identical output.
/// Throws SymmetryError if `s` is not symmetric within 1e-10.
SymEigResult sym_eig_top(const Eigen::MatrixXd& s, Eigen::Index p);

/// Flips each column so its largest-magnitude entry is positive.
void fix_signs(Eigen::MatrixXd& vectors);

enum class MassPower { InvSqrt, Sqrt, Inv };
enum class Side { Rows, Cols };

/// Scales the rows (D^a M) or the columns (M D^a) by a power of positive masses.
/// Throws MassError on a non-positive mass.
Eigen::MatrixXd mass_scale(const Eigen::MatrixXd& m, const Eigen::VectorXd& masses, MassPower power, Side side);

}  // namespace mscca
