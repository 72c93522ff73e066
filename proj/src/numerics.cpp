#include "mscca/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mscca/errors.hpp"
#include "mscca/tolerances.hpp"

namespace mscca {

namespace {

Eigen::Index pivot_index(const Eigen::VectorXd& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (std::abs(v(i)) > std::abs(v(best))) best = i;
  return best;
}

bool tied(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1.0});
  return std::abs(a - b) < Tolerances::eigen_tie_relative_gap * scale;
}

}  // namespace

Eigen::MatrixXd center_columns(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return m;
  Eigen::RowVectorXd mean = m.colwise().mean();
  return m.rowwise() - mean;
}

void fix_signs(Eigen::MatrixXd& vectors) {
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    const Eigen::Index piv = pivot_index(vectors.col(c));
    if (vectors(piv, c) < 0) vectors.col(c) *= -1.0;
  }
}

SymEigResult sym_eig_top(const Eigen::MatrixXd& s, Eigen::Index p) {
  const Eigen::Index n = s.rows();
  if (s.cols() != n) throw ShapeError("sym_eig_top needs a square matrix");
  if (p < 1 || p > n) throw SpecError("requested eigenpair count out of range");
  const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
  if ((s - s.transpose()).cwiseAbs().maxCoeff() > Tolerances::symmetry * scale)
    throw SymmetryError("matrix is not symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (s + s.transpose()));
  if (solver.info() != Eigen::Success) throw Error("eigendecomposition failed");

  // Eigen returns ascending order; flip to descending.
  Eigen::VectorXd values = solver.eigenvalues().reverse();
  Eigen::MatrixXd vectors = solver.eigenvectors().rowwise().reverse();
  fix_signs(vectors);

  // Within each run of tied eigenvalues, order vectors by pivot index.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Eigen::Index start = 0;
  while (start < n) {
    Eigen::Index end = start + 1;
    while (end < n && tied(values(end - 1), values(end))) ++end;
    if (end - start > 1) {
      std::stable_sort(order.begin() + start, order.begin() + end, [&](Eigen::Index a, Eigen::Index b) {
        return pivot_index(vectors.col(a)) < pivot_index(vectors.col(b));
      });
    }
    start = end;
  }

  SymEigResult out;
  out.values.resize(p);
  out.vectors.resize(n, p);
  for (Eigen::Index c = 0; c < p; ++c) {
    out.values(c) = values(order[static_cast<std::size_t>(c)]);
    out.vectors.col(c) = vectors.col(order[static_cast<std::size_t>(c)]);
  }
  return out;
}

Eigen::MatrixXd mass_scale(const Eigen::MatrixXd& m, const Eigen::VectorXd& masses, MassPower power, Side side) {
  const Eigen::Index expected = side == Side::Rows ? m.rows() : m.cols();
  if (masses.size() != expected) throw ShapeError("mass vector length does not match the scaled side");
  if (masses.size() > 0 && masses.minCoeff() <= 0.0) throw MassError("masses must be positive");
  Eigen::VectorXd f(masses.size());
  for (Eigen::Index i = 0; i < masses.size(); ++i) {
    switch (power) {
      case MassPower::InvSqrt: f(i) = 1.0 / std::sqrt(masses(i)); break;
      case MassPower::Sqrt: f(i) = std::sqrt(masses(i)); break;
      case MassPower::Inv: f(i) = 1.0 / masses(i); break;
    }
  }
  if (side == Side::Rows) return f.asDiagonal() * m;
  return m * f.asDiagonal();
}

}  // namespace mscca
