#include "mscca/biplot.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mscca/errors.hpp"
#include "mscca/numerics.hpp"

namespace mscca {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Index idx(std::size_t v) { return static_cast<Index>(v); }

struct RowGroup {
  std::size_t h;
  std::size_t s;
  int source;
  std::size_t size;
};

// Counts of stacked rows per source group and category.
template <class SourceOf>
MatrixXd group_counts(const CategoricalDataset& data, std::size_t replicates, std::size_t n_sources,
                      SourceOf source_of) {
  MatrixXd counts = MatrixXd::Zero(idx(n_sources), idx(data.n_categories()));
  for (std::size_t h = 0; h < replicates; ++h)
    for (std::size_t i = 0; i < data.n_obs(); ++i) {
      const Index row = source_of(h, i);
      for (std::size_t j = 0; j < data.n_vars(); ++j) counts(row, idx(data.column(i, j))) += 1.0;
    }
  return counts;
}

std::vector<int> class_offsets(const SupplementaryData& sup) {
  std::vector<int> off(sup.n_sup() + 1, 0);
  for (std::size_t h = 0; h < sup.n_sup(); ++h) off[h + 1] = off[h] + static_cast<int>(sup.n_classes(h));
  return off;
}

BiplotModel assemble(const std::vector<RowGroup>& rows, const MatrixXd& counts, const SupplementaryData& sup,
                     const IndicatorView& z, bool rank_labels) {
  const auto& data = z.data();
  const double total = static_cast<double>(data.n_obs() * z.replicates() * data.n_vars());
  const std::vector<int> off = class_offsets(sup);

  BiplotModel model;
  model.table.resize(idx(rows.size()), counts.cols());
  std::size_t rank = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const RowGroup& g = rows[r];
    rank = (r > 0 && rows[r - 1].h == g.h && rows[r - 1].s == g.s) ? rank + 1 : 1;
    model.table.row(idx(r)) = counts.row(g.source) / total;
    const std::string& cls = sup.labels(g.h)[g.s];
    model.row_labels.push_back(rank_labels ? cls + std::to_string(rank) : cls);
    model.row_sizes.push_back(g.size);
    model.row_source.push_back(g.source);
    model.row_class.push_back(off[g.h] + static_cast<int>(g.s));
  }
  model.row_masses = model.table.rowwise().sum();
  model.col_masses = model.table.colwise().sum().transpose();
  model.col_labels = data.category_names();
  for (std::size_t h = 0; h < sup.n_sup(); ++h)
    for (std::size_t s = 0; s < sup.n_classes(h); ++s) {
      model.class_labels.push_back(sup.labels(h)[s]);
      model.class_sizes.push_back(sup.class_size(h, s));
    }
  return model;
}

}  // namespace

BiplotModel contingency(const HierarchicalAssignment& u, const SupplementaryData& sup, const IndicatorView& z) {
  if (u.n_obs() != z.data().n_obs() || u.n_sup() != z.replicates() || sup.n_sup() != u.n_sup())
    throw ShapeError("assignment, supplementary data and indicator view disagree");
  const ClusterSpec& spec = u.spec();
  const auto sizes = u.cluster_sizes();
  std::vector<RowGroup> rows;
  for (std::size_t h = 0; h < spec.n_sup(); ++h)
    for (std::size_t s = 0; s < spec.n_classes(h); ++s) {
      const std::size_t first = rows.size();
      for (int k = 0; k < spec.count(h, s); ++k) {
        const int col = spec.block_offset(h) + spec.class_offset(h, s) + k;
        const std::size_t n = sizes[static_cast<std::size_t>(col)];
        if (n == 0) throw EmptyClusterError("cluster " + std::to_string(col) + " is empty");
        rows.push_back({h, s, col, n});
      }
      std::stable_sort(rows.begin() + static_cast<std::ptrdiff_t>(first), rows.end(),
                       [](const RowGroup& a, const RowGroup& b) { return a.size > b.size; });
    }
  const MatrixXd counts = group_counts(z.data(), u.n_sup(), static_cast<std::size_t>(spec.total()),
                                       [&](std::size_t h, std::size_t i) { return u.column(h, i); });
  return assemble(rows, counts, sup, z, true);
}

BiplotModel class_contingency(const SupplementaryData& sup, const IndicatorView& z) {
  if (sup.n_obs() != z.data().n_obs() || sup.n_sup() != z.replicates())
    throw ShapeError("supplementary data and indicator view disagree");
  const std::vector<int> off = class_offsets(sup);
  std::vector<RowGroup> rows;
  for (std::size_t h = 0; h < sup.n_sup(); ++h)
    for (std::size_t s = 0; s < sup.n_classes(h); ++s)
      rows.push_back({h, s, off[h] + static_cast<int>(s), sup.class_size(h, s)});
  const MatrixXd counts = group_counts(z.data(), sup.n_sup(), static_cast<std::size_t>(off.back()),
                                       [&](std::size_t h, std::size_t i) { return off[h] + sup.cls(h, i); });
  return assemble(rows, counts, sup, z, false);
}

BiplotModel standardized_residuals(BiplotModel model) {
  const MatrixXd dev = model.table - model.row_masses * model.col_masses.transpose();
  model.residuals = mass_scale(mass_scale(dev, model.row_masses, MassPower::InvSqrt, Side::Rows), model.col_masses,
                               MassPower::InvSqrt, Side::Cols);
  return model;
}

BiplotModel biplot_coordinates(BiplotModel model, const MatrixXd& g, const MatrixXd& b) {
  const Index rows = model.table.rows();
  if (b.rows() != model.table.cols() || g.cols() != b.cols() || g.rows() != rows)
    throw ShapeError("G or B does not match the contingency table");
  MatrixXd ordered(rows, g.cols());
  for (Index r = 0; r < rows; ++r) ordered.row(r) = g.row(model.row_source[static_cast<std::size_t>(r)]);
  model.row_coords = mass_scale(ordered, model.row_masses, MassPower::Sqrt, Side::Rows);
  model.col_coords = mass_scale(b, model.col_masses, MassPower::Sqrt, Side::Rows);
  model.gamma = 1.0;

  const std::size_t n_classes = model.class_labels.size();
  model.class_masses = VectorXd::Zero(idx(n_classes));
  MatrixXd weighted = MatrixXd::Zero(idx(n_classes), g.cols());
  for (Index r = 0; r < rows; ++r) {
    const Index c = model.row_class[static_cast<std::size_t>(r)];
    model.class_masses(c) += model.row_masses(r);
    weighted.row(c) += model.row_masses(r) * ordered.row(r);
  }
  model.class_coords = MatrixXd::Zero(idx(n_classes), g.cols());
  for (Index c = 0; c < idx(n_classes); ++c)
    if (model.class_masses(c) > 0) model.class_coords.row(c) = weighted.row(c) / std::sqrt(model.class_masses(c));
  return model;
}

BiplotModel rescale_spread(BiplotModel model) {
  const double rows = model.row_coords.rowwise().squaredNorm().mean();
  const double cols = model.col_coords.rowwise().squaredNorm().mean();
  if (!(rows > 0.0) || !(cols > 0.0)) throw DegenerateGeometryError("cannot rescale: one side has all points at the origin");
  const double gamma = std::pow(cols / rows, 0.25);
  model.row_coords *= gamma;
  model.class_coords *= gamma;
  model.col_coords /= gamma;
  model.gamma *= gamma;
  return model;
}

MatrixXd reconstruction(const BiplotModel& model) { return model.row_coords * model.col_coords.transpose(); }

ResidualComparison residual_comparison(const CategoricalDataset& data, const SupplementaryData& sup,
                                       const MsccaSolution& solution) {
  const IndicatorView z(data, sup.n_sup());
  ResidualComparison out;
  out.averaging = standardized_residuals(class_contingency(sup, z));
  out.mscca = standardized_residuals(contingency(solution.assignment, sup, z));
  const auto emit = [&](const BiplotModel& m, Index r, const char* method) {
    const std::string& cls = out.averaging.class_labels[static_cast<std::size_t>(m.row_class[static_cast<std::size_t>(r)])];
    for (Index c = 0; c < m.residuals.cols(); ++c)
      out.records.push_back({method, cls, m.row_labels[static_cast<std::size_t>(r)],
                             m.col_labels[static_cast<std::size_t>(c)], m.residuals(r, c)});
  };
  for (Index a = 0; a < out.averaging.residuals.rows(); ++a) {
    emit(out.averaging, a, "averaging");
    for (Index r = 0; r < out.mscca.residuals.rows(); ++r)
      if (out.mscca.row_class[static_cast<std::size_t>(r)] == out.averaging.row_class[static_cast<std::size_t>(a)])
        emit(out.mscca, r, "mscca");
  }
  return out;
}

}  // namespace mscca
