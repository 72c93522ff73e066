#include "mscca/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mscca/biplot.hpp"

namespace mscca {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;

double choose2(double n) { return n * (n - 1.0) / 2.0; }

// Best assignment of rows to distinct columns of a square overlap matrix.
std::vector<int> best_matching(const std::vector<std::vector<double>>& overlap) {
  const std::size_t k = overlap.size();
  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  if (k <= 8) {
    std::vector<int> best = perm;
    double best_score = -1.0;
    do {
      double score = 0.0;
      for (std::size_t r = 0; r < k; ++r) score += overlap[r][static_cast<std::size_t>(perm[r])];
      if (score > best_score) {
        best_score = score;
        best = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
  }
  std::vector<bool> row_used(k, false), col_used(k, false);
  for (std::size_t step = 0; step < k; ++step) {
    double top = -1.0;
    std::size_t br = 0, bc = 0;
    for (std::size_t r = 0; r < k; ++r)
      for (std::size_t c = 0; c < k; ++c)
        if (!row_used[r] && !col_used[c] && overlap[r][c] > top) {
          top = overlap[r][c];
          br = r;
          bc = c;
        }
    row_used[br] = col_used[bc] = true;
    perm[br] = static_cast<int>(bc);
  }
  return perm;
}

}  // namespace

namespace detail {

double ari_from_table(const std::vector<std::vector<double>>& table) {
  double n = 0.0, index = 0.0, rows = 0.0, cols = 0.0;
  std::vector<double> col_sums(table.empty() ? 0 : table[0].size(), 0.0);
  for (const auto& row : table) {
    double row_sum = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      index += choose2(row[c]);
      row_sum += row[c];
      col_sums[c] += row[c];
    }
    rows += choose2(row_sum);
    n += row_sum;
  }
  for (double c : col_sums) cols += choose2(c);
  const double expected = rows * cols / choose2(n);
  const double max_index = 0.5 * (rows + cols);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

}  // namespace detail

double goodness_of_fit(const MatrixXd& y, const MatrixXd& h) {
  if (y.rows() != h.rows() || y.cols() != h.cols()) throw ShapeError("GF needs equal shapes");
  const double yy = y.squaredNorm();
  const double hh = h.squaredNorm();
  if (yy == 0.0 || hh == 0.0) throw DegenerateGeometryError("GF of an all-zero configuration is undefined");
  const double yh = (y.array() * h.array()).sum();
  return yh * yh / (yy * hh);
}

std::vector<std::vector<std::vector<int>>> match_clusters(const HierarchicalAssignment& fitted,
                                                          const HierarchicalAssignment& truth) {
  if (!(fitted.spec() == truth.spec()) || fitted.n_obs() != truth.n_obs())
    throw ShapeError("fitted and true assignments have different cluster counts");
  const ClusterSpec& spec = truth.spec();
  std::vector<std::vector<std::vector<int>>> out(spec.n_sup());
  for (std::size_t h = 0; h < spec.n_sup(); ++h) {
    out[h].resize(spec.n_classes(h));
    for (std::size_t s = 0; s < spec.n_classes(h); ++s) {
      const auto k = static_cast<std::size_t>(spec.count(h, s));
      std::vector<std::vector<double>> overlap(k, std::vector<double>(k, 0.0));
      for (std::size_t i = 0; i < truth.n_obs(); ++i) {
        if (truth.cls(h, i) != static_cast<int>(s)) continue;
        if (fitted.cls(h, i) != truth.cls(h, i)) throw ShapeError("fitted and true assignments disagree on classes");
        overlap[static_cast<std::size_t>(fitted.cluster(h, i))][static_cast<std::size_t>(truth.cluster(h, i))] += 1.0;
      }
      out[h][s] = best_matching(overlap);
    }
  }
  return out;
}

double gf_against_truth(const MsccaSolution& solution, const HierarchicalAssignment& truth,
                        const SupplementaryData& sup, const IndicatorView& z) {
  const auto match = match_clusters(solution.assignment, truth);
  const BiplotModel true_model = standardized_residuals(contingency(truth, sup, z));
  const BiplotModel fit_model = biplot_coordinates(standardized_residuals(contingency(solution.assignment, sup, z)),
                                                   solution.centers, solution.quantifications);
  const MatrixXd recon = reconstruction(fit_model);

  const ClusterSpec& spec = truth.spec();
  std::vector<Index> true_row(static_cast<std::size_t>(spec.total()));
  for (std::size_t r = 0; r < true_model.row_source.size(); ++r)
    true_row[static_cast<std::size_t>(true_model.row_source[r])] = static_cast<Index>(r);

  MatrixXd aligned(recon.rows(), recon.cols());
  for (std::size_t r = 0; r < fit_model.row_source.size(); ++r) {
    const int col = fit_model.row_source[r];
    // Recover (h, s, k) from the stacked column.
    std::size_t h = 0;
    while (h + 1 < spec.n_sup() && col >= spec.block_offset(h + 1)) ++h;
    std::size_t s = 0;
    const int within = col - spec.block_offset(h);
    while (s + 1 < spec.n_classes(h) && within >= spec.class_offset(h, s + 1)) ++s;
    const int k = within - spec.class_offset(h, s);
    const int true_col = spec.block_offset(h) + spec.class_offset(h, s) + match[h][s][static_cast<std::size_t>(k)];
    aligned.row(true_row[static_cast<std::size_t>(true_col)]) = recon.row(static_cast<Index>(r));
  }
  return goodness_of_fit(true_model.residuals, aligned);
}

KlSelection kl_select(const KlCurve& curve) {
  const std::size_t n = curve.k_values.size();
  if (n < 4) throw SpecError("the KL index needs at least 4 consecutive K values");
  if (curve.w_values.size() != n) throw SpecError("KL curve has mismatched K and W lengths");
  for (std::size_t t = 1; t < n; ++t)
    if (curve.k_values[t] != curve.k_values[t - 1] + 1) throw SpecError("KL curve K values must be consecutive");
  if (!(curve.nu > 0.0)) throw SpecError("KL exponent must be positive");

  const auto diff = [&](std::size_t t) {  // DIFF(k_values[t]), t >= 1
    const double k = curve.k_values[t];
    const double e = 2.0 / curve.nu;
    return std::pow(k - 1.0, e) * curve.w_values[t - 1] - std::pow(k, e) * curve.w_values[t];
  };
  KlSelection out;
  double best = -1.0;
  for (std::size_t t = 1; t + 1 < n; ++t) {
    const double num = std::abs(diff(t));
    const double den = std::abs(diff(t + 1));
    double kl = 0.0;
    if (den > 0.0) kl = num / den;
    else if (num > 0.0) kl = std::numeric_limits<double>::infinity();
    out.k_values.push_back(curve.k_values[t]);
    out.kl_values.push_back(kl);
    if (kl > best) {
      best = kl;
      out.k = curve.k_values[t];
    }
  }
  return out;
}

KlCurve kl_curve(const CategoricalDataset& data, int k_max, const SolverOptions& options, KlExponent exponent) {
  if (k_max < 4) throw SpecError("K_max must be at least 4 for the KL index");
  k_max = std::min(k_max, static_cast<int>(data.n_obs()));
  options.validate(data);
  KlCurve curve;
  curve.nu = exponent == KlExponent::Dims ? options.dims : static_cast<double>(data.n_vars());
  const double scale = static_cast<double>(data.n_obs() * data.n_vars());
  for (int k = 1; k <= k_max; ++k) {
    curve.k_values.push_back(k);
    curve.w_values.push_back(k == 1 ? scale * options.dims : scale * fit_cluster_ca(data, k, options).objective);
  }
  return curve;
}

std::vector<ClassKlChoice> select_k_per_class(const CategoricalDataset& data, const SupplementaryData& sup, int k_max,
                                              const SolverOptions& options, KlExponent exponent) {
  std::vector<ClassKlChoice> out;
  for (std::size_t h = 0; h < sup.n_sup(); ++h)
    for (std::size_t s = 0; s < sup.n_classes(h); ++s) {
      const CategoricalDataset sub = data.subset(sup.members(h, s));
      ClassKlChoice choice{h, s, kl_curve(sub, k_max, options, exponent), {}};
      choice.selection = kl_select(choice.curve);
      out.push_back(std::move(choice));
    }
  return out;
}

ClusterSpec spec_from_choices(const SupplementaryData& sup, const std::vector<ClassKlChoice>& choices) {
  std::vector<std::vector<int>> counts(sup.n_sup());
  for (std::size_t h = 0; h < sup.n_sup(); ++h) counts[h].assign(sup.n_classes(h), 1);
  for (const auto& c : choices) counts[c.h][c.s] = c.selection.k;
  return ClusterSpec(std::move(counts));
}

}  // namespace mscca
