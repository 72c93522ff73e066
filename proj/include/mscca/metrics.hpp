#pragma once

#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mscca/data_model.hpp"
#include "mscca/errors.hpp"
#include "mscca/solver.hpp"

namespace mscca {

namespace detail {
double ari_from_table(const std::vector<std::vector<double>>& table);
}

/// Hubert-Arabie adjusted Rand index. Labels may be any ordered type.
/// Two partitions that are both all-in-one or both all-singletons score 1.
template <class A, class B>
double adjusted_rand_index(std::span<const A> a, std::span<const B> b) {
  if (a.size() != b.size()) throw ShapeError("partitions have different lengths");
  if (a.size() < 2) throw ShapeError("ARI needs at least two elements");
  std::map<A, std::size_t> ra;
  std::map<B, std::size_t> rb;
  for (const auto& x : a) ra.emplace(x, ra.size());
  for (const auto& x : b) rb.emplace(x, rb.size());
  std::vector<std::vector<double>> table(ra.size(), std::vector<double>(rb.size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i) table[ra.at(a[i])][rb.at(b[i])] += 1.0;
  return detail::ari_from_table(table);
}

template <class A, class B>
double adjusted_rand_index(const std::vector<A>& a, const std::vector<B>& b) {
  return adjusted_rand_index(std::span<const A>(a), std::span<const B>(b));
}

/// Squared congruence tr^2(Y'H) / (tr(Y'Y) tr(H'H)).
/// Throws ShapeError on unequal shapes, DegenerateGeometryError on an all-zero input.
double goodness_of_fit(const Eigen::MatrixXd& y, const Eigen::MatrixXd& h);

/// GF between the true standardized residuals and the solution's rank-p
/// reconstruction D_r^1/2 G B' D_c^1/2, after matching each class's fitted
/// clusters to its true clusters by maximum overlap. Both assignments must
/// share the cluster counts.
double gf_against_truth(const MsccaSolution& solution, const HierarchicalAssignment& truth,
                        const SupplementaryData& sup, const IndicatorView& z);

/// Fitted cluster k of class (h, s) -> true cluster, maximizing the number of
/// shared members (exhaustive for up to 8 clusters, greedy beyond).
std::vector<std::vector<std::vector<int>>> match_clusters(const HierarchicalAssignment& fitted,
                                                          const HierarchicalAssignment& truth);

enum class KlExponent { Dims, Vars };

struct KlCurve {
  std::vector<int> k_values;     // consecutive, ascending
  std::vector<double> w_values;  // within dispersion N H m phi per K
  double nu = 2.0;
};

struct KlSelection {
  int k = 0;
  std::vector<int> k_values;     // interior K values
  std::vector<double> kl_values;
};

/// DIFF(K) = (K-1)^{2/nu} W_{K-1} - K^{2/nu} W_K, KL(K) = |DIFF(K)| / |DIFF(K+1)|.
/// The interior K with the largest KL wins; ties go to the smaller K.
/// Throws SpecError for fewer than 4 points or non-consecutive K.
KlSelection kl_select(const KlCurve& curve);

/// Cluster-CA dispersion curve for K = 1..k_max. W_1 = N m p in closed form
/// because a single cluster explains nothing.
KlCurve kl_curve(const CategoricalDataset& data, int k_max, const SolverOptions& options,
                 KlExponent exponent = KlExponent::Dims);

struct ClassKlChoice {
  std::size_t h;
  std::size_t s;
  KlCurve curve;
  KlSelection selection;
};

/// Per class: cluster CA on the class-restricted data, K chosen by kl_select.
/// k_max is capped by the class size.
std::vector<ClassKlChoice> select_k_per_class(const CategoricalDataset& data, const SupplementaryData& sup, int k_max,
                                              const SolverOptions& options,
                                              KlExponent exponent = KlExponent::Dims);

/// ClusterSpec built from the per-class choices.
ClusterSpec spec_from_choices(const SupplementaryData& sup, const std::vector<ClassKlChoice>& choices);

}  // namespace mscca
