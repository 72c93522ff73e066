#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mscca {

using Table = std::vector<std::vector<std::string>>;

/// N x m integer-coded categorical observations.
///
/// Codes are 0-based and every category of every variable is observed at
/// least once, so the category frequencies (the diagonal of D) are positive.
class CategoricalDataset {
 public:
  CategoricalDataset() = default;

  /// Builds a dataset from codes and per-variable labels. Categories that
  /// never occur are dropped and the remaining codes compacted; one message
  /// per dropped label is appended to `warnings` when it is non-null.
  static CategoricalDataset from_codes(std::vector<std::string> var_names,
                                       std::vector<std::vector<std::string>> labels,
                                       const std::vector<std::vector<int>>& codes,
                                       std::vector<std::string>* warnings = nullptr);

  std::size_t n_obs() const { return n_obs_; }
  std::size_t n_vars() const { return var_names_.size(); }
  std::size_t n_categories() const { return total_; }  // Q
  std::size_t n_categories(std::size_t j) const { return labels_[j].size(); }  // q_j
  std::size_t offset(std::size_t j) const { return offsets_[j]; }

  int code(std::size_t i, std::size_t j) const { return codes_[i * n_vars() + j]; }
  /// Column of observation i's category for variable j in the Q-wide indicator.
  std::size_t column(std::size_t i, std::size_t j) const {
    return offsets_[j] + static_cast<std::size_t>(code(i, j));
  }

  const std::vector<std::string>& var_names() const { return var_names_; }
  const std::vector<std::string>& labels(std::size_t j) const { return labels_[j]; }
  /// "variable:label" for each of the Q categories.
  std::vector<std::string> category_names() const;

  /// Category counts, length Q.
  const Eigen::VectorXd& frequencies() const { return freq_; }

  /// Observations in `rows`, with categories absent from the subset dropped.
  CategoricalDataset subset(const std::vector<std::size_t>& rows,
                            std::vector<std::string>* warnings = nullptr) const;

 private:
  std::size_t n_obs_ = 0;
  std::size_t total_ = 0;
  std::vector<std::string> var_names_;
  std::vector<std::vector<std::string>> labels_;
  std::vector<std::size_t> offsets_;
  std::vector<int> codes_;  // row-major N x m
  Eigen::VectorXd freq_;
};

/// N x H class memberships of the supplementary variables.
class SupplementaryData {
 public:
  SupplementaryData() = default;

  /// Classes with no member are dropped and the codes compacted.
  static SupplementaryData from_codes(std::vector<std::string> var_names,
                                      std::vector<std::vector<std::string>> labels,
                                      const std::vector<std::vector<int>>& codes,
                                      std::vector<std::string>* warnings = nullptr);

  /// Single supplementary variable with a single class covering every row.
  static SupplementaryData single_class(std::size_t n_obs);

  std::size_t n_obs() const { return n_obs_; }
  std::size_t n_sup() const { return var_names_.size(); }  // H
  std::size_t n_classes(std::size_t h) const { return labels_[h].size(); }  // r_h
  std::size_t total_classes() const;
  int cls(std::size_t h, std::size_t i) const { return codes_[i * n_sup() + h]; }
  std::size_t class_size(std::size_t h, std::size_t s) const { return sizes_[h][s]; }
  std::vector<std::size_t> members(std::size_t h, std::size_t s) const;

  const std::vector<std::string>& var_names() const { return var_names_; }
  const std::vector<std::string>& labels(std::size_t h) const { return labels_[h]; }

 private:
  std::size_t n_obs_ = 0;
  std::vector<std::string> var_names_;
  std::vector<std::vector<std::string>> labels_;
  std::vector<int> codes_;  // row-major N x H
  std::vector<std::vector<std::size_t>> sizes_;
};

/// Number of clusters K_hs for every class s of every supplementary variable h.
class ClusterSpec {
 public:
  ClusterSpec() = default;
  explicit ClusterSpec(std::vector<std::vector<int>> counts);

  /// Same K for every class.
  static ClusterSpec uniform(const SupplementaryData& sup, int k);

  std::size_t n_sup() const { return counts_.size(); }
  std::size_t n_classes(std::size_t h) const { return counts_[h].size(); }
  int count(std::size_t h, std::size_t s) const { return counts_[h][s]; }
  int k_h(std::size_t h) const;
  int total() const;  // K
  /// First column of U_h belonging to class s.
  int class_offset(std::size_t h, std::size_t s) const { return class_offsets_[h][s]; }
  /// First column of U belonging to supplementary variable h.
  int block_offset(std::size_t h) const { return block_offsets_[h]; }
  const std::vector<std::vector<int>>& counts() const { return counts_; }

  /// Throws SpecError unless the shape matches `sup`, every K_hs >= 1 and no
  /// class has fewer members than clusters.
  void validate(const SupplementaryData& sup) const;

  bool operator==(const ClusterSpec& other) const { return counts_ == other.counts_; }

 private:
  std::vector<std::vector<int>> counts_;
  std::vector<std::vector<int>> class_offsets_;
  std::vector<int> block_offsets_;
};

/// Two-level cluster membership: per (h, i), the observed class and a cluster
/// index inside that class. Clusters may be empty until repaired.
class HierarchicalAssignment {
 public:
  HierarchicalAssignment() = default;
  HierarchicalAssignment(const SupplementaryData& sup, ClusterSpec spec,
                         std::vector<int> clusters);

  std::size_t n_obs() const { return n_obs_; }
  std::size_t n_sup() const { return spec_.n_sup(); }
  const ClusterSpec& spec() const { return spec_; }

  int cls(std::size_t h, std::size_t i) const { return classes_[i * n_sup() + h]; }
  int cluster(std::size_t h, std::size_t i) const { return clusters_[i * n_sup() + h]; }
  void set_cluster(std::size_t h, std::size_t i, int k);
  /// Column of U_h that (h, i) occupies.
  int block_column(std::size_t h, std::size_t i) const {
    return spec_.class_offset(h, static_cast<std::size_t>(cls(h, i))) + cluster(h, i);
  }
  /// Column of the stacked U that (h, i) occupies.
  int column(std::size_t h, std::size_t i) const {
    return spec_.block_offset(h) + block_column(h, i);
  }

  /// Members of every cluster, indexed by the stacked column.
  std::vector<std::size_t> cluster_sizes() const;
  bool has_empty_cluster() const;
  /// Cluster labels of supplementary variable h (the U_h column) per observation.
  std::vector<int> block_labels(std::size_t h) const;

  Eigen::MatrixXd dense_block(std::size_t h) const;  // U_h, N x K_h
  Eigen::MatrixXd dense() const;                     // U, NH x K

  bool operator==(const HierarchicalAssignment& other) const = default;

 private:
  std::size_t n_obs_ = 0;
  ClusterSpec spec_;
  std::vector<int> classes_;
  std::vector<int> clusters_;
};

/// Logical indicator matrices built from a dataset replicated H times.
class IndicatorView {
 public:
  IndicatorView(const CategoricalDataset& data, std::size_t h);

  const CategoricalDataset& data() const { return *data_; }
  std::size_t replicates() const { return h_; }

  Eigen::MatrixXd z_block(std::size_t j) const;          // Z_j, N x q_j
  Eigen::MatrixXd z() const;                             // Z, N x Q
  Eigen::MatrixXd z_block_stacked(std::size_t j) const;  // Z_j^H, NH x q_j
  Eigen::MatrixXd z_stacked() const;                     // Z^H, NH x Q
  /// Diagonal of D = Z~'Z~: category counts times H.
  Eigen::VectorXd masses() const;

 private:
  const CategoricalDataset* data_;
  std::size_t h_;
};

/// Table of category strings -> dataset, coding labels by first appearance.
CategoricalDataset encode_dataset(const Table& raw, std::vector<std::string> var_names = {});
Table decode_dataset(const CategoricalDataset& data);

/// Same coding rules for supplementary columns.
SupplementaryData encode_supplementary(const Table& raw, std::vector<std::string> var_names = {});

/// Builds the assignment from a cluster-index callback; throws AssignmentError
/// when cluster_of(h, i) is outside [0, K_{h, class(h, i)}).
HierarchicalAssignment build_assignment(const SupplementaryData& sup, const ClusterSpec& spec,
                                        const std::function<int(std::size_t, std::size_t)>& cluster_of);

struct AssignmentViolation {
  std::size_t h;
  std::size_t i;
  std::string reason;
};

/// Checks dense U_h blocks against the hierarchical constraint.
std::vector<AssignmentViolation> validate_assignment(const std::vector<Eigen::MatrixXd>& blocks,
                                                     const ClusterSpec& spec,
                                                     const SupplementaryData& sup);
std::vector<AssignmentViolation> validate_assignment(const HierarchicalAssignment& u,
                                                     const SupplementaryData& sup);

IndicatorView stacked_indicators(const CategoricalDataset& data, std::size_t h);

}  // namespace mscca
