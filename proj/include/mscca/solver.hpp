#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "mscca/data_model.hpp"
#include "mscca/rng.hpp"

namespace mscca {

struct SolverOptions {
  int dims = 2;          // p
  int n_starts = 100;
  int max_iter = 100;
  double epsilon = 1e-8;  // stop once the per-iteration decrease of phi drops below this
  std::uint64_t seed = 0;
  int threads = 0;  // 0: MSCCA_THREADS, else hardware concurrency

  void validate(const CategoricalDataset& data) const;
};

struct MsccaSolution {
  HierarchicalAssignment assignment;  // U
  Eigen::MatrixXd centers;            // G, K x p, rows in stacked-column order of U
  Eigen::MatrixXd quantifications;    // B, Q x p
  double objective = 0.0;             // phi
  double psi = 0.0;
  std::vector<double> objective_trace;
  int start_index = 0;
  int iterations = 0;
  bool converged = false;
  std::uint64_t seed = 0;
};

/// State after one full iteration (B, G, U updates plus repair and the G refresh).
struct IterationState {
  int iteration;
  const HierarchicalAssignment& assignment;
  const Eigen::MatrixXd& centers;
  const Eigen::MatrixXd& quantifications;
  double objective;
};
using IterationObserver = std::function<void(const IterationState&)>;

// --- evaluators -------------------------------------------------------------

/// (1/(NHm)) sum_j ||U G - Z_j^H B_j||^2.
double objective_phi(const HierarchicalAssignment& u, const Eigen::MatrixXd& g, const Eigen::MatrixXd& b,
                     const IndicatorView& z);

/// tr B' Z^H' J U (U'U)^-1 U' J Z^H B. Throws EmptyClusterError on an empty cluster.
double psi_value(const HierarchicalAssignment& u, const Eigen::MatrixXd& b, const IndicatorView& z);

/// (1/(NHm)) sum_j B_j' Z_j^H' Z_j^H B_j, which the quantifications keep at I_p.
Eigen::MatrixXd normalization_gram(const CategoricalDataset& data, const Eigen::MatrixXd& b);

/// Object scores F = (1/m) J_N Z B, N x p.
Eigen::MatrixXd object_scores(const CategoricalDataset& data, const Eigen::MatrixXd& b);

// --- ALS steps --------------------------------------------------------------

/// Random start: inside each class, K_hs distinct shuffled members seed the
/// clusters, the rest pick a cluster uniformly.
HierarchicalAssignment init_random(const SupplementaryData& sup, const ClusterSpec& spec, Rng& rng);

/// Quantification step: top-p eigenvectors of
/// (1/m) D^-1/2 Z^H' J U (U'U)^-1 U' J Z^H D^-1/2, rescaled to meet the
/// normalization constraint.
Eigen::MatrixXd update_B(const HierarchicalAssignment& u, const IndicatorView& z, int p);

/// Cluster centers: per-cluster means of the object scores.
Eigen::MatrixXd update_G(const HierarchicalAssignment& u, const IndicatorView& z, const Eigen::MatrixXd& b);

/// Nearest center inside each observation's class; ties go to the lower index.
HierarchicalAssignment update_U(const Eigen::MatrixXd& f, const Eigen::MatrixXd& g, const SupplementaryData& sup,
                                const ClusterSpec& spec);

/// Fills empty clusters: each takes the class member farthest from its own
/// center among clusters that can spare one.
HierarchicalAssignment repair_empty_clusters(const HierarchicalAssignment& u, const Eigen::MatrixXd& f,
                                             const Eigen::MatrixXd& g);

// --- fitting ----------------------------------------------------------------

/// One ALS run from the start derived from (options.seed, start_index).
MsccaSolution fit_mscca_start(const CategoricalDataset& data, const SupplementaryData& sup, const ClusterSpec& spec,
                              const SolverOptions& options, int start_index,
                              const IterationObserver& observer = {});

/// Multistart ALS; the smallest phi wins, ties go to the earlier start.
MsccaSolution fit_mscca(const CategoricalDataset& data, const SupplementaryData& sup, const ClusterSpec& spec,
                        const SolverOptions& options);

/// Optimal B and G for a fixed assignment (no U step); objective_trace holds
/// the single resulting phi. Throws EmptyClusterError on an empty cluster.
MsccaSolution solve_for_assignment(const CategoricalDataset& data, const HierarchicalAssignment& u, int p);

/// Flat K-cluster version (H = 1, one class).
MsccaSolution fit_cluster_ca(const CategoricalDataset& data, int k, const SolverOptions& options);

// --- linear row constraints -------------------------------------------------

enum class ConstraintKind {
  Identity,     // plain MCA
  Averaging,    // C = V (V'V)^-1 V'
  Removal,      // C = I - V (V'V)^-1 V'
  Membership,   // C = U (U'U)^-1 U' for a fixed assignment
};

struct ConstraintSpec {
  ConstraintKind kind = ConstraintKind::Identity;
  std::optional<SupplementaryData> classes;
  std::optional<HierarchicalAssignment> membership;

  static ConstraintSpec identity() { return {}; }
  static ConstraintSpec averaging(SupplementaryData sup) { return {ConstraintKind::Averaging, std::move(sup), {}}; }
  static ConstraintSpec removal(SupplementaryData sup) { return {ConstraintKind::Removal, std::move(sup), {}}; }
  static ConstraintSpec membership_of(HierarchicalAssignment u) {
    return {ConstraintKind::Membership, {}, std::move(u)};
  }

  /// Stack height H of the rows the constraint acts on (1 for identity).
  std::size_t replicates() const;
};

/// Dense C for small problems and checks.
Eigen::MatrixXd constraint_matrix(const ConstraintSpec& spec, std::size_t n_obs);

struct ConstrainedMcaResult {
  Eigen::MatrixXd scores;           // C F, (N H) x p
  Eigen::MatrixXd group_points;     // class means / cluster centers (empty for identity and removal)
  Eigen::MatrixXd quantifications;  // B, Q x p
  Eigen::VectorXd eigenvalues;      // top-p eigenvalues of the quantification problem
  double objective = 0.0;
  std::size_t replicates = 1;
};

/// Minimizes (1/(N H m)) sum_j ||C F - Z_j^H B_j||^2 under the usual
/// normalization. Throws ProjectorError when V or U has an empty column.
ConstrainedMcaResult fit_constrained_mca(const CategoricalDataset& data, const ConstraintSpec& spec, int p);

/// Worker count for parallel loops: explicit request, else MSCCA_THREADS, else hardware.
int resolve_threads(int requested, int work_items);

}  // namespace mscca
