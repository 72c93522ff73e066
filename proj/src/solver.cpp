#include "mscca/solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>
#include <thread>

#include "mscca/errors.hpp"
#include "mscca/numerics.hpp"

namespace mscca {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Index idx(std::size_t v) { return static_cast<Index>(v); }

// Orthonormal basis (Q x (Q - m)) of the complement of the trivial
// directions D_j^{1/2} 1, one per variable. Those directions carry the
// column means of Z_j B_j and have eigenvalue zero in every target matrix.
MatrixXd trivial_complement(const CategoricalDataset& data) {
  const std::size_t Q = data.n_categories();
  const std::size_t m = data.n_vars();
  MatrixXd w = MatrixXd::Zero(idx(Q), idx(Q - m));
  Index col = 0;
  for (std::size_t j = 0; j < m; ++j) {
    const Index q = idx(data.n_categories(j));
    if (q == 1) continue;
    VectorXd t = data.frequencies().segment(idx(data.offset(j)), q).cwiseSqrt();
    t.normalize();
    const MatrixXd column = t;
    Eigen::HouseholderQR<MatrixXd> qr(column);
    MatrixXd full = qr.householderQ() * MatrixXd::Identity(q, q);
    w.block(idx(data.offset(j)), col, q, q - 1) = full.rightCols(q - 1);
    col += q - 1;
  }
  return w;
}

VectorXd category_means(const CategoricalDataset& data) {
  return data.frequencies() / static_cast<double>(data.n_obs());
}

// Z B, N x p.
MatrixXd score_sums(const CategoricalDataset& data, const MatrixXd& b) {
  MatrixXd zb = MatrixXd::Zero(idx(data.n_obs()), b.cols());
  for (std::size_t i = 0; i < data.n_obs(); ++i)
    for (std::size_t j = 0; j < data.n_vars(); ++j) zb.row(idx(i)) += b.row(idx(data.column(i, j)));
  return zb;
}

// Rows of U'J Z^H (or V'J Z^H) for a grouping of the stacked rows: per group,
// the category counts minus size times the category means.
struct GroupSums {
  MatrixXd sums;                   // groups x Q
  std::vector<std::size_t> sizes;  // members per group
};

template <class GroupOf>
GroupSums group_sums(const CategoricalDataset& data, std::size_t replicates, std::size_t n_groups, GroupOf group_of) {
  GroupSums out{MatrixXd::Zero(idx(n_groups), idx(data.n_categories())), std::vector<std::size_t>(n_groups, 0)};
  for (std::size_t h = 0; h < replicates; ++h)
    for (std::size_t i = 0; i < data.n_obs(); ++i) {
      const auto g = static_cast<std::size_t>(group_of(h, i));
      ++out.sizes[g];
      for (std::size_t j = 0; j < data.n_vars(); ++j) out.sums(idx(g), idx(data.column(i, j))) += 1.0;
    }
  const VectorXd mean = category_means(data);
  for (std::size_t g = 0; g < n_groups; ++g)
    out.sums.row(idx(g)) -= static_cast<double>(out.sizes[g]) * mean.transpose();
  return out;
}

GroupSums cluster_sums(const CategoricalDataset& data, const HierarchicalAssignment& u) {
  return group_sums(data, u.n_sup(), static_cast<std::size_t>(u.spec().total()),
                    [&](std::size_t h, std::size_t i) { return u.column(h, i); });
}

// sum_g s_g s_g' / n_g.
MatrixXd between_groups(const GroupSums& gs) {
  VectorXd inv(gs.sums.rows());
  for (Index g = 0; g < inv.size(); ++g) inv(g) = 1.0 / static_cast<double>(gs.sizes[static_cast<std::size_t>(g)]);
  return gs.sums.transpose() * inv.asDiagonal() * gs.sums;
}

// Z'J Z over the N unstacked rows.
MatrixXd centered_cross_product(const CategoricalDataset& data) {
  const Index Q = idx(data.n_categories());
  MatrixXd c = MatrixXd::Zero(Q, Q);
  for (std::size_t i = 0; i < data.n_obs(); ++i)
    for (std::size_t j = 0; j < data.n_vars(); ++j)
      for (std::size_t l = 0; l < data.n_vars(); ++l) c(idx(data.column(i, j)), idx(data.column(i, l))) += 1.0;
  const VectorXd mean = category_means(data);
  return c - static_cast<double>(data.n_obs()) * mean * mean.transpose();
}

void require_no_empty(const std::vector<std::size_t>& sizes, const char* what) {
  for (std::size_t g = 0; g < sizes.size(); ++g)
    if (sizes[g] == 0) throw EmptyClusterError(std::string(what) + " " + std::to_string(g) + " is empty");
}

struct Quantification {
  MatrixXd b;
  VectorXd eigenvalues;
};

// Shared eigen step: given A = Z^H' J C J Z^H, returns
// B = sqrt(N H m) D^-1/2 B* with B* the top-p eigenvectors of
// (1/m) D^-1/2 A D^-1/2 restricted to the non-trivial subspace.
Quantification quantify(const CategoricalDataset& data, const MatrixXd& w, const MatrixXd& a, std::size_t replicates,
                        int p) {
  const double m = static_cast<double>(data.n_vars());
  const double n = static_cast<double>(data.n_obs());
  const double H = static_cast<double>(replicates);
  if (p < 1 || p > w.cols())
    throw SpecError("dimension p=" + std::to_string(p) + " exceeds the rank bound Q - m = " +
                    std::to_string(w.cols()));
  const VectorXd d_inv_sqrt = (data.frequencies() * H).cwiseSqrt().cwiseInverse();
  const MatrixXd target = (1.0 / m) * d_inv_sqrt.asDiagonal() * a * d_inv_sqrt.asDiagonal();
  MatrixXd reduced = w.transpose() * target * w;
  reduced = 0.5 * (reduced + reduced.transpose());
  SymEigResult eig = sym_eig_top(reduced, p);
  MatrixXd b_star = w * eig.vectors;
  fix_signs(b_star);
  return {std::sqrt(n * H * m) * d_inv_sqrt.asDiagonal() * b_star, eig.values};
}

void check_view(const HierarchicalAssignment& u, const IndicatorView& z) {
  if (u.n_obs() != z.data().n_obs()) throw ShapeError("assignment and data disagree on N");
  if (u.n_sup() != z.replicates()) throw ShapeError("assignment and indicator view disagree on H");
}

// Everything one ALS run needs, computed once per dataset.
class Engine {
 public:
  Engine(const CategoricalDataset& data, const SupplementaryData& sup, const ClusterSpec& spec)
      : data_(data), sup_(sup), spec_(spec), view_(data, sup.n_sup()), w_(trivial_complement(data)) {}

  MatrixXd b_step(const HierarchicalAssignment& u, int p) const {
    GroupSums gs = cluster_sums(data_, u);
    require_no_empty(gs.sizes, "cluster");
    return quantify(data_, w_, between_groups(gs), u.n_sup(), p).b;
  }

  const IndicatorView& view() const { return view_; }
  const SupplementaryData& sup() const { return sup_; }
  const ClusterSpec& spec() const { return spec_; }
  const CategoricalDataset& data() const { return data_; }

 private:
  const CategoricalDataset& data_;
  const SupplementaryData& sup_;
  const ClusterSpec& spec_;
  IndicatorView view_;
  MatrixXd w_;
};

MsccaSolution run_start(const Engine& engine, const SolverOptions& options, int start_index,
                        const IterationObserver& observer) {
  Rng rng(derive_seed(options.seed, static_cast<std::uint64_t>(start_index)));
  HierarchicalAssignment u = init_random(engine.sup(), engine.spec(), rng);

  MsccaSolution sol;
  sol.start_index = start_index;
  sol.seed = options.seed;
  MatrixXd b;
  MatrixXd g;
  for (int t = 0; t < options.max_iter; ++t) {
    b = engine.b_step(u, options.dims);
    g = update_G(u, engine.view(), b);
    const MatrixXd f = object_scores(engine.data(), b);
    HierarchicalAssignment next = update_U(f, g, engine.sup(), engine.spec());
    next = repair_empty_clusters(next, f, g);
    g = update_G(next, engine.view(), b);
    u = std::move(next);
    const double phi = objective_phi(u, g, b, engine.view());
    sol.objective_trace.push_back(phi);
    sol.iterations = t + 1;
    if (observer) observer({t, u, g, b, phi});
    const auto& tr = sol.objective_trace;
    if (tr.size() >= 2 && tr[tr.size() - 2] - tr.back() < options.epsilon) {
      sol.converged = true;
      break;
    }
  }
  sol.assignment = std::move(u);
  sol.centers = std::move(g);
  sol.quantifications = std::move(b);
  sol.objective = sol.objective_trace.empty() ? 0.0 : sol.objective_trace.back();
  sol.psi = sol.objective_trace.empty() ? 0.0 : psi_value(sol.assignment, sol.quantifications, engine.view());
  return sol;
}

void check_inputs(const CategoricalDataset& data, const SupplementaryData& sup, const ClusterSpec& spec,
                  const SolverOptions& options) {
  if (data.n_obs() != sup.n_obs()) throw ShapeError("data and supplementary variables disagree on N");
  spec.validate(sup);
  options.validate(data);
}

}  // namespace

// ---------------------------------------------------------------------------

void SolverOptions::validate(const CategoricalDataset& data) const {
  const auto rank_bound = static_cast<int>(data.n_categories() - data.n_vars());
  if (dims < 1) throw SpecError("p must be at least 1");
  if (dims > rank_bound)
    throw SpecError("p=" + std::to_string(dims) + " exceeds the rank bound Q - m = " + std::to_string(rank_bound));
  if (n_starts < 1) throw SpecError("n_starts must be at least 1");
  if (max_iter < 1) throw SpecError("max_iter must be at least 1");
  if (!(epsilon > 0.0)) throw SpecError("epsilon must be positive");
}

int resolve_threads(int requested, int work_items) {
  int n = requested;
  if (n <= 0) {
    if (const char* env = std::getenv("MSCCA_THREADS")) n = std::atoi(env);
  }
  if (n <= 0) n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return std::max(1, std::min(n, work_items));
}

double objective_phi(const HierarchicalAssignment& u, const MatrixXd& g, const MatrixXd& b, const IndicatorView& z) {
  check_view(u, z);
  const auto& data = z.data();
  if (g.rows() != u.spec().total() || b.rows() != idx(data.n_categories()) || g.cols() != b.cols())
    throw ShapeError("G or B has the wrong shape");
  double total = 0.0;
  for (std::size_t h = 0; h < u.n_sup(); ++h)
    for (std::size_t i = 0; i < data.n_obs(); ++i) {
      const auto center = g.row(u.column(h, i));
      for (std::size_t j = 0; j < data.n_vars(); ++j) total += (center - b.row(idx(data.column(i, j)))).squaredNorm();
    }
  return total / static_cast<double>(data.n_obs() * u.n_sup() * data.n_vars());
}

double psi_value(const HierarchicalAssignment& u, const MatrixXd& b, const IndicatorView& z) {
  check_view(u, z);
  GroupSums gs = cluster_sums(z.data(), u);
  require_no_empty(gs.sizes, "cluster");
  const MatrixXd proj = gs.sums * b;
  double psi = 0.0;
  for (Index g = 0; g < proj.rows(); ++g)
    psi += proj.row(g).squaredNorm() / static_cast<double>(gs.sizes[static_cast<std::size_t>(g)]);
  return psi;
}

MatrixXd normalization_gram(const CategoricalDataset& data, const MatrixXd& b) {
  const double scale = static_cast<double>(data.n_obs() * data.n_vars());
  return b.transpose() * data.frequencies().asDiagonal() * b / scale;
}

MatrixXd object_scores(const CategoricalDataset& data, const MatrixXd& b) {
  return center_columns(score_sums(data, b)) / static_cast<double>(data.n_vars());
}

HierarchicalAssignment init_random(const SupplementaryData& sup, const ClusterSpec& spec, Rng& rng) {
  spec.validate(sup);
  const std::size_t H = sup.n_sup();
  std::vector<int> clusters(sup.n_obs() * H, 0);
  for (std::size_t h = 0; h < H; ++h)
    for (std::size_t s = 0; s < sup.n_classes(h); ++s) {
      const auto k = static_cast<std::size_t>(spec.count(h, s));
      std::vector<std::size_t> members = sup.members(h, s);
      rng.shuffle(std::span<std::size_t>(members));
      for (std::size_t r = 0; r < members.size(); ++r) {
        const std::size_t c = r < k ? r : rng.uniform_index(k);
        clusters[members[r] * H + h] = static_cast<int>(c);
      }
    }
  return HierarchicalAssignment(sup, spec, std::move(clusters));
}

MatrixXd update_B(const HierarchicalAssignment& u, const IndicatorView& z, int p) {
  check_view(u, z);
  GroupSums gs = cluster_sums(z.data(), u);
  require_no_empty(gs.sizes, "cluster");
  return quantify(z.data(), trivial_complement(z.data()), between_groups(gs), u.n_sup(), p).b;
}

MatrixXd update_G(const HierarchicalAssignment& u, const IndicatorView& z, const MatrixXd& b) {
  check_view(u, z);
  const MatrixXd f = object_scores(z.data(), b);
  const auto sizes = u.cluster_sizes();
  require_no_empty(sizes, "cluster");
  MatrixXd g = MatrixXd::Zero(u.spec().total(), b.cols());
  for (std::size_t h = 0; h < u.n_sup(); ++h)
    for (std::size_t i = 0; i < u.n_obs(); ++i) g.row(u.column(h, i)) += f.row(idx(i));
  for (Index k = 0; k < g.rows(); ++k) g.row(k) /= static_cast<double>(sizes[static_cast<std::size_t>(k)]);
  return g;
}

HierarchicalAssignment update_U(const MatrixXd& f, const MatrixXd& g, const SupplementaryData& sup,
                                const ClusterSpec& spec) {
  if (static_cast<std::size_t>(f.rows()) != sup.n_obs() || g.rows() != spec.total() || f.cols() != g.cols())
    throw ShapeError("object scores or centers have the wrong shape");
  const std::size_t H = sup.n_sup();
  std::vector<int> clusters(sup.n_obs() * H, 0);
  for (std::size_t h = 0; h < H; ++h)
    for (std::size_t i = 0; i < sup.n_obs(); ++i) {
      const auto s = static_cast<std::size_t>(sup.cls(h, i));
      const int first = spec.block_offset(h) + spec.class_offset(h, s);
      int best = 0;
      double best_dist = std::numeric_limits<double>::infinity();
      for (int k = 0; k < spec.count(h, s); ++k) {
        const double d = (f.row(idx(i)) - g.row(first + k)).squaredNorm();
        if (d < best_dist) {
          best_dist = d;
          best = k;
        }
      }
      clusters[i * H + h] = best;
    }
  return HierarchicalAssignment(sup, spec, std::move(clusters));
}

HierarchicalAssignment repair_empty_clusters(const HierarchicalAssignment& u, const MatrixXd& f, const MatrixXd& g) {
  HierarchicalAssignment out = u;
  const ClusterSpec& spec = u.spec();
  if (static_cast<std::size_t>(f.rows()) != u.n_obs() || g.rows() != spec.total())
    throw ShapeError("object scores or centers have the wrong shape");
  std::vector<std::size_t> sizes = out.cluster_sizes();
  for (std::size_t h = 0; h < spec.n_sup(); ++h)
    for (std::size_t s = 0; s < spec.n_classes(h); ++s)
      for (int k = 0; k < spec.count(h, s); ++k) {
        const auto empty_col = static_cast<std::size_t>(spec.block_offset(h) + spec.class_offset(h, s) + k);
        if (sizes[empty_col] != 0) continue;
        std::size_t donor = u.n_obs();
        double far = -1.0;
        for (std::size_t i = 0; i < u.n_obs(); ++i) {
          if (out.cls(h, i) != static_cast<int>(s)) continue;
          const auto col = static_cast<std::size_t>(out.column(h, i));
          if (sizes[col] < 2) continue;
          const double d = (f.row(idx(i)) - g.row(idx(col))).squaredNorm();
          if (d > far) {
            far = d;
            donor = i;
          }
        }
        if (donor == u.n_obs())
          throw SpecError("cannot repair an empty cluster: class has fewer members than clusters");
        --sizes[static_cast<std::size_t>(out.column(h, donor))];
        out.set_cluster(h, donor, k);
        ++sizes[empty_col];
      }
  return out;
}

MsccaSolution fit_mscca_start(const CategoricalDataset& data, const SupplementaryData& sup, const ClusterSpec& spec,
                              const SolverOptions& options, int start_index, const IterationObserver& observer) {
  check_inputs(data, sup, spec, options);
  Engine engine(data, sup, spec);
  return run_start(engine, options, start_index, observer);
}

MsccaSolution fit_mscca(const CategoricalDataset& data, const SupplementaryData& sup, const ClusterSpec& spec,
                        const SolverOptions& options) {
  check_inputs(data, sup, spec, options);
  const Engine engine(data, sup, spec);
  std::vector<std::optional<MsccaSolution>> results(static_cast<std::size_t>(options.n_starts));
  const int workers = resolve_threads(options.threads, options.n_starts);
  if (workers == 1) {
    for (int s = 0; s < options.n_starts; ++s) results[static_cast<std::size_t>(s)] = run_start(engine, options, s, {});
  } else {
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    {
      std::vector<std::jthread> pool;
      for (int w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
          try {
            for (int s = next++; s < options.n_starts; s = next++)
              results[static_cast<std::size_t>(s)] = run_start(engine, options, s, {});
          } catch (...) {
            errors[static_cast<std::size_t>(w)] = std::current_exception();
          }
        });
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  std::size_t best = 0;
  for (std::size_t s = 1; s < results.size(); ++s)
    if (results[s]->objective < results[best]->objective) best = s;
  return std::move(*results[best]);
}

MsccaSolution solve_for_assignment(const CategoricalDataset& data, const HierarchicalAssignment& u, int p) {
  const IndicatorView z(data, u.n_sup());
  MsccaSolution sol;
  sol.quantifications = update_B(u, z, p);
  sol.centers = update_G(u, z, sol.quantifications);
  sol.objective = objective_phi(u, sol.centers, sol.quantifications, z);
  sol.psi = psi_value(u, sol.quantifications, z);
  sol.objective_trace = {sol.objective};
  sol.iterations = 0;
  sol.converged = true;
  sol.assignment = u;
  return sol;
}

MsccaSolution fit_cluster_ca(const CategoricalDataset& data, int k, const SolverOptions& options) {
  if (k < 2) throw SpecError("cluster CA needs at least 2 clusters");
  if (static_cast<std::size_t>(k) > data.n_obs()) throw SpecError("more clusters than observations");
  const SupplementaryData sup = SupplementaryData::single_class(data.n_obs());
  return fit_mscca(data, sup, ClusterSpec(std::vector<std::vector<int>>{{k}}), options);
}

// ---------------------------------------------------------------------------
// Linear row constraints

std::size_t ConstraintSpec::replicates() const {
  switch (kind) {
    case ConstraintKind::Identity: return 1;
    case ConstraintKind::Averaging:
    case ConstraintKind::Removal:
      if (!classes) throw ProjectorError("constraint needs supplementary data");
      return classes->n_sup();
    case ConstraintKind::Membership:
      if (!membership) throw ProjectorError("constraint needs a cluster assignment");
      return membership->n_sup();
  }
  return 1;
}

namespace {

// Group id of every stacked row, or empty for the identity constraint.
std::vector<int> stacked_groups(const ConstraintSpec& spec, std::size_t n_obs, std::size_t& n_groups) {
  std::vector<int> groups;
  n_groups = 0;
  if (spec.kind == ConstraintKind::Identity) return groups;
  const std::size_t H = spec.replicates();
  groups.resize(n_obs * H);
  if (spec.kind == ConstraintKind::Membership) {
    const auto& u = *spec.membership;
    if (u.n_obs() != n_obs) throw ShapeError("assignment and data disagree on N");
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t i = 0; i < n_obs; ++i) groups[h * n_obs + i] = u.column(h, i);
    n_groups = static_cast<std::size_t>(u.spec().total());
  } else {
    const auto& sup = *spec.classes;
    if (sup.n_obs() != n_obs) throw ShapeError("supplementary data and data disagree on N");
    int offset = 0;
    for (std::size_t h = 0; h < H; ++h) {
      for (std::size_t i = 0; i < n_obs; ++i) groups[h * n_obs + i] = offset + sup.cls(h, i);
      offset += static_cast<int>(sup.n_classes(h));
    }
    n_groups = static_cast<std::size_t>(offset);
  }
  std::vector<std::size_t> sizes(n_groups, 0);
  for (int g : groups) ++sizes[static_cast<std::size_t>(g)];
  for (std::size_t g = 0; g < n_groups; ++g)
    if (sizes[g] == 0) throw ProjectorError("constraint source has an empty column; (V'V) or (U'U) is singular");
  return groups;
}

}  // namespace

MatrixXd constraint_matrix(const ConstraintSpec& spec, std::size_t n_obs) {
  std::size_t n_groups = 0;
  const std::vector<int> groups = stacked_groups(spec, n_obs, n_groups);
  const Index rows = idx(n_obs * spec.replicates());
  if (spec.kind == ConstraintKind::Identity) return MatrixXd::Identity(rows, rows);
  std::vector<double> sizes(n_groups, 0.0);
  for (int g : groups) sizes[static_cast<std::size_t>(g)] += 1.0;
  MatrixXd c = MatrixXd::Zero(rows, rows);
  for (Index a = 0; a < rows; ++a)
    for (Index b = 0; b < rows; ++b)
      if (groups[static_cast<std::size_t>(a)] == groups[static_cast<std::size_t>(b)])
        c(a, b) = 1.0 / sizes[static_cast<std::size_t>(groups[static_cast<std::size_t>(a)])];
  if (spec.kind == ConstraintKind::Removal) c = MatrixXd::Identity(rows, rows) - c;
  return c;
}

ConstrainedMcaResult fit_constrained_mca(const CategoricalDataset& data, const ConstraintSpec& spec, int p) {
  std::size_t n_groups = 0;
  const std::vector<int> groups = stacked_groups(spec, data.n_obs(), n_groups);
  const std::size_t H = spec.replicates();
  const std::size_t N = data.n_obs();

  MatrixXd a;
  GroupSums gs;
  if (spec.kind == ConstraintKind::Identity) {
    a = centered_cross_product(data);
  } else {
    gs = group_sums(data, H, n_groups,
                    [&](std::size_t h, std::size_t i) { return groups[h * N + i]; });
    a = between_groups(gs);
    if (spec.kind == ConstraintKind::Removal) a = static_cast<double>(H) * centered_cross_product(data) - a;
  }
  Quantification q = quantify(data, trivial_complement(data), a, H, p);

  ConstrainedMcaResult out;
  out.replicates = H;
  out.quantifications = q.b;
  out.eigenvalues = q.eigenvalues;
  const MatrixXd f = object_scores(data, q.b);
  out.scores.resize(idx(N * H), p);
  if (spec.kind == ConstraintKind::Identity) {
    out.scores = f;
  } else {
    out.group_points = MatrixXd::Zero(idx(n_groups), p);
    for (std::size_t r = 0; r < N * H; ++r) out.group_points.row(groups[r]) += f.row(idx(r % N));
    for (std::size_t g = 0; g < n_groups; ++g)
      out.group_points.row(idx(g)) /= static_cast<double>(gs.sizes[g]);
    for (std::size_t r = 0; r < N * H; ++r) {
      const auto mean = out.group_points.row(groups[r]);
      out.scores.row(idx(r)) = spec.kind == ConstraintKind::Removal ? MatrixXd(f.row(idx(r % N)) - mean) : MatrixXd(mean);
    }
    if (spec.kind == ConstraintKind::Removal) out.group_points.resize(0, p);
  }

  double total = 0.0;
  for (std::size_t r = 0; r < N * H; ++r)
    for (std::size_t j = 0; j < data.n_vars(); ++j)
      total += (out.scores.row(idx(r)) - q.b.row(idx(data.column(r % N, j)))).squaredNorm();
  out.objective = total / static_cast<double>(N * H * data.n_vars());
  return out;
}

}  // namespace mscca
