#include "mscca/data_model.hpp"

#include <numeric>
#include <unordered_map>

#include "mscca/errors.hpp"

namespace mscca {

namespace {

// Drops labels that never occur in a column and renumbers the codes so the
// surviving labels keep their relative order.
void compact_column(std::vector<std::vector<int>>& codes, std::size_t col,
                    std::vector<std::string>& labels, const std::string& var_name,
                    std::vector<std::string>* warnings) {
  std::vector<std::size_t> counts(labels.size(), 0);
  for (const auto& row : codes) {
    const int c = row[col];
    if (c < 0 || static_cast<std::size_t>(c) >= labels.size())
      throw ShapeError("code " + std::to_string(c) + " out of range for variable '" + var_name + "'");
    ++counts[static_cast<std::size_t>(c)];
  }
  std::vector<int> remap(labels.size(), -1);
  std::vector<std::string> kept;
  for (std::size_t l = 0; l < labels.size(); ++l) {
    if (counts[l] == 0) {
      if (warnings) warnings->push_back("dropping unused category '" + labels[l] + "' of '" + var_name + "'");
      continue;
    }
    remap[l] = static_cast<int>(kept.size());
    kept.push_back(labels[l]);
  }
  if (kept.size() == labels.size()) return;
  for (auto& row : codes) row[col] = remap[static_cast<std::size_t>(row[col])];
  labels = std::move(kept);
}

void check_rectangular(const std::vector<std::vector<int>>& codes, std::size_t width) {
  for (std::size_t i = 0; i < codes.size(); ++i)
    if (codes[i].size() != width)
      throw ShapeError("row " + std::to_string(i) + " has " + std::to_string(codes[i].size()) +
                       " entries, expected " + std::to_string(width));
}

std::vector<std::string> default_names(std::size_t n, const char* prefix) {
  std::vector<std::string> names(n);
  for (std::size_t j = 0; j < n; ++j) names[j] = prefix + std::to_string(j + 1);
  return names;
}

// First-appearance coding shared by the dataset and supplementary encoders.
std::pair<std::vector<std::vector<int>>, std::vector<std::vector<std::string>>> code_table(const Table& raw) {
  if (raw.empty()) throw ShapeError("empty table");
  const std::size_t width = raw.front().size();
  if (width == 0) throw ShapeError("table has no columns");
  std::vector<std::unordered_map<std::string, int>> seen(width);
  std::vector<std::vector<std::string>> labels(width);
  std::vector<std::vector<int>> codes(raw.size(), std::vector<int>(width));
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i].size() != width)
      throw ShapeError("row " + std::to_string(i) + " has " + std::to_string(raw[i].size()) +
                       " cells, expected " + std::to_string(width));
    for (std::size_t j = 0; j < width; ++j) {
      const std::string& cell = raw[i][j];
      if (cell.empty())
        throw MissingValueError("empty cell at row " + std::to_string(i) + ", column " + std::to_string(j));
      auto [it, inserted] = seen[j].try_emplace(cell, static_cast<int>(labels[j].size()));
      if (inserted) labels[j].push_back(cell);
      codes[i][j] = it->second;
    }
  }
  return {std::move(codes), std::move(labels)};
}

}  // namespace

// ---------------------------------------------------------------------------
// CategoricalDataset

CategoricalDataset CategoricalDataset::from_codes(std::vector<std::string> var_names,
                                                  std::vector<std::vector<std::string>> labels,
                                                  const std::vector<std::vector<int>>& codes,
                                                  std::vector<std::string>* warnings) {
  if (var_names.size() != labels.size()) throw ShapeError("variable names and label lists differ in length");
  if (codes.empty()) throw ShapeError("dataset has no observations");
  const std::size_t m = labels.size();
  if (m == 0) throw ShapeError("dataset has no variables");
  check_rectangular(codes, m);

  auto work = codes;
  for (std::size_t j = 0; j < m; ++j) compact_column(work, j, labels[j], var_names[j], warnings);

  CategoricalDataset ds;
  ds.n_obs_ = work.size();
  ds.var_names_ = std::move(var_names);
  ds.labels_ = std::move(labels);
  ds.offsets_.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    ds.offsets_[j] = ds.total_;
    ds.total_ += ds.labels_[j].size();
  }
  ds.codes_.reserve(ds.n_obs_ * m);
  for (const auto& row : work) ds.codes_.insert(ds.codes_.end(), row.begin(), row.end());
  ds.freq_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ds.total_));
  for (std::size_t i = 0; i < ds.n_obs_; ++i)
    for (std::size_t j = 0; j < m; ++j) ds.freq_(static_cast<Eigen::Index>(ds.column(i, j))) += 1.0;
  return ds;
}

std::vector<std::string> CategoricalDataset::category_names() const {
  std::vector<std::string> names;
  names.reserve(total_);
  for (std::size_t j = 0; j < n_vars(); ++j)
    for (const auto& l : labels_[j]) names.push_back(var_names_[j] + ":" + l);
  return names;
}

CategoricalDataset CategoricalDataset::subset(const std::vector<std::size_t>& rows,
                                              std::vector<std::string>* warnings) const {
  std::vector<std::vector<int>> codes;
  codes.reserve(rows.size());
  for (std::size_t i : rows) {
    if (i >= n_obs_) throw ShapeError("subset row out of range");
    codes.emplace_back(codes_.begin() + static_cast<std::ptrdiff_t>(i * n_vars()),
                       codes_.begin() + static_cast<std::ptrdiff_t>((i + 1) * n_vars()));
  }
  return from_codes(var_names_, labels_, codes, warnings);
}

// ---------------------------------------------------------------------------
// SupplementaryData

SupplementaryData SupplementaryData::from_codes(std::vector<std::string> var_names,
                                                std::vector<std::vector<std::string>> labels,
                                                const std::vector<std::vector<int>>& codes,
                                                std::vector<std::string>* warnings) {
  if (var_names.size() != labels.size()) throw ShapeError("variable names and label lists differ in length");
  if (codes.empty()) throw ShapeError("supplementary data has no observations");
  const std::size_t H = labels.size();
  if (H == 0) throw ShapeError("no supplementary variables");
  check_rectangular(codes, H);

  auto work = codes;
  for (std::size_t h = 0; h < H; ++h) compact_column(work, h, labels[h], var_names[h], warnings);

  SupplementaryData sup;
  sup.n_obs_ = work.size();
  sup.var_names_ = std::move(var_names);
  sup.labels_ = std::move(labels);
  sup.codes_.reserve(sup.n_obs_ * H);
  for (const auto& row : work) sup.codes_.insert(sup.codes_.end(), row.begin(), row.end());
  sup.sizes_.resize(H);
  for (std::size_t h = 0; h < H; ++h) {
    sup.sizes_[h].assign(sup.labels_[h].size(), 0);
    for (std::size_t i = 0; i < sup.n_obs_; ++i) ++sup.sizes_[h][static_cast<std::size_t>(sup.cls(h, i))];
  }
  return sup;
}

SupplementaryData SupplementaryData::single_class(std::size_t n_obs) {
  return from_codes({"all"}, {{"all"}}, std::vector<std::vector<int>>(n_obs, std::vector<int>{0}));
}

std::size_t SupplementaryData::total_classes() const {
  std::size_t total = 0;
  for (const auto& l : labels_) total += l.size();
  return total;
}

std::vector<std::size_t> SupplementaryData::members(std::size_t h, std::size_t s) const {
  std::vector<std::size_t> out;
  out.reserve(sizes_[h][s]);
  for (std::size_t i = 0; i < n_obs_; ++i)
    if (cls(h, i) == static_cast<int>(s)) out.push_back(i);
  return out;
}

// ---------------------------------------------------------------------------
// ClusterSpec

ClusterSpec::ClusterSpec(std::vector<std::vector<int>> counts) : counts_(std::move(counts)) {
  class_offsets_.resize(counts_.size());
  block_offsets_.resize(counts_.size());
  int block = 0;
  for (std::size_t h = 0; h < counts_.size(); ++h) {
    block_offsets_[h] = block;
    int off = 0;
    class_offsets_[h].resize(counts_[h].size());
    for (std::size_t s = 0; s < counts_[h].size(); ++s) {
      class_offsets_[h][s] = off;
      off += counts_[h][s];
    }
    block += off;
  }
}

ClusterSpec ClusterSpec::uniform(const SupplementaryData& sup, int k) {
  std::vector<std::vector<int>> counts(sup.n_sup());
  for (std::size_t h = 0; h < sup.n_sup(); ++h) counts[h].assign(sup.n_classes(h), k);
  return ClusterSpec(std::move(counts));
}

int ClusterSpec::k_h(std::size_t h) const {
  return std::accumulate(counts_[h].begin(), counts_[h].end(), 0);
}

int ClusterSpec::total() const {
  int k = 0;
  for (std::size_t h = 0; h < counts_.size(); ++h) k += k_h(h);
  return k;
}

void ClusterSpec::validate(const SupplementaryData& sup) const {
  if (counts_.size() != sup.n_sup())
    throw SpecError("cluster spec covers " + std::to_string(counts_.size()) + " supplementary variables, data has " +
                    std::to_string(sup.n_sup()));
  for (std::size_t h = 0; h < counts_.size(); ++h) {
    if (counts_[h].size() != sup.n_classes(h))
      throw SpecError("cluster spec for '" + sup.var_names()[h] + "' lists " + std::to_string(counts_[h].size()) +
                      " classes, data has " + std::to_string(sup.n_classes(h)));
    for (std::size_t s = 0; s < counts_[h].size(); ++s) {
      const std::string where = sup.var_names()[h] + ":" + sup.labels(h)[s];
      if (counts_[h][s] < 1) throw SpecError("K for " + where + " must be at least 1");
      if (static_cast<std::size_t>(counts_[h][s]) > sup.class_size(h, s))
        throw SpecError("K=" + std::to_string(counts_[h][s]) + " for " + where + " exceeds its " +
                        std::to_string(sup.class_size(h, s)) + " members");
    }
  }
}

// ---------------------------------------------------------------------------
// HierarchicalAssignment

HierarchicalAssignment::HierarchicalAssignment(const SupplementaryData& sup, ClusterSpec spec,
                                               std::vector<int> clusters)
    : n_obs_(sup.n_obs()), spec_(std::move(spec)), clusters_(std::move(clusters)) {
  const std::size_t H = sup.n_sup();
  if (spec_.n_sup() != H) throw ShapeError("cluster spec and supplementary data disagree on H");
  if (clusters_.size() != n_obs_ * H) throw ShapeError("cluster vector must hold N*H entries");
  classes_.resize(n_obs_ * H);
  for (std::size_t i = 0; i < n_obs_; ++i)
    for (std::size_t h = 0; h < H; ++h) {
      const int s = sup.cls(h, i);
      if (static_cast<std::size_t>(s) >= spec_.n_classes(h)) throw ShapeError("class index outside cluster spec");
      classes_[i * H + h] = s;
      const int k = clusters_[i * H + h];
      if (k < 0 || k >= spec_.count(h, static_cast<std::size_t>(s)))
        throw AssignmentError("cluster " + std::to_string(k) + " out of range for observation " +
                              std::to_string(i) + " of supplementary variable " + std::to_string(h));
    }
}

void HierarchicalAssignment::set_cluster(std::size_t h, std::size_t i, int k) {
  const int s = cls(h, i);
  if (k < 0 || k >= spec_.count(h, static_cast<std::size_t>(s)))
    throw AssignmentError("cluster " + std::to_string(k) + " out of range");
  clusters_[i * n_sup() + h] = k;
}

std::vector<std::size_t> HierarchicalAssignment::cluster_sizes() const {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(spec_.total()), 0);
  for (std::size_t i = 0; i < n_obs_; ++i)
    for (std::size_t h = 0; h < n_sup(); ++h) ++sizes[static_cast<std::size_t>(column(h, i))];
  return sizes;
}

bool HierarchicalAssignment::has_empty_cluster() const {
  for (std::size_t n : cluster_sizes())
    if (n == 0) return true;
  return false;
}

std::vector<int> HierarchicalAssignment::block_labels(std::size_t h) const {
  std::vector<int> out(n_obs_);
  for (std::size_t i = 0; i < n_obs_; ++i) out[i] = block_column(h, i);
  return out;
}

Eigen::MatrixXd HierarchicalAssignment::dense_block(std::size_t h) const {
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_obs_), spec_.k_h(h));
  for (std::size_t i = 0; i < n_obs_; ++i) u(static_cast<Eigen::Index>(i), block_column(h, i)) = 1.0;
  return u;
}

Eigen::MatrixXd HierarchicalAssignment::dense() const {
  const auto N = static_cast<Eigen::Index>(n_obs_);
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(N * static_cast<Eigen::Index>(n_sup()), spec_.total());
  for (std::size_t h = 0; h < n_sup(); ++h)
    u.block(static_cast<Eigen::Index>(h) * N, spec_.block_offset(h), N, spec_.k_h(h)) = dense_block(h);
  return u;
}

// ---------------------------------------------------------------------------
// IndicatorView

IndicatorView::IndicatorView(const CategoricalDataset& data, std::size_t h) : data_(&data), h_(h) {
  if (h == 0) throw ShapeError("H must be at least 1");
}

Eigen::MatrixXd IndicatorView::z_block(std::size_t j) const {
  const auto N = static_cast<Eigen::Index>(data_->n_obs());
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(N, static_cast<Eigen::Index>(data_->n_categories(j)));
  for (Eigen::Index i = 0; i < N; ++i) z(i, data_->code(static_cast<std::size_t>(i), j)) = 1.0;
  return z;
}

Eigen::MatrixXd IndicatorView::z() const {
  const auto N = static_cast<Eigen::Index>(data_->n_obs());
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(N, static_cast<Eigen::Index>(data_->n_categories()));
  for (std::size_t i = 0; i < data_->n_obs(); ++i)
    for (std::size_t j = 0; j < data_->n_vars(); ++j)
      z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(data_->column(i, j))) = 1.0;
  return z;
}

Eigen::MatrixXd IndicatorView::z_block_stacked(std::size_t j) const {
  return z_block(j).replicate(static_cast<Eigen::Index>(h_), 1);
}

Eigen::MatrixXd IndicatorView::z_stacked() const { return z().replicate(static_cast<Eigen::Index>(h_), 1); }

Eigen::VectorXd IndicatorView::masses() const { return data_->frequencies() * static_cast<double>(h_); }

// ---------------------------------------------------------------------------
// Free functions

CategoricalDataset encode_dataset(const Table& raw, std::vector<std::string> var_names) {
  auto [codes, labels] = code_table(raw);
  if (var_names.empty()) var_names = default_names(labels.size(), "V");
  if (var_names.size() != labels.size()) throw ShapeError("variable name count does not match column count");
  return CategoricalDataset::from_codes(std::move(var_names), std::move(labels), codes);
}

Table decode_dataset(const CategoricalDataset& data) {
  Table out(data.n_obs(), std::vector<std::string>(data.n_vars()));
  for (std::size_t i = 0; i < data.n_obs(); ++i)
    for (std::size_t j = 0; j < data.n_vars(); ++j)
      out[i][j] = data.labels(j)[static_cast<std::size_t>(data.code(i, j))];
  return out;
}

SupplementaryData encode_supplementary(const Table& raw, std::vector<std::string> var_names) {
  auto [codes, labels] = code_table(raw);
  if (var_names.empty()) var_names = default_names(labels.size(), "S");
  if (var_names.size() != labels.size()) throw ShapeError("variable name count does not match column count");
  return SupplementaryData::from_codes(std::move(var_names), std::move(labels), codes);
}

HierarchicalAssignment build_assignment(const SupplementaryData& sup, const ClusterSpec& spec,
                                        const std::function<int(std::size_t, std::size_t)>& cluster_of) {
  const std::size_t H = sup.n_sup();
  std::vector<int> clusters(sup.n_obs() * H);
  for (std::size_t i = 0; i < sup.n_obs(); ++i)
    for (std::size_t h = 0; h < H; ++h) clusters[i * H + h] = cluster_of(h, i);
  return HierarchicalAssignment(sup, spec, std::move(clusters));
}

std::vector<AssignmentViolation> validate_assignment(const std::vector<Eigen::MatrixXd>& blocks,
                                                     const ClusterSpec& spec,
                                                     const SupplementaryData& sup) {
  if (blocks.size() != sup.n_sup() || spec.n_sup() != sup.n_sup())
    throw ShapeError("assignment blocks do not match the supplementary variables");
  std::vector<AssignmentViolation> out;
  for (std::size_t h = 0; h < blocks.size(); ++h) {
    const auto& u = blocks[h];
    if (static_cast<std::size_t>(u.rows()) != sup.n_obs() || u.cols() != spec.k_h(h))
      throw ShapeError("U_h has the wrong shape");
    for (std::size_t i = 0; i < sup.n_obs(); ++i) {
      const auto s_obs = static_cast<std::size_t>(sup.cls(h, i));
      int inside = 0;
      bool bad_value = false;
      bool outside = false;
      for (std::size_t s = 0; s < spec.n_classes(h); ++s)
        for (int k = 0; k < spec.count(h, s); ++k) {
          const double v = u(static_cast<Eigen::Index>(i), spec.class_offset(h, s) + k);
          if (v != 0.0 && v != 1.0) bad_value = true;
          if (v == 0.0) continue;
          if (s == s_obs)
            ++inside;
          else
            outside = true;
        }
      if (bad_value)
        out.push_back({h, i, "entries must be 0 or 1"});
      else if (outside)
        out.push_back({h, i, "cluster indicated outside the observed class"});
      else if (inside != 1)
        out.push_back({h, i, inside == 0 ? "no cluster indicated" : "more than one cluster indicated"});
    }
  }
  return out;
}

std::vector<AssignmentViolation> validate_assignment(const HierarchicalAssignment& u, const SupplementaryData& sup) {
  std::vector<Eigen::MatrixXd> blocks;
  for (std::size_t h = 0; h < u.n_sup(); ++h) blocks.push_back(u.dense_block(h));
  return validate_assignment(blocks, u.spec(), sup);
}

IndicatorView stacked_indicators(const CategoricalDataset& data, std::size_t h) { return IndicatorView(data, h); }

}  // namespace mscca
