#include "mscca/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <ostream>

#include "mscca/errors.hpp"
#include "mscca/metrics.hpp"
#include "mscca/rng.hpp"

namespace mscca {

namespace {

std::vector<std::string> numbered(const std::string& prefix, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t k = 1; k <= n; ++k) out.push_back(prefix + std::to_string(k));
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : "NA"; }

const char* balance_name(Balance b) { return b == Balance::Balanced ? "balanced" : "unbalanced"; }

}  // namespace

// --- clustered data ---------------------------------------------------------

std::size_t GenSpec::n_active() const {
  return static_cast<std::size_t>(std::floor(static_cast<double>(n_vars) * active_fraction));
}

void GenSpec::validate() const {
  if (n_obs < 1) throw SpecError("n_obs must be positive");
  if (n_vars < 1) throw SpecError("n_vars must be positive");
  if (q < 2) throw SpecError("q must be at least 2");
  if (k < 1) throw SpecError("K must be at least 1");
  if (!(high_prob > 0.0 && high_prob <= 1.0)) throw SpecError("high_prob must lie in (0, 1]");
  if (!(active_fraction >= 0.0 && active_fraction <= 1.0)) throw SpecError("active_fraction must lie in [0, 1]");
  if (distinct_signal && q < k) throw SpecError("distinct signal categories need q >= K");
}

ClusteredData generate_clustered(const GenSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const auto q = static_cast<std::size_t>(spec.q);
  const auto k = static_cast<std::size_t>(spec.k);
  const std::size_t active = spec.n_active();

  ClusteredData out;
  out.truth.resize(spec.n_obs);
  for (auto& t : out.truth) t = static_cast<int>(rng.uniform_index(k));

  out.signal.assign(active, std::vector<int>(k));
  out.probs.assign(active, std::vector<std::vector<double>>(k, std::vector<double>(q, 0.0)));
  for (std::size_t j = 0; j < active; ++j) {
    std::vector<int> order(q);
    std::iota(order.begin(), order.end(), 0);
    if (spec.distinct_signal) rng.shuffle(std::span<int>(order));
    for (std::size_t c = 0; c < k; ++c) {
      const int sig = spec.distinct_signal ? order[c] : static_cast<int>(rng.uniform_index(q));
      out.signal[j][c] = sig;
      auto& p = out.probs[j][c];
      const double low = 1.0 - spec.high_prob;
      double sum = 0.0;
      for (std::size_t l = 0; l < q; ++l)
        if (static_cast<int>(l) != sig) sum += (p[l] = rng.uniform(0.0, low));
      for (std::size_t l = 0; l < q; ++l)
        if (static_cast<int>(l) != sig) p[l] = sum > 0.0 ? low * p[l] / sum : low / static_cast<double>(q - 1);
      p[static_cast<std::size_t>(sig)] = spec.high_prob;
    }
  }

  std::vector<std::vector<int>> codes(spec.n_obs, std::vector<int>(spec.n_vars));
  for (std::size_t i = 0; i < spec.n_obs; ++i)
    for (std::size_t j = 0; j < spec.n_vars; ++j) {
      if (j < active) {
        const auto& p = out.probs[j][static_cast<std::size_t>(out.truth[i])];
        codes[i][j] = static_cast<int>(rng.categorical(std::span<const double>(p)));
      } else {
        codes[i][j] = static_cast<int>(rng.uniform_index(q));
      }
    }
  out.data = CategoricalDataset::from_codes(numbered("V", spec.n_vars),
                                            std::vector<std::vector<std::string>>(spec.n_vars, numbered("c", q)),
                                            codes);
  return out;
}

// --- supplementary data -----------------------------------------------------

void SupGenSpec::validate() const {
  if (classes.empty()) throw SpecError("need at least one supplementary variable");
  for (int r : classes)
    if (r < 2) throw SpecError("every supplementary variable needs at least 2 classes");
}

std::vector<double> class_probabilities(int r, Balance balance) {
  std::vector<double> p(static_cast<std::size_t>(r));
  const double total = static_cast<double>(r) * (r + 1) / 2.0;
  for (int s = 1; s <= r; ++s)
    p[static_cast<std::size_t>(s - 1)] = balance == Balance::Balanced ? 1.0 / r : s / total;
  return p;
}

SupplementaryData generate_supplementary(const SupGenSpec& spec, std::size_t n_obs) {
  spec.validate();
  Rng rng(spec.seed);
  const std::size_t H = spec.classes.size();
  std::vector<std::vector<int>> codes(n_obs, std::vector<int>(H));
  std::vector<std::vector<std::string>> labels(H);
  for (std::size_t h = 0; h < H; ++h) {
    const auto p = class_probabilities(spec.classes[h], spec.balance);
    labels[h] = numbered("", p.size());
    for (std::size_t i = 0; i < n_obs; ++i)
      codes[i][h] = static_cast<int>(rng.categorical(std::span<const double>(p)));
  }
  return SupplementaryData::from_codes(numbered("S", H), labels, codes);
}

HierarchicalAssignment restrict_truth(const std::vector<int>& truth, const SupplementaryData& sup) {
  if (truth.size() != sup.n_obs()) throw ShapeError("truth and supplementary data disagree on N");
  std::vector<std::vector<int>> counts(sup.n_sup());
  std::vector<std::vector<std::map<int, int>>> relabel(sup.n_sup());
  for (std::size_t h = 0; h < sup.n_sup(); ++h) {
    relabel[h].resize(sup.n_classes(h));
    for (std::size_t i = 0; i < truth.size(); ++i) relabel[h][static_cast<std::size_t>(sup.cls(h, i))][truth[i]] = 0;
    for (auto& m : relabel[h]) {
      int next = 0;
      for (auto& [global, local] : m) local = next++;
      counts[h].push_back(next);
    }
  }
  return build_assignment(sup, ClusterSpec(counts), [&](std::size_t h, std::size_t i) {
    return relabel[h][static_cast<std::size_t>(sup.cls(h, i))].at(truth[i]);
  });
}

// --- illustration -----------------------------------------------------------

Illustration generate_illustration(const IllustrationSpec& spec) {
  if (spec.counts.size() != 4) throw SpecError("illustration needs counts for 4 nationality x gender cells");
  if (!(spec.high_prob > 0.0 && spec.high_prob <= 1.0)) throw SpecError("high_prob must lie in (0, 1]");
  // Cluster profiles (meal, drink): W&J, A&T, W&A.
  const int profile[3][2] = {{0, 0}, {1, 1}, {0, 2}};
  const int cats[2] = {2, 3};
  Rng rng(spec.seed);

  struct Row {
    int nat, gender, cluster;
  };
  std::vector<Row> rows;
  for (int cell = 0; cell < 4; ++cell) {
    if (spec.counts[static_cast<std::size_t>(cell)].size() != 3) throw SpecError("each cell needs 3 cluster counts");
    for (int c = 0; c < 3; ++c)
      for (int n = 0; n < spec.counts[static_cast<std::size_t>(cell)][static_cast<std::size_t>(c)]; ++n)
        rows.push_back({cell / 2, cell % 2, c});
  }
  rng.shuffle(std::span<Row>(rows));

  std::vector<std::vector<int>> codes(rows.size(), std::vector<int>(2));
  std::vector<std::vector<int>> sup_codes(rows.size(), std::vector<int>(2));
  Illustration out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    // Pairs are numbered meal * 3 + drink; an off-profile row takes one of the other five uniformly.
    const int own = profile[rows[i].cluster][0] * cats[1] + profile[rows[i].cluster][1];
    int pair = own;
    if (rng.uniform01() >= spec.high_prob) {
      pair = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(cats[0] * cats[1] - 1)));
      if (pair >= own) ++pair;
    }
    codes[i] = {pair / cats[1], pair % cats[1]};
    sup_codes[i] = {rows[i].nat, rows[i].gender};
    out.global_truth.push_back(rows[i].cluster);
  }
  out.data = CategoricalDataset::from_codes({"Meal", "Drink"}, {{"Western", "Asian"}, {"Fruit juice", "Tea", "Alcohol"}},
                                            codes);
  out.sup = SupplementaryData::from_codes({"Nationality", "Gender"}, {{"American", "Japanese"}, {"Male", "Female"}},
                                          sup_codes);
  out.truth = restrict_truth(out.global_truth, out.sup);
  return out;
}

// --- study ------------------------------------------------------------------

std::string condition_label(const StudyCell& cell) {
  return (cell.balance == Balance::Balanced ? "b" : "u") + std::to_string(cell.r);
}

std::vector<StudyCell> StudyDesign::cells() const {
  std::vector<StudyCell> out;
  for (int q : q_values)
    for (int k : k_values)
      for (int h : h_values)
        for (int r : r_values)
          for (Balance b : balances) out.push_back({q, k, h, r, b});
  return out;
}

void StudyDesign::validate() const {
  if (cells().empty()) throw SpecError("study design has no cells");
  if (replicates < 1) throw SpecError("replicates must be positive");
  if (starts < 1) throw SpecError("starts must be positive");
  for (int h : h_values)
    if (h < 1) throw SpecError("H must be positive");
  for (int r : r_values)
    if (r < 2) throw SpecError("r must be at least 2");
  GenSpec g;
  g.n_obs = n_obs;
  g.n_vars = n_vars;
  g.high_prob = high_prob;
  for (int q : q_values)
    for (int k : k_values) {
      g.q = q;
      g.k = k;
      g.validate();
    }
}

std::vector<StudyRow> run_replicate(const StudyDesign& design, const StudyCell& cell, std::size_t cell_index,
                                    int replicate) {
  const std::uint64_t rep_seed = derive_seed(design.seed, cell_index, static_cast<std::uint64_t>(replicate));
  GenSpec g;
  g.n_obs = design.n_obs;
  g.n_vars = design.n_vars;
  g.q = cell.q;
  g.k = cell.k;
  g.high_prob = design.high_prob;
  g.seed = derive_seed(rep_seed, 0);
  const ClusteredData gen = generate_clustered(g);

  SupGenSpec sg;
  sg.classes.assign(static_cast<std::size_t>(cell.h), cell.r);
  sg.balance = cell.balance;
  sg.seed = derive_seed(rep_seed, 1);
  const SupplementaryData sup = generate_supplementary(sg, design.n_obs);

  std::vector<StudyRow> rows;
  for (std::size_t h = 0; h < sup.n_sup(); ++h)
    for (std::size_t s = 0; s < sup.n_classes(h); ++s) rows.push_back({cell, replicate, h, s, {}, {}, {}, 0.0, {}});

  SolverOptions opt;
  opt.dims = design.dims;
  opt.n_starts = design.starts;
  opt.max_iter = design.max_iter;
  opt.epsilon = design.epsilon;
  opt.seed = derive_seed(rep_seed, 2);
  opt.threads = design.threads;

  const auto t0 = std::chrono::steady_clock::now();
  try {
    const MsccaSolution sol = fit_mscca(gen.data, sup, ClusterSpec::uniform(sup, cell.k), opt);
    const double ms =
        design.timing ? std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count() : 0.0;
    std::optional<double> gf;
    std::string gf_error;
    try {
      const HierarchicalAssignment truth = restrict_truth(gen.truth, sup);
      gf = gf_against_truth(sol, truth, sup, IndicatorView(gen.data, sup.n_sup()));
    } catch (const Error& e) {
      gf_error = std::string("gf: ") + e.what();
    }
    for (auto& row : rows) {
      std::vector<int> found, expected;
      for (std::size_t i : sup.members(row.h, row.s)) {
        found.push_back(sol.assignment.cluster(row.h, i));
        expected.push_back(gen.truth[i]);
      }
      if (found.size() >= 2) row.ari = adjusted_rand_index(found, expected);
      row.gf = gf;
      row.phi = sol.objective;
      row.runtime_ms = ms;
      row.error = gf_error;
    }
  } catch (const Error& e) {
    for (auto& row : rows) row.error = e.what();
  }
  return rows;
}

std::vector<StudyRow> run_study(const StudyDesign& design) {
  design.validate();
  const auto cells = design.cells();
  std::vector<StudyRow> out;
  for (std::size_t c = 0; c < cells.size(); ++c)
    for (int rep = 0; rep < design.replicates; ++rep) {
      auto rows = run_replicate(design, cells[c], c, rep);
      out.insert(out.end(), rows.begin(), rows.end());
    }
  return out;
}

void write_study_csv(std::ostream& out, const std::vector<StudyRow>& rows) {
  out << "q,K,H,r,balance,replicate,h,s,ari,gf,phi,runtime_ms\n";
  for (const auto& r : rows)
    out << r.cell.q << ',' << r.cell.k << ',' << r.cell.h << ',' << r.cell.r << ',' << balance_name(r.cell.balance)
        << ',' << r.replicate + 1 << ',' << r.h + 1 << ',' << r.s + 1 << ',' << fmt(r.ari) << ',' << fmt(r.gf) << ','
        << fmt(r.phi) << ',' << fmt(r.runtime_ms) << '\n';
}

std::optional<double> median(std::vector<double> values) {
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<CellSummary> summarize_study(const std::vector<StudyRow>& rows) {
  struct Acc {
    StudyCell cell;
    std::size_t n = 0, failed = 0;
    std::vector<double> ari, gf;
  };
  std::vector<Acc> accs;
  const auto same = [](const StudyCell& a, const StudyCell& b) {
    return a.q == b.q && a.k == b.k && a.h == b.h && a.r == b.r && a.balance == b.balance;
  };
  for (const auto& r : rows) {
    auto it = std::find_if(accs.begin(), accs.end(), [&](const Acc& a) { return same(a.cell, r.cell); });
    if (it == accs.end()) {
      accs.push_back({r.cell, 0, 0, {}, {}});
      it = accs.end() - 1;
    }
    ++it->n;
    if (!r.phi) ++it->failed;
    if (r.ari) it->ari.push_back(*r.ari);
    // GF is one value per fit; count it once, on the first class row.
    if (r.gf && r.h == 0 && r.s == 0) it->gf.push_back(*r.gf);
  }
  std::vector<CellSummary> out;
  for (auto& a : accs) out.push_back({a.cell, a.n, a.failed, median(a.ari), median(a.gf)});
  return out;
}

void write_summary_csv(std::ostream& out, const std::vector<CellSummary>& cells) {
  out << "q,K,H,r,balance,condition,rows,failed,median_ari,median_gf\n";
  for (const auto& c : cells)
    out << c.cell.q << ',' << c.cell.k << ',' << c.cell.h << ',' << c.cell.r << ',' << balance_name(c.cell.balance)
        << ',' << condition_label(c.cell) << ',' << c.n_rows << ',' << c.n_failed << ',' << fmt(c.median_ari) << ','
        << fmt(c.median_gf) << '\n';
}

}  // namespace mscca
