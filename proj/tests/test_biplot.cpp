#include <gtest/gtest.h>

#include <cmath>

#include "mscca/biplot.hpp"
#include "mscca/errors.hpp"
#include "mscca/simulation.hpp"
#include "oracles.hpp"

namespace mscca {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

BiplotModel table_model(const MatrixXd& p) {
  BiplotModel m;
  m.table = p;
  m.row_masses = p.rowwise().sum();
  m.col_masses = p.colwise().sum().transpose();
  return m;
}

TEST(Contingency, TwoSingletonClusters) {
  const auto data = encode_dataset({{"a"}, {"b"}});
  const auto sup = SupplementaryData::single_class(2);
  const auto u = build_assignment(sup, ClusterSpec(std::vector<std::vector<int>>{{2}}),
                                  [](std::size_t, std::size_t i) { return static_cast<int>(i); });
  const auto model = contingency(u, sup, IndicatorView(data, 1));
  EXPECT_EQ(model.table, MatrixXd(Eigen::Vector2d(0.5, 0.5).asDiagonal()));
}

TEST(Contingency, MassesLabelsAndOrdering) {
  Rng rng(4);
  const auto data = oracle::random_dataset(rng, 60, 4, 3);
  const auto sup = oracle::random_supplementary(rng, 60, {2, 3});
  const ClusterSpec spec = ClusterSpec::uniform(sup, 3);
  const auto u = init_random(sup, spec, rng);
  const IndicatorView z(data, 2);
  const auto model = contingency(u, sup, z);
  EXPECT_NEAR(model.table.sum(), 1.0, 1e-12);
  EXPECT_GT(model.row_masses.minCoeff(), 0.0);
  EXPECT_GT(model.col_masses.minCoeff(), 0.0);
  // Dense oracle: P = U'Z^H / (N H m), rows permuted into the model's order.
  const MatrixXd dense = u.dense().transpose() * z.z_stacked() / (60.0 * 2 * 4);
  for (Eigen::Index r = 0; r < model.table.rows(); ++r)
    EXPECT_LT((model.table.row(r) - dense.row(model.row_source[static_cast<std::size_t>(r)])).norm(), 1e-15);
  // Row mass is cluster size / (N H).
  for (std::size_t r = 0; r < model.row_sizes.size(); ++r)
    EXPECT_NEAR(model.row_masses(static_cast<Eigen::Index>(r)), model.row_sizes[r] / 120.0, 1e-14);
  // Within a class, sizes are descending and labels count up from 1.
  for (std::size_t r = 1; r < model.row_sizes.size(); ++r)
    if (model.row_class[r] == model.row_class[r - 1]) EXPECT_GE(model.row_sizes[r - 1], model.row_sizes[r]);
  EXPECT_EQ(model.row_labels[0], sup.labels(0)[0] + "1");
  EXPECT_EQ(model.row_labels[1], sup.labels(0)[0] + "2");
  EXPECT_EQ(model.col_labels, data.category_names());
}

TEST(Contingency, OneClusterPerClassIsTheAveragingTable) {
  Rng rng(5);
  const auto data = oracle::random_dataset(rng, 50, 3, 4);
  const auto sup = oracle::random_supplementary(rng, 50, {3, 2});
  const auto u = build_assignment(sup, ClusterSpec::uniform(sup, 1), [](std::size_t, std::size_t) { return 0; });
  const IndicatorView z(data, 2);
  const auto a = contingency(u, sup, z);
  const auto b = class_contingency(sup, z);
  EXPECT_LT((a.table - b.table).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(a.row_class, b.row_class);
}

TEST(Contingency, InvariantToObservationOrder) {
  const Table raw = {{"a", "x"}, {"b", "y"}, {"a", "y"}, {"c", "x"}, {"b", "x"}};
  const Table sup_raw = {{"m"}, {"f"}, {"m"}, {"f"}, {"m"}};
  const std::vector<int> cl = {0, 0, 1, 0, 0};
  const std::vector<std::size_t> perm = {4, 2, 0, 3, 1};
  Table raw2, sup2;
  std::vector<int> cl2;
  for (std::size_t i : perm) {
    raw2.push_back(raw[i]);
    sup2.push_back(sup_raw[i]);
    cl2.push_back(cl[i]);
  }
  const auto d1 = encode_dataset(raw), d2 = encode_dataset(raw2);
  const auto s1 = encode_supplementary(sup_raw), s2 = encode_supplementary(sup2);
  const ClusterSpec spec1(std::vector<std::vector<int>>{{2, 1}});
  const ClusterSpec spec2(std::vector<std::vector<int>>{{2, 1}});
  const auto m1 = contingency(build_assignment(s1, spec1, [&](std::size_t, std::size_t i) { return cl[i]; }), s1,
                              IndicatorView(d1, 1));
  const auto m2 = contingency(build_assignment(s2, spec2, [&](std::size_t, std::size_t i) { return cl2[i]; }), s2,
                              IndicatorView(d2, 1));
  // Same labels in possibly different column order; compare by name.
  for (std::size_t c1 = 0; c1 < m1.col_labels.size(); ++c1) {
    const auto it = std::find(m2.col_labels.begin(), m2.col_labels.end(), m1.col_labels[c1]);
    ASSERT_NE(it, m2.col_labels.end());
    const auto c2 = static_cast<Eigen::Index>(it - m2.col_labels.begin());
    EXPECT_LT((m1.table.col(static_cast<Eigen::Index>(c1)) - m2.table.col(c2)).norm(), 1e-15);
  }
}

TEST(Contingency, EmptyClusterRejected) {
  const auto data = encode_dataset({{"a"}, {"b"}});
  const auto sup = SupplementaryData::single_class(2);
  const auto u = build_assignment(sup, ClusterSpec(std::vector<std::vector<int>>{{2}}),
                                  [](std::size_t, std::size_t) { return 0; });
  EXPECT_THROW(contingency(u, sup, IndicatorView(data, 1)), EmptyClusterError);
}

TEST(StandardizedResiduals, HandExample) {
  MatrixXd p(2, 2);
  p << 0.4, 0.1, 0.1, 0.4;
  const auto m = standardized_residuals(table_model(p));
  // (0.4 - 0.25) / sqrt(0.25) = 0.3
  MatrixXd expected(2, 2);
  expected << 0.3, -0.3, -0.3, 0.3;
  EXPECT_LT((m.residuals - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(StandardizedResiduals, IndependentTableIsZeroAndRowSwapFollows) {
  const VectorXd r = Eigen::Vector3d(0.2, 0.3, 0.5);
  const VectorXd c = Eigen::Vector2d(0.6, 0.4);
  EXPECT_LT(standardized_residuals(table_model(r * c.transpose())).residuals.cwiseAbs().maxCoeff(), 1e-15);

  MatrixXd p(3, 2);
  p << 0.1, 0.1, 0.25, 0.05, 0.2, 0.3;
  MatrixXd swapped = p;
  swapped.row(0).swap(swapped.row(2));
  const auto a = standardized_residuals(table_model(p));
  const auto b = standardized_residuals(table_model(swapped));
  EXPECT_LT((a.residuals.row(0) - b.residuals.row(2)).norm(), 1e-15);
  EXPECT_LT((a.residuals.row(1) - b.residuals.row(1)).norm(), 1e-15);
}

TEST(StandardizedResiduals, GrandTotalsVanish) {
  Rng rng(6);
  MatrixXd p(5, 7);
  for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = rng.uniform(0.01, 1.0);
  p /= p.sum();
  const auto m = standardized_residuals(table_model(p));
  const MatrixXd back = m.row_masses.cwiseSqrt().asDiagonal() * m.residuals * m.col_masses.cwiseSqrt().asDiagonal();
  EXPECT_LT(back.rowwise().sum().cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(back.colwise().sum().cwiseAbs().maxCoeff(), 1e-12);
}

TEST(StandardizedResiduals, ZeroMassIsMassError) {
  MatrixXd p(2, 2);
  p << 0.5, 0.5, 0.0, 0.0;
  EXPECT_THROW(standardized_residuals(table_model(p)), MassError);
}

TEST(BiplotCoordinates, ReconstructionIsTruncatedSvd) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    const auto data = oracle::random_dataset(rng, 80, 5, 3 + seed % 2);
    const auto sup = oracle::random_supplementary(rng, 80, {2, 3});
    const auto u = init_random(sup, ClusterSpec::uniform(sup, 2), rng);
    const int dims = 1 + static_cast<int>(seed % 3);
    const auto sol = solve_for_assignment(data, u, dims);
    const auto model =
        biplot_coordinates(standardized_residuals(contingency(u, sup, IndicatorView(data, 2))), sol.centers,
                           sol.quantifications);
    const double achieved = (model.residuals - reconstruction(model)).squaredNorm();
    EXPECT_NEAR(achieved, oracle::discarded_energy(model.residuals, dims), 1e-6);
  }
}

TEST(BiplotCoordinates, FullRankIsExact) {
  Rng rng(3);
  const auto data = oracle::random_dataset(rng, 40, 3, 3);
  const auto sup = oracle::random_supplementary(rng, 40, {2});
  const auto u = init_random(sup, ClusterSpec::uniform(sup, 3), rng);
  const int full = static_cast<int>(data.n_categories() - data.n_vars());
  const auto sol = solve_for_assignment(data, u, full);
  const auto model = biplot_coordinates(standardized_residuals(contingency(u, sup, IndicatorView(data, 1))),
                                        sol.centers, sol.quantifications);
  EXPECT_LT((model.residuals - reconstruction(model)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(BiplotCoordinates, IndependentTableGivesZeroRows) {
  // Both clusters hold one "a" and one "b": every row profile equals the margin.
  const auto data = encode_dataset({{"a"}, {"b"}, {"a"}, {"b"}});
  const auto sup = SupplementaryData::single_class(4);
  const auto u = build_assignment(sup, ClusterSpec(std::vector<std::vector<int>>{{2}}),
                                  [](std::size_t, std::size_t i) { return static_cast<int>(i / 2); });
  const auto sol = solve_for_assignment(data, u, 1);
  const auto model = biplot_coordinates(standardized_residuals(contingency(u, sup, IndicatorView(data, 1))),
                                        sol.centers, sol.quantifications);
  EXPECT_LT(model.residuals.cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT(model.row_coords.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BiplotCoordinates, ShapeMismatchRejected) {
  MatrixXd p(2, 2);
  p << 0.4, 0.1, 0.1, 0.4;
  auto m = standardized_residuals(table_model(p));
  m.row_source = {0, 1};
  m.row_class = {0, 0};
  EXPECT_THROW(biplot_coordinates(m, MatrixXd::Zero(3, 1), MatrixXd::Zero(2, 1)), ShapeError);
  EXPECT_THROW(biplot_coordinates(m, MatrixXd::Zero(2, 1), MatrixXd::Zero(3, 1)), ShapeError);
}

TEST(BiplotCoordinates, ClassPointsAreMassWeightedClusterMeans) {
  Rng rng(8);
  const auto data = oracle::random_dataset(rng, 60, 4, 3);
  const auto sup = oracle::random_supplementary(rng, 60, {2});
  const auto u = init_random(sup, ClusterSpec::uniform(sup, 2), rng);
  const auto sol = solve_for_assignment(data, u, 2);
  const IndicatorView z(data, 1);
  const auto model = biplot_coordinates(standardized_residuals(contingency(u, sup, z)), sol.centers,
                                        sol.quantifications);
  // Class point of the MSCCA solution = D^1/2 times the class mean of F.
  const MatrixXd f = object_scores(data, sol.quantifications);
  for (std::size_t s = 0; s < 2; ++s) {
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(2);
    for (std::size_t i : sup.members(0, s)) mean += f.row(static_cast<Eigen::Index>(i));
    mean /= static_cast<double>(sup.class_size(0, s));
    const double mass = static_cast<double>(sup.class_size(0, s)) / 60.0;
    EXPECT_NEAR(model.class_masses(static_cast<Eigen::Index>(s)), mass, 1e-14);
    EXPECT_LT((model.class_coords.row(static_cast<Eigen::Index>(s)) - std::sqrt(mass) * mean).norm(), 1e-12);
  }
}

TEST(RescaleSpread, GammaExampleAndInvariants) {
  BiplotModel m;
  m.row_coords = MatrixXd(2, 2);
  m.row_coords << 2, 0, 0, 2;
  m.col_coords = MatrixXd(2, 2);
  m.col_coords << 1, 0, 0, -1;
  m.class_coords = MatrixXd::Zero(0, 2);
  const MatrixXd before = reconstruction(m);
  const auto r = rescale_spread(m);
  EXPECT_NEAR(r.gamma, std::pow(0.25, 0.25), 1e-15);
  EXPECT_NEAR(r.gamma, 0.7071, 1e-4);
  EXPECT_LT((reconstruction(r) - before).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(r.row_coords.rowwise().squaredNorm().mean(), r.col_coords.rowwise().squaredNorm().mean(), 1e-10);
  EXPECT_NEAR(rescale_spread(r).gamma, r.gamma, 1e-12);  // second pass finds gamma = 1
}

TEST(RescaleSpread, RandomCoordinatesKeepInnerProducts) {
  Rng rng(12);
  for (int rep = 0; rep < 20; ++rep) {
    BiplotModel m;
    m.row_coords = MatrixXd(4, 2);
    m.col_coords = MatrixXd(6, 2);
    for (Eigen::Index i = 0; i < 8; ++i) m.row_coords(i) = rng.uniform(-3, 3);
    for (Eigen::Index i = 0; i < 12; ++i) m.col_coords(i) = rng.uniform(-0.1, 0.1);
    m.class_coords = MatrixXd::Zero(0, 2);
    const auto r = rescale_spread(m);
    EXPECT_LT((reconstruction(r) - reconstruction(m)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(r.row_coords.rowwise().squaredNorm().mean(), r.col_coords.rowwise().squaredNorm().mean(), 1e-10);
  }
}

TEST(RescaleSpread, AllZeroSideIsDegenerate) {
  BiplotModel m;
  m.row_coords = MatrixXd::Zero(2, 2);
  m.col_coords = MatrixXd::Ones(2, 2);
  EXPECT_THROW(rescale_spread(m), DegenerateGeometryError);
}

TEST(ResidualComparison, OneClusterPerClassGivesIdenticalTables) {
  Rng rng(14);
  const auto data = oracle::random_dataset(rng, 40, 3, 3);
  const auto sup = oracle::random_supplementary(rng, 40, {2, 2});
  const auto u = build_assignment(sup, ClusterSpec::uniform(sup, 1), [](std::size_t, std::size_t) { return 0; });
  const auto cmp = residual_comparison(data, sup, solve_for_assignment(data, u, 2));
  EXPECT_LT((cmp.averaging.residuals - cmp.mscca.residuals).cwiseAbs().maxCoeff(), 1e-15);
  ASSERT_EQ(cmp.records.size(), 2 * 4 * data.n_categories());
  // Every averaging block is followed by its class's cluster block.
  EXPECT_EQ(cmp.records[0].method, "averaging");
  EXPECT_EQ(cmp.records[data.n_categories()].method, "mscca");
  EXPECT_EQ(cmp.records[data.n_categories()].class_label, cmp.records[0].class_label);
}

TEST(ResidualComparison, ClassMassIsSumOfClusterMasses) {
  Rng rng(15);
  const auto data = oracle::random_dataset(rng, 60, 3, 3);
  const auto sup = oracle::random_supplementary(rng, 60, {3, 2});
  const auto u = init_random(sup, ClusterSpec::uniform(sup, 2), rng);
  const auto cmp = residual_comparison(data, sup, solve_for_assignment(data, u, 2));
  VectorXd summed = VectorXd::Zero(cmp.averaging.row_masses.size());
  for (Eigen::Index r = 0; r < cmp.mscca.row_masses.size(); ++r)
    summed(cmp.mscca.row_class[static_cast<std::size_t>(r)]) += cmp.mscca.row_masses(r);
  EXPECT_LT((summed - cmp.averaging.row_masses).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((cmp.averaging.col_masses - cmp.mscca.col_masses).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Illustration, AlcoholClusterCarriesTheAlcoholSignal) {
  const auto ill = generate_illustration();
  SolverOptions opt;
  opt.seed = 1;
  opt.n_starts = 50;
  const auto sol = fit_mscca(ill.data, ill.sup, ClusterSpec(std::vector<std::vector<int>>{{2, 2}, {3, 2}}), opt);
  const IndicatorView z(ill.data, 2);
  const auto model = rescale_spread(biplot_coordinates(standardized_residuals(contingency(sol.assignment, ill.sup, z)),
                                                       sol.centers, sol.quantifications));
  const auto alcohol = static_cast<Eigen::Index>(ill.data.offset(1) + 2);
  ASSERT_EQ(model.col_labels[static_cast<std::size_t>(alcohol)], "Drink:Alcohol");
  const int male = 2;  // flat class index: American, Japanese, Male, Female
  const MatrixXd ip = reconstruction(model);
  Eigen::Index by_residual = -1, by_product = -1;
  for (Eigen::Index r = 0; r < model.table.rows(); ++r) {
    if (model.row_class[static_cast<std::size_t>(r)] != male) continue;
    if (by_residual < 0 || model.residuals(r, alcohol) > model.residuals(by_residual, alcohol)) by_residual = r;
    if (by_product < 0 || ip(r, alcohol) > ip(by_product, alcohol)) by_product = r;
  }
  EXPECT_EQ(by_product, by_residual);
  EXPECT_GT(model.residuals(by_residual, alcohol), 0.0);

  const auto cmp = residual_comparison(ill.data, ill.sup, sol);
  EXPECT_GE(cmp.mscca.residuals.cwiseAbs().maxCoeff(), cmp.averaging.residuals.cwiseAbs().maxCoeff());
}

}  // namespace
}  // namespace mscca
