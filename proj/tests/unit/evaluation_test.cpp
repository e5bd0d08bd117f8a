#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "hhpnet/evaluation.hpp"
#include "hhpnet/synthetic.hpp"

using namespace hhpnet;

namespace {

Dataset labeled(std::size_t n, std::uint64_t seed = 1) { return synth::generate_dataset(n, {}, seed); }

EvalRecord rec(double overall_err, double mean_unc, std::size_t kp = 5) {
  EvalRecord r = make_record({{overall_err, 0, 0}, {mean_unc, mean_unc, mean_unc}}, {0, 0, 0}, kp);
  r.error = {overall_err, overall_err, overall_err};
  return r;
}

}  // namespace

TEST(Evaluate, PerfectPredictorHasZeroError) {
  const Dataset d = labeled(30);
  std::size_t i = 0;
  const auto r = evaluate([&](const KeypointSet&) { return PoseEstimate{*d[i++].pose, {}}; }, d);
  EXPECT_EQ(r.records.size(), d.size());
  EXPECT_EQ(r.mae.overall, 0.0);
}

TEST(Evaluate, YawOffsetByTwo) {
  const Dataset d = labeled(25);
  std::size_t i = 0;
  const auto r = evaluate(
      [&](const KeypointSet&) {
        EulerPose p = *d[i++].pose;
        p.yaw += 2.0;
        return PoseEstimate{p, {}};
      },
      d);
  EXPECT_NEAR(r.mae.yaw, 2.0, 1e-12);
  EXPECT_EQ(r.mae.pitch, 0.0);
  EXPECT_EQ(r.mae.roll, 0.0);
  EXPECT_NEAR(r.mae.overall, 2.0 / 3.0, 1e-12);
}

TEST(Evaluate, RecordsCarryKeypointCountAndMeanUncertainty) {
  Dataset d = labeled(4);
  d[2].keypoints.points[0].c = 0.0;
  const auto r = evaluate([](const KeypointSet&) { return PoseEstimate{{0, 0, 0}, {1.0, 2.0, 6.0}}; }, d);
  EXPECT_EQ(r.records[2].present_keypoints, 4u);
  EXPECT_DOUBLE_EQ(r.records[0].mean_uncertainty, 3.0);
}

TEST(Evaluate, ErrorsOnEmptyOrUnlabeled) {
  const Predictor p = [](const KeypointSet&) { return PoseEstimate{}; };
  EXPECT_THROW(evaluate(p, Dataset{}), std::invalid_argument);
  Dataset d = labeled(3);
  d[1].pose.reset();
  EXPECT_THROW(evaluate(p, d), std::invalid_argument);
}

TEST(Evaluate, NetworkPathMatchesPredictorPath) {
  const Dataset d = labeled(40, 3);
  const ModelParams p = build(ModelConfig{}, 3);
  const auto a = evaluate(p, d);
  const auto b = evaluate([&](const KeypointSet& k) { return forward(p, normalize(k)); }, d);
  EXPECT_NEAR(a.mae.overall, b.mae.overall, 1e-9);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_NEAR(a.records[i].mean_uncertainty, b.records[i].mean_uncertainty, 1e-9);
}

TEST(Evaluate, OrderInvariant) {
  Dataset d = labeled(60, 4);
  const ModelParams p = build(ModelConfig{}, 4);
  const auto a = evaluate(p, d);
  std::mt19937_64 rng(2);
  std::shuffle(d.begin(), d.end(), rng);
  const auto b = evaluate(p, d);
  EXPECT_NEAR(a.mae.yaw, b.mae.yaw, 1e-9);
  EXPECT_NEAR(a.mae.pitch, b.mae.pitch, 1e-9);
  EXPECT_NEAR(a.mae.roll, b.mae.roll, 1e-9);
}

TEST(SigmaFromLogVar, Values) {
  EXPECT_EQ(sigma_from_log_var(0.0), 1.0);
  EXPECT_NEAR(sigma_from_log_var(std::log(9.0)), 3.0, 1e-12);
}

TEST(CumulativeCurve, EdgesAndMonotone) {
  const std::vector<EvalRecord> r{rec(1, 0.5), rec(3, 1.5), rec(5, 2.5), rec(9, 2.5)};
  const std::vector<double> grid{0.0, 0.5, 2.0, 2.5, 10.0};
  const auto c = cumulative_error_curve(r, grid);
  ASSERT_EQ(c.size(), 5u);
  EXPECT_FALSE(c[0].mean_error);
  EXPECT_EQ(c[0].retained_fraction, 0.0);
  EXPECT_EQ(c[1].count, 1u);
  EXPECT_DOUBLE_EQ(*c[1].mean_error, 1.0);
  EXPECT_DOUBLE_EQ(*c[2].mean_error, 2.0);
  EXPECT_DOUBLE_EQ(c[2].retained_fraction, 0.5);
  EXPECT_DOUBLE_EQ(*c[4].mean_error, 4.5);
  EXPECT_EQ(c[4].retained_fraction, 1.0);
  for (std::size_t i = 1; i < c.size(); ++i) EXPECT_GE(c[i].retained_fraction, c[i - 1].retained_fraction);
}

TEST(CumulativeCurve, UnsortedGridThrows) {
  const std::vector<EvalRecord> r{rec(1, 1)};
  const std::vector<double> grid{1.0, 0.0};
  EXPECT_THROW(cumulative_error_curve(r, grid), std::invalid_argument);
}

TEST(CumulativeCurve, RandomRetainedFractionMonotone) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> d(3, 2);
  std::vector<EvalRecord> r;
  for (int i = 0; i < 500; ++i) r.push_back(rec(std::abs(d(rng)), d(rng)));
  const auto grid = uncertainty_grid(r, 33);
  ASSERT_EQ(grid.size(), 33u);
  const auto c = cumulative_error_curve(r, grid);
  for (std::size_t i = 1; i < c.size(); ++i) EXPECT_GE(c[i].retained_fraction, c[i - 1].retained_fraction);
  EXPECT_EQ(c.back().retained_fraction, 1.0);
  EXPECT_GE(c.front().count, 1u);
}

TEST(Pearson, HandComputedAndExtremes) {
  const std::vector<double> a{1, 2, 3}, b{2, 4, 7}, neg{-1, -2, -3};
  EXPECT_NEAR(pearson(a, b), 0.9934, 5e-5);
  // cov = 2.5, var a = 1, var b = 6.3333: r = 2.5 / sqrt(19/3)
  EXPECT_NEAR(pearson(a, b), 2.5 / std::sqrt(19.0 / 3.0), 1e-14);
  EXPECT_NEAR(pearson(a, a), 1.0, 1e-15);
  EXPECT_NEAR(pearson(a, neg), -1.0, 1e-15);
}

TEST(Pearson, Errors) {
  const std::vector<double> a{1, 2, 3}, flat{4, 4, 4}, two{1, 2}, one{1};
  EXPECT_THROW(pearson(a, flat), std::invalid_argument);
  EXPECT_THROW(pearson(a, two), std::invalid_argument);
  EXPECT_THROW(pearson(one, one), std::invalid_argument);
}

TEST(Pearson, AffineInvariantAndBounded) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> d;
  std::uniform_real_distribution<double> scale(0.1, 50), shift(-100, 100);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> a(30), b(30);
    for (std::size_t i = 0; i < 30; ++i) {
      a[i] = d(rng);
      b[i] = 0.5 * a[i] + d(rng);
    }
    const double r = pearson(a, b);
    EXPECT_LE(std::abs(r), 1.0);
    std::vector<double> a2 = a, b2 = b;
    const double sa = scale(rng), ta = shift(rng), sb = scale(rng), tb = shift(rng);
    for (double& v : a2) v = sa * v + ta;
    for (double& v : b2) v = sb * v + tb;
    EXPECT_NEAR(pearson(a2, b2), r, 1e-9);
  }
}

TEST(CrossCorrelation, ScaledTriplesGiveOne) {
  std::vector<EvalRecord> r;
  for (int i = 0; i < 10; ++i) {
    const double u = 0.3 * i - 1;
    r.push_back(make_record({{}, {u, 2 * u + 1, 5 * u - 3}}, {}, 5));
  }
  const auto c = uncertainty_cross_correlation(r);
  EXPECT_NEAR(c.yaw_pitch, 1.0, 1e-12);
  EXPECT_NEAR(c.yaw_roll, 1.0, 1e-12);
  EXPECT_NEAR(c.pitch_roll, 1.0, 1e-12);
}

TEST(CrossCorrelation, IndependentSeriesNearZero) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> d;
  std::vector<EvalRecord> r;
  for (int i = 0; i < 10000; ++i) r.push_back(make_record({{}, {d(rng), d(rng), d(rng)}}, {}, 5));
  const auto c = uncertainty_cross_correlation(r);
  EXPECT_LT(std::abs(c.yaw_pitch), 0.1);
  EXPECT_LT(std::abs(c.yaw_roll), 0.1);
  EXPECT_LT(std::abs(c.pitch_roll), 0.1);
}

TEST(Quantile, FiveElementSample) {
  const std::vector<double> v{7, 1, 3, 9, 5};
  EXPECT_EQ(quantile(v, 0.0), 1.0);
  EXPECT_EQ(quantile(v, 0.25), 3.0);
  EXPECT_EQ(quantile(v, 0.5), 5.0);
  EXPECT_EQ(quantile(v, 0.75), 7.0);
  EXPECT_EQ(quantile(v, 1.0), 9.0);
  // h = 0.1 * 4 = 0.4 -> 1 + 0.4 * (3 - 1)
  EXPECT_DOUBLE_EQ(quantile(v, 0.1), 1.8);
  const std::vector<double> four{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(quantile(four, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(quantile(four, 0.5), 2.5);
  EXPECT_THROW(quantile({}, 0.5), std::invalid_argument);
  EXPECT_THROW(quantile(v, 1.5), std::invalid_argument);
}

TEST(BoxStats, FiveElementSample) {
  const std::vector<double> v{7, 1, 3, 9, 5};
  const auto b = box_stats(v);
  EXPECT_EQ(b.min, 1.0);
  EXPECT_EQ(b.q1, 3.0);
  EXPECT_EQ(b.median, 5.0);
  EXPECT_EQ(b.q3, 7.0);
  EXPECT_EQ(b.max, 9.0);
  EXPECT_EQ(b.mean, 5.0);
}

TEST(KeypointGroups, SingleGroupAndSplit) {
  std::vector<EvalRecord> all5{rec(1, 1), rec(2, 2), rec(3, 3)};
  const auto g = error_by_keypoint_count(all5);
  ASSERT_EQ(g.size(), 1u);
  EXPECT_EQ(g.begin()->first, 5u);
  EXPECT_EQ(g.at(5).count, 3u);
  EXPECT_DOUBLE_EQ(g.at(5).error.median, 2.0);

  std::vector<EvalRecord> mixed{rec(1, 1, 2), rec(5, 8, 2), rec(2, 3, 4), rec(4, 4, 5)};
  const auto m = error_by_keypoint_count(mixed);
  EXPECT_EQ(m.size(), 3u);
  EXPECT_FALSE(m.contains(3));
  EXPECT_DOUBLE_EQ(m.at(2).uncertainty.median, 4.5);
  EXPECT_DOUBLE_EQ(m.at(2).error.mean, 3.0);
}
