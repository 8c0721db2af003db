#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "perfcost/analysis.hpp"
#include "perfcost/learners.hpp"
#include "perfcost/parallel.hpp"

using namespace perfcost;
using namespace perfcost::testing;

namespace {

Matrix uniform_features(std::size_t rows, std::size_t cols, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix x(rows, cols);
  for (auto& v : x.data) v = u(gen);
  return x;
}

Matrix column(const Matrix& x, double (*f)(std::span<const double>)) {
  Matrix y(x.rows, 1);
  for (std::size_t r = 0; r < x.rows; ++r) y.at(r, 0) = f(x.row(r));
  return y;
}

}  // namespace

TEST(HyperParams, Validation) {
  HyperParams p;
  EXPECT_NO_THROW(p.validate());
  p.learning_rate = 0.0;
  EXPECT_THROW(p.validate(), ArgumentError);
  p = {};
  p.subsample_fraction = 1.5;
  EXPECT_THROW(p.validate(), ArgumentError);
  p = {};
  p.max_depth = -1;
  EXPECT_THROW(p.validate(), ArgumentError);
}

TEST(Forest, SeparableDataFitsPerfectly) {
  Matrix x(20, 1);
  std::vector<Scalability> labels;
  for (int i = 0; i < 20; ++i) {
    x.at(i, 0) = i < 10 ? 0.05 * i : 0.5 + 0.05 * (i - 9);
    labels.push_back(i < 10 ? Scalability::ScalesWell : Scalability::ScalesPoorly);
  }
  const auto model = fit_forest_classifier(x, labels, HyperParams::classifier_defaults(), 3);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(predict_classifier(model, x.row(i)), labels[i]);
}

TEST(Forest, SingleClassPredictsThatClass) {
  const auto x = uniform_features(30, 4, 1);
  const std::vector<Scalability> labels(30, Scalability::ScalesWell);
  const auto model = fit_forest_classifier(x, labels, cheap(20), 3);
  const auto probe = uniform_features(50, 4, 2, -5.0, 5.0);
  for (std::size_t r = 0; r < probe.rows; ++r) EXPECT_EQ(predict_classifier(model, probe.row(r)), Scalability::ScalesWell);
}

TEST(Forest, SingleTreeIsItsVote) {
  const auto x = uniform_features(40, 3, 5);
  std::vector<Scalability> labels;
  for (std::size_t r = 0; r < x.rows; ++r) labels.push_back(x.at(r, 1) > 0.4 ? Scalability::ScalesPoorly : Scalability::ScalesWell);
  auto p = HyperParams::classifier_defaults();
  p.n_trees = 1;
  const auto model = fit_forest_classifier(x, labels, p, 8);
  const auto probe = uniform_features(50, 3, 6);
  for (std::size_t r = 0; r < probe.rows; ++r) {
    const auto votes = classifier_votes(model, probe.row(r));
    ASSERT_EQ(votes.size(), 1u);
    EXPECT_EQ(predict_classifier(model, probe.row(r)), votes[0]);
  }
}

TEST(Forest, PredictionAppearsAmongVotes) {
  const auto x = uniform_features(60, 5, 7);
  std::vector<Scalability> labels;
  for (std::size_t r = 0; r < x.rows; ++r) {
    labels.push_back(x.at(r, 0) + x.at(r, 2) > 1.0 ? Scalability::ScalesPoorly : Scalability::ScalesWell);
  }
  const auto model = fit_forest_classifier(x, labels, cheap(15), 9);
  const auto probe = uniform_features(100, 5, 10);
  for (std::size_t r = 0; r < probe.rows; ++r) {
    const auto votes = classifier_votes(model, probe.row(r));
    EXPECT_NE(std::find(votes.begin(), votes.end(), predict_classifier(model, probe.row(r))), votes.end());
  }
}

TEST(Booster, ConstantTargetIsExact) {
  const auto x = uniform_features(50, 3, 11);
  const Matrix y(50, 2, 3.0);
  const auto model = fit_boosted_regressor(x, y, cheap(30), 1);
  const auto probe = uniform_features(20, 3, 12, -3.0, 3.0);
  for (std::size_t r = 0; r < probe.rows; ++r) {
    for (double v : predict_regressor(model, probe.row(r))) EXPECT_EQ(v, 3.0);
  }
}

TEST(Booster, LearnsIdentityFunction) {
  const auto x = uniform_features(200, 3, 13, 1.0, 10.0);
  const auto y = column(x, [](std::span<const double> r) { return r[0]; });
  HyperParams p = HyperParams::regressor_defaults();
  p.n_trees = 100;
  p.max_depth = 6;
  const auto model = fit_boosted_regressor(x, y, p, 2);
  std::vector<double> pred, actual;
  for (std::size_t r = 0; r < x.rows; ++r) {
    pred.push_back(predict_regressor(model, x.row(r))[0]);
    actual.push_back(y.at(r, 0));
  }
  EXPECT_LE(smape(pred, actual), 5.0);
  EXPECT_GE(feature_importances(model)[0], 0.9);
}

TEST(Booster, TrainingErrorNonIncreasingPerStage) {
  const auto x = uniform_features(120, 2, 14);
  const auto y = column(x, [](std::span<const double> r) { return r[0] + 2.0 * r[1]; });
  auto p = HyperParams::regressor_defaults();
  p.log_targets = false;
  const auto model = fit_boosted_regressor(x, y, p, 3);
  const auto& chain = model.chains[0];
  double previous = INFINITY;
  for (std::size_t s = 0; s <= chain.stages.size(); s += 1) {
    double sse = 0.0;
    for (std::size_t r = 0; r < x.rows; ++r) {
      const double d = predict_chain(chain, x.row(r), s) - y.at(r, 0);
      sse += d * d;
    }
    EXPECT_LE(sse, previous * (1.0 + 1e-12) + 1e-12) << "stage " << s;
    previous = sse;
  }
}

TEST(Booster, LogTargets) {
  const auto x = uniform_features(60, 2, 21);
  const auto y = column(x, [](std::span<const double> r) { return std::exp(3.0 * r[0]); });
  auto p = cheap(60);
  p.log_targets = true;
  const auto m = fit_boosted_regressor(x, y, p, 9);
  EXPECT_TRUE(m.log_targets);
  std::vector<double> pred, actual;
  for (std::size_t r = 0; r < x.rows; ++r) {
    pred.push_back(predict_regressor(m, x.row(r))[0]);
    actual.push_back(y.at(r, 0));
    EXPECT_NEAR(std::log(pred.back()), predict_chain(m.chains[0], x.row(r), m.chains[0].stages.size()), 1e-12);
  }
  EXPECT_LE(smape(pred, actual), 10.0);
  EXPECT_EQ(regressor_from_json(to_json(m)), m);
  EXPECT_THROW(fit_boosted_regressor(x, Matrix(60, 1, 0.0), p, 9), ValidationError);
}

TEST(Booster, ZeroStagesGiveBaseScore) {
  const auto m = constant_regressor({1.5, 2.5}, {"a", "b"}, 4);
  const std::vector<double> x{1, 2, 3, 4};
  EXPECT_EQ(predict_regressor(m, x), (std::vector<double>{1.5, 2.5}));
  EXPECT_THROW(predict_regressor(m, std::vector<double>{1.0}), SchemaError);
}

TEST(Booster, UnobservedCellsAreIgnored) {
  const auto x = uniform_features(40, 2, 15);
  Matrix y(40, 2, 1.0);
  std::vector<std::uint8_t> observed(80, 1);
  for (std::size_t r = 0; r < 40; ++r) {
    if (r % 2 == 0) {
      y.at(r, 1) = NAN;
      observed[r * 2 + 1] = 0;
    }
  }
  const auto m = fit_boosted_regressor(x, y, cheap(10), 4, &observed);
  EXPECT_EQ(predict_regressor(m, x.row(0))[1], 1.0);
}

TEST(Importances, StumpIsOneHot) {
  const auto x = uniform_features(80, 5, 16);
  const auto y = column(x, [](std::span<const double> r) { return r[3] > 0.5 ? 10.0 : 1.0; });
  HyperParams p;
  p.n_trees = 1;
  p.max_depth = 1;
  p.colsample_fraction = 1.0;
  p.subsample_fraction = 1.0;
  const auto m = fit_boosted_regressor(x, y, p, 5);
  EXPECT_EQ(feature_importances(m), (std::vector<double>{0, 0, 0, 1, 0}));
}

TEST(Importances, NoSplitsGiveZeros) {
  const auto m = constant_regressor({1.0}, {"a"}, 3);
  EXPECT_EQ(feature_importances(m), (std::vector<double>{0, 0, 0}));
  const auto x = uniform_features(10, 3, 17);
  const auto f = fit_forest_classifier(x, std::vector<Scalability>(10, Scalability::ScalesPoorly), cheap(3), 1);
  EXPECT_EQ(feature_importances(f), (std::vector<double>{0, 0, 0}));
}

TEST(Learners, IndependentOfThreadCount) {
  const auto x = uniform_features(80, 6, 18);
  Matrix y(80, 5);
  for (std::size_t r = 0; r < 80; ++r) {
    for (std::size_t o = 0; o < 5; ++o) y.at(r, o) = x.at(r, o) * (1.0 + static_cast<double>(o));
  }
  std::vector<Scalability> labels;
  for (std::size_t r = 0; r < 80; ++r) labels.push_back(x.at(r, 5) > 0.5 ? Scalability::ScalesPoorly : Scalability::ScalesWell);
  set_max_threads(1);
  const auto r1 = fit_boosted_regressor(x, y, cheap(20), 6);
  const auto c1 = fit_forest_classifier(x, labels, cheap(20), 6);
  set_max_threads(4);
  const auto r4 = fit_boosted_regressor(x, y, cheap(20), 6);
  const auto c4 = fit_forest_classifier(x, labels, cheap(20), 6);
  set_max_threads(1);
  EXPECT_EQ(to_json(r1), to_json(r4));
  EXPECT_EQ(to_json(c1), to_json(c4));
}

TEST(Learners, JsonRoundTrip) {
  const auto x = uniform_features(50, 3, 19);
  const auto y = column(x, [](std::span<const double> r) { return std::exp(r[0]) + r[1] / 3.0; });
  const auto r = fit_boosted_regressor(x, y, cheap(15), 7, nullptr, {"out"});
  const auto back = regressor_from_json(to_json(r));
  EXPECT_EQ(back, r);
  EXPECT_EQ(to_json(back), to_json(r));
  std::vector<Scalability> labels;
  for (std::size_t i = 0; i < 50; ++i) labels.push_back(x.at(i, 2) > 0.3 ? Scalability::ScalesWell : Scalability::ScalesPoorly);
  const auto f = fit_forest_classifier(x, labels, cheap(9), 7);
  EXPECT_EQ(forest_from_json(to_json(f)), f);
  EXPECT_THROW(regressor_from_json("{\"format\": \"nope\"}"), ValidationError);
}

TEST(Learners, RejectNonFiniteFeatures) {
  Matrix x(4, 1, 1.0);
  x.at(2, 0) = NAN;
  EXPECT_THROW(fit_boosted_regressor(x, Matrix(4, 1, 1.0), cheap(2), 1), ValidationError);
  EXPECT_THROW(fit_forest_classifier(x, std::vector<Scalability>(4, Scalability::ScalesWell), cheap(2), 1), ValidationError);
}

TEST(Learners, SplitThresholdsFinite) {
  const auto x = uniform_features(100, 4, 20, -1e6, 1e6);
  const auto y = column(x, [](std::span<const double> r) { return std::abs(r[0]) + 1.0; });
  const auto m = fit_boosted_regressor(x, y, cheap(20), 8);
  for (const auto& s : m.chains[0].stages) {
    for (const auto& n : s.tree.nodes) {
      EXPECT_TRUE(std::isfinite(n.threshold));
      EXPECT_TRUE(std::isfinite(n.value));
    }
  }
}
