#include <gtest/gtest.h>

#include "helpers.hpp"

using namespace m3svm;

TEST(Scores, IdentityWeights) {
  LinearModel m(Matrix::Identity(2, 2), Vector::Zero(2));
  Vector x(2);
  x << 2, 3;
  const Vector s = decision_scores(m, x);
  EXPECT_EQ(s(0), 2.0);
  EXPECT_EQ(s(1), 3.0);
  EXPECT_EQ(predict(m, x), 1);
}

TEST(Scores, BiasOnly) {
  Vector b(2);
  b << 1, -1;
  LinearModel m(Matrix::Identity(2, 2), b);
  const Vector s = decision_scores(m, Vector::Zero(2));
  EXPECT_EQ(s(0), 1.0);
  EXPECT_EQ(s(1), -1.0);
}

TEST(Scores, TieGoesToLowestIndex) {
  Vector s(2);
  s << 7, 7;
  EXPECT_EQ(argmax_lowest(s), 0);
  Vector t(3);
  t << 1, 4, 4;
  EXPECT_EQ(argmax_lowest(t), 1);
}

TEST(Scores, WrongDimension) {
  const auto m = LinearModel::zeros(3, 2);
  EXPECT_THROW(decision_scores(m, Vector::Zero(2)), dimension_error);
}

// Adding a common vector to every column and a constant to b changes no prediction.
TEST(Scores, PredictionInvariantUnderCommonShift) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto m = testing_support::random_model(seed, 4, 5);
    const Dataset d = testing_support::random_data(seed + 100, 30, 4, 5);
    LinearModel shifted = m;
    const Vector u = Vector::Random(4);
    shifted.W.colwise() += u;
    shifted.b.array() += 0.37;
    const Matrix a = score_matrix(m, d.features());
    const Matrix b = score_matrix(shifted, d.features());
    for (int i = 0; i < d.n(); ++i) {
      Vector row = b.row(i).transpose().array() - b.row(i).mean();
      Vector ref = a.row(i).transpose().array() - a.row(i).mean();
      EXPECT_LE((row - ref).cwiseAbs().maxCoeff(), 1e-9);
    }
    // Predictions agree unless two scores are within roundoff of each other.
    const auto pa = predict_all(m, d.features());
    const auto pb = predict_all(shifted, d.features());
    for (int i = 0; i < d.n(); ++i) EXPECT_EQ(pa[i], pb[i]);
  }
}

TEST(Margins, ThreeFourFive) {
  Matrix w(2, 2);
  w << 3, 0, 4, 0;
  LinearModel m(w, Vector::Zero(2));
  EXPECT_DOUBLE_EQ(pairwise_margin(m, 0, 1), 0.4);
  EXPECT_DOUBLE_EQ(pairwise_margin(m, 1, 0), 0.4);
}

TEST(Margins, Homogeneity) {
  const auto m = testing_support::random_model(3, 4, 4);
  const double t = 2.5;
  LinearModel scaled(m.W * t, m.b * t);
  const auto a = margin_report(m);
  const auto b = margin_report(scaled);
  for (std::size_t i = 0; i < a.pair_margins.size(); ++i)
    EXPECT_NEAR(b.pair_margins[i].margin, a.pair_margins[i].margin / t, 1e-12);
}

TEST(Margins, MinMatchesBruteForce) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto m = testing_support::random_model(seed, 3, 3);
    double best = 1e300;
    int bk = -1, bl = -1;
    for (int k = 0; k < 3; ++k)
      for (int l = k + 1; l < 3; ++l) {
        double sq = 0.0;
        for (int j = 0; j < 3; ++j) sq += (m.W(j, k) - m.W(j, l)) * (m.W(j, k) - m.W(j, l));
        const double margin = 2.0 / std::sqrt(sq);
        if (margin < best) {
          best = margin;
          bk = k;
          bl = l;
        }
      }
    const auto r = margin_report(m);
    ASSERT_EQ(r.pair_margins.size(), 3u);
    EXPECT_NEAR(r.min_margin, best, 1e-12 * best);
    EXPECT_EQ(r.argmin_k, bk);
    EXPECT_EQ(r.argmin_l, bl);
    for (const auto& pm : r.pair_margins) {
      EXPECT_GT(pm.margin, 0.0);
      EXPECT_LE(r.min_margin, pm.margin);
    }
  }
}

TEST(Margins, IdenticalColumnsNamePair) {
  Matrix w(2, 3);
  w << 1, 2, 2, 0, 1, 1;
  LinearModel m(w, Vector::Zero(3));
  try {
    margin_report(m);
    FAIL();
  } catch (const degenerate_pair_error& e) {
    EXPECT_EQ(e.k(), 1);
    EXPECT_EQ(e.l(), 2);
    EXPECT_NE(std::string(e.what()).find("degenerate pair"), std::string::npos);
  }
}

TEST(Evaluate, PerfectModel) {
  // Class k sits at e_k, the identity model scores it highest.
  Matrix x = Matrix::Identity(3, 3);
  const Dataset d(x, {0, 1, 2}, 3);
  const auto r = evaluate(LinearModel(Matrix::Identity(3, 3), Vector::Zero(3)), d);
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_TRUE(r.confusion.isApprox(Eigen::MatrixXi::Identity(3, 3)));
}

TEST(Evaluate, ConstantPredictor) {
  Matrix x = Matrix::Zero(8, 2);
  const Dataset d(x, {0, 1, 2, 3, 0, 1, 2, 3}, 4);
  Vector b = Vector::Zero(4);
  b(2) = 1.0;
  const auto r = evaluate(LinearModel(Matrix::Zero(2, 4), b), d);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.25);
  EXPECT_EQ(r.confusion.col(2).sum(), 8);
}

TEST(Evaluate, MatchesHandLoop) {
  const auto m = testing_support::random_model(9, 3, 3);
  const Dataset d = testing_support::random_data(10, 6, 3, 3);
  const auto r = evaluate(m, d);
  Eigen::MatrixXi confusion = Eigen::MatrixXi::Zero(3, 3);
  int correct = 0;
  for (int i = 0; i < 6; ++i) {
    int best = 0;
    double best_score = -1e300;
    for (int k = 0; k < 3; ++k) {
      double s = m.b(k);
      for (int j = 0; j < 3; ++j) s += m.W(j, k) * d.features()(i, j);
      if (s > best_score) {
        best_score = s;
        best = k;
      }
    }
    ++confusion(d.label(i), best);
    correct += best == d.label(i);
  }
  EXPECT_EQ(r.n, 6);
  EXPECT_DOUBLE_EQ(r.accuracy, correct / 6.0);
  EXPECT_TRUE(r.confusion == confusion);
}
