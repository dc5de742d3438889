#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "helpers.hpp"

using namespace m3svm;
using testing_support::temp_file;

TEST(LoadCsv, SmallFileWithHeader) {
  const auto path = temp_file("small.csv", "f1,f2,y\n1,2,a\n3,4,b\n5,6,a\n");
  const Dataset d = load_csv(path, std::string("y"));
  EXPECT_EQ(d.n(), 3);
  EXPECT_EQ(d.d(), 2);
  EXPECT_EQ(d.c(), 2);
  EXPECT_EQ(d.labels(), (std::vector<int>{0, 1, 0}));
  EXPECT_EQ(d.class_names(), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(d.features()(2, 1), 6.0);
}

TEST(LoadCsv, LabelByIndexAndFirstAppearanceOrder) {
  const auto path = temp_file("first.csv", "z,1,2\nb,3,4\nz,5,6\n");
  const Dataset d = load_csv(path, 0, false);
  EXPECT_EQ(d.labels(), (std::vector<int>{0, 1, 0}));
  EXPECT_EQ(d.class_names()[0], "z");
  EXPECT_EQ(d.features()(1, 0), 3.0);
}

TEST(LoadCsv, NanCellNamesRowAndColumn) {
  const auto path = temp_file("nan.csv", "f1,f2,y\n1,2,a\n3,NaN,b\n");
  try {
    load_csv(path);
    FAIL() << "expected a parse error";
  } catch (const parse_error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("row 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("column 2"), std::string::npos) << msg;
  }
}

TEST(LoadCsv, SingleClassRejected) {
  const auto path = temp_file("one.csv", "f1,y\n1,a\n2,a\n");
  try {
    load_csv(path);
    FAIL();
  } catch (const error& e) {
    EXPECT_NE(std::string(e.what()).find("fewer than 2 classes"), std::string::npos);
  }
}

TEST(LoadCsv, RaggedRowAndMissingFile) {
  EXPECT_THROW(load_csv(temp_file("ragged.csv", "a,b,y\n1,2,x\n1,y\n")), parse_error);
  EXPECT_THROW(load_csv("/nonexistent/file.csv"), io_error);
}

TEST(LoadLibsvm, DenseExpansion) {
  const auto path = temp_file("small.libsvm", "1 1:2.0 3:1.0\n2 2:5.0\n");
  const Dataset d = load_libsvm(path);
  ASSERT_EQ(d.n(), 2);
  ASSERT_EQ(d.d(), 3);
  Matrix expected(2, 3);
  expected << 2, 0, 1, 0, 5, 0;
  EXPECT_EQ(d.features(), expected);
  EXPECT_EQ(d.labels(), (std::vector<int>{0, 1}));
}

TEST(LoadLibsvm, EmptyFile) {
  try {
    load_libsvm(temp_file("empty.libsvm", ""));
    FAIL();
  } catch (const error& e) {
    EXPECT_NE(std::string(e.what()).find("no samples"), std::string::npos);
  }
}

TEST(LoadLibsvm, IndicesNotAscending) {
  try {
    load_libsvm(temp_file("desc.libsvm", "1 3:1 2:4\n2 1:1\n"));
    FAIL();
  } catch (const error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("indices not ascending"), std::string::npos) << msg;
    EXPECT_NE(msg.find("line 1"), std::string::npos) << msg;
  }
  EXPECT_THROW(load_libsvm(temp_file("dup.libsvm", "1 2:1 2:4\n2 1:1\n")), parse_error);
  EXPECT_THROW(load_libsvm(temp_file("bad.libsvm", "1 2:x\n2 1:1\n")), parse_error);
}

TEST(Csv, RoundTripIsBitExact) {
  const Dataset d = testing_support::random_data(5, 30, 4, 3);
  const auto path = temp_file("roundtrip.csv", "");
  write_csv(d, path);
  const Dataset back = load_csv(path);
  EXPECT_EQ(back.features(), d.features());
  EXPECT_EQ(back.labels(), d.labels());
}

TEST(Standardizer, Examples) {
  Matrix x(2, 1);
  x << 1, 3;
  const Dataset d(x, {0, 1}, 2);
  const auto stats = fit_standardizer(d);
  EXPECT_DOUBLE_EQ(stats.mean(0), 2.0);
  EXPECT_DOUBLE_EQ(stats.std(0), 1.0);
  const Dataset z = apply_standardizer(stats, d);
  EXPECT_DOUBLE_EQ(z.features()(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(z.features()(1, 0), 1.0);

  Matrix c(3, 1);
  c << 5, 5, 5;
  const Dataset constant(c, {0, 1, 0}, 2);
  const auto cs = fit_standardizer(constant);
  EXPECT_EQ(cs.std(0), 1.0);
  EXPECT_TRUE(apply_standardizer(cs, constant).features().isZero());

  const auto three = fit_standardizer(testing_support::random_data(1, 10, 3, 2));
  EXPECT_THROW(apply_standardizer(three, testing_support::random_data(1, 10, 2, 2)), dimension_error);
}

TEST(Standardizer, FitDataHasZeroMeanUnitStd) {
  const Dataset d = testing_support::random_data(11, 40, 5, 3);
  Matrix x = d.features();
  x.col(1) = 7.0 * x.col(1).array() + 100.0;
  const Dataset shifted = d.with_features(x);
  const Dataset z = apply_standardizer(fit_standardizer(shifted), shifted);
  for (int j = 0; j < z.d(); ++j) {
    const double mean = z.features().col(j).mean();
    const double sd = std::sqrt((z.features().col(j).array() - mean).square().mean());
    EXPECT_NEAR(mean, 0.0, 1e-9);
    EXPECT_NEAR(sd, 1.0, 1e-9);
  }
}

TEST(Standardizer, InverseRecoversInput) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Dataset d = testing_support::random_data(seed, 25, 6, 3);
    Matrix x = d.features();
    x = (x.array() * 50.0 + 3.0).matrix();
    const Dataset scaled = d.with_features(x);
    const auto stats = fit_standardizer(scaled);
    const Dataset back = invert_standardizer(stats, apply_standardizer(stats, scaled));
    const double rel = (back.features() - x).cwiseAbs().maxCoeff() / x.cwiseAbs().maxCoeff();
    EXPECT_LE(rel, 1e-12);
  }
}

TEST(Folds, BalancedExample) {
  Matrix x = Matrix::Zero(10, 1);
  std::vector<int> y{0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
  const Dataset d(x, y, 2);
  const FoldPlan plan = make_folds(d, 5, 42);
  for (int f = 0; f < 5; ++f) {
    const auto test = plan.test_indices(f);
    ASSERT_EQ(test.size(), 2u);
    EXPECT_NE(y[test[0]], y[test[1]]);
  }
  EXPECT_EQ(make_folds(d, 5, 42).assignment, plan.assignment);
  EXPECT_THROW(make_folds(d, 11, 0), config_error);
  EXPECT_THROW(make_folds(d, 1, 0), config_error);
}

// Partition, stratification and size balance over random datasets.
TEST(Folds, PartitionProperty) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int c = std::uniform_int_distribution<int>(2, 5)(rng);
    const int n = std::uniform_int_distribution<int>(c, 60)(rng);
    const int k = std::uniform_int_distribution<int>(2, n)(rng);
    const Dataset d = testing_support::random_data(rng(), n, 2, c);
    const FoldPlan plan = make_folds(d, k, rng());
    std::vector<int> seen;
    std::vector<int> sizes;
    for (int f = 0; f < k; ++f) {
      const auto t = plan.test_indices(f);
      seen.insert(seen.end(), t.begin(), t.end());
      sizes.push_back(static_cast<int>(t.size()));
      const auto tr = plan.train_indices(f);
      EXPECT_EQ(t.size() + tr.size(), static_cast<std::size_t>(n));
    }
    std::sort(seen.begin(), seen.end());
    for (int i = 0; i < n; ++i) ASSERT_EQ(seen[i], i);
    EXPECT_LE(*std::max_element(sizes.begin(), sizes.end()) -
                  *std::min_element(sizes.begin(), sizes.end()), 1);
    for (int cls = 0; cls < c; ++cls) {
      std::vector<int> per(k, 0);
      for (int i = 0; i < n; ++i)
        if (d.label(i) == cls) ++per[plan.assignment[i]];
      EXPECT_LE(*std::max_element(per.begin(), per.end()) - *std::min_element(per.begin(), per.end()), 1);
    }
  }
}

TEST(BundledData, FixturesLoad) {
  const Dataset glass = load_csv(testing_support::data_path("glass.csv"), std::string("type"));
  EXPECT_EQ(glass.n(), 214);
  EXPECT_EQ(glass.d(), 9);
  EXPECT_EQ(glass.c(), 6);
  const Dataset vehicle = load_csv(testing_support::data_path("vehicle.csv"));
  EXPECT_EQ(vehicle.n(), 846);
  EXPECT_EQ(vehicle.d(), 18);
  EXPECT_EQ(vehicle.c(), 4);
  const Dataset iris = load_csv(testing_support::data_path("iris.csv"));
  EXPECT_EQ(iris.n(), 150);
  EXPECT_EQ(iris.c(), 3);
}
